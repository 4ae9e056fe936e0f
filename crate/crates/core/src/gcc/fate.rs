use super::BoundaryRegion;
use crate::geometry::CurveId;
use crate::rays::{
    flow_segment, outer_reflection, snell_event, FlowStop, InterfaceStop, OutgoingKind, PhasePoint,
    RayContext, RayError,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Fate {
    /// Caught by the damping.
    Observed,
    /// Reached the outer boundary inside the observed region.
    ObservedBoundary,
    /// Stopped at the interface at parameter `s`.
    Interface { s: f64 },
    Unresolved { glancing: bool },
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Followed {
    pub fate: Fate,
    pub events: usize,
}

/// Follows a reflect-only ray until it is caught, stops at the interface, or runs out of budget.
/// TIR at the interface continues unless `stop` is [`InterfaceStop::Any`].
pub(crate) fn follow(
    ctx: &RayContext,
    p0: &PhasePoint,
    max_events: usize,
    max_time: f64,
    stop: InterfaceStop,
    gamma1: Option<&BoundaryRegion>,
) -> Result<Followed, RayError> {
    let t_end = p0.t + max_time;
    let mut p = *p0;
    let mut events = 0;
    let done = |fate, events| Ok(Followed { fate, events });
    loop {
        let res = flow_segment(ctx, &p, t_end - p.t);
        let end = res.segment.end;
        let (curve, s) = match res.stop {
            FlowStop::Observed => return done(Fate::Observed, events),
            FlowStop::TimeBudget => return done(Fate::Unresolved { glancing: false }, events),
            FlowStop::Boundary { curve, s } => (curve, s),
        };
        let ev = match curve {
            CurveId::Outer => {
                if gamma1.is_some_and(|g| g.contains(s)) {
                    return done(Fate::ObservedBoundary, events);
                }
                outer_reflection(ctx, &end, s)?
            }
            CurveId::Inner => snell_event(ctx, &end, s)?,
        };
        if ev.glancing {
            return done(Fate::Unresolved { glancing: true }, events);
        }
        if curve == CurveId::Inner {
            let halt = match stop {
                InterfaceStop::Never => false,
                InterfaceStop::Any => true,
                InterfaceStop::Transmissible => ev.find(OutgoingKind::Transmitted).is_some(),
            };
            if halt {
                return done(Fate::Interface { s }, events);
            }
            if ev.find(OutgoingKind::Gliding).is_some() {
                return done(Fate::Unresolved { glancing: true }, events);
            }
        }
        if events >= max_events {
            return done(Fate::Unresolved { glancing: false }, events);
        }
        events += 1;
        p = ev.find(OutgoingKind::Reflected).expect("reflection exists").point;
    }
}
