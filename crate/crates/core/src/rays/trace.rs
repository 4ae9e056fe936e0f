use super::{
    flow_segment, outer_reflection, snell_event, BoundaryEvent, BranchPolicy, FlowStop,
    OutgoingKind, PhasePoint, RayContext, RayError, RayTrace, Segment, Termination,
};
use crate::geometry::CurveId;
use serde::{Deserialize, Serialize};

/// When a trace should stop at the interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InterfaceStop {
    #[default]
    Never,
    /// Any transversal hit.
    Any,
    /// Hits that transmit into the other medium; total reflections continue.
    Transmissible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub max_time: f64,
    pub max_events: usize,
    #[serde(default)]
    pub interface_stop: InterfaceStop,
}

enum Step {
    Done(Segment, Option<BoundaryEvent>, Termination),
    Event(Segment, BoundaryEvent),
}

fn advance(
    ctx: &RayContext,
    p: &PhasePoint,
    t_end: f64,
    events_used: usize,
    budget: &Budget,
) -> Result<Step, RayError> {
    let res = flow_segment(ctx, p, t_end - p.t);
    let seg = res.segment;
    let (curve, s) = match res.stop {
        FlowStop::TimeBudget => return Ok(Step::Done(seg, None, Termination::TimeBudget)),
        FlowStop::Observed => return Ok(Step::Done(seg, None, Termination::EnteredSuppB)),
        FlowStop::Boundary { curve, s } => (curve, s),
    };
    let end = seg.end;
    let ev = match curve {
        CurveId::Outer => outer_reflection(ctx, &end, s)?,
        CurveId::Inner => snell_event(ctx, &end, s)?,
    };
    if ev.glancing {
        return Ok(Step::Done(seg, Some(ev), Termination::GlancingUnresolved));
    }
    if curve == CurveId::Inner {
        let stop = match budget.interface_stop {
            InterfaceStop::Never => false,
            InterfaceStop::Any => true,
            InterfaceStop::Transmissible => ev.find(OutgoingKind::Transmitted).is_some(),
        };
        if stop {
            return Ok(Step::Done(seg, Some(ev), Termination::ReachedInterface));
        }
    }
    if events_used >= budget.max_events {
        return Ok(Step::Done(seg, None, Termination::EventBudget));
    }
    Ok(Step::Event(seg, ev))
}

fn pick(ev: &BoundaryEvent, policy: BranchPolicy) -> Option<PhasePoint> {
    let kind = match policy {
        BranchPolicy::Transmit if ev.find(OutgoingKind::Transmitted).is_some() => {
            OutgoingKind::Transmitted
        }
        _ => OutgoingKind::Reflected,
    };
    ev.find(kind).map(|o| o.point)
}

/// Traces one bicharacteristic, choosing the reflected or transmitted branch per `policy`.
/// With [`BranchPolicy::Tree`] the first path of [`trace_tree`] is returned.
pub fn trace_ray(
    ctx: &RayContext,
    p0: &PhasePoint,
    budget: &Budget,
    policy: BranchPolicy,
) -> Result<RayTrace, RayError> {
    if policy == BranchPolicy::Tree {
        return Ok(trace_tree(ctx, p0, budget, 1)?.remove(0));
    }
    ctx.check_characteristic(p0)?;
    let t_end = p0.t + budget.max_time;
    let mut segments = Vec::new();
    let mut events = Vec::new();
    let mut p = *p0;
    loop {
        match advance(ctx, &p, t_end, events.len(), budget)? {
            Step::Done(seg, ev, term) => {
                segments.push(seg);
                events.extend(ev);
                return Ok(RayTrace {
                    segments,
                    events,
                    terminated: term,
                });
            }
            Step::Event(seg, ev) => {
                segments.push(seg);
                p = pick(&ev, policy).expect("reflection always exists");
                events.push(ev);
            }
        }
    }
}

/// Traces every reflected/transmitted branch. Returns one trace per leaf, at most `max_leaves`;
/// once the cap is reached the remaining branches are followed by reflection only.
pub fn trace_tree(
    ctx: &RayContext,
    p0: &PhasePoint,
    budget: &Budget,
    max_leaves: usize,
) -> Result<Vec<RayTrace>, RayError> {
    ctx.check_characteristic(p0)?;
    let t_end = p0.t + budget.max_time;
    let mut out = Vec::new();
    let mut stack = vec![(*p0, Vec::<Segment>::new(), Vec::<BoundaryEvent>::new())];
    while let Some((p, segments, events)) = stack.pop() {
        let (mut p, mut segments, mut events) = (p, segments, events);
        loop {
            match advance(ctx, &p, t_end, events.len(), budget)? {
                Step::Done(seg, ev, term) => {
                    segments.push(seg);
                    events.extend(ev);
                    out.push(RayTrace {
                        segments,
                        events,
                        terminated: term,
                    });
                    break;
                }
                Step::Event(seg, ev) => {
                    segments.push(seg);
                    let refl = ev.find(OutgoingKind::Reflected).map(|o| o.point);
                    let trans = ev.find(OutgoingKind::Transmitted).map(|o| o.point);
                    events.push(ev);
                    if let Some(t) = trans {
                        if out.len() + stack.len() + 1 < max_leaves {
                            stack.push((t, segments.clone(), events.clone()));
                        }
                    }
                    p = refl.expect("reflection always exists");
                }
            }
        }
    }
    Ok(out)
}
