//! Generalized bicharacteristics of the transmission problem.
//!
//! Phase points carry `(x, t, xi, tau)` with `tau = -1` throughout. In the damped
//! region the speed is `k1 (1 - k0 b)`, elsewhere it is `k1` or `k2`.

mod events;
mod export;
mod flow;
mod trace;

pub use events::{classify_interface_pair, critical_angle, outer_reflection, snell_event, InterfacePair};
pub use export::{traces_to_csv, traces_to_jsonl};
pub use flow::{flow_segment, FlowResult, FlowStop};
pub use trace::{trace_ray, trace_tree, Budget, InterfaceStop};

use crate::geometry::{CurveId, Geometry, Vec2};
use crate::kernel::MemoryKernel;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Fixed time covariable.
pub const TAU: f64 = -1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RayError {
    #[error("phase point is not on the characteristic set (relative residual {0:.3e})")]
    NonCharacteristicInput(f64),
    #[error("tau must be nonzero")]
    ZeroTau,
    #[error("point is not on the interface (distance {0:.3e})")]
    NotOnInterface(f64),
    #[error("point is not on the outer boundary (distance {0:.3e})")]
    NotOnOuter(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Medium {
    Omega1,
    Omega2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: Vec2,
    pub t: f64,
    pub xi: Vec2,
    pub tau: f64,
    pub medium: Medium,
}

impl PhasePoint {
    /// Unit direction of motion.
    pub fn direction(&self) -> Vec2 {
        self.xi.normalized()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayOptions {
    /// Level `eps_b = level_fraction * max b` defining the observed set.
    pub level_fraction: f64,
    /// Minimal transversality of an observed crossing, radians.
    pub min_crossing_angle: f64,
    /// Minimal dwell inside the observed set, as a fraction of the domain diameter.
    pub dwell_fraction: f64,
    /// Hits closer than this to tangential, radians, are glancing.
    pub glancing_tol: f64,
    /// Relative tolerance separating hyperbolic, glancing and elliptic points.
    pub classify_tol: f64,
    /// Local error tolerance of the adaptive integrator.
    pub rk_tol: f64,
    /// Stop as soon as the ray is observed by the damping.
    pub observe: bool,
    pub max_rk_steps: usize,
}

impl Default for RayOptions {
    fn default() -> Self {
        Self {
            level_fraction: 1e-3,
            min_crossing_angle: 1f64.to_radians(),
            dwell_fraction: 1e-3,
            glancing_tol: 1e-8,
            classify_tol: 1e-9,
            rk_tol: 1e-11,
            observe: true,
            max_rk_steps: 2_000_000,
        }
    }
}

/// Everything a ray needs to know about the medium.
#[derive(Debug, Clone, Copy)]
pub struct RayContext<'a> {
    pub geom: &'a Geometry,
    pub k0: f64,
    pub opts: RayOptions,
}

impl<'a> RayContext<'a> {
    pub fn new(geom: &'a Geometry, kernel: &MemoryKernel) -> Self {
        Self {
            geom,
            k0: kernel.k0(),
            opts: RayOptions::default(),
        }
    }

    pub fn with_options(mut self, opts: RayOptions) -> Self {
        self.opts = opts;
        self
    }

    pub fn speed2(&self, x: Vec2, m: Medium) -> f64 {
        match m {
            Medium::Omega1 => self.geom.k1() * (1.0 - self.k0 * self.geom.b(x)),
            Medium::Omega2 => self.geom.k2(),
        }
    }

    pub fn grad_speed2(&self, x: Vec2, m: Medium) -> Vec2 {
        match m {
            Medium::Omega1 => self.geom.grad_b(x) * (-self.geom.k1() * self.k0),
            Medium::Omega2 => Vec2::ZERO,
        }
    }

    /// Principal symbol `tau^2 - c |xi|^2` at a phase point.
    pub fn hamiltonian(&self, p: &PhasePoint) -> f64 {
        p.tau * p.tau - self.speed2(p.x, p.medium) * p.xi.norm2()
    }

    pub fn level(&self) -> f64 {
        self.opts.level_fraction * self.geom.b_max()
    }

    pub fn observed_at(&self, x: Vec2, m: Medium) -> bool {
        m == Medium::Omega1 && self.geom.b_max() > 0.0 && self.geom.b(x) >= self.level()
    }

    /// Phase point on the characteristic set moving in direction `dir`.
    pub fn phase_point(&self, x: Vec2, dir: Vec2, t: f64, medium: Medium) -> PhasePoint {
        let c = self.speed2(x, medium);
        PhasePoint {
            x,
            t,
            xi: dir.normalized() * (TAU.abs() / c.sqrt()),
            tau: TAU,
            medium,
        }
    }

    pub fn check_characteristic(&self, p: &PhasePoint) -> Result<(), RayError> {
        if p.tau == 0.0 {
            return Err(RayError::ZeroTau);
        }
        let r = self.hamiltonian(p).abs() / (p.tau * p.tau);
        if r > 1e-9 {
            return Err(RayError::NonCharacteristicInput(r));
        }
        Ok(())
    }

    /// Minimum of the wave speed over the domain.
    pub fn min_speed(&self) -> f64 {
        let c1 = self.geom.k1() * (1.0 - self.k0 * self.geom.b_max());
        c1.min(self.geom.k1()).min(self.geom.k2()).max(1e-12).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseClass {
    Hyperbolic,
    Glancing,
    Elliptic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutgoingKind {
    Reflected,
    Transmitted,
    Gliding,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outgoing {
    pub kind: OutgoingKind,
    pub point: PhasePoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEvent {
    pub curve: CurveId,
    pub s: f64,
    pub x: Vec2,
    pub t: f64,
    /// Angle between the incoming direction and the normal.
    pub incidence_angle: f64,
    pub incoming: PhasePoint,
    pub incoming_class: PhaseClass,
    /// Class on the far side of the interface, `None` at the outer boundary.
    pub far_class: Option<PhaseClass>,
    pub outgoing: Vec<Outgoing>,
    pub glancing: bool,
}

impl BoundaryEvent {
    pub fn find(&self, kind: OutgoingKind) -> Option<&Outgoing> {
        self.outgoing.iter().find(|o| o.kind == kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcPoint {
    pub x: Vec2,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: PhasePoint,
    pub end: PhasePoint,
    pub arc: Vec<ArcPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    TimeBudget,
    EnteredSuppB,
    GlancingUnresolved,
    EventBudget,
    ReachedInterface,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BranchPolicy {
    #[default]
    Reflect,
    Transmit,
    Tree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayTrace {
    pub segments: Vec<Segment>,
    pub events: Vec<BoundaryEvent>,
    pub terminated: Termination,
}

impl RayTrace {
    pub fn start(&self) -> &PhasePoint {
        &self.segments[0].start
    }

    pub fn end(&self) -> &PhasePoint {
        &self.segments.last().expect("trace has a segment").end
    }

    pub fn last_event(&self) -> Option<&BoundaryEvent> {
        self.events.last()
    }
}
