//! Observability geometry: the observed outer arc, the star-shaped test, the weak control
//! condition, the observed interface set and the escaping-geometry test.

mod billiard;
mod fate;
mod gamma;
mod gamma2;
mod region;

pub use billiard::{
    build_omega1f_and_check_ueg, collision_map, escaping_map, Collision, Omega1F, UegResult,
    UegVerdict,
};
pub use gamma::{
    check_weak_gcc, check_x0, compute_gamma1, gamma_of_x0, x0_candidates, WeakGccResult,
    WeakGccWitness, X0Result,
};
pub use gamma2::{construct_gamma2, Gamma2Result};
pub use region::BoundaryRegion;

use crate::geometry::{ConvexityReport, CurveId, Geometry};
use crate::kernel::{check_compat, KernelGeometryCompat, MemoryKernel};
use crate::rays::{RayContext, RayError, RayOptions};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, thiserror::Error)]
pub enum GccError {
    #[error("interface construction needs k2 > k1, got k1 = {k1}, k2 = {k2}")]
    SpeedOrdering { k1: f64, k2: f64 },
    #[error(transparent)]
    Ray(#[from] RayError),
}

/// Sampling densities and budgets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GccConfig {
    pub boundary_samples: usize,
    pub angle_samples: usize,
    /// Reflections allowed per ray.
    pub max_events: usize,
    /// Outer reflections allowed for the inward-normal rays.
    pub gamma1_reflections: usize,
    pub max_iterations: usize,
    /// Side of the candidate grid for the star-shaped test.
    pub x0_grid: usize,
    pub ueg_samples: usize,
    pub rays: RayOptions,
}

impl Default for GccConfig {
    fn default() -> Self {
        Self {
            boundary_samples: 512,
            angle_samples: 128,
            max_events: 64,
            gamma1_reflections: 0,
            max_iterations: 32,
            x0_grid: 64,
            ueg_samples: 512,
            rays: RayOptions::default(),
        }
    }
}

impl GccConfig {
    /// Same budgets with every sampling density doubled.
    pub fn refined(&self) -> Self {
        Self {
            boundary_samples: 2 * self.boundary_samples,
            angle_samples: 2 * self.angle_samples,
            x0_grid: 2 * self.x0_grid,
            ueg_samples: 2 * self.ueg_samples,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GccReport {
    pub convexity: ConvexityReport,
    pub kernel: KernelGeometryCompat,
    pub delta_sep: Option<f64>,
    pub gamma1: Option<BoundaryRegion>,
    pub x0: Option<X0Result>,
    pub x0_witness: Option<crate::geometry::Vec2>,
    pub weak_gcc: Option<WeakGccResult>,
    pub weak_gcc_ok: Option<bool>,
    pub gamma2: Option<Gamma2Result>,
    pub ueg: Option<UegResult>,
    pub ueg_verdict: Option<UegVerdict>,
    /// Largest reflection count over the sampled interface rays.
    pub max_event_count: Option<usize>,
    pub hypotheses: Vec<Hypothesis>,
    pub hypotheses_satisfied: bool,
}

impl GccReport {
    pub fn hypothesis(&self, name: &str) -> Option<&Hypothesis> {
        self.hypotheses.iter().find(|h| h.name == name)
    }
}

fn hyp(name: &str, passed: bool, detail: impl Into<String>) -> Hypothesis {
    Hypothesis {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

/// Runs the whole pipeline. Speed ordering and kernel admissibility are checked before any
/// ray is traced; the interface construction only runs when the star-shaped test and the weak
/// control condition pass.
pub fn full_report(
    geom: &Geometry,
    kernel: &MemoryKernel,
    cfg: &GccConfig,
) -> Result<GccReport, GccError> {
    let convexity = geom.convexity();
    let compat = check_compat(kernel, geom);
    let mut report = GccReport {
        convexity,
        kernel: compat.clone(),
        delta_sep: geom.delta_sep(),
        gamma1: None,
        x0: None,
        x0_witness: None,
        weak_gcc: None,
        weak_gcc_ok: None,
        gamma2: None,
        ueg: None,
        ueg_verdict: None,
        max_event_count: None,
        hypotheses: Vec::new(),
        hypotheses_satisfied: false,
    };
    let (k1, k2) = (geom.k1(), geom.k2());
    let ordered = k2 > k1;
    report.hypotheses.push(hyp(
        "speed_ordering",
        ordered,
        format!("k1 = {k1}, k2 = {k2}"),
    ));
    let kernel_ok = compat.valid && compat.contraction_bound < 1.0;
    report.hypotheses.push(hyp(
        "kernel",
        kernel_ok,
        format!("l = {:.6}; {}", compat.l, compat.diagnostics.join("; ")),
    ));
    report.hypotheses.push(hyp(
        "convexity",
        convexity.both_strictly_convex(),
        format!(
            "min curvature outer {:.3e}, inner {:.3e}",
            convexity.outer_min_curvature, convexity.inner_min_curvature
        ),
    ));
    if !ordered || !kernel_ok {
        return Ok(report);
    }

    let ctx = RayContext::new(geom, kernel).with_options(cfg.rays);
    let gamma1 = compute_gamma1(&ctx, cfg.boundary_samples, cfg.gamma1_reflections)?;
    let x0 = check_x0(geom, &gamma1, &x0_candidates(geom, cfg.x0_grid));
    report.hypotheses.push(hyp(
        "x0",
        x0.witness.is_some(),
        format!("{} mismatched cells at best candidate", x0.mismatches),
    ));
    let weak = check_weak_gcc(&ctx, &gamma1, cfg)?;
    report.hypotheses.push(hyp(
        "weak_gcc",
        weak.ok,
        format!("{} of {} samples uncaught", weak.failures, weak.samples),
    ));
    report.x0_witness = x0.witness;
    report.weak_gcc_ok = Some(weak.ok);
    let go_on = x0.witness.is_some() && weak.ok;
    report.x0 = Some(x0);
    report.weak_gcc = Some(weak);
    if go_on {
        let g2 = construct_gamma2(&ctx, &gamma1, cfg)?;
        let ueg = build_omega1f_and_check_ueg(
            geom,
            &gamma1,
            &g2.region,
            cfg.ueg_samples,
            cfg.rays.glancing_tol,
        );
        report.hypotheses.push(hyp(
            "ueg",
            ueg.verdict.passed(),
            format!(
                "interface observed fraction {:.4}, iterations {}, converged {}",
                g2.region.measure(),
                g2.iterations,
                g2.converged
            ),
        ));
        report.max_event_count = Some(g2.max_event_count);
        report.ueg_verdict = Some(ueg.verdict.clone());
        report.gamma2 = Some(g2);
        report.ueg = Some(ueg);
    }
    report.gamma1 = Some(gamma1);
    let required = ["speed_ordering", "kernel", "convexity", "x0", "weak_gcc", "ueg"];
    report.hypotheses_satisfied = required
        .iter()
        .all(|n| report.hypothesis(n).is_some_and(|h| h.passed));
    Ok(report)
}

/// Plot-ready arcs: one row per interval with parameter and Cartesian endpoints.
pub fn regions_to_csv(geom: &Geometry, regions: &[(&str, &BoundaryRegion)]) -> String {
    let mut out = String::from("label,curve,s_start,s_end,x_start,y_start,x_end,y_end\n");
    for (label, r) in regions {
        let c = geom.curve(r.curve());
        let id = match r.curve() {
            CurveId::Outer => "outer",
            CurveId::Inner => "inner",
        };
        for (a, b) in r.intervals() {
            let (p, q) = (c.point(a), c.point(b));
            let _ = writeln!(
                out,
                "{label},{id},{a},{b},{},{},{},{}",
                p.x, p.y, q.x, q.y
            );
        }
    }
    out
}
