use super::fate::{follow, Fate};
use super::{BoundaryRegion, GccConfig, GccError};
use crate::geometry::{CurveId, Geometry, Vec2};
use crate::rays::{trace_ray, Budget, BranchPolicy, InterfaceStop, Medium, RayContext, RayTrace};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, TAU};

fn flight_time(ctx: &RayContext, events: usize) -> f64 {
    3.0 * ctx.geom.diameter() / ctx.min_speed() * (events as f64 + 1.0)
}

/// Points of the outer boundary whose inward normal ray is caught by the damping before
/// crossing the interface, allowing `reflections` outer reflections.
pub fn compute_gamma1(
    ctx: &RayContext,
    n_samples: usize,
    reflections: usize,
) -> Result<BoundaryRegion, GccError> {
    if ctx.geom.b_max() <= 0.0 {
        return Ok(BoundaryRegion::empty(CurveId::Outer, n_samples));
    }
    let outer = ctx.geom.outer();
    let t_max = flight_time(ctx, reflections);
    let mask = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let s = BoundaryRegion::cell_center(n_samples, i);
            let p = ctx.phase_point(outer.point(s), -outer.normal(s), 0.0, Medium::Omega1);
            let f = follow(ctx, &p, reflections, t_max, InterfaceStop::Any, None)?;
            Ok(f.fate == Fate::Observed)
        })
        .collect::<Result<Vec<bool>, GccError>>()?;
    Ok(BoundaryRegion::from_mask(CurveId::Outer, mask))
}

/// `{x in outer boundary : <x - x0, n(x)> > 0}` on `n` cells.
pub fn gamma_of_x0(geom: &Geometry, x0: Vec2, n: usize) -> BoundaryRegion {
    let outer = geom.outer();
    let mask = (0..n)
        .map(|i| {
            let s = BoundaryRegion::cell_center(n, i);
            (outer.point(s) - x0).dot(outer.normal(s)) > 0.0
        })
        .collect();
    BoundaryRegion::from_mask(CurveId::Outer, mask)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct X0Result {
    pub witness: Option<Vec2>,
    pub best: Vec2,
    /// Number of mismatched cells at the best candidate.
    pub mismatches: usize,
    pub tolerance: usize,
    pub candidates: usize,
}

/// Candidate points: a grid over the enlarged bounding box plus rings reaching far away.
pub fn x0_candidates(geom: &Geometry, grid: usize) -> Vec<Vec2> {
    let (lo, hi) = geom.outer().bbox();
    let c = (lo + hi) * 0.5;
    let half = (hi - lo) * 0.625;
    let mut out = vec![c];
    let g = grid.max(2);
    for i in 0..g {
        for j in 0..g {
            let u = -1.0 + 2.0 * i as f64 / (g - 1) as f64;
            let v = -1.0 + 2.0 * j as f64 / (g - 1) as f64;
            out.push(c + Vec2::new(u * half.x, v * half.y));
        }
    }
    let diam = geom.diameter();
    let n_ang = 4 * g;
    for k in -1..=8 {
        let r = diam * 2f64.powi(k);
        for a in 0..n_ang {
            out.push(c + Vec2::from_angle(TAU * a as f64 / n_ang as f64) * r);
        }
    }
    out
}

/// Searches for `x0` with `Gamma(x0) = gamma1` up to two mismatched cells.
pub fn check_x0(geom: &Geometry, gamma1: &BoundaryRegion, candidates: &[Vec2]) -> X0Result {
    let n = gamma1.n();
    let outer = geom.outer();
    let pts: Vec<(Vec2, Vec2)> = (0..n)
        .map(|i| {
            let s = BoundaryRegion::cell_center(n, i);
            (outer.point(s), outer.normal(s))
        })
        .collect();
    let mask = gamma1.mask();
    let (lo, hi) = outer.bbox();
    let c = (lo + hi) * 0.5;
    let mut best = (usize::MAX, f64::INFINITY, c);
    for &x0 in candidates {
        let mism = pts
            .iter()
            .zip(mask)
            .filter(|((p, nn), &m)| ((*p - x0).dot(*nn) > 0.0) != m)
            .count();
        let d = x0.dist(c);
        if mism < best.0 || (mism == best.0 && d < best.1) {
            best = (mism, d, x0);
        }
    }
    let tolerance = 2;
    X0Result {
        witness: (best.0 <= tolerance).then_some(best.2),
        best: best.2,
        mismatches: best.0,
        tolerance,
        candidates: candidates.len(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakGccWitness {
    pub s: f64,
    pub x: Vec2,
    /// Angle from the inward normal.
    pub angle: f64,
    pub plus: RayTrace,
    pub minus: RayTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakGccResult {
    pub ok: bool,
    pub samples: usize,
    pub failures: usize,
    pub glancing: usize,
    pub counterexample: Option<WeakGccWitness>,
}

/// For every sampled hyperbolic point over `gamma1`, one of the two rays of the reflected pair
/// must be caught by the damping before crossing the interface.
pub fn check_weak_gcc(
    ctx: &RayContext,
    gamma1: &BoundaryRegion,
    cfg: &GccConfig,
) -> Result<WeakGccResult, GccError> {
    let outer = ctx.geom.outer();
    let na = cfg.angle_samples;
    let t_max = flight_time(ctx, cfg.max_events);
    let cells: Vec<usize> = (0..gamma1.n()).filter(|&i| gamma1.mask()[i]).collect();
    let dirs = |s: f64, alpha: f64| {
        let inward = -outer.normal(s);
        let t = outer.tangent(s);
        (
            inward * alpha.cos() + t * alpha.sin(),
            inward * alpha.cos() - t * alpha.sin(),
        )
    };
    let per_cell = cells
        .par_iter()
        .map(|&i| {
            let s = BoundaryRegion::cell_center(gamma1.n(), i);
            let x = outer.point(s);
            let mut fails = Vec::new();
            let mut glancing = 0;
            for j in 0..na {
                let alpha = FRAC_PI_2 * (j as f64 + 0.5) / na as f64;
                let (dp, dm) = dirs(s, alpha);
                let mut caught = false;
                for d in [dp, dm] {
                    let p = ctx.phase_point(x, d, 0.0, Medium::Omega1);
                    let f = follow(ctx, &p, cfg.max_events, t_max, InterfaceStop::Any, None)?;
                    if matches!(f.fate, Fate::Unresolved { glancing: true }) {
                        glancing += 1;
                    }
                    if f.fate == Fate::Observed {
                        caught = true;
                        break;
                    }
                }
                if !caught {
                    fails.push((s, alpha));
                }
            }
            Ok((fails, glancing))
        })
        .collect::<Result<Vec<_>, GccError>>()?;
    let failures: usize = per_cell.iter().map(|(f, _)| f.len()).sum();
    let glancing = per_cell.iter().map(|(_, g)| g).sum();
    let counterexample = match per_cell.iter().find_map(|(f, _)| f.first()) {
        None => None,
        Some(&(s, alpha)) => {
            let x = outer.point(s);
            let (dp, dm) = dirs(s, alpha);
            let budget = Budget {
                max_time: t_max,
                max_events: cfg.max_events,
                interface_stop: InterfaceStop::Any,
            };
            let tr = |d| {
                let p = ctx.phase_point(x, d, 0.0, Medium::Omega1);
                trace_ray(ctx, &p, &budget, BranchPolicy::Reflect)
            };
            Some(WeakGccWitness {
                s,
                x,
                angle: alpha,
                plus: tr(dp)?,
                minus: tr(dm)?,
            })
        }
    };
    Ok(WeakGccResult {
        ok: failures == 0,
        samples: cells.len() * na,
        failures,
        glancing,
        counterexample,
    })
}
