use super::fate::{follow, Fate, Followed};
use super::{BoundaryRegion, GccConfig, GccError};
use crate::geometry::CurveId;
use crate::rays::{InterfaceStop, Medium, RayContext};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gamma2Result {
    pub region: BoundaryRegion,
    /// `iterates[k]` is the k-th iterate, starting from the empty set.
    #[serde(skip)]
    pub iterates: Vec<BoundaryRegion>,
    pub iterations: usize,
    pub converged: bool,
    pub budget_exhausted: bool,
    /// Share of phase samples lost to grazing flights.
    pub glancing_fraction: f64,
    /// Largest number of reflections used by any sampled ray.
    pub max_event_count: usize,
}

/// Cached fates of the rays leaving one interface phase sample.
#[derive(Debug, Clone, Copy)]
struct Sample {
    /// Ray into the slow side.
    l1: Fate,
    /// Transmitted partner into the fast side, when hyperbolic there.
    l2: Option<Fate>,
    glancing: bool,
}

fn clean(f: Fate, prev: &BoundaryRegion) -> bool {
    match f {
        Fate::Observed | Fate::ObservedBoundary => true,
        Fate::Interface { s } => prev.contains(s),
        Fate::Unresolved { .. } => false,
    }
}

/// Pairwise propagation between the four rays meeting at one phase point. `p1`, `m1` are the
/// slow-side rays of the pair, `p2`, `m2` the fast-side ones. Returns whether all are clean.
fn closure(mut p1: bool, mut m1: bool, mut p2: bool, mut m2: bool) -> bool {
    loop {
        let before = (p1, m1, p2, m2);
        for _ in 0..2 {
            if m1 && (p1 || p2) {
                m2 = true;
            }
            if m2 && (p1 || p2) {
                m1 = true;
            }
            if m1 && m2 {
                p1 = true;
                p2 = true;
            }
            if p1 && p2 {
                m1 = true;
                m2 = true;
            }
            std::mem::swap(&mut p1, &mut m1);
            std::mem::swap(&mut p2, &mut m2);
        }
        if (p1, m1, p2, m2) == before {
            return p1 && m1 && p2 && m2;
        }
    }
}

fn resolved(samples: &[Sample], j: usize, prev: &BoundaryRegion) -> bool {
    let jm = samples.len() - 1 - j;
    let (a, b) = (samples[j], samples[jm]);
    if a.glancing || b.glancing {
        return false;
    }
    let p1 = clean(a.l1, prev);
    let m1 = clean(b.l1, prev);
    match (a.l2, b.l2) {
        (Some(f2), Some(g2)) => closure(p1, m1, clean(f2, prev), clean(g2, prev)),
        _ => p1 || m1,
    }
}

/// Fixed-point construction of the observed part of the interface.
pub fn construct_gamma2(
    ctx: &RayContext,
    gamma1: &BoundaryRegion,
    cfg: &GccConfig,
) -> Result<Gamma2Result, GccError> {
    let (k1, k2) = (ctx.geom.k1(), ctx.geom.k2());
    if k2 <= k1 {
        return Err(GccError::SpeedOrdering { k1, k2 });
    }
    let n = cfg.boundary_samples;
    let na = cfg.angle_samples;
    let empty = BoundaryRegion::empty(CurveId::Inner, n);
    if gamma1.is_empty() && ctx.geom.b_max() <= 0.0 {
        return Ok(Gamma2Result {
            region: empty.clone(),
            iterates: vec![empty],
            iterations: 0,
            converged: true,
            budget_exhausted: false,
            glancing_fraction: 0.0,
            max_event_count: 0,
        });
    }
    let inner = ctx.geom.inner();
    let t_max = 3.0 * ctx.geom.diameter() / ctx.min_speed() * (cfg.max_events as f64 + 2.0);
    let run = |p, stop, g1| -> Result<Followed, GccError> {
        Ok(follow(ctx, &p, cfg.max_events, t_max, stop, g1)?)
    };
    let table: Vec<(Vec<Sample>, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let s = BoundaryRegion::cell_center(n, i);
            let x = inner.point(s);
            // Normal pointing into the slow side.
            let nn = inner.normal(s);
            let t = inner.tangent(s);
            let ratio = (ctx.speed2(x, Medium::Omega2) / ctx.speed2(x, Medium::Omega1)).sqrt();
            let mut out = Vec::with_capacity(na);
            let mut events = 0;
            for j in 0..na {
                let th = -PI / 2.0 + (j as f64 + 0.5) * PI / na as f64;
                let d1 = nn * th.cos() + t * th.sin();
                let p1 = ctx.phase_point(x, d1, 0.0, Medium::Omega1);
                let f1 = run(p1, InterfaceStop::Transmissible, Some(gamma1))?;
                events = events.max(f1.events);
                let sp = th.sin() * ratio;
                let glancing = (1.0 - sp.abs()).abs() < ctx.opts.classify_tol
                    || matches!(f1.fate, Fate::Unresolved { glancing: true });
                let l2 = if sp.abs() < 1.0 && !glancing {
                    let psi = sp.asin();
                    let d2 = -nn * psi.cos() + t * psi.sin();
                    let p2 = ctx.phase_point(x, d2, 0.0, Medium::Omega2);
                    let f2 = run(p2, InterfaceStop::Transmissible, None)?;
                    events = events.max(f2.events);
                    Some(f2.fate)
                } else {
                    None
                };
                let glancing = glancing || matches!(l2, Some(Fate::Unresolved { glancing: true }));
                out.push(Sample {
                    l1: f1.fate,
                    l2,
                    glancing,
                });
            }
            Ok((out, events))
        })
        .collect::<Result<_, GccError>>()?;

    let glancing = table
        .iter()
        .flat_map(|(v, _)| v.iter())
        .filter(|s| s.glancing)
        .count();
    let max_event_count = table.iter().map(|(_, e)| *e).max().unwrap_or(0);

    let mut iterates = vec![empty];
    let mut converged = false;
    while iterates.len() <= cfg.max_iterations {
        let prev = iterates.last().expect("nonempty");
        let mask: Vec<bool> = table
            .par_iter()
            .map(|(samples, _)| (0..na).all(|j| resolved(samples, j, prev)))
            .collect();
        let next = BoundaryRegion::from_mask(CurveId::Inner, mask);
        let stable = next == *prev;
        iterates.push(next);
        if stable {
            converged = true;
            break;
        }
    }
    Ok(Gamma2Result {
        region: iterates.last().expect("nonempty").clone(),
        iterations: iterates.len() - 1,
        iterates,
        converged,
        budget_exhausted: !converged,
        glancing_fraction: glancing as f64 / (n * na) as f64,
        max_event_count,
    })
}
