use super::BoundaryRegion;
use crate::geometry::{CurveId, Geometry, Vec2};
use serde::Serialize;

/// One application of the billiard map in the slow region, with the interface as a wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Collision {
    pub curve: CurveId,
    pub s: f64,
    pub x: Vec2,
    /// Unit direction of flight arriving at `x`.
    pub incoming: Vec2,
    /// Unit direction after specular reflection at `x`.
    pub outgoing: Vec2,
    /// Flight length.
    pub length: f64,
    pub glancing: bool,
}

/// Normal of `curve` at `s` pointing out of the slow region.
fn wall_normal(geom: &Geometry, curve: CurveId, s: f64) -> Vec2 {
    match curve {
        CurveId::Outer => geom.outer().normal(s),
        CurveId::Inner => -geom.inner().normal(s),
    }
}

fn reflect(d: Vec2, n: Vec2) -> Vec2 {
    d - n * (2.0 * d.dot(n))
}

/// Flies from the boundary point `(curve, s)` in direction `xi` to the next wall hit.
/// A direction pointing out of the slow region is reflected before departure.
pub fn collision_map(
    geom: &Geometry,
    curve: CurveId,
    s: f64,
    xi: Vec2,
    glancing_tol: f64,
) -> Option<Collision> {
    let x = geom.curve(curve).point(s);
    let n0 = wall_normal(geom, curve, s);
    let mut d = xi.normalized();
    if d.dot(n0) > 0.0 {
        d = reflect(d, n0);
    }
    let eps = 1e-10 * geom.diameter();
    let hits = [CurveId::Outer, CurveId::Inner].map(|c| {
        geom.curve(c)
            .first_hit(x, d, eps, f64::INFINITY)
            .map(|h| (c, h))
    });
    let (c1, h) = hits
        .into_iter()
        .flatten()
        .min_by(|a, b| a.1.t.total_cmp(&b.1.t))?;
    let n1 = wall_normal(geom, c1, h.s);
    let from_tangent = (d.dot(n1).abs()).min(1.0).asin();
    Some(Collision {
        curve: c1,
        s: h.s,
        x: h.point,
        incoming: d,
        outgoing: reflect(d, n1),
        length: h.t,
        glancing: from_tangent < glancing_tol,
    })
}

/// Tangential component of the interface normal ray at its landing point,
/// `<xi, n(x1)^perp>` with `xi = n2(x)`. `None` when the flight never lands.
pub fn escaping_map(geom: &Geometry, s: f64, glancing_tol: f64) -> Option<(f64, Collision)> {
    let xi = geom.inner().normal(s);
    let c = collision_map(geom, CurveId::Inner, s, xi, glancing_tol)?;
    let n1 = geom.curve(c.curve).normal(c.s);
    Some((xi.dot(n1.perp()), c))
}

/// The unobserved part of the slow region, described by its bounding arcs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Omega1F {
    pub outer_arcs: BoundaryRegion,
    pub interface_arcs: BoundaryRegion,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum UegVerdict {
    Satisfied,
    Violated { s_a: f64, s_b: f64, m_a: f64, m_b: f64 },
    Unresolved { glancing_fraction: f64 },
}

impl UegVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, UegVerdict::Satisfied)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UegResult {
    pub omega1f: Omega1F,
    pub verdict: UegVerdict,
    pub empty_complement: bool,
    /// Sampled `(s, M(s))` on the unobserved interface, per connected arc.
    pub arcs: Vec<Vec<(f64, f64)>>,
    pub glancing_fraction: f64,
}

/// Samples the escaping map along every arc of the unobserved interface and checks that it is
/// nondecreasing in `s`.
pub fn build_omega1f_and_check_ueg(
    geom: &Geometry,
    gamma1: &BoundaryRegion,
    gamma2: &BoundaryRegion,
    s_samples: usize,
    glancing_tol: f64,
) -> UegResult {
    let omega1f = Omega1F {
        outer_arcs: gamma1.complement(),
        interface_arcs: gamma2.complement(),
    };
    let member: Vec<bool> = (0..s_samples)
        .map(|k| !gamma2.contains(BoundaryRegion::cell_center(s_samples, k)))
        .collect();
    let sampled = BoundaryRegion::from_mask(CurveId::Inner, member);
    if sampled.is_empty() {
        return UegResult {
            omega1f,
            verdict: UegVerdict::Satisfied,
            empty_complement: true,
            arcs: Vec::new(),
            glancing_fraction: 0.0,
        };
    }
    let mut total = 0usize;
    let mut grazing = 0usize;
    let mut violation = None;
    let mut arcs = Vec::new();
    for comp in sampled.components() {
        let mut vals = Vec::with_capacity(comp.len());
        for k in comp {
            total += 1;
            let s = BoundaryRegion::cell_center(s_samples, k);
            match escaping_map(geom, s, glancing_tol) {
                Some((m, c)) if !c.glancing => vals.push((s, m)),
                _ => grazing += 1,
            }
        }
        if violation.is_none() {
            violation = vals
                .windows(2)
                .find(|w| w[1].1 - w[0].1 < -1e-9)
                .map(|w| UegVerdict::Violated {
                    s_a: w[0].0,
                    s_b: w[1].0,
                    m_a: w[0].1,
                    m_b: w[1].1,
                });
        }
        arcs.push(vals);
    }
    let glancing_fraction = grazing as f64 / total as f64;
    let verdict = match violation {
        Some(v) => v,
        None if grazing > 0 => UegVerdict::Unresolved { glancing_fraction },
        None => UegVerdict::Satisfied,
    };
    UegResult {
        omega1f,
        verdict,
        empty_complement: false,
        arcs,
        glancing_fraction,
    }
}
