//! Planar domain: outer boundary, inner interface and the damping coefficient.

mod bump;
mod curve;
mod vec2;

pub use bump::{AngularWindow, Bump, BumpSpec, DampingSpec, Profile, RadialWindow};
pub use curve::{Curve, CurveSpec, LineHit};
pub use vec2::Vec2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Distance below which a point counts as lying on a curve.
pub const ON_CURVE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("curve is not a simple closed curve: {0}")]
    NonSimpleCurve(String),
    #[error("inner curve is not strictly inside the outer curve: {0}")]
    InnerNotContained(String),
    #[error("damping support touches the interface (distance {0:.3e})")]
    SupportTouchesInterface(f64),
    #[error("wave speeds must be positive, got k1 = {k1}, k2 = {k2}")]
    NonPositiveSpeeds { k1: f64, k2: f64 },
    #[error("invalid damping coefficient: {0}")]
    InvalidDamping(String),
    #[error("tangent degenerates at s = {0}")]
    DegenerateTangent(f64),
    #[error("point ({x}, {y}) is outside the closure of the damped region")]
    PointOutsideDomain { x: f64, y: f64 },
}

fn default_samples() -> usize {
    512
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryDescriptor {
    pub outer: CurveSpec,
    pub inner: CurveSpec,
    pub k1: f64,
    pub k2: f64,
    #[serde(default)]
    pub damping: DampingSpec,
    #[serde(default = "default_samples")]
    pub smoothness_samples: usize,
    /// Lets the damping reach the interface. Only meant for kernel diagnostics.
    #[serde(default)]
    pub allow_interface_damping: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Omega1,
    Omega2,
    OnInterface,
    OnOuter,
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveId {
    Outer,
    Inner,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub outer_min_curvature: f64,
    pub inner_min_curvature: f64,
    pub outer_convex: bool,
    pub inner_convex: bool,
    pub outer_strictly_convex: bool,
    pub inner_strictly_convex: bool,
}

impl ConvexityReport {
    pub fn both_strictly_convex(&self) -> bool {
        self.outer_strictly_convex && self.inner_strictly_convex
    }
}

/// Validated domain with cached derived quantities.
#[derive(Debug, Clone)]
pub struct Geometry {
    desc: GeometryDescriptor,
    outer: Curve,
    inner: Curve,
    damping: Option<Bump>,
    delta_sep: Option<f64>,
    convexity: ConvexityReport,
}

fn min_curvature(c: &Curve) -> f64 {
    let n = 4 * c.samples();
    (0..n)
        .map(|i| c.curvature((i as f64 + 0.5) / n as f64))
        .fold(f64::INFINITY, f64::min)
}

pub fn build_geometry(desc: &GeometryDescriptor) -> Result<Geometry, GeometryError> {
    if !(desc.k1 > 0.0 && desc.k2 > 0.0) {
        return Err(GeometryError::NonPositiveSpeeds {
            k1: desc.k1,
            k2: desc.k2,
        });
    }
    let outer = Curve::new(desc.outer.clone(), desc.smoothness_samples)?;
    let inner = Curve::new(desc.inner.clone(), desc.smoothness_samples)?;
    for (i, p) in inner.sample(4 * inner.samples()).into_iter().enumerate() {
        if outer.signed_distance(p) >= -ON_CURVE_TOL {
            return Err(GeometryError::InnerNotContained(format!(
                "inner sample {i} at ({:.6}, {:.6})",
                p.x, p.y
            )));
        }
    }
    let damping = match &desc.damping {
        DampingSpec::None => None,
        DampingSpec::Bump(spec) => Some(Bump::new(spec.clone())?),
    };
    let delta_sep = damping.as_ref().map(|b| {
        inner
            .sample(16 * inner.samples())
            .into_iter()
            .map(|p| b.support_distance(p))
            .fold(f64::INFINITY, f64::min)
    });
    if let Some(d) = delta_sep {
        if d <= 0.0 && !desc.allow_interface_damping {
            return Err(GeometryError::SupportTouchesInterface(d));
        }
    }
    let ko = min_curvature(&outer);
    let ki = min_curvature(&inner);
    let convexity = ConvexityReport {
        outer_min_curvature: ko,
        inner_min_curvature: ki,
        outer_convex: ko >= -1e-10,
        inner_convex: ki >= -1e-10,
        outer_strictly_convex: ko > 1e-10,
        inner_strictly_convex: ki > 1e-10,
    };
    Ok(Geometry {
        desc: desc.clone(),
        outer,
        inner,
        damping,
        delta_sep,
        convexity,
    })
}

impl Geometry {
    pub fn descriptor(&self) -> &GeometryDescriptor {
        &self.desc
    }

    pub fn outer(&self) -> &Curve {
        &self.outer
    }

    pub fn inner(&self) -> &Curve {
        &self.inner
    }

    pub fn curve(&self, id: CurveId) -> &Curve {
        match id {
            CurveId::Outer => &self.outer,
            CurveId::Inner => &self.inner,
        }
    }

    pub fn k1(&self) -> f64 {
        self.desc.k1
    }

    pub fn k2(&self) -> f64 {
        self.desc.k2
    }

    pub fn damping(&self) -> Option<&Bump> {
        self.damping.as_ref()
    }

    /// Distance between the damping support and the interface, `None` without damping.
    pub fn delta_sep(&self) -> Option<f64> {
        self.delta_sep
    }

    pub fn convexity(&self) -> ConvexityReport {
        self.convexity
    }

    pub fn diameter(&self) -> f64 {
        self.outer.diameter()
    }

    pub fn b_max(&self) -> f64 {
        self.damping.as_ref().map_or(0.0, Bump::max_value)
    }

    /// Damping coefficient without domain checks.
    pub fn b(&self, x: Vec2) -> f64 {
        self.damping.as_ref().map_or(0.0, |b| b.value(x))
    }

    pub fn grad_b(&self, x: Vec2) -> Vec2 {
        self.damping.as_ref().map_or(Vec2::ZERO, |b| b.gradient(x))
    }

    pub fn classify(&self, x: Vec2) -> Region {
        let d_out = self.outer.signed_distance(x);
        if d_out.abs() <= ON_CURVE_TOL {
            return Region::OnOuter;
        }
        if d_out > 0.0 {
            return Region::Outside;
        }
        let d_in = self.inner.signed_distance(x);
        if d_in.abs() <= ON_CURVE_TOL {
            Region::OnInterface
        } else if d_in < 0.0 {
            Region::Omega2
        } else {
            Region::Omega1
        }
    }
}

pub fn classify_containment(geom: &Geometry, x: Vec2) -> Region {
    geom.classify(x)
}

/// Outward unit normal, rejecting parameters where the parametrization stalls.
pub fn normal_at(curve: &Curve, s: f64) -> Result<Vec2, GeometryError> {
    if curve.velocity(s).norm() < 1e-9 {
        return Err(GeometryError::DegenerateTangent(s));
    }
    Ok(curve.normal(s))
}

/// Damping coefficient and its gradient at a point of the closure of the damped region.
pub fn eval_b(geom: &Geometry, x: Vec2) -> Result<(f64, Vec2), GeometryError> {
    match geom.classify(x) {
        Region::Omega1 | Region::OnInterface | Region::OnOuter => Ok((geom.b(x), geom.grad_b(x))),
        Region::Omega2 | Region::Outside => Err(GeometryError::PointOutsideDomain { x: x.x, y: x.y }),
    }
}
