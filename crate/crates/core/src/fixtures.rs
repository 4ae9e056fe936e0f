//! Reference configurations shared by tests, benchmarks and the command line.

use crate::geometry::{
    AngularWindow, BumpSpec, CurveSpec, DampingSpec, GeometryDescriptor, Profile, RadialWindow,
    Vec2,
};
use crate::kernel::{KernelSpec, PronyTerm};

pub fn circle(center: Vec2, radius: f64) -> CurveSpec {
    CurveSpec::Circle { center, radius }
}

/// Unit disk with a concentric inclusion of radius 0.3, `k1 = 1`, `k2 = 2`.
pub fn annulus(damping: DampingSpec) -> GeometryDescriptor {
    GeometryDescriptor {
        outer: circle(Vec2::ZERO, 1.0),
        inner: circle(Vec2::ZERO, 0.3),
        k1: 1.0,
        k2: 2.0,
        damping,
        smoothness_samples: 512,
        allow_interface_damping: false,
    }
}

/// Full shell reaching past the outer boundary.
pub fn full_shell() -> DampingSpec {
    DampingSpec::Bump(BumpSpec {
        center: Vec2::ZERO,
        plateau: 1.0,
        radial: RadialWindow {
            inner: 0.6,
            outer: 1.1,
            ramp: 0.1,
        },
        angular: None,
        profile: Profile::Exponential,
    })
}

/// Shell restricted to the half plane `x > 0`.
pub fn half_shell() -> DampingSpec {
    DampingSpec::Bump(BumpSpec {
        center: Vec2::ZERO,
        plateau: 1.0,
        radial: RadialWindow {
            inner: 0.6,
            outer: 1.1,
            ramp: 0.1,
        },
        angular: Some(AngularWindow {
            center: 0.0,
            half_width: std::f64::consts::FRAC_PI_2 - 0.1,
            ramp: 0.1,
        }),
        profile: Profile::Exponential,
    })
}

/// Thin sector away from the outer boundary; chords hugging the boundary miss it.
pub fn thin_sector() -> DampingSpec {
    DampingSpec::Bump(BumpSpec {
        center: Vec2::ZERO,
        plateau: 1.0,
        radial: RadialWindow {
            inner: 0.4,
            outer: 0.55,
            ramp: 0.05,
        },
        angular: Some(AngularWindow {
            center: 0.0,
            half_width: 0.3,
            ramp: 0.15,
        }),
        profile: Profile::Exponential,
    })
}

/// Single exponential term with `k0 = 0.5`.
pub fn golden_kernel() -> KernelSpec {
    KernelSpec {
        terms: vec![PronyTerm {
            amplitude: 2.5,
            relaxation: 0.2,
        }],
    }
}

/// The passing configuration.
pub fn golden() -> GeometryDescriptor {
    annulus(full_shell())
}

/// The weak-control counterexample.
pub fn trapped() -> GeometryDescriptor {
    annulus(thin_sector())
}

/// Small damped disk centred at `(0.6, 0)`.
pub fn small_bump() -> DampingSpec {
    DampingSpec::Bump(BumpSpec {
        center: Vec2::new(0.6, 0.0),
        plateau: 1.0,
        radial: RadialWindow {
            inner: 0.0,
            outer: 0.1,
            ramp: 0.1,
        },
        angular: None,
        profile: Profile::Exponential,
    })
}

/// Unit disk with an inclusion of radius 0.3 shifted by `(cx, 0)`.
pub fn offset_annulus(cx: f64, damping: DampingSpec) -> GeometryDescriptor {
    GeometryDescriptor {
        inner: circle(Vec2::new(cx, 0.0), 0.3),
        ..annulus(damping)
    }
}

/// Tall slab `[-1, 1] x [-4, 4]` whose right half `[0, 0.9] x [-3.8, 3.8]` is the inclusion.
/// Away from the ends it behaves like a flat interface at `x = 0`.
pub fn strip(k1: f64, k2: f64) -> GeometryDescriptor {
    let rect = |x0: f64, x1: f64, y0: f64, y1: f64| {
        vec![
            Vec2::new(x0, y0),
            Vec2::new(x1, y0),
            Vec2::new(x1, y1),
            Vec2::new(x0, y1),
        ]
    };
    GeometryDescriptor {
        outer: CurveSpec::RoundedPolygon {
            vertices: rect(-1.0, 1.0, -4.0, 4.0),
            corner_radius: 0.1,
        },
        inner: CurveSpec::RoundedPolygon {
            vertices: rect(0.0, 0.9, -3.8, 3.8),
            corner_radius: 0.05,
        },
        k1,
        k2,
        damping: DampingSpec::None,
        smoothness_samples: 512,
        allow_interface_damping: false,
    }
}
