use super::{
    BoundaryEvent, Medium, Outgoing, OutgoingKind, PhaseClass, PhasePoint, RayContext, RayError,
};
use crate::geometry::{CurveId, Vec2};
use serde::{Deserialize, Serialize};

/// Classes of an interface phase point as seen from each side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterfacePair {
    pub omega1: PhaseClass,
    pub omega2: PhaseClass,
}

impl InterfacePair {
    pub fn label(&self) -> String {
        let c = |p: PhaseClass| match p {
            PhaseClass::Hyperbolic => "H",
            PhaseClass::Glancing => "G",
            PhaseClass::Elliptic => "E",
        };
        format!("{}1x{}2", c(self.omega1), c(self.omega2))
    }
}

fn classify(r: f64, threshold: f64, tol: f64) -> PhaseClass {
    let rel = (r - threshold) / threshold;
    if rel.abs() <= tol {
        PhaseClass::Glancing
    } else if rel < 0.0 {
        PhaseClass::Hyperbolic
    } else {
        PhaseClass::Elliptic
    }
}

fn other(m: Medium) -> Medium {
    match m {
        Medium::Omega1 => Medium::Omega2,
        Medium::Omega2 => Medium::Omega1,
    }
}

/// Classifies the interface phase point with tangential covector norm `xi_t` at `x`.
pub fn classify_interface_pair(
    ctx: &RayContext,
    x: Vec2,
    xi_t: f64,
    tau: f64,
) -> Result<InterfacePair, RayError> {
    if tau == 0.0 {
        return Err(RayError::ZeroTau);
    }
    let d = ctx.geom.inner().signed_distance(x);
    if d.abs() > 1e-7 {
        return Err(RayError::NotOnInterface(d));
    }
    let r = xi_t * xi_t;
    let t2 = tau * tau;
    let tol = ctx.opts.classify_tol;
    Ok(InterfacePair {
        omega1: classify(r, t2 / ctx.speed2(x, Medium::Omega1), tol),
        omega2: classify(r, t2 / ctx.speed2(x, Medium::Omega2), tol),
    })
}

/// Angle of incidence from the slow side above which the far side is elliptic.
/// `None` when the far side is not faster.
pub fn critical_angle(ctx: &RayContext, x: Vec2) -> Option<f64> {
    let c1 = ctx.speed2(x, Medium::Omega1);
    let c2 = ctx.speed2(x, Medium::Omega2);
    (c1 < c2).then(|| (c1 / c2).sqrt().asin())
}

/// Reflection and transmission of a bicharacteristic hitting the interface at parameter `s`.
pub fn snell_event(ctx: &RayContext, incoming: &PhasePoint, s: f64) -> Result<BoundaryEvent, RayError> {
    let inner = ctx.geom.inner();
    let x = incoming.x;
    let d = inner.signed_distance(x);
    if d.abs() > 1e-7 {
        return Err(RayError::NotOnInterface(d));
    }
    ctx.check_characteristic(incoming)?;
    let n = inner.normal(s);
    let xi = incoming.xi;
    let xi_n = xi.dot(n);
    let xi_t = xi - n * xi_n;
    let r = xi_t.norm2();
    let t2 = incoming.tau * incoming.tau;
    let tol = ctx.opts.classify_tol;
    let here = incoming.medium;
    let there = other(here);
    let c_in = ctx.speed2(x, here);
    let c_far = ctx.speed2(x, there);
    let cos_inc = (xi_n.abs() / xi.norm()).min(1.0);
    let incidence_angle = cos_inc.acos();
    let incoming_class = classify(r, t2 / c_in, tol);
    let glancing = incoming_class == PhaseClass::Glancing
        || (std::f64::consts::FRAC_PI_2 - incidence_angle) < ctx.opts.glancing_tol;
    let mut outgoing = vec![Outgoing {
        kind: OutgoingKind::Reflected,
        point: PhasePoint {
            xi: xi_t - n * xi_n,
            ..*incoming
        },
    }];
    let far_class = classify(r, t2 / c_far, tol);
    match far_class {
        PhaseClass::Hyperbolic => {
            let normal = (t2 / c_far - r).sqrt() * xi_n.signum();
            outgoing.push(Outgoing {
                kind: OutgoingKind::Transmitted,
                point: PhasePoint {
                    xi: xi_t + n * normal,
                    medium: there,
                    ..*incoming
                },
            });
        }
        PhaseClass::Glancing => {
            let scale = (t2 / c_far).sqrt() / r.sqrt();
            outgoing.push(Outgoing {
                kind: OutgoingKind::Gliding,
                point: PhasePoint {
                    xi: xi_t * scale,
                    medium: there,
                    ..*incoming
                },
            });
        }
        PhaseClass::Elliptic => {}
    }
    Ok(BoundaryEvent {
        curve: CurveId::Inner,
        s,
        x,
        t: incoming.t,
        incidence_angle,
        incoming: *incoming,
        incoming_class,
        far_class: Some(far_class),
        outgoing,
        glancing,
    })
}

/// Specular reflection at the outer boundary.
pub fn outer_reflection(ctx: &RayContext, incoming: &PhasePoint, s: f64) -> Result<BoundaryEvent, RayError> {
    let outer = ctx.geom.outer();
    let x = incoming.x;
    let d = outer.signed_distance(x);
    if d.abs() > 1e-7 {
        return Err(RayError::NotOnOuter(d));
    }
    let n = outer.normal(s);
    let xi = incoming.xi;
    let xi_n = xi.dot(n);
    let cos_inc = (xi_n.abs() / xi.norm()).min(1.0);
    let incidence_angle = cos_inc.acos();
    let from_tangent = std::f64::consts::FRAC_PI_2 - incidence_angle;
    let glancing = from_tangent < ctx.opts.glancing_tol;
    Ok(BoundaryEvent {
        curve: CurveId::Outer,
        s,
        x,
        t: incoming.t,
        incidence_angle,
        incoming: *incoming,
        incoming_class: if glancing {
            PhaseClass::Glancing
        } else {
            PhaseClass::Hyperbolic
        },
        far_class: None,
        outgoing: vec![Outgoing {
            kind: OutgoingKind::Reflected,
            point: PhasePoint {
                xi: xi - n * (2.0 * xi_n),
                ..*incoming
            },
        }],
        glancing,
    })
}
