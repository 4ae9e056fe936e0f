use super::{GeometryError, Vec2};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Transition profile used by the ramps of a bump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// C-infinity step built from `exp(-1/t)`.
    #[default]
    Exponential,
    /// Quintic smoothstep, C2.
    Polynomial,
}

impl Profile {
    /// Falling step: 1 for `t <= 0`, 0 for `t >= 1`, with derivative.
    pub fn falling(self, t: f64) -> (f64, f64) {
        if t <= 0.0 {
            return (1.0, 0.0);
        }
        if t >= 1.0 {
            return (0.0, 0.0);
        }
        match self {
            Profile::Exponential => {
                let e = |x: f64| (-1.0 / x).exp();
                let (a, b) = (e(t), e(1.0 - t));
                let (da, db) = (a / (t * t), -b / ((1.0 - t) * (1.0 - t)));
                let den = a + b;
                // rising = a / (a + b)
                let rising_d = (da * den - a * (da + db)) / (den * den);
                (b / den, -rising_d)
            }
            Profile::Polynomial => {
                let r = t * t * t * (t * (6.0 * t - 15.0) + 10.0);
                let dr = 30.0 * t * t * (t - 1.0) * (t - 1.0);
                (1.0 - r, -dr)
            }
        }
    }
}

/// Radial plateau `[inner, outer]` with ramps of width `ramp` on each side.
/// `inner <= 0` gives a disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialWindow {
    pub inner: f64,
    pub outer: f64,
    pub ramp: f64,
}

/// Angular plateau of half-width `half_width` around `center`, with ramps of width `ramp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularWindow {
    pub center: f64,
    pub half_width: f64,
    pub ramp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    #[serde(default)]
    pub center: Vec2,
    pub plateau: f64,
    pub radial: RadialWindow,
    #[serde(default)]
    pub angular: Option<AngularWindow>,
    #[serde(default)]
    pub profile: Profile,
}

/// Damping coefficient declaration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DampingSpec {
    #[default]
    None,
    Bump(BumpSpec),
}

/// Smooth nonnegative bump supported on a closed annular sector.
#[derive(Debug, Clone)]
pub struct Bump {
    spec: BumpSpec,
    r_lo: f64,
    r_hi: f64,
    /// Angular half-span of the support, `None` for full annuli.
    theta_span: Option<f64>,
}

fn wrap_pi(a: f64) -> f64 {
    (a + PI).rem_euclid(TAU) - PI
}

impl Bump {
    pub fn new(spec: BumpSpec) -> Result<Self, GeometryError> {
        let RadialWindow { inner, outer, ramp } = spec.radial;
        let bad = |m: String| Err(GeometryError::InvalidDamping(m));
        if !(spec.plateau >= 0.0 && spec.plateau.is_finite()) {
            return bad(format!("plateau must be finite and nonnegative, got {}", spec.plateau));
        }
        if !(ramp > 0.0 && outer > 0.0 && outer > inner) {
            return bad(format!(
                "radial window needs ramp > 0 and outer > max(inner, 0), got {inner}, {outer}, {ramp}"
            ));
        }
        let r_lo = (inner - ramp).max(0.0);
        let r_hi = outer + ramp;
        let theta_span = match spec.angular {
            None => None,
            Some(w) => {
                if !(w.ramp > 0.0 && w.half_width >= 0.0 && w.half_width + w.ramp < PI) {
                    return bad("angular window needs ramp > 0 and half_width + ramp < pi".into());
                }
                if inner - ramp <= 0.0 {
                    return bad("angular windows require a positive inner radius".into());
                }
                Some(w.half_width + w.ramp)
            }
        };
        Ok(Self {
            spec,
            r_lo,
            r_hi,
            theta_span,
        })
    }

    pub fn spec(&self) -> &BumpSpec {
        &self.spec
    }

    pub fn max_value(&self) -> f64 {
        self.spec.plateau
    }

    pub fn center(&self) -> Vec2 {
        self.spec.center
    }

    /// Radial extent `[r_lo, r_hi]` of the closed support.
    pub fn radial_support(&self) -> (f64, f64) {
        (self.r_lo, self.r_hi)
    }

    fn radial(&self, r: f64) -> (f64, f64) {
        let RadialWindow { inner, outer, ramp } = self.spec.radial;
        let p = self.spec.profile;
        let (fi, dfi) = p.falling((inner - r) / ramp);
        let (fo, dfo) = p.falling((r - outer) / ramp);
        (fi * fo, (-dfi * fo + fi * dfo) / ramp)
    }

    fn angular(&self, theta: f64) -> (f64, f64) {
        match self.spec.angular {
            None => (1.0, 0.0),
            Some(w) => {
                let d = wrap_pi(theta - w.center);
                let (f, df) = self
                    .spec
                    .profile
                    .falling((d.abs() - w.half_width) / w.ramp);
                (f, df * d.signum() / w.ramp)
            }
        }
    }

    pub fn value(&self, x: Vec2) -> f64 {
        let q = x - self.spec.center;
        let r = q.norm();
        if r < self.r_lo || r > self.r_hi {
            return 0.0;
        }
        let (fr, _) = self.radial(r);
        if fr == 0.0 {
            return 0.0;
        }
        let (fa, _) = self.angular(q.angle());
        self.spec.plateau * fr * fa
    }

    pub fn gradient(&self, x: Vec2) -> Vec2 {
        let q = x - self.spec.center;
        let r = q.norm();
        if r < self.r_lo || r > self.r_hi || r == 0.0 {
            return Vec2::ZERO;
        }
        let (fr, dfr) = self.radial(r);
        let (fa, dfa) = self.angular(q.angle());
        let er = q / r;
        let et = er.perp();
        (er * (dfr * fa) + et * (fr * dfa / r)) * self.spec.plateau
    }

    /// Membership in the closed support.
    pub fn support_contains(&self, x: Vec2) -> bool {
        let q = x - self.spec.center;
        let r = q.norm();
        if r < self.r_lo || r > self.r_hi {
            return false;
        }
        match (self.theta_span, self.spec.angular) {
            (Some(span), Some(w)) => wrap_pi(q.angle() - w.center).abs() <= span,
            _ => true,
        }
    }

    /// Euclidean distance to the closed support.
    pub fn support_distance(&self, x: Vec2) -> f64 {
        if self.support_contains(x) {
            return 0.0;
        }
        let c = self.spec.center;
        let q = x - c;
        let r = q.norm();
        let (Some(span), Some(w)) = (self.theta_span, self.spec.angular) else {
            return (self.r_lo - r).max(r - self.r_hi).max(0.0);
        };
        let dth = wrap_pi(q.angle() - w.center);
        let mut best = f64::INFINITY;
        for rad in [self.r_lo, self.r_hi] {
            if dth.abs() <= span {
                best = best.min((r - rad).abs());
            }
        }
        for sgn in [-1.0, 1.0] {
            let u = Vec2::from_angle(w.center + sgn * span);
            let a = c + u * self.r_lo;
            let b = c + u * self.r_hi;
            let e = b - a;
            let t = ((x - a).dot(e) / e.norm2()).clamp(0.0, 1.0);
            best = best.min(x.dist(a + e * t));
        }
        best
    }

    /// Shortest distance over which the profile goes from zero to its plateau.
    pub fn feature_length(&self) -> f64 {
        let radial = self.spec.radial.ramp;
        match self.spec.angular {
            Some(w) => radial.min(w.ramp * self.r_lo),
            None => radial,
        }
    }

    /// Line parameters `l` where `o + l d` crosses the boundary of the support.
    pub fn line_breakpoints(&self, o: Vec2, d: Vec2) -> Vec<f64> {
        let c = self.spec.center;
        let q = o - c;
        let mut out = Vec::new();
        let a = d.norm2();
        for rad in [self.r_lo, self.r_hi] {
            if rad <= 0.0 {
                continue;
            }
            let b = q.dot(d);
            let cc = q.norm2() - rad * rad;
            let disc = b * b - a * cc;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                out.push((-b - sq) / a);
                out.push((-b + sq) / a);
            }
        }
        if let (Some(span), Some(w)) = (self.theta_span, self.spec.angular) {
            for sgn in [-1.0, 1.0] {
                let u = Vec2::from_angle(w.center + sgn * span);
                let den = d.cross(u);
                if den.abs() > 1e-300 {
                    out.push((c - o).cross(u) / den);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shell() -> Bump {
        Bump::new(BumpSpec {
            center: Vec2::ZERO,
            plateau: 1.5,
            radial: RadialWindow {
                inner: 0.6,
                outer: 0.8,
                ramp: 0.1,
            },
            angular: None,
            profile: Profile::Exponential,
        })
        .unwrap()
    }

    fn sector() -> Bump {
        Bump::new(BumpSpec {
            center: Vec2::new(0.1, -0.2),
            plateau: 1.0,
            radial: RadialWindow {
                inner: 0.4,
                outer: 0.5,
                ramp: 0.05,
            },
            angular: Some(AngularWindow {
                center: 1.0,
                half_width: 0.3,
                ramp: 0.2,
            }),
            profile: Profile::Exponential,
        })
        .unwrap()
    }

    #[test]
    fn profile_endpoints_and_symmetry() {
        for p in [Profile::Exponential, Profile::Polynomial] {
            assert_eq!(p.falling(-0.5).0, 1.0);
            assert_eq!(p.falling(1.5).0, 0.0);
            assert!((p.falling(0.5).0 - 0.5).abs() < 1e-15);
            for &t in &[0.1, 0.27, 0.8] {
                let (a, _) = p.falling(t);
                let (b, _) = p.falling(1.0 - t);
                assert!((a + b - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn profile_derivative_matches_finite_difference() {
        for p in [Profile::Exponential, Profile::Polynomial] {
            for &t in &[0.05, 0.3, 0.5, 0.77, 0.95] {
                let h = 1e-6;
                let fd = (p.falling(t + h).0 - p.falling(t - h).0) / (2.0 * h);
                assert!((fd - p.falling(t).1).abs() < 1e-6, "{p:?} t={t}");
            }
        }
    }

    #[test]
    fn plateau_and_zero_regions() {
        let b = shell();
        assert_eq!(b.value(Vec2::new(0.7, 0.0)), 1.5);
        assert_eq!(b.value(Vec2::new(0.0, 0.45)), 0.0);
        assert_eq!(b.value(Vec2::new(0.95, 0.0)), 0.0);
        assert!(b.value(Vec2::new(0.55, 0.0)) > 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for b in [shell(), sector()] {
            for &(x, y) in &[(0.55, 0.1), (0.3, 0.4), (0.2, 0.25), (0.05, 0.28), (-0.7, 0.3)] {
                let p = Vec2::new(x, y);
                let h = 1e-6;
                let gx = (b.value(p + Vec2::new(h, 0.0)) - b.value(p - Vec2::new(h, 0.0))) / (2.0 * h);
                let gy = (b.value(p + Vec2::new(0.0, h)) - b.value(p - Vec2::new(0.0, h))) / (2.0 * h);
                let g = b.gradient(p);
                assert!((g.x - gx).abs() < 1e-5 && (g.y - gy).abs() < 1e-5, "{p:?}");
            }
        }
    }

    #[test]
    fn support_distance_is_consistent_with_sampling() {
        let b = sector();
        let probes = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(-0.5, 0.2), Vec2::new(0.5, -0.6)];
        for p in probes {
            let mut best = f64::INFINITY;
            let m = 600;
            for i in 0..=m {
                for j in 0..=m {
                    let x = Vec2::new(-1.0 + 2.2 * i as f64 / m as f64, -1.0 + 2.2 * j as f64 / m as f64);
                    if b.support_contains(x) {
                        best = best.min(x.dist(p));
                    }
                }
            }
            let d = b.support_distance(p);
            assert!(d <= best + 1e-12 && best - d < 6e-3, "{p:?}: {d} vs {best}");
        }
    }

    #[test]
    fn disk_bump_is_flat_near_center() {
        let b = Bump::new(BumpSpec {
            center: Vec2::new(0.3, 0.3),
            plateau: 0.5,
            radial: RadialWindow {
                inner: 0.0,
                outer: 0.1,
                ramp: 0.1,
            },
            angular: None,
            profile: Profile::Polynomial,
        })
        .unwrap();
        assert_eq!(b.value(Vec2::new(0.3, 0.3)), 0.5);
        assert_eq!(b.gradient(Vec2::new(0.31, 0.3)), Vec2::ZERO);
    }

    #[test]
    fn invalid_windows_rejected() {
        let mut s = shell().spec().clone();
        s.radial.ramp = 0.0;
        assert!(Bump::new(s).is_err());
        let mut s = sector().spec().clone();
        s.radial.inner = 0.02;
        assert!(Bump::new(s).is_err());
    }
}
