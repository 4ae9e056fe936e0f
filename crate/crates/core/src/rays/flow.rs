use super::{ArcPoint, Medium, PhasePoint, RayContext, Segment};
use crate::geometry::{Bump, CurveId, Geometry, Vec2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowStop {
    Boundary { curve: CurveId, s: f64 },
    TimeBudget,
    /// Crossed into the observed level set transversally and dwelt there.
    Observed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    pub segment: Segment,
    pub stop: FlowStop,
}

#[derive(Clone, Copy)]
struct State {
    x: Vec2,
    xi: Vec2,
}

impl State {
    fn axpy(self, h: f64, d: (Vec2, Vec2)) -> State {
        State {
            x: self.x + d.0 * h,
            xi: self.xi + d.1 * h,
        }
    }
}

struct Curved<'c, 'a> {
    ctx: &'c RayContext<'a>,
    medium: Medium,
    tau: f64,
}

impl Curved<'_, '_> {
    // derivative with respect to physical time
    fn rhs(&self, y: State) -> (Vec2, Vec2) {
        let c = self.ctx.speed2(y.x, self.medium);
        let gc = self.ctx.grad_speed2(y.x, self.medium);
        let a = self.tau.abs();
        (y.xi * (c / a), gc * (-y.xi.norm2() / (2.0 * a)))
    }

    fn rk4(&self, y: State, h: f64) -> State {
        let k1 = self.rhs(y);
        let k2 = self.rhs(y.axpy(h / 2.0, k1));
        let k3 = self.rhs(y.axpy(h / 2.0, k2));
        let k4 = self.rhs(y.axpy(h, k3));
        State {
            x: y.x + (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * (h / 6.0),
            xi: y.xi + (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) * (h / 6.0),
        }
    }

    fn step(&self, y: State, h: f64) -> State {
        self.rk4(self.rk4(y, h / 2.0), h / 2.0)
    }
}

/// Root of `f` on `(0, h)` given `f(0) < 0 < f(h)`, by Illinois false position.
fn bracket_root(mut f: impl FnMut(f64) -> f64, h: f64, tol: f64) -> f64 {
    let (mut a, mut b) = (0.0, h);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa >= 0.0 {
        return 0.0;
    }
    let mut side = 0;
    for _ in 0..200 {
        let m = if (b - a) > 1e-3 * h && fb.is_finite() && fa.is_finite() {
            (a * fb - b * fa) / (fb - fa)
        } else {
            0.5 * (a + b)
        };
        let m = if m <= a || m >= b { 0.5 * (a + b) } else { m };
        let fm = f(m);
        if fm.abs() <= tol || (b - a) <= 1e-15 * h.max(1e-300) {
            return m;
        }
        if fm < 0.0 {
            a = m;
            fa = fm;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = m;
            fb = fm;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    0.5 * (a + b)
}

/// First parameter at which the straight ray `o + l d` enters the closed support.
fn support_entry(bump: &Bump, o: Vec2, d: Vec2, l_max: f64) -> Option<f64> {
    let mut cuts: Vec<f64> = bump
        .line_breakpoints(o, d)
        .into_iter()
        .filter(|&l| l > 0.0 && l < l_max)
        .collect();
    cuts.push(l_max);
    let mut lo = 0.0;
    for hi in cuts {
        if hi > lo && bump.support_contains(o + d * (0.5 * (lo + hi))) {
            return Some(lo);
        }
        lo = hi;
    }
    None
}

/// Positive once `x` has left Omega1 through `curve`.
fn outside(geom: &Geometry, curve: CurveId, x: Vec2) -> f64 {
    match curve {
        CurveId::Outer => geom.outer().signed_distance(x),
        CurveId::Inner => -geom.inner().signed_distance(x),
    }
}

struct Dwell {
    length: f64,
}

/// Follows the bicharacteristic from `p0` until it meets a boundary curve, exhausts
/// `max_time`, or (when observing) is caught by the damping.
pub fn flow_segment(ctx: &RayContext, p0: &PhasePoint, max_time: f64) -> FlowResult {
    let geom = ctx.geom;
    let diam = geom.diameter();
    let eps_l = 1e-9 * diam;
    let t_end = p0.t + max_time;
    let medium = p0.medium;
    let bump = match medium {
        Medium::Omega1 => geom.damping().filter(|b| b.max_value() > 0.0),
        Medium::Omega2 => None,
    };
    let observing = ctx.opts.observe && bump.is_some();
    let level = ctx.level();
    let dwell_min = ctx.opts.dwell_fraction * diam;
    let mut arc = vec![ArcPoint { x: p0.x, t: p0.t }];
    let mut p = *p0;
    let finish = |p: PhasePoint, arc: Vec<ArcPoint>, stop: FlowStop| FlowResult {
        segment: Segment {
            start: *p0,
            end: p,
            arc,
        },
        stop,
    };
    if observing && ctx.observed_at(p.x, medium) {
        return finish(p, arc, FlowStop::Observed);
    }
    let curves: &[CurveId] = match medium {
        Medium::Omega1 => &[CurveId::Outer, CurveId::Inner],
        Medium::Omega2 => &[CurveId::Inner],
    };
    let integ = Curved {
        ctx,
        medium,
        tau: p.tau,
    };
    let mut dwell: Option<Dwell> = None;
    let mut force_curved = false;
    let mut h = 0.01 * diam;
    let mut steps = 0usize;
    loop {
        let curved = match bump {
            Some(b) => force_curved || b.support_contains(p.x),
            None => false,
        };
        force_curved = false;
        if !curved {
            dwell = None;
            let c = ctx.speed2(p.x, medium);
            let sc = c.sqrt();
            let d = p.xi.normalized();
            let l_t = sc * (t_end - p.t).max(0.0);
            let mut best: Option<(f64, CurveId, f64)> = None;
            for &cid in curves {
                if let Some(hit) = geom.curve(cid).first_hit(p.x, d, eps_l, l_t) {
                    if best.map_or(true, |(l, _, _)| hit.t < l) {
                        best = Some((hit.t, cid, hit.s));
                    }
                }
            }
            let l_b = best.map_or(f64::INFINITY, |b| b.0);
            let l_e = bump
                .and_then(|b| support_entry(b, p.x, d, l_b.min(l_t)))
                .unwrap_or(f64::INFINITY);
            if l_e < l_b && l_e <= l_t {
                p.x += d * l_e;
                p.t += l_e / sc;
                if l_e > 0.0 {
                    arc.push(ArcPoint { x: p.x, t: p.t });
                }
                force_curved = true;
                continue;
            }
            if let Some((l, cid, s)) = best.filter(|b| b.0 <= l_t) {
                p.x = geom.curve(cid).point(s);
                p.t += l / sc;
                arc.push(ArcPoint { x: p.x, t: p.t });
                return finish(p, arc, FlowStop::Boundary { curve: cid, s });
            }
            p.x += d * l_t;
            p.t = t_end;
            arc.push(ArcPoint { x: p.x, t: p.t });
            return finish(p, arc, FlowStop::TimeBudget);
        }

        // adaptive integration inside the support
        let b = bump.expect("curved flight needs damping");
        let tol = ctx.opts.rk_tol;
        let max_len = 0.5 * b.feature_length();
        loop {
            let remaining = t_end - p.t;
            if remaining <= 0.0 {
                return finish(p, arc, FlowStop::TimeBudget);
            }
            steps += 1;
            if steps > ctx.opts.max_rk_steps {
                return finish(p, arc, FlowStop::TimeBudget);
            }
            // stop each step just past the next straight-line boundary crossing, so that no
            // stage samples the coefficient far outside the medium, and never step over a ramp
            // of the profile
            let d = p.xi.normalized();
            let reach = curves
                .iter()
                .filter_map(|&cid| geom.curve(cid).first_hit(p.x, d, eps_l, 2.0 * diam))
                .map(|hit| hit.t)
                .fold(f64::INFINITY, f64::min);
            let cap = (reach + 1e-3 * diam).min(max_len) / ctx.speed2(p.x, medium).sqrt();
            let hh = h.min(remaining).min(cap);
            let y = State { x: p.x, xi: p.xi };
            let y1 = integ.rk4(y, hh);
            let y2 = integ.step(y, hh);
            let xin = y.xi.norm();
            let err = ((y2.x - y1.x).norm() / diam).max((y2.xi - y1.xi).norm() / xin) / 15.0;
            if err > tol && hh > 1e-14 * diam {
                h = hh * (0.9 * (tol / err).powf(0.2)).clamp(0.1, 0.9);
                continue;
            }
            let grow = if err > 0.0 {
                (0.9 * (tol / err).powf(0.2)).clamp(1.0, 4.0)
            } else {
                4.0
            };
            let mut ynew = State {
                x: y2.x + (y2.x - y1.x) * (1.0 / 15.0),
                xi: y2.xi + (y2.xi - y1.xi) * (1.0 / 15.0),
            };
            let mut tnew = p.t + hh;
            let crossed = curves
                .iter()
                .copied()
                .find(|&cid| outside(geom, cid, ynew.x) > 0.0);
            if let Some(cid) = crossed {
                let hs = bracket_root(
                    |hp| outside(geom, cid, integ.step(y, hp).x),
                    hh,
                    1e-13 * diam,
                );
                let yh = integ.step(y, hs);
                let (s, _) = geom.curve(cid).closest(yh.x);
                p.x = geom.curve(cid).point(s);
                p.xi = yh.xi;
                p.t += hs;
                arc.push(ArcPoint { x: p.x, t: p.t });
                return finish(p, arc, FlowStop::Boundary { curve: cid, s });
            }
            if observing {
                let was_in = b.value(y.x) >= level;
                let is_in = b.value(ynew.x) >= level;
                if !was_in && is_in {
                    let hs = bracket_root(|hp| b.value(integ.step(y, hp).x) - level, hh, 1e-14);
                    let ye = integ.step(y, hs);
                    let g = b.gradient(ye.x);
                    let v = ye.xi.normalized();
                    let angle = if g.norm() > 0.0 {
                        v.dot(g.normalized()).abs().clamp(0.0, 1.0).asin()
                    } else {
                        0.0
                    };
                    dwell = (angle >= ctx.opts.min_crossing_angle).then_some(Dwell {
                        length: ynew.x.dist(ye.x),
                    });
                } else if was_in && is_in {
                    if let Some(dw) = dwell.as_mut() {
                        dw.length += ynew.x.dist(y.x);
                    }
                } else {
                    dwell = None;
                }
                if dwell.as_ref().is_some_and(|dw| dw.length >= dwell_min) {
                    p.x = ynew.x;
                    p.xi = ynew.xi;
                    p.t = tnew;
                    arc.push(ArcPoint { x: p.x, t: p.t });
                    return finish(p, arc, FlowStop::Observed);
                }
            }
            if !tnew.is_finite() {
                tnew = t_end;
                ynew = y;
            }
            p.x = ynew.x;
            p.xi = ynew.xi;
            p.t = tnew;
            arc.push(ArcPoint { x: p.x, t: p.t });
            h = hh * grow;
            if !b.support_contains(p.x) {
                break;
            }
        }
    }
}
