use super::{GeometryError, Vec2};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Serializable description of a closed curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveSpec {
    Circle {
        #[serde(default)]
        center: Vec2,
        radius: f64,
    },
    Ellipse {
        #[serde(default)]
        center: Vec2,
        semi_x: f64,
        semi_y: f64,
        #[serde(default)]
        rotation: f64,
    },
    /// Polygon with every corner replaced by a circular fillet. Reflex corners are allowed.
    RoundedPolygon {
        vertices: Vec<Vec2>,
        corner_radius: f64,
    },
}

#[derive(Debug, Clone)]
enum Piece {
    Segment {
        a: Vec2,
        b: Vec2,
    },
    Arc {
        center: Vec2,
        radius: f64,
        start: f64,
        sweep: f64,
    },
}

impl Piece {
    fn length(&self) -> f64 {
        match self {
            Piece::Segment { a, b } => a.dist(*b),
            Piece::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    fn point(&self, u: f64) -> Vec2 {
        match self {
            Piece::Segment { a, b } => *a + (*b - *a) * u,
            Piece::Arc {
                center,
                radius,
                start,
                sweep,
            } => *center + Vec2::from_angle(start + sweep * u) * *radius,
        }
    }

    /// Unit tangent and signed curvature at local parameter `u`.
    fn frame(&self, u: f64) -> (Vec2, f64) {
        match self {
            Piece::Segment { a, b } => ((*b - *a).normalized(), 0.0),
            Piece::Arc {
                radius,
                start,
                sweep,
                ..
            } => {
                let sg = sweep.signum();
                (Vec2::from_angle(start + sweep * u).perp() * sg, sg / radius)
            }
        }
    }

    /// Local parameter of the point on the piece nearest to `p`.
    fn closest(&self, p: Vec2) -> f64 {
        match self {
            Piece::Segment { a, b } => {
                let d = *b - *a;
                ((p - *a).dot(d) / d.norm2()).clamp(0.0, 1.0)
            }
            Piece::Arc {
                center,
                start,
                sweep,
                ..
            } => {
                let q = p - *center;
                if q.norm2() == 0.0 {
                    return 0.0;
                }
                match arc_local(q.angle(), *start, *sweep) {
                    Some(u) => u,
                    None => {
                        let d0 = self.point(0.0).dist(p);
                        let d1 = self.point(1.0).dist(p);
                        if d0 <= d1 {
                            0.0
                        } else {
                            1.0
                        }
                    }
                }
            }
        }
    }

    /// Line parameters `t` (with local parameter `u`) where `o + t d` meets the piece.
    fn line_hits(&self, o: Vec2, d: Vec2, out: &mut Vec<(f64, f64)>) {
        match self {
            Piece::Segment { a, b } => {
                let e = *b - *a;
                let den = d.cross(e);
                if den.abs() < 1e-300 {
                    return;
                }
                let w = *a - o;
                let t = w.cross(e) / den;
                let u = w.cross(d) / den;
                if (-1e-12..=1.0 + 1e-12).contains(&u) {
                    out.push((t, u.clamp(0.0, 1.0)));
                }
            }
            Piece::Arc {
                center,
                radius,
                start,
                sweep,
            } => {
                for t in circle_line_roots(o - *center, d, *radius) {
                    let q = o + d * t - *center;
                    if let Some(u) = arc_local_tol(q.angle(), *start, *sweep, 1e-12) {
                        out.push((t, u));
                    }
                }
            }
        }
    }
}

/// Local parameter of angle `a` on an arc, or `None` when outside the sweep.
fn arc_local(a: f64, start: f64, sweep: f64) -> Option<f64> {
    arc_local_tol(a, start, sweep, 0.0)
}

fn arc_local_tol(a: f64, start: f64, sweep: f64, tol: f64) -> Option<f64> {
    let rel = ((a - start) * sweep.signum()).rem_euclid(TAU);
    let span = sweep.abs();
    if rel <= span + tol {
        Some((rel / span).min(1.0))
    } else if rel >= TAU - tol {
        Some(0.0)
    } else {
        None
    }
}

/// Roots of `|q + t d| = r`.
fn circle_line_roots(q: Vec2, d: Vec2, r: f64) -> Vec<f64> {
    let a = d.norm2();
    let b = q.dot(d);
    let c = q.norm2() - r * r;
    let disc = b * b - a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    // numerically stable pair
    let k = -(b + b.signum() * sq);
    if k == 0.0 {
        return vec![0.0];
    }
    let (t1, t2) = (k / a, c / k);
    if t1 <= t2 {
        vec![t1, t2]
    } else {
        vec![t2, t1]
    }
}

#[derive(Debug, Clone)]
enum Shape {
    Circle {
        center: Vec2,
        radius: f64,
    },
    Ellipse {
        center: Vec2,
        a: f64,
        b: f64,
        rot: f64,
    },
    Pieces {
        pieces: Vec<Piece>,
        /// Cumulative parameter value at the start of each piece, plus a final 1.0.
        breaks: Vec<f64>,
    },
}

/// A point where a straight line meets a curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineHit {
    pub t: f64,
    pub s: f64,
    pub point: Vec2,
}

/// Closed, simple, counter-clockwise curve parametrised by `s` in `[0, 1)`.
#[derive(Debug, Clone)]
pub struct Curve {
    spec: CurveSpec,
    shape: Shape,
    length: f64,
    samples: usize,
}

impl Curve {
    pub fn new(spec: CurveSpec, samples: usize) -> Result<Self, GeometryError> {
        let shape = match &spec {
            CurveSpec::Circle { center, radius } => {
                if !(*radius > 0.0) || !center.is_finite() {
                    return Err(GeometryError::NonSimpleCurve(format!(
                        "circle radius must be positive, got {radius}"
                    )));
                }
                Shape::Circle {
                    center: *center,
                    radius: *radius,
                }
            }
            CurveSpec::Ellipse {
                center,
                semi_x,
                semi_y,
                rotation,
            } => {
                if !(*semi_x > 0.0 && *semi_y > 0.0) {
                    return Err(GeometryError::NonSimpleCurve(format!(
                        "ellipse semi-axes must be positive, got {semi_x}, {semi_y}"
                    )));
                }
                Shape::Ellipse {
                    center: *center,
                    a: *semi_x,
                    b: *semi_y,
                    rot: *rotation,
                }
            }
            CurveSpec::RoundedPolygon {
                vertices,
                corner_radius,
            } => build_pieces(vertices, *corner_radius)?,
        };
        let length = match &shape {
            Shape::Circle { radius, .. } => TAU * radius,
            Shape::Ellipse { a, b, .. } => {
                let m = 4096;
                (0..m)
                    .map(|i| {
                        let th = TAU * i as f64 / m as f64;
                        (a * th.sin()).hypot(b * th.cos())
                    })
                    .sum::<f64>()
                    * TAU
                    / m as f64
            }
            Shape::Pieces { pieces, .. } => pieces.iter().map(Piece::length).sum(),
        };
        let curve = Curve {
            spec,
            shape,
            length,
            samples: samples.max(16),
        };
        curve.validate()?;
        Ok(curve)
    }

    fn validate(&self) -> Result<(), GeometryError> {
        let n = self.samples;
        if self.point(0.0).dist(self.point(1.0 - 1e-15)) > 1e-9 * self.length.max(1.0) {
            return Err(GeometryError::NonSimpleCurve("curve is not closed".into()));
        }
        let pts = self.sample(n);
        for i in 0..n {
            let s = (i as f64 + 0.5) / n as f64;
            if self.velocity(s).norm() < 1e-9 {
                return Err(GeometryError::NonSimpleCurve(format!(
                    "degenerate tangent at s = {s}"
                )));
            }
        }
        for i in 0..n {
            let (a0, a1) = (pts[i], pts[(i + 1) % n]);
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (b0, b1) = (pts[j], pts[(j + 1) % n]);
                if segments_cross(a0, a1, b0, b1) {
                    return Err(GeometryError::NonSimpleCurve(format!(
                        "self-intersection between samples {i} and {j}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> &CurveSpec {
        &self.spec
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    fn locate(&self, s: f64) -> (usize, f64) {
        let Shape::Pieces { pieces, breaks } = &self.shape else {
            unreachable!()
        };
        let s = s.rem_euclid(1.0);
        let k = breaks.partition_point(|&b| b <= s).saturating_sub(1);
        let k = k.min(pieces.len() - 1);
        let u = (s - breaks[k]) / (breaks[k + 1] - breaks[k]);
        (k, u.clamp(0.0, 1.0))
    }

    pub fn point(&self, s: f64) -> Vec2 {
        match &self.shape {
            Shape::Circle { center, radius } => *center + Vec2::from_angle(TAU * s) * *radius,
            Shape::Ellipse { center, a, b, rot } => {
                let th = TAU * s;
                *center + Vec2::new(a * th.cos(), b * th.sin()).rotate(*rot)
            }
            Shape::Pieces { pieces, .. } => {
                let (k, u) = self.locate(s);
                pieces[k].point(u)
            }
        }
    }

    /// Derivative of the parametrisation with respect to `s`.
    pub fn velocity(&self, s: f64) -> Vec2 {
        match &self.shape {
            Shape::Circle { radius, .. } => Vec2::from_angle(TAU * s).perp() * (TAU * radius),
            Shape::Ellipse { a, b, rot, .. } => {
                let th = TAU * s;
                Vec2::new(-a * th.sin(), b * th.cos()).rotate(*rot) * TAU
            }
            Shape::Pieces { pieces, .. } => {
                let (k, u) = self.locate(s);
                pieces[k].frame(u).0 * self.length
            }
        }
    }

    pub fn tangent(&self, s: f64) -> Vec2 {
        self.velocity(s).normalized()
    }

    /// Outward unit normal.
    pub fn normal(&self, s: f64) -> Vec2 {
        let t = self.tangent(s);
        Vec2::new(t.y, -t.x)
    }

    /// Signed curvature, positive where the curve bends towards its interior.
    pub fn curvature(&self, s: f64) -> f64 {
        match &self.shape {
            Shape::Circle { radius, .. } => 1.0 / radius,
            Shape::Ellipse { a, b, .. } => {
                let th = TAU * s;
                let (sn, cs) = th.sin_cos();
                a * b / (a * a * sn * sn + b * b * cs * cs).powf(1.5)
            }
            Shape::Pieces { pieces, .. } => {
                let (k, u) = self.locate(s);
                pieces[k].frame(u).1
            }
        }
    }

    pub fn sample(&self, n: usize) -> Vec<Vec2> {
        (0..n).map(|i| self.point(i as f64 / n as f64)).collect()
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bbox(&self) -> (Vec2, Vec2) {
        match &self.shape {
            Shape::Circle { center, radius } => (
                *center - Vec2::new(*radius, *radius),
                *center + Vec2::new(*radius, *radius),
            ),
            Shape::Ellipse { center, a, b, rot } => {
                let (s, c) = rot.sin_cos();
                let hx = (a * a * c * c + b * b * s * s).sqrt();
                let hy = (a * a * s * s + b * b * c * c).sqrt();
                (*center - Vec2::new(hx, hy), *center + Vec2::new(hx, hy))
            }
            Shape::Pieces { pieces, .. } => {
                let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
                let mut hi = -lo;
                let mut take = |p: Vec2| {
                    lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
                    hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
                };
                for pc in pieces {
                    take(pc.point(0.0));
                    take(pc.point(1.0));
                    if let Piece::Arc {
                        center,
                        radius,
                        start,
                        sweep,
                    } = pc
                    {
                        for q in 0..4 {
                            let ang = q as f64 * PI / 2.0;
                            if arc_local(ang, *start, *sweep).is_some() {
                                take(*center + Vec2::from_angle(ang) * *radius);
                            }
                        }
                    }
                }
                (lo, hi)
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bbox();
        lo.dist(hi)
    }

    /// Parameter of the nearest curve point and the distance to it.
    pub fn closest(&self, p: Vec2) -> (f64, f64) {
        match &self.shape {
            Shape::Circle { center, radius } => {
                let q = p - *center;
                let s = if q.norm2() == 0.0 {
                    0.0
                } else {
                    (q.angle() / TAU).rem_euclid(1.0)
                };
                (s, (q.norm() - radius).abs())
            }
            Shape::Ellipse { .. } => {
                let m = 128;
                let mut cands: Vec<(f64, f64)> = (0..m)
                    .map(|i| {
                        let s = i as f64 / m as f64;
                        (s, self.point(s).dist(p))
                    })
                    .collect();
                cands.sort_by(|a, b| a.1.total_cmp(&b.1));
                let mut best = (0.0, f64::INFINITY);
                for &(s0, _) in cands.iter().take(4) {
                    let s = self.newton_closest(p, s0);
                    let d = self.point(s).dist(p);
                    if d < best.1 {
                        best = (s, d);
                    }
                }
                best
            }
            Shape::Pieces { pieces, breaks } => {
                let mut best = (0.0, f64::INFINITY);
                for (k, pc) in pieces.iter().enumerate() {
                    let u = pc.closest(p);
                    let d = pc.point(u).dist(p);
                    if d < best.1 {
                        let s = breaks[k] + u * (breaks[k + 1] - breaks[k]);
                        best = (s.rem_euclid(1.0), d);
                    }
                }
                best
            }
        }
    }

    fn newton_closest(&self, p: Vec2, mut s: f64) -> f64 {
        let Shape::Ellipse { center, a, b, rot } = &self.shape else {
            unreachable!()
        };
        let q = (p - *center).rotate(-rot);
        let mut th = TAU * s;
        for _ in 0..50 {
            let (sn, cs) = th.sin_cos();
            let e = Vec2::new(a * cs, b * sn) - q;
            let d1 = Vec2::new(-a * sn, b * cs);
            let d2 = Vec2::new(-a * cs, -b * sn);
            let f = e.dot(d1);
            let fp = d1.norm2() + e.dot(d2);
            let step = if fp > 0.0 { f / fp } else { f.signum() * 0.05 };
            let step = step.clamp(-0.5, 0.5);
            th -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        s = (th / TAU).rem_euclid(1.0);
        s
    }

    /// Signed distance, negative inside.
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        match &self.shape {
            Shape::Circle { center, radius } => p.dist(*center) - radius,
            Shape::Ellipse { center, a, b, rot } => {
                let (_, d) = self.closest(p);
                let q = (p - *center).rotate(-rot);
                let f = (q.x / a).powi(2) + (q.y / b).powi(2) - 1.0;
                if f < 0.0 {
                    -d
                } else {
                    d
                }
            }
            Shape::Pieces { .. } => {
                let (s, d) = self.closest(p);
                if d == 0.0 {
                    return 0.0;
                }
                let side = (p - self.point(s)).dot(self.normal(s));
                if side < 0.0 {
                    -d
                } else {
                    d
                }
            }
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.signed_distance(p) < 0.0
    }

    /// All intersections of the line `o + t d` with the curve, sorted by `t`.
    pub fn line_hits(&self, o: Vec2, d: Vec2) -> Vec<LineHit> {
        let mut raw: Vec<(f64, f64)> = Vec::new();
        match &self.shape {
            Shape::Circle { center, radius } => {
                for t in circle_line_roots(o - *center, d, *radius) {
                    let q = o + d * t - *center;
                    raw.push((t, (q.angle() / TAU).rem_euclid(1.0)));
                }
            }
            Shape::Ellipse { center, a, b, rot } => {
                let q = (o - *center).rotate(-rot);
                let e = d.rotate(-rot);
                let qs = Vec2::new(q.x / a, q.y / b);
                let es = Vec2::new(e.x / a, e.y / b);
                for t in circle_line_roots(qs, es, 1.0) {
                    let z = qs + es * t;
                    raw.push((t, (z.angle() / TAU).rem_euclid(1.0)));
                }
            }
            Shape::Pieces { pieces, breaks } => {
                let mut tmp = Vec::new();
                for (k, pc) in pieces.iter().enumerate() {
                    tmp.clear();
                    pc.line_hits(o, d, &mut tmp);
                    for &(t, u) in &tmp {
                        let s = breaks[k] + u * (breaks[k + 1] - breaks[k]);
                        raw.push((t, s.rem_euclid(1.0)));
                    }
                }
            }
        }
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        // joints between pieces report the same crossing twice
        let scale = self.length.max(1.0) * 1e-12 / d.norm();
        let mut hits: Vec<LineHit> = Vec::with_capacity(raw.len());
        for (t, s) in raw {
            if let Some(last) = hits.last() {
                if (t - last.t).abs() <= scale {
                    continue;
                }
            }
            hits.push(LineHit {
                t,
                s,
                point: o + d * t,
            });
        }
        hits
    }

    /// First intersection with `t` in `(t_min, t_max]`.
    pub fn first_hit(&self, o: Vec2, d: Vec2, t_min: f64, t_max: f64) -> Option<LineHit> {
        self.line_hits(o, d)
            .into_iter()
            .find(|h| h.t > t_min && h.t <= t_max)
    }
}

fn segments_cross(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> bool {
    let d1 = (a1 - a0).cross(b0 - a0);
    let d2 = (a1 - a0).cross(b1 - a0);
    let d3 = (b1 - b0).cross(a0 - b0);
    let d4 = (b1 - b0).cross(a1 - b0);
    // collinear samples give cross products at round-off level with either sign
    let tol = 1e-12 * ((a1 - a0).norm() + (b1 - b0).norm()).powi(2);
    let strict = |x: f64, y: f64| x.abs() > tol && y.abs() > tol && x * y < 0.0;
    strict(d1, d2) && strict(d3, d4)
}

fn build_pieces(vertices: &[Vec2], r: f64) -> Result<Shape, GeometryError> {
    let n = vertices.len();
    if n < 3 {
        return Err(GeometryError::NonSimpleCurve(
            "rounded polygon needs at least three vertices".into(),
        ));
    }
    if !(r > 0.0) {
        return Err(GeometryError::NonSimpleCurve(
            "corner radius must be positive".into(),
        ));
    }
    let mut v = vertices.to_vec();
    let area: f64 = (0..n).map(|i| v[i].cross(v[(i + 1) % n])).sum::<f64>() / 2.0;
    if area.abs() < 1e-14 {
        return Err(GeometryError::NonSimpleCurve("polygon has zero area".into()));
    }
    if area < 0.0 {
        v.reverse();
    }
    // fillet tangent points per vertex
    let mut fillets = Vec::with_capacity(n);
    for i in 0..n {
        let p = v[(i + n - 1) % n];
        let c = v[i];
        let q = v[(i + 1) % n];
        if p.dist(c) == 0.0 || q.dist(c) == 0.0 {
            return Err(GeometryError::NonSimpleCurve("repeated vertex".into()));
        }
        let u1 = (c - p).normalized();
        let u2 = (q - c).normalized();
        let turn = u1.cross(u2).atan2(u1.dot(u2));
        if turn.abs() > PI - 1e-9 {
            return Err(GeometryError::NonSimpleCurve("polygon folds back".into()));
        }
        let ell = r * (turn.abs() / 2.0).tan();
        let a = c - u1 * ell;
        let b = c + u2 * ell;
        let center = if turn >= 0.0 {
            a + u1.perp() * r
        } else {
            a - u1.perp() * r
        };
        fillets.push((a, b, center, turn, ell));
    }
    let mut pieces = Vec::with_capacity(2 * n);
    for i in 0..n {
        let (a, b, center, turn, ell) = fillets[i];
        if turn.abs() > 1e-14 {
            pieces.push(Piece::Arc {
                center,
                radius: r,
                start: (a - center).angle(),
                sweep: turn,
            });
        }
        let (na, _, _, _, nell) = fillets[(i + 1) % n];
        let edge = v[i].dist(v[(i + 1) % n]);
        if ell + nell > edge * (1.0 + 1e-12) {
            return Err(GeometryError::NonSimpleCurve(format!(
                "corner radius {r} too large for edge {i}"
            )));
        }
        if b.dist(na) > 0.0 {
            pieces.push(Piece::Segment { a: b, b: na });
        }
    }
    let total: f64 = pieces.iter().map(Piece::length).sum();
    let mut breaks = Vec::with_capacity(pieces.len() + 1);
    let mut acc = 0.0;
    for pc in &pieces {
        breaks.push(acc / total);
        acc += pc.length();
    }
    breaks.push(1.0);
    Ok(Shape::Pieces { pieces, breaks })
}
