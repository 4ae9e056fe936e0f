//! Memory kernel, its compatibility with the geometry and the interface memory operator.

use crate::geometry::{eval_b, Geometry, GeometryError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("kernel needs at least one term with positive amplitude")]
    EmptyKernel,
    #[error("term {index} has negative amplitude {value}")]
    NegativeAmplitude { index: usize, value: f64 },
    #[error("term {index} has nonpositive relaxation time {value}")]
    NonpositiveRelaxationTime { index: usize, value: f64 },
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("time grid is not uniform (step {0} deviates from {1})")]
    NonuniformTimeGrid(f64, f64),
    #[error("trace shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("memory operator is not a contraction: k0 * max b on the interface = {0}")]
    NotAContraction(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One exponential mode `amplitude * exp(-s / relaxation)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PronyTerm {
    pub amplitude: f64,
    pub relaxation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub terms: Vec<PronyTerm>,
}

/// Positive, decreasing kernel given by a finite Prony series.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryKernel {
    terms: Vec<PronyTerm>,
    k0: f64,
    c_bound: f64,
}

impl MemoryKernel {
    pub fn new(terms: Vec<PronyTerm>) -> Result<Self, KernelError> {
        for (index, t) in terms.iter().enumerate() {
            if !(t.amplitude >= 0.0) {
                return Err(KernelError::NegativeAmplitude {
                    index,
                    value: t.amplitude,
                });
            }
            if !(t.relaxation > 0.0) {
                return Err(KernelError::NonpositiveRelaxationTime {
                    index,
                    value: t.relaxation,
                });
            }
            if !t.amplitude.is_finite() || !t.relaxation.is_finite() {
                return Err(KernelError::InvalidKernel(format!("term {index} is not finite: {t:?}")));
            }
        }
        if !terms.iter().any(|t| t.amplitude > 0.0) {
            return Err(KernelError::EmptyKernel);
        }
        let k0 = terms.iter().map(|t| t.amplitude * t.relaxation).sum();
        let c_bound = terms.iter().map(|t| t.relaxation).fold(0.0, f64::max);
        Ok(Self { terms, k0, c_bound })
    }

    pub fn from_spec(spec: &KernelSpec) -> Result<Self, KernelError> {
        Self::new(spec.terms.clone())
    }

    pub fn single(amplitude: f64, relaxation: f64) -> Result<Self, KernelError> {
        Self::new(vec![PronyTerm {
            amplitude,
            relaxation,
        }])
    }

    pub fn terms(&self) -> &[PronyTerm] {
        &self.terms
    }

    /// Integral of the kernel over the half-line.
    pub fn k0(&self) -> f64 {
        self.k0
    }

    /// Constant `c` with `g + c g' <= 0`.
    pub fn c_bound(&self) -> f64 {
        self.c_bound
    }

    /// Kernel value, extended by zero to negative arguments.
    pub fn g(&self, s: f64) -> f64 {
        if s < 0.0 {
            return 0.0;
        }
        self.terms
            .iter()
            .map(|t| t.amplitude * (-s / t.relaxation).exp())
            .sum()
    }

    pub fn dg(&self, s: f64) -> f64 {
        if s < 0.0 {
            return 0.0;
        }
        self.terms
            .iter()
            .map(|t| -t.amplitude / t.relaxation * (-s / t.relaxation).exp())
            .sum()
    }

    /// `g(s_max) / g(0)`.
    pub fn tail_ratio(&self, s_max: f64) -> f64 {
        self.g(s_max) / self.g(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelGeometryCompat {
    /// `1 - k0 * max b`.
    pub l: f64,
    pub valid: bool,
    /// `k0 * max b` on the interface.
    pub contraction_bound: f64,
    /// Whether `k1 (1 - k0 b) <= k2` holds everywhere.
    pub speed_ordering: bool,
    pub diagnostics: Vec<String>,
}

pub fn check_compat(kernel: &MemoryKernel, geom: &Geometry) -> KernelGeometryCompat {
    let bmax = geom.b_max();
    let l = 1.0 - kernel.k0() * bmax;
    let inner = geom.inner();
    let n = 16 * inner.samples();
    let b_iface = (0..n)
        .map(|i| geom.b(inner.point(i as f64 / n as f64)))
        .fold(0.0, f64::max);
    let contraction_bound = kernel.k0() * b_iface;
    // k1 (1 - k0 b) is largest where b = 0
    let speed_ordering = geom.k1() <= geom.k2();
    let mut diagnostics = Vec::new();
    if l <= 0.0 {
        diagnostics.push(format!(
            "effective stiffness 1 - k0 * max b = {l:.6} is not positive"
        ));
    }
    if !speed_ordering {
        diagnostics.push(format!(
            "k1 (1 - k0 b) <= k2 fails: k1 = {}, k2 = {}",
            geom.k1(),
            geom.k2()
        ));
    }
    if contraction_bound >= 1.0 {
        diagnostics.push(format!(
            "interface memory operator bound {contraction_bound:.6} is not below 1"
        ));
    }
    KernelGeometryCompat {
        l,
        valid: l > 0.0,
        contraction_bound,
        speed_ordering,
        diagnostics,
    }
}

/// Samples of a function on `R x interface` over a uniform time grid.
///
/// `values[j * n_t + i]` is the value at boundary parameter `s[j]` and time `t0 + i dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    pub t0: f64,
    pub dt: f64,
    pub n_t: usize,
    pub s: Vec<f64>,
    pub values: Vec<f64>,
}

impl BoundaryTrace {
    pub fn zeros(t0: f64, dt: f64, n_t: usize, s: Vec<f64>) -> Self {
        let values = vec![0.0; n_t * s.len()];
        Self {
            t0,
            dt,
            n_t,
            s,
            values,
        }
    }

    /// Builds a trace from explicit sample times, checking they are uniformly spaced.
    pub fn from_samples(times: &[f64], s: Vec<f64>, values: Vec<f64>) -> Result<Self, KernelError> {
        if times.len() < 2 {
            return Err(KernelError::ShapeMismatch("need at least two times".into()));
        }
        if values.len() != times.len() * s.len() {
            return Err(KernelError::ShapeMismatch(format!(
                "{} values for {} times x {} points",
                values.len(),
                times.len(),
                s.len()
            )));
        }
        let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        if !(dt > 0.0) {
            return Err(KernelError::NonuniformTimeGrid(dt, dt));
        }
        for w in times.windows(2) {
            let step = w[1] - w[0];
            if (step - dt).abs() > 1e-9 * dt {
                return Err(KernelError::NonuniformTimeGrid(step, dt));
            }
        }
        Ok(Self {
            t0: times[0],
            dt,
            n_t: times.len(),
            s,
            values,
        })
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_t).map(|i| self.t0 + i as f64 * self.dt).collect()
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.n_t..(j + 1) * self.n_t]
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// One `t,s,value` row per sample, boundary point by boundary point.
    pub fn write_csv(&self, out: impl std::io::Write) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "s", "value"])?;
        for (j, &s) in self.s.iter().enumerate() {
            for (i, v) in self.row(j).iter().enumerate() {
                let t = self.t0 + i as f64 * self.dt;
                w.write_record(&[t.to_string(), s.to_string(), v.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    fn same_shape(&self, o: &BoundaryTrace) -> bool {
        self.n_t == o.n_t && self.s.len() == o.s.len()
    }
}

fn boundary_b(geom: &Geometry, s: &[f64]) -> Result<Vec<f64>, KernelError> {
    s.iter()
        .map(|&sj| Ok(eval_b(geom, geom.inner().point(sj))?.0))
        .collect()
}

fn kernel_table(kernel: &MemoryKernel, dt: f64, n: usize) -> Vec<f64> {
    (0..n).map(|m| kernel.g(m as f64 * dt)).collect()
}

// Trapezoid weight of sample m in the integral over [t0, t_i].
#[inline]
fn trap_w(i: usize, m: usize) -> f64 {
    if i == 0 {
        0.0
    } else if m == 0 || m == i {
        0.5
    } else {
        1.0
    }
}

fn convolve(g: &[f64], b: f64, dt: f64, f: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for m in 0..=i {
            acc += trap_w(i, m) * g[i - m] * f[m];
        }
        *o = b * dt * acc;
    }
}

fn convolve_adjoint(g: &[f64], b: f64, dt: f64, y: &[f64], out: &mut [f64]) {
    let n = y.len();
    for (m, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in m..n {
            acc += trap_w(i, m) * g[i - m] * y[i];
        }
        *o = b * dt * acc;
    }
}

/// Applies the interface memory operator `f -> b(x) * (g * f)(t)` by trapezoidal quadrature.
/// Vanishes identically unless the damping reaches the interface.
pub fn apply_g(
    kernel: &MemoryKernel,
    geom: &Geometry,
    f: &BoundaryTrace,
) -> Result<BoundaryTrace, KernelError> {
    let bs = boundary_b(geom, &f.s)?;
    Ok(apply_with(kernel, &bs, f, false))
}

/// Transpose of [`apply_g`] with respect to the Euclidean inner product on samples.
pub fn apply_g_adjoint(
    kernel: &MemoryKernel,
    geom: &Geometry,
    f: &BoundaryTrace,
) -> Result<BoundaryTrace, KernelError> {
    let bs = boundary_b(geom, &f.s)?;
    Ok(apply_with(kernel, &bs, f, true))
}

fn apply_with(kernel: &MemoryKernel, bs: &[f64], f: &BoundaryTrace, adjoint: bool) -> BoundaryTrace {
    let g = kernel_table(kernel, f.dt, f.n_t);
    let mut out = BoundaryTrace::zeros(f.t0, f.dt, f.n_t, f.s.clone());
    for (j, &b) in bs.iter().enumerate() {
        if b == 0.0 {
            continue;
        }
        let src = f.row(j);
        let dst = &mut out.values[j * f.n_t..(j + 1) * f.n_t];
        if adjoint {
            convolve_adjoint(&g, b, f.dt, src, dst);
        } else {
            convolve(&g, b, f.dt, src, dst);
        }
    }
    out
}

/// Power-iteration estimate of the operator 2-norm of `G` on traces shaped like `template`.
pub fn estimate_g_norm(
    kernel: &MemoryKernel,
    geom: &Geometry,
    template: &BoundaryTrace,
    iterations: usize,
    seed: u64,
) -> Result<f64, KernelError> {
    let bs = boundary_b(geom, &template.s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = template.clone();
    for v in x.values.iter_mut() {
        *v = rng.gen_range(-1.0..1.0);
    }
    let mut est = 0.0;
    for _ in 0..iterations {
        let nx = x.norm();
        if nx == 0.0 {
            return Ok(0.0);
        }
        x.values.iter_mut().for_each(|v| *v /= nx);
        let gx = apply_with(kernel, &bs, &x, false);
        est = gx.norm();
        x = apply_with(kernel, &bs, &gx, true);
    }
    Ok(est)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeumannSolution {
    pub x: BoundaryTrace,
    pub terms: usize,
    /// `||(I - G) x - y|| / ||y||`.
    pub residual: f64,
}

/// Solves `(I - G) x = y` by the Neumann series, stopping once the relative residual is below `tol`.
pub fn invert_i_minus_g(
    kernel: &MemoryKernel,
    geom: &Geometry,
    y: &BoundaryTrace,
    tol: f64,
) -> Result<NeumannSolution, KernelError> {
    let compat = check_compat(kernel, geom);
    if compat.contraction_bound >= 1.0 {
        return Err(KernelError::NotAContraction(compat.contraction_bound));
    }
    let bs = boundary_b(geom, &y.s)?;
    let ny = y.norm();
    let mut x = y.clone();
    if ny == 0.0 {
        return Ok(NeumannSolution {
            x,
            terms: 1,
            residual: 0.0,
        });
    }
    let mut term = y.clone();
    let mut terms = 1;
    let max_terms = 100_000;
    loop {
        term = apply_with(kernel, &bs, &term, false);
        // (I - G) S_K - y = -G^{K+1} y
        let residual = term.norm() / ny;
        if residual <= tol || terms >= max_terms {
            return Ok(NeumannSolution { x, terms, residual });
        }
        for (a, b) in x.values.iter_mut().zip(&term.values) {
            *a += b;
        }
        terms += 1;
    }
}

/// `||(I - G) x - y|| / ||y||`, computed directly.
pub fn neumann_residual(
    kernel: &MemoryKernel,
    geom: &Geometry,
    x: &BoundaryTrace,
    y: &BoundaryTrace,
) -> Result<f64, KernelError> {
    if !x.same_shape(y) {
        return Err(KernelError::ShapeMismatch("x and y differ".into()));
    }
    let gx = apply_g(kernel, geom, x)?;
    let num: f64 = x
        .values
        .iter()
        .zip(&gx.values)
        .zip(&y.values)
        .map(|((a, g), b)| (a - g - b).powi(2))
        .sum();
    Ok(num.sqrt() / y.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k0_and_bound() {
        let k = MemoryKernel::new(vec![
            PronyTerm {
                amplitude: 1.0,
                relaxation: 0.5,
            },
            PronyTerm {
                amplitude: 0.2,
                relaxation: 2.0,
            },
        ])
        .unwrap();
        assert_eq!(k.k0(), 0.5 + 0.4);
        assert_eq!(k.c_bound(), 2.0);
        assert_eq!(k.g(-1.0), 0.0);
        assert!((k.g(0.0) - 1.2).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_terms() {
        assert_eq!(MemoryKernel::new(vec![]), Err(KernelError::EmptyKernel));
        assert_eq!(MemoryKernel::single(0.0, 1.0), Err(KernelError::EmptyKernel));
        assert!(matches!(
            MemoryKernel::single(-0.1, 1.0),
            Err(KernelError::NegativeAmplitude { index: 0, .. })
        ));
        assert!(matches!(
            MemoryKernel::single(1.0, 0.0),
            Err(KernelError::NonpositiveRelaxationTime { index: 0, .. })
        ));
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let k = MemoryKernel::single(2.0, 0.3).unwrap();
        let h = 1e-6;
        for &s in &[0.1, 0.5, 2.0] {
            let fd = (k.g(s + h) - k.g(s - h)) / (2.0 * h);
            assert!((fd - k.dg(s)).abs() < 1e-7);
        }
    }

    #[test]
    fn nonuniform_grid_rejected() {
        let r = BoundaryTrace::from_samples(&[0.0, 0.1, 0.25], vec![0.0], vec![0.0; 3]);
        assert!(matches!(r, Err(KernelError::NonuniformTimeGrid(..))));
    }

    #[test]
    fn adjoint_is_transpose() {
        let k = MemoryKernel::single(1.0, 0.4).unwrap();
        let g = kernel_table(&k, 0.05, 40);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f: Vec<f64> = (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut gf = vec![0.0; 40];
        let mut gty = vec![0.0; 40];
        convolve(&g, 0.7, 0.05, &f, &mut gf);
        convolve_adjoint(&g, 0.7, 0.05, &y, &mut gty);
        let a: f64 = gf.iter().zip(&y).map(|(p, q)| p * q).sum();
        let b: f64 = f.iter().zip(&gty).map(|(p, q)| p * q).sum();
        assert!((a - b).abs() < 1e-14);
    }
}
