//! Decay-rate fitting, observability ratios and the invisible-mode probe.

use crate::geometry::{build_geometry, DampingSpec, Geometry, GeometryError};
use crate::kernel::MemoryKernel;
use crate::solver::{
    Discretization, EnergyTrace, FieldSpec, GridSpec, InitialData, RunOptions, Solver, SolverError,
};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ObservabilityError {
    #[error("energy is not positive at t = {0}")]
    NonpositiveEnergy(f64),
    #[error("fit window [{0}, {1}] holds fewer than two samples")]
    EmptyWindow(f64, f64),
    #[error("eigensolver did not converge: {0}")]
    EigensolverFailure(String),
    #[error("invalid horizon {0}")]
    InvalidHorizon(f64),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub lambda: f64,
    /// `exp(intercept) / E(0)`.
    pub c: f64,
    /// `exp(intercept)`.
    pub prefactor: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

/// Least-squares line through `(t, ln E)` over `window`, by default the second half of the run.
pub fn fit_decay(
    trace: &EnergyTrace,
    window: Option<(f64, f64)>,
) -> Result<DecayFit, ObservabilityError> {
    let t_last = trace.times.last().copied().unwrap_or(0.0);
    let t_first = trace.times.first().copied().unwrap_or(0.0);
    let window = window.unwrap_or((0.5 * (t_first + t_last), t_last));
    let e0 = trace.energy.first().copied().unwrap_or(0.0);
    if !(e0 > 0.0) {
        return Err(ObservabilityError::NonpositiveEnergy(t_first));
    }
    let mut pts = Vec::new();
    for (&t, &e) in trace.times.iter().zip(&trace.energy) {
        if t >= window.0 - 1e-12 && t <= window.1 + 1e-12 {
            if !(e > 0.0) {
                return Err(ObservabilityError::NonpositiveEnergy(t));
            }
            pts.push((t, e.ln()));
        }
    }
    if pts.len() < 2 {
        return Err(ObservabilityError::EmptyWindow(window.0, window.1));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    // a flat log-energy is fitted exactly
    let flat = 1e-20 * pts.iter().map(|p| p.1 * p.1).sum::<f64>().max(n);
    let r_squared = if ss_tot > flat {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let prefactor = intercept.exp();
    Ok(DecayFit {
        lambda: -slope,
        c: prefactor / e0,
        prefactor,
        r_squared,
        window,
    })
}

/// Random band-limited members drawn from one recorded seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub members: usize,
    pub seed: u64,
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default)]
    pub max_wavenumber: Option<f64>,
}

fn default_modes() -> usize {
    64
}

impl EnsembleSpec {
    pub fn data(&self) -> Vec<InitialData> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.members)
            .map(|_| {
                InitialData::new(
                    FieldSpec::RandomBandLimited {
                        seed: rng.next_u64(),
                        modes: self.modes,
                        max_wavenumber: self.max_wavenumber,
                        min_wavenumber: 0.0,
                        taper: 0.15,
                        amplitude: 1.0,
                    },
                    FieldSpec::Zero,
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObsEstimate {
    pub horizon: f64,
    /// `E(0) / D(0, T)` per included member.
    pub ratios: Vec<f64>,
    pub c_obs: f64,
    pub ensemble_size: usize,
    /// Members with zero initial energy.
    pub excluded: Vec<usize>,
    /// Members with `D < 1e-14 E(0)`.
    pub near_invisible: Vec<usize>,
}

/// Default horizon `4 diam / sqrt(k1)`.
pub fn default_horizon(geom: &Geometry) -> f64 {
    4.0 * geom.diameter() / geom.k1().sqrt()
}

/// Runs every member to `horizon` and collects `E(0) / D(0, T)`.
pub fn estimate_observability(
    geom: &Geometry,
    kernel: &MemoryKernel,
    grid: &GridSpec,
    horizon: f64,
    ensemble: &[InitialData],
) -> Result<ObsEstimate, ObservabilityError> {
    if !(horizon > 0.0) {
        return Err(ObservabilityError::InvalidHorizon(horizon));
    }
    let grid = GridSpec {
        t_end: horizon,
        ..grid.clone()
    };
    let results = ensemble
        .par_iter()
        .map(|data| {
            let mut s = Solver::new(geom, kernel, &grid, data)?;
            let out = s.run(&RunOptions::default())?;
            let e0 = out.trace.energy[0];
            let d = *out.trace.damping.last().expect("trace has samples");
            Ok((e0, d))
        })
        .collect::<Result<Vec<_>, SolverError>>()?;
    let mut ratios = Vec::new();
    let mut excluded = Vec::new();
    let mut near_invisible = Vec::new();
    for (i, (e0, d)) in results.into_iter().enumerate() {
        if !(e0 > 0.0) {
            excluded.push(i);
        } else if d < 1e-14 * e0 {
            near_invisible.push(i);
        } else {
            ratios.push(e0 / d);
        }
    }
    Ok(ObsEstimate {
        horizon,
        c_obs: ratios.iter().copied().fold(0.0, f64::max),
        ensemble_size: ensemble.len(),
        ratios,
        excluded,
        near_invisible,
    })
}

/// Lowest eigenpairs of the undamped stiffness, `A u = lambda M u`, by block inverse iteration.
#[derive(Debug, Clone)]
pub struct Eigenmodes {
    pub values: Vec<f64>,
    /// Mass-normalized vectors on the active nodes.
    pub vectors: Vec<Vec<f64>>,
    pub iterations: usize,
}

fn cg(disc: &Discretization, rhs: &[f64], x: &mut [f64], tol: f64) -> Result<(), ObservabilityError> {
    let n = rhs.len();
    let mut ax = vec![0.0; n];
    disc.stiffness(x, &mut ax);
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let target = tol * tol * rhs.iter().map(|v| v * v).sum::<f64>();
    let mut ap = vec![0.0; n];
    for _ in 0..10 * n {
        if rr <= target {
            return Ok(());
        }
        disc.stiffness(&p, &mut ap);
        let alpha = rr / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(ObservabilityError::EigensolverFailure("conjugate gradients stalled".into()))
}

fn orthonormalize(vs: &mut [Vec<f64>]) -> Result<(), ObservabilityError> {
    for i in 0..vs.len() {
        for _ in 0..2 {
            for j in 0..i {
                let d: f64 = vs[i].iter().zip(&vs[j]).map(|(a, b)| a * b).sum();
                let (head, tail) = vs.split_at_mut(i);
                for (a, b) in tail[0].iter_mut().zip(&head[j]) {
                    *a -= d * b;
                }
            }
        }
        let nrm = vs[i].iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(nrm > 1e-300) {
            return Err(ObservabilityError::EigensolverFailure("block collapsed".into()));
        }
        vs[i].iter_mut().for_each(|v| *v /= nrm);
    }
    Ok(())
}

/// Lowest `count` modes of the discretized undamped operator on `disc`.
pub fn lowest_modes(disc: &Discretization, count: usize, seed: u64) -> Result<Eigenmodes, ObservabilityError> {
    let n = disc.n_active();
    let p = (count + 6).min(n);
    if count == 0 || count > n {
        return Err(ObservabilityError::EigensolverFailure(format!(
            "cannot extract {count} modes from {n} nodes"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut block: Vec<Vec<f64>> = (0..p)
        .map(|_| {
            (0..n)
                .map(|_| (rng.next_u64() as f64 / u64::MAX as f64) - 0.5)
                .collect()
        })
        .collect();
    orthonormalize(&mut block)?;
    let m = disc.mass();
    let mut prev: Option<Vec<f64>> = None;
    let mut ax = vec![0.0; n];
    for it in 1..=200 {
        let mut next = Vec::with_capacity(p);
        for v in &block {
            let mut y = v.clone();
            cg(disc, v, &mut y, 1e-12)?;
            next.push(y);
        }
        orthonormalize(&mut next)?;
        // Rayleigh-Ritz on the span
        let av: Vec<Vec<f64>> = next
            .iter()
            .map(|v| {
                disc.stiffness(v, &mut ax);
                ax.clone()
            })
            .collect();
        let h = DMatrix::from_fn(p, p, |i, j| {
            next[i].iter().zip(&av[j]).map(|(a, b)| a * b).sum::<f64>()
        });
        let eig = SymmetricEigen::new(0.5 * (&h + h.transpose()));
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        block = order
            .iter()
            .map(|&c| {
                let mut v = vec![0.0; n];
                for (i, b) in next.iter().enumerate() {
                    let coef = eig.eigenvectors[(i, c)];
                    for (x, y) in v.iter_mut().zip(b) {
                        *x += coef * y;
                    }
                }
                v
            })
            .collect();
        let vals: Vec<f64> = order.iter().take(count).map(|&c| eig.eigenvalues[c] / m).collect();
        if let Some(pv) = &prev {
            let change = vals
                .iter()
                .zip(pv)
                .map(|(a, b)| ((a - b) / a).abs())
                .fold(0.0, f64::max);
            let residual = block
                .iter()
                .take(count)
                .zip(&vals)
                .map(|(v, lam)| {
                    disc.stiffness(v, &mut ax);
                    let scale = ax.iter().map(|a| a * a).sum::<f64>().sqrt();
                    let r = ax
                        .iter()
                        .zip(v)
                        .map(|(a, x)| (a - lam * m * x).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    r / scale
                })
                .fold(0.0, f64::max);
            if change < 1e-11 && residual < 1e-9 {
                let vectors = block
                    .iter()
                    .take(count)
                    .map(|v| v.iter().map(|x| x / m.sqrt()).collect())
                    .collect();
                return Ok(Eigenmodes {
                    values: vals,
                    vectors,
                    iterations: it,
                });
            }
        }
        prev = Some(vals);
    }
    Err(ObservabilityError::EigensolverFailure(
        "block iteration did not settle in 200 sweeps".into(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeProbe {
    /// Squared angular frequency.
    pub eigenvalue: f64,
    /// `D(0, T) / E(0)` starting from the mode at rest.
    pub visibility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub horizon: f64,
    pub modes: Vec<ModeProbe>,
    pub min_visibility: f64,
    pub threshold: f64,
    pub all_visible: bool,
}

/// Starts the damped solver from each of the lowest undamped modes and reports how much of its
/// energy the damping sees by time `horizon`.
pub fn invisible_probe(
    geom: &Geometry,
    kernel: &MemoryKernel,
    grid: &GridSpec,
    count: usize,
    horizon: f64,
    threshold: f64,
) -> Result<ProbeReport, ObservabilityError> {
    if !(horizon > 0.0) {
        return Err(ObservabilityError::InvalidHorizon(horizon));
    }
    let grid = GridSpec {
        t_end: horizon,
        ..grid.clone()
    };
    let mut undamped = geom.descriptor().clone();
    undamped.damping = DampingSpec::None;
    let bare = build_geometry(&undamped)?;
    let bare_disc = Discretization::new(&bare, kernel, &grid)?;
    let modes = lowest_modes(&bare_disc, count, 0x5eed)?;
    let probes = modes
        .values
        .par_iter()
        .zip(&modes.vectors)
        .map(|(&lambda, v)| {
            let data = InitialData::new(FieldSpec::Nodal(v.clone()), FieldSpec::Zero);
            let mut s = Solver::new(geom, kernel, &grid, &data)?;
            let out = s.run(&RunOptions::default())?;
            let e0 = out.trace.energy[0];
            let d = *out.trace.damping.last().expect("trace has samples");
            Ok(ModeProbe {
                eigenvalue: lambda,
                visibility: d / e0,
            })
        })
        .collect::<Result<Vec<_>, SolverError>>()?;
    let min_visibility = probes.iter().map(|p| p.visibility).fold(f64::INFINITY, f64::min);
    Ok(ProbeReport {
        horizon,
        all_visible: min_visibility >= threshold,
        modes: probes,
        min_visibility,
        threshold,
    })
}
