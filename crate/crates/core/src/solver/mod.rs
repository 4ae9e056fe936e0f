//! Time-domain solver for the coupled system on a Cartesian node grid.
//!
//! One displacement field covers both media with a piecewise coefficient; the divergence form
//! with harmonic face averages carries the transmission conditions. The history variable lives
//! on a uniform `s` grid over the nodes touched by the damping.

mod data;
mod grid;
mod prony;

pub use data::{FieldFn, FieldSpec, InitialData, PastHistory};
pub use grid::Discretization;
pub use prony::PronyAux;

use crate::geometry::{Geometry, Vec2};
use crate::kernel::MemoryKernel;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("time step {dt} exceeds the stability limit {limit}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("history cutoff {s_max} is shorter than ten relaxation times ({required})")]
    HistoryTooShort { s_max: f64, required: f64 },
    #[error("history step {ds} is smaller than the time step {dt}")]
    HistoryCfl { ds: f64, dt: f64 },
    #[error("damping reaches a face next to the inclusion")]
    InterfaceDamping,
    #[error("initial displacements differ by {0} across the interface")]
    InterfaceMismatch(f64),
    #[error("nodal data has {got} values, expected {expected}")]
    NodalLength { got: usize, expected: usize },
    #[error("non-finite values at t = {0}")]
    NanDetected(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn default_cfl() -> f64 {
    0.5
}

/// Resolution and horizon. Unset values are derived from the geometry and kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    /// Time step; defaults to just below the stability limit.
    #[serde(default)]
    pub dt: Option<f64>,
    /// History cutoff; defaults to ten times the longest relaxation time.
    #[serde(default)]
    pub s_max: Option<f64>,
    /// History samples; defaults to the largest count keeping `ds >= dt`.
    #[serde(default)]
    pub ns: Option<usize>,
    pub t_end: f64,
    /// Number of energy samples over the run.
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, t_end: f64) -> Self {
        Self {
            nx,
            ny,
            dt: None,
            s_max: None,
            ns: None,
            t_end,
            samples: None,
            cfl_safety: default_cfl(),
        }
    }

    pub fn square(n: usize, t_end: f64) -> Self {
        Self::new(n, n, t_end)
    }
}

/// Displacement, velocity and history at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub w: Vec<f64>,
    pub w_t: Vec<f64>,
    /// `eta[p * (ns + 1) + k]` is the history at patch node `p` and `s = k ds`.
    pub eta: Vec<f64>,
    pub t: f64,
}

/// Energy split at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySample {
    pub t: f64,
    pub energy: f64,
    pub kinetic: f64,
    pub elastic: f64,
    /// `-dt^2/8 |a|^2`, the second-order term that makes the undamped scheme conservative.
    pub correction: f64,
    pub memory: f64,
    /// Instantaneous damping integrand `k1 int (-g') int b |grad eta|^2`.
    pub damping_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    /// Cumulative damping integral from the start.
    pub damping: Vec<f64>,
    /// `E(t) - E(0) + D(t) / 2`.
    pub identity_residual: Vec<f64>,
    /// Largest relative gap between the grid history and the exact exponential modes.
    pub prony_discrepancy: Option<f64>,
    /// `g(s_max) / g(0)`.
    pub tail_ratio: f64,
    pub dt: f64,
    pub ds: f64,
}

impl EnergyTrace {
    /// `max |residual| / t_end`.
    pub fn residual_rate(&self) -> f64 {
        let t = self.times.last().copied().unwrap_or(0.0) - self.times[0];
        if t <= 0.0 {
            return 0.0;
        }
        self.identity_residual.iter().fold(0.0f64, |m, r| m.max(r.abs())) / t
    }

    /// Largest increase of `E` between samples beyond the change in the residual. Zero when
    /// the energy is nonincreasing up to the measured residual.
    pub fn max_excess_increase(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 1..self.times.len() {
            let de = self.energy[i] - self.energy[i - 1];
            let dr = (self.identity_residual[i] - self.identity_residual[i - 1]).abs();
            worst = worst.max(de - dr);
        }
        worst
    }

    pub fn write_csv(&self, out: impl Write) -> Result<(), SolverError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "E", "D", "identity_residual"])
            .map_err(csv_io)?;
        for i in 0..self.times.len() {
            w.write_record(&[
                self.times[i].to_string(),
                self.energy[i].to_string(),
                self.damping[i].to_string(),
                self.identity_residual[i].to_string(),
            ])
            .map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_io(e: csv::Error) -> SolverError {
    SolverError::Io(std::io::Error::other(e))
}

/// Field values on the full node grid at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub nx: usize,
    pub ny: usize,
    pub origin: Vec2,
    pub hx: f64,
    pub hy: f64,
    #[serde(skip)]
    pub values: Vec<f64>,
}

impl Snapshot {
    /// Writes `<stem>.bin` (little-endian f64, row-major in `y`) and `<stem>.json`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(), SolverError> {
        let mut bytes = Vec::with_capacity(8 * self.values.len());
        for v in &self.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(dir.join(format!("{stem}.bin")), bytes)?;
        let header = serde_json::json!({
            "t": self.t,
            "nx": self.nx + 1,
            "ny": self.ny + 1,
            "origin": self.origin,
            "hx": self.hx,
            "hy": self.hy,
            "dtype": "f64le",
            "layout": "row-major, x fastest",
        });
        std::fs::write(
            dir.join(format!("{stem}.json")),
            serde_json::to_string_pretty(&header).map_err(|e| std::io::Error::other(e))?,
        )?;
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub snapshot_times: Vec<f64>,
    pub prony_check: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: EnergyTrace,
    pub snapshots: Vec<Snapshot>,
    pub state: FieldState,
}

/// Explicit integrator: velocity Verlet for the displacement, upwind transport for the history.
#[derive(Debug, Clone)]
pub struct Solver {
    disc: Discretization,
    k1: f64,
    /// `q_k g(s_k)` and `q_k (-g'(s_k))` for `k = 0..=ns`.
    gw: Vec<f64>,
    dgw: Vec<f64>,
    nu: f64,
    state: FieldState,
    accel: Vec<f64>,
    /// Patch-wise memory sum `sum_k q_k g_k eta_k`.
    hist: Vec<f64>,
    tail_ratio: f64,
    prony: Option<PronyAux>,
    scratch_b: Vec<f64>,
}

impl Solver {
    /// Discretizes the problem and samples the initial data.
    pub fn new(
        geom: &Geometry,
        kernel: &MemoryKernel,
        grid: &GridSpec,
        data: &InitialData,
    ) -> Result<Self, SolverError> {
        let disc = Discretization::new(geom, kernel, grid)?;
        let state = init_fields(geom, &disc, data)?;
        Ok(Self::from_parts(geom, kernel, disc, state))
    }

    /// Starts from an explicit state on an existing discretization.
    pub fn from_parts(
        geom: &Geometry,
        kernel: &MemoryKernel,
        disc: Discretization,
        state: FieldState,
    ) -> Self {
        let ns = disc.ns;
        let ds = disc.ds;
        let q = |k: usize| if k == 0 || k == ns { 0.5 * ds } else { ds };
        let gw = (0..=ns).map(|k| q(k) * kernel.g(k as f64 * ds)).collect();
        let dgw = (0..=ns).map(|k| -q(k) * kernel.dg(k as f64 * ds)).collect();
        let n = disc.n_active();
        let np = disc.n_patch();
        let mut s = Self {
            nu: disc.dt / disc.ds,
            k1: geom.k1(),
            gw,
            dgw,
            accel: vec![0.0; n],
            hist: vec![0.0; np],
            tail_ratio: kernel.tail_ratio(disc.s_max()),
            prony: None,
            scratch_b: vec![0.0; np],
            state,
            disc,
        };
        s.refresh();
        s
    }

    /// Recomputes cached quantities after the state was changed from outside.
    pub fn refresh(&mut self) {
        let stride = self.disc.ns + 1;
        for (p, h) in self.hist.iter_mut().enumerate() {
            let eta = &self.state.eta[p * stride..(p + 1) * stride];
            *h = eta.iter().zip(&self.gw).map(|(e, g)| e * g).sum();
        }
        self.update_accel();
    }

    pub fn enable_prony_check(&mut self, kernel: &MemoryKernel) {
        self.prony = Some(PronyAux::new(kernel, self.disc.n_patch()));
    }

    pub fn prony(&self) -> Option<&PronyAux> {
        self.prony.as_ref()
    }

    pub fn disc(&self) -> &Discretization {
        &self.disc
    }

    pub fn state(&self) -> &FieldState {
        &self.state
    }

    /// Mutable access; call [`Solver::refresh`] afterwards.
    pub fn state_mut(&mut self) -> &mut FieldState {
        &mut self.state
    }

    /// Patch-wise `sum_k q_k g(s_k) eta(s_k)`.
    pub fn memory_sum(&self) -> &[f64] {
        &self.hist
    }

    fn update_accel(&mut self) {
        let d = &self.disc;
        d.stiffness(&self.state.w, &mut self.accel);
        if !self.hist.is_empty() {
            Discretization::apply(&d.b_faces, &self.hist, &mut self.scratch_b);
            for (pp, &p) in d.patch.iter().enumerate() {
                self.accel[p] += self.k1 * self.scratch_b[pp];
            }
        }
        let m = d.mass();
        self.accel.iter_mut().for_each(|a| *a = -*a / m);
    }

    /// Advances one time step.
    pub fn step(&mut self) {
        let dt = self.disc.dt;
        let half = 0.5 * dt;
        let st = &mut self.state;
        for ((v, w), a) in st.w_t.iter_mut().zip(st.w.iter_mut()).zip(&self.accel) {
            *v += half * a;
            *w += dt * *v;
        }
        let stride = self.disc.ns + 1;
        let nu = self.nu;
        for (pp, &p) in self.disc.patch.iter().enumerate() {
            let src = dt * st.w_t[p];
            let eta = &mut st.eta[pp * stride..(pp + 1) * stride];
            let mut h = 0.0;
            for k in (1..stride).rev() {
                let e = (1.0 - nu) * eta[k] + nu * eta[k - 1] + src;
                eta[k] = e;
                h += self.gw[k] * e;
            }
            eta[0] = 0.0;
            self.hist[pp] = h;
        }
        if let Some(pr) = &mut self.prony {
            let v: Vec<f64> = self.disc.patch.iter().map(|&p| st.w_t[p]).collect();
            pr.advance(&v, dt);
        }
        st.t += dt;
        self.update_accel();
        let st = &mut self.state;
        for (v, a) in st.w_t.iter_mut().zip(&self.accel) {
            *v += half * a;
        }
    }

    /// Energy at the current time, including the `-dt^2/8 |a|^2` correction under which the
    /// undamped scheme conserves it exactly.
    pub fn energy(&self) -> EnergySample {
        let d = &self.disc;
        let m = d.mass();
        let dt = d.dt;
        let st = &self.state;
        let kinetic = 0.5 * m * st.w_t.iter().map(|v| v * v).sum::<f64>();
        let correction = -0.125 * m * dt * dt * self.accel.iter().map(|a| a * a).sum::<f64>();
        let elastic = 0.5 * d.elastic_form(&st.w);
        let (mem, rate) = self.history_forms();
        EnergySample {
            t: st.t,
            energy: kinetic + elastic + correction + 0.5 * self.k1 * mem,
            kinetic,
            elastic,
            correction,
            memory: 0.5 * self.k1 * mem,
            damping_rate: self.k1 * rate,
        }
    }

    /// `sum_k q_k g_k a_b(eta_k)` and `sum_k q_k (-g'_k) a_b(eta_k)`.
    fn history_forms(&self) -> (f64, f64) {
        let stride = self.disc.ns + 1;
        let eta = &self.state.eta;
        let mut mem = 0.0;
        let mut rate = 0.0;
        for f in &self.disc.b_faces {
            let a = &eta[f.p * stride..(f.p + 1) * stride];
            let (mut sm, mut sr) = (0.0, 0.0);
            match f.q {
                Some(q) => {
                    let b = &eta[q * stride..(q + 1) * stride];
                    for k in 1..stride {
                        let d = a[k] - b[k];
                        let d2 = d * d;
                        sm += self.gw[k] * d2;
                        sr += self.dgw[k] * d2;
                    }
                }
                None => {
                    for k in 1..stride {
                        let d2 = a[k] * a[k];
                        sm += self.gw[k] * d2;
                        sr += self.dgw[k] * d2;
                    }
                }
            }
            mem += f.coef * sm;
            rate += f.coef * sr;
        }
        (mem, rate)
    }

    pub fn snapshot(&self) -> Snapshot {
        let d = &self.disc;
        Snapshot {
            t: self.state.t,
            nx: d.nx,
            ny: d.ny,
            origin: d.origin,
            hx: d.hx,
            hy: d.hy,
            values: d.to_grid(&self.state.w),
        }
    }

    /// Integrates to the end of the grid horizon, recording energy and damping.
    pub fn run(&mut self, opts: &RunOptions) -> Result<RunOutput, SolverError> {
        let n_steps = self.disc.n_steps;
        let every = self.disc.sample_every;
        let dt = self.disc.dt;
        let mut trace = EnergyTrace {
            times: Vec::new(),
            energy: Vec::new(),
            damping: Vec::new(),
            identity_residual: Vec::new(),
            prony_discrepancy: None,
            tail_ratio: self.tail_ratio,
            dt,
            ds: self.disc.ds,
        };
        let mut snaps = Vec::new();
        let mut pending: Vec<f64> = opts.snapshot_times.clone();
        pending.sort_by(f64::total_cmp);
        pending.reverse();
        let take_snaps = |s: &Self, snaps: &mut Vec<Snapshot>, pending: &mut Vec<f64>| {
            while let Some(&ts) = pending.last() {
                if ts <= s.state.t + 0.5 * dt {
                    snaps.push(s.snapshot());
                    pending.pop();
                } else {
                    break;
                }
            }
        };
        let mut e = self.energy();
        let e0 = e.energy;
        let mut dsum = 0.0;
        let mut worst_prony = 0.0f64;
        let record = |trace: &mut EnergyTrace, e: &EnergySample, dsum: f64| {
            trace.times.push(e.t);
            trace.energy.push(e.energy);
            trace.damping.push(dsum);
            trace.identity_residual.push(e.energy - e0 + 0.5 * dsum);
        };
        record(&mut trace, &e, 0.0);
        take_snaps(self, &mut snaps, &mut pending);
        for n in 1..=n_steps {
            self.step();
            let next = self.energy();
            dsum += 0.5 * dt * (e.damping_rate + next.damping_rate);
            e = next;
            if n % every == 0 || n == n_steps {
                if !e.energy.is_finite() {
                    return Err(SolverError::NanDetected(e.t));
                }
                record(&mut trace, &e, dsum);
                if let Some(pr) = &self.prony {
                    worst_prony = worst_prony.max(pr.discrepancy(&self.hist));
                }
            }
            take_snaps(self, &mut snaps, &mut pending);
        }
        if self.prony.is_some() {
            trace.prony_discrepancy = Some(worst_prony);
        }
        Ok(RunOutput {
            trace,
            snapshots: snaps,
            state: self.state.clone(),
        })
    }
}

fn init_fields(
    geom: &Geometry,
    disc: &Discretization,
    data: &InitialData,
) -> Result<FieldState, SolverError> {
    let n = disc.n_active();
    for f in [
        Some(&data.displacement),
        Some(&data.velocity),
        data.inclusion_displacement.as_ref(),
        data.inclusion_velocity.as_ref(),
    ]
    .into_iter()
    .flatten()
    {
        if let FieldSpec::Nodal(v) = f {
            if v.len() != n {
                return Err(SolverError::NodalLength {
                    got: v.len(),
                    expected: n,
                });
            }
        }
    }
    let mut w = data.displacement.sample(geom, disc);
    let mut w_t = data.velocity.sample(geom, disc);
    let incl = disc.in_inclusion();
    if let Some(f) = &data.inclusion_displacement {
        // Continuity across the interface, checked on the curve itself.
        let inner = geom.inner();
        let m = 4 * ((inner.length() / disc.hx.min(disc.hy)).ceil() as usize).max(16);
        let gap = (0..m)
            .map(|i| {
                let x = inner.point(i as f64 / m as f64);
                (f.eval(x) - data.displacement.eval(x)).abs()
            })
            .fold(0.0, f64::max);
        if gap > 1e-8 {
            return Err(SolverError::InterfaceMismatch(gap));
        }
        let v = f.sample(geom, disc);
        for p in 0..n {
            if incl[p] {
                w[p] = v[p];
            }
        }
    }
    if let Some(f) = &data.inclusion_velocity {
        let v = f.sample(geom, disc);
        for p in 0..n {
            if incl[p] {
                w_t[p] = v[p];
            }
        }
    }
    let stride = disc.ns + 1;
    let mut eta = vec![0.0; disc.n_patch() * stride];
    if data.history == PastHistory::Rest {
        for (pp, &p) in disc.patch.iter().enumerate() {
            for k in 1..stride {
                eta[pp * stride + k] = w[p];
            }
        }
    }
    Ok(FieldState { w, w_t, eta, t: 0.0 })
}

/// Builds the initial state described by `data`.
pub fn init_state(
    geom: &Geometry,
    kernel: &MemoryKernel,
    grid: &GridSpec,
    data: &InitialData,
) -> Result<(Discretization, FieldState), SolverError> {
    let disc = Discretization::new(geom, kernel, grid)?;
    let state = init_fields(geom, &disc, data)?;
    Ok((disc, state))
}

/// One-shot run from initial data.
pub fn run(
    geom: &Geometry,
    kernel: &MemoryKernel,
    grid: &GridSpec,
    data: &InitialData,
    opts: &RunOptions,
) -> Result<RunOutput, SolverError> {
    let mut s = Solver::new(geom, kernel, grid, data)?;
    if opts.prony_check {
        s.enable_prony_check(kernel);
    }
    s.run(opts)
}
