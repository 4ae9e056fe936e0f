//! Scenario runner behind the `transmission-lab` binary.

pub mod plots;
pub mod scenario;

use serde::Serialize;
use std::path::{Path, PathBuf};
use translab::gcc::{full_report, regions_to_csv, BoundaryRegion, GccError, GccReport};
use translab::geometry::{build_geometry, Geometry, GeometryError};
use translab::kernel::{KernelError, MemoryKernel};
use translab::observability::{
    default_horizon, estimate_observability, fit_decay, invisible_probe, DecayFit, EnsembleSpec,
    ObsEstimate, ObservabilityError, ProbeReport,
};
use translab::rays::{
    trace_ray, traces_to_csv, traces_to_jsonl, BranchPolicy, Budget, Medium, RayContext,
    RayError, RayTrace,
};
use translab::solver::{RunOptions, Solver, SolverError};

pub use plots::emit_plots;
pub use scenario::{Scenario, Task};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    ConfigParse(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("missing artifact: {}", .0.display())]
    MissingArtifact(PathBuf),
    #[error("geometry: {0}")]
    Geometry(#[from] GeometryError),
    #[error("kernel: {0}")]
    Kernel(#[from] KernelError),
    #[error("control check: {0}")]
    Gcc(#[from] GccError),
    #[error("ray tracing: {0}")]
    Ray(#[from] RayError),
    #[error("solver: {0}")]
    Solver(#[from] SolverError),
    #[error("observability: {0}")]
    Observability(#[from] ObservabilityError),
    #[error("serialization: {0}")]
    Serialize(String),
}

/// Computed verdict of a finished task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Passed,
    Violated,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub verdict: Verdict,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::Passed => 0,
            Verdict::Violated => 2,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SimulationSummary {
    pub active_nodes: usize,
    pub patch_nodes: usize,
    pub dt: f64,
    pub n_steps: usize,
    pub ns: usize,
    pub ds: f64,
    pub tail_ratio: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub damping_integral: f64,
    pub residual_rate: f64,
    pub max_excess_increase: f64,
    pub prony_discrepancy: Option<f64>,
    pub decay: Option<DecayFit>,
    pub decay_error: Option<String>,
    pub snapshots: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct ObservabilityReport {
    pub seed: u64,
    pub estimate: ObsEstimate,
    pub probe: Option<ProbeReport>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub task: &'static str,
    pub version: u32,
    pub seed: u64,
    pub verdict: Verdict,
    pub gcc: Option<GccReport>,
    pub simulation: Option<SimulationSummary>,
    pub observability: Option<ObservabilityReport>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_owned(),
        source,
    }
}

fn write_file(path: &Path, contents: &[u8], files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(io_err(path))?;
    files.push(path.to_owned());
    Ok(())
}

struct Setup {
    geom: Geometry,
    kernel: MemoryKernel,
}

fn setup(sc: &Scenario) -> Result<Setup, CliError> {
    let desc = sc.geometry.as_ref().expect("validated").descriptor();
    let geom = build_geometry(&desc)?;
    let kernel = MemoryKernel::from_spec(sc.kernel.as_ref().expect("validated"))?;
    Ok(Setup { geom, kernel })
}

/// Inward-normal rays from equally spaced outer points, reflecting at the interface.
fn sample_rays(sc: &Scenario, s: &Setup, count: usize) -> Result<Vec<RayTrace>, CliError> {
    let ctx = RayContext::new(&s.geom, &s.kernel).with_options(sc.gcc.rays);
    let budget = Budget {
        max_time: 3.0 * s.geom.diameter() / ctx.min_speed(),
        max_events: sc.gcc.max_events,
        interface_stop: Default::default(),
    };
    let outer = s.geom.outer();
    (0..count)
        .map(|k| {
            let u = (k as f64 + 0.5) / count as f64;
            let p = ctx.phase_point(outer.point(u), -outer.normal(u), 0.0, Medium::Omega1);
            Ok(trace_ray(&ctx, &p, &budget, BranchPolicy::Reflect)?)
        })
        .collect()
}

fn gcc_stage(
    sc: &Scenario,
    s: &Setup,
    out: &Path,
    files: &mut Vec<PathBuf>,
) -> Result<GccReport, CliError> {
    let report = full_report(&s.geom, &s.kernel, &sc.gcc)?;
    let mut regions: Vec<(&str, &BoundaryRegion)> = Vec::new();
    if let Some(g1) = &report.gamma1 {
        regions.push(("gamma1", g1));
    }
    if let Some(g2) = &report.gamma2 {
        regions.push(("gamma2", &g2.region));
    }
    if let Some(u) = &report.ueg {
        regions.push(("omega1f_outer", &u.omega1f.outer_arcs));
        regions.push(("omega1f_interface", &u.omega1f.interface_arcs));
    }
    write_file(&out.join("arcs.csv"), regions_to_csv(&s.geom, &regions).as_bytes(), files)?;

    let mut traces = Vec::new();
    if let Some(w) = report.weak_gcc.as_ref().and_then(|w| w.counterexample.as_ref()) {
        traces.push(w.plus.clone());
        traces.push(w.minus.clone());
    }
    traces.extend(sample_rays(sc, s, sc.output.sample_rays)?);
    if !traces.is_empty() {
        let jsonl = traces_to_jsonl(&traces).map_err(|e| CliError::Serialize(e.to_string()))?;
        write_file(&out.join("rays.jsonl"), jsonl.as_bytes(), files)?;
        let csv = traces_to_csv(&traces).map_err(|e| CliError::Serialize(e.to_string()))?;
        write_file(&out.join("rays.csv"), csv.as_bytes(), files)?;
    }
    Ok(report)
}

fn simulate_stage(
    sc: &Scenario,
    s: &Setup,
    out: &Path,
    files: &mut Vec<PathBuf>,
) -> Result<SimulationSummary, CliError> {
    let grid = sc.grid.as_ref().expect("validated");
    let data = sc.data.as_ref().expect("validated");
    let mut solver = Solver::new(&s.geom, &s.kernel, grid, data)?;
    let opts = RunOptions {
        snapshot_times: sc.output.snapshot_times.clone(),
        prony_check: sc.output.prony_check,
    };
    let run = solver.run(&opts)?;
    let tr = &run.trace;

    let path = out.join("energy.csv");
    let f = std::fs::File::create(&path).map_err(io_err(&path))?;
    tr.write_csv(std::io::BufWriter::new(f))?;
    files.push(path);

    let mut snapshots = Vec::new();
    if !run.snapshots.is_empty() {
        let dir = out.join("snapshots");
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        for (i, snap) in run.snapshots.iter().enumerate() {
            let stem = format!("snapshot_{i:04}");
            snap.write(&dir, &stem)?;
            files.push(dir.join(format!("{stem}.bin")));
            files.push(dir.join(format!("{stem}.json")));
            snapshots.push(stem);
        }
    }

    let (decay, decay_error) = match fit_decay(tr, sc.output.fit_window) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let disc = solver.disc();
    Ok(SimulationSummary {
        active_nodes: disc.n_active(),
        patch_nodes: disc.n_patch(),
        dt: disc.dt,
        n_steps: disc.n_steps,
        ns: disc.ns,
        ds: disc.ds,
        tail_ratio: tr.tail_ratio,
        initial_energy: tr.energy[0],
        final_energy: *tr.energy.last().expect("trace has samples"),
        damping_integral: *tr.damping.last().expect("trace has samples"),
        residual_rate: tr.residual_rate(),
        max_excess_increase: tr.max_excess_increase(),
        prony_discrepancy: tr.prony_discrepancy,
        decay,
        decay_error,
        snapshots,
    })
}

fn observability_stage(sc: &Scenario, s: &Setup) -> Result<ObservabilityReport, CliError> {
    let cfg = sc.observability.as_ref().expect("validated");
    let grid = cfg
        .grid
        .as_ref()
        .or(sc.grid.as_ref())
        .expect("validated");
    let horizon = cfg.horizon.unwrap_or_else(|| default_horizon(&s.geom));
    let mut ensemble = EnsembleSpec {
        members: cfg.members,
        seed: sc.seed,
        modes: cfg.modes,
        max_wavenumber: cfg.max_wavenumber,
    }
    .data();
    ensemble.extend(cfg.extra.iter().cloned());
    let estimate = estimate_observability(&s.geom, &s.kernel, grid, horizon, &ensemble)?;
    let probe = if cfg.probe_modes > 0 {
        let t = cfg.probe_horizon.unwrap_or(horizon);
        Some(invisible_probe(&s.geom, &s.kernel, grid, cfg.probe_modes, t, cfg.eps_vis)?)
    } else {
        None
    };
    Ok(ObservabilityReport {
        seed: sc.seed,
        estimate,
        probe,
    })
}

/// Runs `task` and writes its artifacts into `out`. Hypothesis violations are reported through
/// [`Outcome::verdict`], with the report still written.
pub fn run_scenario(sc: &Scenario, task: Task, out: &Path) -> Result<Outcome, CliError> {
    sc.validate(task)?;
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    let mut files = Vec::new();
    if task == Task::Plots {
        let geom = match &sc.geometry {
            Some(g) => Some(build_geometry(&g.descriptor())?),
            None => None,
        };
        files = emit_plots(out, geom.as_ref())?;
        return Ok(Outcome {
            verdict: Verdict::Passed,
            files,
        });
    }
    let s = setup(sc)?;
    let gcc = match task {
        Task::GccCheck | Task::FullPipeline => Some(gcc_stage(sc, &s, out, &mut files)?),
        _ => None,
    };
    let simulation = match task {
        Task::Simulate | Task::FullPipeline => Some(simulate_stage(sc, &s, out, &mut files)?),
        _ => None,
    };
    let observability = match task {
        Task::Observability => Some(observability_stage(sc, &s)?),
        Task::FullPipeline if sc.observability.is_some() => Some(observability_stage(sc, &s)?),
        _ => None,
    };
    let violated = gcc.as_ref().is_some_and(|g| !g.hypotheses_satisfied)
        || observability
            .as_ref()
            .and_then(|o| o.probe.as_ref())
            .is_some_and(|p| !p.all_visible);
    let verdict = if violated {
        Verdict::Violated
    } else {
        Verdict::Passed
    };
    let report = Report {
        task: task.name(),
        version: sc.version,
        seed: sc.seed,
        verdict,
        gcc,
        simulation,
        observability,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Serialize(e.to_string()))?;
    write_file(&out.join("report.json"), json.as_bytes(), &mut files)?;
    Ok(Outcome { verdict, files })
}
