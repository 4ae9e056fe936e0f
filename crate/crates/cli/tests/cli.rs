use std::path::Path;
use std::process::{Command, Output};
use transmission_lab::{emit_plots, run_scenario, CliError, Scenario, Task, Verdict};

const BIN: &str = env!("CARGO_BIN_EXE_transmission-lab");

const KERNEL: &str = r#"
[kernel]
terms = [{ amplitude = 2.5, relaxation = 0.2 }]
"#;

const FAST_GCC: &str = r#"
[gcc]
boundary_samples = 128
angle_samples = 32
x0_grid = 32
ueg_samples = 128
"#;

fn golden_pipeline() -> String {
    format!(
        r#"
version = 1
seed = 99

[geometry]
fixture = "golden"
{KERNEL}
[grid]
nx = 40
ny = 40
t_end = 4.0

[data.displacement]
kind = "ring"
radius = 0.85
width = 0.06
mode = 6

[observability]
members = 2
modes = 16
max_wavenumber = 8.0
horizon = 2.0
probe_modes = 3
grid = {{ nx = 32, ny = 32, t_end = 1.0 }}

[output]
snapshot_times = [0.0, 2.0]
sample_rays = 4
{FAST_GCC}"#
    )
}

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn cli(task: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(BIN)
        .arg(task)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .env("TRANSMISSION_LAB_WORKERS", "1")
        .output()
        .unwrap()
}

fn report(out: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn golden_full_pipeline_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "golden.toml", &golden_pipeline());
    let out = tmp.path().join("out");
    let res = cli("full-pipeline", &cfg, &out, &[]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let r = report(&out);
    assert_eq!(r["verdict"], "passed");
    assert_eq!(r["gcc"]["hypotheses_satisfied"], true);
    assert!(r["simulation"]["decay"]["lambda"].as_f64().unwrap() > 0.0);
    assert_eq!(r["observability"]["estimate"]["ensemble_size"], 2);
    assert_eq!(r["observability"]["probe"]["all_visible"], true);
    for f in ["energy.csv", "arcs.csv", "rays.jsonl", "rays.csv", "snapshots/snapshot_0001.bin"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let energy = std::fs::read_to_string(out.join("energy.csv")).unwrap();
    assert!(energy.starts_with("t,E,D,identity_residual\n"));
    let header: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out.join("snapshots/snapshot_0001.json")).unwrap(),
    )
    .unwrap();
    let bytes = std::fs::metadata(out.join("snapshots/snapshot_0001.bin")).unwrap().len();
    let (nx, ny) = (header["nx"].as_u64().unwrap(), header["ny"].as_u64().unwrap());
    assert_eq!(bytes, 8 * nx * ny);
}

#[test]
fn trapped_fixture_exits_with_violation_and_witness() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("version = 1\n[geometry]\nfixture = \"trapped\"\n{KERNEL}{FAST_GCC}");
    let cfg = write_config(tmp.path(), "trapped.toml", &text);
    let out = tmp.path().join("out");
    let res = cli("gcc-check", &cfg, &out, &[]);
    assert_eq!(res.status.code(), Some(2));
    let r = report(&out);
    assert_eq!(r["verdict"], "violated");
    assert_eq!(r["gcc"]["weak_gcc_ok"], false);
    let witness = &r["gcc"]["weak_gcc"]["counterexample"];
    assert!(witness["plus"]["segments"].is_array());
    let rays = std::fs::read_to_string(out.join("rays.jsonl")).unwrap();
    assert_eq!(rays.lines().count(), 2);
    let polylines = std::fs::read_to_string(out.join("rays.csv")).unwrap();
    assert!(polylines.lines().any(|l| l.ends_with(",outer")));
}

#[test]
fn missing_kernel_is_a_configuration_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
version = 1
[geometry]
fixture = "golden"
[grid]
nx = 16
ny = 16
t_end = 0.1
[data.displacement]
kind = "gaussian"
center = [0.5, 0.0]
sigma = 0.1
"#;
    let cfg = write_config(tmp.path(), "nokernel.toml", text);
    let res = cli("simulate", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("[kernel]"));
    let sc = Scenario::parse(text).unwrap();
    assert!(matches!(sc.validate(Task::Simulate), Err(CliError::ConfigParse(_))));
}

#[test]
fn malformed_or_unversioned_configs_fail() {
    assert!(matches!(Scenario::parse("version = 2"), Err(CliError::ConfigParse(_))));
    assert!(matches!(Scenario::parse("seed = 1"), Err(CliError::ConfigParse(_))));
    assert!(matches!(
        Scenario::parse("version = 1\nbogus = 3"),
        Err(CliError::ConfigParse(_))
    ));
    let tmp = tempfile::tempdir().unwrap();
    let res = cli("gcc-check", &tmp.path().join("absent.toml"), tmp.path(), &[]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn shipped_scenarios_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let sc = Scenario::load(&path).unwrap();
            let task = sc.task.unwrap_or(Task::FullPipeline);
            sc.validate(task).unwrap();
            translab::geometry::build_geometry(&sc.geometry.unwrap().descriptor()).unwrap();
            n += 1;
        }
    }
    assert!(n >= 3);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!(
        r#"
version = 1
seed = 5
[geometry]
fixture = "half_shell"
{KERNEL}
[grid]
nx = 24
ny = 24
t_end = 0.5
[observability]
members = 3
modes = 8
max_wavenumber = 6.0
horizon = 0.5
probe_modes = 0
{FAST_GCC}"#
    );
    let cfg = write_config(tmp.path(), "det.toml", &text);
    for task in ["gcc-check", "observability"] {
        let a = tmp.path().join(format!("{task}-a"));
        let b = tmp.path().join(format!("{task}-b"));
        cli(task, &cfg, &a, &[]);
        cli(task, &cfg, &b, &[]);
        let ra = std::fs::read(a.join("report.json")).unwrap();
        let rb = std::fs::read(b.join("report.json")).unwrap();
        assert!(!ra.is_empty());
        assert_eq!(ra, rb, "{task}");
    }
    let c = tmp.path().join("seeded");
    cli("observability", &cfg, &c, &["--seed", "6"]);
    let r = report(&c);
    assert_eq!(r["seed"], 6);
    assert_ne!(
        r["observability"]["estimate"]["ratios"],
        report(&tmp.path().join("observability-a"))["observability"]["estimate"]["ratios"]
    );
}

#[test]
fn plots_need_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(matches!(emit_plots(tmp.path(), None), Err(CliError::MissingArtifact(_))));
    let cfg = write_config(tmp.path(), "plots.toml", "version = 1\n");
    let res = cli("plots", &cfg, &tmp.path().join("empty"), &[]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("missing artifact"));
}

#[test]
fn plots_from_simulation_and_control_check() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!(
        r#"
version = 1
[geometry]
fixture = "half_shell"
{KERNEL}
[grid]
nx = 24
ny = 24
t_end = 1.0
[data.displacement]
kind = "gaussian"
center = [0.2, 0.1]
sigma = 0.15
[output]
sample_rays = 3
{FAST_GCC}"#
    );
    let sc = Scenario::parse(&text).unwrap();
    let out = tmp.path().join("out");
    let outcome = run_scenario(&sc, Task::FullPipeline, &out).unwrap();
    assert!(outcome.files.iter().any(|f| f.ends_with("report.json")));
    let verdict = outcome.verdict;
    let files = run_scenario(&sc, Task::Plots, &out).unwrap().files;
    for f in ["log_energy.csv", "ray_polylines.csv", "plot_arcs.csv"] {
        assert!(files.iter().any(|p| p.ends_with(f)), "{f}");
    }

    let energy = std::fs::read_to_string(out.join("energy.csv")).unwrap();
    let log = std::fs::read_to_string(out.join("log_energy.csv")).unwrap();
    let mut lines = log.lines();
    assert_eq!(lines.next(), Some("t,log_E"));
    for (e, l) in energy.lines().skip(1).zip(lines) {
        let e: Vec<f64> = e.split(',').map(|v| v.parse().unwrap()).collect();
        let l: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(e[0], l[0]);
        assert!((e[1].ln() - l[1]).abs() < 1e-12);
    }

    // arcs rebuilt from the report agree with the ones written by the check
    let arcs = std::fs::read_to_string(out.join("arcs.csv")).unwrap();
    let plot_arcs = std::fs::read_to_string(out.join("plot_arcs.csv")).unwrap();
    assert_eq!(arcs, plot_arcs);
    assert!(arcs.lines().count() > 1);

    let rays = std::fs::read_to_string(out.join("rays.csv")).unwrap();
    let polylines = std::fs::read_to_string(out.join("ray_polylines.csv")).unwrap();
    assert_eq!(rays, polylines);
    assert!(polylines.lines().filter(|l| l.ends_with(",start")).count() == 3);

    let r = report(&out);
    let expected = if verdict == Verdict::Passed { "passed" } else { "violated" };
    assert_eq!(r["verdict"], expected);
}
