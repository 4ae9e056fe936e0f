use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;
use transmission_lab::{run_scenario, Scenario, Task};

/// Caps the rayon worker count when set.
const WORKERS_ENV: &str = "TRANSMISSION_LAB_WORKERS";

#[derive(Parser)]
#[command(name = "transmission-lab", version, about = "Run a transmission-problem scenario")]
struct Args {
    task: Task,
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the scenario's `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Ensemble seed; overrides the scenario's `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring {WORKERS_ENV}={v}"),
        }
    }
    let mut sc = match Scenario::load(&args.config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(seed) = args.seed {
        sc.seed = seed;
    }
    let out = args
        .out
        .or_else(|| sc.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    match run_scenario(&sc, args.task, &out) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            let code = outcome.exit_code();
            if code == 2 {
                eprintln!("hypotheses violated; see {}", out.join("report.json").display());
            }
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
