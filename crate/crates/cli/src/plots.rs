//! Plot-ready tables derived from the artifacts of earlier runs.

use crate::CliError;
use serde::Deserialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use translab::geometry::{CurveId, Geometry};
use translab::rays::{traces_to_csv, RayTrace};

#[derive(Deserialize)]
struct RegionRecord {
    curve: CurveId,
    intervals: Vec<(f64, f64)>,
}

fn read(path: &Path) -> Result<Option<String>, CliError> {
    match std::fs::read_to_string(path) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(source) => Err(CliError::Io {
            path: path.to_owned(),
            source,
        }),
    }
}

fn write(path: PathBuf, text: &str, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    std::fs::write(&path, text).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    files.push(path);
    Ok(())
}

fn bad(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Serialize(format!("{}: {msg}", path.display()))
}

/// `(t, ln E)` rows; samples with nonpositive energy are dropped.
pub fn log_energy_csv(energy_csv: &str) -> Result<String, csv::Error> {
    let mut rdr = csv::Reader::from_reader(energy_csv.as_bytes());
    let mut out = String::from("t,log_E\n");
    for rec in rdr.records() {
        let rec = rec?;
        let t: f64 = rec.get(0).and_then(|v| v.parse().ok()).unwrap_or(f64::NAN);
        let e: f64 = rec.get(1).and_then(|v| v.parse().ok()).unwrap_or(f64::NAN);
        if e > 0.0 {
            let _ = writeln!(out, "{t},{}", e.ln());
        }
    }
    Ok(out)
}

/// Arc table from the region records of a control-check report.
fn arcs_from_report(report: &serde_json::Value, geom: &Geometry) -> Option<String> {
    let gcc = report.get("gcc")?;
    let picks = [
        ("gamma1", gcc.get("gamma1")),
        ("gamma2", gcc.get("gamma2").and_then(|g| g.get("region"))),
        (
            "omega1f_outer",
            gcc.pointer("/ueg/omega1f/outer_arcs"),
        ),
        (
            "omega1f_interface",
            gcc.pointer("/ueg/omega1f/interface_arcs"),
        ),
    ];
    let mut out = String::from("label,curve,s_start,s_end,x_start,y_start,x_end,y_end\n");
    for (label, v) in picks {
        let Some(rec) = v.and_then(|v| RegionRecord::deserialize(v).ok()) else {
            continue;
        };
        let c = geom.curve(rec.curve);
        let id = match rec.curve {
            CurveId::Outer => "outer",
            CurveId::Inner => "inner",
        };
        for (a, b) in rec.intervals {
            let (p, q) = (c.point(a), c.point(b));
            let _ = writeln!(out, "{label},{id},{a},{b},{},{},{},{}", p.x, p.y, q.x, q.y);
        }
    }
    Some(out)
}

/// Converts whatever artifacts `dir` holds into plot tables:
/// `energy.csv` to `log_energy.csv`, `rays.jsonl` to `ray_polylines.csv`, and the regions of
/// `report.json` to `plot_arcs.csv` (needs the geometry to place the arcs).
pub fn emit_plots(dir: &Path, geom: Option<&Geometry>) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    let mut found = false;

    let energy = dir.join("energy.csv");
    if let Some(text) = read(&energy)? {
        found = true;
        let csv = log_energy_csv(&text).map_err(|e| bad(&energy, e))?;
        write(dir.join("log_energy.csv"), &csv, &mut files)?;
    }

    let rays = dir.join("rays.jsonl");
    if let Some(text) = read(&rays)? {
        found = true;
        let traces = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str::<RayTrace>)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(&rays, e))?;
        let csv = traces_to_csv(&traces).map_err(|e| bad(&rays, e))?;
        write(dir.join("ray_polylines.csv"), &csv, &mut files)?;
    }

    let report = dir.join("report.json");
    if let Some(text) = read(&report)? {
        found = true;
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(&report, e))?;
        if let Some(csv) = geom.and_then(|g| arcs_from_report(&v, g)) {
            write(dir.join("plot_arcs.csv"), &csv, &mut files)?;
        }
    }

    if !found {
        return Err(CliError::MissingArtifact(dir.to_owned()));
    }
    Ok(files)
}
