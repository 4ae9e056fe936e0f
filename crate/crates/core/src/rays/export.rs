use super::RayTrace;
use crate::geometry::CurveId;
use serde::Serialize;

#[derive(Serialize)]
struct Record<'a> {
    id: usize,
    #[serde(flatten)]
    trace: &'a RayTrace,
}

/// One JSON object per trace, newline separated.
pub fn traces_to_jsonl(traces: &[RayTrace]) -> serde_json::Result<String> {
    let mut out = String::new();
    for (id, trace) in traces.iter().enumerate() {
        out.push_str(&serde_json::to_string(&Record { id, trace })?);
        out.push('\n');
    }
    Ok(out)
}

#[derive(Serialize)]
struct Row {
    trace: usize,
    vertex: usize,
    x: f64,
    y: f64,
    t: f64,
    flag: &'static str,
}

/// Flat polyline table with one row per arc vertex; `flag` marks starts, events and ends.
pub fn traces_to_csv(traces: &[RayTrace]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (id, tr) in traces.iter().enumerate() {
        let mut vertex = 0;
        let nseg = tr.segments.len();
        for (k, seg) in tr.segments.iter().enumerate() {
            let n = seg.arc.len();
            for (i, a) in seg.arc.iter().enumerate() {
                if k > 0 && i == 0 {
                    continue;
                }
                let flag = if k == 0 && i == 0 {
                    "start"
                } else if i + 1 == n && k + 1 < nseg {
                    match tr.events.get(k).map(|e| e.curve) {
                        Some(CurveId::Outer) => "outer",
                        Some(CurveId::Inner) => "interface",
                        None => "",
                    }
                } else if i + 1 == n {
                    "end"
                } else {
                    ""
                };
                w.serialize(Row {
                    trace: id,
                    vertex,
                    x: a.x.x,
                    y: a.x.y,
                    t: a.t,
                    flag,
                })?;
                vertex += 1;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
