//! Versioned CSV and JSON emission.
//!
//! Every CSV begins with `# schema: <id>` (and optionally `# manifest: <path>`) comment
//! lines before the column header. JSON documents carry a top-level `"schema"` field.
//! Floats are written in shortest round-trip form, so reruns are byte-identical.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::NoiseAnatomy;
use crate::probes::{SweepCell, SweepOutcome};
use crate::spectral::{SpikeRow, Spectrum};

pub const SPECTRUM_SCHEMA: &str = "twotier.spectrum/1";
pub const SPIKES_SCHEMA: &str = "twotier.spikes/1";
pub const PROBES_SCHEMA: &str = "twotier.probes/1";
pub const PROBE_RUNS_SCHEMA: &str = "twotier.probe-runs/1";
pub const ANATOMY_SCHEMA: &str = "twotier.anatomy/1";
pub const PROJECTION_SCHEMA: &str = "twotier.projection/1";
pub const SUMMARY_SCHEMA: &str = "twotier.summary/1";
pub const AUDIT_SCHEMA: &str = "twotier.audit/1";

/// A rectangular table of already formatted cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvTable {
    pub schema: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(schema: &'static str, columns: Vec<&'static str>) -> Self {
        CsvTable {
            schema,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, mut w: impl Write, manifest: Option<&str>) -> Result<()> {
        let io = |e| Error::io("<csv output>", e);
        writeln!(w, "# schema: {}", self.schema).map_err(io)?;
        if let Some(m) = manifest {
            writeln!(w, "# manifest: {m}").map_err(io)?;
        }
        let mut csv = csv::Writer::from_writer(w);
        let to_err = |e: csv::Error| Error::InvalidArgument(format!("csv write failed: {e}"));
        csv.write_record(&self.columns).map_err(to_err)?;
        for row in &self.rows {
            csv.write_record(row).map_err(to_err)?;
        }
        csv.flush().map_err(io)?;
        Ok(())
    }

    pub fn to_string_with(&self, manifest: Option<&str>) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf, manifest).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn spectrum_csv(spec: &Spectrum) -> CsvTable {
    let mut t = CsvTable::new(SPECTRUM_SCHEMA, vec!["k", "nu", "power", "norm_mag"]);
    for k in 0..spec.n_tokens() {
        t.push(vec![
            k.to_string(),
            num(spec.frequency(k)),
            num(spec.power()[k]),
            num(spec.norm_mag()[k]),
        ]);
    }
    t
}

pub fn spikes_csv(rows: &[SpikeRow]) -> CsvTable {
    let mut t = CsvTable::new(SPIKES_SCHEMA, vec!["period", "phi", "peak_norm_mag", "prominence"]);
    for r in rows {
        t.push(vec![r.period.to_string(), num(r.phi), num(r.peak_norm_mag), num(r.prominence)]);
    }
    t
}

/// One row per sweep cell; failed cells keep their error message.
pub fn probes_csv(cells: &[SweepCell]) -> CsvTable {
    let mut t = CsvTable::new(PROBES_SCHEMA, vec!["period", "kind", "runs", "accuracy", "kappa", "error"]);
    for c in cells {
        let row = match &c.outcome {
            SweepOutcome::Ok(r) => vec![
                c.period.to_string(),
                c.kind.to_string(),
                r.per_run.len().to_string(),
                num(r.accuracy),
                num(r.kappa),
                String::new(),
            ],
            SweepOutcome::Error(e) => vec![
                c.period.to_string(),
                c.kind.to_string(),
                "0".into(),
                String::new(),
                String::new(),
                e.clone(),
            ],
        };
        t.push(row);
    }
    t
}

pub fn probe_runs_csv(cells: &[SweepCell]) -> CsvTable {
    let mut t = CsvTable::new(
        PROBE_RUNS_SCHEMA,
        vec!["period", "kind", "seed", "fold", "n_test", "accuracy", "final_loss", "grad_norm", "converged"],
    );
    for c in cells {
        if let SweepOutcome::Ok(r) = &c.outcome {
            for run in &r.per_run {
                t.push(vec![
                    c.period.to_string(),
                    c.kind.to_string(),
                    run.seed.to_string(),
                    run.fold.to_string(),
                    run.n_test.to_string(),
                    num(run.accuracy),
                    num(run.final_loss),
                    num(run.grad_norm),
                    run.converged.to_string(),
                ]);
            }
        }
    }
    t
}

pub fn anatomy_csv(rows: &[NoiseAnatomy]) -> CsvTable {
    let mut t = CsvTable::new(
        ANATOMY_SCHEMA,
        vec![
            "period",
            "phi",
            "trace_between",
            "trace_within",
            "lambda_min_within",
            "lambda_max_within",
            "cond_within",
            "fisher",
            "bound_low",
            "bound_high",
            "regularization",
        ],
    );
    for r in rows {
        t.push(vec![
            r.period.to_string(),
            num(r.phi),
            num(r.trace_between),
            num(r.trace_within),
            num(r.lambda_min_within),
            num(r.lambda_max_within),
            num(r.cond_within),
            num(r.fisher),
            opt(r.bound_low),
            opt(r.bound_high),
            num(r.regularization),
        ]);
    }
    t
}

/// Circular-probe 2-D coordinates; tokens whose projection is degenerate get empty cells.
pub fn projection_csv(projections: &[Option<[f64; 2]>], period: usize) -> CsvTable {
    let mut t = CsvTable::new(PROJECTION_SCHEMA, vec!["token", "residue", "x", "y"]);
    for (n, p) in projections.iter().enumerate() {
        let (x, y) = p.map_or((String::new(), String::new()), |[x, y]| (num(x), num(y)));
        t.push(vec![n.to_string(), (n % period).to_string(), x, y]);
    }
    t
}

/// Serialize `value` as pretty JSON with `"schema"` (and optionally `"manifest"`) added
/// at the top level. `value` must serialize to a JSON object.
pub fn json_document<T: Serialize>(schema: &str, manifest: Option<&str>, value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    let obj = v
        .as_object_mut()
        .ok_or_else(|| Error::InvalidArgument("json document must be an object".into()))?;
    let mut out = serde_json::Map::new();
    out.insert("schema".into(), schema.into());
    if let Some(m) = manifest {
        out.insert("manifest".into(), m.into());
    }
    out.extend(std::mem::take(obj));
    Ok(serde_json::to_string_pretty(&serde_json::Value::Object(out))? + "\n")
}
