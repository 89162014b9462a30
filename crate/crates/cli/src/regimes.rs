use std::io::Write;
use std::path::Path;

use metahier_core::{metastable_general, regime_table, Certainty, MetastableQuery, MetastableResult, Rule};
use serde::Serialize;
use serde_json::json;

use crate::analyze::{build, label_index, read_matrix};
use crate::error::CliError;
use crate::manifest::{RunManifest, Stopwatch};

#[derive(Serialize)]
struct MetastableDoc {
    manifest: RunManifest,
    from: String,
    lambda: f64,
    labels: Vec<String>,
    certainty: Certainty,
    rule: Rule,
    rank: usize,
    entries: Vec<String>,
}

fn names(v: &metahier_core::QuasiPotentialMatrix, idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&i| v.label(i).to_string()).collect()
}

pub fn metastable(path: &Path, from: &str, lambda: f64, out: &mut dyn Write) -> Result<u8, CliError> {
    let clock = Stopwatch::start("metastable");
    let (bytes, v) = read_matrix(path)?;
    let h = build(path, &v)?;
    let i = label_index(&v, from)?;
    let MetastableResult { labels, certainty, rule, rank, entries } =
        metastable_general(&h, &MetastableQuery::new(i, lambda))?;
    let doc = MetastableDoc {
        manifest: clock.finish(
            Some(&bytes),
            None,
            json!({ "input": path.display().to_string(), "from": from, "lambda": lambda }),
        ),
        from: v.label(i).to_string(),
        lambda,
        labels: names(&v, &labels),
        certainty,
        rule,
        rank,
        entries: names(&v, &entries),
    };
    serde_json::to_writer_pretty(&mut *out, &doc).map_err(std::io::Error::from)?;
    writeln!(out)?;
    Ok(0)
}

#[derive(Serialize)]
struct Row {
    lambda_lo: f64,
    /// Empty for the unbounded last interval.
    lambda_hi: Option<f64>,
    labels: String,
    certainty: Certainty,
}

/// Regime table as CSV on `out`; the manifest goes to `log` as one JSON line.
pub fn regimes(path: &Path, from: &str, out: &mut dyn Write, log: &mut dyn Write) -> Result<u8, CliError> {
    let clock = Stopwatch::start("regimes");
    let (bytes, v) = read_matrix(path)?;
    let h = build(path, &v)?;
    let i = label_index(&v, from)?;
    let table = regime_table(&h, i)?;
    let mut w = csv::Writer::from_writer(&mut *out);
    for r in &table {
        w.serialize(Row {
            lambda_lo: r.lo,
            lambda_hi: r.hi.is_finite().then_some(r.hi),
            labels: names(&v, &r.result.labels).join(" "),
            certainty: r.result.certainty,
        })?;
    }
    w.flush()?;
    drop(w);
    let manifest = clock.finish(Some(&bytes), None, json!({ "input": path.display().to_string(), "from": from }));
    writeln!(log, "{}", serde_json::to_string(&manifest).map_err(std::io::Error::from)?)?;
    Ok(0)
}
