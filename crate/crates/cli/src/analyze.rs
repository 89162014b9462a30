use std::io::Write;
use std::path::Path;

use metahier_core::hierarchy::UnitRef;
use metahier_core::io::{dump, parse_matrix, HierarchyDump, InputError};
use metahier_core::{fmt_ext, Hierarchy, QuasiPotentialMatrix};
use serde::Serialize;
use serde_json::json;

use crate::error::CliError;
use crate::manifest::{RunManifest, Stopwatch};

/// Reads and parses a cost-matrix file, returning the raw bytes for the
/// manifest digest.
pub fn read_matrix(path: &Path) -> Result<(Vec<u8>, QuasiPotentialMatrix), CliError> {
    let shown = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|source| CliError::Read { path: shown.clone(), source })?;
    let text = String::from_utf8_lossy(&bytes);
    let v = parse_matrix(&text).map_err(|source| CliError::Input { path: shown, source })?;
    Ok((bytes, v))
}

pub fn build(path: &Path, v: &QuasiPotentialMatrix) -> Result<Hierarchy, CliError> {
    Hierarchy::build(v).map_err(|e| CliError::Input {
        path: path.display().to_string(),
        source: InputError::Invalid(e),
    })
}

/// Label lookup by name, falling back to a 1-based index.
pub fn label_index(v: &QuasiPotentialMatrix, label: &str) -> Result<usize, CliError> {
    v.index_of(label)
        .or_else(|| label.parse::<usize>().ok().filter(|&i| (1..=v.size()).contains(&i)).map(|i| i - 1))
        .ok_or_else(|| CliError::Usage(format!("unknown label {label:?}")))
}

#[derive(Serialize)]
struct AnalyzeDoc {
    manifest: RunManifest,
    hierarchy: HierarchyDump,
}

fn set(h: &Hierarchy, idx: &[usize]) -> String {
    let names: Vec<&str> = idx.iter().map(|&i| h.matrix().label(i)).collect();
    format!("{{{}}}", names.join(","))
}

pub fn summary(h: &Hierarchy) -> String {
    let mut s = format!(
        "{} labels, depth {}, {}\n",
        h.label_count(),
        h.depth(),
        if h.is_complete() { "complete" } else { "absorbing family at the top" }
    );
    for lv in h.levels() {
        s += &format!("rank {}: {} chain(s)\n", lv.rank, lv.chains.len());
        for (c, chain) in lv.chains.iter().enumerate() {
            let unit = UnitRef { rank: lv.rank, index: c };
            let m: Vec<String> = chain.measure_rates.iter().map(|x| fmt_ext(*x)).collect();
            s += &format!(
                "  {}  r = {}  e = {}  main {}  m = ({})",
                set(h, &lv.chain_labels[c]),
                fmt_ext(chain.depth_rate),
                fmt_ext(chain.exit_rate),
                set(h, &h.flatten_main(unit)),
                m.join(", ")
            );
            if chain.exit_rate.is_finite() {
                s += &format!(
                    "  I {}  J {}",
                    set(h, &lv.chain_exit_labels[c]),
                    set(h, &lv.chain_landing_labels[c])
                );
            }
            s.push('\n');
        }
    }
    s
}

/// Full hierarchy dump as JSON on `out`, a short summary on `log`.
pub fn run(path: &Path, out: &mut dyn Write, log: &mut dyn Write) -> Result<u8, CliError> {
    let clock = Stopwatch::start("analyze");
    let (bytes, v) = read_matrix(path)?;
    let h = build(path, &v)?;
    let doc = AnalyzeDoc {
        manifest: clock.finish(Some(&bytes), None, json!({ "input": path.display().to_string() })),
        hierarchy: dump(&h),
    };
    serde_json::to_writer_pretty(&mut *out, &doc).map_err(std::io::Error::from)?;
    writeln!(out)?;
    write!(log, "{}", summary(&h))?;
    Ok(0)
}
