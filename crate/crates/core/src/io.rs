//! JSON documents: the cost-matrix input format and the hierarchy dump.
//!
//! Input: `{"labels": ["a", ...], "V": [[number | null, ...], ...]}` with
//! `null` for an infinite cost. `labels` may be omitted, giving `"1".."l"`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ext::to_json_ext;
use crate::hierarchy::{Hierarchy, HierarchyError, QuasiPotentialMatrix, UnitRef};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("line {line}, column {column}: {message}")]
    Schema { line: usize, column: usize, message: String },
    #[error(transparent)]
    Invalid(#[from] HierarchyError),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixDoc {
    #[serde(default)]
    labels: Option<Vec<String>>,
    #[serde(rename = "V")]
    v: Vec<Vec<Option<f64>>>,
}

pub fn parse_matrix(text: &str) -> Result<QuasiPotentialMatrix, InputError> {
    let doc: MatrixDoc = serde_json::from_str(text).map_err(|e| InputError::Schema {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let rows: Vec<Vec<f64>> = doc
        .v
        .into_iter()
        .map(|row| row.into_iter().map(|x| x.unwrap_or(f64::INFINITY)).collect())
        .collect();
    let labels = doc
        .labels
        .unwrap_or_else(|| (1..=rows.len()).map(|i| i.to_string()).collect());
    Ok(QuasiPotentialMatrix::new(labels, rows)?)
}

#[derive(Debug, Serialize)]
struct MatrixOut<'a> {
    labels: &'a [String],
    #[serde(rename = "V")]
    v: Vec<Vec<Option<f64>>>,
}

pub fn matrix_to_json(v: &QuasiPotentialMatrix) -> String {
    let doc = MatrixOut {
        labels: v.labels(),
        v: v.rows()
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, &x)| if i == j { None } else { to_json_ext(x) })
                    .collect()
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("matrix serializes")
}

/// Serializable view of a [`Hierarchy`]; infinities become `null`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HierarchyDump {
    pub schema_version: u32,
    pub labels: Vec<String>,
    pub complete: bool,
    pub depth: usize,
    pub levels: Vec<LevelDump>,
    pub rank_sequences: Vec<SequenceDump>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelDump {
    pub rank: usize,
    /// Attractor labels covered by each unit of the level.
    pub units: Vec<Vec<String>>,
    pub costs: Vec<Vec<Option<f64>>>,
    pub alphas: Vec<Option<f64>>,
    pub arrows: Vec<Vec<usize>>,
    pub chains: Vec<ChainDump>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainDump {
    pub index: usize,
    pub members: Vec<usize>,
    pub labels: Vec<String>,
    pub depth_rate: Option<f64>,
    pub mixing_rate: Option<f64>,
    pub measure_rates: Vec<Option<f64>>,
    pub exit_rate: Option<f64>,
    pub exit_set: Vec<usize>,
    pub landing_set: Vec<usize>,
    pub main_subset: Vec<usize>,
    pub main_labels: Vec<String>,
    pub exit_labels: Vec<String>,
    pub landing_labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceDump {
    pub label: String,
    /// Chain index at ranks `1..=m`.
    pub chains: Vec<usize>,
    /// `e_0 ..= e_m`.
    pub exit_rates: Vec<Option<f64>>,
    pub measure_exponent: f64,
}

fn names(h: &Hierarchy, idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&i| h.matrix().label(i).to_string()).collect()
}

pub fn dump(h: &Hierarchy) -> HierarchyDump {
    let levels = h
        .levels()
        .iter()
        .map(|lv| LevelDump {
            rank: lv.rank,
            units: lv.unit_labels.iter().map(|u| names(h, u)).collect(),
            costs: lv
                .costs
                .iter()
                .map(|row| row.iter().map(|&x| to_json_ext(x)).collect())
                .collect(),
            alphas: lv.arrows.alphas.iter().map(|&x| to_json_ext(x)).collect(),
            arrows: lv.arrows.targets.clone(),
            chains: lv
                .chains
                .iter()
                .enumerate()
                .map(|(c, ch)| ChainDump {
                    index: c,
                    members: ch.members.clone(),
                    labels: names(h, &lv.chain_labels[c]),
                    depth_rate: to_json_ext(ch.depth_rate),
                    mixing_rate: to_json_ext(ch.mixing_rate),
                    measure_rates: ch.measure_rates.iter().map(|&x| to_json_ext(x)).collect(),
                    exit_rate: to_json_ext(ch.exit_rate),
                    exit_set: ch.exit_set.clone(),
                    landing_set: ch.landing_set.clone(),
                    main_subset: ch.main_subset.clone(),
                    main_labels: names(h, &h.flatten_main(UnitRef { rank: lv.rank, index: c })),
                    exit_labels: names(h, &lv.chain_exit_labels[c]),
                    landing_labels: names(h, &lv.chain_landing_labels[c]),
                })
                .collect(),
        })
        .collect();
    let rank_sequences = (0..h.label_count())
        .map(|i| SequenceDump {
            label: h.matrix().label(i).to_string(),
            chains: h.rank_sequence(i)[1..].iter().map(|u| u.index).collect(),
            exit_rates: h.exit_rates(i).into_iter().map(to_json_ext).collect(),
            measure_exponent: h.measure_exponent(i),
        })
        .collect();
    HierarchyDump {
        schema_version: SCHEMA_VERSION,
        labels: h.matrix().labels().to_vec(),
        complete: h.is_complete(),
        depth: h.depth(),
        levels,
        rank_sequences,
    }
}
