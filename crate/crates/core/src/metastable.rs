//! Where the process started at label `i` sits at time `exp(lambda / eps)`.
//!
//! Along the rank sequence of `i` the exit rates `e_0 <= e_1 <= ...` are
//! non-decreasing. For `e_{k-1} < lambda < e_k` the process has left its
//! rank-`(k-1)` unit but not its rank-`k` chain. If the chain has mixed
//! (`mixing_rate < lambda`) the answer is the chain's main subset pushed
//! down to labels; otherwise the chain is walked along arrows whose source
//! has already been left (`alpha < lambda`) and the walk stops at units that
//! trap the process (`alpha > lambda`), recursing into each of them.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::hierarchy::{ArrowDiagram, Chain, Hierarchy};

pub const DEFAULT_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetastableError {
    #[error("lambda must be positive and finite, got {0}")]
    NonPositiveLambda(f64),
    #[error("unknown label index {0}")]
    UnknownLabel(usize),
    #[error("lambda {lambda} is within the margin of breakpoint {breakpoint}")]
    BreakpointLambda { lambda: f64, breakpoint: f64 },
    #[error("unit {0} is not a member of the chain")]
    NotInChain(usize),
    #[error("chain has already mixed at this lambda (r = {depth_rate} < {lambda})")]
    NotApplicable { depth_rate: f64, lambda: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Certainty {
    Singleton,
    AmbiguousSet,
}

/// Which branch of the algorithm produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// `lambda < alpha_i`: nothing has happened yet.
    BelowFirstExit,
    /// The rank-`k` chain has mixed; main subset of main subsets.
    Theorem2,
    /// Arrow walk inside the rank-`k` chain.
    Reachability,
    /// Above every exit rate of an absorbing family; arrow walk over the top units.
    BeyondTop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetastableQuery {
    pub initial: usize,
    pub lambda: f64,
    pub margin: f64,
}

impl MetastableQuery {
    pub fn new(initial: usize, lambda: f64) -> Self {
        Self { initial, lambda, margin: DEFAULT_MARGIN }
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetastableResult {
    /// Label indices, sorted.
    pub labels: Vec<usize>,
    pub certainty: Certainty,
    pub rule: Rule,
    /// Rank `k` of the chain the rule was applied to.
    pub rank: usize,
    /// Labels the walk recursed into (entry points of trapping units).
    pub entries: Vec<usize>,
}

impl MetastableResult {
    fn new(labels: BTreeSet<usize>, rule: Rule, rank: usize, entries: BTreeSet<usize>) -> Self {
        let certainty = if labels.len() == 1 { Certainty::Singleton } else { Certainty::AmbiguousSet };
        Self {
            labels: labels.into_iter().collect(),
            certainty,
            rule,
            rank,
            entries: entries.into_iter().collect(),
        }
    }
}

fn check_query(h: &Hierarchy, q: &MetastableQuery) -> Result<(), MetastableError> {
    if q.initial >= h.label_count() {
        return Err(MetastableError::UnknownLabel(q.initial));
    }
    if !(q.lambda > 0.0 && q.lambda.is_finite()) {
        return Err(MetastableError::NonPositiveLambda(q.lambda));
    }
    for bp in h.breakpoints() {
        if (q.lambda - bp).abs() < q.margin {
            return Err(MetastableError::BreakpointLambda { lambda: q.lambda, breakpoint: bp });
        }
    }
    Ok(())
}

/// First `k >= 1` with `lambda < e_k(i)`, given `lambda > e_0(i)`.
fn locate(h: &Hierarchy, label: usize, lambda: f64) -> Option<usize> {
    let e = h.exit_rates(label);
    (1..e.len()).find(|&k| lambda < e[k])
}

pub fn metastable_theorem2(
    h: &Hierarchy,
    q: &MetastableQuery,
) -> Result<Option<MetastableResult>, MetastableError> {
    check_query(h, q)?;
    if q.lambda < h.level(1).arrows.alphas[q.initial] {
        return Ok(None);
    }
    let Some(k) = locate(h, q.initial, q.lambda) else {
        return Ok(None);
    };
    let unit = h.rank_sequence(q.initial)[k];
    let chain = h.chain(unit).expect("rank >= 1");
    if chain.mixing_rate < q.lambda {
        let labels = h.flatten_main(unit).into_iter().collect();
        Ok(Some(MetastableResult::new(labels, Rule::Theorem2, k, BTreeSet::new())))
    } else {
        Ok(None)
    }
}

struct Walk {
    /// Reached units with `alpha > lambda`.
    trapped: BTreeSet<usize>,
    /// Units outside the chain reached through an arrow.
    leaked: BTreeSet<usize>,
    /// For every trapped or leaked unit, the reached units with an arrow into it.
    sources: BTreeMap<usize, BTreeSet<usize>>,
}

fn walk(start: usize, lambda: f64, arrows: &ArrowDiagram, within: Option<&Chain>) -> Walk {
    let mut seen = BTreeSet::from([start]);
    let mut queue = vec![start];
    let mut out = Walk { trapped: BTreeSet::new(), leaked: BTreeSet::new(), sources: BTreeMap::new() };
    while let Some(u) = queue.pop() {
        if arrows.alphas[u] > lambda {
            out.trapped.insert(u);
            continue;
        }
        for &w in &arrows.targets[u] {
            out.sources.entry(w).or_default().insert(u);
            if within.is_some_and(|c| !c.contains(w)) {
                out.leaked.insert(w);
            } else if seen.insert(w) {
                queue.push(w);
            }
        }
    }
    out
}

/// Members of `chain` where the walk from `start` gets stuck at scale
/// `lambda`: reachable along arrows leaving already-exited members, and not
/// yet exited themselves.
pub fn ambiguity_set(
    start: usize,
    lambda: f64,
    chain: &Chain,
    arrows: &ArrowDiagram,
    margin: f64,
) -> Result<Vec<usize>, MetastableError> {
    if !chain.contains(start) {
        return Err(MetastableError::NotInChain(start));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(MetastableError::NonPositiveLambda(lambda));
    }
    for &u in &chain.members {
        let a = arrows.alphas[u];
        if (lambda - a).abs() < margin {
            return Err(MetastableError::BreakpointLambda { lambda, breakpoint: a });
        }
    }
    if chain.depth_rate < lambda {
        return Err(MetastableError::NotApplicable { depth_rate: chain.depth_rate, lambda });
    }
    if arrows.alphas[start] > lambda {
        return Ok(vec![start]);
    }
    Ok(walk(start, lambda, arrows, Some(chain)).trapped.into_iter().collect())
}

pub fn metastable_general(h: &Hierarchy, q: &MetastableQuery) -> Result<MetastableResult, MetastableError> {
    check_query(h, q)?;
    let mut stack = Vec::new();
    let out = general(h, q.initial, q.lambda, &mut stack);
    debug_assert!(!out.labels.is_empty(), "metastable walk from {} at {} found nothing", q.initial, q.lambda);
    Ok(out)
}

fn general(h: &Hierarchy, label: usize, lambda: f64, stack: &mut Vec<usize>) -> MetastableResult {
    if lambda < h.level(1).arrows.alphas[label] {
        return MetastableResult::new(BTreeSet::from([label]), Rule::BelowFirstExit, 0, BTreeSet::new());
    }
    let seq = h.rank_sequence(label);
    let (rank, start, level, within, rule) = match locate(h, label, lambda) {
        Some(k) => {
            let chain = h.chain(seq[k]).expect("rank >= 1");
            if chain.mixing_rate < lambda {
                let labels = h.flatten_main(seq[k]).into_iter().collect();
                return MetastableResult::new(labels, Rule::Theorem2, k, BTreeSet::new());
            }
            (k, seq[k - 1].index, h.level(k), Some(chain), Rule::Reachability)
        }
        None => {
            // Above the exit rate of the top unit of an absorbing family: the
            // top level's arrows form a DAG whose sinks never release the
            // process.
            let m = h.depth();
            (m + 1, seq[m - 1].index, h.level(m), None, Rule::BeyondTop)
        }
    };

    let w = walk(start, lambda, &level.arrows, within);
    let mut entries = BTreeSet::new();
    for unit in w.trapped.iter().chain(&w.leaked) {
        if *unit == start {
            continue;
        }
        for &src in &w.sources[unit] {
            entries.extend(level.landing_labels[src][*unit].iter().copied());
        }
    }

    stack.push(label);
    let mut labels = BTreeSet::new();
    for &j in &entries {
        if stack.contains(&j) {
            continue;
        }
        labels.extend(general(h, j, lambda, stack).labels);
    }
    stack.pop();
    // empty when every entry loops back to a label already on the stack;
    // the caller's other entries supply the answer
    MetastableResult::new(labels, rule, rank, entries)
}

/// One interval of `lambda` values sharing the same answer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Regime {
    pub lo: f64,
    /// `f64::INFINITY` for the last interval.
    pub hi: f64,
    pub result: MetastableResult,
}

/// Answers between consecutive breakpoints, evaluated at midpoints.
///
/// Neighbouring intervals with the same labels, certainty and rank are merged.
/// The interval above every breakpoint is kept separate: it is the limit
/// regime and is reported even when it repeats the previous answer.
pub fn regime_table(h: &Hierarchy, label: usize) -> Result<Vec<Regime>, MetastableError> {
    Ok(merge_regimes(raw_regimes(h, label)?))
}

/// Unmerged intervals between consecutive breakpoints.
pub fn raw_regimes(h: &Hierarchy, label: usize) -> Result<Vec<Regime>, MetastableError> {
    if label >= h.label_count() {
        return Err(MetastableError::UnknownLabel(label));
    }
    let mut edges = vec![0.0];
    edges.extend(h.breakpoints());
    edges.push(f64::INFINITY);
    let mut out = Vec::with_capacity(edges.len() - 1);
    for win in edges.windows(2) {
        let (lo, hi) = (win[0], win[1]);
        let lambda = if hi.is_infinite() { lo + 1.0 } else { 0.5 * (lo + hi) };
        let margin = if hi.is_infinite() { DEFAULT_MARGIN } else { DEFAULT_MARGIN.min(0.25 * (hi - lo)) };
        let q = MetastableQuery::new(label, lambda).with_margin(margin);
        out.push(Regime { lo, hi, result: metastable_general(h, &q)? });
    }
    Ok(out)
}

fn merge_regimes(raw: Vec<Regime>) -> Vec<Regime> {
    let mut out: Vec<Regime> = Vec::with_capacity(raw.len());
    for r in raw {
        if let Some(last) = out.last_mut() {
            let same = last.result.labels == r.result.labels
                && last.result.certainty == r.result.certainty
                && last.result.rank == r.result.rank;
            if same && r.hi.is_finite() {
                last.hi = r.hi;
                continue;
            }
        }
        out.push(r);
    }
    out
}

/// Representative `lambda` inside an interval.
pub fn midpoint(r: &Regime) -> f64 {
    if r.hi.is_infinite() {
        r.lo + 1.0
    } else {
        0.5 * (r.lo + r.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn run(h: &Hierarchy, label: usize, lambda: f64) -> MetastableResult {
        metastable_general(h, &MetastableQuery::new(label, lambda)).unwrap()
    }

    #[test]
    fn theorem2_examples() {
        let h4 = Hierarchy::build(&fixtures::figure4()).unwrap();
        let r = metastable_theorem2(&h4, &MetastableQuery::new(0, 4.0)).unwrap().unwrap();
        assert_eq!(r.labels, vec![2]);
        assert_eq!(r.rank, 1);
        let r = metastable_theorem2(&h4, &MetastableQuery::new(0, 9.5)).unwrap().unwrap();
        assert_eq!(r.labels, vec![2]);
        assert_eq!(r.rank, 2);

        let h3 = Hierarchy::build(&fixtures::figure3()).unwrap();
        let r = metastable_theorem2(&h3, &MetastableQuery::new(0, 3.5)).unwrap().unwrap();
        assert_eq!(r.labels, vec![2]);
        assert!(metastable_theorem2(&h3, &MetastableQuery::new(0, 1.5)).unwrap().is_none());
    }

    #[test]
    fn ambiguity_examples() {
        let h = Hierarchy::build(&fixtures::figure3()).unwrap();
        let lv = h.level(1);
        let c = &lv.chains[0];
        assert_eq!(ambiguity_set(0, 1.5, c, &lv.arrows, DEFAULT_MARGIN).unwrap(), vec![1, 2]);
        assert_eq!(ambiguity_set(0, 2.5, c, &lv.arrows, DEFAULT_MARGIN).unwrap(), vec![2]);
        assert_eq!(ambiguity_set(2, 1.5, c, &lv.arrows, DEFAULT_MARGIN).unwrap(), vec![2]);
        assert!(matches!(
            ambiguity_set(0, 2.0, c, &lv.arrows, DEFAULT_MARGIN),
            Err(MetastableError::BreakpointLambda { .. })
        ));
        assert!(matches!(
            ambiguity_set(0, 3.5, c, &lv.arrows, DEFAULT_MARGIN),
            Err(MetastableError::NotApplicable { .. })
        ));
    }

    #[test]
    fn general_examples() {
        let h = Hierarchy::build(&fixtures::figure4()).unwrap();
        let r = run(&h, 4, 0.5);
        assert_eq!((r.labels.clone(), r.rank), (vec![4], 0));
        assert_eq!(run(&h, 0, 2.5).labels, vec![2]);
        let r = run(&h, 0, 1.5);
        assert_eq!(r.labels, vec![1, 2]);
        assert_eq!(r.certainty, Certainty::AmbiguousSet);
        assert!(matches!(
            metastable_general(&h, &MetastableQuery::new(0, 9.0)),
            Err(MetastableError::BreakpointLambda { .. })
        ));
        assert!(matches!(
            metastable_general(&h, &MetastableQuery::new(0, -1.0)),
            Err(MetastableError::NonPositiveLambda(_))
        ));
    }

    fn summary(t: &[Regime]) -> Vec<(f64, f64, Vec<usize>)> {
        t.iter().map(|r| (r.lo, r.hi, r.result.labels.clone())).collect()
    }

    #[test]
    fn regime_tables_of_the_examples() {
        let inf = f64::INFINITY;
        let h4 = Hierarchy::build(&fixtures::figure4()).unwrap();
        assert_eq!(
            summary(&regime_table(&h4, 0).unwrap()),
            vec![
                (0.0, 1.0, vec![0]),
                (1.0, 2.0, vec![1, 2]),
                (2.0, 9.0, vec![2]),
                (9.0, 10.0, vec![2]),
                (10.0, inf, vec![2]),
            ]
        );
        let h3 = Hierarchy::build(&fixtures::figure3()).unwrap();
        assert_eq!(
            summary(&regime_table(&h3, 0).unwrap()),
            vec![(0.0, 1.0, vec![0]), (1.0, 2.0, vec![1, 2]), (2.0, 3.0, vec![2]), (3.0, inf, vec![2])]
        );
        assert_eq!(summary(&regime_table(&h3, 2).unwrap()), vec![(0.0, 3.0, vec![2]), (3.0, inf, vec![2])]);
    }

    #[test]
    fn absorbing_family_beyond_top() {
        const INF: f64 = f64::INFINITY;
        let v = crate::QuasiPotentialMatrix::from_rows(vec![
            vec![0.0, 1.0, 4.0, INF],
            vec![2.0, 0.0, INF, INF],
            vec![INF, INF, 0.0, 1.0],
            vec![INF, INF, 1.5, 0.0],
        ])
        .unwrap();
        let h = Hierarchy::build(&v).unwrap();
        // {1,2} is left at rate 5 into 3; {3,4} mixes at 1.5 with main {4}.
        assert_eq!(run(&h, 0, 3.0).labels, vec![1]);
        let r = run(&h, 0, 6.0);
        assert_eq!(r.rule, Rule::BeyondTop);
        assert_eq!(r.labels, vec![3]);
    }
}
