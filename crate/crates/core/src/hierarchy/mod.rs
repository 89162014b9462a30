//! Arrows, chains and the rank recursion built from a [`QuasiPotentialMatrix`].
//!
//! Level `k` of a [`Hierarchy`] has rank-`(k-1)` units as its states (level 1
//! uses the attractor labels) and partitions them into rank-`k` chains. The
//! cost table of level `k+1` is obtained from level `k` by [`lift_costs`].

mod matrix;
mod symmetry;

use std::collections::BTreeSet;

use thiserror::Error;

pub use matrix::QuasiPotentialMatrix;
pub use symmetry::{detect_rough_symmetry, ExitTie, SymmetryReport};

use crate::ext::{argmin_all, ties};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HierarchyError {
    #[error("need at least two labels, got {0}")]
    TooSmall(usize),
    #[error("row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("{labels} labels given for a {size}x{size} matrix")]
    LabelCount { labels: usize, size: usize },
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
    #[error("entry ({i}, {j}) is NaN")]
    NotANumber { i: usize, j: usize },
    #[error("entry ({i}, {j}) is negative ({value})")]
    NegativeCost { i: usize, j: usize, value: f64 },
    #[error("row {0} has no finite off-diagonal entry")]
    RowAllInfinite(usize),
}

/// `alpha_i = min_{j != i} V_ij` and the arrows `i -> j` to every achiever.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrowDiagram {
    pub alphas: Vec<f64>,
    pub targets: Vec<Vec<usize>>,
}

impl ArrowDiagram {
    /// Builds the diagram of an arbitrary square cost table. Rows without a
    /// finite entry get `alpha = inf` and no arrows (absorbing units of a
    /// lifted level).
    pub fn from_costs(costs: &[Vec<f64>]) -> Self {
        let n = costs.len();
        let mut alphas = Vec::with_capacity(n);
        let mut targets = Vec::with_capacity(n);
        for (i, row) in costs.iter().enumerate() {
            let (alpha, heads) =
                argmin_all((0..n).filter(|&j| j != i).map(|j| (j, row[j])));
            alphas.push(alpha);
            targets.push(heads);
        }
        Self { alphas, targets }
    }

    pub fn size(&self) -> usize {
        self.alphas.len()
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.targets[i].len()
    }

    pub fn has_arrow(&self, i: usize, j: usize) -> bool {
        self.targets[i].contains(&j)
    }
}

pub fn compute_alphas(v: &QuasiPotentialMatrix) -> Result<ArrowDiagram, HierarchyError> {
    let arrows = ArrowDiagram::from_costs(v.rows());
    if let Some(i) = arrows.targets.iter().position(Vec::is_empty) {
        return Err(HierarchyError::RowAllInfinite(i));
    }
    Ok(arrows)
}

/// Strongly connected classes of the arrow digraph, members sorted and classes
/// ordered by their smallest member.
pub fn partition_chains(arrows: &ArrowDiagram) -> Vec<Vec<usize>> {
    struct Tarjan<'a> {
        arrows: &'a ArrowDiagram,
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        out: Vec<Vec<usize>>,
    }

    impl Tarjan<'_> {
        fn visit(&mut self, v: usize) {
            self.index[v] = Some(self.next);
            self.low[v] = self.next;
            self.next += 1;
            self.stack.push(v);
            self.on_stack[v] = true;
            for &w in &self.arrows.targets[v] {
                match self.index[w] {
                    None => {
                        self.visit(w);
                        self.low[v] = self.low[v].min(self.low[w]);
                    }
                    Some(iw) if self.on_stack[w] => self.low[v] = self.low[v].min(iw),
                    Some(_) => {}
                }
            }
            if Some(self.low[v]) == self.index[v] {
                let mut class = Vec::new();
                loop {
                    let w = self.stack.pop().expect("tarjan stack underflow");
                    self.on_stack[w] = false;
                    class.push(w);
                    if w == v {
                        break;
                    }
                }
                class.sort_unstable();
                self.out.push(class);
            }
        }
    }

    let n = arrows.size();
    let mut t = Tarjan {
        arrows,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for v in 0..n {
        if t.index[v].is_none() {
            t.visit(v);
        }
    }
    t.out.sort_by_key(|c| c[0]);
    t.out
}

/// One chain of some rank. Member ids index the units of the chain's level.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub rank: usize,
    pub members: Vec<usize>,
    /// `r = max alpha` over members.
    pub depth_rate: f64,
    /// Zero for singletons, `r` otherwise.
    pub mixing_rate: f64,
    /// `m_i = alpha_i - r`, aligned with `members`.
    pub measure_rates: Vec<f64>,
    pub exit_rate: f64,
    /// `I`: members achieving the exit minimum.
    pub exit_set: Vec<usize>,
    /// `J`: outside units achieving the exit minimum.
    pub landing_set: Vec<usize>,
    /// Achieving `(i, j)` pairs behind `I` and `J`.
    pub exit_pairs: Vec<(usize, usize)>,
    /// Members with `m = 0`.
    pub main_subset: Vec<usize>,
    /// Within-chain cost table: `alpha_a` where an arrow `a -> b` exists, else inf.
    pub exponents: Vec<Vec<f64>>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_singleton(&self) -> bool {
        self.members.len() == 1
    }

    pub fn contains(&self, unit: usize) -> bool {
        self.members.binary_search(&unit).is_ok()
    }

    pub fn measure_rate(&self, unit: usize) -> Option<f64> {
        self.members
            .binary_search(&unit)
            .ok()
            .map(|pos| self.measure_rates[pos])
    }
}

/// Eq.-(10) quantities of a rank-1 chain. See [`Chain`] for field meanings.
pub fn chain_characteristics(members: &[usize], costs: &[Vec<f64>], arrows: &ArrowDiagram) -> Chain {
    characteristics(1, members, costs, arrows)
}

fn characteristics(rank: usize, members: &[usize], costs: &[Vec<f64>], arrows: &ArrowDiagram) -> Chain {
    let mut members = members.to_vec();
    members.sort_unstable();
    members.dedup();
    let inside: BTreeSet<usize> = members.iter().copied().collect();

    let r = members
        .iter()
        .map(|&u| arrows.alphas[u])
        .fold(f64::NEG_INFINITY, f64::max);
    let measure_rates: Vec<f64> = if members.len() == 1 {
        vec![0.0]
    } else {
        members.iter().map(|&u| arrows.alphas[u] - r).collect()
    };
    let main_subset = members
        .iter()
        .copied()
        .filter(|&u| ties(arrows.alphas[u], r))
        .collect();

    let candidates = members
        .iter()
        .filter(|&&u| arrows.alphas[u].is_finite())
        .flat_map(|&u| {
            let inside = &inside;
            (0..costs.len())
                .filter(move |v| !inside.contains(v))
                .map(move |v| ((u, v), r + (costs[u][v] - arrows.alphas[u])))
        });
    let (exit_rate, exit_pairs) = argmin_all(candidates);
    let exit_set: BTreeSet<usize> = exit_pairs.iter().map(|p| p.0).collect();
    let landing_set: BTreeSet<usize> = exit_pairs.iter().map(|p| p.1).collect();

    let exponents = members
        .iter()
        .map(|&a| {
            members
                .iter()
                .map(|&b| {
                    if a != b && arrows.has_arrow(a, b) {
                        arrows.alphas[a]
                    } else {
                        f64::INFINITY
                    }
                })
                .collect()
        })
        .collect();

    Chain {
        rank,
        mixing_rate: if members.len() == 1 { 0.0 } else { r },
        members,
        depth_rate: r,
        measure_rates,
        exit_rate,
        exit_set: exit_set.into_iter().collect(),
        landing_set: landing_set.into_iter().collect(),
        exit_pairs,
        main_subset,
        exponents,
    }
}

/// Cost table one rank up, with the argmin pairs behind every entry.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedCosts {
    pub costs: Vec<Vec<f64>>,
    /// `pairs[a][b]`: lower-level `(i, j)` pairs achieving `costs[a][b]`.
    pub pairs: Vec<Vec<Vec<(usize, usize)>>>,
}

/// `V'(A, B) = r(A) + min_{i in A, j in B} (V(i, j) - alpha(i))`.
pub fn lift_costs(chains: &[Chain], costs: &[Vec<f64>], arrows: &ArrowDiagram) -> LiftedCosts {
    let n = chains.len();
    let mut out = vec![vec![f64::INFINITY; n]; n];
    let mut pairs = vec![vec![Vec::new(); n]; n];
    for (a, ca) in chains.iter().enumerate() {
        for (b, cb) in chains.iter().enumerate() {
            if a == b {
                continue;
            }
            let cands = ca
                .members
                .iter()
                .filter(|&&i| arrows.alphas[i].is_finite())
                .flat_map(|&i| cb.members.iter().map(move |&j| ((i, j), costs[i][j] - arrows.alphas[i])));
            let (best, who) = argmin_all(cands);
            out[a][b] = ca.depth_rate + best;
            pairs[a][b] = who;
        }
    }
    LiftedCosts { costs: out, pairs }
}

/// Rank-`rank` partition of the rank-`(rank-1)` units.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub rank: usize,
    /// Costs between the units of this level.
    pub costs: Vec<Vec<f64>>,
    pub arrows: ArrowDiagram,
    pub chains: Vec<Chain>,
    /// Unit -> index of its chain in `chains`.
    pub chain_of: Vec<usize>,
    /// Attractor labels covered by each unit.
    pub unit_labels: Vec<Vec<usize>>,
    /// Labels the cheapest `a -> b` transition leaves from.
    pub departure_labels: Vec<Vec<Vec<usize>>>,
    /// Labels the cheapest `a -> b` transition lands on.
    pub landing_labels: Vec<Vec<Vec<usize>>>,
    /// Attractor labels covered by each chain.
    pub chain_labels: Vec<Vec<usize>>,
    /// Labels through which each chain is left.
    pub chain_exit_labels: Vec<Vec<usize>>,
    /// Labels on which each chain's exit lands.
    pub chain_landing_labels: Vec<Vec<usize>>,
}

impl Level {
    pub fn unit_count(&self) -> usize {
        self.costs.len()
    }
}

/// Pointer to a unit of the hierarchy: rank 0 is an attractor label, rank
/// `k >= 1` is chain `index` of level `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UnitRef {
    pub rank: usize,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hierarchy {
    matrix: QuasiPotentialMatrix,
    levels: Vec<Level>,
}

pub fn build_hierarchy(v: &QuasiPotentialMatrix) -> Result<Hierarchy, HierarchyError> {
    Hierarchy::build(v)
}

impl Hierarchy {
    pub fn build(v: &QuasiPotentialMatrix) -> Result<Self, HierarchyError> {
        compute_alphas(v)?;
        let l = v.size();
        let mut costs = v.rows().to_vec();
        let mut unit_labels: Vec<Vec<usize>> = (0..l).map(|i| vec![i]).collect();
        let mut departure_labels: Vec<Vec<Vec<usize>>> = (0..l)
            .map(|i| (0..l).map(|j| if i != j && costs[i][j].is_finite() { vec![i] } else { vec![] }).collect())
            .collect();
        let mut landing_labels: Vec<Vec<Vec<usize>>> = (0..l)
            .map(|i| (0..l).map(|j| if i != j && costs[i][j].is_finite() { vec![j] } else { vec![] }).collect())
            .collect();
        let mut levels: Vec<Level> = Vec::new();

        loop {
            let rank = levels.len() + 1;
            let arrows = ArrowDiagram::from_costs(&costs);
            let chains: Vec<Chain> = partition_chains(&arrows)
                .iter()
                .map(|m| characteristics(rank, m, &costs, &arrows))
                .collect();
            let mut chain_of = vec![0; costs.len()];
            for (c, chain) in chains.iter().enumerate() {
                for &u in &chain.members {
                    chain_of[u] = c;
                }
            }
            let union_of = |sets: &mut dyn Iterator<Item = &Vec<usize>>| -> Vec<usize> {
                let s: BTreeSet<usize> = sets.flatten().copied().collect();
                s.into_iter().collect()
            };
            let chain_labels: Vec<Vec<usize>> = chains
                .iter()
                .map(|c| union_of(&mut c.members.iter().map(|&u| &unit_labels[u])))
                .collect();
            let chain_exit_labels = chains
                .iter()
                .map(|c| union_of(&mut c.exit_pairs.iter().map(|&(a, b)| &departure_labels[a][b])))
                .collect();
            let chain_landing_labels = chains
                .iter()
                .map(|c| union_of(&mut c.exit_pairs.iter().map(|&(a, b)| &landing_labels[a][b])))
                .collect();

            let n_units = costs.len();
            let n_chains = chains.len();
            let next = (n_chains > 1 && n_chains < n_units).then(|| lift_costs(&chains, &costs, &arrows));
            let next_labels = next.as_ref().map(|lifted| {
                let gather = |table: &Vec<Vec<Vec<usize>>>| -> Vec<Vec<Vec<usize>>> {
                    lifted
                        .pairs
                        .iter()
                        .map(|row| {
                            row.iter()
                                .map(|ps| union_of(&mut ps.iter().map(|&(i, j)| &table[i][j])))
                                .collect()
                        })
                        .collect()
                };
                (gather(&departure_labels), gather(&landing_labels))
            });

            levels.push(Level {
                rank,
                costs: std::mem::take(&mut costs),
                arrows,
                chains,
                chain_of,
                unit_labels: std::mem::take(&mut unit_labels),
                departure_labels: std::mem::take(&mut departure_labels),
                landing_labels: std::mem::take(&mut landing_labels),
                chain_labels: chain_labels.clone(),
                chain_exit_labels,
                chain_landing_labels,
            });

            match (next, next_labels) {
                (Some(lifted), Some((dep, land))) => {
                    costs = lifted.costs;
                    unit_labels = chain_labels;
                    departure_labels = dep;
                    landing_labels = land;
                }
                _ => break,
            }
        }
        Ok(Self { matrix: v.clone(), levels })
    }

    pub fn matrix(&self) -> &QuasiPotentialMatrix {
        &self.matrix
    }

    pub fn label_count(&self) -> usize {
        self.matrix.size()
    }

    /// Number of levels `m`.
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// Level `k` (1-based).
    pub fn level(&self, k: usize) -> &Level {
        &self.levels[k - 1]
    }

    pub fn chain(&self, unit: UnitRef) -> Option<&Chain> {
        (unit.rank >= 1).then(|| &self.levels[unit.rank - 1].chains[unit.index])
    }

    /// True when the top level is a single chain covering every label. False
    /// when some family of chains is absorbing and the recursion stalled.
    pub fn is_complete(&self) -> bool {
        self.levels.last().is_some_and(|lv| lv.chains.len() == 1)
    }

    /// `E^(0)(i), E^(1)(i), ..., E^(m)(i)`.
    pub fn rank_sequence(&self, label: usize) -> Vec<UnitRef> {
        let mut out = vec![UnitRef { rank: 0, index: label }];
        let mut idx = label;
        for (k, lv) in self.levels.iter().enumerate() {
            idx = lv.chain_of[idx];
            out.push(UnitRef { rank: k + 1, index: idx });
        }
        out
    }

    /// Exit rate of a unit; for a bare label this is `alpha_i`.
    pub fn exit_rate(&self, unit: UnitRef) -> f64 {
        match self.chain(unit) {
            None => self.levels[0].arrows.alphas[unit.index],
            Some(c) => c.exit_rate,
        }
    }

    /// `e(E^(k)(i))` for `k = 0..=m`.
    pub fn exit_rates(&self, label: usize) -> Vec<f64> {
        self.rank_sequence(label).into_iter().map(|u| self.exit_rate(u)).collect()
    }

    /// Attractor labels covered by a unit.
    pub fn labels_of(&self, unit: UnitRef) -> Vec<usize> {
        if unit.rank == 0 {
            vec![unit.index]
        } else {
            self.levels[unit.rank - 1].chain_labels[unit.index].clone()
        }
    }

    /// Main subset pushed down to attractor labels (main members of main
    /// members, and so on).
    pub fn flatten_main(&self, unit: UnitRef) -> Vec<usize> {
        let Some(chain) = self.chain(unit) else {
            return vec![unit.index];
        };
        let mut out = BTreeSet::new();
        for &m in &chain.main_subset {
            out.extend(self.flatten_main(UnitRef { rank: unit.rank - 1, index: m }));
        }
        out.into_iter().collect()
    }

    /// Predicted `lim eps ln mu(i)` for the invariant measure: the sum of the
    /// measure rates of `E^(k-1)(i)` inside `E^(k)(i)` over all ranks.
    /// Meaningful for complete hierarchies.
    pub fn measure_exponent(&self, label: usize) -> f64 {
        let seq = self.rank_sequence(label);
        seq.windows(2)
            .map(|w| {
                self.chain(w[1])
                    .and_then(|c| c.measure_rate(w[0].index))
                    .expect("rank sequence is nested")
            })
            .sum()
    }

    /// Every finite `alpha`, `r` and `e` appearing anywhere in the hierarchy,
    /// sorted, ties merged.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut all: Vec<f64> = Vec::new();
        for lv in &self.levels {
            all.extend(lv.arrows.alphas.iter().copied());
            for c in &lv.chains {
                all.push(c.depth_rate);
                all.push(c.exit_rate);
            }
        }
        all.retain(|v| v.is_finite() && *v > 0.0);
        all.sort_by(f64::total_cmp);
        all.dedup_by(|a, b| ties(*a, *b));
        all
    }
}
