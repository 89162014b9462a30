use super::{build_hierarchy, compute_alphas, HierarchyError, QuasiPotentialMatrix};

/// A chain whose exit minimum or main subset is not attained uniquely.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExitTie {
    pub rank: usize,
    pub chain: usize,
    pub exit_achievers: usize,
    pub main_size: usize,
}

/// Where the minima behind the hierarchy are attained more than once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetryReport {
    /// Out-degree `d(i)` of every row of `V`.
    pub row_achievers: Vec<usize>,
    /// Rows of `V` with `d(i) > 1`.
    pub tied_rows: Vec<usize>,
    /// Rows of lifted tables (rank >= 2) with more than one arrow, as `(rank, unit)`.
    pub tied_lifted_rows: Vec<(usize, usize)>,
    pub chain_ties: Vec<ExitTie>,
}

impl SymmetryReport {
    pub fn has_ties(&self) -> bool {
        !self.tied_rows.is_empty() || !self.tied_lifted_rows.is_empty() || !self.chain_ties.is_empty()
    }
}

pub fn detect_rough_symmetry(v: &QuasiPotentialMatrix) -> Result<SymmetryReport, HierarchyError> {
    let arrows = compute_alphas(v)?;
    let row_achievers: Vec<usize> = (0..v.size()).map(|i| arrows.out_degree(i)).collect();
    let tied_rows = (0..v.size()).filter(|&i| row_achievers[i] > 1).collect();

    let h = build_hierarchy(v)?;
    let mut tied_lifted_rows = Vec::new();
    let mut chain_ties = Vec::new();
    for lv in h.levels() {
        if lv.rank >= 2 {
            tied_lifted_rows.extend(
                (0..lv.unit_count())
                    .filter(|&u| lv.arrows.out_degree(u) > 1)
                    .map(|u| (lv.rank, u)),
            );
        }
        for (c, chain) in lv.chains.iter().enumerate() {
            if chain.exit_pairs.len() > 1 || chain.main_subset.len() > 1 {
                chain_ties.push(ExitTie {
                    rank: lv.rank,
                    chain: c,
                    exit_achievers: chain.exit_pairs.len(),
                    main_size: chain.main_subset.len(),
                });
            }
        }
    }
    Ok(SymmetryReport { row_achievers, tied_rows, tied_lifted_rows, chain_ties })
}
