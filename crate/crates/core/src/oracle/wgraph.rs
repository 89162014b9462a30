use std::ops::{Add, Sub};

use num_rational::Ratio;
use num_traits::Zero;

use super::OracleError;
use crate::ext::ties;

/// Largest state count for brute-force j-graph enumeration.
pub const WGRAPH_LIMIT: usize = 7;

/// Exponent arithmetic: `f64` compares with the crate tie tolerance,
/// rationals compare exactly.
pub trait Exponent: Copy + PartialOrd + Add<Output = Self> + Sub<Output = Self> + Zero {
    fn tied(self, other: Self) -> bool;
}

impl Exponent for f64 {
    fn tied(self, other: Self) -> bool {
        ties(self, other)
    }
}

impl Exponent for Ratio<i64> {
    fn tied(self, other: Self) -> bool {
        self == other
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WGraph<C> {
    /// `None` when no j-graph exists.
    pub cost: Option<C>,
    pub achievers: usize,
}

fn to_options(exponents: &[Vec<f64>]) -> Vec<Vec<Option<f64>>> {
    exponents
        .iter()
        .map(|row| row.iter().map(|&e| e.is_finite().then_some(e)).collect())
        .collect()
}

/// `W(root)`: minimum total cost over spanning in-trees rooted at `root`,
/// with `inf` meaning a forbidden edge.
pub fn wgraph_exponent(exponents: &[Vec<f64>], root: usize) -> Result<WGraph<f64>, OracleError> {
    wgraph_exponent_with(&to_options(exponents), root)
}

pub fn wgraph_exponent_with<C: Exponent>(
    exponents: &[Vec<Option<C>>],
    root: usize,
) -> Result<WGraph<C>, OracleError> {
    let n = exponents.len();
    if n > WGRAPH_LIMIT {
        return Err(OracleError::TooLarge { states: n, limit: WGRAPH_LIMIT });
    }
    if exponents.iter().any(|r| r.len() != n) {
        return Err(OracleError::NotSquare);
    }
    let order: Vec<usize> = (0..n).filter(|&v| v != root).collect();
    let mut succ = vec![usize::MAX; n];
    let mut best = WGraph { cost: None, achievers: 0 };
    enumerate(exponents, root, &order, 0, C::zero(), &mut succ, &mut best);
    Ok(best)
}

fn enumerate<C: Exponent>(
    e: &[Vec<Option<C>>],
    root: usize,
    order: &[usize],
    depth: usize,
    cost: C,
    succ: &mut [usize],
    best: &mut WGraph<C>,
) {
    if let Some(b) = best.cost {
        if cost > b && !cost.tied(b) {
            return;
        }
    }
    if depth == order.len() {
        match best.cost {
            Some(b) if cost.tied(b) => best.achievers += 1,
            Some(b) if cost > b => {}
            _ => *best = WGraph { cost: Some(cost), achievers: 1 },
        }
        return;
    }
    let v = order[depth];
    for (w, edge) in e[v].iter().enumerate() {
        let Some(c) = *edge else { continue };
        if w == v || closes_cycle(succ, root, v, w) {
            continue;
        }
        succ[v] = w;
        enumerate(e, root, order, depth + 1, cost + c, succ, best);
        succ[v] = usize::MAX;
    }
}

/// Would `v -> w` close a cycle among already assigned successors?
fn closes_cycle(succ: &[usize], root: usize, v: usize, w: usize) -> bool {
    let mut x = w;
    for _ in 0..succ.len() {
        if x == v {
            return true;
        }
        if x == root || succ[x] == usize::MAX {
            return false;
        }
        x = succ[x];
    }
    true
}

/// `lim eps ln q_j = -(W(j) - min_k W(k))`; `-inf` where no j-graph exists.
pub fn stationary_log_limits(exponents: &[Vec<f64>]) -> Result<Vec<f64>, OracleError> {
    Ok(stationary_log_limits_with(&to_options(exponents))?
        .into_iter()
        .map(|v| v.unwrap_or(f64::NEG_INFINITY))
        .collect())
}

/// Same as [`stationary_log_limits`], `None` standing for `-inf`.
pub fn stationary_log_limits_with<C: Exponent>(
    exponents: &[Vec<Option<C>>],
) -> Result<Vec<Option<C>>, OracleError> {
    let w: Vec<Option<C>> = (0..exponents.len())
        .map(|j| wgraph_exponent_with(exponents, j).map(|g| g.cost))
        .collect::<Result<_, _>>()?;
    let Some(min) = w.iter().flatten().copied().reduce(|a, b| if b < a { b } else { a }) else {
        return Ok(vec![None; w.len()]);
    };
    Ok(w.into_iter().map(|x| x.map(|x| min - x)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn two_state() {
        let e = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        assert_eq!(wgraph_exponent(&e, 0).unwrap().cost, Some(2.0));
        assert_eq!(wgraph_exponent(&e, 1).unwrap().cost, Some(1.0));
        assert_eq!(stationary_log_limits(&e).unwrap(), vec![-1.0, 0.0]);
    }

    #[test]
    fn figure3_values() {
        let v = fixtures::figure3();
        let w: Vec<f64> = (0..3).map(|j| wgraph_exponent(v.rows(), j).unwrap().cost.unwrap()).collect();
        assert_eq!(w, vec![5.0, 4.0, 3.0]);
        // Three spanning in-trees per root on three states, e.g. root 3:
        // {1->3, 2->3}, {1->2, 2->3}, {2->1, 1->3}, all of cost 3.
        assert_eq!(wgraph_exponent(v.rows(), 2).unwrap().achievers, 3);
        assert_eq!(stationary_log_limits(v.rows()).unwrap(), vec![-2.0, -1.0, 0.0]);
    }

    #[test]
    fn counts_all_in_trees() {
        // Complete graph with unit costs: n^(n-2) trees per root (Cayley).
        for n in 2..=6 {
            let e = vec![vec![1.0; n]; n];
            let g = wgraph_exponent(&e, 0).unwrap();
            assert_eq!(g.cost, Some((n - 1) as f64));
            assert_eq!(g.achievers, n.pow(n as u32 - 2));
        }
    }

    #[test]
    fn rational_matches_float() {
        let r = |a: i64, b: i64| Some(Ratio::new(a, b));
        let e = vec![vec![None, r(1, 3), r(5, 2)], vec![r(2, 1), None, r(7, 4)], vec![r(1, 2), r(9, 5), None]];
        let lim = stationary_log_limits_with(&e).unwrap();
        let f: Vec<Vec<f64>> = e
            .iter()
            .map(|row| row.iter().map(|x| x.map_or(f64::INFINITY, |x| *x.numer() as f64 / *x.denom() as f64)).collect())
            .collect();
        let lf = stationary_log_limits(&f).unwrap();
        for (a, b) in lim.iter().zip(&lf) {
            let a = a.unwrap();
            assert!((*a.numer() as f64 / *a.denom() as f64 - b).abs() < 1e-12);
        }
    }

    #[test]
    fn too_large() {
        let e = vec![vec![1.0; 8]; 8];
        assert_eq!(wgraph_exponent(&e, 0), Err(OracleError::TooLarge { states: 8, limit: 7 }));
    }
}
