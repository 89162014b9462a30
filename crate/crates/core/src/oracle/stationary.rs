use super::{FiniteEpsilonChain, OracleError};

#[derive(Debug, Clone, PartialEq)]
pub struct Stationary {
    pub q: Vec<f64>,
    /// `max_j |(qP)_j - q_j|`.
    pub residual: f64,
}

/// True when every state reaches every other along positive entries.
pub fn is_irreducible(chain: &FiniteEpsilonChain) -> bool {
    let n = chain.size();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut stack = vec![0];
        while let Some(u) = stack.pop() {
            for v in 0..n {
                let p = if forward { chain.off_row(u)[v] } else { chain.off_row(v)[u] };
                if p > 0.0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    n == 1 || (reach(true) && reach(false))
}

/// Stationary vector by Grassmann-Taksar-Heyman elimination.
///
/// The elimination only adds and multiplies nonnegative numbers, so every
/// entry keeps full relative accuracy even when the probabilities span
/// hundreds of orders of magnitude.
pub fn stationary_exact(chain: &FiniteEpsilonChain) -> Result<Stationary, OracleError> {
    if !is_irreducible(chain) {
        return Err(OracleError::Reducible);
    }
    let n = chain.size();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| chain.off_row(i).to_vec()).collect();
    let mut s = vec![0.0; n];
    for k in (1..n).rev() {
        s[k] = a[k][..k].iter().sum();
        if s[k] <= 0.0 {
            return Err(OracleError::Reducible);
        }
        for i in 0..k {
            let f = a[i][k] / s[k];
            if f == 0.0 {
                continue;
            }
            for j in 0..k {
                if j != i {
                    a[i][j] += f * a[k][j];
                }
            }
        }
    }
    let mut q = vec![0.0; n];
    q[0] = 1.0;
    for k in 1..n {
        q[k] = (0..k).map(|i| q[i] * a[i][k]).sum::<f64>() / s[k];
    }
    let total: f64 = q.iter().sum();
    q.iter_mut().for_each(|x| *x /= total);

    let residual = (0..n)
        .map(|j| {
            let inflow: f64 = (0..n).filter(|&i| i != j).map(|i| q[i] * chain.off_row(i)[j]).sum();
            (inflow - q[j] * chain.leave(j)).abs()
        })
        .fold(0.0, f64::max);
    Ok(Stationary { q, residual })
}
