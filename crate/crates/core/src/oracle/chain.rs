use super::OracleError;

/// Transition table `p_ij = exp(-E_ij / eps)` for `i != j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteEpsilonChain {
    exponents: Vec<Vec<f64>>,
    epsilon: f64,
    off: Vec<Vec<f64>>,
    leave: Vec<f64>,
}

pub fn build_chain(exponents: &[Vec<f64>], epsilon: f64) -> Result<FiniteEpsilonChain, OracleError> {
    FiniteEpsilonChain::new(exponents, epsilon)
}

impl FiniteEpsilonChain {
    pub fn new(exponents: &[Vec<f64>], epsilon: f64) -> Result<Self, OracleError> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(OracleError::BadEpsilon(epsilon));
        }
        let n = exponents.len();
        let mut off = vec![vec![0.0; n]; n];
        let mut leave = vec![0.0; n];
        for (i, row) in exponents.iter().enumerate() {
            if row.len() != n {
                return Err(OracleError::NotSquare);
            }
            for (j, &e) in row.iter().enumerate() {
                if i == j {
                    continue;
                }
                if e.is_nan() || e < 0.0 {
                    return Err(OracleError::BadExponent { i, j });
                }
                off[i][j] = (-e / epsilon).exp();
            }
            leave[i] = off[i].iter().sum();
            if leave[i] > 1.0 {
                return Err(OracleError::DiagonalNegative { state: i, epsilon });
            }
        }
        let mut exponents = exponents.to_vec();
        for (i, row) in exponents.iter_mut().enumerate() {
            row[i] = f64::INFINITY;
        }
        Ok(Self { exponents, epsilon, off, leave })
    }

    pub fn size(&self) -> usize {
        self.leave.len()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn exponents(&self) -> &[Vec<f64>] {
        &self.exponents
    }

    pub fn prob(&self, i: usize, j: usize) -> f64 {
        if i == j {
            1.0 - self.leave[i]
        } else {
            self.off[i][j]
        }
    }

    /// `1 - p_ii`, summed from the off-diagonal entries.
    pub fn leave(&self, i: usize) -> f64 {
        self.leave[i]
    }

    /// Off-diagonal row `i`; the diagonal slot holds 0.
    pub fn off_row(&self, i: usize) -> &[f64] {
        &self.off[i]
    }

    pub fn dense(&self) -> Vec<Vec<f64>> {
        (0..self.size())
            .map(|i| (0..self.size()).map(|j| self.prob(i, j)).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn two_state_entries() {
        let c = build_chain(&[vec![0.0, 1.0], vec![2.0, 0.0]], 1.0).unwrap();
        assert_eq!(c.prob(0, 1), (-1f64).exp());
        assert_eq!(c.prob(1, 0), (-2f64).exp());
        assert_eq!(c.prob(0, 0), 1.0 - (-1f64).exp());
    }

    #[test]
    fn figure3_matrix() {
        let eps = 0.7;
        let c = build_chain(fixtures::figure3().rows(), eps).unwrap();
        for (i, alpha) in [1.0f64, 2.0, 3.0].into_iter().enumerate() {
            let p = (-alpha / eps).exp();
            for j in 0..3 {
                let want = if i == j { 1.0 - 2.0 * p } else { p };
                assert_eq!(c.prob(i, j), want);
            }
            let row: f64 = (0..3).map(|j| c.prob(i, j)).sum();
            assert!((row - 1.0).abs() <= 1e-14);
        }
    }

    #[test]
    fn diagonal_goes_negative_for_large_eps() {
        let v = fixtures::figure3();
        assert!(build_chain(v.rows(), 1.0).is_ok());
        // 1 - 2 exp(-1/eps) < 0 once eps > 1/ln 2.
        assert_eq!(
            build_chain(v.rows(), 10.0),
            Err(OracleError::DiagonalNegative { state: 0, epsilon: 10.0 })
        );
        assert!(matches!(build_chain(v.rows(), 0.0), Err(OracleError::BadEpsilon(_))));
    }

    #[test]
    fn infinite_exponent_is_forbidden() {
        let inf = f64::INFINITY;
        let c = build_chain(&[vec![0.0, inf], vec![1.0, 0.0]], 0.5).unwrap();
        assert_eq!(c.prob(0, 1), 0.0);
        assert_eq!(c.prob(0, 0), 1.0);
    }
}
