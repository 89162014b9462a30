use std::collections::HashSet;

use super::HierarchyError;

/// Transition costs `V_ij` between `l >= 2` attractor labels.
///
/// `f64::INFINITY` marks a transition with no finite cost. The diagonal is
/// ignored and stored as infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiPotentialMatrix {
    labels: Vec<String>,
    cost: Vec<Vec<f64>>,
}

impl QuasiPotentialMatrix {
    pub fn new(labels: Vec<String>, mut cost: Vec<Vec<f64>>) -> Result<Self, HierarchyError> {
        let l = cost.len();
        if l < 2 {
            return Err(HierarchyError::TooSmall(l));
        }
        if labels.len() != l {
            return Err(HierarchyError::LabelCount { labels: labels.len(), size: l });
        }
        let mut seen = HashSet::new();
        for name in &labels {
            if !seen.insert(name.as_str()) {
                return Err(HierarchyError::DuplicateLabel(name.clone()));
            }
        }
        for (i, row) in cost.iter_mut().enumerate() {
            if row.len() != l {
                return Err(HierarchyError::NotSquare { row: i, len: row.len(), expected: l });
            }
            row[i] = f64::INFINITY;
            for (j, &v) in row.iter().enumerate() {
                if j == i {
                    continue;
                }
                if v.is_nan() {
                    return Err(HierarchyError::NotANumber { i, j });
                }
                if v < 0.0 {
                    return Err(HierarchyError::NegativeCost { i, j, value: v });
                }
            }
            if row.iter().all(|v| v.is_infinite()) {
                return Err(HierarchyError::RowAllInfinite(i));
            }
        }
        Ok(Self { labels, cost })
    }

    /// Labels `"1"..="l"`.
    pub fn from_rows(cost: Vec<Vec<f64>>) -> Result<Self, HierarchyError> {
        let labels = (1..=cost.len()).map(|i| i.to_string()).collect();
        Self::new(labels, cost)
    }

    pub fn size(&self) -> usize {
        self.cost.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.cost[i][j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.cost
    }

    /// `c * V` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        assert!(c > 0.0, "scale must be positive");
        let cost = self
            .cost
            .iter()
            .map(|row| row.iter().map(|v| v * c).collect())
            .collect();
        Self { labels: self.labels.clone(), cost }
    }

    /// Relabel so that new index `k` is old index `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let l = self.size();
        assert_eq!(perm.len(), l);
        let labels = perm.iter().map(|&p| self.labels[p].clone()).collect();
        let cost = (0..l)
            .map(|a| (0..l).map(|b| self.cost[perm[a]][perm[b]]).collect())
            .collect();
        Self { labels, cost }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const INF: f64 = f64::INFINITY;

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            QuasiPotentialMatrix::from_rows(vec![vec![0.0]]),
            Err(HierarchyError::TooSmall(1))
        );
        assert_eq!(
            QuasiPotentialMatrix::from_rows(vec![vec![0.0, 1.0], vec![INF, 0.0]]),
            Err(HierarchyError::RowAllInfinite(1))
        );
        assert!(matches!(
            QuasiPotentialMatrix::from_rows(vec![vec![0.0, -1.0], vec![1.0, 0.0]]),
            Err(HierarchyError::NegativeCost { i: 0, j: 1, .. })
        ));
        assert!(matches!(
            QuasiPotentialMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0]]),
            Err(HierarchyError::NotSquare { row: 1, .. })
        ));
        assert!(matches!(
            QuasiPotentialMatrix::new(vec!["a".into(), "a".into()], vec![vec![0.0, 1.0], vec![1.0, 0.0]]),
            Err(HierarchyError::DuplicateLabel(_))
        ));
    }

    #[test]
    fn diagonal_is_ignored() {
        let v = QuasiPotentialMatrix::from_rows(vec![vec![-5.0, 1.0], vec![2.0, f64::NAN]]).unwrap();
        assert!(v.cost(0, 0).is_infinite());
        assert!(v.cost(1, 1).is_infinite());
    }
}
