//! The two worked examples used throughout tests, docs and the CLI fixtures.

use crate::hierarchy::QuasiPotentialMatrix;

const INF: f64 = f64::INFINITY;

/// Three states, every state has two arrows, `alpha = (1, 2, 3)`.
pub fn figure3() -> QuasiPotentialMatrix {
    QuasiPotentialMatrix::from_rows(vec![
        vec![INF, 1.0, 1.0],
        vec![2.0, INF, 2.0],
        vec![3.0, 3.0, INF],
    ])
    .expect("figure-3 matrix is valid")
}

/// Five states: rank-1 chains `{1,2,3}`, `{4}`, `{5}`; `{1,2,3}` is left
/// through 1 into 4 at rate 9.
pub fn figure4() -> QuasiPotentialMatrix {
    let mut v = vec![vec![10.0; 5]; 5];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = INF;
    }
    v[0][1] = 1.0;
    v[0][2] = 1.0;
    v[1][2] = 2.0;
    v[2][0] = 3.0;
    v[3][0] = 5.0;
    v[4][0] = 6.0;
    v[0][3] = 7.0;
    QuasiPotentialMatrix::from_rows(v).expect("figure-4 matrix is valid")
}

/// Flavour of [`random_matrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    /// Integer costs in `1..=5`: ties are everywhere.
    Tied,
    /// Multiples of `1/64` in `[1, 6)`: ties are rare.
    Generic,
}

/// Random `l x l` cost matrix with finite off-diagonal entries. Every value
/// is a dyadic rational, so sums and differences are exact in `f64`.
pub fn random_matrix<R: rand::Rng>(rng: &mut R, l: usize, kind: CostKind) -> QuasiPotentialMatrix {
    let rows = (0..l)
        .map(|i| {
            (0..l)
                .map(|j| match (i == j, kind) {
                    (true, _) => INF,
                    (false, CostKind::Tied) => rng.random_range(1..=5) as f64,
                    (false, CostKind::Generic) => rng.random_range(64..384) as f64 / 64.0,
                })
                .collect()
        })
        .collect();
    QuasiPotentialMatrix::from_rows(rows).expect("random costs are valid")
}
