use super::{FiniteEpsilonChain, OracleError};

/// Cap on the number of squarings, i.e. on `lambda / (eps ln 2)`.
pub const MAX_SQUARINGS: usize = 400;
const DRIFT_TOLERANCE: f64 = 1e-6;

/// Rows of `P^T` for `T = floor(exp(lambda / eps))`.
#[derive(Debug, Clone, PartialEq)]
pub struct NStep {
    pub rows: Vec<Vec<f64>>,
    /// `T` as a float; above 2^53 it is rounded down to 53 significant bits.
    pub steps: f64,
    pub multiplications: usize,
    /// Accumulated disagreement between the two ways of computing each
    /// row's leaving mass; nondecreasing in the number of products.
    pub drift: f64,
}

/// A stochastic matrix stored as `I + Q`: off-diagonal entries plus each
/// row's leaving mass `1 - p_ii`. Products are formed without ever
/// subtracting close numbers.
#[derive(Clone)]
struct Deviation {
    off: Vec<Vec<f64>>,
    leave: Vec<f64>,
}

impl Deviation {
    fn identity(n: usize) -> Self {
        Self { off: vec![vec![0.0; n]; n], leave: vec![0.0; n] }
    }

    fn diag(&self, i: usize) -> f64 {
        1.0 - self.leave[i]
    }

    /// `self * other`, returning the product and its row-sum drift.
    fn mul(&self, other: &Self) -> (Self, f64) {
        let n = self.leave.len();
        let mut off = vec![vec![0.0; n]; n];
        let mut leave = vec![0.0; n];
        let mut drift: f64 = 0.0;
        for i in 0..n {
            let ai = &self.off[i];
            let aii = self.diag(i);
            let mut returns = 0.0;
            for (k, &aik) in ai.iter().enumerate() {
                if k != i && aik != 0.0 {
                    returns += aik * other.off[k][i];
                }
            }
            for j in 0..n {
                if j == i {
                    continue;
                }
                let mut s = aii * other.off[i][j] + ai[j] * other.diag(j);
                for (k, &aik) in ai.iter().enumerate() {
                    if k != i && k != j && aik != 0.0 {
                        s += aik * other.off[k][j];
                    }
                }
                off[i][j] = s;
            }
            let summed: f64 = off[i].iter().sum();
            let direct = self.leave[i] + other.leave[i] - self.leave[i] * other.leave[i] - returns;
            drift = drift.max((summed - direct).abs());
            leave[i] = summed;
        }
        (Self { off, leave }, drift)
    }
}

fn squarings_needed(lambda: f64, eps: f64) -> usize {
    (lambda / (eps * std::f64::consts::LN_2)).ceil() as usize
}

pub fn nstep_distribution(chain: &FiniteEpsilonChain, lambda: f64) -> Result<NStep, OracleError> {
    let eps = chain.epsilon();
    let needed = squarings_needed(lambda, eps);
    if needed > MAX_SQUARINGS {
        return Err(OracleError::TooManySquarings { needed, limit: MAX_SQUARINGS });
    }
    let n = chain.size();
    let base = Deviation {
        off: (0..n).map(|i| chain.off_row(i).to_vec()).collect(),
        leave: (0..n).map(|i| chain.leave(i)).collect(),
    };

    // T = mantissa * 2^shift with an integer mantissa below 2^53.
    let t = (lambda / eps).exp().floor().max(1.0);
    let (mantissa, shift) = if t < 2f64.powi(53) {
        (t as u64, 0)
    } else {
        let shift = t.log2().floor() as i32 - 52;
        ((t / 2f64.powi(shift)).floor() as u64, shift as usize)
    };

    let mut multiplications = 0;
    let mut drift = 0.0;
    let mut acc = Deviation::identity(n);
    let mut pow = base;
    let mut m = mantissa;
    let mut first = true;
    while m > 0 {
        if m & 1 == 1 {
            if first {
                acc = pow.clone();
                first = false;
            } else {
                let (next, d) = acc.mul(&pow);
                acc = next;
                drift += d;
                multiplications += 1;
            }
        }
        m >>= 1;
        if m > 0 {
            let (next, d) = pow.mul(&pow);
            pow = next;
            drift += d;
            multiplications += 1;
        }
    }
    for _ in 0..shift {
        let (next, d) = acc.mul(&acc);
        acc = next;
        drift += d;
        multiplications += 1;
    }
    if drift > DRIFT_TOLERANCE {
        return Err(OracleError::PrecisionLoss { drift });
    }
    let rows = (0..n)
        .map(|i| (0..n).map(|j| if i == j { acc.diag(i) } else { acc.off[i][j] }).collect())
        .collect();
    let steps = mantissa as f64 * 2f64.powi(shift as i32);
    Ok(NStep { rows, steps, multiplications, drift })
}
