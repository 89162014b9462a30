use serde::Serialize;

use super::OracleError;

/// Least-squares extrapolation of `eps ln v(eps)` to `eps = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub intercept: f64,
    pub slope: f64,
    /// Coefficient of the `eps ln eps` column when it is fitted, else 0.
    pub log_slope: f64,
    /// Root mean square of the fit residuals.
    pub residual: f64,
}

fn check_grid(eps: &[f64], len: usize) -> Result<(), OracleError> {
    if eps.len() != len || eps.len() < 3 {
        return Err(OracleError::DegenerateGrid);
    }
    let mut sorted = eps.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).filter(|w| w[0] != w[1]).count() < 2 || sorted[0] <= 0.0 {
        return Err(OracleError::DegenerateGrid);
    }
    Ok(())
}

/// Affine fit of `eps ln v` against `eps`.
pub fn rate_fit(eps: &[f64], values: &[f64]) -> Result<RateFit, OracleError> {
    let logs = log_values(values)?;
    rate_fit_ln(eps, &logs)
}

/// [`rate_fit`] with `ln v` supplied directly, for values below `f64` range.
pub fn rate_fit_ln(eps: &[f64], ln_values: &[f64]) -> Result<RateFit, OracleError> {
    check_grid(eps, ln_values.len())?;
    let y: Vec<f64> = eps.iter().zip(ln_values).map(|(e, l)| e * l).collect();
    let cols = [vec![1.0; eps.len()], eps.to_vec()];
    let (coef, residual) = least_squares(&cols, &y)?;
    Ok(RateFit { intercept: coef[0], slope: coef[1], log_slope: 0.0, residual })
}

/// Fit of `eps ln v` against `1, eps, eps ln eps`. Removes the bias that a
/// power-law prefactor `eps^k` puts into the affine intercept.
pub fn rate_fit_with_log_term(eps: &[f64], values: &[f64]) -> Result<RateFit, OracleError> {
    let logs = log_values(values)?;
    check_grid(eps, logs.len())?;
    let y: Vec<f64> = eps.iter().zip(&logs).map(|(e, l)| e * l).collect();
    let cols = [vec![1.0; eps.len()], eps.to_vec(), eps.iter().map(|e| e * e.ln()).collect()];
    let (coef, residual) = least_squares(&cols, &y)?;
    Ok(RateFit { intercept: coef[0], slope: coef[1], log_slope: coef[2], residual })
}

fn log_values(values: &[f64]) -> Result<Vec<f64>, OracleError> {
    values
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            if value > 0.0 && value.is_finite() {
                Ok(value.ln())
            } else {
                Err(OracleError::NonPositiveValue { index, value })
            }
        })
        .collect()
}

/// Normal equations; the problems here have at most three columns.
fn least_squares(cols: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, f64), OracleError> {
    let p = cols.len();
    if y.len() < p {
        return Err(OracleError::DegenerateGrid);
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut m: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            let mut row: Vec<f64> = (0..p).map(|j| dot(&cols[i], &cols[j])).collect();
            row.push(dot(&cols[i], y));
            row
        })
        .collect();
    for c in 0..p {
        let piv = (c..p).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).expect("nonempty");
        m.swap(c, piv);
        if m[c][c].abs() < 1e-300 {
            return Err(OracleError::DegenerateGrid);
        }
        for r in 0..p {
            if r != c {
                let f = m[r][c] / m[c][c];
                for k in c..=p {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    let coef: Vec<f64> = (0..p).map(|i| m[i][p] / m[i][i]).collect();
    let ss: f64 = (0..y.len())
        .map(|k| {
            let fit: f64 = (0..p).map(|i| coef[i] * cols[i][k]).sum();
            (y[k] - fit).powi(2)
        })
        .sum();
    Ok((coef, (ss / y.len() as f64).sqrt()))
}
