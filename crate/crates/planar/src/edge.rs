//! One-dimensional diffusion along a graph edge, used to settle which
//! normalisation of `alpha_i` matches exit times.
//!
//! In the distance `zeta = |z - H(O_i)|` from the extremum the averaged
//! generator, Ito correction included, is
//! `(1/T) [ (kappa/2) (a_hat u')' - |beta_hat| u' ]`. Its mean exit time
//! from the extremum to the separatrix has the closed form
//! `(2/kappa) int_0^Z dy / a_hat(y) e^{Phi(y)/kappa} int_0^y T(w) e^{-Phi(w)/kappa} dw`
//! with `Phi = int 2 |beta_hat| / a_hat`, so `kappa ln tau -> Phi(Z)`.
//!
//! The same coefficients give the split at the vertex at fixed `kappa`
//! (the `delta -> 0` limit alone), see [`vertex_split`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::level::{line_integral, period, Precision};
use crate::quad::QuadConfig;
use crate::system::{Lobe, TwoDiskSystem};
use crate::PlanarError;

/// Averaged coefficients on cells of `[0, Z]`, clustered at both ends.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeTable {
    pub lobe: Lobe,
    pub length: f64,
    pub midpoints: Vec<f64>,
    pub widths: Vec<f64>,
    pub period: Vec<f64>,
    pub a_hat: Vec<f64>,
    pub beta_hat: Vec<f64>,
    /// `Phi` at the cell boundaries.
    pub potential: Vec<f64>,
    /// Drift toward the extremum per unit `kappa` left over when the Ito
    /// generator `(kappa/2) s Laplacian` is put in divergence form:
    /// `-(sign z / 2) oint s'(x) H_x / |grad H| dl`. Zero for `c_a = 0`.
    pub ito: Vec<f64>,
    /// `Psi = int 2 ito / a_hat` at the cell boundaries, so that the
    /// potential at finite `kappa` is `Phi + kappa Psi`.
    pub ito_potential: Vec<f64>,
}

pub fn edge_table(sys: &TwoDiskSystem, lobe: Lobe, cells: usize, prec: &Precision) -> Result<EdgeTable, PlanarError> {
    if lobe == Lobe::G4 || cells < 4 {
        return Err(PlanarError::BadTargets("edge table needs lobe 1 to 3 and at least 4 cells".into()));
    }
    let ze = sys.extremum_level(lobe);
    let len = ze.abs();
    let edge = |u: f64| 0.5 * len * (1.0 - (std::f64::consts::PI * u).cos());
    let mut t = Table::default();
    // the Ito integrand is odd in x on G2, so its integral can vanish
    let loose = Precision { line: QuadConfig { abs_tol: 1e-10, ..prec.line }, ..*prec };
    for k in 0..cells {
        let (lo, hi) = (edge(k as f64 / cells as f64), edge((k + 1) as f64 / cells as f64));
        let zeta = 0.5 * (lo + hi);
        let z = ze - ze.signum() * zeta;
        t.mid.push(zeta);
        t.width.push(hi - lo);
        t.period.push(period(sys, lobe, z, prec)?);
        t.a_hat.push(line_integral(sys, lobe, z, |p, n| sys.s(p) * n, prec)?);
        t.beta_hat.push((sys.c_beta * z * line_integral(sys, lobe, z, |p, n| sys.m(p) * n, prec)?).abs());
        let g = line_integral(sys, lobe, z, |p, n| sys.ds_dx(p) * sys.grad_h(p)[0] / n, &loose)?;
        t.ito.push(-0.5 * z.signum() * g);
    }
    let mut potential = vec![0.0];
    let mut ito_potential = vec![0.0];
    for k in 0..cells {
        potential.push(potential[k] + 2.0 * t.beta_hat[k] / t.a_hat[k] * t.width[k]);
        ito_potential.push(ito_potential[k] + 2.0 * t.ito[k] / t.a_hat[k] * t.width[k]);
    }
    Ok(EdgeTable {
        lobe,
        length: len,
        midpoints: t.mid,
        widths: t.width,
        period: t.period,
        a_hat: t.a_hat,
        beta_hat: t.beta_hat,
        potential,
        ito: t.ito,
        ito_potential,
    })
}

#[derive(Default)]
struct Table {
    mid: Vec<f64>,
    width: Vec<f64>,
    period: Vec<f64>,
    a_hat: Vec<f64>,
    beta_hat: Vec<f64>,
    ito: Vec<f64>,
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

impl EdgeTable {
    /// `Phi(Z) / 2`, comparable with [`crate::theory::alpha_limit`].
    pub fn half_barrier(&self) -> f64 {
        0.5 * self.potential[self.potential.len() - 1]
    }

    /// `Phi + kappa Psi` at the cell boundaries.
    fn potential_at(&self, kappa: f64) -> Vec<f64> {
        self.potential.iter().zip(&self.ito_potential).map(|(p, q)| p + kappa * q).collect()
    }

    /// `ln` of the mean exit time from the extremum, by the closed form on
    /// the cell midpoints.
    pub fn log_exit_time(&self, kappa: f64) -> f64 {
        let n = self.midpoints.len();
        let pot = self.potential_at(kappa);
        let phi: Vec<f64> = (0..n).map(|k| 0.5 * (pot[k] + pot[k + 1])).collect();
        let mut inner = f64::NEG_INFINITY;
        let mut total = f64::NEG_INFINITY;
        for j in 0..n {
            let own = (self.period[j] * self.widths[j]).ln() - phi[j] / kappa;
            // half of the own cell: the inner integral stops at y
            let with_own = log_add(inner, own - std::f64::consts::LN_2);
            inner = log_add(inner, own);
            let term = with_own + phi[j] / kappa + (self.widths[j] / self.a_hat[j]).ln();
            total = log_add(total, term);
        }
        total + (2.0 / kappa).ln()
    }

    fn locate(&self, zeta: f64) -> usize {
        match self.midpoints.binary_search_by(|m| m.total_cmp(&zeta)) {
            Ok(k) | Err(k) => k.min(self.midpoints.len() - 1),
        }
    }

    /// Drift and squared diffusion of the edge SDE in `zeta`.
    fn coefficients(&self, zeta: f64, kappa: f64) -> (f64, f64) {
        let k = self.locate(zeta);
        let n = self.midpoints.len();
        let (k0, k1) = if k == 0 { (0, 1) } else if k >= n - 1 { (n - 2, n - 1) } else { (k - 1, k) };
        let (m0, m1) = (self.midpoints[k0], self.midpoints[k1]);
        let w = ((zeta - m0) / (m1 - m0)).clamp(0.0, 1.0);
        let lerp = |v: &[f64]| v[k0] + w * (v[k1] - v[k0]);
        let t = lerp(&self.period);
        let a = lerp(&self.a_hat).max(0.0);
        let b = lerp(&self.beta_hat) + kappa * lerp(&self.ito);
        let da = (self.a_hat[k1] - self.a_hat[k0]) / (m1 - m0);
        ((0.5 * kappa * da - b) / t, kappa * a / t)
    }

    /// `R = int e^{-(Phi_k(Z) - Phi_k(zeta)) / kappa} / a_hat dzeta` over
    /// `[cut, Z]`, with `Phi_k = Phi + kappa Psi` taken linear on each cell.
    /// The vertex sends the process into this edge with weight `1 / R`.
    pub fn vertex_resistance(&self, kappa: f64, cut: f64) -> f64 {
        let pot = self.potential_at(kappa);
        let top = pot[pot.len() - 1];
        let mut lo = 0.0;
        let mut total = 0.0;
        for k in 0..self.midpoints.len() {
            let hi = lo + self.widths[k];
            if hi > cut {
                let from = lo.max(cut);
                let slope = (pot[k + 1] - pot[k]) / self.widths[k] / kappa;
                let e0 = (pot[k] + slope * kappa * (from - lo) - top) / kappa;
                let x = slope * (hi - from);
                // int_0^{hi-from} e^{e0 + slope t} dt, factored so that the
                // exponent never goes positive
                let part = if x.abs() < 1e-8 {
                    (hi - from) * (e0 + 0.5 * x).exp()
                } else if x > 0.0 {
                    (e0 + x).exp() * -(-x).exp_m1() / slope
                } else {
                    e0.exp() * x.exp_m1() / slope
                };
                total += part / self.a_hat[k];
            }
            lo = hi;
        }
        total
    }
}

/// Largest `|H - H(O_i)|` on the circle of radius `rho` around `O_i`: the
/// level at which the averaged process first touches the `rho`-ball.
pub fn ball_cut(sys: &TwoDiskSystem, lobe: Lobe, rho: f64) -> f64 {
    let o = sys.equilibrium(lobe).expect("lobes 1 to 3 have an equilibrium");
    let ze = sys.extremum_level(lobe);
    (0..4096)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / 4096.0;
            (sys.h([o[0] + rho * t.cos(), o[1] + rho * t.sin()]) - ze).abs()
        })
        .fold(0.0, f64::max)
}

/// Entry distribution over the `rho`-balls of `targets` for the averaged
/// graph diffusion at fixed `kappa`. Edges that are not targets (and the
/// exterior edge) are recurrent and drop out of the gluing condition, so the
/// answer does not depend on where the process starts. As `kappa -> 0` it
/// tends to the `sqrt(a_hat gamma)` weights.
pub fn vertex_split(
    sys: &TwoDiskSystem,
    targets: &[Lobe],
    rho: f64,
    kappa: f64,
    cells: usize,
    prec: &Precision,
) -> Result<Vec<f64>, PlanarError> {
    if targets.len() < 2 || targets.contains(&Lobe::G4) || !(kappa > 0.0) {
        return Err(PlanarError::BadTargets("need two or three targets among lobes 1 to 3 and kappa > 0".into()));
    }
    let mut conductance = Vec::with_capacity(targets.len());
    for &lobe in targets {
        let table = edge_table(sys, lobe, cells, prec)?;
        let cut = ball_cut(sys, lobe, rho);
        conductance.push(1.0 / table.vertex_resistance(kappa, cut));
    }
    let total: f64 = conductance.iter().sum();
    Ok(conductance.into_iter().map(|c| c / total).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeMonteCarlo {
    pub kappa: f64,
    pub replicas: usize,
    pub mean_exit_time: f64,
    pub half_width: f64,
    pub closed_form: f64,
}

/// Euler-Maruyama runs of the edge diffusion from the extremum, reflected
/// at `zeta = 0`, to compare with [`EdgeTable::log_exit_time`].
pub fn edge_monte_carlo(table: &EdgeTable, kappa: f64, dt: f64, replicas: usize, seed: u64) -> EdgeMonteCarlo {
    let times: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut zeta = 0.0;
            let mut t = 0.0;
            let sq = dt.sqrt();
            while zeta < table.length {
                let (b, d2) = table.coefficients(zeta, kappa);
                let g: f64 = StandardNormal.sample(&mut rng);
                zeta = (zeta + b * dt + d2.sqrt() * sq * g).abs();
                t += dt;
            }
            t
        })
        .collect();
    let n = times.len() as f64;
    let mean = times.iter().sum::<f64>() / n;
    let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    EdgeMonteCarlo {
        kappa,
        replicas,
        mean_exit_time: mean,
        half_width: 1.96 * (var / n).sqrt(),
        closed_form: table.log_exit_time(kappa).exp(),
    }
}
