//! Simulation of the rescaled equation
//! `dX = ((1/delta) skew grad H + beta) dt + sqrt(kappa) sigma dW`.
//!
//! The drift is advanced with classical RK4 (the rotation is fast and RK4
//! keeps it accurate at `dt = delta/20`), the noise with an Euler-Maruyama
//! increment evaluated at the start of the step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::system::{Lobe, Point, TwoDiskSystem};
use crate::PlanarError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SdeConfig {
    pub delta: f64,
    pub kappa: f64,
    pub dt: f64,
    pub t_max: f64,
}

impl SdeConfig {
    /// `dt = delta / 20`, `t_max = 1000`.
    pub fn new(delta: f64, kappa: f64) -> Self {
        Self { delta, kappa, dt: delta / 20.0, t_max: 1e3 }
    }

    fn check(&self) -> Result<(), PlanarError> {
        if !(self.delta > 0.0) || !(self.kappa >= 0.0) || !(self.t_max > 0.0) || !(self.dt > 0.0) {
            return Err(PlanarError::InvalidParameter("delta, dt, t_max > 0 and kappa >= 0".into()));
        }
        if self.dt > self.delta / 20.0 * (1.0 + 1e-12) {
            return Err(PlanarError::InvalidParameter(format!(
                "dt = {} exceeds delta/20 = {}",
                self.dt,
                self.delta / 20.0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopCause {
    /// The stop predicate fired with this label.
    Hit(usize),
    TimeLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Outcome {
    pub cause: StopCause,
    pub time: f64,
    pub steps: u64,
    pub state: Point,
}

fn rk4(sys: &TwoDiskSystem, p: Point, cfg: &SdeConfig) -> Point {
    let f = |q: Point| sys.eval_field(q, cfg.delta, 0.0).drift;
    let h = cfg.dt;
    let k1 = f(p);
    let k2 = f([p[0] + 0.5 * h * k1[0], p[1] + 0.5 * h * k1[1]]);
    let k3 = f([p[0] + 0.5 * h * k2[0], p[1] + 0.5 * h * k2[1]]);
    let k4 = f([p[0] + h * k3[0], p[1] + h * k3[1]]);
    [
        p[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        p[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Runs one path from `x0` until `stop` returns a label or `t_max` passes.
/// `observe` sees every accepted state.
pub fn simulate_sde<R: Rng, S, O>(
    sys: &TwoDiskSystem,
    x0: Point,
    cfg: &SdeConfig,
    mut stop: S,
    mut observe: O,
    rng: &mut R,
) -> Result<Outcome, PlanarError>
where
    S: FnMut(Point) -> Option<usize>,
    O: FnMut(f64, Point),
{
    cfg.check()?;
    let escape = sys.r_max + 1.0;
    let sq = cfg.dt.sqrt();
    if !(x0[0].hypot(x0[1]) <= escape) {
        return Err(PlanarError::Unstable { time: 0.0, x: x0[0], y: x0[1] });
    }
    let mut p = x0;
    let mut t = 0.0;
    let mut steps = 0u64;
    observe(t, p);
    loop {
        if let Some(label) = stop(p) {
            return Ok(Outcome { cause: StopCause::Hit(label), time: t, steps, state: p });
        }
        if t >= cfg.t_max {
            return Ok(Outcome { cause: StopCause::TimeLimit, time: t, steps, state: p });
        }
        let mut q = rk4(sys, p, cfg);
        if cfg.kappa > 0.0 {
            let amp = (cfg.kappa * sys.s(p)).sqrt() * sq;
            let g0: f64 = rng.sample(StandardNormal);
            let g1: f64 = rng.sample(StandardNormal);
            q = [q[0] + amp * g0, q[1] + amp * g1];
        }
        p = q;
        t += cfg.dt;
        steps += 1;
        if !(p[0].hypot(p[1]) <= escape) {
            return Err(PlanarError::Unstable { time: t, x: p[0], y: p[1] });
        }
        observe(t, p);
    }
}

/// Label of the target equilibrium within `rho` of `p`, if any.
pub fn near_target(sys: &TwoDiskSystem, targets: &[Lobe], rho: f64, p: Point) -> Option<usize> {
    targets.iter().find_map(|&l| {
        let o = sys.equilibrium(l)?;
        ((p[0] - o[0]).hypot(p[1] - o[1]) <= rho).then_some(l.index())
    })
}

/// 95% Wilson score interval for `k` successes out of `n`.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = n as f64;
    let p = k as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HitDistribution {
    pub targets: Vec<usize>,
    pub replicas: usize,
    pub counts: Vec<usize>,
    pub frequencies: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub wilson: Vec<(f64, f64)>,
    pub timeouts: usize,
    pub mean_hit_time: f64,
}

/// One outcome per replica of the first-entry experiment into the
/// `rho`-balls of `targets`, replica `r` drawing from ChaCha stream `r`.
pub fn hit_outcomes(
    sys: &TwoDiskSystem,
    start: Point,
    targets: &[Lobe],
    rho: f64,
    cfg: &SdeConfig,
    replicas: usize,
    seed: u64,
) -> Result<Vec<Outcome>, PlanarError> {
    if targets.is_empty() || targets.contains(&Lobe::G4) {
        return Err(PlanarError::BadTargets("targets must be lobes 1 to 3".into()));
    }
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            simulate_sde(sys, start, cfg, |p| near_target(sys, targets, rho, p), |_, _| {}, &mut rng)
        })
        .collect()
}

impl HitDistribution {
    pub fn from_outcomes(targets: &[Lobe], outcomes: &[Outcome]) -> Self {
        let labels: Vec<usize> = targets.iter().map(|l| l.index()).collect();
        let replicas = outcomes.len();
        let mut counts = vec![0; targets.len()];
        let mut timeouts = 0;
        let mut time_sum = 0.0;
        for o in outcomes {
            match o.cause {
                StopCause::Hit(label) => {
                    let k = labels.iter().position(|&l| l == label).expect("label from targets");
                    counts[k] += 1;
                    time_sum += o.time;
                }
                StopCause::TimeLimit => timeouts += 1,
            }
        }
        let n = replicas.max(1) as f64;
        let frequencies: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
        let hits = replicas - timeouts;
        Self {
            standard_errors: frequencies.iter().map(|p| (p * (1.0 - p) / n).sqrt()).collect(),
            wilson: counts.iter().map(|&c| wilson_interval(c, replicas)).collect(),
            targets: labels,
            replicas,
            counts,
            frequencies,
            timeouts,
            mean_hit_time: if hits > 0 { time_sum / hits as f64 } else { f64::NAN },
        }
    }
}

/// First-entry distribution over `rho`-balls around the target equilibria.
pub fn hit_distribution(
    sys: &TwoDiskSystem,
    start: Point,
    targets: &[Lobe],
    rho: f64,
    cfg: &SdeConfig,
    replicas: usize,
    seed: u64,
) -> Result<HitDistribution, PlanarError> {
    let outcomes = hit_outcomes(sys, start, targets, rho, cfg, replicas, seed)?;
    Ok(HitDistribution::from_outcomes(targets, &outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_the_estimate() {
        let (lo, hi) = wilson_interval(30, 100);
        assert!(lo < 0.3 && hi > 0.3);
        assert_eq!(wilson_interval(0, 10).0, 0.0);
    }

    #[test]
    fn step_size_is_checked() {
        let s = TwoDiskSystem::default();
        let cfg = SdeConfig { dt: 0.01, ..SdeConfig::new(0.02, 0.3) };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = simulate_sde(&s, [0.0, 0.1], &cfg, |_| None, |_, _| {}, &mut rng);
        assert!(matches!(r, Err(PlanarError::InvalidParameter(_))));
    }

    #[test]
    fn replicas_are_reproducible() {
        let s = TwoDiskSystem::default();
        let cfg = SdeConfig { t_max: 50.0, ..SdeConfig::new(0.02, 0.3) };
        let targets = [Lobe::G1, Lobe::G2, Lobe::G3];
        let a = hit_distribution(&s, [0.0, 1.5], &targets, 0.2, &cfg, 16, 5).unwrap();
        let b = hit_distribution(&s, [0.0, 1.5], &targets, 0.2, &cfg, 16, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.counts.iter().sum::<usize>() + a.timeouts, 16);
    }
}
