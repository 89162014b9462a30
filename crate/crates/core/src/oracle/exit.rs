use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{FiniteEpsilonChain, OracleError};

const Z95: f64 = 1.959_963_984_540_054;

fn region(chain: &FiniteEpsilonChain, start: usize, inside: &[usize]) -> Result<Vec<bool>, OracleError> {
    let n = chain.size();
    let mut mask = vec![false; n];
    for &s in inside {
        if s < n {
            mask[s] = true;
        }
    }
    if start >= n || !mask[start] {
        return Err(OracleError::StartOutside(start));
    }
    if mask.iter().all(|&m| m) {
        return Err(OracleError::NoExit);
    }
    Ok(mask)
}

/// Exit statistics computed exactly by eliminating inside states one at a time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactExit {
    pub epsilon: f64,
    /// Expected number of steps of the chain until it first leaves the region.
    pub mean_steps: f64,
    /// Expected number of jumps (state changes), including the final one.
    pub mean_jumps: f64,
    /// Probability of landing on each state (zero inside the region).
    pub exit_dist: Vec<f64>,
    /// Probability that each state is the last one visited inside.
    pub penultimate_dist: Vec<f64>,
}

/// Exit time and exit distribution from `start` out of `inside`.
///
/// Eliminating state `k` from the jump process replaces every detour
/// `i -> k -> j` by a direct transition and adds the expected time spent at
/// `k` to `i`'s holding time. All updates are sums of products of
/// nonnegative numbers.
pub fn exit_exact(chain: &FiniteEpsilonChain, start: usize, inside: &[usize]) -> Result<ExactExit, OracleError> {
    let mask = region(chain, start, inside)?;
    let n = chain.size();
    let states: Vec<usize> = (0..n).filter(|&s| mask[s]).collect();
    let outside: Vec<usize> = (0..n).filter(|&s| !mask[s]).collect();
    let m = states.len();
    let o = outside.len();
    // Exit channels are (last inside state, landing state) pairs.
    let channel = |pen: usize, land: usize| pen * o + land;

    let mut rate = vec![vec![0.0; m]; m];
    let mut out = vec![vec![0.0; m * o]; m];
    let mut total = vec![0.0; m];
    let mut time = vec![0.0; m];
    let mut jumps = vec![1.0; m];
    for (a, &s) in states.iter().enumerate() {
        for (b, &t) in states.iter().enumerate() {
            if a != b {
                rate[a][b] = chain.off_row(s)[t];
            }
        }
        for (b, &t) in outside.iter().enumerate() {
            out[a][channel(a, b)] = chain.off_row(s)[t];
        }
        total[a] = chain.leave(s);
        if total[a] <= 0.0 {
            return Err(OracleError::NoExit);
        }
        time[a] = 1.0 / total[a];
    }

    let start_local = states.iter().position(|&s| s == start).expect("start is inside");
    let mut alive = vec![true; m];
    for k in (0..m).filter(|&k| k != start_local) {
        alive[k] = false;
        for i in (0..m).filter(|&i| alive[i]) {
            let aik = rate[i][k];
            if aik == 0.0 {
                continue;
            }
            let f = aik / total[k];
            for j in (0..m).filter(|&j| alive[j] && j != i) {
                rate[i][j] += f * rate[k][j];
            }
            let (lo, hi) = if i < k { out.split_at_mut(k) } else { out.split_at_mut(i) };
            let (oi, ok) = if i < k { (&mut lo[i], &hi[0]) } else { (&mut hi[0], &lo[k]) };
            for (x, y) in oi.iter_mut().zip(ok) {
                *x += f * y;
            }
            rate[i][k] = 0.0;
            let new_total: f64 =
                (0..m).filter(|&j| alive[j] && j != i).map(|j| rate[i][j]).sum::<f64>() + oi.iter().sum::<f64>();
            if new_total <= 0.0 {
                return Err(OracleError::NoExit);
            }
            let keep = total[i] / new_total;
            time[i] = (time[i] + aik / total[i] * time[k]) * keep;
            jumps[i] = (jumps[i] + aik / total[i] * jumps[k]) * keep;
            total[i] = new_total;
        }
    }

    let s = start_local;
    let mut exit_dist = vec![0.0; n];
    let mut penultimate_dist = vec![0.0; n];
    for (pen, &p) in states.iter().enumerate() {
        for (land, &l) in outside.iter().enumerate() {
            let w = out[s][channel(pen, land)] / total[s];
            exit_dist[l] += w;
            penultimate_dist[p] += w;
        }
    }
    Ok(ExactExit {
        epsilon: chain.epsilon(),
        mean_steps: time[s],
        mean_jumps: jumps[s],
        exit_dist,
        penultimate_dist,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitConfig {
    pub replicas: usize,
    pub seed: u64,
    /// Jumps allowed per replica before giving up.
    pub jump_cap: u64,
}

impl Default for ExitConfig {
    fn default() -> Self {
        Self { replicas: 10_000, seed: 0, jump_cap: 1_000_000_000 }
    }
}

/// Monte Carlo exit statistics with 95% half-widths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExitStatistics {
    pub epsilon: f64,
    pub replicas: usize,
    pub mean_exit_steps: f64,
    pub mean_half_width: f64,
    /// `eps * ln(mean_exit_steps)`.
    pub fitted_exponent: f64,
    pub mean_jumps: f64,
    pub exit_state_freq: Vec<f64>,
    pub exit_half_width: Vec<f64>,
    pub penultimate_freq: Vec<f64>,
    pub penultimate_half_width: Vec<f64>,
}

struct Replica {
    time: f64,
    jumps: u64,
    last: usize,
    landing: usize,
}

/// Simulates the embedded jump chain from `start` until it leaves `inside`.
///
/// Holding times are added in expectation (`1 / (1 - p_ii)` per visit), which
/// keeps the mean unbiased and removes the geometric sampling noise. Replica
/// `r` draws from ChaCha stream `r` of `seed`, so results do not depend on the
/// thread count.
pub fn simulate_exit(
    chain: &FiniteEpsilonChain,
    start: usize,
    inside: &[usize],
    config: &ExitConfig,
) -> Result<ExitStatistics, OracleError> {
    let mask = region(chain, start, inside)?;
    let n = chain.size();
    let cumulative: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut acc = 0.0;
            chain
                .off_row(i)
                .iter()
                .map(|p| {
                    acc += p;
                    acc
                })
                .collect()
        })
        .collect();
    let holding: Vec<f64> = (0..n).map(|i| 1.0 / chain.leave(i)).collect();
    if (0..n).any(|i| mask[i] && chain.leave(i) <= 0.0) {
        return Err(OracleError::NoExit);
    }

    let run = |replica: usize| -> Result<Replica, OracleError> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(replica as u64);
        let mut s = start;
        let mut time = 0.0;
        let mut jumps = 0u64;
        loop {
            time += holding[s];
            jumps += 1;
            if jumps > config.jump_cap {
                return Err(OracleError::ReplicaBudgetExceeded { replica, cap: config.jump_cap });
            }
            let row = &cumulative[s];
            let u = rng.random::<f64>() * row[n - 1];
            let next = row
                .iter()
                .position(|&c| u < c)
                .unwrap_or_else(|| row.iter().rposition(|&c| c > 0.0).expect("row has mass"));
            if !mask[next] {
                return Ok(Replica { time, jumps, last: s, landing: next });
            }
            s = next;
        }
    };
    let outcomes: Vec<Replica> = (0..config.replicas)
        .into_par_iter()
        .map(run)
        .collect::<Result<_, _>>()?;

    let nrep = outcomes.len() as f64;
    let mean = outcomes.iter().map(|r| r.time).sum::<f64>() / nrep;
    let var = outcomes.iter().map(|r| (r.time - mean).powi(2)).sum::<f64>() / (nrep - 1.0).max(1.0);
    let mut exit = vec![0.0; n];
    let mut pen = vec![0.0; n];
    for r in &outcomes {
        exit[r.landing] += 1.0;
        pen[r.last] += 1.0;
    }
    exit.iter_mut().chain(pen.iter_mut()).for_each(|c| *c /= nrep);
    let hw = |p: &f64| Z95 * (p * (1.0 - p) / nrep).sqrt();
    Ok(ExitStatistics {
        epsilon: chain.epsilon(),
        replicas: outcomes.len(),
        mean_exit_steps: mean,
        mean_half_width: Z95 * (var / nrep).sqrt(),
        fitted_exponent: chain.epsilon() * mean.ln(),
        mean_jumps: outcomes.iter().map(|r| r.jumps as f64).sum::<f64>() / nrep,
        exit_half_width: exit.iter().map(hw).collect(),
        penultimate_half_width: pen.iter().map(hw).collect(),
        exit_state_freq: exit,
        penultimate_freq: pen,
    })
}
