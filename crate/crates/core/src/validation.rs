//! Compares the asymptotic predictions of a hierarchy with finite-`eps`
//! oracle numbers computed from a cost matrix.
//!
//! The predictions and the oracle normally come from the same matrix; they
//! may differ, which is how a wrong claim is shown to fail.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::ext::{fmt_ext, ties};
use crate::hierarchy::{Hierarchy, QuasiPotentialMatrix};
use crate::metastable::raw_regimes;
use crate::oracle::{
    build_chain, exit_exact, nstep_distribution, rate_fit_ln, simulate_exit, stationary_exact,
    stationary_log_limits, ExitConfig, OracleError, WGRAPH_LIMIT,
};

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("oracle and prediction matrices have different labels")]
    LabelMismatch,
    #[error("eps grid needs at least 3 positive values")]
    BadGrid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationConfig {
    pub eps_grid: Vec<f64>,
    /// Monte Carlo replicas per eps; 0 disables the simulation.
    pub replicas: usize,
    pub seed: u64,
    /// Noise level for the n-step metastability checks.
    pub nstep_eps: f64,
    pub mass_threshold: f64,
    /// Minimum distance of a probed lambda from any breakpoint.
    pub regime_margin: f64,
    pub m_tolerance: f64,
    pub e_rel_tolerance: f64,
    pub exit_mass: f64,
    /// Expected total jumps above which a Monte Carlo run is skipped.
    pub jump_budget: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            eps_grid: vec![0.05, 0.075, 0.1],
            replicas: 10_000,
            seed: 42,
            nstep_eps: 0.05,
            mass_threshold: 0.9,
            regime_margin: 0.25,
            m_tolerance: 0.05,
            e_rel_tolerance: 0.10,
            exit_mass: 0.95,
            jump_budget: 2e8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    MeasureRateExact,
    MeasureRateFit,
    InvariantMeasureExact,
    InvariantMeasureFit,
    ExitRateFit,
    LandingSet,
    ExitSet,
    MonteCarloMean,
    MonteCarloLanding,
    MetastableMass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub kind: CheckKind,
    pub subject: String,
    pub predicted: String,
    pub observed: String,
    pub tolerance: String,
    pub status: Status,
}

/// One point of an `eps ln v(eps)` series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitPoint {
    pub quantity: String,
    pub subject: String,
    pub eps: f64,
    pub eps_ln_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub precision_loss: bool,
    pub checks: Vec<Check>,
    pub fits: Vec<FitPoint>,
    pub notes: Vec<String>,
}

struct Builder<'a> {
    oracle: &'a QuasiPotentialMatrix,
    claimed: &'a Hierarchy,
    cfg: &'a ValidationConfig,
    checks: Vec<Check>,
    fits: Vec<FitPoint>,
    notes: Vec<String>,
    precision_loss: bool,
}

fn status(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

pub fn validate(
    oracle: &QuasiPotentialMatrix,
    claimed: &Hierarchy,
    cfg: &ValidationConfig,
) -> Result<ValidationReport, ValidationError> {
    if oracle.labels() != claimed.matrix().labels() {
        return Err(ValidationError::LabelMismatch);
    }
    let mut grid = cfg.eps_grid.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid.len() < 3 || grid[0] <= 0.0 {
        return Err(ValidationError::BadGrid);
    }
    let mut b = Builder {
        oracle,
        claimed,
        cfg,
        checks: Vec::new(),
        fits: Vec::new(),
        notes: Vec::new(),
        precision_loss: false,
    };
    b.measure_rates(&grid);
    b.invariant_measure(&grid);
    b.exits(&grid);
    b.metastable_sets();
    let passed = b.checks.iter().all(|c| c.status != Status::Fail);
    Ok(ValidationReport {
        passed,
        precision_loss: b.precision_loss,
        checks: b.checks,
        fits: b.fits,
        notes: b.notes,
    })
}

impl Builder<'_> {
    fn names(&self, idx: &[usize]) -> String {
        let v: Vec<&str> = idx.iter().map(|&i| self.oracle.label(i)).collect();
        format!("{{{}}}", v.join(","))
    }

    fn chain_name(&self, rank: usize, index: usize) -> String {
        let labels = &self.claimed.level(rank).chain_labels[index];
        format!("rank {rank} chain {}", self.names(labels))
    }

    /// Fits `eps ln v` over the grid for values that could be computed.
    fn fit(&mut self, quantity: &str, subject: &str, points: &[(f64, f64)]) -> Option<f64> {
        for &(eps, ln) in points {
            self.fits.push(FitPoint {
                quantity: quantity.to_string(),
                subject: subject.to_string(),
                eps,
                eps_ln_value: eps * ln,
            });
        }
        let eps: Vec<f64> = points.iter().map(|p| p.0).collect();
        let ln: Vec<f64> = points.iter().map(|p| p.1).collect();
        rate_fit_ln(&eps, &ln).ok().map(|f| f.intercept)
    }

    /// Stationary distributions of the within-chain Markov chains built from
    /// each chain's own arrows.
    fn measure_rates(&mut self, grid: &[f64]) {
        for lv in self.claimed.levels() {
            for (c, chain) in lv.chains.iter().enumerate() {
                if chain.is_singleton() {
                    continue;
                }
                let subject = self.chain_name(lv.rank, c);
                let predicted: Vec<String> = chain.measure_rates.iter().map(|m| fmt_ext(*m)).collect();
                if chain.len() <= WGRAPH_LIMIT {
                    match stationary_log_limits(&chain.exponents) {
                        Ok(lim) => {
                            let ok = lim.iter().zip(&chain.measure_rates).all(|(a, b)| ties(*a, *b));
                            self.checks.push(Check {
                                kind: CheckKind::MeasureRateExact,
                                subject: subject.clone(),
                                predicted: predicted.join(" "),
                                observed: lim.iter().map(|x| fmt_ext(*x)).collect::<Vec<_>>().join(" "),
                                tolerance: "exact".into(),
                                status: status(ok),
                            });
                        }
                        Err(e) => self.notes.push(format!("{subject}: W-graph skipped ({e})")),
                    }
                }
                let mut series: Vec<Vec<(f64, f64)>> = vec![Vec::new(); chain.len()];
                for &eps in grid {
                    let Ok(fc) = build_chain(&chain.exponents, eps) else { continue };
                    let Ok(st) = stationary_exact(&fc) else { continue };
                    for (k, q) in st.q.iter().enumerate() {
                        if *q > 0.0 {
                            series[k].push((eps, q.ln()));
                        }
                    }
                }
                for (k, pts) in series.iter().enumerate() {
                    let member = format!("{subject} member {}", chain.members[k]);
                    let fitted = self.fit("chain_stationary", &member, pts);
                    let m = chain.measure_rates[k];
                    match fitted {
                        Some(f) => self.checks.push(Check {
                            kind: CheckKind::MeasureRateFit,
                            subject: member,
                            predicted: fmt_ext(m),
                            observed: format!("{f:.4}"),
                            tolerance: format!("abs {}", self.cfg.m_tolerance),
                            status: status((f - m).abs() <= self.cfg.m_tolerance),
                        }),
                        None => self.notes.push(format!("{member}: stationary fit needs 3 usable eps values")),
                    }
                }
            }
        }
    }

    /// Invariant measure of the full oracle chain against the sum of measure
    /// rates along each label's rank sequence.
    fn invariant_measure(&mut self, grid: &[f64]) {
        if !self.claimed.is_complete() {
            self.notes.push("prediction hierarchy is not complete; invariant measure not checked".into());
            return;
        }
        let l = self.oracle.size();
        let predicted: Vec<f64> = (0..l).map(|i| self.claimed.measure_exponent(i)).collect();
        if l <= WGRAPH_LIMIT {
            if let Ok(lim) = stationary_log_limits(self.oracle.rows()) {
                for i in 0..l {
                    self.checks.push(Check {
                        kind: CheckKind::InvariantMeasureExact,
                        subject: format!("label {}", self.oracle.label(i)),
                        predicted: fmt_ext(predicted[i]),
                        observed: fmt_ext(lim[i]),
                        tolerance: "exact".into(),
                        status: status(ties(lim[i], predicted[i])),
                    });
                }
            }
        }
        let mut series: Vec<Vec<(f64, f64)>> = vec![Vec::new(); l];
        for &eps in grid {
            let Ok(fc) = build_chain(self.oracle.rows(), eps) else { continue };
            let Ok(st) = stationary_exact(&fc) else { continue };
            for (k, q) in st.q.iter().enumerate() {
                if *q > 0.0 {
                    series[k].push((eps, q.ln()));
                }
            }
        }
        for i in 0..l {
            let subject = format!("label {}", self.oracle.label(i));
            if let Some(f) = self.fit("invariant_measure", &subject, &series[i]) {
                self.checks.push(Check {
                    kind: CheckKind::InvariantMeasureFit,
                    subject,
                    predicted: fmt_ext(predicted[i]),
                    observed: format!("{f:.4}"),
                    tolerance: format!("abs {}", self.cfg.m_tolerance),
                    status: status((f - predicted[i]).abs() <= self.cfg.m_tolerance),
                });
            }
        }
        let alphas = &self.claimed.level(1).arrows.alphas;
        let amin = alphas.iter().copied().fold(f64::INFINITY, f64::min);
        let printed: Vec<String> = alphas.iter().map(|a| fmt_ext(-(a - amin))).collect();
        self.notes.push(format!(
            "invariant-measure exponents are checked in the form -(W(i) - min W); the alternative -(alpha_i - alpha_min) would read [{}]",
            printed.join(", ")
        ));
    }

    fn exits(&mut self, grid: &[f64]) {
        let smallest = grid[0];
        for lv in self.claimed.levels() {
            for (c, chain) in lv.chains.iter().enumerate() {
                if !chain.exit_rate.is_finite() {
                    continue;
                }
                let subject = self.chain_name(lv.rank, c);
                let inside = lv.chain_labels[c].clone();
                let landing = lv.chain_landing_labels[c].clone();
                let exit_labels = lv.chain_exit_labels[c].clone();
                let e = chain.exit_rate;

                let mut worst_fit: Option<(f64, f64)> = None;
                let mut worst_j = f64::INFINITY;
                let mut worst_i = f64::INFINITY;
                let mut exact_at: BTreeMap<u64, crate::oracle::ExactExit> = BTreeMap::new();
                for &start in &inside {
                    let mut pts = Vec::new();
                    for &eps in grid {
                        let Ok(fc) = build_chain(self.oracle.rows(), eps) else { continue };
                        let Ok(ex) = exit_exact(&fc, start, &inside) else { continue };
                        if ex.mean_steps.is_finite() && ex.mean_steps > 0.0 {
                            pts.push((eps, ex.mean_steps.ln()));
                        }
                        if eps == smallest {
                            worst_j = worst_j.min(landing.iter().map(|&j| ex.exit_dist[j]).sum());
                            worst_i = worst_i.min(exit_labels.iter().map(|&i| ex.penultimate_dist[i]).sum());
                        }
                        if start == inside[0] {
                            exact_at.insert(eps.to_bits(), ex);
                        }
                    }
                    let label = format!("{subject} from {}", self.oracle.label(start));
                    if let Some(f) = self.fit("mean_exit_steps", &label, &pts) {
                        if worst_fit.is_none_or(|(_, w)| (f - e).abs() > (w - e).abs()) {
                            worst_fit = Some((start as f64, f));
                        }
                    }
                }
                match worst_fit {
                    Some((_, f)) => self.checks.push(Check {
                        kind: CheckKind::ExitRateFit,
                        subject: subject.clone(),
                        predicted: fmt_ext(e),
                        observed: format!("{f:.4}"),
                        tolerance: format!("rel {}", self.cfg.e_rel_tolerance),
                        status: status((f - e).abs() <= self.cfg.e_rel_tolerance * e.abs().max(0.5)),
                    }),
                    None => self.notes.push(format!("{subject}: exit fit not computable on this grid")),
                }
                if worst_j.is_finite() {
                    self.checks.push(Check {
                        kind: CheckKind::LandingSet,
                        subject: subject.clone(),
                        predicted: self.names(&landing),
                        observed: format!("{worst_j:.4} at eps {smallest}"),
                        tolerance: format!(">= {}", self.cfg.exit_mass),
                        status: status(worst_j >= self.cfg.exit_mass),
                    });
                    self.checks.push(Check {
                        kind: CheckKind::ExitSet,
                        subject: subject.clone(),
                        predicted: self.names(&exit_labels),
                        observed: format!("{worst_i:.4} at eps {smallest}"),
                        tolerance: format!(">= {}", self.cfg.exit_mass),
                        status: status(worst_i >= self.cfg.exit_mass),
                    });
                }
                if self.cfg.replicas > 0 {
                    self.monte_carlo(&subject, inside[0], &inside, &exact_at);
                }
            }
        }
    }

    fn monte_carlo(
        &mut self,
        subject: &str,
        start: usize,
        inside: &[usize],
        exact: &BTreeMap<u64, crate::oracle::ExactExit>,
    ) {
        for ex in exact.values() {
            let eps = ex.epsilon;
            let cost = ex.mean_jumps * self.cfg.replicas as f64;
            let who = format!("{subject} from {} at eps {eps}", self.oracle.label(start));
            if cost > self.cfg.jump_budget {
                self.notes.push(format!("{who}: Monte Carlo skipped (~{cost:.2e} jumps expected)"));
                continue;
            }
            let Ok(fc) = build_chain(self.oracle.rows(), eps) else { continue };
            let cfg = ExitConfig { replicas: self.cfg.replicas, seed: self.cfg.seed, ..Default::default() };
            let mc = match simulate_exit(&fc, start, inside, &cfg) {
                Ok(mc) => mc,
                Err(e) => {
                    self.notes.push(format!("{who}: Monte Carlo failed ({e})"));
                    continue;
                }
            };
            // Half-widths are 95% intervals; allow two of them for the
            // many simultaneous comparisons.
            let slack = 2.0 * mc.mean_half_width + 1e-9 * ex.mean_steps;
            self.checks.push(Check {
                kind: CheckKind::MonteCarloMean,
                subject: who.clone(),
                predicted: format!("{:.6e}", ex.mean_steps),
                observed: format!("{:.6e} +- {:.2e}", mc.mean_exit_steps, mc.mean_half_width),
                tolerance: "2 half-widths".into(),
                status: status((mc.mean_exit_steps - ex.mean_steps).abs() <= slack),
            });
            let worst = (0..fc.size())
                .filter(|t| !inside.contains(t))
                .map(|t| {
                    let hw = 2.0 * mc.exit_half_width[t] + 3.0 / mc.replicas as f64;
                    ((mc.exit_state_freq[t] - ex.exit_dist[t]).abs() - hw, t)
                })
                .max_by(|a, b| a.0.total_cmp(&b.0));
            if let Some((excess, t)) = worst {
                self.checks.push(Check {
                    kind: CheckKind::MonteCarloLanding,
                    subject: who,
                    predicted: format!("P(land {}) = {:.4}", self.oracle.label(t), ex.exit_dist[t]),
                    observed: format!("{:.4}", mc.exit_state_freq[t]),
                    tolerance: "2 half-widths".into(),
                    status: status(excess <= 0.0),
                });
            }
        }
    }

    fn metastable_sets(&mut self) {
        let eps = self.cfg.nstep_eps;
        let Ok(fc) = build_chain(self.oracle.rows(), eps) else {
            self.notes.push(format!("oracle chain invalid at eps {eps}; metastable sets not checked"));
            return;
        };
        let l = self.oracle.size();
        let mut cache: BTreeMap<u64, Result<crate::oracle::NStep, OracleError>> = BTreeMap::new();
        for i in 0..l {
            let Ok(regimes) = raw_regimes(self.claimed, i) else { continue };
            for r in regimes {
                let lambda = if r.hi.is_infinite() {
                    r.lo + 2.0 * self.cfg.regime_margin
                } else {
                    if r.hi - r.lo < 2.0 * self.cfg.regime_margin {
                        continue;
                    }
                    0.5 * (r.lo + r.hi)
                };
                let subject = format!("from {} at lambda {lambda}", self.oracle.label(i));
                let entry = cache
                    .entry(lambda.to_bits())
                    .or_insert_with(|| nstep_distribution(&fc, lambda));
                match entry {
                    Ok(ns) => {
                        let mass: f64 = r.result.labels.iter().map(|&j| ns.rows[i][j]).sum();
                        self.checks.push(Check {
                            kind: CheckKind::MetastableMass,
                            subject,
                            predicted: self.names(&r.result.labels),
                            observed: format!("{mass:.4}"),
                            tolerance: format!(">= {}", self.cfg.mass_threshold),
                            status: status(mass >= self.cfg.mass_threshold),
                        });
                    }
                    Err(OracleError::PrecisionLoss { drift }) => {
                        self.precision_loss = true;
                        self.notes.push(format!("{subject}: precision loss (drift {drift:e})"));
                    }
                    Err(e) => self.notes.push(format!("{subject}: skipped ({e})")),
                }
            }
        }
    }
}
