use std::io::Write;
use std::path::PathBuf;

use clap::ValueEnum;
use metahier_planar::{
    hit_outcomes, level_quantities, metastable_weights, simulate_sde, theory_report, vertex_split, HitDistribution,
    LevelQuantities, Lobe, Outcome, Point, Precision, SdeConfig, StopCause, TheoryReport, TwoDiskSystem,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{code, CliError};
use crate::manifest::{RunManifest, Stopwatch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Default,
    Symmetric,
}

/// Physical parameters; any subset may be given in a JSON config file.
#[derive(Debug, Clone, Copy, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SystemOverrides {
    pub a: Option<f64>,
    pub c_beta: Option<f64>,
    pub c_a: Option<f64>,
    pub r_max: Option<f64>,
}

impl SystemOverrides {
    fn or(self, other: Self) -> Self {
        Self {
            a: self.a.or(other.a),
            c_beta: self.c_beta.or(other.c_beta),
            c_a: self.c_a.or(other.c_a),
            r_max: self.r_max.or(other.r_max),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Demo2dArgs {
    pub preset: Preset,
    pub config: Option<PathBuf>,
    pub system: SystemOverrides,
    pub delta: f64,
    pub kappa: f64,
    pub dt: Option<f64>,
    pub t_max: f64,
    pub replicas: usize,
    pub seed: u64,
    pub rho: f64,
    pub start: Point,
    pub targets: Vec<usize>,
    pub check: bool,
    /// Absolute tolerance of `--check`.
    pub tolerance: f64,
    /// Check within this many standard errors instead; the symmetric preset
    /// defaults to 3.
    pub sigmas: Option<f64>,
    /// `(delta, kappa)` pairs for the sensitivity table.
    pub sensitivity: Vec<(f64, f64)>,
    pub sensitivity_replicas: usize,
    pub level_points: usize,
    pub graph_cells: usize,
    pub trajectories_csv: Option<PathBuf>,
}

impl Default for Demo2dArgs {
    fn default() -> Self {
        Self {
            preset: Preset::Default,
            config: None,
            system: SystemOverrides::default(),
            delta: 0.02,
            kappa: 0.3,
            dt: None,
            t_max: 1e3,
            replicas: 20_000,
            seed: 7,
            rho: 0.2,
            start: [0.0, 1.5],
            targets: vec![1, 2, 3],
            check: false,
            tolerance: 0.05,
            sigmas: None,
            sensitivity: Vec::new(),
            sensitivity_replicas: 2000,
            level_points: 6,
            graph_cells: 400,
            trajectories_csv: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelTable {
    pub lobe: usize,
    pub rows: Vec<LevelQuantities>,
    /// Levels whose quadrature failed, with the reason.
    pub skipped: Vec<(f64, String)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SensitivityRow {
    pub delta: f64,
    pub kappa: f64,
    pub replicas: usize,
    pub frequencies: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub timeouts: usize,
    /// Entry split of the averaged graph diffusion at this `kappa`.
    pub graph_model: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Smoke {
    pub lobe: usize,
    /// `+1` when `H` should rise along the noiseless path, `-1` when it
    /// should fall.
    pub direction: f64,
    pub steps: u64,
    pub h_start: f64,
    pub h_end: f64,
    /// Largest step against the expected direction (block maxima in `G4`).
    pub worst_violation: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub mode: String,
    pub deviations: Vec<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Demo2dDoc {
    pub manifest: RunManifest,
    pub preset: Preset,
    pub system: TwoDiskSystem,
    pub start: Point,
    pub start_lobe: usize,
    pub targets: Vec<usize>,
    pub rho: f64,
    pub delta: f64,
    pub kappa: f64,
    pub dt: f64,
    pub alphas: Vec<f64>,
    pub alphas_doubled: Vec<f64>,
    pub gammas: Vec<f64>,
    pub a_hats: Vec<f64>,
    pub weights_theory: Vec<f64>,
    /// Finite-`kappa` prediction of the averaged graph diffusion.
    pub weights_graph_model: Option<Vec<f64>>,
    pub weights_empirical: Option<Vec<f64>>,
    pub standard_errors: Option<Vec<f64>>,
    pub ci95: Option<Vec<(f64, f64)>>,
    pub timeouts: Option<usize>,
    pub mean_hit_time: Option<f64>,
    pub smoke: Option<Smoke>,
    pub level_tables: Vec<LevelTable>,
    pub sensitivity: Vec<SensitivityRow>,
    pub check: Option<CheckReport>,
}

fn system(args: &Demo2dArgs) -> Result<TwoDiskSystem, CliError> {
    let file = match &args.config {
        None => SystemOverrides::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|source| CliError::Read { path: path.display().to_string(), source })?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column())))?
        }
    };
    let base = match args.preset {
        Preset::Default => TwoDiskSystem::default(),
        Preset::Symmetric => TwoDiskSystem::symmetric(),
    };
    let o = args.system.or(file);
    Ok(TwoDiskSystem::new(
        o.a.unwrap_or(base.a),
        o.c_beta.unwrap_or(base.c_beta),
        o.c_a.unwrap_or(base.c_a),
        o.r_max.unwrap_or(base.r_max),
    )?)
}

fn lobes(targets: &[usize]) -> Result<Vec<Lobe>, CliError> {
    targets
        .iter()
        .map(|&i| {
            Lobe::from_index(i)
                .filter(|l| *l != Lobe::G4)
                .ok_or_else(|| CliError::Usage(format!("target {i} is not one of 1, 2, 3")))
        })
        .collect()
}

fn level_tables(sys: &TwoDiskSystem, points: usize, prec: &Precision) -> Vec<LevelTable> {
    Lobe::ALL
        .iter()
        .map(|&lobe| {
            let levels: Vec<f64> = match lobe {
                Lobe::G4 => (1..=points).map(|k| 0.5 * k as f64).collect(),
                _ => {
                    let ze = sys.extremum_level(lobe);
                    (1..=points).map(|k| ze * k as f64 / (points + 1) as f64).collect()
                }
            };
            let mut table = LevelTable { lobe: lobe.index(), rows: Vec::new(), skipped: Vec::new() };
            for z in levels {
                match level_quantities(sys, lobe, z, prec) {
                    Ok(q) => table.rows.push(q),
                    Err(e) => table.skipped.push((z, e.to_string())),
                }
            }
            table
        })
        .collect()
}

/// Noiseless run: `H` must move monotonically in the direction the sign
/// conditions prescribe for the starting lobe.
fn smoke(sys: &TwoDiskSystem, start: Point, cfg: &SdeConfig) -> Result<Smoke, CliError> {
    let lobe = sys.lobe_of(start)?;
    let cfg = SdeConfig { t_max: cfg.t_max.min(20.0), ..*cfg };
    let h0 = sys.h(start);
    let mut levels = Vec::new();
    let stop = |p: Point| (lobe == Lobe::G4 && sys.h(p) < 1e-2 * h0).then_some(0);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let out = simulate_sde(sys, start, &cfg, stop, |_, p| levels.push(sys.h(p)), &mut rng)?;
    let direction = if lobe == Lobe::G2 { 1.0 } else { -1.0 };
    let (worst, tolerance) = if lobe == Lobe::G4 {
        // the energy wobbles within a turn far out; compare block maxima
        let peaks: Vec<f64> = levels.chunks(100).map(|c| c.iter().copied().fold(f64::MIN, f64::max)).collect();
        (peaks.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max), 0.0)
    } else {
        let worst = levels.windows(2).map(|w| direction * (w[0] - w[1])).fold(0.0, f64::max);
        (worst, cfg.dt * cfg.dt)
    };
    Ok(Smoke {
        lobe: lobe.index(),
        direction,
        steps: out.steps,
        h_start: h0,
        h_end: sys.h(out.state),
        worst_violation: worst,
        passed: worst <= tolerance && direction * (sys.h(out.state) - h0) > 0.0,
    })
}

fn write_trajectories(path: &PathBuf, outcomes: &[Outcome]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["replica", "outcome", "time", "steps", "x", "y"])?;
    for (r, o) in outcomes.iter().enumerate() {
        let outcome = match o.cause {
            StopCause::Hit(l) => l.to_string(),
            StopCause::TimeLimit => "timeout".into(),
        };
        w.write_record([
            r.to_string(),
            outcome,
            o.time.to_string(),
            o.steps.to_string(),
            o.state[0].to_string(),
            o.state[1].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn compute(args: &Demo2dArgs) -> Result<Demo2dDoc, CliError> {
    let clock = Stopwatch::start("demo2d");
    let sys = system(args)?;
    let targets = lobes(&args.targets)?;
    let prec = Precision::default();
    let dt = args.dt.unwrap_or(args.delta / 20.0);
    let cfg = SdeConfig { delta: args.delta, kappa: args.kappa, dt, t_max: args.t_max };
    let start_lobe = sys.lobe_of(args.start)?;
    let TheoryReport { alphas, alphas_doubled, gammas, a_hats, .. } = theory_report(&sys, &prec)?;
    let weights_theory = metastable_weights(&sys, &targets, &prec)?;

    let (mut empirical, mut smoke_run, mut graph) = (None, None, None);
    if args.kappa > 0.0 {
        let outcomes = hit_outcomes(&sys, args.start, &targets, args.rho, &cfg, args.replicas, args.seed)?;
        if let Some(path) = &args.trajectories_csv {
            write_trajectories(path, &outcomes)?;
        }
        empirical = Some(HitDistribution::from_outcomes(&targets, &outcomes));
        graph = Some(vertex_split(&sys, &targets, args.rho, args.kappa, args.graph_cells, &prec)?);
    } else {
        smoke_run = Some(smoke(&sys, args.start, &cfg)?);
    }

    let mut sensitivity = Vec::new();
    for &(delta, kappa) in &args.sensitivity {
        let c = SdeConfig { delta, kappa, dt: delta / 20.0, t_max: args.t_max };
        let outcomes = hit_outcomes(&sys, args.start, &targets, args.rho, &c, args.sensitivity_replicas, args.seed)?;
        let d = HitDistribution::from_outcomes(&targets, &outcomes);
        sensitivity.push(SensitivityRow {
            delta,
            kappa,
            replicas: d.replicas,
            frequencies: d.frequencies,
            standard_errors: d.standard_errors,
            timeouts: d.timeouts,
            graph_model: vertex_split(&sys, &targets, args.rho, kappa, args.graph_cells, &prec)?,
        });
    }

    let check = args.check.then(|| {
        let sigmas = args.sigmas.or((args.preset == Preset::Symmetric).then_some(3.0));
        match (&empirical, &smoke_run) {
            (Some(d), _) => {
                let deviations: Vec<f64> =
                    d.frequencies.iter().zip(&weights_theory).map(|(f, w)| f - w).collect();
                let (mode, passed) = match sigmas {
                    Some(k) => (
                        format!("within {k} standard errors"),
                        deviations.iter().zip(&d.standard_errors).all(|(x, se)| x.abs() <= k * se),
                    ),
                    None => (
                        format!("within {} absolute", args.tolerance),
                        deviations.iter().all(|x| x.abs() <= args.tolerance),
                    ),
                };
                CheckReport { mode, deviations, passed }
            }
            (None, Some(s)) => CheckReport { mode: "noiseless monotone H".into(), deviations: vec![s.worst_violation], passed: s.passed },
            (None, None) => unreachable!("either a Monte Carlo or a smoke run happened"),
        }
    });

    let params = json!({
        "preset": args.preset,
        "system": sys,
        "delta": args.delta,
        "kappa": args.kappa,
        "dt": dt,
        "t_max": args.t_max,
        "replicas": args.replicas,
        "rho": args.rho,
        "start": args.start,
        "targets": args.targets,
        "sensitivity": args.sensitivity,
        "sensitivity_replicas": args.sensitivity_replicas,
        "graph_cells": args.graph_cells,
    });
    Ok(Demo2dDoc {
        manifest: clock.finish(None, Some(args.seed), params),
        preset: args.preset,
        system: sys,
        start: args.start,
        start_lobe: start_lobe.index(),
        targets: args.targets.clone(),
        rho: args.rho,
        delta: args.delta,
        kappa: args.kappa,
        dt,
        alphas,
        alphas_doubled,
        gammas,
        a_hats,
        weights_theory,
        weights_graph_model: graph,
        standard_errors: empirical.as_ref().map(|d| d.standard_errors.clone()),
        ci95: empirical.as_ref().map(|d| d.wilson.clone()),
        timeouts: empirical.as_ref().map(|d| d.timeouts),
        mean_hit_time: empirical.as_ref().map(|d| d.mean_hit_time),
        weights_empirical: empirical.map(|d| d.frequencies),
        smoke: smoke_run,
        level_tables: level_tables(&sys, args.level_points, &prec),
        sensitivity,
        check,
    })
}

pub fn run(args: &Demo2dArgs, out: &mut dyn Write, log: &mut dyn Write) -> Result<u8, CliError> {
    let doc = compute(args)?;
    serde_json::to_writer_pretty(&mut *out, &doc).map_err(std::io::Error::from)?;
    writeln!(out)?;
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ");
    writeln!(log, "theory    {}", fmt(&doc.weights_theory))?;
    if let (Some(e), Some(g)) = (&doc.weights_empirical, &doc.weights_graph_model) {
        writeln!(log, "graph     {}", fmt(g))?;
        writeln!(log, "empirical {}", fmt(e))?;
    }
    match &doc.check {
        Some(c) if !c.passed => {
            writeln!(log, "check failed ({}): deviations {}", c.mode, fmt(&c.deviations))?;
            Ok(code::CHECK_FAILED)
        }
        _ => Ok(code::OK),
    }
}
