use std::io::Write;
use std::path::{Path, PathBuf};

use metahier_core::validation::{validate, Status, ValidationConfig, ValidationReport};
use serde::Serialize;
use serde_json::json;

use crate::analyze::{build, read_matrix};
use crate::error::{code, CliError};
use crate::manifest::{sha256_hex, RunManifest, Stopwatch};

pub struct ValidateArgs {
    pub input: PathBuf,
    /// Matrix the predictions are built from; defaults to `input`.
    pub predict_from: Option<PathBuf>,
    pub eps: Vec<f64>,
    pub replicas: usize,
    pub seed: u64,
    pub fits_csv: Option<PathBuf>,
}

#[derive(Serialize)]
struct ValidateDoc<'a> {
    manifest: RunManifest,
    prediction_sha256: String,
    report: &'a ValidationReport,
}

pub fn run(args: &ValidateArgs, out: &mut dyn Write, log: &mut dyn Write) -> Result<u8, CliError> {
    let clock = Stopwatch::start("validate");
    let (bytes, oracle) = read_matrix(&args.input)?;
    let predict_path: &Path = args.predict_from.as_deref().unwrap_or(&args.input);
    let (claimed_bytes, claimed_v) = read_matrix(predict_path)?;
    let claimed = build(predict_path, &claimed_v)?;
    build(&args.input, &oracle)?;
    let cfg = ValidationConfig {
        eps_grid: args.eps.clone(),
        replicas: args.replicas,
        seed: args.seed,
        ..Default::default()
    };
    let report = validate(&oracle, &claimed, &cfg)?;

    if let Some(path) = &args.fits_csv {
        let mut w = csv::Writer::from_path(path)?;
        for p in &report.fits {
            w.serialize(p)?;
        }
        w.flush()?;
    }
    let doc = ValidateDoc {
        manifest: clock.finish(
            Some(&bytes),
            Some(args.seed),
            json!({
                "input": args.input.display().to_string(),
                "predict_from": predict_path.display().to_string(),
                "eps": args.eps,
                "replicas": args.replicas,
            }),
        ),
        prediction_sha256: sha256_hex(&claimed_bytes),
        report: &report,
    };
    serde_json::to_writer_pretty(&mut *out, &doc).map_err(std::io::Error::from)?;
    writeln!(out)?;

    let failed: Vec<_> = report.checks.iter().filter(|c| c.status == Status::Fail).collect();
    writeln!(log, "{} checks, {} failed", report.checks.len(), failed.len())?;
    for c in &failed {
        writeln!(log, "FAIL {:?} {}: predicted {}, observed {} ({})", c.kind, c.subject, c.predicted, c.observed, c.tolerance)?;
    }
    Ok(if report.precision_loss {
        code::PRECISION_LOSS
    } else if !report.passed {
        code::CHECK_FAILED
    } else {
        code::OK
    })
}
