use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Bumped whenever a field of any emitted document changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

/// Provenance block attached to every output. Apart from `wall_time_s`, two
/// runs with the same input, parameters and seed produce the same manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    /// SHA-256 of the input file bytes, or of the parameter echo when the
    /// command reads no file.
    pub input_sha256: String,
    pub seed: Option<u64>,
    pub version: String,
    pub threads: usize,
    pub wall_time_s: f64,
    pub params: Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub struct Stopwatch {
    start: Instant,
    command: &'static str,
}

impl Stopwatch {
    pub fn start(command: &'static str) -> Self {
        Self { start: Instant::now(), command }
    }

    pub fn finish(&self, input: Option<&[u8]>, seed: Option<u64>, params: Value) -> RunManifest {
        let digest = match input {
            Some(bytes) => sha256_hex(bytes),
            None => sha256_hex(params.to_string().as_bytes()),
        };
        RunManifest {
            schema_version: SCHEMA_VERSION,
            command: self.command.to_string(),
            input_sha256: digest,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            threads: rayon::current_num_threads(),
            wall_time_s: self.start.elapsed().as_secs_f64(),
            params,
        }
    }
}
