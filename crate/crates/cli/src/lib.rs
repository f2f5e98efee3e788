//! Command-line pipelines over `keplerstat_core`.

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod manifest;
pub mod output;
pub mod pipelines;
pub mod plot;

use std::path::PathBuf;

use chrono::{SecondsFormat, Utc};
use keplerstat_core::Error as CoreError;

pub use config::{resolve, Cli, Command, ConfigError, RunConfig};
pub use manifest::{FileEntry, RunManifest, MANIFEST_NAME};
pub use output::OutputDir;

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NON_CONVERGENCE: i32 = 3;

/// Runs one resolved configuration; returns the manifest path.
pub fn run(cfg: &RunConfig) -> anyhow::Result<PathBuf> {
    cfg.validate()?;
    let started = now();
    let mut out = OutputDir::create(&cfg.output_dir).map_err(|e| ConfigError(format!("{e:#}")))?;
    let report = pipelines::dispatch(cfg, &mut out)?;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        started,
        finished: now(),
        config: cfg.clone(),
        member_betas: report.member_betas,
        operating_points: report.operating_points,
        derived: report.derived,
        files: Vec::new(),
    };
    out.commit(manifest)
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Process exit code for a failed run.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return EXIT_CONFIG;
        }
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return match e {
                CoreError::NonConvergence { .. } => EXIT_NON_CONVERGENCE,
                CoreError::InvalidParameter(_)
                | CoreError::WindowViolated { .. }
                | CoreError::IntervalOutsideWindow { .. }
                | CoreError::GridCoverage { .. } => EXIT_CONFIG,
                _ => EXIT_FAILURE,
            };
        }
    }
    EXIT_FAILURE
}
