//! Run configuration: defaults, manifest, config file and flags, in that order.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, ValueEnum};
use keplerstat_core::theory::DEFAULT_M_CUT_MAX;
use keplerstat_core::{EnsembleConfig, EnsembleLayout};
use serde::{Deserialize, Serialize};

use crate::manifest::RunManifest;

/// Default central betas of the `theory` dump.
pub const DEFAULT_BETAS: [f64; 6] = [5.0e5, 1.0e6, 2.0e6, 3.0e6, 4.0e6, 5.0e6];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Model spectrum of one system, raw and unfolded.
    Spectrum,
    /// Pooled nearest-neighbour spacing histogram over the ensemble.
    Spacings,
    /// Saturation rigidity versus interval center, with theory overlay.
    Rigidity,
    /// Number variance versus interval width at fixed centers.
    Variance,
    /// Periodic-orbit form factor and its smooth references.
    Correlation,
    /// Operating-point dump: omega_r, gamma_cir, M_r^min, saturation values.
    Theory,
    /// Classical periodic orbits at a given energy.
    Orbits,
    /// Deviation between two curve files on their common grid.
    Compare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Spacings => "spacings",
            Command::Rigidity => "rigidity",
            Command::Variance => "variance",
            Command::Correlation => "correlation",
            Command::Theory => "theory",
            Command::Orbits => "orbits",
            Command::Compare => "compare",
        }
    }
}

/// Invalid or inconsistent configuration; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// Spectrum window. `eps_max` only matters for `spectrum`; the ensemble
/// commands size each member to the widest interval they evaluate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub eps_max: f64,
    pub window_fraction: f64,
    /// Unfolded spacing window; `None` means the command default.
    pub unfolded_min: Option<f64>,
    pub unfolded_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grids {
    pub eps_centers: Vec<f64>,
    /// Width / frequency grid; `None` edges default to `(0, 3 omega_r]`.
    pub e_min: Option<f64>,
    pub e_max: Option<f64>,
    pub e_steps: usize,
    pub centers_min: f64,
    pub centers_max: f64,
    pub centers_steps: usize,
    pub bins: usize,
    /// Fejer cutoff of the form-factor sum.
    pub cutoff: u64,
    /// Largest radial winding the saturation sums may reach.
    pub max_terms: u64,
    pub theory_betas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalConfig {
    pub alpha: f64,
    pub beta_raw: f64,
    pub mass: f64,
    pub energy: f64,
    pub mr_max: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub ensemble: EnsembleConfig,
    pub window: WindowConfig,
    pub grids: Grids,
    pub classical: ClassicalConfig,
    pub correction_enabled: bool,
    pub output_dir: PathBuf,
    pub workers: usize,
    pub inputs: Vec<PathBuf>,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        let (eps_centers, e_min, e_steps) = match command {
            Command::Variance => (vec![2.0e5, 5.0e5], None, 300),
            Command::Correlation => (vec![5.0e5], Some(0.0), 601),
            Command::Theory => (vec![2.0e5, 5.0e5], None, 300),
            _ => (vec![5.0e5], None, 300),
        };
        let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
        RunConfig {
            command,
            ensemble: EnsembleConfig::new(3.0e6),
            window: WindowConfig {
                eps_max: 1.0e5,
                window_fraction: 0.5,
                unfolded_min: None,
                unfolded_max: None,
            },
            grids: Grids {
                eps_centers,
                e_min,
                e_max: None,
                e_steps,
                centers_min: 1.0e5,
                centers_max: 6.0e5,
                centers_steps: 26,
                bins: 60,
                cutoff: 2000,
                max_terms: DEFAULT_M_CUT_MAX,
                theory_betas: DEFAULT_BETAS.to_vec(),
            },
            classical: ClassicalConfig {
                alpha: 1.0,
                beta_raw: 1.0,
                mass: 1.0,
                energy: -0.125,
                mr_max: 8,
            },
            correction_enabled: false,
            output_dir: PathBuf::from("out").join(command.name()),
            workers,
            inputs: Vec::new(),
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.workers == 0 {
            return Err(config_error("workers must be positive"));
        }
        self.ensemble
            .validate()
            .map_err(|e| config_error(format!("ensemble: {e}")))?;
        let w = &self.window;
        if !(w.eps_max > 0.0 && w.eps_max.is_finite()) {
            return Err(config_error(format!(
                "eps-max must be positive, got {}",
                w.eps_max
            )));
        }
        if !(w.window_fraction > 0.0 && w.window_fraction < 1.0) {
            return Err(config_error(format!(
                "window-fraction must lie in (0, 1), got {}",
                w.window_fraction
            )));
        }
        if let (Some(lo), Some(hi)) = (w.unfolded_min, w.unfolded_max) {
            if !(lo >= 0.0 && lo < hi) {
                return Err(config_error(format!("bad unfolded window [{lo}, {hi}]")));
            }
        }
        let g = &self.grids;
        if g.eps_centers.is_empty() {
            return Err(config_error("at least one eps-center is required"));
        }
        strictly_increasing(&g.eps_centers, "eps-center")?;
        if g.eps_centers.iter().any(|&c| !(c > 0.0)) {
            return Err(config_error("eps-center values must be positive"));
        }
        if g.e_steps == 0 {
            return Err(config_error("e-steps must be positive"));
        }
        if let (Some(lo), Some(hi)) = (g.e_min, g.e_max) {
            if !(lo < hi || (g.e_steps == 1 && lo <= hi)) {
                return Err(config_error(format!("e-min {lo} must be below e-max {hi}")));
            }
        }
        if g.e_min.is_some_and(|v| v < 0.0) {
            return Err(config_error("e-min must be non-negative"));
        }
        if g.centers_steps == 0 {
            return Err(config_error("centers grid is empty"));
        }
        if !(g.centers_min > 0.0 && (g.centers_min < g.centers_max || g.centers_steps == 1)) {
            return Err(config_error(format!(
                "bad centers range [{}, {}]",
                g.centers_min, g.centers_max
            )));
        }
        if g.bins < 2 {
            return Err(config_error(format!(
                "bins must be at least 2, got {}",
                g.bins
            )));
        }
        if g.cutoff < 2 {
            return Err(config_error("m-cut must be at least 2"));
        }
        if g.max_terms < 2 {
            return Err(config_error("max-terms must be at least 2"));
        }
        if g.theory_betas.is_empty() || g.theory_betas.iter().any(|&b| !(b > 0.0)) {
            return Err(config_error("theory betas must be positive"));
        }
        if self.classical.mr_max == 0 {
            return Err(config_error("mr-max must be positive"));
        }
        if self.command == Command::Compare && self.inputs.len() != 2 {
            return Err(config_error(format!(
                "compare needs exactly two --input files, got {}",
                self.inputs.len()
            )));
        }
        Ok(())
    }
}

fn strictly_increasing(v: &[f64], what: &str) -> anyhow::Result<()> {
    if v.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(config_error(format!(
            "{what} values must be strictly increasing"
        )));
    }
    Ok(())
}

/// Every setting that can come from a flag or a config-file line.
#[derive(Args, Debug, Default, Clone)]
pub struct Flags {
    /// Central beta of the ensemble (and the single beta of `spectrum`/`theory`).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Ensemble size.
    #[arg(long)]
    pub members: Option<usize>,
    /// Relative half-width of the beta range.
    #[arg(long)]
    pub spread: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Draw member betas at random inside equal cells (uses --seed).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub jitter: Option<bool>,
    /// Interval center(s) in unfolded energy; repeatable or comma separated.
    #[arg(long = "eps-center", value_delimiter = ',')]
    pub eps_center: Vec<f64>,
    #[arg(long = "e-min")]
    pub e_min: Option<f64>,
    #[arg(long = "e-max")]
    pub e_max: Option<f64>,
    #[arg(long = "e-steps")]
    pub e_steps: Option<usize>,
    #[arg(long = "centers-min")]
    pub centers_min: Option<f64>,
    #[arg(long = "centers-max")]
    pub centers_max: Option<f64>,
    #[arg(long = "centers-steps")]
    pub centers_steps: Option<usize>,
    /// Include the short-orbit correction in theory curves.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub correction: Option<bool>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Raw spectrum cutoff for `spectrum`.
    #[arg(long = "eps-max")]
    pub eps_max: Option<f64>,
    #[arg(long = "window-fraction")]
    pub window_fraction: Option<f64>,
    /// Unfolded spacing window for `spacings`.
    #[arg(long = "window-min")]
    pub window_min: Option<f64>,
    #[arg(long = "window-max")]
    pub window_max: Option<f64>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Cutoff of the form-factor sum for `correlation`.
    #[arg(long = "m-cut")]
    pub m_cut: Option<u64>,
    /// Term limit of the saturation sums; reaching it is a non-convergence.
    #[arg(long = "max-terms")]
    pub max_terms: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long = "beta-raw", allow_hyphen_values = true)]
    pub beta_raw: Option<f64>,
    #[arg(long = "mass")]
    pub mass: Option<f64>,
    /// Physical energy for `orbits` (negative for bound motion).
    #[arg(long, allow_hyphen_values = true)]
    pub energy: Option<f64>,
    #[arg(long = "mr-max")]
    pub mr_max: Option<u64>,
    /// Curve files for `compare`.
    #[arg(long = "input")]
    pub inputs: Vec<PathBuf>,
}

impl Flags {
    /// Layers the settings present in `self` over `cfg`.
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(b) = self.beta {
            cfg.ensemble.beta_central = b;
            if cfg.command == Command::Theory {
                cfg.grids.theory_betas = vec![b];
            }
        }
        set(&mut cfg.ensemble.member_count, self.members);
        set(&mut cfg.ensemble.spread, self.spread);
        set(&mut cfg.ensemble.seed, self.seed);
        if let Some(j) = self.jitter {
            cfg.ensemble.layout = if j {
                EnsembleLayout::Stratified
            } else {
                EnsembleLayout::Uniform
            };
        }
        if !self.eps_center.is_empty() {
            cfg.grids.eps_centers = self.eps_center.clone();
        }
        if self.e_min.is_some() {
            cfg.grids.e_min = self.e_min;
        }
        if self.e_max.is_some() {
            cfg.grids.e_max = self.e_max;
        }
        set(&mut cfg.grids.e_steps, self.e_steps);
        set(&mut cfg.grids.centers_min, self.centers_min);
        set(&mut cfg.grids.centers_max, self.centers_max);
        set(&mut cfg.grids.centers_steps, self.centers_steps);
        set(&mut cfg.correction_enabled, self.correction);
        set(&mut cfg.workers, self.workers);
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        set(&mut cfg.window.eps_max, self.eps_max);
        set(&mut cfg.window.window_fraction, self.window_fraction);
        if self.window_min.is_some() {
            cfg.window.unfolded_min = self.window_min;
        }
        if self.window_max.is_some() {
            cfg.window.unfolded_max = self.window_max;
        }
        set(&mut cfg.grids.bins, self.bins);
        set(&mut cfg.grids.cutoff, self.m_cut);
        set(&mut cfg.grids.max_terms, self.max_terms);
        set(&mut cfg.classical.alpha, self.alpha);
        set(&mut cfg.classical.beta_raw, self.beta_raw);
        set(&mut cfg.classical.mass, self.mass);
        set(&mut cfg.classical.energy, self.energy);
        set(&mut cfg.classical.mr_max, self.mr_max);
        if !self.inputs.is_empty() {
            cfg.inputs = self.inputs.clone();
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "keplerstat",
    version,
    about = "Level statistics of the modified Kepler problem and their periodic-orbit theory"
)]
pub struct Cli {
    pub command: Command,
    /// Plain-text `key = value` file; keys are flag names without dashes.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Start from the configuration recorded in a previous run's manifest.
    #[arg(long = "from-manifest")]
    pub from_manifest: Option<PathBuf>,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Parser, Debug)]
#[command(no_binary_name = true)]
struct FileArgs {
    #[command(flatten)]
    flags: Flags,
}

/// Parses `key = value` lines into [`Flags`]. `#` starts a comment; a
/// key may repeat where the flag is repeatable.
pub fn parse_config_text(text: &str) -> anyhow::Result<Flags> {
    let mut argv = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| config_error(format!("line {}: expected key = value", n + 1)))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if matches!(key.as_str(), "config" | "from-manifest") {
            return Err(config_error(format!(
                "line {}: {key} cannot be nested",
                n + 1
            )));
        }
        let value: Vec<&str> = value.split(',').map(str::trim).collect();
        argv.push(format!("--{key}={}", value.join(",")));
    }
    FileArgs::try_parse_from(argv)
        .map(|a| a.flags)
        .map_err(|e| config_error(format!("config file: {}", e.to_string().trim())))
}

pub fn read_config_file(path: &Path) -> anyhow::Result<Flags> {
    let text = fs::read_to_string(path)
        .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    parse_config_text(&text)
}

/// Resolves the layered configuration of one invocation.
pub fn resolve(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.from_manifest {
        Some(path) => {
            let m = RunManifest::load(path).map_err(|e| config_error(format!("{e:#}")))?;
            if m.config.command != cli.command {
                return Err(config_error(format!(
                    "manifest records command `{}`, not `{}`",
                    m.config.command.name(),
                    cli.command.name()
                )));
            }
            m.config
        }
        None => RunConfig::defaults(cli.command),
    };
    if let Some(path) = &cli.config {
        read_config_file(path)?.apply(&mut cfg);
    }
    cli.flags.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}
