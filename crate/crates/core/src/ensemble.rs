//! beta-ensembles and the ensemble-averaged scans.
//!
//! Every scan maps over members in parallel and reduces in member-index
//! order, so results do not depend on the number of workers.

use std::borrow::Cow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spectrum::{
    generate_model_spectrum, raw_energy, unfold, SpectrumParams, UnfoldedSpectrum,
};
use crate::stats::{
    delta3_unchecked, nn_spacings, number_variance, number_variance_stderr, IntervalSpec,
    SpacingAccumulator, StatCurve,
};
use crate::theory::radial_frequency;

pub const DEFAULT_MEMBER_COUNT: usize = 100;
pub const DEFAULT_SPREAD: f64 = 5.0e-3;
pub const MAX_SPREAD: f64 = 0.05;
/// Points in the E-grid of the saturation estimator.
pub const SATURATION_GRID_POINTS: usize = 64;

/// How member betas are laid out inside `[beta0 (1 - spread), beta0 (1 + spread)]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleLayout {
    /// Equally spaced, endpoints included.
    #[default]
    Uniform,
    /// One uniformly drawn beta per equal-width cell, drawn from `seed`.
    Stratified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub beta_central: f64,
    pub member_count: usize,
    /// Relative half-width of the beta range.
    pub spread: f64,
    pub seed: u64,
    #[serde(default)]
    pub layout: EnsembleLayout,
}

impl EnsembleConfig {
    pub fn new(beta_central: f64) -> Self {
        Self {
            beta_central,
            member_count: DEFAULT_MEMBER_COUNT,
            spread: DEFAULT_SPREAD,
            seed: 0,
            layout: EnsembleLayout::Uniform,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta_central.is_finite() && self.beta_central > 0.0) {
            return Err(invalid(format!(
                "beta_central must be positive, got {}",
                self.beta_central
            )));
        }
        if self.member_count < 2 {
            return Err(invalid(format!(
                "member_count must be at least 2, got {}",
                self.member_count
            )));
        }
        if !(self.spread > 0.0 && self.spread < MAX_SPREAD) {
            return Err(invalid(format!(
                "spread must lie in (0, {MAX_SPREAD}), got {}",
                self.spread
            )));
        }
        Ok(())
    }
}

/// Member betas, deterministic in `cfg`.
pub fn make_ensemble(cfg: &EnsembleConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let m = cfg.member_count;
    let last = (m - 1) as f64;
    let betas = match cfg.layout {
        EnsembleLayout::Uniform => (0..m)
            .map(|i| {
                let offset = (2 * i) as f64 - last;
                cfg.beta_central + cfg.beta_central * cfg.spread * offset / last
            })
            .collect(),
        EnsembleLayout::Stratified => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let cell = 2.0 * cfg.spread / m as f64;
            (0..m)
                .map(|i| {
                    let x = -cfg.spread + cell * (i as f64 + rng.gen::<f64>());
                    cfg.beta_central + cfg.beta_central * x
                })
                .collect()
        }
    };
    Ok(betas)
}

/// Anything that can hand out unfolded ensemble members by index.
pub trait MemberSource: Sync {
    fn member_count(&self) -> usize;
    fn member(&self, index: usize) -> Result<Cow<'_, UnfoldedSpectrum>>;
}

impl MemberSource for [UnfoldedSpectrum] {
    fn member_count(&self) -> usize {
        self.len()
    }

    fn member(&self, index: usize) -> Result<Cow<'_, UnfoldedSpectrum>> {
        self.get(index)
            .map(Cow::Borrowed)
            .ok_or_else(|| invalid(format!("member {index} out of range")))
    }
}

impl MemberSource for Vec<UnfoldedSpectrum> {
    fn member_count(&self) -> usize {
        self.len()
    }

    fn member(&self, index: usize) -> Result<Cow<'_, UnfoldedSpectrum>> {
        self.as_slice().member(index)
    }
}

/// Model spectra generated on demand, each covering `[0, unfolded_upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaEnsemble {
    betas: Vec<f64>,
    window_fraction: f64,
    unfolded_upper: f64,
}

impl BetaEnsemble {
    pub fn new(cfg: &EnsembleConfig, window_fraction: f64, unfolded_upper: f64) -> Result<Self> {
        Self::from_betas(make_ensemble(cfg)?, window_fraction, unfolded_upper)
    }

    pub fn from_betas(betas: Vec<f64>, window_fraction: f64, unfolded_upper: f64) -> Result<Self> {
        if !(unfolded_upper.is_finite() && unfolded_upper > 0.0) {
            return Err(invalid(format!(
                "unfolded window edge must be positive, got {unfolded_upper}"
            )));
        }
        let ensemble = Self {
            betas,
            window_fraction,
            unfolded_upper,
        };
        // Fail before any work if some member cannot host the window.
        for i in 0..ensemble.betas.len() {
            ensemble.params(i)?;
        }
        Ok(ensemble)
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// Spectrum parameters of member `index`; the raw window is the smallest
    /// one whose unfolded edge reaches `unfolded_upper`.
    pub fn params(&self, index: usize) -> Result<SpectrumParams> {
        let beta = *self
            .betas
            .get(index)
            .ok_or_else(|| invalid(format!("member {index} out of range")))?;
        let s = (2.0 * beta).sqrt();
        let mut eps_max = raw_energy(self.unfolded_upper, s);
        eps_max += eps_max * 4.0 * f64::EPSILON;
        SpectrumParams::with_window_fraction(beta, eps_max, self.window_fraction)
    }
}

impl MemberSource for BetaEnsemble {
    fn member_count(&self) -> usize {
        self.betas.len()
    }

    fn member(&self, index: usize) -> Result<Cow<'_, UnfoldedSpectrum>> {
        let spectrum = generate_model_spectrum(&self.params(index)?)?;
        Ok(Cow::Owned(unfold(&spectrum)))
    }
}

/// Evaluates `f` on every member with `workers` threads; output in member order.
pub fn map_members<S, T, F>(source: &S, workers: usize, f: F) -> Result<Vec<T>>
where
    S: MemberSource + ?Sized,
    T: Send,
    F: Fn(usize, &UnfoldedSpectrum) -> Result<T> + Sync,
{
    if workers == 0 {
        return Err(invalid("workers must be positive"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| invalid(format!("cannot build worker pool: {e}")))?;
    pool.install(|| {
        (0..source.member_count())
            .into_par_iter()
            .map(|i| {
                let member = source.member(i)?;
                f(i, &member)
            })
            .collect()
    })
}

fn check_grid(grid: &[f64], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid(format!("{what} grid is empty")));
    }
    if grid.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(invalid(format!("{what} grid must be positive")));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid(format!("{what} grid must be strictly increasing")));
    }
    Ok(())
}

fn check_window(u: &UnfoldedSpectrum, lo: f64, hi: f64) -> Result<()> {
    let (window_lo, window_hi) = u.window();
    if lo < window_lo || hi > window_hi {
        return Err(Error::IntervalOutsideWindow {
            lo,
            hi,
            window_lo,
            window_hi,
        });
    }
    Ok(())
}

fn count_in(u: &UnfoldedSpectrum, lo: f64, hi: f64) -> u64 {
    let levels = u.levels();
    (levels.partition_point(|&v| v <= hi) - levels.partition_point(|&v| v <= lo)) as u64
}

/// Number variance versus interval width at a fixed unfolded center, with
/// jackknife standard errors over members.
pub fn sigma_scan<S>(source: &S, center: f64, widths: &[f64], workers: usize) -> Result<StatCurve>
where
    S: MemberSource + ?Sized,
{
    check_grid(widths, "width")?;
    let counts = map_members(source, workers, |_, u| {
        let widest = widths[widths.len() - 1];
        check_window(u, center - 0.5 * widest, center + 0.5 * widest)?;
        Ok(widths
            .iter()
            .map(|&e| count_in(u, center - 0.5 * e, center + 0.5 * e))
            .collect::<Vec<u64>>())
    })?;
    let mut mean = Vec::with_capacity(widths.len());
    let mut spread = Vec::with_capacity(widths.len());
    let mut column = Vec::with_capacity(counts.len());
    for j in 0..widths.len() {
        column.clear();
        column.extend(counts.iter().map(|c| c[j]));
        mean.push(number_variance(&column)?);
        spread.push(number_variance_stderr(&column)?);
    }
    StatCurve::new(widths.to_vec(), mean, Some(spread))
}

/// Ensemble-mean rigidity versus interval width at a fixed center.
pub fn delta3_scan<S>(source: &S, center: f64, widths: &[f64], workers: usize) -> Result<StatCurve>
where
    S: MemberSource + ?Sized,
{
    check_grid(widths, "width")?;
    let values = map_members(source, workers, |_, u| {
        let widest = widths[widths.len() - 1];
        check_window(u, center - 0.5 * widest, center + 0.5 * widest)?;
        Ok(widths
            .iter()
            .map(|&e| delta3_unchecked(u, center - 0.5 * e, e))
            .collect::<Vec<f64>>())
    })?;
    let (mean, spread) = column_stats(&values, widths.len());
    StatCurve::new(widths.to_vec(), mean, Some(spread))
}

/// Mean and standard error of the mean for each column of `rows`.
fn column_stats(rows: &[Vec<f64>], columns: usize) -> (Vec<f64>, Vec<f64>) {
    let m = rows.len() as f64;
    (0..columns)
        .map(|j| {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / m;
            let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
            (mean, (var / m).sqrt())
        })
        .unzip()
}

/// Range of interval widths averaged by the saturation estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EnergyBand {
    /// Fixed widths `[lo, hi]` at every center.
    Absolute { lo: f64, hi: f64 },
    /// Widths `[lo, hi] * omega_r(center)`.
    RadialPeriods { lo: f64, hi: f64 },
}

impl Default for EnergyBand {
    fn default() -> Self {
        EnergyBand::RadialPeriods { lo: 2.0, hi: 4.0 }
    }
}

impl EnergyBand {
    /// Absolute widths at `center`; `beta` is needed for the radial-period form.
    pub fn resolve(&self, center: f64, beta: Option<f64>) -> Result<(f64, f64)> {
        let (lo, hi) = match *self {
            EnergyBand::Absolute { lo, hi } => (lo, hi),
            EnergyBand::RadialPeriods { lo, hi } => {
                let beta = beta
                    .ok_or_else(|| invalid("a band in radial periods needs the ensemble beta"))?;
                let w = radial_frequency(center, beta);
                (lo * w, hi * w)
            }
        };
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(invalid(format!("bad energy band [{lo}, {hi}]")));
        }
        Ok((lo, hi))
    }
}

/// `points` equally spaced values over `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        n => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Oscillation-averaged saturation rigidity versus interval center.
///
/// For each center the rigidity is averaged over `points` widths spanning
/// `bands[i]` and then over members; the spread is the standard error over
/// members.
pub fn rigidity_scan<S>(
    source: &S,
    centers: &[f64],
    bands: &[(f64, f64)],
    points: usize,
    workers: usize,
) -> Result<StatCurve>
where
    S: MemberSource + ?Sized,
{
    check_grid(centers, "center")?;
    if bands.len() != centers.len() {
        return Err(invalid("one band per center required"));
    }
    if points == 0 {
        return Err(invalid("band grid needs at least one point"));
    }
    let grids: Vec<Vec<f64>> = bands
        .iter()
        .map(|&(lo, hi)| linspace(lo, hi, points))
        .collect();
    for (c, &(_, hi)) in centers.iter().zip(bands) {
        IntervalSpec::new(*c, hi)?;
    }
    let values = map_members(source, workers, |_, u| {
        centers
            .iter()
            .zip(&grids)
            .map(|(&c, grid)| {
                let widest = grid[grid.len() - 1];
                check_window(u, c - 0.5 * widest, c + 0.5 * widest)?;
                let sum: f64 = grid
                    .iter()
                    .map(|&e| delta3_unchecked(u, c - 0.5 * e, e))
                    .sum();
                Ok(sum / grid.len() as f64)
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let (mean, spread) = column_stats(&values, centers.len());
    StatCurve::new(centers.to_vec(), mean, Some(spread))
}

/// Pooled nearest-neighbour spacings of levels in `[lo, hi]`.
pub fn spacing_scan<S>(
    source: &S,
    lo: f64,
    hi: f64,
    resolution: f64,
    workers: usize,
) -> Result<SpacingAccumulator>
where
    S: MemberSource + ?Sized,
{
    if !(lo < hi) {
        return Err(invalid(format!("bad spacing window [{lo}, {hi}]")));
    }
    let parts = map_members(source, workers, |_, u| {
        check_window(u, lo, hi)?;
        let mut acc = SpacingAccumulator::new(resolution)?;
        acc.extend(nn_spacings(u, lo, hi));
        Ok(acc)
    })?;
    let mut total = SpacingAccumulator::new(resolution)?;
    for part in &parts {
        total.merge(part)?;
    }
    Ok(total)
}

/// Execution knobs shared by the beta-ensemble scans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub window_fraction: f64,
    pub workers: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            window_fraction: 0.5,
            workers: 1,
        }
    }
}

/// [`sigma_scan`] over the beta-ensemble described by `cfg`.
pub fn ensemble_sigma_scan(
    cfg: &EnsembleConfig,
    center: f64,
    widths: &[f64],
    opts: &ScanOptions,
) -> Result<StatCurve> {
    check_grid(widths, "width")?;
    let upper = center + 0.5 * widths[widths.len() - 1];
    let ensemble = BetaEnsemble::new(cfg, opts.window_fraction, upper)?;
    sigma_scan(&ensemble, center, widths, opts.workers)
}

/// [`delta3_scan`] over the beta-ensemble described by `cfg`.
pub fn ensemble_delta3_scan(
    cfg: &EnsembleConfig,
    center: f64,
    widths: &[f64],
    opts: &ScanOptions,
) -> Result<StatCurve> {
    check_grid(widths, "width")?;
    let upper = center + 0.5 * widths[widths.len() - 1];
    let ensemble = BetaEnsemble::new(cfg, opts.window_fraction, upper)?;
    delta3_scan(&ensemble, center, widths, opts.workers)
}

/// Resolves `band` at each center and checks the lower edge sits at least
/// two radial periods out, where the oscillations have decayed.
pub fn saturation_bands(centers: &[f64], band: &EnergyBand, beta: f64) -> Result<Vec<(f64, f64)>> {
    centers
        .iter()
        .map(|&c| {
            let (lo, hi) = band.resolve(c, Some(beta))?;
            let w = radial_frequency(c, beta);
            if lo < 2.0 * w * (1.0 - 1e-12) {
                return Err(invalid(format!(
                    "band lower edge {lo} is below 2 omega_r = {} at center {c}",
                    2.0 * w
                )));
            }
            Ok((lo, hi))
        })
        .collect()
}

/// [`rigidity_scan`] over the beta-ensemble described by `cfg`.
pub fn ensemble_rigidity_scan(
    cfg: &EnsembleConfig,
    centers: &[f64],
    band: &EnergyBand,
    opts: &ScanOptions,
) -> Result<StatCurve> {
    check_grid(centers, "center")?;
    let bands = saturation_bands(centers, band, cfg.beta_central)?;
    let upper = centers
        .iter()
        .zip(&bands)
        .map(|(c, (_, hi))| c + 0.5 * hi)
        .fold(0.0, f64::max);
    let ensemble = BetaEnsemble::new(cfg, opts.window_fraction, upper)?;
    rigidity_scan(
        &ensemble,
        centers,
        &bands,
        SATURATION_GRID_POINTS,
        opts.workers,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_member_endpoints() {
        let cfg = EnsembleConfig {
            member_count: 2,
            ..EnsembleConfig::new(1.0e6)
        };
        assert_eq!(make_ensemble(&cfg).unwrap(), vec![995_000.0, 1_005_000.0]);
    }

    #[test]
    fn hundred_members_symmetric() {
        let cfg = EnsembleConfig::new(3.0e6);
        let betas = make_ensemble(&cfg).unwrap();
        assert_eq!(betas.len(), 100);
        assert!(betas.windows(2).all(|w| w[0] < w[1]));
        let mean = betas.iter().sum::<f64>() / 100.0;
        assert_relative_eq!(mean, 3.0e6, max_relative = 1e-14);
        assert_eq!(betas, make_ensemble(&cfg).unwrap());
    }

    #[test]
    fn stratified_layout_is_seeded() {
        let cfg = EnsembleConfig {
            layout: EnsembleLayout::Stratified,
            seed: 7,
            ..EnsembleConfig::new(1.0e6)
        };
        let a = make_ensemble(&cfg).unwrap();
        assert_eq!(a, make_ensemble(&cfg).unwrap());
        let b = make_ensemble(&EnsembleConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a, b);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert!(a.iter().all(|&x| (x / 1.0e6 - 1.0).abs() <= cfg.spread));
    }

    #[test]
    fn config_validation() {
        let base = EnsembleConfig::new(1.0e6);
        assert!(EnsembleConfig {
            member_count: 1,
            ..base
        }
        .validate()
        .is_err());
        assert!(EnsembleConfig {
            spread: 0.05,
            ..base
        }
        .validate()
        .is_err());
        assert!(EnsembleConfig {
            spread: 0.0,
            ..base
        }
        .validate()
        .is_err());
        assert!(EnsembleConfig {
            beta_central: -1.0,
            ..base
        }
        .validate()
        .is_err());
    }

    #[test]
    fn member_window_covers_request() {
        let cfg = EnsembleConfig {
            member_count: 3,
            ..EnsembleConfig::new(1.0e5)
        };
        let e = BetaEnsemble::new(&cfg, 0.5, 2.0e4).unwrap();
        for i in 0..3 {
            let u = e.member(i).unwrap();
            assert!(u.window().1 >= 2.0e4);
        }
        // Unfolded edge beyond the model domain for this fraction.
        assert!(BetaEnsemble::new(&cfg, 0.25, 2.0e4).is_err());
    }

    fn ladders(n: usize) -> Vec<UnfoldedSpectrum> {
        (0..n)
            .map(|k| {
                let shift = k as f64 / n as f64;
                let levels: Vec<f64> = (0..4000).map(|i| i as f64 + shift).collect();
                UnfoldedSpectrum::from_levels(levels, (0.0, 4000.0)).unwrap()
            })
            .collect()
    }

    #[test]
    fn rigid_ladder_saturates_at_one_twelfth() {
        let members = ladders(10);
        let centers = [1500.0, 2500.0];
        let bands = [(100.0, 200.0), (100.0, 200.0)];
        let curve = rigidity_scan(&members, &centers, &bands, 64, 2).unwrap();
        for &v in curve.mean() {
            assert!((v - 1.0 / 12.0).abs() < 0.05 / 12.0, "{v}");
        }
    }

    #[test]
    fn ladder_counts_are_rigid() {
        let members = ladders(10);
        let curve = sigma_scan(&members, 2000.0, &[3.0, 10.0, 50.0], 3).unwrap();
        for &v in curve.mean() {
            assert!(v <= 0.25 + 1e-12);
        }
    }

    #[test]
    fn scans_reject_windows_and_grids() {
        let members = ladders(3);
        assert!(sigma_scan(&members, 3990.0, &[50.0], 1).is_err());
        assert!(sigma_scan(&members, 2000.0, &[], 1).is_err());
        assert!(sigma_scan(&members, 2000.0, &[2.0, 1.0], 1).is_err());
        assert!(map_members(&members, 0, |_, _| Ok(())).is_err());
    }

    #[test]
    fn absolute_band_below_two_periods_rejected() {
        let band = EnergyBand::Absolute {
            lo: 100.0,
            hi: 200.0,
        };
        assert!(saturation_bands(&[5.0e5], &band, 3.0e6).is_err());
        let ok = EnergyBand::Absolute {
            lo: 4000.0,
            hi: 5000.0,
        };
        assert!(saturation_bands(&[5.0e5], &ok, 3.0e6).is_ok());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cfg = EnsembleConfig {
            member_count: 12,
            ..EnsembleConfig::new(2.0e5)
        };
        let widths = linspace(1.0, 60.0, 25);
        let one = ensemble_sigma_scan(
            &cfg,
            2.0e4,
            &widths,
            &ScanOptions {
                window_fraction: 0.5,
                workers: 1,
            },
        )
        .unwrap();
        let four = ensemble_sigma_scan(
            &cfg,
            2.0e4,
            &widths,
            &ScanOptions {
                window_fraction: 0.5,
                workers: 4,
            },
        )
        .unwrap();
        assert_eq!(one, four);
    }
}
