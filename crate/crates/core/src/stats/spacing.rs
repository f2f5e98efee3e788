use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spectrum::UnfoldedSpectrum;

/// Minimum number of levels for a spacing histogram.
pub const MIN_LEVELS_FOR_SPACINGS: usize = 1000;

/// Normalised histogram of nearest-neighbour spacings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacingHistogram {
    pub bin_edges: Vec<f64>,
    pub density: Vec<f64>,
    pub sample_count: u64,
}

impl SpacingHistogram {
    pub fn bins(&self) -> usize {
        self.density.len()
    }

    pub fn integral(&self) -> f64 {
        self.density
            .iter()
            .zip(self.bin_edges.windows(2))
            .map(|(d, e)| d * (e[1] - e[0]))
            .sum()
    }

    /// Mean of `exp(-s)` over each bin, for overlaying the Poisson law.
    pub fn exponential_reference(&self) -> Vec<f64> {
        self.bin_edges
            .windows(2)
            .map(|e| ((-e[0]).exp() - (-e[1]).exp()) / (e[1] - e[0]))
            .collect()
    }
}

/// Consecutive spacings of the levels lying in `[lo, hi]`.
pub fn nn_spacings(u: &UnfoldedSpectrum, lo: f64, hi: f64) -> Vec<f64> {
    let levels = u.levels();
    let start = levels.partition_point(|&v| v < lo);
    let end = levels.partition_point(|&v| v <= hi);
    levels[start..end].windows(2).map(|w| w[1] - w[0]).collect()
}

/// Histogram of all consecutive spacings on `[0, max spacing]`.
pub fn nn_spacing_histogram(u: &UnfoldedSpectrum, bins: usize) -> Result<SpacingHistogram> {
    if bins == 0 {
        return Err(invalid("bins must be positive"));
    }
    if u.len() < MIN_LEVELS_FOR_SPACINGS {
        return Err(Error::TooFewSamples {
            needed: MIN_LEVELS_FOR_SPACINGS,
            got: u.len(),
        });
    }
    let spacings: Vec<f64> = u.levels().windows(2).map(|w| w[1] - w[0]).collect();
    let max = spacings.iter().copied().fold(0.0, f64::max);
    let upper = if max > 0.0 { max } else { 1.0 };
    let width = upper / bins as f64;
    let mut counts = vec![0u64; bins];
    for s in &spacings {
        let idx = ((s / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let edges = (0..=bins).map(|i| i as f64 * width).collect();
    Ok(to_histogram(edges, &counts, spacings.len() as u64))
}

fn to_histogram(bin_edges: Vec<f64>, counts: &[u64], total: u64) -> SpacingHistogram {
    let density = counts
        .iter()
        .zip(bin_edges.windows(2))
        .map(|(&c, e)| {
            if total == 0 {
                0.0
            } else {
                c as f64 / (total as f64 * (e[1] - e[0]))
            }
        })
        .collect();
    SpacingHistogram {
        bin_edges,
        density,
        sample_count: total,
    }
}

/// Kolmogorov-Smirnov distance between the empirical distribution of
/// `spacings` and the unit exponential law. Sorts the slice in place.
pub fn exponential_ks_distance(spacings: &mut [f64]) -> f64 {
    spacings.sort_unstable_by(f64::total_cmp);
    let n = spacings.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &s) in spacings.iter().enumerate() {
        let cdf = 1.0 - (-s.max(0.0)).exp();
        d = d.max((i + 1) as f64 / n - cdf).max(cdf - i as f64 / n);
    }
    d
}

/// Fine-binned spacing counts that can be merged across ensemble members.
///
/// The KS distance is evaluated at bin edges; the true supremum exceeds it
/// by at most one bin width (the exponential density is bounded by one).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacingAccumulator {
    resolution: f64,
    counts: Vec<u64>,
    total: u64,
}

impl SpacingAccumulator {
    pub fn new(resolution: f64) -> Result<Self> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(invalid(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        Ok(Self {
            resolution,
            counts: Vec::new(),
            total: 0,
        })
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn push(&mut self, spacing: f64) {
        let idx = (spacing.max(0.0) / self.resolution) as usize;
        if idx >= self.counts.len() {
            self.counts.resize(idx + 1, 0);
        }
        self.counts[idx] += 1;
        self.total += 1;
    }

    pub fn extend(&mut self, spacings: impl IntoIterator<Item = f64>) {
        for s in spacings {
            self.push(s);
        }
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if other.resolution != self.resolution {
            return Err(invalid("cannot merge accumulators of different resolution"));
        }
        if other.counts.len() > self.counts.len() {
            self.counts.resize(other.counts.len(), 0);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
        Ok(())
    }

    /// KS distance to `exp(-s)` evaluated on the bin edges.
    pub fn ks_distance_at_edges(&self) -> f64 {
        if self.total == 0 {
            return 1.0;
        }
        let n = self.total as f64;
        let mut below = 0u64;
        let mut d: f64 = 0.0;
        for (i, &c) in self.counts.iter().enumerate() {
            below += c;
            let edge = (i + 1) as f64 * self.resolution;
            d = d.max((below as f64 / n - (1.0 - (-edge).exp())).abs());
        }
        d
    }

    /// Upper bound on the exact KS distance.
    pub fn ks_distance_bound(&self) -> f64 {
        self.ks_distance_at_edges() + self.resolution
    }

    /// Rebins onto `bins` equal bins spanning every recorded spacing.
    pub fn histogram(&self, bins: usize) -> Result<SpacingHistogram> {
        if bins == 0 {
            return Err(invalid("bins must be positive"));
        }
        let fine = self.counts.len().max(1);
        let per_bin = fine.div_ceil(bins);
        let mut counts = vec![0u64; bins];
        for (i, &c) in self.counts.iter().enumerate() {
            counts[i / per_bin] += c;
        }
        let width = per_bin as f64 * self.resolution;
        let edges = (0..=bins).map(|i| i as f64 * width).collect();
        Ok(to_histogram(edges, &counts, self.total))
    }
}
