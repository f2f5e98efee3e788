//! Fluctuation measures on unfolded spectra.

mod spacing;
mod step;

pub use spacing::{
    exponential_ks_distance, nn_spacing_histogram, nn_spacings, SpacingAccumulator,
    SpacingHistogram,
};
pub use step::{fit_step, StepFit};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spectrum::{staircase, UnfoldedSpectrum};

/// Largest admissible `width / center`.
pub const MAX_RELATIVE_WIDTH: f64 = 0.2;

/// Interval `[center - width/2, center + width/2]` in unfolded energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalSpec {
    center: f64,
    width: f64,
}

impl IntervalSpec {
    pub fn new(center: f64, width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(invalid(format!(
                "interval width must be positive, got {width}"
            )));
        }
        if !(center.is_finite() && width <= MAX_RELATIVE_WIDTH * center) {
            return Err(invalid(format!(
                "interval width {width} must not exceed {MAX_RELATIVE_WIDTH} * center ({center})"
            )));
        }
        Ok(Self { center, width })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn lo(&self) -> f64 {
        self.center - 0.5 * self.width
    }

    pub fn hi(&self) -> f64 {
        self.center + 0.5 * self.width
    }

    fn check_inside(&self, u: &UnfoldedSpectrum) -> Result<()> {
        let (window_lo, window_hi) = u.window();
        if self.lo() < window_lo || self.hi() > window_hi {
            return Err(Error::IntervalOutsideWindow {
                lo: self.lo(),
                hi: self.hi(),
                window_lo,
                window_hi,
            });
        }
        Ok(())
    }
}

/// Sampled curve with optional per-point standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatCurve {
    abscissa: Vec<f64>,
    mean: Vec<f64>,
    spread: Option<Vec<f64>>,
}

impl StatCurve {
    pub fn new(abscissa: Vec<f64>, mean: Vec<f64>, spread: Option<Vec<f64>>) -> Result<Self> {
        if abscissa.len() != mean.len() || spread.as_ref().is_some_and(|s| s.len() != mean.len()) {
            return Err(invalid("curve columns must have equal lengths"));
        }
        if abscissa.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("curve abscissa must be strictly increasing"));
        }
        Ok(Self {
            abscissa,
            mean,
            spread,
        })
    }

    pub fn abscissa(&self) -> &[f64] {
        &self.abscissa
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn spread(&self) -> Option<&[f64]> {
        self.spread.as_deref()
    }

    pub fn len(&self) -> usize {
        self.abscissa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissa.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.abscissa.iter().copied().zip(self.mean.iter().copied())
    }
}

/// Integrals of the local staircase over an interval of width `E`, with the
/// levels at offsets `t_k in (0, E]` from its left edge:
///
/// * `int N      = sum (E - t_k)`
/// * `int N^2    = sum (2k - 1)(E - t_k)`
/// * `int (t - E/2) N = 1/2 sum t_k (E - t_k)`
///
/// The staircase starts from zero at the left edge; the offset drops out of
/// the rigidity.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct StaircaseMoments {
    n: f64,
    n_sq: f64,
    centered_first: f64,
}

fn staircase_moments(levels: &[f64], lo: f64, width: f64) -> StaircaseMoments {
    let mut m = StaircaseMoments::default();
    for (k, &v) in levels.iter().enumerate() {
        let t = v - lo;
        let rest = width - t;
        m.n += rest;
        m.n_sq += (2 * k + 1) as f64 * rest;
        m.centered_first += t * rest;
    }
    m.centered_first *= 0.5;
    m
}

/// Levels in `(lo, hi]`.
fn levels_in(u: &UnfoldedSpectrum, lo: f64, hi: f64) -> &[f64] {
    let levels = u.levels();
    let start = levels.partition_point(|&v| v <= lo);
    let end = levels.partition_point(|&v| v <= hi);
    &levels[start..end]
}

/// Single-realisation spectral rigidity: mean square deviation of the
/// staircase from its best straight-line fit over the interval.
///
/// Evaluated exactly from the level positions,
/// `(1/E) int N^2 - (1/E^2)(int N)^2 - (12/E^4)(int (x - c) N)^2`.
pub fn delta3(u: &UnfoldedSpectrum, iv: &IntervalSpec) -> Result<f64> {
    iv.check_inside(u)?;
    Ok(delta3_unchecked(u, iv.lo(), iv.width()))
}

pub(crate) fn delta3_unchecked(u: &UnfoldedSpectrum, lo: f64, width: f64) -> f64 {
    let inside = levels_in(u, lo, lo + width);
    if inside.is_empty() {
        return 0.0;
    }
    let m = staircase_moments(inside, lo, width);
    let e = width;
    let value = m.n_sq / e - (m.n / e).powi(2) - 12.0 * (m.centered_first / (e * e)).powi(2);
    value.max(0.0)
}

/// Levels in the interval, `N(c + E/2) - N(c - E/2)`.
pub fn count_levels(u: &UnfoldedSpectrum, iv: &IntervalSpec) -> usize {
    staircase(u, iv.hi()) - staircase(u, iv.lo())
}

/// Population (1/M) variance of ensemble level counts.
pub fn number_variance(counts: &[u64]) -> Result<f64> {
    if counts.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: counts.len(),
        });
    }
    let n = counts.len() as f64;
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / n;
    Ok(counts
        .iter()
        .map(|&c| (c as f64 - mean).powi(2))
        .sum::<f64>()
        / n)
}

/// Jackknife standard error of [`number_variance`].
pub fn number_variance_stderr(counts: &[u64]) -> Result<f64> {
    if counts.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: counts.len(),
        });
    }
    let m = counts.len() as f64;
    let s1: f64 = counts.iter().map(|&c| c as f64).sum();
    let s2: f64 = counts.iter().map(|&c| (c as f64).powi(2)).sum();
    let loo: Vec<f64> = counts
        .iter()
        .map(|&c| {
            let c = c as f64;
            let mean = (s1 - c) / (m - 1.0);
            ((s2 - c * c) / (m - 1.0) - mean * mean).max(0.0)
        })
        .collect();
    let avg = loo.iter().sum::<f64>() / m;
    let ss: f64 = loo.iter().map(|v| (v - avg).powi(2)).sum();
    Ok(((m - 1.0) / m * ss).sqrt())
}

// Three-point Gauss-Legendre on [-1, 1]; exact through degree five.
const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// Rigidity from a number-variance curve,
/// `(2/E^4) int_0^E (E^3 - 2 x E^2 + x^3) Sigma(x) dx`.
///
/// `Sigma` is taken piecewise linear between samples, with `Sigma(0) = 0`
/// supplied when the curve starts above zero, and each segment is integrated
/// exactly. The grid must reach `E` with steps no larger than `E / 200`.
pub fn delta3_from_sigma(sigma: &StatCurve, width: f64) -> Result<f64> {
    if !(width.is_finite() && width > 0.0) {
        return Err(invalid(format!("width must be positive, got {width}")));
    }
    let coverage = |reason: &str| Error::GridCoverage {
        width,
        reason: reason.to_owned(),
    };
    let mut xs = Vec::with_capacity(sigma.len() + 1);
    let mut ys = Vec::with_capacity(sigma.len() + 1);
    match sigma.abscissa().first() {
        None => return Err(coverage("empty curve")),
        Some(&x0) if x0 < 0.0 => return Err(coverage("negative abscissa")),
        Some(&x0) if x0 > 0.0 => {
            xs.push(0.0);
            ys.push(0.0);
        }
        _ => {}
    }
    xs.extend_from_slice(sigma.abscissa());
    ys.extend_from_slice(sigma.mean());

    let last = *xs.last().expect("nonempty");
    if last < width * (1.0 - 1e-12) {
        return Err(coverage("grid ends before the width"));
    }
    let max_step = width / 200.0;
    let weight = |x: f64| width.powi(3) - 2.0 * x * width * width + x.powi(3);

    let mut total = 0.0;
    for i in 0..xs.len() - 1 {
        let (a, b) = (xs[i], xs[i + 1]);
        if a >= width {
            break;
        }
        if b - a > max_step * (1.0 + 1e-9) {
            return Err(coverage("grid step exceeds width / 200"));
        }
        let (ya, yb) = (ys[i], ys[i + 1]);
        let hi = b.min(width);
        let half = 0.5 * (hi - a);
        let mid = 0.5 * (hi + a);
        for (node, w) in GAUSS3 {
            let x = mid + half * node;
            let y = ya + (yb - ya) * (x - a) / (b - a);
            total += w * half * weight(x) * y;
        }
    }
    Ok(2.0 * total / width.powi(4))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spectrum(levels: &[f64], window: (f64, f64)) -> UnfoldedSpectrum {
        UnfoldedSpectrum::from_levels(levels.to_vec(), window).unwrap()
    }

    #[test]
    fn empty_interval_has_zero_rigidity() {
        let u = spectrum(&[10.0, 200.0], (0.0, 300.0));
        let iv = IntervalSpec::new(100.0, 20.0).unwrap();
        assert_eq!(delta3(&u, &iv).unwrap(), 0.0);
    }

    #[test]
    fn centered_single_step() {
        let u = spectrum(&[100.0], (0.0, 300.0));
        for width in [0.5, 7.0, 20.0] {
            let iv = IntervalSpec::new(100.0, width).unwrap();
            assert_relative_eq!(delta3(&u, &iv).unwrap(), 1.0 / 16.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn interval_outside_window_rejected() {
        let u = spectrum(&[100.0], (0.0, 105.0));
        let iv = IntervalSpec::new(100.0, 20.0).unwrap();
        assert!(matches!(
            delta3(&u, &iv),
            Err(Error::IntervalOutsideWindow { .. })
        ));
    }

    #[test]
    fn interval_width_bound() {
        assert!(IntervalSpec::new(10.0, 2.0).is_ok());
        assert!(IntervalSpec::new(10.0, 2.5).is_err());
        assert!(IntervalSpec::new(10.0, 0.0).is_err());
    }

    #[test]
    fn counts() {
        let u = spectrum(&[1.0, 2.0, 3.0, 4.0], (0.0, 10.0));
        assert_eq!(count_levels(&u, &IntervalSpec::new(2.5, 0.1).unwrap()), 0);
        assert_eq!(count_levels(&u, &IntervalSpec::new(5.0, 1.0).unwrap()), 0);
        assert_eq!(count_levels(&u, &IntervalSpec::new(5.0, 0.2).unwrap()), 0);
        let all = spectrum(&[50.0, 51.0, 52.0], (0.0, 100.0));
        assert_eq!(
            count_levels(&all, &IntervalSpec::new(51.0, 10.0).unwrap()),
            3
        );
    }

    #[test]
    fn variance_definition() {
        assert_eq!(number_variance(&[5, 5, 5]).unwrap(), 0.0);
        assert_eq!(number_variance(&[0, 2]).unwrap(), 1.0);
        assert!(matches!(
            number_variance(&[1]),
            Err(Error::TooFewSamples { needed: 2, got: 1 })
        ));
        assert_eq!(number_variance_stderr(&[4, 4, 4, 4]).unwrap(), 0.0);
    }

    #[test]
    fn jackknife_matches_brute_force() {
        let counts = [3u64, 7, 1, 9, 4, 4, 12, 0];
        let m = counts.len();
        let loo: Vec<f64> = (0..m)
            .map(|i| {
                let rest: Vec<u64> = counts
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, &c)| c)
                    .collect();
                number_variance(&rest).unwrap()
            })
            .collect();
        let avg = loo.iter().sum::<f64>() / m as f64;
        let se = ((m as f64 - 1.0) / m as f64 * loo.iter().map(|v| (v - avg).powi(2)).sum::<f64>())
            .sqrt();
        assert_relative_eq!(
            number_variance_stderr(&counts).unwrap(),
            se,
            max_relative = 1e-12
        );
    }

    fn curve(f: impl Fn(f64) -> f64, width: f64, steps: usize) -> StatCurve {
        let xs: Vec<f64> = (1..=steps)
            .map(|i| width * i as f64 / steps as f64)
            .collect();
        let ys = xs.iter().map(|&x| f(x)).collect();
        StatCurve::new(xs, ys, None).unwrap()
    }

    #[test]
    fn rigidity_from_poisson_variance() {
        // int_0^E (E^3 - 2 x E^2 + x^3) x dx = E^5 / 30
        for width in [1.0, 37.5, 400.0] {
            let got = delta3_from_sigma(&curve(|x| x, width, 200), width).unwrap();
            assert_relative_eq!(got, width / 15.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn rigidity_from_constant_and_zero_variance() {
        let width = 10.0;
        // Constant curve sampled from x = 0 so the implicit Sigma(0) = 0 is not used.
        let xs: Vec<f64> = (0..=400).map(|i| width * i as f64 / 400.0).collect();
        let c = StatCurve::new(xs.clone(), vec![3.0; xs.len()], None).unwrap();
        assert_relative_eq!(
            delta3_from_sigma(&c, width).unwrap(),
            1.5,
            max_relative = 1e-12
        );
        let z = StatCurve::new(xs.clone(), vec![0.0; xs.len()], None).unwrap();
        assert_eq!(delta3_from_sigma(&z, width).unwrap(), 0.0);
    }

    #[test]
    fn rigidity_from_sigma_rejects_sparse_or_short_grids() {
        assert!(delta3_from_sigma(&curve(|x| x, 10.0, 100), 10.0).is_err());
        assert!(delta3_from_sigma(&curve(|x| x, 5.0, 400), 10.0).is_err());
        // A longer grid is fine: only [0, E] is used.
        let long = curve(|x| x, 20.0, 800);
        assert_relative_eq!(
            delta3_from_sigma(&long, 10.0).unwrap(),
            10.0 / 15.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn curve_validation() {
        assert!(StatCurve::new(vec![1.0, 1.0], vec![0.0, 0.0], None).is_err());
        assert!(StatCurve::new(vec![1.0, 2.0], vec![0.0], None).is_err());
        assert!(StatCurve::new(vec![1.0], vec![0.0], Some(vec![])).is_err());
    }
}
