//! Model spectrum `2 p sqrt(2 beta) + l^2`, its analytic unfolding, and the
//! closed-form bound-state spectrum of `V(r) = -alpha/r + beta/r^2` used to
//! validate it.
//!
//! Energies here come in two flavours:
//!
//! * raw model energies `x = 2 p sqrt(2 beta) + l^2` (with `beta` the
//!   dimensionless `m beta_raw / hbar^2`), valid for `x << 2 beta`;
//! * unfolded energies `u = x^{3/2} / (3 sqrt(2 beta))`, for which the mean
//!   cumulative level count is `u` itself and the mean spacing is one.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default upper bound on `eps_max / (2 beta)`.
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.25;

/// Minimum `m beta_raw / hbar^2` accepted for the closed-form spectrum.
pub const EXACT_MIN_REDUCED_BETA: f64 = 1.0e4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumParams {
    pub beta: f64,
    /// Upper window edge in raw model-energy units.
    pub eps_max: f64,
    /// Enforced bound `eps_max <= window_fraction * 2 beta`.
    pub window_fraction: f64,
}

impl SpectrumParams {
    pub fn new(beta: f64, eps_max: f64) -> Result<Self> {
        Self::with_window_fraction(beta, eps_max, DEFAULT_WINDOW_FRACTION)
    }

    pub fn with_window_fraction(beta: f64, eps_max: f64, window_fraction: f64) -> Result<Self> {
        let params = Self {
            beta,
            eps_max,
            window_fraction,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(invalid(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.eps_max.is_finite() && self.eps_max > 0.0) {
            return Err(invalid(format!(
                "eps_max must be positive, got {}",
                self.eps_max
            )));
        }
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            return Err(invalid(format!(
                "window_fraction must lie in (0, 1], got {}",
                self.window_fraction
            )));
        }
        let limit = self.window_fraction * 2.0 * self.beta;
        if self.eps_max > limit {
            return Err(Error::WindowViolated {
                eps_max: self.eps_max,
                window_fraction: self.window_fraction,
                limit,
            });
        }
        Ok(())
    }

    pub fn sqrt_two_beta(&self) -> f64 {
        (2.0 * self.beta).sqrt()
    }

    /// Unfolded coordinate of the window edge.
    pub fn unfolded_upper(&self) -> f64 {
        unfolded_energy(self.eps_max, self.sqrt_two_beta())
    }
}

/// One level with its radial (`p`) and angular (`l`) quantum numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub value: f64,
    pub p: u32,
    pub l: u32,
}

/// Model spectrum, sorted ascending by value, ties ordered by `(p, l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    params: SpectrumParams,
    levels: Vec<Level>,
}

impl Spectrum {
    pub fn params(&self) -> &SpectrumParams {
        &self.params
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.levels.iter().map(|l| l.value)
    }
}

/// Levels mapped to unit mean density.
///
/// `window` is the energy range over which the level list is complete; all
/// statistics refuse intervals that leave it.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldedSpectrum {
    beta: Option<f64>,
    window: (f64, f64),
    levels: Vec<f64>,
}

impl UnfoldedSpectrum {
    /// Wraps an externally produced level list, e.g. a synthetic ladder.
    pub fn from_levels(levels: Vec<f64>, window: (f64, f64)) -> Result<Self> {
        if !(window.0.is_finite() && window.1.is_finite() && window.0 < window.1) {
            return Err(invalid(format!("bad window {window:?}")));
        }
        if levels.iter().any(|v| !v.is_finite()) {
            return Err(invalid("levels must be finite"));
        }
        if levels.windows(2).any(|w| w[0] > w[1]) {
            return Err(invalid("levels must be sorted ascending"));
        }
        if let (Some(first), Some(last)) = (levels.first(), levels.last()) {
            if *first < window.0 || *last > window.1 {
                return Err(invalid("levels must lie inside the window"));
            }
        }
        Ok(Self {
            beta: None,
            window,
            levels,
        })
    }

    /// `beta` of the model spectrum this came from, if any.
    pub fn beta(&self) -> Option<f64> {
        self.beta
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// `(last - first) / (N - 1)`, `None` for fewer than two levels.
    pub fn mean_spacing(&self) -> Option<f64> {
        match self.levels.as_slice() {
            [first, .., last] => Some((last - first) / (self.levels.len() - 1) as f64),
            _ => None,
        }
    }

    /// Spectral staircase: number of levels `<= x`.
    pub fn staircase(&self, x: f64) -> usize {
        staircase(self, x)
    }
}

/// `x^{3/2} / (3 sqrt(2 beta))`.
#[inline]
pub fn unfolded_energy(raw: f64, sqrt_two_beta: f64) -> f64 {
    raw * raw.sqrt() / (3.0 * sqrt_two_beta)
}

/// Inverse of [`unfolded_energy`].
#[inline]
pub fn raw_energy(unfolded: f64, sqrt_two_beta: f64) -> f64 {
    let c = (3.0 * sqrt_two_beta * unfolded).cbrt();
    c * c
}

/// Enumerates every `(p, l) != (0, 0)` with `0 < 2 p sqrt(2 beta) + l^2 <= eps_max`.
pub fn generate_model_spectrum(params: &SpectrumParams) -> Result<Spectrum> {
    params.validate()?;
    let s = params.sqrt_two_beta();
    let eps_max = params.eps_max;
    let value = |p: u64, l: u64| (2 * p) as f64 * s + (l * l) as f64;

    let mut p_max = (eps_max / (2.0 * s)).floor() as u64;
    while value(p_max + 1, 0) <= eps_max {
        p_max += 1;
    }
    while p_max > 0 && value(p_max, 0) > eps_max {
        p_max -= 1;
    }

    let mut levels = Vec::with_capacity(estimated_count(eps_max, s));
    for p in 0..=p_max {
        let base = value(p, 0);
        if base > eps_max {
            break;
        }
        let mut l_max = (eps_max - base).max(0.0).sqrt().floor() as u64;
        while value(p, l_max + 1) <= eps_max {
            l_max += 1;
        }
        while l_max > 0 && value(p, l_max) > eps_max {
            l_max -= 1;
        }
        let l_min = u64::from(p == 0);
        for l in l_min..=l_max {
            levels.push(Level {
                value: value(p, l),
                p: to_u32(p)?,
                l: to_u32(l)?,
            });
        }
    }
    levels.sort_unstable_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then(a.p.cmp(&b.p))
            .then(a.l.cmp(&b.l))
    });
    Ok(Spectrum {
        params: *params,
        levels,
    })
}

fn estimated_count(eps_max: f64, s: f64) -> usize {
    let n = unfolded_energy(eps_max, s) + eps_max.sqrt() + eps_max / (2.0 * s) + 16.0;
    n.min(1.0e9) as usize
}

fn to_u32(n: u64) -> Result<u32> {
    u32::try_from(n).map_err(|_| invalid(format!("quantum number {n} overflows u32")))
}

/// Maps each level through the analytic mean staircase.
pub fn unfold(spectrum: &Spectrum) -> UnfoldedSpectrum {
    let s = spectrum.params.sqrt_two_beta();
    UnfoldedSpectrum {
        beta: Some(spectrum.params.beta),
        window: (0.0, spectrum.params.unfolded_upper()),
        levels: spectrum
            .levels
            .iter()
            .map(|l| unfolded_energy(l.value, s))
            .collect(),
    }
}

/// Number of levels `<= x` (a level sitting exactly at `x` is counted).
pub fn staircase(u: &UnfoldedSpectrum, x: f64) -> usize {
    u.levels.partition_point(|&v| v <= x)
}

/// Which closed form of the bound-state energies to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExactForm {
    /// Bohr-Sommerfeld actions `hbar (p + 1/2)`, `hbar (l + 1/2)`.
    HalfInteger,
    /// Large quantum number limit, offsets dropped.
    LargeQuantumNumber,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactSpectrumParams {
    pub alpha: f64,
    pub beta_raw: f64,
    pub m: f64,
    pub hbar: f64,
    pub p_max: u32,
    pub l_max: u32,
}

impl ExactSpectrumParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta_raw", self.beta_raw),
            ("m", self.m),
            ("hbar", self.hbar),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.p_max == 0 || self.l_max == 0 {
            return Err(invalid("p_max and l_max must be positive"));
        }
        if self.reduced_beta() < EXACT_MIN_REDUCED_BETA {
            return Err(invalid(format!(
                "m beta / hbar^2 = {} is below {EXACT_MIN_REDUCED_BETA}; the large-beta expansion does not apply",
                self.reduced_beta()
            )));
        }
        Ok(())
    }

    /// Dimensionless `m beta_raw / hbar^2`, the `beta` of the model spectrum.
    pub fn reduced_beta(&self) -> f64 {
        self.m * self.beta_raw / (self.hbar * self.hbar)
    }

    /// Depth of the potential well, `alpha^2 / (4 beta_raw)`.
    pub fn well_depth(&self) -> f64 {
        self.alpha * self.alpha / (4.0 * self.beta_raw)
    }

    pub fn level(&self, p: u32, l: u32, form: ExactForm) -> f64 {
        let (p, l) = (f64::from(p), f64::from(l));
        let two_b = 2.0 * self.reduced_beta();
        let scale = self.m * self.alpha * self.alpha / (self.hbar * self.hbar);
        match form {
            ExactForm::HalfInteger => {
                let d = 2.0 * p + 1.0 + ((2.0 * l + 1.0).powi(2) + two_b).sqrt();
                -2.0 * scale / (d * d)
            }
            ExactForm::LargeQuantumNumber => {
                let d = p + (l * l + two_b).sqrt();
                -scale / (2.0 * d * d)
            }
        }
    }

    /// Affine map of a bound-state energy onto the model energy axis,
    /// `2 beta (eps + depth) / depth`.
    pub fn to_model_energy(&self, energy: f64) -> f64 {
        let depth = self.well_depth();
        2.0 * self.reduced_beta() * (energy + depth) / depth
    }
}

/// Closed-form bound-state spectrum (negative energies).
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSpectrum {
    params: ExactSpectrumParams,
    levels: Vec<Level>,
}

impl ExactSpectrum {
    pub fn params(&self) -> &ExactSpectrumParams {
        &self.params
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

/// All `p <= p_max`, `l <= l_max` from the large-quantum-number closed form.
pub fn generate_exact_spectrum(params: &ExactSpectrumParams) -> Result<ExactSpectrum> {
    params.validate()?;
    let mut levels = Vec::with_capacity((params.p_max as usize + 1) * (params.l_max as usize + 1));
    for p in 0..=params.p_max {
        for l in 0..=params.l_max {
            levels.push(Level {
                value: params.level(p, l, ExactForm::LargeQuantumNumber),
                p,
                l,
            });
        }
    }
    levels.sort_unstable_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then(a.p.cmp(&b.p))
            .then(a.l.cmp(&b.l))
    });
    Ok(ExactSpectrum {
        params: *params,
        levels,
    })
}
