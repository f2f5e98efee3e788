//! Periodic-orbit predictions for the scaled model spectrum.
//!
//! All energies are unfolded (mean spacing one). The sums over radial
//! winding numbers start at `M_r = 2`; the floor weight removes every term
//! below the shortest admissible orbit.

mod amplitude;

pub use amplitude::{amplitude_sq, amplitude_sq_general, ScaledHamiltonian};

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Below this `gamma_cir` the large-gamma approximations are unreliable.
pub const GAMMA_WARN_THRESHOLD: f64 = 1.2;
pub const DEFAULT_TOLERANCE: f64 = 1.0e-6;
pub const MAX_TOLERANCE: f64 = 1.0e-2;
pub const DEFAULT_M_CUT_MAX: u64 = 100_000_000;
/// Level-rigidity slope constant of the Gaussian orthogonal ensemble.
pub const NEARLY_RIGID_CONSTANT: f64 = 2.0 / (PI * PI);
/// Number of shortest radial windings kept in the oscillatory derivative.
pub const SHORT_ORBIT_TERMS: u64 = 3;

/// Radial frequency at unfolded energy `eps`.
pub fn radial_frequency(eps: f64, beta: f64) -> f64 {
    ((2.0 * beta).sqrt() * 3.0 * eps).cbrt()
}

/// Precession index of the circular orbit at unfolded energy `eps`.
pub fn circular_gamma(eps: f64, beta: f64) -> f64 {
    (2.0 * beta / (3.0 * eps)).cbrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryPoint {
    pub eps: f64,
    pub beta: f64,
    pub omega_r: f64,
    pub gamma_cir: f64,
    pub mr_min: u64,
}

pub fn theory_point(eps: f64, beta: f64) -> Result<TheoryPoint> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(invalid(format!("beta must be positive, got {beta}")));
    }
    let gamma_cir = circular_gamma(eps, beta);
    if gamma_cir < 1.0 - 1e-12 {
        return Err(invalid(format!(
            "gamma_cir = {gamma_cir} < 1 at eps = {eps}, beta = {beta}: no bound orbits"
        )));
    }
    if gamma_cir < GAMMA_WARN_THRESHOLD {
        log::warn!("gamma_cir = {gamma_cir:.4} at eps = {eps}: large-gamma approximation is poor");
    }
    Ok(TheoryPoint {
        eps,
        beta,
        omega_r: radial_frequency(eps, beta),
        gamma_cir,
        mr_min: gamma_cir.floor() as u64 + 1,
    })
}

impl TheoryPoint {
    pub fn sqrt_two_beta(&self) -> f64 {
        (2.0 * self.beta).sqrt()
    }

    /// Period of an orbit with `m_r` radial windings.
    pub fn period(&self, m_r: u64) -> f64 {
        2.0 * PI * m_r as f64 / self.omega_r
    }

    /// Inverse period of the shortest orbit.
    pub fn energy_scale(&self) -> f64 {
        self.omega_r / (2.0 * PI * self.mr_min as f64)
    }
}

/// Energies `2 beta / (3 k^3)` where `gamma_cir` crosses the integer `k`.
pub fn jump_energies(beta: f64, ks: std::ops::RangeInclusive<u64>) -> Result<Vec<(u64, f64)>> {
    if *ks.start() < 2 {
        return Err(invalid("jump index k must be at least 2"));
    }
    Ok(ks
        .map(|k| (k, 2.0 * beta / (3.0 * (k as f64).powi(3))))
        .collect())
}

/// Irreducible periodic orbit `{m_r, m_theta}` traversed `retracing` times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitClass {
    pub m_r: u64,
    pub m_theta: u64,
    pub period: f64,
    pub amplitude_sq: f64,
    pub retracing: u64,
}

impl OrbitClass {
    /// Total radial winding, `retracing * m_r`.
    pub fn winding(&self) -> u64 {
        self.m_r * self.retracing
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// All coprime orbits with `m_r / m_theta > gamma_cir` and their retracings
/// whose period does not exceed `period_max`, sorted by period.
pub fn enumerate_orbits(tp: &TheoryPoint, period_max: f64) -> Result<Vec<OrbitClass>> {
    let shortest = tp.period(tp.mr_min);
    if !(period_max >= shortest) {
        return Err(invalid(format!(
            "period_max {period_max} is below the shortest period {shortest}"
        )));
    }
    let w_max = (period_max * tp.omega_r / (2.0 * PI) * (1.0 + 1e-12)).floor() as u64;
    let mut out = Vec::new();
    for m_r in tp.mr_min..=w_max {
        for m_theta in 1..m_r {
            if m_r as f64 / m_theta as f64 <= tp.gamma_cir {
                break;
            }
            if gcd(m_r, m_theta) != 1 {
                continue;
            }
            for n in 1..=w_max / m_r {
                let period = tp.period(m_r * n);
                if period > period_max {
                    break;
                }
                out.push(OrbitClass {
                    m_r,
                    m_theta,
                    period,
                    amplitude_sq: 2.0 * PI / (3.0 * tp.eps * period),
                    retracing: n,
                });
            }
        }
    }
    out.sort_by_key(|o| (o.winding(), o.m_r, o.m_theta));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumOptions {
    /// Relative bound on the neglected tail.
    pub tolerance: f64,
    pub correction_enabled: bool,
    pub m_cut_max: u64,
}

impl Default for SumOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            correction_enabled: false,
            m_cut_max: DEFAULT_M_CUT_MAX,
        }
    }
}

impl SumOptions {
    pub fn with_correction(correction_enabled: bool) -> Self {
        Self {
            correction_enabled,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance <= MAX_TOLERANCE) {
            return Err(invalid(format!(
                "tolerance must lie in (0, {MAX_TOLERANCE}], got {}",
                self.tolerance
            )));
        }
        if self.m_cut_max < 2 {
            return Err(invalid("m_cut_max must be at least 2"));
        }
        Ok(())
    }
}

/// Number of admissible angular windings at radial winding `m_r`, with the
/// empirical plateau correction when `correction` is set.
pub fn floor_weight(m_r: u64, gamma_cir: f64, correction: bool) -> f64 {
    let f = (m_r as f64 / gamma_cir).floor();
    if correction && f >= 2.0 {
        // sum_{n=1}^{f-1} 2^{1-2n}
        f + 2.0 / 3.0 * (1.0 - 0.25f64.powf(f - 1.0))
    } else {
        f
    }
}

/// Where the orbit sums stop, with the certified tail bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub m_cut: u64,
    /// `sum_{M=2}^{m_cut} F(M) / M^3`.
    pub partial_sum: f64,
    /// Upper bound on `sum_{M > m_cut} F(M) / M^3`.
    pub tail_bound: f64,
}

fn tail_bound(m_cut: u64, gamma_cir: f64, correction: bool) -> f64 {
    let m = m_cut as f64;
    let bound = 1.0 / (gamma_cir * m);
    if correction {
        // The correction adds less than 2/3 per term.
        bound + 1.0 / (3.0 * m * m)
    } else {
        bound
    }
}

/// Smallest cut at which the tail bound falls below `tolerance * partial`.
pub fn truncation(tp: &TheoryPoint, opts: &SumOptions) -> Result<Truncation> {
    opts.validate()?;
    let mut partial = 0.0;
    let mut m = 2u64;
    loop {
        let w = floor_weight(m, tp.gamma_cir, opts.correction_enabled);
        let mf = m as f64;
        partial += w / (mf * mf * mf);
        let tail = tail_bound(m, tp.gamma_cir, opts.correction_enabled);
        if partial > 0.0 && tail < opts.tolerance * partial {
            return Ok(Truncation {
                m_cut: m,
                partial_sum: partial,
                tail_bound: tail,
            });
        }
        if m >= opts.m_cut_max {
            return Err(Error::NonConvergence {
                m_cut_max: opts.m_cut_max,
            });
        }
        m += 1;
    }
}

/// Oscillation-averaged saturation rigidity.
pub fn delta3_saturation(tp: &TheoryPoint, opts: &SumOptions) -> Result<f64> {
    let t = truncation(tp, opts)?;
    Ok(tp.sqrt_two_beta() / (PI * PI) * t.partial_sum)
}

/// Returns `(sin(pi x), cos(pi x))` with exact values at multiples of 1/2.
pub fn sin_cos_pi(x: f64) -> (f64, f64) {
    let r = x - 2.0 * (0.5 * x).round();
    let q = (2.0 * r).round();
    let y = r - 0.5 * q;
    let (s, c) = (PI * y).sin_cos();
    match q as i64 {
        0 => (s, c),
        1 => (c, -s),
        -1 => (-c, s),
        _ => (-s, -c),
    }
}

/// Steps between exact re-anchoring of the rotation recurrence.
const ANCHOR_EVERY: u64 = 256;

/// `sum_{M=2}^{m_cut} weights[M] * g(M)` where `g` is built from
/// `sin(pi x M)` and `cos(pi x M)`. The phases advance by rotation and are
/// recomputed exactly every [`ANCHOR_EVERY`] terms.
fn harmonic_sum(weights: &[f64], x: f64, g: impl Fn(f64, f64) -> f64) -> f64 {
    let x = x - x.round();
    let (sd, cd) = sin_cos_pi(x);
    let mut sum = 0.0;
    let (mut s, mut c) = (0.0, 1.0);
    for (m, &w) in weights.iter().enumerate().skip(2) {
        let m = m as u64;
        if m == 2 || m % ANCHOR_EVERY == 0 {
            (s, c) = sin_cos_pi(x * m as f64);
        } else {
            (s, c) = (s * cd + c * sd, c * cd - s * sd);
        }
        if w != 0.0 {
            sum += w * g(s, c);
        }
    }
    sum
}

fn cubic_weights(tp: &TheoryPoint, m_cut: u64, correction: bool) -> Vec<f64> {
    (0..=m_cut)
        .map(|m| {
            if m < 2 {
                0.0
            } else {
                let mf = m as f64;
                floor_weight(m, tp.gamma_cir, correction) / (mf * mf * mf)
            }
        })
        .collect()
}

/// Saturation number variance at interval width `width`.
pub fn sigma_inf(tp: &TheoryPoint, width: f64, opts: &SumOptions) -> Result<f64> {
    Ok(sigma_inf_curve(tp, &[width], opts)?[0])
}

/// [`sigma_inf`] on a grid of widths, sharing one truncation.
pub fn sigma_inf_curve(tp: &TheoryPoint, widths: &[f64], opts: &SumOptions) -> Result<Vec<f64>> {
    if widths.iter().any(|e| !e.is_finite()) {
        return Err(invalid("widths must be finite"));
    }
    let t = truncation(tp, opts)?;
    let weights = cubic_weights(tp, t.m_cut, opts.correction_enabled);
    let prefactor = 4.0 * tp.sqrt_two_beta() / (PI * PI);
    Ok(widths
        .par_iter()
        .map(|&e| prefactor * harmonic_sum(&weights, e / tp.omega_r, |s, _| s * s))
        .collect())
}

/// Fejer-regularised level correlation `K(omega)`.
///
/// The orbit sum has weights that do not decay in `M_r`, so it converges
/// only as a distribution (a comb of delta peaks at multiples of
/// `omega_r`). Terms up to `cutoff` are kept with weights
/// `1 - M / (cutoff + 1)`. The time-reversal factor 2 is not included.
pub fn k_inf(tp: &TheoryPoint, omega: f64, cutoff: u64) -> Result<f64> {
    if cutoff < 2 {
        return Err(invalid("cutoff must be at least 2"));
    }
    if !omega.is_finite() {
        return Err(invalid("omega must be finite"));
    }
    let norm = (cutoff + 1) as f64;
    let weights: Vec<f64> = (0..=cutoff)
        .map(|m| {
            if m < 2 {
                0.0
            } else {
                let fejer = 1.0 - m as f64 / norm;
                fejer * tp.omega_r / (3.0 * tp.eps * m as f64)
                    * floor_weight(m, tp.gamma_cir, false)
            }
        })
        .collect();
    Ok(harmonic_sum(&weights, 2.0 * omega / tp.omega_r, |_, c| c))
}

/// Smooth part of `K(omega)` from the continuum approximation (floor
/// replaced by its argument, time reversal included) once the delta comb is
/// removed: `-sin((2 M_min - 1) pi omega / omega_r) / (omega_r sin(pi omega / omega_r))`.
pub fn k_inf_smooth(tp: &TheoryPoint, omega: f64) -> f64 {
    let x = omega / tp.omega_r;
    let n = (2 * tp.mr_min - 1) as f64;
    let (s, _) = sin_cos_pi(x);
    if s.abs() < 1e-12 {
        // Dirichlet kernel limit at multiples of omega_r (n is odd).
        return -n / tp.omega_r;
    }
    -sin_cos_pi(n * x).0 / (tp.omega_r * s)
}

/// Sinc form of the smooth correlation, `-sin(omega / E) / (pi omega)` with
/// `E` the inverse shortest period.
pub fn k_inf_sinc(tp: &TheoryPoint, omega: f64) -> f64 {
    let scale = tp.energy_scale();
    if omega == 0.0 {
        return -1.0 / (PI * scale);
    }
    -(omega / scale).sin() / (PI * omega)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Uncorrelated,
    NearlyRigid,
    Rigid,
    Oscillatory,
}

/// Slope `d Sigma / dE` characteristic of each correlation regime.
///
/// The oscillatory value is the exact derivative of the saturation variance
/// restricted to the [`SHORT_ORBIT_TERMS`] shortest radial windings.
pub fn sigma_derivative_regime(regime: Regime, tp: &TheoryPoint, width: f64) -> f64 {
    match regime {
        Regime::Uncorrelated => 1.0,
        Regime::NearlyRigid => NEARLY_RIGID_CONSTANT / width,
        Regime::Rigid => 0.0,
        Regime::Oscillatory => {
            let prefactor = 4.0 * tp.sqrt_two_beta() / (PI * tp.omega_r);
            (tp.mr_min..tp.mr_min + SHORT_ORBIT_TERMS)
                .map(|m| {
                    let mf = m as f64;
                    let f = floor_weight(m, tp.gamma_cir, false);
                    f / (mf * mf) * sin_cos_pi(2.0 * width * mf / tp.omega_r).0
                })
                .sum::<f64>()
                * prefactor
        }
    }
}
