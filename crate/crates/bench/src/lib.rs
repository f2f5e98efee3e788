//! Shared fixtures for the kernel benchmarks.

use keplerstat_core::spectrum::raw_energy;
use keplerstat_core::{generate_model_spectrum, unfold, SpectrumParams, UnfoldedSpectrum};

pub const BETA: f64 = 3.0e6;
pub const CENTER: f64 = 5.0e5;

/// Model parameters whose unfolded window ends at `upper`.
pub fn params_to(upper: f64) -> SpectrumParams {
    let s = (2.0 * BETA).sqrt();
    SpectrumParams::with_window_fraction(BETA, raw_energy(upper, s) * (1.0 + 1e-12), 0.5)
        .expect("fixture window is valid")
}

pub fn unfolded_to(upper: f64) -> UnfoldedSpectrum {
    unfold(&generate_model_spectrum(&params_to(upper)).expect("fixture spectrum"))
}
