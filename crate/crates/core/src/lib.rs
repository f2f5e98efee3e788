//! Semiclassical spectrum of the modified Kepler problem
//! `V(r) = -alpha / r + beta / r^2`, its long-range level statistics over a
//! beta-ensemble, and the periodic-orbit predictions for them.

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod csv;
pub mod ensemble;
pub mod error;
pub mod spectrum;
pub mod stats;
pub mod theory;

pub use ensemble::{
    ensemble_delta3_scan, ensemble_rigidity_scan, ensemble_sigma_scan, make_ensemble, BetaEnsemble,
    EnergyBand, EnsembleConfig, EnsembleLayout, MemberSource, ScanOptions,
};
pub use error::{Error, Result};
pub use spectrum::{
    generate_exact_spectrum, generate_model_spectrum, staircase, unfold, ExactSpectrum,
    ExactSpectrumParams, Level, Spectrum, SpectrumParams, UnfoldedSpectrum,
};
pub use stats::{
    count_levels, delta3, delta3_from_sigma, nn_spacing_histogram, number_variance, IntervalSpec,
    SpacingHistogram, StatCurve,
};
pub use theory::{
    delta3_saturation, enumerate_orbits, jump_energies, k_inf, sigma_inf, theory_point, OrbitClass,
    SumOptions, TheoryPoint,
};
