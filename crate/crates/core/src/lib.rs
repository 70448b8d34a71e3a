//! Unruh–DeWitt detector response, Gaussian detector-correlator dynamics and
//! continuous-variable teleportation between an inertial and an accelerated
//! party.
//!
//! Units are ħ = c = 1 unless a state carries an explicit ħ; the metric
//! signature is (−, +, …, +).

// `!(x > 0.0)` is the NaN-rejecting form; quadrature node tables keep their
// published digits; vector integrands index parallel fixed-size arrays.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision, clippy::needless_range_loop)]

pub mod detector_dynamics;
pub mod error;
pub mod field_kernel;
pub mod gaussian_state;
pub mod quadrature;
pub mod response;
pub mod switching;
pub mod teleport;
pub mod worldline;

pub use error::{Error, Result};
pub use switching::SwitchingFunction;
pub use worldline::{interval_sq, SpacetimePoint, Worldline, WorldlineKind};
pub use field_kernel::{w0_cross, CustomKernel, Kernel, WightmanKernel};
pub use response::{divergence_probe, response_function, transition_rate, transition_rate_limit, RateResult};
pub use gaussian_state::{excited_population, ConditionalMap, GaussianMeasurement, GaussianState, OscillatorScale, OutcomeDistribution};
pub use detector_dynamics::{
    correlators_at, effective_temperature, evolve_correlators, perturbative_rho11, rho11_history, CorrelatorSample, CorrelatorSeries,
    DetectorParams, DetectorTrack,
};
pub use teleport::{
    averaged_fidelity, extract_markers, lightcone_conditioned, monte_carlo_fidelity, run_physical, run_pseudo, slice_state, FidelityPoint, FidelitySeries,
    Foliation, Markers, Mode, TeleportScenario,
};
