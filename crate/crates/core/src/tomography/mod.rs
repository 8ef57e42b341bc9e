//! Two-qubit polarization tomography: waveplate analyzers, simulated
//! coincidence records, linear inversion and maximum-likelihood
//! reconstruction with Poisson bootstrap error bars.

mod analyzer;
mod bootstrap;
mod linear;
mod mle;
mod record;

pub use analyzer::{
    analyzed_state, measurement_operator, projector, standard_16_settings, waveplate, AnalyzerBasis,
    AnalyzerSetting, SettingPair,
};
pub use bootstrap::{bootstrap_errors, bootstrap_errors_with, BootstrapErrors};
pub use linear::{linear_inversion, LinearEstimate};
pub use mle::{
    log_likelihood_of_state, mle_reconstruct, mle_reconstruct_with, Estimate, MleOptions, TomographyResult,
};
pub use record::{expected_record, simulate_record, MeasurementRecord, TomographySource};
