//! Time-tagged photon counting: detector model, coincidence histograms,
//! coincidence-to-accidental ratio and analytic rate budgets.

mod budget;
mod detector;
mod histogram;
mod stream;
mod sweep;

pub use budget::{rate_budget, rate_budget_for, spectral_fractions, LossStage, RateBudget, SpectralFractions};
pub use detector::DetectorParams;
pub use histogram::{car, coincidence_histogram, CarMeasurement, CarWindows, CoincidenceHistogram};
pub use stream::{detect, simulate_streams, PairSource, TimeTagStream};
pub use sweep::{car_vs_power_sweep, simulate_car_run, simulate_car_streams, CarRun, SweepPoint};
