use alloc::vec::Vec;

use super::budget::rate_budget_for;
use super::histogram::{car, coincidence_histogram, CarMeasurement, CoincidenceHistogram};
use super::stream::{simulate_streams, PairSource, TimeTagStream};
use crate::error::{invalid, Result};
use crate::source::SourceConfig;

/// One simulated CAR acquisition through the DWDM pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CarRun {
    pub histogram: CoincidenceHistogram,
    pub measurement: CarMeasurement,
    /// Detected singles per second on each channel.
    pub singles_rate: [f64; 2],
    /// s
    pub duration: f64,
}

impl CarRun {
    /// Peak-window coincidences per second.
    pub fn coincidence_rate(&self) -> f64 {
        self.measurement.peak_counts as f64 / self.duration
    }
}

/// Detector streams behind the DWDM pair at `power_mw` with the fiber
/// temperature shifted by `temperature_offset` °C.
pub fn simulate_car_streams(
    config: &SourceConfig,
    power_mw: f64,
    temperature_offset: f64,
    duration: f64,
    seed: u64,
) -> Result<[TimeTagStream; 2]> {
    let mut shifted = config.clone();
    shifted.ppsf.temperature += temperature_offset;
    let filters = shifted.filters.dwdm_pair.as_array();
    let budget = rate_budget_for(&shifted, filters, power_mw)?;
    let (pair_rate, unpaired_rate) = budget.arm_inputs();
    let source = PairSource {
        pair_rate,
        arm_loss_db: [filters[0].insertion_loss_db, filters[1].insertion_loss_db],
        unpaired_rate,
    };
    simulate_streams(&source, &shifted.detectors.as_array(), duration, seed)
}

/// [`simulate_car_streams`] followed by the histogram and CAR.
pub fn simulate_car_run(
    config: &SourceConfig,
    power_mw: f64,
    temperature_offset: f64,
    duration: f64,
    seed: u64,
) -> Result<CarRun> {
    let [a, b] = simulate_car_streams(config, power_mw, temperature_offset, duration, seed)?;
    let counting = &config.counting;
    let histogram = coincidence_histogram(&a, &b, counting.bin_width, counting.max_delay)?;
    let measurement = car(&histogram, &counting.windows)?;
    Ok(CarRun {
        histogram,
        measurement,
        singles_rate: [a.len() as f64 / duration, b.len() as f64 / duration],
        duration,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    /// mW
    pub power: f64,
    pub car: f64,
    pub car_stderr: f64,
    /// Peak-window coincidences per second.
    pub coincidence_rate: f64,
}

/// CAR and coincidence rate at each pump power, one simulated run of
/// `config.sweep.duration` seconds per point with seed `config.seed + index`.
pub fn car_vs_power_sweep(config: &SourceConfig, powers: &[f64]) -> Result<Vec<SweepPoint>> {
    if powers.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
        return Err(invalid("sweep powers > 0"));
    }
    powers
        .iter()
        .enumerate()
        .map(|(i, &power)| {
            let run = simulate_car_run(config, power, 0.0, config.sweep.duration, config.seed.wrapping_add(i as u64))?;
            Ok(SweepPoint {
                power,
                car: run.measurement.ratio,
                car_stderr: run.measurement.stderr(),
                coincidence_rate: run.coincidence_rate(),
            })
        })
        .collect()
}
