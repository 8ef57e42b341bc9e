//! Dispersive-fiber single-photon spectrometer.
//!
//! Both photons of a pair travel through the same spool, then a beamsplitter
//! sends each photon to one of two detectors. The delay difference
//! `t_2 - t_1 = tau(l_2) - tau(conj(l_2))` of a coincidence fixes the
//! wavelength `l_2` of the photon seen by detector 2.

use alloc::vec::Vec;

use rand::Rng;

use crate::counting::{coincidence_histogram, detect, CoincidenceHistogram, DetectorParams};
use crate::error::{invalid, Error, Result};
use crate::rng::rng_from_seed;
use crate::spectral::{conjugate_wavelength, degeneracy_wavelength, JointSpectralAmplitude, PumpParams};
use crate::units::{nm_to_omega, omega_to_nm, seconds_to_ps, PICOSECOND};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DispersiveFiber {
    /// km
    pub length: f64,
    /// ps/(nm km) at the reference wavelength
    pub dispersion: f64,
    /// ps/(nm² km)
    pub dispersion_slope: f64,
    /// nm
    pub reference_wavelength: f64,
}

impl Default for DispersiveFiber {
    /// Standard single-mode fiber values; not measured on the actual spool.
    fn default() -> Self {
        Self {
            length: 20.0,
            dispersion: 17.0,
            dispersion_slope: 0.056,
            reference_wavelength: 1550.0,
        }
    }
}

impl DispersiveFiber {
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(invalid("fiber.length > 0"));
        }
        if !(self.dispersion.is_finite() && self.dispersion != 0.0) {
            return Err(invalid("fiber.dispersion finite and nonzero"));
        }
        if !self.dispersion_slope.is_finite() {
            return Err(invalid("fiber.dispersion_slope finite"));
        }
        if !(self.reference_wavelength > 0.0 && self.reference_wavelength.is_finite()) {
            return Err(invalid("fiber.reference_wavelength > 0"));
        }
        Ok(())
    }

    /// `d tau / d lambda` in ps/nm.
    fn delay_slope(&self, wavelength: f64) -> f64 {
        self.length * (self.dispersion + self.dispersion_slope * (wavelength - self.reference_wavelength))
    }
}

/// Group delay relative to the reference wavelength, s.
pub fn delay_of(wavelength: f64, fiber: &DispersiveFiber) -> f64 {
    let x = wavelength - fiber.reference_wavelength;
    fiber.length * (fiber.dispersion * x + 0.5 * fiber.dispersion_slope * x * x) * PICOSECOND
}

/// Delay of the photon at `wavelength` minus that of its energy partner, s.
pub fn delay_difference(wavelength: f64, fiber: &DispersiveFiber, pump: &PumpParams) -> Result<f64> {
    let partner = conjugate_wavelength(pump, wavelength)?;
    Ok(delay_of(wavelength, fiber) - delay_of(partner, fiber))
}

/// Acquisition settings for one spectrometer run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrometerAcquisition {
    /// Pairs per second entering the spool.
    pub pair_rate: f64,
    /// s
    pub duration: f64,
    /// Probability a photon leaves towards detector 1.
    pub beamsplitter_ratio: f64,
    /// s
    pub bin_width: f64,
    /// s
    pub max_delay: f64,
}

// Detector records start after this offset so that early photons with a
// negative relative delay are kept.
const START_OFFSET_PS: i64 = 1_000_000;

/// Cell boundaries in angular frequency around each axis sample.
fn cell_bounds(wavelengths: &[f64]) -> Vec<(f64, f64)> {
    let omega: Vec<f64> = wavelengths.iter().map(|&l| nm_to_omega(l)).collect();
    let n = omega.len();
    (0..n)
        .map(|k| {
            let upper = if k == 0 { omega[0] + (omega[0] - omega[1]) / 2.0 } else { (omega[k - 1] + omega[k]) / 2.0 };
            let lower = if k + 1 == n {
                omega[k] - (omega[k - 1] - omega[k]) / 2.0
            } else {
                (omega[k] + omega[k + 1]) / 2.0
            };
            (lower, upper)
        })
        .collect()
}

/// Draws one pair from the JSA: a grid cell with probability proportional to
/// `|f_-|² + |f_+|²`, then a uniform offset within the signal cell that the
/// idler mirrors, so energy is conserved within each cell.
struct PairSampler {
    cumulative: Vec<f64>,
    idler_cells: usize,
    signal_omega: Vec<f64>,
    idler_omega: Vec<f64>,
    signal_cells: Vec<(f64, f64)>,
}

impl PairSampler {
    fn new(jsa: &JointSpectralAmplitude) -> Result<Self> {
        let grid = jsa.grid();
        let mut total = 0.0;
        let cumulative: Vec<f64> = jsa
            .intensity()
            .into_iter()
            .map(|w| {
                total += w;
                total
            })
            .collect();
        if !(total > 0.0) {
            return Err(Error::Empty("joint spectral amplitude has zero norm".into()));
        }
        Ok(Self {
            cumulative,
            idler_cells: grid.idler_wavelengths().len(),
            signal_omega: grid.signal_wavelengths().iter().map(|&l| nm_to_omega(l)).collect(),
            idler_omega: grid.idler_wavelengths().iter().map(|&l| nm_to_omega(l)).collect(),
            signal_cells: cell_bounds(grid.signal_wavelengths()),
        })
    }

    /// (signal, idler) wavelengths in nm.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let total = *self.cumulative.last().expect("nonempty");
        let target = rng.random::<f64>() * total;
        let idx = self.cumulative.partition_point(|&c| c <= target).min(self.cumulative.len() - 1);
        let (j, k) = (idx / self.idler_cells, idx % self.idler_cells);
        let (lo, hi) = self.signal_cells[j];
        let ws = lo + rng.random::<f64>() * (hi - lo);
        let wi = self.idler_omega[k] - (ws - self.signal_omega[j]);
        (omega_to_nm(ws), omega_to_nm(wi))
    }
}

/// Simulates a spectrometer run and histograms `t_2 - t_1`.
///
/// Pairs arrive as a Poisson process. Each photon is routed independently,
/// so only pairs split across the two outputs produce true coincidences.
pub fn simulate_spectrometer_run(
    jsa: &JointSpectralAmplitude,
    fiber: &DispersiveFiber,
    detectors: &[DetectorParams; 2],
    acquisition: &SpectrometerAcquisition,
    seed: u64,
) -> Result<CoincidenceHistogram> {
    fiber.validate()?;
    let a = acquisition;
    if !(a.pair_rate >= 0.0 && a.pair_rate.is_finite()) {
        return Err(invalid("spectrometer pair_rate ≥ 0"));
    }
    if !(a.duration > 0.0 && a.duration.is_finite()) {
        return Err(invalid("spectrometer duration > 0"));
    }
    if !(0.0..=1.0).contains(&a.beamsplitter_ratio) {
        return Err(invalid("beamsplitter_ratio in [0, 1]"));
    }
    let sampler = PairSampler::new(jsa)?;
    let mut rng = rng_from_seed(seed);
    let duration_ps = seconds_to_ps(a.duration);
    let mean_gap_ps = 1.0 / (a.pair_rate * PICOSECOND);
    let mut arrivals: [Vec<i64>; 2] = [Vec::new(), Vec::new()];
    let mut t = 0.0f64;
    if a.pair_rate > 0.0 {
        loop {
            // exponential gap by inversion
            t += -mean_gap_ps * libm::log(1.0 - rng.random::<f64>());
            if t >= duration_ps as f64 {
                break;
            }
            let (ls, li) = sampler.sample(&mut rng);
            for lambda in [ls, li] {
                let port = if rng.random::<f64>() < a.beamsplitter_ratio { 0 } else { 1 };
                let arrival = t + delay_of(lambda, fiber) / PICOSECOND;
                arrivals[port].push(START_OFFSET_PS + libm::round(arrival) as i64);
            }
        }
    }
    let total_ps = duration_ps + 2 * START_OFFSET_PS;
    let total = total_ps as f64 * PICOSECOND;
    let [first, second] = arrivals;
    let s1 = detect(0, first, &detectors[0], total, &mut rng)?;
    let s2 = detect(1, second, &detectors[1], total, &mut rng)?;
    coincidence_histogram(&s1, &s2, a.bin_width, a.max_delay)
}

/// Inverts `delay_difference(l) = d` by bisection to 1e-4 nm.
pub struct DelayInverter {
    fiber: DispersiveFiber,
    pump: PumpParams,
    low: f64,
    high: f64,
    low_delay: f64,
    high_delay: f64,
}

const INVERSION_TOL_NM: f64 = 1e-4;

/// Half-width of the wavelength search band as a fraction of the degeneracy
/// wavelength.
pub const SEARCH_SPAN: f64 = 0.15;

impl DelayInverter {
    /// Searches wavelengths within `span_fraction` of the degeneracy
    /// wavelength on either side.
    pub fn new(fiber: &DispersiveFiber, pump: &PumpParams, span_fraction: f64) -> Result<Self> {
        fiber.validate()?;
        let deg = degeneracy_wavelength(pump)?;
        let low = deg * (1.0 - span_fraction);
        let high = conjugate_wavelength(pump, low)
            .map_err(|_| Error::Inversion("search band reaches past the pump".into()))?;
        // tau is quadratic, so its slope is monotone and the endpoints bound it
        let (s_lo, s_hi) = (fiber.delay_slope(low), fiber.delay_slope(high));
        if s_lo * s_hi <= 0.0 || s_lo * fiber.dispersion <= 0.0 {
            return Err(Error::Inversion(alloc::format!(
                "fiber delay is not monotone over {low:.1}–{high:.1} nm"
            )));
        }
        let low_delay = delay_difference(low, fiber, pump)?;
        let high_delay = delay_difference(high, fiber, pump)?;
        Ok(Self {
            fiber: *fiber,
            pump: *pump,
            low,
            high,
            low_delay,
            high_delay,
        })
    }

    /// Wavelength of the detector-2 photon for delay difference `d` (s).
    pub fn wavelength(&self, d: f64) -> Result<f64> {
        let (dmin, dmax) = if self.low_delay < self.high_delay {
            (self.low_delay, self.high_delay)
        } else {
            (self.high_delay, self.low_delay)
        };
        if !(d >= dmin && d <= dmax) {
            return Err(Error::Inversion(alloc::format!("delay {d:e} s is outside the invertible band")));
        }
        let increasing = self.high_delay > self.low_delay;
        let (mut lo, mut hi) = (self.low, self.high);
        while hi - lo > INVERSION_TOL_NM {
            let mid = 0.5 * (lo + hi);
            let value = delay_difference(mid, &self.fiber, &self.pump)?;
            if (value < d) == increasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Delay-difference range treated as pure background, s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccidentalWindow {
    /// Lower bound on |d|.
    pub low: f64,
    /// Upper bound on |d|.
    pub high: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumBin {
    /// Wavelength at the bin's center delay, nm.
    pub wavelength: f64,
    /// nm
    pub low: f64,
    /// nm
    pub high: f64,
    /// Coincidences minus the accidental floor (may be negative).
    pub net_counts: f64,
    /// One-sigma uncertainty of `net_counts`.
    pub counts_err: f64,
}

impl SpectrumBin {
    pub fn width(&self) -> f64 {
        self.high - self.low
    }

    /// Clipped net counts per nm.
    pub fn intensity(&self) -> f64 {
        self.net_counts.max(0.0) / self.width()
    }

    pub fn intensity_err(&self) -> f64 {
        self.counts_err / self.width()
    }
}

/// Spectrum reconstructed from a delay histogram, sorted by wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedSpectrum {
    pub bins: Vec<SpectrumBin>,
    /// Mean accidental counts per histogram bin.
    pub accidental_floor: f64,
}

impl ReconstructedSpectrum {
    /// `(wavelength, intensity)` pairs, counts per nm.
    pub fn curve(&self) -> Vec<(f64, f64)> {
        self.bins.iter().map(|b| (b.wavelength, b.intensity())).collect()
    }

    /// Clipped net counts per bin.
    pub fn masses(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.net_counts.max(0.0)).collect()
    }

    /// `(low, high)` wavelength edges per bin.
    pub fn edges(&self) -> Vec<(f64, f64)> {
        self.bins.iter().map(|b| (b.low, b.high)).collect()
    }

    /// Boxcar average of the clipped density over `width_nm`, mass-weighted.
    pub fn smoothed(&self, width_nm: f64) -> Vec<(f64, f64)> {
        if !(width_nm > 0.0) {
            return self.curve();
        }
        self.bins
            .iter()
            .map(|center| {
                let (lo, hi) = (center.wavelength - width_nm / 2.0, center.wavelength + width_nm / 2.0);
                let (mut mass, mut width) = (0.0, 0.0);
                for b in self.bins.iter().filter(|b| b.wavelength >= lo && b.wavelength <= hi) {
                    mass += b.net_counts.max(0.0);
                    width += b.width();
                }
                (center.wavelength, if width > 0.0 { mass / width } else { 0.0 })
            })
            .collect()
    }
}

/// Maps each histogram bin with `|d| < window.low` to a wavelength bin of
/// the detector-2 photon, subtracts the mean accidental floor and corrects for
/// the nonuniform wavelength width of each bin.
pub fn reconstruct_spectrum(
    hist: &CoincidenceHistogram,
    fiber: &DispersiveFiber,
    pump: &PumpParams,
    window: &AccidentalWindow,
) -> Result<ReconstructedSpectrum> {
    if !(window.low >= 0.0 && window.low < window.high) {
        return Err(invalid("accidental window 0 ≤ low < high"));
    }
    let delays = hist.delays();
    let counts = hist.counts();
    let half = hist.bin_width() / 2.0;
    let (mut acc_sum, mut acc_bins) = (0u64, 0usize);
    for (&d, &c) in delays.iter().zip(counts) {
        if d.abs() >= window.low && d.abs() < window.high {
            acc_sum += c;
            acc_bins += 1;
        }
    }
    if acc_bins == 0 {
        return Err(invalid("accidental window covers no histogram bins"));
    }
    let floor = acc_sum as f64 / acc_bins as f64;
    let floor_var = floor / acc_bins as f64;

    let inverter = DelayInverter::new(fiber, pump, SEARCH_SPAN)?;
    let mut bins = Vec::new();
    for (&d, &c) in delays.iter().zip(counts) {
        if d.abs() + half > window.low {
            continue;
        }
        let a = inverter.wavelength(d - half)?;
        let b = inverter.wavelength(d + half)?;
        bins.push(SpectrumBin {
            wavelength: inverter.wavelength(d)?,
            low: a.min(b),
            high: a.max(b),
            net_counts: c as f64 - floor,
            counts_err: libm::sqrt(c as f64 + floor_var),
        });
    }
    if bins.is_empty() {
        return Err(Error::Empty("no histogram bins inside the signal window".into()));
    }
    bins.sort_by(|x, y| x.wavelength.total_cmp(&y.wavelength));
    Ok(ReconstructedSpectrum {
        bins,
        accidental_floor: floor,
    })
}

/// Probability mass of the photon wavelength a detector sees (half signal,
/// half idler) inside each `(low, high)` interval, using the same within-cell
/// model as the simulation.
pub fn true_photon_masses(jsa: &JointSpectralAmplitude, edges: &[(f64, f64)]) -> Vec<f64> {
    let grid = jsa.grid();
    let cells = cell_bounds(grid.signal_wavelengths());
    let signal_omega: Vec<f64> = grid.signal_wavelengths().iter().map(|&l| nm_to_omega(l)).collect();
    let idler_omega: Vec<f64> = grid.idler_wavelengths().iter().map(|&l| nm_to_omega(l)).collect();
    let intensity = jsa.intensity();
    let total: f64 = intensity.iter().sum();
    let mut out = alloc::vec![0.0; edges.len()];
    if !(total > 0.0) {
        return out;
    }
    // bins in angular frequency, ascending
    let mut bands: Vec<(f64, f64, usize)> = edges
        .iter()
        .enumerate()
        .map(|(i, &(lo, hi))| (nm_to_omega(hi), nm_to_omega(lo), i))
        .collect();
    bands.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut deposit = |lo: f64, hi: f64, mass: f64| {
        let width = hi - lo;
        let start = bands.partition_point(|b| b.1 <= lo);
        for &(blo, bhi, i) in bands[start..].iter().take_while(|b| b.0 < hi) {
            let overlap = hi.min(bhi) - lo.max(blo);
            if overlap > 0.0 {
                out[i] += mass * overlap / width;
            }
        }
    };
    let ni = idler_omega.len();
    for (j, &(lo, hi)) in cells.iter().enumerate() {
        let row = &intensity[j * ni..(j + 1) * ni];
        let row_mass: f64 = row.iter().sum();
        if row_mass == 0.0 {
            continue;
        }
        deposit(lo, hi, 0.5 * row_mass / total);
        for (k, &w) in row.iter().enumerate() {
            if w > 0.0 {
                // idler = w_k - (w_s - w_j) spans the mirrored cell
                let offset = (hi - signal_omega[j], signal_omega[j] - lo);
                deposit(idler_omega[k] - offset.0, idler_omega[k] + offset.1, 0.5 * w / total);
            }
        }
    }
    out
}

/// L1 distance between two mass vectors after normalizing each to unit sum.
pub fn normalized_l1(a: &[f64], b: &[f64]) -> f64 {
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    if !(sa > 0.0 && sb > 0.0) {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x / sa - y / sb).abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpectralGrid;
    use crate::Complex64;

    #[test]
    fn delay_examples() {
        let f = DispersiveFiber::default();
        assert_eq!(delay_of(1550.0, &f), 0.0);
        let flat = DispersiveFiber {
            dispersion_slope: 0.0,
            ..f
        };
        assert!((delay_of(1560.0, &flat) - 3.40e-9).abs() < 1e-18);
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=20_000 {
            let tau = delay_of(1465.0 + 0.01 * k as f64, &f);
            assert!(tau > prev);
            prev = tau;
        }
    }

    #[test]
    fn inversion_round_trip() {
        let pump = PumpParams::default();
        let inv = DelayInverter::new(&DispersiveFiber::default(), &pump, SEARCH_SPAN).unwrap();
        for l in [1470.0, 1530.0, 1565.8, 1600.0, 1660.0] {
            let d = delay_difference(l, &DispersiveFiber::default(), &pump).unwrap();
            assert!((inv.wavelength(d).unwrap() - l).abs() < 2e-4);
        }
        assert!(matches!(inv.wavelength(1e-3), Err(Error::Inversion(_))));
    }

    fn line_jsa(signal_nm: &[f64]) -> JointSpectralAmplitude {
        let pump = PumpParams::default();
        let grid = SpectralGrid::conjugate_symmetric(&pump, 1500.0, 1640.0, 256).unwrap();
        let n = grid.signal_wavelengths().len();
        let picks: Vec<usize> = signal_nm
            .iter()
            .map(|&l| {
                grid.signal_wavelengths()
                    .iter()
                    .enumerate()
                    .min_by(|a, b| (a.1 - l).abs().total_cmp(&(b.1 - l).abs()))
                    .unwrap()
                    .0
            })
            .collect();
        let mut fm = alloc::vec![Complex64::new(0.0, 0.0); n * n];
        for j in picks {
            fm[j * n + (n - 1 - j)] = Complex64::new(1.0, 0.0);
        }
        let fp = fm.clone();
        JointSpectralAmplitude::new(grid, fm, fp).unwrap()
    }

    fn acquisition(ratio: f64) -> SpectrometerAcquisition {
        SpectrometerAcquisition {
            pair_rate: 1e4,
            duration: 1.0,
            beamsplitter_ratio: ratio,
            bin_width: 500e-12,
            max_delay: 120e-9,
        }
    }

    #[test]
    fn degenerate_line_peaks_at_zero() {
        let jsa = line_jsa(&[1565.8]);
        let det = DetectorParams::ideal();
        let h = simulate_spectrometer_run(&jsa, &DispersiveFiber::default(), &[det, det], &acquisition(0.5), 1).unwrap();
        let (near, _) = h.sum_between(-1e-9, 1e-9);
        assert!(h.total() > 1000);
        // true coincidences sit within a nanosecond of zero; the rest are
        // cross-pair accidentals
        assert!(near as f64 > 0.99 * h.total() as f64);
    }

    #[test]
    fn all_light_to_one_port_gives_no_coincidences() {
        let jsa = line_jsa(&[1565.8]);
        let det = DetectorParams::ideal();
        let h = simulate_spectrometer_run(&jsa, &DispersiveFiber::default(), &[det, det], &acquisition(1.0), 2).unwrap();
        assert_eq!(h.total(), 0);
    }

    #[test]
    fn flat_background_reconstructs_to_zero() {
        let h = CoincidenceHistogram::from_counts(500e-12, alloc::vec![40; 480]).unwrap();
        let window = AccidentalWindow { low: 90e-9, high: 120e-9 };
        let s = reconstruct_spectrum(&h, &DispersiveFiber::default(), &PumpParams::default(), &window).unwrap();
        assert!(s.bins.iter().all(|b| b.intensity() == 0.0));
        assert_eq!(s.accidental_floor, 40.0);
    }
}
