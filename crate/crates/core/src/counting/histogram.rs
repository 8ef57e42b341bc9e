use alloc::vec::Vec;

use super::stream::TimeTagStream;
use crate::error::{invalid, Result};
use crate::units::{seconds_to_ps, PICOSECOND};

/// Histogram of `stop - start` delays over `[-span, span)` in uniform bins.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceHistogram {
    bin_width_ps: i64,
    half_bins: usize,
    counts: Vec<u64>,
}

impl CoincidenceHistogram {
    /// Empty histogram with `2 * half_bins` bins of `bin_width` seconds.
    pub fn empty(bin_width: f64, half_bins: usize) -> Result<Self> {
        let w = seconds_to_ps(bin_width);
        if !(bin_width > 0.0) || w < 1 {
            return Err(invalid("bin_width > 0 (at least 1 ps)"));
        }
        Ok(Self {
            bin_width_ps: w,
            half_bins,
            counts: alloc::vec![0; 2 * half_bins],
        })
    }

    pub fn from_counts(bin_width: f64, counts: Vec<u64>) -> Result<Self> {
        if !counts.len().is_multiple_of(2) {
            return Err(invalid("histogram needs an even number of bins"));
        }
        let mut h = Self::empty(bin_width, counts.len() / 2)?;
        h.counts = counts;
        Ok(h)
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width_ps as f64 * PICOSECOND
    }

    pub fn bin_width_ps(&self) -> i64 {
        self.bin_width_ps
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    fn span_ps(&self) -> i64 {
        self.half_bins as i64 * self.bin_width_ps
    }

    /// Bin centre in picoseconds.
    pub fn center_ps(&self, bin: usize) -> f64 {
        (bin as i64 * self.bin_width_ps - self.span_ps()) as f64 + self.bin_width_ps as f64 / 2.0
    }

    /// Bin centres, s.
    pub fn delays(&self) -> Vec<f64> {
        (0..self.counts.len()).map(|b| self.center_ps(b) * PICOSECOND).collect()
    }

    /// Records one delay in picoseconds; out-of-span delays are ignored.
    pub fn add_delay_ps(&mut self, delay: i64) {
        let shifted = delay + self.span_ps();
        if shifted >= 0 && shifted < 2 * self.span_ps() {
            self.counts[(shifted / self.bin_width_ps) as usize] += 1;
        }
    }

    /// Sum of counts over bins whose centres fall in `[low, high)` seconds.
    pub fn sum_between(&self, low: f64, high: f64) -> (u64, usize) {
        let (lo, hi) = (low / PICOSECOND, high / PICOSECOND);
        let mut total = 0;
        let mut bins = 0;
        for (b, &c) in self.counts.iter().enumerate() {
            let center = self.center_ps(b);
            if center >= lo && center < hi {
                total += c;
                bins += 1;
            }
        }
        (total, bins)
    }
}

/// Histograms `stop - start` for every tag pair within `max_delay`, by a
/// two-pointer sweep over both sorted streams.
pub fn coincidence_histogram(
    start: &TimeTagStream,
    stop: &TimeTagStream,
    bin_width: f64,
    max_delay: f64,
) -> Result<CoincidenceHistogram> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(invalid("bin_width > 0"));
    }
    if !(max_delay > 0.0 && max_delay.is_finite()) {
        return Err(invalid("max_delay > 0"));
    }
    let half_bins = libm::ceil(max_delay / bin_width - 1e-9).max(1.0) as usize;
    let mut hist = CoincidenceHistogram::empty(bin_width, half_bins)?;
    let span = hist.span_ps();
    let stops = stop.tags();
    let mut lo = 0usize;
    for &t in start.tags() {
        let t = t as i64;
        while lo < stops.len() && (stops[lo] as i64) < t - span {
            lo += 1;
        }
        let mut j = lo;
        while j < stops.len() && (stops[j] as i64) < t + span {
            hist.add_delay_ps(stops[j] as i64 - t);
            j += 1;
        }
    }
    Ok(hist)
}

/// Windows for a CAR measurement, seconds. The peak window is centered on
/// `peak_center`; the accidental window starts `accidental_offset` after it
/// and is `accidental_width` wide.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct CarWindows {
    pub peak_center: f64,
    pub coincidence_window: f64,
    pub accidental_offset: f64,
    pub accidental_width: f64,
}

impl Default for CarWindows {
    fn default() -> Self {
        Self {
            peak_center: 0.0,
            coincidence_window: 1e-9,
            accidental_offset: 50e-9,
            accidental_width: 200e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarMeasurement {
    /// `f64::INFINITY` when the accidental window is empty.
    pub ratio: f64,
    pub peak_counts: u64,
    pub accidental_counts: u64,
    /// Accidental counts scaled to the peak window width.
    pub accidental_equivalent: f64,
    pub peak_bins: usize,
    pub accidental_bins: usize,
}

impl CarMeasurement {
    /// One-sigma Poisson uncertainty of the ratio.
    pub fn stderr(&self) -> f64 {
        if self.peak_counts == 0 || self.accidental_counts == 0 {
            return f64::INFINITY;
        }
        self.ratio * libm::sqrt(1.0 / self.peak_counts as f64 + 1.0 / self.accidental_counts as f64)
    }
}

pub fn car(hist: &CoincidenceHistogram, windows: &CarWindows) -> Result<CarMeasurement> {
    let w = windows;
    if !(w.coincidence_window > 0.0 && w.accidental_width > 0.0) {
        return Err(invalid("CAR windows must have positive width"));
    }
    if w.accidental_offset < w.coincidence_window / 2.0 {
        return Err(invalid("accidental window overlaps the coincidence window"));
    }
    let span = hist.span_ps() as f64 * PICOSECOND;
    let peak_low = w.peak_center - w.coincidence_window / 2.0;
    let peak_high = w.peak_center + w.coincidence_window / 2.0;
    let acc_low = w.peak_center + w.accidental_offset;
    let acc_high = acc_low + w.accidental_width;
    if peak_low < -span || acc_high > span + 1e-15 {
        return Err(invalid("CAR windows must lie within the histogram span"));
    }
    let (peak_counts, peak_bins) = hist.sum_between(peak_low, peak_high);
    let (accidental_counts, accidental_bins) = hist.sum_between(acc_low, acc_high);
    if peak_bins == 0 || accidental_bins == 0 {
        return Err(invalid("CAR windows must each cover at least one bin"));
    }
    let accidental_equivalent = accidental_counts as f64 * peak_bins as f64 / accidental_bins as f64;
    let ratio = if accidental_counts == 0 {
        f64::INFINITY
    } else {
        peak_counts as f64 / accidental_equivalent
    };
    Ok(CarMeasurement {
        ratio,
        peak_counts,
        accidental_counts,
        accidental_equivalent,
        peak_bins,
        accidental_bins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_streams_peak_at_zero() {
        let tags: Vec<u64> = (0..1000).map(|k| 1_000_000 + 123_457 * k).collect();
        let a = TimeTagStream::new(0, tags.clone()).unwrap();
        let b = TimeTagStream::new(1, tags).unwrap();
        let h = coincidence_histogram(&a, &b, 100e-12, 5e-9).unwrap();
        assert_eq!(h.len(), 100);
        let zero_bin = h.len() / 2;
        assert_eq!(h.counts()[zero_bin], 1000);
        assert_eq!(h.total(), 1000);
        assert!((h.delays()[zero_bin] - 50e-12).abs() < 1e-18);
    }

    #[test]
    fn bad_bin_width() {
        let a = TimeTagStream::new(0, alloc::vec![1]).unwrap();
        assert!(coincidence_histogram(&a, &a, 0.0, 1e-9).is_err());
        assert!(coincidence_histogram(&a, &a, -1e-12, 1e-9).is_err());
    }

    #[test]
    fn flat_histogram_has_unit_car() {
        let h = CoincidenceHistogram::from_counts(100e-12, alloc::vec![50; 6000]).unwrap();
        let m = car(&h, &CarWindows::default()).unwrap();
        assert!((m.ratio - 1.0).abs() < 1e-12);
        assert_eq!(m.peak_bins, 10);
        assert_eq!(m.accidental_bins, 2000);
    }

    #[test]
    fn empty_accidentals_give_infinity() {
        let mut counts = alloc::vec![0u64; 6000];
        counts[3000] = 7;
        let h = CoincidenceHistogram::from_counts(100e-12, counts).unwrap();
        let m = car(&h, &CarWindows::default()).unwrap();
        assert!(m.ratio.is_infinite());
    }

    #[test]
    fn overlapping_or_out_of_span_windows_rejected() {
        let h = CoincidenceHistogram::from_counts(100e-12, alloc::vec![1; 6000]).unwrap();
        let overlapping = CarWindows {
            accidental_offset: 0.2e-9,
            ..CarWindows::default()
        };
        assert!(car(&h, &overlapping).is_err());
        let far = CarWindows {
            accidental_offset: 400e-9,
            ..CarWindows::default()
        };
        assert!(car(&h, &far).is_err());
    }
}
