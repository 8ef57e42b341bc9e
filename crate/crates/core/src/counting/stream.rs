use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};

use super::detector::DetectorParams;
use crate::error::{invalid, Result};
use crate::rng::{rng_from_seed, SimRng};
use crate::units::{db_to_transmission, seconds_to_ps, PICOSECOND};

/// Detection timestamps of one channel in integer picoseconds, strictly
/// increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeTagStream {
    channel: u8,
    tags: Vec<u64>,
}

impl TimeTagStream {
    pub fn new(channel: u8, tags: Vec<u64>) -> Result<Self> {
        if tags.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("time tags must be strictly increasing"));
        }
        Ok(Self { channel, tags })
    }

    pub fn channel(&self) -> u8 {
        self.channel
    }

    pub fn tags(&self) -> &[u64] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    /// Smallest gap between consecutive tags, s.
    pub fn min_gap(&self) -> Option<f64> {
        self.tags.windows(2).map(|w| w[1] - w[0]).min().map(|g| g as f64 * PICOSECOND)
    }

    /// Shifts every tag by `offset_ps`.
    pub fn shifted(&self, offset_ps: u64) -> Self {
        Self {
            channel: self.channel,
            tags: self.tags.iter().map(|t| t + offset_ps).collect(),
        }
    }
}

/// Pair emission feeding two detection arms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSource {
    /// Pairs per second with one photon headed to each arm.
    pub pair_rate: f64,
    /// Loss before each detector, dB.
    pub arm_loss_db: [f64; 2],
    /// Photons per second reaching each arm whose partner does not reach the
    /// other arm. They are uncorrelated with the other stream.
    pub unpaired_rate: [f64; 2],
}

impl PairSource {
    pub fn pairs_only(pair_rate: f64, arm_loss_db: [f64; 2]) -> Self {
        Self {
            pair_rate,
            arm_loss_db,
            unpaired_rate: [0.0; 2],
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.pair_rate >= 0.0 && self.pair_rate.is_finite()) {
            return Err(invalid("pair_rate ≥ 0"));
        }
        if self.arm_loss_db.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(invalid("arm loss ≥ 0 dB"));
        }
        if self.unpaired_rate.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(invalid("unpaired_rate ≥ 0"));
        }
        Ok(())
    }
}

/// Homogeneous Poisson event times in `[0, duration)`, picoseconds.
fn poisson_times(rng: &mut SimRng, rate: f64, duration_ps: i64, out: &mut Vec<i64>) {
    if rate <= 0.0 {
        return;
    }
    let gaps = Exp::new(rate * PICOSECOND).expect("positive rate");
    let mut t = 0.0f64;
    loop {
        t += gaps.sample(rng);
        if t >= duration_ps as f64 {
            break;
        }
        out.push(t as i64);
    }
}

/// Turns ideal photon arrival times (ps) into a detector record: Gaussian
/// jitter, quantization, dark counts, then non-paralyzable dead time.
/// Events outside `[0, duration)` are dropped.
pub fn detect(
    channel: u8,
    mut arrivals: Vec<i64>,
    detector: &DetectorParams,
    duration: f64,
    rng: &mut SimRng,
) -> Result<TimeTagStream> {
    detector.validate()?;
    let duration_ps = seconds_to_ps(duration);
    if detector.jitter_sigma > 0.0 {
        let jitter = Normal::new(0.0, detector.jitter_sigma / PICOSECOND).expect("finite jitter");
        for t in arrivals.iter_mut() {
            *t += libm::round(jitter.sample(rng)) as i64;
        }
    }
    poisson_times(rng, detector.dark_rate, duration_ps, &mut arrivals);
    arrivals.retain(|&t| t >= 0 && t < duration_ps);
    arrivals.sort_unstable();

    let dead_ps = seconds_to_ps(detector.dead_time).max(1) as u64;
    let mut tags: Vec<u64> = Vec::with_capacity(arrivals.len());
    for t in arrivals {
        let t = t as u64;
        match tags.last() {
            Some(&last) if t < last + dead_ps => {}
            _ => tags.push(t),
        }
    }
    TimeTagStream::new(channel, tags)
}

/// Simulates both detector streams for `duration` seconds.
///
/// Pairs are emitted as a Poisson process; each photon independently
/// survives its arm loss and detector efficiency. Unpaired photons and dark
/// counts are independent Poisson processes. Deterministic for a fixed seed.
pub fn simulate_streams(
    source: &PairSource,
    detectors: &[DetectorParams; 2],
    duration: f64,
    seed: u64,
) -> Result<[TimeTagStream; 2]> {
    source.validate()?;
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(invalid("duration > 0"));
    }
    for d in detectors {
        d.validate()?;
    }
    let mut rng = rng_from_seed(seed);
    let duration_ps = seconds_to_ps(duration);
    let survive = [0, 1].map(|a| db_to_transmission(source.arm_loss_db[a]) * detectors[a].efficiency);

    let mut emissions = Vec::new();
    poisson_times(&mut rng, source.pair_rate, duration_ps, &mut emissions);
    let mut arrivals: [Vec<i64>; 2] = [Vec::new(), Vec::new()];
    for &t in &emissions {
        for (arm, list) in arrivals.iter_mut().enumerate() {
            if rng.random::<f64>() < survive[arm] {
                list.push(t);
            }
        }
    }
    for (arm, list) in arrivals.iter_mut().enumerate() {
        poisson_times(&mut rng, source.unpaired_rate[arm] * survive[arm], duration_ps, list);
    }
    let [a, b] = arrivals;
    let first = detect(0, a, &detectors[0], duration, &mut rng)?;
    let second = detect(1, b, &detectors[1], duration, &mut rng)?;
    Ok([first, second])
}
