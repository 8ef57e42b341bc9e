use biphoton_core::counting::{
    car, car_vs_power_sweep, coincidence_histogram, simulate_streams, CarWindows, DetectorParams, PairSource,
};
use biphoton_core::source::SourceConfig;
use biphoton_core::units::db_to_transmission;
use proptest::prelude::*;

fn detector(efficiency: f64, dead_time: f64, dark_rate: f64) -> DetectorParams {
    DetectorParams {
        efficiency,
        dead_time,
        dark_rate,
        jitter_sigma: 100e-12,
    }
}

#[test]
fn singles_follow_dead_time_formula() {
    let rate = 1e5;
    let det = detector(0.2, 15e-6, 0.0);
    let duration = 100.0;
    let [a, b] = simulate_streams(&PairSource::pairs_only(rate, [3.0, 3.0]), &[det, det], duration, 21).unwrap();
    let raw = rate * db_to_transmission(3.0) * 0.2;
    let expected = raw / (1.0 + raw * det.dead_time) * duration;
    for stream in [&a, &b] {
        let n = stream.len() as f64;
        assert!((n - expected).abs() < 3.0 * expected.sqrt(), "{n} vs {expected}");
        assert!(stream.min_gap().unwrap() >= det.dead_time);
    }
}

#[test]
fn independent_streams_give_flat_accidentals() {
    let (r1, r2) = (2e4, 3e4);
    let duration = 20.0;
    let det = detector(1.0, 0.0, 0.0);
    let source = PairSource {
        pair_rate: 0.0,
        arm_loss_db: [0.0; 2],
        unpaired_rate: [r1, r2],
    };
    let [a, b] = simulate_streams(&source, &[det, det], duration, 4).unwrap();
    let bin = 1e-9;
    let hist = coincidence_histogram(&a, &b, bin, 200e-9).unwrap();
    let mean = r1 * r2 * bin * duration;
    let sigma = mean.sqrt();
    let counts = hist.counts();
    let outliers = counts.iter().filter(|&&c| (c as f64 - mean).abs() > 3.0 * sigma).count();
    // 3-sigma excursions are a 0.3% event per bin
    assert!(outliers <= 4, "{outliers} of {} bins beyond 3 sigma", counts.len());
    let avg = hist.total() as f64 / counts.len() as f64;
    assert!((avg - mean).abs() < 3.0 * sigma / (counts.len() as f64).sqrt());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dead_time_holds_on_every_stream(
        seed in any::<u64>(),
        rate in 1e3f64..5e5,
        dead_us in 0.1f64..30.0,
        dark in 0.0f64..1e4,
    ) {
        let det = detector(0.5, dead_us * 1e-6, dark);
        let [a, b] = simulate_streams(&PairSource::pairs_only(rate, [1.0, 2.0]), &[det, det], 0.2, seed).unwrap();
        for s in [&a, &b] {
            for w in s.tags().windows(2) {
                prop_assert!(w[1] - w[0] >= (dead_us * 1e6).round() as u64);
            }
        }
    }

    #[test]
    fn refinement_conserves_total(seed in any::<u64>(), factor in 1usize..8) {
        let det = detector(0.8, 1e-8, 2e4);
        let source = PairSource { pair_rate: 5e4, arm_loss_db: [1.0, 1.0], unpaired_rate: [1e4, 1e4] };
        let [a, b] = simulate_streams(&source, &[det, det], 0.5, seed).unwrap();
        // bin widths are whole picoseconds, so the coarse width must split
        // exactly: 2520 ps is divisible by every factor
        let coarse = coincidence_histogram(&a, &b, 2520e-12, 100.8e-9).unwrap();
        let fine = coincidence_histogram(&a, &b, (2520 / factor) as f64 * 1e-12, 100.8e-9).unwrap();
        prop_assert_eq!(coarse.total(), fine.total());
        prop_assert_eq!(fine.len(), factor * coarse.len());
    }

    #[test]
    fn car_invariant_under_translation(seed in any::<u64>(), offset_us in 0u64..1_000_000) {
        let det = detector(0.2, 1e-6, 500.0);
        let source = PairSource { pair_rate: 2e5, arm_loss_db: [2.0, 2.0], unpaired_rate: [5e4, 5e4] };
        let [a, b] = simulate_streams(&source, &[det, det], 0.5, seed).unwrap();
        let windows = CarWindows::default();
        let before = coincidence_histogram(&a, &b, 1e-9, 400e-9).unwrap();
        let offset = offset_us * 1_000_000;
        let after = coincidence_histogram(&a.shifted(offset), &b.shifted(offset), 1e-9, 400e-9).unwrap();
        prop_assert_eq!(&before, &after);
        prop_assert_eq!(car(&before, &windows).unwrap(), car(&after, &windows).unwrap());
    }
}

#[test]
fn streams_are_deterministic() {
    let det = DetectorParams::default();
    let source = PairSource::pairs_only(1e5, [1.0, 1.0]);
    let first = simulate_streams(&source, &[det, det], 0.5, 8).unwrap();
    assert_eq!(first, simulate_streams(&source, &[det, det], 0.5, 8).unwrap());
    assert_ne!(first, simulate_streams(&source, &[det, det], 0.5, 9).unwrap());
}

fn dark_free_config(duration: f64) -> SourceConfig {
    let mut config = SourceConfig::default();
    config.detectors.signal.dark_rate = 0.0;
    config.detectors.idler.dark_rate = 0.0;
    config.sweep.duration = duration;
    config
}

#[test]
fn doubling_power_halves_car_without_darks() {
    let points = car_vs_power_sweep(&dark_free_config(600.0), &[7.5, 15.0]).unwrap();
    let (low, high) = (points[0], points[1]);
    let sigma = (high.car_stderr.powi(2) + (low.car_stderr / 2.0).powi(2)).sqrt();
    assert!((high.car - low.car / 2.0).abs() < 3.0 * sigma, "{} vs {} ± {sigma}", high.car, low.car / 2.0);
}

#[test]
fn sweep_trends_when_accidentals_dominate() {
    let points = car_vs_power_sweep(&dark_free_config(300.0), &[5.0, 10.0, 20.0, 30.0]).unwrap();
    for w in points.windows(2) {
        assert!(w[1].car < w[0].car);
        assert!(w[1].coincidence_rate >= w[0].coincidence_rate);
    }
}

#[test]
fn default_power_in_sweep_lands_in_car_band() {
    let mut config = SourceConfig::default();
    config.sweep.duration = 60.0;
    let points = car_vs_power_sweep(&config, &[7.5]).unwrap();
    assert!((1200.0..=4800.0).contains(&points[0].car), "{}", points[0].car);
}
