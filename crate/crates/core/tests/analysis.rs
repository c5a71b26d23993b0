use std::f64::consts::TAU;

use approx::assert_relative_eq;
use proptest::prelude::*;
use vibroimpact::analysis::{
    energy_error_series, fit_order, fundamental_frequency, preservation_metric, spectrogram,
    trend_slope,
};

fn sawtooth_like(f0: f64, fs: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            (1..6).map(|k| (TAU * k as f64 * f0 * t).sin() / k as f64).sum()
        })
        .collect()
}

#[test]
fn chirp_ridge_rises_through_the_spectrogram() {
    let fs = 8000.0;
    let n = 16_000;
    let (f_start, f_end) = (200.0, 2200.0);
    let rate = (f_end - f_start) / (n as f64 / fs);
    let signal: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            (TAU * (f_start * t + 0.5 * rate * t * t)).sin()
        })
        .collect();
    let spec = spectrogram(&signal, fs, 512, 256).unwrap();
    let ridge: Vec<f64> = spec
        .magnitudes
        .iter()
        .map(|frame| {
            let k = (0..frame.len()).max_by(|&a, &b| frame[a].total_cmp(&frame[b])).unwrap();
            spec.frequencies[k]
        })
        .collect();
    for (t, f) in spec.times.iter().zip(&ridge) {
        let expected = f_start + rate * t;
        assert!((f - expected).abs() <= 2.0 * fs / 512.0, "t {t}: {f} vs {expected}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pitch_ignores_gain_and_polarity(f0 in 80.0..800.0_f64, gain in 1e-4..1e3_f64) {
        let fs = 44_100.0;
        let x = sawtooth_like(f0, fs, 22_050);
        let base = fundamental_frequency(&x, fs).unwrap().frequency;
        prop_assert!((base - f0).abs() <= 1e-3 * f0);
        for sign in [1.0, -1.0] {
            let y: Vec<f64> = x.iter().map(|v| sign * gain * v).collect();
            let f = fundamental_frequency(&y, fs).unwrap().frequency;
            prop_assert!((f - base).abs() <= 1e-6 * base);
        }
    }

    #[test]
    fn energy_metrics_are_scale_free(
        h in proptest::collection::vec(0.5..1.5_f64, 20..60),
        scale in 1e-6..1e6_f64,
    ) {
        let scaled: Vec<f64> = h.iter().map(|v| scale * v).collect();
        let e = energy_error_series(&h, h[0]).unwrap();
        let es = energy_error_series(&scaled, scaled[0]).unwrap();
        for (a, b) in e.iter().zip(&es) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        let interval = (1, h.len() - 2);
        let p = preservation_metric(&h, h[0], interval).unwrap();
        let ps = preservation_metric(&scaled, scaled[0], interval).unwrap();
        prop_assert!((p - ps).abs() <= 1e-12 * p.max(1e-300));
    }
}

#[test]
fn order_fit_recovers_power_laws() {
    // errors are measured against the finest rung
    let dts: [f64; 4] = [1e-3, 5e-4, 2.5e-4, 1.25e-4];
    for order in [1.0, 2.0, 4.0] {
        let reference = dts[3].powf(order);
        let errors: Vec<f64> = dts[..3].iter().map(|dt| 3.0 * (dt.powf(order) - reference)).collect();
        assert_relative_eq!(fit_order(&dts, &errors).unwrap(), order, epsilon = 1e-8);
    }
}

#[test]
fn trend_of_a_line_is_its_slope() {
    let v: Vec<f64> = (0..100).map(|i| 2.5e-3 * i as f64 - 7.0).collect();
    assert_relative_eq!(trend_slope(&v), 2.5e-3, max_relative = 1e-10);
}
