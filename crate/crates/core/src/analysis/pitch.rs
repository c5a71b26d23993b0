use serde::Serialize;

use super::spectral::{magnitude_spectrum_with, Window};
use crate::error::{Error, Result};

/// Spectral and zero-crossing estimates disagreeing by more than this fail.
pub const MAX_DISAGREEMENT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PitchEstimate {
    /// Refined estimate (Hz): the zero-crossing value.
    pub frequency: f64,
    /// Interpolated spectral peak (Hz).
    pub spectral: f64,
    /// Slope of the periodic zero-crossing times (Hz).
    pub zero_crossing: f64,
    /// Number of periods used by the zero-crossing fit.
    pub periods: usize,
}

impl PitchEstimate {
    pub fn disagreement(&self) -> f64 {
        (self.zero_crossing - self.spectral).abs() / self.spectral
    }
}

/// Fundamental frequency of a periodic signal.
///
/// A coarse value comes from the lowest strong spectral peak. Upward
/// crossings of the signal mean that recur once per coarse period are then
/// fitted against their period index, and the slope gives the refined value.
pub fn fundamental_frequency(signal: &[f64], sample_rate: f64) -> Result<PitchEstimate> {
    if signal.len() < 16 {
        return Err(Error::NoPeriodicity("signal too short".into()));
    }
    let mean = signal.iter().sum::<f64>() / signal.len() as f64;
    let centred: Vec<f64> = signal.iter().map(|x| x - mean).collect();
    let spread = centred.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let scale = signal.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if spread <= 1e-12 * scale {
        return Err(Error::NoPeriodicity("signal is constant".into()));
    }

    let spectral = spectral_estimate(&centred, sample_rate)?;
    let period = sample_rate / spectral;
    let crossings = upward_crossings(&centred);
    let (zero_crossing, periods) = fit_crossings(&crossings, period)
        .map(|(p, k)| (sample_rate / p, k))
        .ok_or_else(|| Error::NoPeriodicity("fewer than 5 periodic crossings".into()))?;
    let estimate = PitchEstimate {
        frequency: zero_crossing,
        spectral,
        zero_crossing,
        periods,
    };
    if estimate.disagreement() > MAX_DISAGREEMENT {
        return Err(Error::NoPeriodicity(format!(
            "spectral peak {spectral:.3} Hz and zero crossings {zero_crossing:.3} Hz disagree"
        )));
    }
    if estimate.disagreement() > 0.01 {
        log::warn!(
            "pitch estimators differ by {:.2}%",
            100.0 * estimate.disagreement()
        );
    }
    Ok(estimate)
}

/// Repetition rate of an almost periodic signal (Hz).
///
/// Uses the cumulative-mean-normalised squared difference between the
/// signal and a lagged copy, over lags whose rate lies in `[min_hz, max_hz]`.
/// The first dip below `threshold` wins (the deepest dip if none is), and its
/// position is refined by a parabola through the neighbouring lags.
pub fn repetition_frequency(
    signal: &[f64],
    sample_rate: f64,
    min_hz: f64,
    max_hz: f64,
    threshold: f64,
) -> Result<f64> {
    if !(min_hz > 0.0 && max_hz > min_hz) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < min_hz < max_hz, got {min_hz} and {max_hz}"
        )));
    }
    let max_lag = (sample_rate / min_hz).ceil() as usize;
    let min_lag = ((sample_rate / max_hz).floor() as usize).max(1);
    if signal.len() < 2 * max_lag {
        return Err(Error::NoPeriodicity(format!(
            "need at least {} samples for periods up to {max_lag}",
            2 * max_lag
        )));
    }
    let window = signal.len() - max_lag - 1;
    let diff: Vec<f64> = (0..=max_lag + 1)
        .map(|lag| {
            signal[..window]
                .iter()
                .zip(&signal[lag..lag + window])
                .map(|(a, b)| (a - b) * (a - b))
                .sum()
        })
        .collect();
    let mut normalised = vec![1.0; diff.len()];
    let mut running = 0.0;
    for lag in 1..diff.len() {
        running += diff[lag];
        normalised[lag] = if running > 0.0 { diff[lag] * lag as f64 / running } else { 1.0 };
    }
    let dips: Vec<usize> = (min_lag.max(1)..=max_lag)
        .filter(|&l| normalised[l] < normalised[l - 1] && normalised[l] <= normalised[l + 1])
        .collect();
    let lag = dips
        .iter()
        .copied()
        .find(|&l| normalised[l] < threshold)
        .or_else(|| {
            dips.iter()
                .copied()
                .min_by(|&a, &b| normalised[a].total_cmp(&normalised[b]))
        })
        .ok_or_else(|| Error::NoPeriodicity("no repetition in the lag range".into()))?;
    let (a, b, c) = (normalised[lag - 1], normalised[lag], normalised[lag + 1]);
    let denom = a - 2.0 * b + c;
    let offset = if denom > 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    Ok(sample_rate / (lag as f64 + offset))
}

/// Lowest local maximum within 20 dB of the strongest, parabolically
/// interpolated on the dB scale.
fn spectral_estimate(centred: &[f64], sample_rate: f64) -> Result<f64> {
    let fft_len = (4 * centred.len()).next_power_of_two();
    let spec = magnitude_spectrum_with(centred, sample_rate, Window::Hann, fft_len)?;
    let db = &spec.magnitudes;
    // Skip the DC main lobe (a couple of native bins).
    let start = 2 * fft_len / centred.len() + 1;
    let k = (start.max(1)..db.len() - 1)
        .find(|&k| db[k] > -20.0 && db[k] >= db[k - 1] && db[k] >= db[k + 1])
        .ok_or_else(|| Error::NoPeriodicity("no spectral peak".into()))?;
    let (a, b, c) = (db[k - 1], db[k], db[k + 1]);
    let denom = a - 2.0 * b + c;
    let offset = if denom.abs() > 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    Ok((k as f64 + offset) * spec.bin_width())
}

/// Fractional sample positions of upward zero crossings.
fn upward_crossings(x: &[f64]) -> Vec<f64> {
    x.windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] < 0.0 && w[1] >= 0.0)
        .map(|(i, w)| i as f64 + w[0] / (w[0] - w[1]))
        .collect()
}

/// Pick the crossing nearest each predicted period and fit a line through
/// (index, time). Returns the fitted period in samples.
fn fit_crossings(crossings: &[f64], period: f64) -> Option<(f64, usize)> {
    let first = *crossings.first()?;
    let mut picked: Vec<(f64, f64)> = vec![(0.0, first)];
    let mut estimate = period;
    let mut k = 1usize;
    let last = *crossings.last()?;
    loop {
        let (k0, t0) = picked[0];
        let predicted = t0 + (k as f64 - k0) * estimate;
        if predicted > last + 0.25 * estimate {
            break;
        }
        let at = crossings.partition_point(|&c| c < predicted);
        let nearest = [at.checked_sub(1), Some(at)]
            .into_iter()
            .flatten()
            .filter_map(|i| crossings.get(i).copied())
            .min_by(|a, b| (a - predicted).abs().total_cmp(&(b - predicted).abs()))?;
        if (nearest - predicted).abs() < 0.25 * estimate {
            picked.push((k as f64, nearest));
            if picked.len() >= 3 {
                estimate = line_slope(&picked);
                if !(estimate > 0.5 * period && estimate < 2.0 * period) {
                    return None;
                }
            }
        }
        k += 1;
    }
    (picked.len() >= 6).then(|| (line_slope(&picked), picked.len() - 1))
}

fn line_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
