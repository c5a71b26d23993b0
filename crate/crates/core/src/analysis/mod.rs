//! Diagnostics: energy error, spectra, pitch, convergence order, aliasing.

mod aliasing;
mod convergence;
mod pitch;
mod spectral;

pub use aliasing::{
    aliased_fraction, aliasing_sweep, fig5_stiffness_schedule, AliasingRun, SweepOptions,
};
pub use convergence::{convergence_order, fit_order, ConvergenceStudy};
pub use pitch::{fundamental_frequency, repetition_frequency, PitchEstimate, MAX_DISAGREEMENT};
pub use spectral::{
    magnitude_spectrum, magnitude_spectrum_with, spectral_centroid, spectrogram, to_db,
    Spectrogram, Spectrum, Window, DB_FLOOR,
};

use crate::error::{Error, Result};

/// `e^n = (H^n - H^0) / H^0`
pub fn energy_error_series(energies: &[f64], h0: f64) -> Result<Vec<f64>> {
    if h0 == 0.0 {
        return Err(Error::ZeroInitialEnergy);
    }
    Ok(energies.iter().map(|h| (h - h0) / h0).collect())
}

/// `max |e^n|`
pub fn max_energy_error(energies: &[f64], h0: f64) -> Result<f64> {
    Ok(energy_error_series(energies, h0)?
        .iter()
        .fold(0.0, |m, e| m.max(e.abs())))
}

/// Largest per-step change `|H^{n+1} - H^n| / |H^0|`.
pub fn max_step_error(energies: &[f64], h0: f64) -> Result<f64> {
    if h0 == 0.0 {
        return Err(Error::ZeroInitialEnergy);
    }
    Ok(energies
        .windows(2)
        .fold(0.0, |m, w| m.max((w[1] - w[0]).abs() / h0.abs())))
}

/// Mean per-step energy deviation over steps `n1..=n2`:
/// `Σ |H^{n+1} - H^n| / ((n2 - n1 + 1) H^0)`.
pub fn preservation_metric(energies: &[f64], h0: f64, interval: (usize, usize)) -> Result<f64> {
    let (n1, n2) = interval;
    if n1 > n2 || n2 + 1 >= energies.len() {
        return Err(Error::EmptyInterval(format!(
            "steps {n1}..={n2} with {} energy samples",
            energies.len()
        )));
    }
    if h0 == 0.0 {
        return Err(Error::ZeroInitialEnergy);
    }
    let sum: f64 = (n1..=n2)
        .map(|n| (energies[n + 1] - energies[n]).abs())
        .sum();
    Ok(sum / ((n2 - n1 + 1) as f64 * h0))
}

/// First and last step `n` whose mid-step compression
/// `y_c - (y^n + y^{n+1}) / 2` is positive.
pub fn contact_interval(displacement: &[f64], barrier: f64) -> Option<(usize, usize)> {
    let touching = |n: usize| barrier - 0.5 * (displacement[n] + displacement[n + 1]) > 0.0;
    let steps = displacement.len().checked_sub(1)?;
    let first = (0..steps).find(|&n| touching(n))?;
    let last = (0..steps).rev().find(|&n| touching(n))?;
    Some((first, last))
}

/// Maximal runs of samples with a positive value, as `(start, end)`
/// inclusive index pairs.
pub fn positive_episodes(signal: &[f64]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &v) in signal.iter().enumerate() {
        match (v > 0.0, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, signal.len() - 1));
    }
    out
}

/// Least-squares slope of `values` against their index.
pub fn trend_slope(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = values.iter().sum::<f64>() / n;
    let (sxy, sxx) = values
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(sxy, sxx), (i, v)| {
            let dx = i as f64 - mx;
            (sxy + dx * (v - my), sxx + dx * dx)
        });
    sxy / sxx
}
