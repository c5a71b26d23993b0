use rayon::prelude::*;
use serde::Serialize;

use super::pitch::fundamental_frequency;
use super::spectral::{magnitude_spectrum, Spectrum};
use crate::error::Result;
use crate::lumped::{simulate, LumpedParams, LumpedState, SchemeKind};

/// `30000 · 1.01^k` for `k = 1..=count`.
pub fn fig5_stiffness_schedule(count: usize) -> Vec<f64> {
    (1..=count as i32).map(|k| 30000.0 * 1.01f64.powi(k)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    /// Simulated time per run (s).
    pub duration: f64,
    /// Upper edge of the band that is inspected for aliases (Hz).
    pub band_limit: f64,
    /// Half width of the mask around each harmonic, in FFT bins.
    pub harmonic_half_width_bins: f64,
    /// Keep each run's spectrum (truncated to the band).
    pub keep_spectra: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            duration: 1.0,
            band_limit: 20_000.0,
            harmonic_half_width_bins: 6.0,
            keep_spectra: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AliasingRun {
    pub sample_rate: f64,
    pub stiffness: f64,
    /// Fundamental of the momentum signal (Hz).
    pub fundamental: f64,
    /// In-band power away from the harmonics, relative to all in-band power.
    pub aliased_fraction: f64,
    pub max_iterations: usize,
    #[serde(skip)]
    pub spectrum: Option<Spectrum>,
}

/// Fraction of the power below `band_limit` that lies further than
/// `half_width` from every multiple of `f0`.
pub fn aliased_fraction(spectrum: &Spectrum, f0: f64, band_limit: f64, half_width: f64) -> f64 {
    let top = spectrum.bin_of(band_limit);
    let mut total = 0.0;
    let mut off = 0.0;
    for k in 0..=top {
        let f = spectrum.frequencies[k];
        let p = spectrum.power[k];
        total += p;
        let nearest = (f / f0).round() * f0;
        if (f - nearest).abs() > half_width {
            off += p;
        }
    }
    if total > 0.0 {
        off / total
    } else {
        0.0
    }
}

/// Run the lumped oscillator for every stiffness at every sample rate and
/// measure how much in-band power is not harmonic.
///
/// `template` supplies mass, contact law, barrier and gravity; its spring
/// stiffness and time step are replaced per run. The momentum signal is
/// analysed.
pub fn aliasing_sweep(
    template: &LumpedParams,
    initial_y: f64,
    initial_p: f64,
    stiffness_schedule: &[f64],
    sample_rates: &[f64],
    options: &SweepOptions,
) -> Result<Vec<AliasingRun>> {
    let jobs: Vec<(f64, f64)> = sample_rates
        .iter()
        .flat_map(|&fs| stiffness_schedule.iter().map(move |&k| (fs, k)))
        .collect();
    jobs.par_iter()
        .map(|&(fs, k)| {
            let params = LumpedParams {
                stiffness: k,
                dt: 1.0 / fs,
                ..*template
            };
            params.validate()?;
            let init = LumpedState::from_momentum(initial_y, initial_p, &params);
            let steps = (options.duration * fs).round() as usize;
            let traj = simulate(SchemeKind::Ec, &params, init, steps)?;
            let momentum = traj.momentum(&params);
            let signal = &momentum[1..];
            let spectrum = magnitude_spectrum(signal, fs)?;
            let f0 = fundamental_frequency(signal, fs)?.frequency;
            let fraction = aliased_fraction(
                &spectrum,
                f0,
                options.band_limit,
                options.harmonic_half_width_bins * spectrum.bin_width(),
            );
            let spectrum = options.keep_spectra.then(|| {
                let top = spectrum.bin_of(options.band_limit) + 1;
                Spectrum {
                    frequencies: spectrum.frequencies[..top].to_vec(),
                    magnitudes: spectrum.magnitudes[..top].to_vec(),
                    power: spectrum.power[..top].to_vec(),
                    ..spectrum
                }
            });
            Ok(AliasingRun {
                sample_rate: fs,
                stiffness: k,
                fundamental: f0,
                aliased_fraction: fraction,
                max_iterations: traj.max_iterations(),
                spectrum,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::ContactLaw;

    #[test]
    fn schedule_endpoints() {
        let s = fig5_stiffness_schedule(200);
        assert_eq!(s.len(), 200);
        assert!((s[0] - 30300.0).abs() < 1e-9);
        assert!((s[199] / 30000.0 - 1.01f64.powi(200)).abs() < 1e-9);
    }

    #[test]
    fn linear_oscillator_has_single_line() {
        let template = LumpedParams::new(0.001, 0.0, ContactLaw::none(), -0.05, 0.0, 1.0).unwrap();
        let runs = aliasing_sweep(
            &template,
            0.1,
            -0.1,
            &[4e5],
            &[44100.0],
            &SweepOptions {
                duration: 0.5,
                keep_spectra: true,
                ..SweepOptions::default()
            },
        )
        .unwrap();
        let run = &runs[0];
        let spec = run.spectrum.as_ref().unwrap();
        let (_, peak) = spec.peak();
        let omega = crate::lumped::warped_frequency((4e5f64 / 0.001).sqrt(), 1.0 / 44100.0);
        assert!((peak - omega / std::f64::consts::TAU).abs() < 2.0 * spec.bin_width());
        assert!(run.aliased_fraction < 1e-6, "{}", run.aliased_fraction);
    }
}
