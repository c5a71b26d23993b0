use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Magnitudes below this are clamped.
pub const DB_FLOOR: f64 = -200.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Rectangular,
    Hann,
    /// 4-term Blackman-Harris, sidelobes near -92 dB.
    BlackmanHarris,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        if len <= 1 {
            return vec![1.0; len];
        }
        let n = len as f64;
        let tau = std::f64::consts::TAU;
        (0..len)
            .map(|i| {
                // periodic form
                let x = tau * i as f64 / n;
                match self {
                    Window::Rectangular => 1.0,
                    Window::Hann => 0.5 - 0.5 * x.cos(),
                    Window::BlackmanHarris => {
                        0.35875 - 0.48829 * x.cos() + 0.14128 * (2.0 * x).cos()
                            - 0.01168 * (3.0 * x).cos()
                    }
                }
            })
            .collect()
    }
}

/// One-sided magnitude spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    /// Bin frequencies (Hz), strictly increasing from 0.
    pub frequencies: Vec<f64>,
    /// dB relative to the largest bin, clamped at [`DB_FLOOR`].
    pub magnitudes: Vec<f64>,
    /// Squared magnitude relative to the largest bin.
    pub power: Vec<f64>,
    pub window: Window,
    pub fft_len: usize,
    pub sample_rate: f64,
}

impl Spectrum {
    pub fn bin_width(&self) -> f64 {
        self.sample_rate / self.fft_len as f64
    }

    /// Index of the bin nearest `freq`.
    pub fn bin_of(&self, freq: f64) -> usize {
        ((freq / self.bin_width()).round().max(0.0) as usize).min(self.frequencies.len() - 1)
    }

    /// Index and frequency of the largest bin above DC.
    pub fn peak(&self) -> (usize, f64) {
        let i = (1..self.power.len())
            .max_by(|&a, &b| self.power[a].total_cmp(&self.power[b]))
            .unwrap_or(0);
        (i, self.frequencies[i])
    }
}

pub fn to_db(power_ratio: f64) -> f64 {
    if power_ratio > 0.0 {
        (10.0 * power_ratio.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

/// Raw `|X_k|²` for `k = 0..=fft_len/2` of the windowed, zero-padded signal.
fn power_bins(signal: &[f64], window: Window, fft_len: usize, planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let taper = window.coefficients(signal.len());
    let mut buf: Vec<Complex<f64>> = signal
        .iter()
        .zip(&taper)
        .map(|(x, w)| Complex::new(x * w, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(fft_len)
        .collect();
    planner.plan_fft_forward(fft_len).process(&mut buf);
    buf[..=fft_len / 2].iter().map(|c| c.norm_sqr()).collect()
}

/// Blackman-Harris windowed spectrum of the whole signal, no padding.
pub fn magnitude_spectrum(signal: &[f64], sample_rate: f64) -> Result<Spectrum> {
    magnitude_spectrum_with(signal, sample_rate, Window::BlackmanHarris, signal.len())
}

pub fn magnitude_spectrum_with(
    signal: &[f64],
    sample_rate: f64,
    window: Window,
    fft_len: usize,
) -> Result<Spectrum> {
    if signal.len() < 2 {
        return Err(Error::InvalidParameter(
            "spectrum needs at least two samples".into(),
        ));
    }
    if fft_len < signal.len() {
        return Err(Error::InvalidParameter(format!(
            "FFT length {fft_len} shorter than signal ({})",
            signal.len()
        )));
    }
    if !(sample_rate > 0.0) {
        return Err(Error::InvalidParameter("sample rate must be positive".into()));
    }
    let raw = power_bins(signal, window, fft_len, &mut FftPlanner::new());
    let peak = raw.iter().copied().fold(0.0, f64::max);
    let power: Vec<f64> = raw
        .iter()
        .map(|p| if peak > 0.0 { p / peak } else { 0.0 })
        .collect();
    Ok(Spectrum {
        frequencies: (0..power.len())
            .map(|k| k as f64 * sample_rate / fft_len as f64)
            .collect(),
        magnitudes: power.iter().map(|&p| to_db(p)).collect(),
        power,
        window,
        fft_len,
        sample_rate,
    })
}

/// Short-time spectra in dB relative to the largest bin of any frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrogram {
    /// Frame centres (s).
    pub times: Vec<f64>,
    pub frequencies: Vec<f64>,
    /// `magnitudes[frame][bin]`
    pub magnitudes: Vec<Vec<f64>>,
    pub window_len: usize,
    pub hop: usize,
    pub sample_rate: f64,
}

impl Spectrogram {
    pub fn bin_of(&self, freq: f64) -> usize {
        let width = self.sample_rate / self.window_len as f64;
        ((freq / width).round().max(0.0) as usize).min(self.frequencies.len() - 1)
    }

    /// Index of the last frame centred at or before `t`.
    pub fn frame_at(&self, t: f64) -> usize {
        self.times.iter().rposition(|&c| c <= t).unwrap_or(0)
    }

    /// Largest level (dB) within `±half_width` Hz of `freq` in `frame`.
    pub fn level_near(&self, frame: usize, freq: f64, half_width: f64) -> f64 {
        let lo = self.bin_of(freq - half_width);
        let hi = self.bin_of(freq + half_width);
        self.magnitudes[frame][lo..=hi]
            .iter()
            .copied()
            .fold(DB_FLOOR, f64::max)
    }

    /// Amplitude-weighted mean frequency of each frame within `[lo, hi]` Hz.
    pub fn centroid_track(&self, lo: f64, hi: f64) -> Vec<f64> {
        let (a, b) = (self.bin_of(lo), self.bin_of(hi));
        self.magnitudes
            .iter()
            .map(|frame| {
                let mut num = 0.0;
                let mut den = 0.0;
                for k in a..=b {
                    let amp = 10f64.powf(frame[k] / 20.0);
                    num += amp * self.frequencies[k];
                    den += amp;
                }
                if den > 0.0 {
                    num / den
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Hann-windowed short-time Fourier transform.
pub fn spectrogram(
    signal: &[f64],
    sample_rate: f64,
    window_len: usize,
    hop: usize,
) -> Result<Spectrogram> {
    if hop == 0 || window_len < hop {
        return Err(Error::InvalidParameter(format!(
            "need window_len >= hop >= 1, got {window_len} and {hop}"
        )));
    }
    if signal.len() < window_len {
        return Err(Error::InvalidParameter(format!(
            "signal ({} samples) shorter than the window ({window_len})",
            signal.len()
        )));
    }
    let mut planner = FftPlanner::new();
    let frames: Vec<Vec<f64>> = (0..=(signal.len() - window_len) / hop)
        .map(|f| power_bins(&signal[f * hop..f * hop + window_len], Window::Hann, window_len, &mut planner))
        .collect();
    let peak = frames
        .iter()
        .flat_map(|f| f.iter().copied())
        .fold(0.0, f64::max);
    let magnitudes = frames
        .iter()
        .map(|f| {
            f.iter()
                .map(|&p| if peak > 0.0 { to_db(p / peak) } else { DB_FLOOR })
                .collect()
        })
        .collect();
    Ok(Spectrogram {
        times: (0..frames.len())
            .map(|f| (f * hop) as f64 / sample_rate + 0.5 * window_len as f64 / sample_rate)
            .collect(),
        frequencies: (0..=window_len / 2)
            .map(|k| k as f64 * sample_rate / window_len as f64)
            .collect(),
        magnitudes,
        window_len,
        hop,
        sample_rate,
    })
}

/// Amplitude-weighted mean frequency of `spectrum` within `[lo, hi]` Hz.
pub fn spectral_centroid(spectrum: &Spectrum, lo: f64, hi: f64) -> f64 {
    let (a, b) = (spectrum.bin_of(lo), spectrum.bin_of(hi));
    let mut num = 0.0;
    let mut den = 0.0;
    for k in a..=b {
        let amp = spectrum.power[k].sqrt();
        num += amp * spectrum.frequencies[k];
        den += amp;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;

    fn sine(freq: f64, fs: f64, len: usize) -> Vec<f64> {
        (0..len).map(|n| (TAU * freq * n as f64 / fs).sin()).collect()
    }

    #[test]
    fn sine_at_bin_centre_has_one_dominant_bin() {
        let fs = 1024.0;
        let s = magnitude_spectrum_with(&sine(64.0, fs, 1024), fs, Window::Rectangular, 1024).unwrap();
        assert_eq!(s.peak().0, 64);
        let others = s
            .magnitudes
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != 64)
            .fold(DB_FLOOR, |m, (_, v)| m.max(*v));
        assert!(others < -150.0, "{others}");
        assert!(s.magnitudes.iter().all(|m| *m <= 0.0));
        assert!(s.frequencies.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn zero_signal_is_floor() {
        let s = magnitude_spectrum(&[0.0; 64], 100.0).unwrap();
        assert!(s.magnitudes.iter().all(|m| *m == DB_FLOOR));
        assert!(magnitude_spectrum(&[1.0], 100.0).is_err());
    }

    #[test]
    fn scaling_does_not_change_spectrum() {
        let x = sine(37.3, 1000.0, 500);
        let y: Vec<f64> = x.iter().map(|v| -250.0 * v).collect();
        let a = magnitude_spectrum(&x, 1000.0).unwrap();
        let b = magnitude_spectrum(&y, 1000.0).unwrap();
        for (u, v) in a.magnitudes.iter().zip(&b.magnitudes) {
            assert_relative_eq!(u, v, epsilon = 1e-6);
        }
    }

    #[test]
    fn stationary_sine_gives_constant_ridge() {
        let fs = 8000.0;
        let sg = spectrogram(&sine(1000.0, fs, 8000), fs, 256, 64).unwrap();
        let bin = sg.bin_of(1000.0);
        for frame in &sg.magnitudes {
            let (k, _) = frame
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap();
            assert_eq!(k, bin);
        }
        assert!(spectrogram(&[0.0; 10], fs, 4, 8).is_err());
    }

    #[test]
    fn centroid_of_single_tone() {
        let fs = 1024.0;
        let s = magnitude_spectrum_with(&sine(100.0, fs, 1024), fs, Window::Rectangular, 1024).unwrap();
        assert_relative_eq!(spectral_centroid(&s, 50.0, 150.0), 100.0, max_relative = 1e-6);
    }
}
