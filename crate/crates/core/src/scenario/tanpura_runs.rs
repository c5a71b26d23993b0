use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{put, NewtonStats, OutputDir, OutputOptions, Report, Scenario};
use crate::analysis::{
    fundamental_frequency, magnitude_spectrum, max_step_error, spectrogram, Spectrogram, Spectrum,
};
use crate::distributed::{initial_condition, InitialShape, StringParams};
use crate::error::{Error, Result};
use crate::tanpura::{simulate_tanpura, Recording, TanpuraConfig, TanpuraTrajectory};

fn tanpura_derived(report: &mut Report, cfg: &TanpuraConfig, p: &StringParams) -> Result<()> {
    let bridge = cfg.bridge(p)?;
    put(&mut report.derived, "dt", p.dt);
    put(&mut report.derived, "dx", p.dx);
    put(&mut report.derived, "n", p.n);
    put(&mut report.derived, "beta2", p.beta2());
    put(&mut report.derived, "beta4", p.beta4());
    put(&mut report.derived, "beta_b", bridge.beta_b(p));
    put(&mut report.derived, "bridge_points", bridge.positions.len());
    Ok(())
}

/// Local maxima below `max_freq` within `threshold_db` of the largest bin.
pub fn count_peaks(spectrum: &Spectrum, max_freq: f64, threshold_db: f64) -> usize {
    let top = spectrum.bin_of(max_freq).min(spectrum.magnitudes.len() - 2);
    let m = &spectrum.magnitudes;
    (1..=top)
        .filter(|&k| m[k] >= threshold_db && m[k] > m[k - 1] && m[k] >= m[k + 1])
        .count()
}

/// Tanpura string started in the shape of its first mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TanpuraMode1 {
    pub tanpura: TanpuraConfig,
    pub amplitude: f64,
    /// Simulated length in periods of the ideal string.
    pub periods: usize,
    /// Snapshots kept per period within the periods in `snapshot_periods`.
    pub snapshots_per_period: usize,
    /// 1-based periods whose snapshots are written.
    pub snapshot_periods: Vec<usize>,
    /// Length of each harmonic-count window, in periods.
    pub analysis_periods: usize,
    pub harmonic_threshold_db: f64,
    pub max_frequency: f64,
}

impl Default for TanpuraMode1 {
    fn default() -> Self {
        Self {
            tanpura: TanpuraConfig::default(),
            amplitude: 0.002,
            periods: 33,
            snapshots_per_period: 8,
            snapshot_periods: vec![1, 17, 33],
            analysis_periods: 12,
            harmonic_threshold_db: -40.0,
            max_frequency: 10_000.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mode1Outcome {
    pub params: StringParams,
    pub trajectory: TanpuraTrajectory,
    /// Steps per period of the ideal string.
    pub period_steps: f64,
    /// `(first period, peak count)` of consecutive analysis windows.
    pub harmonic_counts: Vec<(usize, usize)>,
}

impl TanpuraMode1 {
    pub fn simulate(&self) -> Result<Mode1Outcome> {
        if self.analysis_periods == 0 || self.analysis_periods > self.periods {
            return Err(Error::InvalidParameter(format!(
                "analysis window of {} periods does not fit in {}",
                self.analysis_periods, self.periods
            )));
        }
        let model = self.tanpura.build()?;
        let params = model.params;
        let period_steps = self.tanpura.sample_rate / params.ideal_fundamental();
        let steps = (self.periods as f64 * period_steps).round() as usize;
        let every = ((period_steps / self.snapshots_per_period.max(1) as f64).round() as usize).max(1);
        let init = initial_condition(
            &InitialShape::SineMode {
                amplitude: self.amplitude,
                mode: 1,
            },
            &params,
        )?;
        let mut trajectory = simulate_tanpura(
            &model,
            init,
            steps,
            Recording {
                snapshot_every: every,
            },
        )?;
        let period_of = |n: usize| (n as f64 / period_steps).floor() as usize + 1;
        trajectory
            .snapshots
            .retain(|(n, _)| self.snapshot_periods.contains(&period_of(*n)));

        // windows at the start, middle and end of the run
        let last_start = self.periods - self.analysis_periods;
        let starts = [0, last_start / 2, last_start];
        let harmonic_counts = starts
            .iter()
            .map(|&start| {
                let a = (start as f64 * period_steps).round() as usize;
                let b = ((start + self.analysis_periods) as f64 * period_steps).round() as usize;
                let spec = magnitude_spectrum(
                    &trajectory.nut_force[a..b.min(trajectory.nut_force.len())],
                    self.tanpura.sample_rate,
                )?;
                Ok((start + 1, count_peaks(&spec, self.max_frequency, self.harmonic_threshold_db)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Mode1Outcome {
            params,
            trajectory,
            period_steps,
            harmonic_counts,
        })
    }
}

impl Scenario for TanpuraMode1 {
    fn oversample(&mut self, factor: f64) {
        self.tanpura.sample_rate *= factor;
    }

    fn execute(&self, out: &mut OutputDir, options: &OutputOptions) -> Result<Report> {
        let o = self.simulate()?;
        let mut report = Report::default();
        tanpura_derived(&mut report, &self.tanpura, &o.params)?;
        let t = &o.trajectory;
        put(&mut report.newton, "EC", NewtonStats::from_counts(&t.iterations));
        put(
            &mut report.energy,
            "EC",
            json!({
                "max_step_error": max_step_error(&t.energy, t.energy[0])?,
                "final_over_initial": t.energy.last().copied().unwrap_or(0.0) / t.energy[0],
            }),
        );
        put(&mut report.results, "max_compression", t.max_compression);
        put(&mut report.results, "harmonic_counts", &o.harmonic_counts);
        let dt = o.params.dt;
        let fs = self.tanpura.sample_rate;
        out.write_csv(
            "nut_force.csv",
            &["time", "nut_force"],
            t.nut_force.iter().enumerate().map(|(n, f)| vec![n as f64 * dt, *f]),
        )?;
        if options.audio {
            let gain = out.write_wav("nut.wav", &t.nut_force, fs)?;
            put(&mut report.results, "nut_wav_gain", gain);
        }
        if options.trajectory {
            let xs = o.params.positions();
            out.write_csv(
                "snapshots.csv",
                &["period", "time", "x", "y"],
                t.snapshots.iter().flat_map(|(n, y)| {
                    let period = (*n as f64 / o.period_steps).floor() + 1.0;
                    let time = *n as f64 * dt;
                    xs.iter().zip(y).map(move |(x, y)| vec![period, time, *x, *y])
                }),
            )?;
        }
        if options.energy {
            out.write_csv(
                "energy.csv",
                &["time", "total"],
                t.energy.iter().enumerate().map(|(n, h)| vec![n as f64 * dt, *h]),
            )?;
        }
        Ok(report)
    }
}

/// Mid-string pluck, with and without the bridge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TanpuraPluck {
    pub tanpura: TanpuraConfig,
    pub amplitude: f64,
    /// Pluck position as a fraction of the length.
    pub pluck_position: f64,
    pub duration: f64,
    /// Also run the same string with the bridge removed.
    pub companion: bool,
    pub window_len: usize,
    pub hop: usize,
    pub max_frequency: f64,
    pub centroid_low: f64,
    pub centroid_high: f64,
    /// Times at which the level at twice the fundamental is reported (s).
    pub check_times: Vec<f64>,
}

impl Default for TanpuraPluck {
    fn default() -> Self {
        Self {
            tanpura: TanpuraConfig::default(),
            amplitude: 0.002,
            pluck_position: 0.5,
            duration: 1.0,
            companion: true,
            window_len: 4096,
            hop: 1024,
            max_frequency: 10_000.0,
            centroid_low: 2_000.0,
            centroid_high: 8_000.0,
            check_times: vec![0.05, 0.1, 0.15, 0.2],
        }
    }
}

/// Analysis of one pluck run.
#[derive(Debug, Clone)]
pub struct PluckRun {
    pub trajectory: TanpuraTrajectory,
    pub spectrogram: Spectrogram,
    /// Measured fundamental of the nut force (Hz).
    pub fundamental: f64,
    /// Whether `fundamental` fell back to the ideal string value.
    pub fundamental_fallback: bool,
}

impl PluckRun {
    /// Level of the bin nearest `2 f0` relative to the loudest bin of the
    /// frame at `t` (dB).
    pub fn second_harmonic_level(&self, t: f64) -> f64 {
        let sg = &self.spectrogram;
        let frame = sg.frame_at(t);
        let top = sg.magnitudes[frame].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        sg.magnitudes[frame][sg.bin_of(2.0 * self.fundamental)] - top
    }
}

#[derive(Debug, Clone)]
pub struct PluckOutcome {
    pub params: StringParams,
    pub bridged: PluckRun,
    pub open: Option<PluckRun>,
}

impl TanpuraPluck {
    fn run(&self, cfg: &TanpuraConfig) -> Result<PluckRun> {
        let model = cfg.build()?;
        let params = model.params;
        let init = initial_condition(
            &InitialShape::TrianglePluck {
                amplitude: self.amplitude,
                peak: self.pluck_position * cfg.length,
            },
            &params,
        )?;
        let steps = (self.duration * cfg.sample_rate).round() as usize;
        let trajectory = simulate_tanpura(&model, init, steps, Recording::default())?;
        let spectrogram = spectrogram(&trajectory.nut_force, cfg.sample_rate, self.window_len, self.hop)?;
        let (fundamental, fundamental_fallback) =
            match fundamental_frequency(&trajectory.nut_force, cfg.sample_rate) {
                Ok(p) => (p.frequency, false),
                Err(_) => (params.ideal_fundamental(), true),
            };
        Ok(PluckRun {
            trajectory,
            spectrogram,
            fundamental,
            fundamental_fallback,
        })
    }

    pub fn simulate(&self) -> Result<PluckOutcome> {
        let params = self.tanpura.string_params()?;
        let open_cfg = TanpuraConfig {
            k_b: 0.0,
            ..self.tanpura
        };
        let (bridged, open) = rayon::join(
            || self.run(&self.tanpura),
            || self.companion.then(|| self.run(&open_cfg)).transpose(),
        );
        Ok(PluckOutcome {
            params,
            bridged: bridged?,
            open: open?,
        })
    }
}

fn write_spectrogram(out: &mut OutputDir, name: &str, sg: &Spectrogram, max_freq: f64) -> Result<()> {
    let top = sg.bin_of(max_freq);
    out.write_csv(
        name,
        &["time", "frequency", "magnitude_db"],
        sg.times.iter().zip(&sg.magnitudes).flat_map(|(t, frame)| {
            (0..=top).map(move |k| vec![*t, sg.frequencies[k], frame[k]])
        }),
    )?;
    Ok(())
}

impl Scenario for TanpuraPluck {
    fn oversample(&mut self, factor: f64) {
        self.tanpura.sample_rate *= factor;
    }

    fn execute(&self, out: &mut OutputDir, options: &OutputOptions) -> Result<Report> {
        let o = self.simulate()?;
        let mut report = Report::default();
        tanpura_derived(&mut report, &self.tanpura, &o.params)?;
        let fs = self.tanpura.sample_rate;
        let runs = std::iter::once(("bridge", &o.bridged)).chain(o.open.as_ref().map(|r| ("open", r)));
        for (name, run) in runs {
            let t = &run.trajectory;
            put(&mut report.newton, name, NewtonStats::from_counts(&t.iterations));
            put(
                &mut report.energy,
                name,
                json!({ "final_over_initial": t.energy.last().copied().unwrap_or(0.0) / t.energy[0] }),
            );
            let levels: Vec<(f64, f64)> = self
                .check_times
                .iter()
                .map(|&time| (time, run.second_harmonic_level(time)))
                .collect();
            let centroid = run.spectrogram.centroid_track(self.centroid_low, self.centroid_high);
            put(
                &mut report.results,
                name,
                json!({
                    "fundamental_hz": run.fundamental,
                    "fundamental_fallback": run.fundamental_fallback,
                    "max_compression": t.max_compression,
                    "second_harmonic_db": levels,
                }),
            );
            if options.audio {
                let gain = out.write_wav(&format!("nut_{name}.wav"), &t.nut_force, fs)?;
                put(&mut report.results, &format!("nut_{name}_wav_gain"), gain);
            }
            if options.spectra {
                write_spectrogram(out, &format!("spectrogram_{name}.csv"), &run.spectrogram, self.max_frequency)?;
                out.write_csv(
                    &format!("centroid_{name}.csv"),
                    &["time", "centroid"],
                    run.spectrogram.times.iter().zip(&centroid).map(|(t, c)| vec![*t, *c]),
                )?;
            }
            if options.trajectory {
                let dt = o.params.dt;
                out.write_csv(
                    &format!("nut_force_{name}.csv"),
                    &["time", "nut_force"],
                    t.nut_force.iter().enumerate().map(|(n, f)| vec![n as f64 * dt, *f]),
                )?;
            }
        }
        Ok(report)
    }
}
