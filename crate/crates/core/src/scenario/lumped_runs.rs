use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map};

use super::{max_abs, put, strided, NewtonStats, OutputDir, OutputOptions, Report, Scenario};
use crate::analysis::{
    aliasing_sweep, contact_interval, energy_error_series, fig5_stiffness_schedule,
    fundamental_frequency, magnitude_spectrum, preservation_metric, trend_slope, AliasingRun,
    SweepOptions,
};
use crate::contact::ContactLaw;
use crate::error::{Error, Result};
use crate::lumped::{simulate, LumpedParams, LumpedState, SchemeKind, Trajectory};

fn steps_for(duration: f64, sample_rate: f64) -> Result<usize> {
    if !(duration > 0.0 && sample_rate > 0.0 && duration.is_finite() && sample_rate.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "duration {duration} and sample rate {sample_rate} must be positive"
        )));
    }
    Ok((duration * sample_rate).round() as usize)
}

fn lumped_derived(report: &mut Report, params: &LumpedParams) {
    put(&mut report.derived, "xi", params.xi());
    put(&mut report.derived, "beta_c", params.beta_c());
    put(&mut report.derived, "dt", params.dt);
}

/// Mass thrown at a one-sided barrier, run with every scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LumpedComparison {
    pub mass: f64,
    pub stiffness: f64,
    pub contact_stiffness: f64,
    pub exponent: f64,
    pub barrier: f64,
    pub gravity: f64,
    pub initial_displacement: f64,
    pub initial_momentum: f64,
    pub sample_rate: f64,
    pub duration: f64,
    pub schemes: Vec<SchemeKind>,
}

impl Default for LumpedComparison {
    fn default() -> Self {
        Self {
            mass: 0.1,
            stiffness: 0.0,
            contact_stiffness: 5000.0,
            exponent: 1.0,
            barrier: 0.0,
            gravity: 0.0,
            initial_displacement: 0.1,
            initial_momentum: -0.2,
            sample_rate: 44_100.0,
            duration: 1.0,
            schemes: SchemeKind::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ComparisonOutcome {
    pub params: LumpedParams,
    pub runs: Vec<(SchemeKind, Trajectory)>,
    /// `e^n` per run.
    pub errors: Vec<Vec<f64>>,
    /// Contact interval of the first run.
    pub contact: Option<(usize, usize)>,
}

impl LumpedComparison {
    pub fn params(&self) -> Result<LumpedParams> {
        LumpedParams::new(
            self.mass,
            self.stiffness,
            ContactLaw::new(self.contact_stiffness, self.exponent)?,
            self.barrier,
            self.gravity,
            1.0 / self.sample_rate,
        )
    }

    pub fn simulate(&self) -> Result<ComparisonOutcome> {
        if self.schemes.is_empty() {
            return Err(Error::InvalidParameter("no schemes selected".into()));
        }
        let params = self.params()?;
        let steps = steps_for(self.duration, self.sample_rate)?;
        let init =
            LumpedState::from_momentum(self.initial_displacement, self.initial_momentum, &params);
        let runs: Vec<(SchemeKind, Trajectory)> = self
            .schemes
            .par_iter()
            .map(|&k| simulate(k, &params, init, steps).map(|t| (k, t)))
            .collect::<Result<_>>()?;
        let errors = runs
            .iter()
            .map(|(_, t)| {
                let h = t.total_energy();
                energy_error_series(&h, h[0])
            })
            .collect::<Result<Vec<_>>>()?;
        let contact = contact_interval(&runs[0].1.displacement(), params.barrier);
        Ok(ComparisonOutcome {
            params,
            runs,
            errors,
            contact,
        })
    }
}

/// Index and size of the largest single-step change of `e`.
fn largest_jump(e: &[f64]) -> (usize, f64) {
    e.windows(2)
        .enumerate()
        .map(|(n, w)| (n, (w[1] - w[0]).abs()))
        .fold((0, 0.0), |best, x| if x.1 > best.1 { x } else { best })
}

impl Scenario for LumpedComparison {
    fn oversample(&mut self, factor: f64) {
        self.sample_rate *= factor;
    }

    fn execute(&self, out: &mut OutputDir, options: &OutputOptions) -> Result<Report> {
        let outcome = self.simulate()?;
        let mut report = Report::default();
        lumped_derived(&mut report, &outcome.params);
        let mut per_scheme = Map::new();
        for ((kind, traj), e) in outcome.runs.iter().zip(&outcome.errors) {
            let (jump_step, jump) = largest_jump(e);
            put(&mut report.newton, kind.label(), NewtonStats::from_counts(&traj.iterations));
            put(&mut report.energy, kind.label(), json!({ "max_abs_error": max_abs(e) }));
            put(
                &mut per_scheme,
                kind.label(),
                json!({
                    "max_abs_error": max_abs(e),
                    "final_error": e.last(),
                    "largest_jump_step": jump_step,
                    "largest_jump": jump,
                }),
            );
        }
        put(&mut report.results, "schemes", per_scheme);
        put(&mut report.results, "contact_interval", outcome.contact);

        let dt = outcome.params.dt;
        let len = outcome.errors[0].len();
        let mut headers = vec!["time".to_string()];
        headers.extend(outcome.runs.iter().map(|(k, _)| format!("e_{}", k.label())));
        let headers: Vec<&str> = headers.iter().map(String::as_str).collect();
        if options.energy {
            out.write_csv(
                "energy.csv",
                &headers,
                (0..len).map(|n| {
                    let mut row = vec![n as f64 * dt];
                    row.extend(outcome.errors.iter().map(|e| e[n]));
                    row
                }),
            )?;
        }
        if options.trajectory {
            let ys: Vec<Vec<f64>> = outcome.runs.iter().map(|(_, t)| t.displacement()).collect();
            let mut headers = vec!["time".to_string()];
            headers.extend(outcome.runs.iter().map(|(k, _)| format!("y_{}", k.label())));
            let headers: Vec<&str> = headers.iter().map(String::as_str).collect();
            out.write_csv(
                "trajectory.csv",
                &headers,
                (0..len).map(|n| {
                    let mut row = vec![n as f64 * dt];
                    row.extend(ys.iter().map(|y| y[n]));
                    row
                }),
            )?;
        }
        Ok(report)
    }
}

/// Preservation metric over a grid of contact exponents and stiffnesses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreservationSweep {
    pub mass: f64,
    pub barrier: f64,
    pub initial_displacement: f64,
    pub initial_momentum: f64,
    pub sample_rate: f64,
    pub duration: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_count: usize,
    /// `β_c = k_c Δt² / (2m)`, log-spaced.
    pub beta_min: f64,
    pub beta_max: f64,
    pub beta_count: usize,
}

impl Default for PreservationSweep {
    fn default() -> Self {
        Self {
            mass: 0.1,
            barrier: 0.0,
            initial_displacement: 0.1,
            initial_momentum: -0.2,
            sample_rate: 44_100.0,
            duration: 1.0,
            alpha_min: 1.0,
            alpha_max: 3.0,
            alpha_count: 9,
            beta_min: 1e-3,
            beta_max: 1e3,
            beta_count: 13,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PreservationPoint {
    pub alpha: f64,
    pub beta_c: f64,
    pub contact_stiffness: f64,
    pub metric: f64,
    pub contact: (usize, usize),
    pub max_iterations: usize,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

impl PreservationSweep {
    pub fn grid(&self) -> Vec<(f64, f64)> {
        let alphas = linspace(self.alpha_min, self.alpha_max, self.alpha_count);
        let logs = linspace(self.beta_min.log10(), self.beta_max.log10(), self.beta_count);
        alphas
            .iter()
            .flat_map(|&a| logs.iter().map(move |&l| (a, 10f64.powf(l))))
            .collect()
    }

    pub fn simulate(&self) -> Result<Vec<PreservationPoint>> {
        if !(self.beta_min > 0.0 && self.beta_max >= self.beta_min) {
            return Err(Error::InvalidParameter("need 0 < beta_min <= beta_max".into()));
        }
        let steps = steps_for(self.duration, self.sample_rate)?;
        let dt = 1.0 / self.sample_rate;
        let xi = dt * dt / (2.0 * self.mass);
        self.grid()
            .par_iter()
            .map(|&(alpha, beta_c)| {
                let k_c = beta_c / xi;
                let params = LumpedParams::new(
                    self.mass,
                    0.0,
                    ContactLaw::new(k_c, alpha)?,
                    self.barrier,
                    0.0,
                    dt,
                )?;
                let init = LumpedState::from_momentum(
                    self.initial_displacement,
                    self.initial_momentum,
                    &params,
                );
                let traj = simulate(SchemeKind::Ec, &params, init, steps)?;
                let h = traj.total_energy();
                let contact = contact_interval(&traj.displacement(), params.barrier)
                    .ok_or_else(|| {
                        Error::EmptyInterval(format!("no contact for alpha {alpha}, beta_c {beta_c}"))
                    })?;
                Ok(PreservationPoint {
                    alpha,
                    beta_c,
                    contact_stiffness: k_c,
                    metric: preservation_metric(&h, h[0], contact)?,
                    contact,
                    max_iterations: traj.max_iterations(),
                })
            })
            .collect()
    }
}

impl Scenario for PreservationSweep {
    fn oversample(&mut self, factor: f64) {
        self.sample_rate *= factor;
    }

    fn execute(&self, out: &mut OutputDir, options: &OutputOptions) -> Result<Report> {
        let points = self.simulate()?;
        let mut report = Report::default();
        put(&mut report.derived, "dt", 1.0 / self.sample_rate);
        put(&mut report.derived, "xi", 0.5 / (self.sample_rate * self.sample_rate * self.mass));
        let worst = points.iter().fold(0.0_f64, |m, p| m.max(p.metric));
        put(&mut report.results, "max_metric", worst);
        put(&mut report.results, "grid_points", points.len());
        put(
            &mut report.newton,
            "sweep",
            json!({ "max": points.iter().map(|p| p.max_iterations).max() }),
        );
        if options.energy {
            out.write_csv(
                "preservation.csv",
                &["alpha", "beta_c", "contact_stiffness", "metric", "first_contact_step", "last_contact_step"],
                points.iter().map(|p| {
                    vec![
                        p.alpha,
                        p.beta_c,
                        p.contact_stiffness,
                        p.metric,
                        p.contact.0 as f64,
                        p.contact.1 as f64,
                    ]
                }),
            )?;
        }
        Ok(report)
    }
}

/// Ball dropped from rest onto a stiff floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BouncingBall {
    pub mass: f64,
    pub initial_height: f64,
    pub floor: f64,
    pub gravity: f64,
    pub contact_stiffness: f64,
    pub exponent: f64,
    pub sample_rate: f64,
    pub bounces: usize,
}

impl Default for BouncingBall {
    fn default() -> Self {
        Self {
            mass: 0.1,
            initial_height: 0.1,
            floor: 0.0,
            gravity: -9.81,
            contact_stiffness: 1e11,
            exponent: 3.5,
            sample_rate: 44_100.0,
            bounces: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BallOutcome {
    pub params: LumpedParams,
    pub trajectory: Trajectory,
    pub energy_error: Vec<f64>,
    /// `(time, height)` of each apex after a bounce.
    pub apexes: Vec<(f64, f64)>,
}

/// Vertices of the parabolas through every sampled local maximum.
pub(crate) fn interpolated_maxima(y: &[f64], dt: f64) -> Vec<(f64, f64)> {
    (1..y.len().saturating_sub(1))
        .filter(|&n| y[n - 1] < y[n] && y[n] >= y[n + 1])
        .map(|n| {
            let (a, b, c) = (y[n - 1], y[n], y[n + 1]);
            let denom = a - 2.0 * b + c;
            let offset = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
            ((n as f64 + offset) * dt, b - 0.25 * (a - c) * offset)
        })
        .collect()
}

impl BouncingBall {
    pub fn params(&self) -> Result<LumpedParams> {
        LumpedParams::new(
            self.mass,
            0.0,
            ContactLaw::new(self.contact_stiffness, self.exponent)?,
            self.floor,
            self.gravity,
            1.0 / self.sample_rate,
        )
    }

    pub fn simulate(&self) -> Result<BallOutcome> {
        let params = self.params()?;
        let drop = self.initial_height - self.floor;
        if !(drop > 0.0 && self.gravity < 0.0) {
            return Err(Error::InvalidParameter(
                "the ball must start above the floor with downward gravity".into(),
            ));
        }
        let period = 2.0 * (2.0 * drop / -self.gravity).sqrt();
        let steps = steps_for((self.bounces as f64 + 0.5) * period, self.sample_rate)?;
        let init = LumpedState::new(self.initial_height, 0.0);
        let trajectory = simulate(SchemeKind::Ec, &params, init, steps)?;
        let h = trajectory.total_energy();
        let energy_error = energy_error_series(&h, h[0])?;
        let apexes = interpolated_maxima(&trajectory.displacement(), params.dt);
        Ok(BallOutcome {
            params,
            trajectory,
            energy_error,
            apexes,
        })
    }
}

impl Scenario for BouncingBall {
    fn oversample(&mut self, factor: f64) {
        self.sample_rate *= factor;
    }

    fn execute(&self, out: &mut OutputDir, options: &OutputOptions) -> Result<Report> {
        let o = self.simulate()?;
        let mut report = Report::default();
        lumped_derived(&mut report, &o.params);
        put(&mut report.newton, "EC", NewtonStats::from_counts(&o.trajectory.iterations));
        put(&mut report.energy, "EC", json!({ "max_abs_error": max_abs(&o.energy_error) }));
        let rel: Vec<f64> = o
            .apexes
            .iter()
            .map(|(_, h)| (h - self.initial_height) / self.initial_height)
            .collect();
        put(&mut report.results, "apex_heights", o.apexes.iter().map(|a| a.1).collect::<Vec<_>>());
        put(&mut report.results, "max_relative_apex_deviation", max_abs(&rel));
        put(&mut report.results, "bounces_observed", o.apexes.len());
        let dt = o.params.dt;
        if options.trajectory {
            out.write_csv(
                "trajectory.csv",
                &["time", "y", "energy_error"],
                o.trajectory
                    .states
                    .iter()
                    .zip(&o.energy_error)
                    .map(|(s, e)| vec![s.n as f64 * dt, s.y, *e]),
            )?;
        }
        out.write_csv(
            "apex.csv",
            &["bounce", "time", "height", "relative_deviation"],
            o.apexes
                .iter()
                .zip(&rel)
                .enumerate()
                .map(|(i, ((t, h), r))| vec![(i + 1) as f64, *t, *h, *r]),
        )?;
        Ok(report)
    }
}

/// Harmonic oscillator whose swing is cut short by a stiff barrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OscillatorBarrier {
    pub mass: f64,
    pub stiffness: f64,
    pub barrier: f64,
    pub contact_stiffness: f64,
    pub exponent: f64,
    pub initial_displacement: f64,
    pub initial_momentum: f64,
    pub sample_rate: f64,
    pub duration: f64,
    /// Write every this many samples to the CSV files.
    pub stride: usize,
}

impl Default for OscillatorBarrier {
    fn default() -> Self {
        let omega = std::f64::consts::TAU * 440.0;
        Self {
            mass: 1.0,
            stiffness: omega * omega,
            barrier: 0.93e-3,
            contact_stiffness: 2.5e10,
            exponent: 2.0,
            initial_displacement: 2e-3,
            initial_momentum: 0.0,
            sample_rate: 44_100.0,
            duration: 10.0,
            stride: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OscillatorOutcome {
    pub params: LumpedParams,
    pub trajectory: Trajectory,
    pub energy_error: Vec<f64>,
    /// Least-squares slope of `e^n` per step.
    pub slope: f64,
    /// Standard deviation of `e^n`.
    pub spread: f64,
}

impl OscillatorBarrier {
    pub fn params(&self) -> Result<LumpedParams> {
        LumpedParams::new(
            self.mass,
            self.stiffness,
            ContactLaw::new(self.contact_stiffness, self.exponent)?,
            self.barrier,
            0.0,
            1.0 / self.sample_rate,
        )
    }

    pub fn simulate(&self) -> Result<OscillatorOutcome> {
        let params = self.params()?;
        let steps = steps_for(self.duration, self.sample_rate)?;
        let init =
            LumpedState::from_momentum(self.initial_displacement, self.initial_momentum, &params);
        let trajectory = simulate(SchemeKind::Ec, &params, init, steps)?;
        let h = trajectory.total_energy();
        let energy_error = energy_error_series(&h, h[0])?;
        let slope = trend_slope(&energy_error);
        let mean = energy_error.iter().sum::<f64>() / energy_error.len() as f64;
        let spread = (energy_error.iter().map(|e| (e - mean).powi(2)).sum::<f64>()
            / energy_error.len() as f64)
            .sqrt();
        Ok(OscillatorOutcome {
            params,
            trajectory,
            energy_error,
            slope,
            spread,
        })
    }
}

impl Scenario for OscillatorBarrier {
    fn oversample(&mut self, factor: f64) {
        self.sample_rate *= factor;
    }

    fn execute(&self, out: &mut OutputDir, options: &OutputOptions) -> Result<Report> {
        let o = self.simulate()?;
        let mut report = Report::default();
        lumped_derived(&mut report, &o.params);
        put(&mut report.newton, "EC", NewtonStats::from_counts(&o.trajectory.iterations));
        put(&mut report.energy, "EC", json!({ "max_abs_error": max_abs(&o.energy_error) }));
        let n = o.energy_error.len();
        put(&mut report.results, "error_slope_per_step", o.slope);
        put(&mut report.results, "error_drift_over_run", o.slope * n as f64);
        put(&mut report.results, "error_std", o.spread);
        let momentum = o.trajectory.momentum(&o.params);
        match fundamental_frequency(&momentum[1..], self.sample_rate) {
            Ok(p) => put(&mut report.results, "fundamental_hz", p.frequency),
            Err(e) => put(&mut report.results, "fundamental_error", e.to_string()),
        }
        let dt = o.params.dt;
        if options.energy {
            out.write_csv(
                "energy.csv",
                &["time", "energy_error"],
                strided(n, self.stride).map(|i| vec![i as f64 * dt, o.energy_error[i]]),
            )?;
        }
        if options.trajectory {
            out.write_csv(
                "trajectory.csv",
                &["time", "y", "p"],
                strided(n, self.stride)
                    .map(|i| vec![i as f64 * dt, o.trajectory.states[i].y, momentum[i]]),
            )?;
        }
        if options.spectra {
            let spec = magnitude_spectrum(&momentum[1..], self.sample_rate)?;
            let top = spec.bin_of(20_000.0f64.min(0.5 * self.sample_rate));
            out.write_csv(
                "spectrum.csv",
                &["frequency", "magnitude_db"],
                (0..=top).map(|k| vec![spec.frequencies[k], spec.magnitudes[k]]),
            )?;
        }
        Ok(report)
    }
}

/// Stiffness sweep of the lumped oscillator at several sample rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AliasingExperiment {
    pub mass: f64,
    pub contact_stiffness: f64,
    pub exponent: f64,
    pub barrier: f64,
    pub initial_displacement: f64,
    pub initial_momentum: f64,
    /// Number of spring stiffnesses `30000 · 1.01^k`.
    pub count: usize,
    pub sample_rates: Vec<f64>,
    pub duration: f64,
    pub band_limit: f64,
    pub harmonic_half_width_bins: f64,
    /// Frequency resolution of the written spectra (Hz).
    pub spectrum_resolution: f64,
}

impl Default for AliasingExperiment {
    fn default() -> Self {
        Self {
            mass: 0.001,
            contact_stiffness: 2e10,
            exponent: 2.3,
            barrier: -0.05,
            initial_displacement: 0.1,
            initial_momentum: -0.1,
            count: 200,
            sample_rates: vec![44_100.0, 176_400.0],
            duration: 1.0,
            band_limit: 20_000.0,
            harmonic_half_width_bins: 6.0,
            spectrum_resolution: 10.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AliasingOutcome {
    pub runs: Vec<AliasingRun>,
    /// Mean aliased fraction per sample rate, in `sample_rates` order.
    pub aliased: Vec<f64>,
}

impl AliasingOutcome {
    /// Mean aliased fraction at `rates[0]` over that at `rates[i]`, in dB.
    pub fn reduction_db(&self, i: usize) -> f64 {
        10.0 * (self.aliased[0] / self.aliased[i]).log10()
    }
}

impl AliasingExperiment {
    pub fn simulate(&self, keep_spectra: bool) -> Result<AliasingOutcome> {
        if self.sample_rates.is_empty() || self.count == 0 {
            return Err(Error::InvalidParameter(
                "the sweep needs at least one sample rate and one stiffness".into(),
            ));
        }
        let template = LumpedParams::new(
            self.mass,
            0.0,
            ContactLaw::new(self.contact_stiffness, self.exponent)?,
            self.barrier,
            0.0,
            1.0 / self.sample_rates[0],
        )?;
        let runs = aliasing_sweep(
            &template,
            self.initial_displacement,
            self.initial_momentum,
            &fig5_stiffness_schedule(self.count),
            &self.sample_rates,
            &SweepOptions {
                duration: self.duration,
                band_limit: self.band_limit,
                harmonic_half_width_bins: self.harmonic_half_width_bins,
                keep_spectra,
            },
        )?;
        let aliased = self
            .sample_rates
            .iter()
            .map(|&fs| {
                let of_rate: Vec<f64> = runs
                    .iter()
                    .filter(|r| r.sample_rate == fs)
                    .map(|r| r.aliased_fraction)
                    .collect();
                of_rate.iter().sum::<f64>() / of_rate.len() as f64
            })
            .collect();
        Ok(AliasingOutcome { runs, aliased })
    }
}

impl Scenario for AliasingExperiment {
    fn oversample(&mut self, factor: f64) {
        for fs in &mut self.sample_rates {
            *fs *= factor;
        }
    }

    fn execute(&self, out: &mut OutputDir, options: &OutputOptions) -> Result<Report> {
        let o = self.simulate(options.spectra)?;
        let mut report = Report::default();
        put(&mut report.derived, "sample_rates", &self.sample_rates);
        let mut by_rate = Map::new();
        for (i, fs) in self.sample_rates.iter().enumerate() {
            put(
                &mut by_rate,
                &format!("{fs}"),
                json!({
                    "mean_aliased_fraction": o.aliased[i],
                    "reduction_db_vs_first": o.reduction_db(i),
                }),
            );
        }
        put(&mut report.results, "by_sample_rate", by_rate);
        put(
            &mut report.newton,
            "sweep",
            json!({ "max": o.runs.iter().map(|r| r.max_iterations).max() }),
        );
        out.write_csv(
            "aliasing.csv",
            &["sample_rate", "stiffness", "fundamental", "aliased_fraction"],
            o.runs
                .iter()
                .map(|r| vec![r.sample_rate, r.stiffness, r.fundamental, r.aliased_fraction]),
        )?;
        if options.spectra {
            for fs in &self.sample_rates {
                let rows = o
                    .runs
                    .iter()
                    .filter(|r| r.sample_rate == *fs)
                    .filter_map(|r| r.spectrum.as_ref().map(|s| (r.stiffness, s)))
                    .flat_map(|(k, s)| {
                        let per = (self.spectrum_resolution / s.bin_width()).round().max(1.0) as usize;
                        s.magnitudes
                            .chunks(per)
                            .enumerate()
                            .map(move |(c, m)| {
                                let level = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                                vec![k, (c * per) as f64 * s.bin_width(), level]
                            })
                            .collect::<Vec<_>>()
                    });
                out.write_csv(
                    &format!("spectra_{}.csv", fs.round() as u64),
                    &["stiffness", "frequency", "magnitude_db"],
                    rows,
                )?;
            }
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maxima_of_sampled_parabola_are_exact() {
        let dt = 0.01;
        let y: Vec<f64> = (0..50)
            .map(|n| {
                let t = n as f64 * dt;
                1.5 - 4.0 * (t - 0.2337).powi(2)
            })
            .collect();
        let m = interpolated_maxima(&y, dt);
        assert_eq!(m.len(), 1);
        assert!((m[0].0 - 0.2337).abs() < 1e-12);
        assert!((m[0].1 - 1.5).abs() < 1e-14);
    }

    #[test]
    fn sweep_grid_shape() {
        let s = PreservationSweep::default();
        let g = s.grid();
        assert_eq!(g.len(), 9 * 13);
        assert_eq!(g[0], (1.0, 1e-3));
        assert!((g.last().unwrap().1 - 1e3).abs() < 1e-9);
        assert_eq!(linspace(0.0, 1.0, 1), vec![0.0]);
    }

    #[test]
    fn short_comparison_runs() {
        let c = LumpedComparison {
            duration: 0.2,
            ..Default::default()
        };
        let o = c.simulate().unwrap();
        assert_eq!(o.runs.len(), 4);
        assert!(o.contact.is_some());
        assert!(max_abs(&o.errors[0]) < 1e-13);
    }
}
