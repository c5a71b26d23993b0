use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{max_abs, put, strided, NewtonStats, OutputDir, OutputOptions, Report, Scenario};
use crate::analysis::{
    energy_error_series, fundamental_frequency, max_step_error, positive_episodes,
    repetition_frequency,
};
use crate::contact::ContactLaw;
use crate::distributed::{
    initial_condition, BarrierProfile, BoundaryCondition, ContactTerm, EnergyBreakdown,
    GridState, InitialShape, NoContact, StringModel, StringParams, StringRun,
};
use crate::error::{Error, Result};

/// Everything recorded from one distributed run.
#[derive(Debug, Clone, Default)]
pub struct StringRecord {
    /// Energy at steps `0..=n_steps`.
    pub energies: Vec<EnergyBreakdown>,
    /// Displacement of one state entry at steps `0..=n_steps`.
    pub probe: Vec<f64>,
    pub iterations: Vec<usize>,
    pub max_compression: f64,
    /// `(step, displacement)` pairs.
    pub snapshots: Vec<(usize, Vec<f64>)>,
}

impl StringRecord {
    pub fn total_energy(&self) -> Vec<f64> {
        self.energies.iter().map(|e| e.total).collect()
    }

    pub fn contact_energy(&self) -> Vec<f64> {
        self.energies.iter().map(|e| e.contact_potential).collect()
    }
}

pub(crate) fn record_run<C: ContactTerm>(
    model: &StringModel<C>,
    initial: GridState,
    n_steps: usize,
    probe: usize,
    snapshot_every: usize,
) -> Result<StringRecord> {
    if probe >= model.dim() {
        return Err(Error::InvalidParameter(format!(
            "probe entry {probe} outside a state of {}",
            model.dim()
        )));
    }
    let mut run = StringRun::new(model, initial)?;
    let mut rec = StringRecord {
        energies: Vec::with_capacity(n_steps + 1),
        probe: Vec::with_capacity(n_steps + 1),
        iterations: Vec::with_capacity(n_steps),
        ..Default::default()
    };
    let keep = |run: &StringRun<C>, rec: &mut StringRecord| {
        let state = run.state();
        rec.energies.push(run.energy());
        rec.probe.push(state.y[probe]);
        rec.max_compression = rec
            .max_compression
            .max(model.contact.max_compression(&state.y));
        if snapshot_every > 0 && state.n.is_multiple_of(snapshot_every) {
            rec.snapshots.push((state.n, state.y.clone()));
        }
    };
    keep(&run, &mut rec);
    for _ in 0..n_steps {
        rec.iterations.push(run.step()?.iterations);
        keep(&run, &mut rec);
    }
    Ok(rec)
}

fn nearest_entry(params: &StringParams, x: f64) -> Result<usize> {
    let m = (x / params.dx).round() as usize;
    params
        .unknown_of(m)
        .ok_or_else(|| Error::InvalidParameter(format!("no unknown at x = {x}")))
}

fn string_derived(report: &mut Report, p: &StringParams, law: &ContactLaw) {
    put(&mut report.derived, "zeta", p.zeta(law));
    put(&mut report.derived, "dt", p.dt);
    put(&mut report.derived, "dx", p.dx);
    put(&mut report.derived, "n", p.n);
    put(&mut report.derived, "unknowns", p.unknowns());
    put(&mut report.derived, "beta2", p.beta2());
    put(&mut report.derived, "beta4", p.beta4());
}

fn write_energy(out: &mut OutputDir, name: &str, rec: &StringRecord, dt: f64, stride: usize) -> Result<()> {
    let h0 = rec.energies[0].total;
    out.write_csv(
        name,
        &["time", "kinetic", "tension", "bending", "contact", "total", "relative_error"],
        strided(rec.energies.len(), stride).map(|n| {
            let e = &rec.energies[n];
            vec![
                n as f64 * dt,
                e.kinetic,
                e.tension_potential,
                e.bending_potential,
                e.contact_potential,
                e.total,
                (e.total - h0) / h0,
            ]
        }),
    )?;
    Ok(())
}

fn write_snapshots(out: &mut OutputDir, rec: &StringRecord, p: &StringParams) -> Result<()> {
    let xs = p.positions();
    out.write_csv(
        "snapshots.csv",
        &["time", "x", "y"],
        rec.snapshots.iter().flat_map(|(n, y)| {
            let t = *n as f64 * p.dt;
            xs.iter().zip(y).map(move |(x, y)| vec![t, *x, *y])
        }),
    )?;
    Ok(())
}

/// Flexible string plucked in its first mode against a flat obstacle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImpededString {
    pub rho_a: f64,
    pub tension: f64,
    pub length: f64,
    pub dx: f64,
    pub sample_rate: f64,
    pub amplitude: f64,
    pub barrier: f64,
    pub contact_stiffness: f64,
    pub exponent: f64,
    pub duration: f64,
    /// Length of the signal used for pitch estimation (s).
    pub analysis_window: f64,
    /// Shrink `dx` along with the time step when oversampling.
    pub refine_grid: bool,
}

impl Default for ImpededString {
    fn default() -> Self {
        Self {
            rho_a: 0.001,
            tension: 100.0,
            length: 0.7,
            dx: 0.007,
            sample_rate: 44_100.0,
            amplitude: 0.002,
            barrier: -0.001,
            contact_stiffness: 1e7,
            exponent: 1.0,
            duration: 0.1,
            analysis_window: 0.04,
            refine_grid: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ImpededOutcome {
    pub params: StringParams,
    pub free: StringRecord,
    pub impeded: StringRecord,
    /// Midpoint fundamental without the obstacle (Hz).
    pub free_frequency: f64,
    /// Repetition rate of the impeded midpoint motion (Hz).
    pub impeded_frequency: f64,
}

impl ImpededOutcome {
    pub fn ratio(&self) -> f64 {
        self.free_frequency / self.impeded_frequency
    }
}

impl ImpededString {
    pub fn law(&self) -> Result<ContactLaw> {
        ContactLaw::new(self.contact_stiffness, self.exponent)
    }

    pub fn params(&self) -> Result<StringParams> {
        StringParams::new(self.rho_a, self.tension, 0.0, self.length, self.dx, 1.0 / self.sample_rate)
    }

    pub fn simulate(&self) -> Result<ImpededOutcome> {
        let params = self.params()?;
        let steps = (self.duration * self.sample_rate).round() as usize;
        let window = (self.analysis_window * self.sample_rate).round() as usize;
        if window < 2 || window > steps + 1 {
            return Err(Error::InvalidParameter(format!(
                "analysis window {} s must be shorter than the run ({} s)",
                self.analysis_window, self.duration
            )));
        }
        let init = initial_condition(
            &InitialShape::SineMode {
                amplitude: self.amplitude,
                mode: 1,
            },
            &params,
        )?;
        let probe = nearest_entry(&params, 0.5 * self.length)?;
        let barrier = BarrierProfile::flat(
            &params,
            self.barrier,
            self.law()?,
        )?;
        let free_model = StringModel::new(params, NoContact)?;
        let impeded_model = StringModel::new(params, barrier)?;
        let (free, impeded) = rayon::join(
            || record_run(&free_model, init.clone(), steps, probe, 0),
            || record_run(&impeded_model, init.clone(), steps, probe, 0),
        );
        let (free, impeded) = (free?, impeded?);
        let free_frequency = fundamental_frequency(&free.probe, self.sample_rate)?.frequency;
        let impeded_frequency = repetition_frequency(
            &impeded.probe[..window],
            self.sample_rate,
            0.5 * free_frequency,
            2.0 * free_frequency,
            0.0,
        )?;
        Ok(ImpededOutcome {
            params,
            free,
            impeded,
            free_frequency,
            impeded_frequency,
        })
    }
}

impl Scenario for ImpededString {
    fn oversample(&mut self, factor: f64) {
        self.sample_rate *= factor;
        if self.refine_grid {
            self.dx /= factor;
        }
    }

    fn execute(&self, out: &mut OutputDir, options: &OutputOptions) -> Result<Report> {
        let o = self.simulate()?;
        let mut report = Report::default();
        string_derived(&mut report, &o.params, &self.law()?);
        for (name, rec) in [("free", &o.free), ("impeded", &o.impeded)] {
            let h = rec.total_energy();
            put(&mut report.newton, name, NewtonStats::from_counts(&rec.iterations));
            put(
                &mut report.energy,
                name,
                json!({
                    "max_abs_error": max_abs(&energy_error_series(&h, h[0])?),
                    "max_step_error": max_step_error(&h, h[0])?,
                }),
            );
        }
        put(&mut report.results, "free_frequency_hz", o.free_frequency);
        put(&mut report.results, "impeded_frequency_hz", o.impeded_frequency);
        put(&mut report.results, "frequency_ratio", o.ratio());
        put(&mut report.results, "max_compression", o.impeded.max_compression);
        let dt = o.params.dt;
        if options.trajectory {
            out.write_csv(
                "midpoint.csv",
                &["time", "free", "impeded"],
                (0..o.free.probe.len())
                    .map(|n| vec![n as f64 * dt, o.free.probe[n], o.impeded.probe[n]]),
            )?;
        }
        if options.energy {
            write_energy(out, "energy.csv", &o.impeded, dt, 1)?;
        }
        Ok(report)
    }
}

/// Stiff string against a curved obstacle near one end.
///
/// The obstacle is `offset - curvature (x - centre)²` for `x <= extent`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StiffStringObstacle {
    pub rho_a: f64,
    pub tension: f64,
    pub bending: f64,
    pub length: f64,
    pub dx: f64,
    pub sample_rate: f64,
    pub amplitude: f64,
    pub obstacle_offset: f64,
    pub obstacle_curvature: f64,
    pub obstacle_centre: f64,
    pub obstacle_extent: f64,
    pub contact_stiffness: f64,
    pub exponent: f64,
    pub steps: usize,
    pub bc_left: BoundaryCondition,
    pub bc_right: BoundaryCondition,
    pub snapshot_every: usize,
    pub energy_stride: usize,
}

impl Default for StiffStringObstacle {
    fn default() -> Self {
        Self {
            rho_a: 0.001,
            tension: 100.0,
            bending: 0.012,
            length: 0.7,
            dx: 0.007,
            sample_rate: 44_100.0,
            amplitude: 0.002,
            obstacle_offset: -0.0002,
            obstacle_curvature: 2.0,
            obstacle_centre: 0.08,
            obstacle_extent: 0.2,
            contact_stiffness: 1e7,
            exponent: 1.0,
            steps: 100_000,
            bc_left: BoundaryCondition::SimplySupported,
            bc_right: BoundaryCondition::SimplySupported,
            snapshot_every: 1000,
            energy_stride: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StiffStringOutcome {
    pub params: StringParams,
    pub record: StringRecord,
    /// `max |H^{n+1} - H^n| / |H^0|`
    pub max_step_error: f64,
}

impl StiffStringObstacle {
    pub fn law(&self) -> Result<ContactLaw> {
        ContactLaw::new(self.contact_stiffness, self.exponent)
    }

    pub fn params(&self) -> Result<StringParams> {
        Ok(StringParams::new(
            self.rho_a,
            self.tension,
            self.bending,
            self.length,
            self.dx,
            1.0 / self.sample_rate,
        )?
        .with_boundaries(self.bc_left, self.bc_right))
    }

    pub fn obstacle(&self, params: &StringParams) -> Result<BarrierProfile> {
        BarrierProfile::from_fn(
            params,
            self.law()?,
            |x| {
                (x <= self.obstacle_extent).then(|| {
                    self.obstacle_offset - self.obstacle_curvature * (x - self.obstacle_centre).powi(2)
                })
            },
        )
    }

    pub fn simulate(&self) -> Result<StiffStringOutcome> {
        let params = self.params()?;
        let model = StringModel::new(params, self.obstacle(&params)?)?;
        let init = initial_condition(
            &InitialShape::SineMode {
                amplitude: self.amplitude,
                mode: 1,
            },
            &params,
        )?;
        let probe = nearest_entry(&params, self.obstacle_centre)?;
        let record = record_run(&model, init, self.steps, probe, self.snapshot_every)?;
        let h = record.total_energy();
        Ok(StiffStringOutcome {
            max_step_error: max_step_error(&h, h[0])?,
            params,
            record,
        })
    }
}

impl Scenario for StiffStringObstacle {
    fn oversample(&mut self, factor: f64) {
        self.sample_rate *= factor;
        self.steps = (self.steps as f64 * factor).round() as usize;
    }

    fn execute(&self, out: &mut OutputDir, options: &OutputOptions) -> Result<Report> {
        let o = self.simulate()?;
        let mut report = Report::default();
        string_derived(&mut report, &o.params, &self.law()?);
        let h = o.record.total_energy();
        put(&mut report.newton, "EC", NewtonStats::from_counts(&o.record.iterations));
        put(
            &mut report.energy,
            "EC",
            json!({
                "max_abs_error": max_abs(&energy_error_series(&h, h[0])?),
                "max_step_error": o.max_step_error,
            }),
        );
        put(&mut report.results, "max_compression", o.record.max_compression);
        put(
            &mut report.results,
            "contact_episodes",
            positive_episodes(&o.record.contact_energy()).len(),
        );
        if options.energy {
            write_energy(out, "energy.csv", &o.record, o.params.dt, self.energy_stride)?;
        }
        if options.trajectory {
            write_snapshots(out, &o.record, &o.params)?;
        }
        Ok(report)
    }
}

/// Damped clamped-free beam released onto a table under its clamped half.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Cantilever {
    pub length: f64,
    pub dx: f64,
    pub bending: f64,
    pub rho_a: f64,
    pub tension: f64,
    pub gamma: f64,
    pub eta: f64,
    pub contact_stiffness: f64,
    pub exponent: f64,
    pub table_height: f64,
    /// The table covers `0 <= x <= table_extent`.
    pub table_extent: f64,
    /// Initial tip deflection of the static tip-loaded shape (m).
    pub tip_deflection: f64,
    pub sample_rate: f64,
    pub duration: f64,
    pub snapshot_every: usize,
    pub energy_stride: usize,
}

impl Default for Cantilever {
    fn default() -> Self {
        Self {
            length: 0.2,
            dx: 1.0 / 460.0,
            bending: 0.03375,
            rho_a: 0.03,
            tension: 0.0,
            gamma: 10.0,
            eta: 1e-6,
            contact_stiffness: 5e6,
            exponent: 1.0,
            table_height: 0.0,
            table_extent: 0.1,
            tip_deflection: 0.02,
            sample_rate: 176_400.0,
            duration: 0.5,
            snapshot_every: 882,
            energy_stride: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CantileverOutcome {
    pub params: StringParams,
    pub record: StringRecord,
    /// Steps where the total energy rose, with the rise (J).
    pub increases: Vec<(usize, f64)>,
    /// First-mode period of the free cantilever (s).
    pub period: f64,
    /// Contact-energy episodes starting within one period of the first touch.
    pub first_cycle_episodes: Vec<(usize, usize)>,
}

/// `(1.8751 / L)² sqrt(EI / ρA) / 2π`
fn cantilever_fundamental(length: f64, bending: f64, rho_a: f64) -> f64 {
    let beta_l = 1.875_104_068_711_961;
    (beta_l / length).powi(2) * (bending / rho_a).sqrt() / std::f64::consts::TAU
}

impl Cantilever {
    pub fn law(&self) -> Result<ContactLaw> {
        ContactLaw::new(self.contact_stiffness, self.exponent)
    }

    pub fn params(&self) -> Result<StringParams> {
        Ok(StringParams::new(
            self.rho_a,
            self.tension,
            self.bending,
            self.length,
            self.dx,
            1.0 / self.sample_rate,
        )?
        .with_damping(self.gamma, self.eta)?
        .with_boundaries(BoundaryCondition::Clamped, BoundaryCondition::Free))
    }

    pub fn simulate(&self) -> Result<CantileverOutcome> {
        let params = self.params()?;
        let table = BarrierProfile::from_fn(
            &params,
            self.law()?,
            |x| (x <= self.table_extent).then_some(self.table_height),
        )?;
        let model = StringModel::new(params, table)?;
        let l = self.length;
        let shape: Vec<f64> = params
            .positions()
            .iter()
            .map(|x| self.tip_deflection * x * x * (3.0 * l - x) / (2.0 * l.powi(3)))
            .collect();
        let steps = (self.duration * self.sample_rate).round() as usize;
        let tip = params.unknowns() - 1;
        let record = record_run(
            &model,
            GridState::at_rest(shape),
            steps,
            tip,
            self.snapshot_every,
        )?;
        let increases = record
            .energies
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1].total > w[0].total)
            .map(|(n, w)| (n, w[1].total - w[0].total))
            .collect();
        let period = 1.0 / cantilever_fundamental(l, self.bending, self.rho_a);
        let episodes = positive_episodes(&record.contact_energy());
        let first_cycle_episodes = match episodes.first() {
            Some(&(start, _)) => {
                let end = start + (period * self.sample_rate).round() as usize;
                episodes.into_iter().filter(|e| e.0 < end).collect()
            }
            None => Vec::new(),
        };
        Ok(CantileverOutcome {
            params,
            record,
            increases,
            period,
            first_cycle_episodes,
        })
    }
}

impl Scenario for Cantilever {
    fn oversample(&mut self, factor: f64) {
        self.sample_rate *= factor;
        self.snapshot_every = (self.snapshot_every as f64 * factor).round() as usize;
    }

    fn execute(&self, out: &mut OutputDir, options: &OutputOptions) -> Result<Report> {
        let o = self.simulate()?;
        let mut report = Report::default();
        string_derived(&mut report, &o.params, &self.law()?);
        put(&mut report.derived, "first_mode_period", o.period);
        put(&mut report.newton, "EC", NewtonStats::from_counts(&o.record.iterations));
        let h = o.record.total_energy();
        put(
            &mut report.energy,
            "EC",
            json!({
                "energy_increases": o.increases.len(),
                "largest_increase": o.increases.iter().map(|i| i.1).fold(0.0, f64::max),
                "final_over_initial": h.last().copied().unwrap_or(0.0) / h[0],
            }),
        );
        put(&mut report.results, "monotonic_energy", o.increases.is_empty());
        put(&mut report.results, "first_cycle_contact_episodes", o.first_cycle_episodes.len());
        put(&mut report.results, "first_cycle_episode_steps", &o.first_cycle_episodes);
        put(&mut report.results, "max_compression", o.record.max_compression);
        let dt = o.params.dt;
        if options.energy {
            write_energy(out, "energy.csv", &o.record, dt, self.energy_stride)?;
        }
        if options.trajectory {
            out.write_csv(
                "tip.csv",
                &["time", "tip"],
                strided(o.record.probe.len(), self.energy_stride)
                    .map(|n| vec![n as f64 * dt, o.record.probe[n]]),
            )?;
            write_snapshots(out, &o.record, &o.params)?;
        }
        Ok(report)
    }
}
