//! String against a curved two-point bridge.
//!
//! The bridge profile lives on its own fine grid of spacing `Δx_b`. String
//! displacements are carried onto it by 4-point Lagrange interpolation
//! (`ȳ = I_b y`), contact forces are evaluated there with the squared
//! bracket, and the result is brought back with the scaled transpose
//! `I_b* = (Δx_b / Δx) I_bᵗ`. With that choice the contact energy on the
//! fine grid enters the discrete energy balance exactly.

use serde::{Deserialize, Serialize};

use crate::banded::BandMatrix;
use crate::contact::{bracket_power, unit_quotient};
use crate::distributed::{
    BoundaryCondition, ContactTerm, GridState, SparseRows, StringModel, StringParams, StringRun,
};
use crate::error::{Error, Result};

/// Exponent of the bracket in the bridge law, `(α + 1) = 2`.
const BRIDGE_EXPONENT: f64 = 1.0;

/// Physical setup of the small travelling tanpura.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TanpuraConfig {
    pub length: f64,
    pub tension: f64,
    pub bending: f64,
    pub rho_a: f64,
    pub gamma: f64,
    pub eta: f64,
    /// Target string grid spacing (m).
    pub dx: f64,
    pub sample_rate: f64,
    /// Bridge apex distance from the thread (m).
    pub x_b: f64,
    /// Bridge grid spacing (m).
    pub dx_b: f64,
    /// Bridge elasticity `k_b` in `k_b ⌊χ²⌋`.
    pub k_b: f64,
    /// How far past the apex the bridge grid extends (m).
    pub margin: f64,
}

impl Default for TanpuraConfig {
    fn default() -> Self {
        Self {
            length: 0.628,
            tension: 31.47,
            bending: 8.35e-5,
            rho_a: 5.58e-4,
            gamma: 0.1,
            eta: 5e-8,
            dx: 3.1e-3,
            sample_rate: 176_400.0,
            x_b: 5e-3,
            dx_b: 2e-4,
            k_b: 5e8,
            margin: 5e-3,
        }
    }
}

impl TanpuraConfig {
    /// Simply supported at the thread (left) and at the nut (right).
    pub fn string_params(&self) -> Result<StringParams> {
        StringParams::new(
            self.rho_a,
            self.tension,
            self.bending,
            self.length,
            self.dx,
            1.0 / self.sample_rate,
        )?
        .with_damping(self.gamma, self.eta)
    }

    pub fn bridge(&self, params: &StringParams) -> Result<BridgeModel> {
        build_bridge(params, self.x_b, self.dx_b, self.k_b, self.x_b + self.margin)
    }

    pub fn build(&self) -> Result<StringModel<BridgeModel>> {
        let params = self.string_params()?;
        let bridge = self.bridge(&params)?;
        StringModel::new(params, bridge)
    }
}

/// Bridge profile, interpolation operator and contact coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeModel {
    pub x_b: f64,
    pub dx_b: f64,
    /// Fine-grid positions (m), starting at the thread.
    pub positions: Vec<f64>,
    /// Bridge heights on the fine grid (m).
    pub y_b: Vec<f64>,
    pub k_b: f64,
    /// `I_b`: fine points × state entries.
    pub interp: SparseRows,
    /// First grid node and the four Lagrange weights of every fine point,
    /// before pinned nodes are dropped.
    pub stencils: Vec<(usize, [f64; 4])>,
    /// State entries touched by `I_b`.
    pub span: std::ops::Range<usize>,
    dx: f64,
}

/// Weights of the cubic through nodes `0, 1, 2, 3` at fractional position `t`.
fn lagrange4(t: f64) -> [f64; 4] {
    let (a, b, c, d) = (t, t - 1.0, t - 2.0, t - 3.0);
    [
        -b * c * d / 6.0,
        a * c * d / 2.0,
        -a * b * d / 2.0,
        a * b * c / 6.0,
    ]
}

/// Parabolic bridge `y_b(x) = -4 (x_b - x)²` sampled every `dx_b` on
/// `[0, extent]`.
pub fn build_bridge(
    params: &StringParams,
    x_b: f64,
    dx_b: f64,
    k_b: f64,
    extent: f64,
) -> Result<BridgeModel> {
    params.validate()?;
    if !(dx_b > 0.0 && dx_b < params.dx) {
        return Err(Error::InvalidParameter(format!(
            "bridge spacing {dx_b} must be positive and finer than the string grid ({})",
            params.dx
        )));
    }
    if !(x_b > 0.0 && extent > x_b) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < x_b < extent, got {x_b} and {extent}"
        )));
    }
    if !(k_b.is_finite() && k_b >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bridge elasticity must be finite and non-negative, got {k_b}"
        )));
    }
    let last_node = params.n + 1;
    if last_node < 3 || extent > params.length - 2.0 * params.dx {
        return Err(Error::InvalidParameter(format!(
            "bridge extent {extent} leaves no room for a 4-point stencil on a string of length {}",
            params.length
        )));
    }

    let count = (extent / dx_b).round() as usize + 1;
    let positions: Vec<f64> = (0..count).map(|i| i as f64 * dx_b).collect();
    let y_b = positions.iter().map(|x| -4.0 * (x_b - x).powi(2)).collect();
    let stencils: Vec<(usize, [f64; 4])> = positions
        .iter()
        .map(|&x| {
            let u = x / params.dx;
            let first = (u.floor() as isize - 1).clamp(0, (last_node - 3) as isize) as usize;
            (first, lagrange4(u - first as f64))
        })
        .collect();
    let rows: Vec<Vec<(usize, f64)>> = stencils
        .iter()
        .map(|(first, w)| {
            (0..4)
                .filter_map(|k| params.unknown_of(first + k).map(|i| (i, w[k])))
                .collect()
        })
        .collect();
    let span = {
        let cols = rows.iter().flatten().map(|&(i, _)| i);
        let lo = cols.clone().min().unwrap_or(0);
        let hi = cols.max().map_or(0, |i| i + 1);
        lo..hi
    };
    Ok(BridgeModel {
        x_b,
        dx_b,
        positions,
        y_b,
        k_b,
        interp: SparseRows {
            cols: params.unknowns(),
            rows,
        },
        stencils,
        span,
        dx: params.dx,
    })
}

impl BridgeModel {
    /// `β_b = k_b Δt² / (2ρA)`
    pub fn beta_b(&self, params: &StringParams) -> f64 {
        self.k_b * params.dt * params.dt / (2.0 * params.rho_a)
    }

    /// `I_b x`
    pub fn upsample(&self, x: &[f64]) -> Vec<f64> {
        self.interp.mul_vec(x)
    }

    /// `I_b* a = (Δx_b / Δx) I_bᵗ a`, accumulated into `out`.
    pub fn add_downsampled(&self, fine: &[f64], out: &mut [f64]) {
        let scale = self.dx_b / self.dx;
        for (row, a) in self.interp.rows.iter().zip(fine) {
            for &(j, w) in row {
                out[j] += scale * w * a;
            }
        }
    }

    /// Compression `y_b - ȳ` on the fine grid.
    pub fn compression(&self, y: &[f64]) -> Vec<f64> {
        self.upsample(y)
            .iter()
            .zip(&self.y_b)
            .map(|(yi, b)| b - yi)
            .collect()
    }
}

/// Fine-grid force `β_b (⌊(χ̄ - s̄)²⌋ - ⌊χ̄²⌋) / s̄`, with the `s̄ -> 0`
/// limit `-2 β_b ⌊χ̄⌋`.
pub fn bridge_force(s_bar: &[f64], y_bar: &[f64], model: &BridgeModel, params: &StringParams) -> Vec<f64> {
    let beta = model.beta_b(params);
    s_bar
        .iter()
        .zip(y_bar)
        .zip(&model.y_b)
        .map(|((s, y), b)| -2.0 * beta * unit_quotient(b - y, *s, BRIDGE_EXPONENT).value)
        .collect()
}

impl ContactTerm for BridgeModel {
    fn bandwidth(&self) -> usize {
        if self.k_b > 0.0 {
            3
        } else {
            0
        }
    }

    fn add_force(&self, params: &StringParams, y: &[f64], s: &[f64], out: &mut [f64]) {
        if self.k_b == 0.0 {
            return;
        }
        let fine = bridge_force(&self.upsample(s), &self.upsample(y), self, params);
        self.add_downsampled(&fine, out);
    }

    fn add_jacobian(
        &self,
        params: &StringParams,
        y: &[f64],
        s: &[f64],
        jac: &mut BandMatrix,
    ) -> bool {
        if self.k_b == 0.0 {
            return false;
        }
        let beta = self.beta_b(params);
        let scale = self.dx_b / self.dx;
        let (y_bar, s_bar) = (self.upsample(y), self.upsample(s));
        let mut any = false;
        for (i, row) in self.interp.rows.iter().enumerate() {
            let g = -2.0 * beta * unit_quotient(self.y_b[i] - y_bar[i], s_bar[i], BRIDGE_EXPONENT).d_step;
            if g == 0.0 {
                continue;
            }
            any = true;
            for &(a, wa) in row {
                for &(b, wb) in row {
                    if a <= b {
                        jac.add(a, b, scale * g * wa * wb);
                    }
                }
            }
        }
        any
    }

    fn energy(&self, _params: &StringParams, y: &[f64]) -> f64 {
        self.dx_b
            * self.k_b
            * self
                .compression(y)
                .iter()
                .map(|c| bracket_power(*c, 2.0))
                .sum::<f64>()
    }

    fn max_compression(&self, y: &[f64]) -> f64 {
        if self.k_b == 0.0 {
            return 0.0;
        }
        self.compression(y).into_iter().fold(0.0, f64::max)
    }
}

/// Transverse force on the nut at the right end (x = L).
///
/// With the node on the support pinned and the simply supported ghost
/// `y_{N+2} = -y_N`, the one-sided slope and third difference give
/// `τ y_N / Δx - EI (y_{N-1} - 2 y_N) / Δx³`.
pub fn nut_force(state: &GridState, params: &StringParams) -> Result<f64> {
    if params.bc_right != BoundaryCondition::SimplySupported {
        return Err(Error::InvalidParameter(format!(
            "nut force needs a simply supported right end, got {}",
            params.bc_right
        )));
    }
    if state.len() != params.unknowns() {
        return Err(Error::DimensionMismatch {
            expected: params.unknowns(),
            got: state.len(),
        });
    }
    let node = |m: usize| params.unknown_of(m).map_or(0.0, |i| state.y[i]);
    let (y_n, y_nm1) = (node(params.n), node(params.n - 1));
    Ok(params.tension * y_n / params.dx
        - params.bending * (y_nm1 - 2.0 * y_n) / params.dx.powi(3))
}

/// What a tanpura run records besides the nut force.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Recording {
    /// Keep the state every this many steps (0 keeps none).
    pub snapshot_every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TanpuraTrajectory {
    /// Nut force at steps `0..=n_steps` (N).
    pub nut_force: Vec<f64>,
    /// Total energy at steps `0..=n_steps` (J).
    pub energy: Vec<f64>,
    /// Largest bridge compression reached (m).
    pub max_compression: f64,
    /// Newton iterations per step.
    pub iterations: Vec<usize>,
    /// `(step, displacement)` pairs.
    pub snapshots: Vec<(usize, Vec<f64>)>,
}

pub fn simulate_tanpura(
    model: &StringModel<BridgeModel>,
    initial: GridState,
    n_steps: usize,
    recording: Recording,
) -> Result<TanpuraTrajectory> {
    let params = &model.params;
    let mut run = StringRun::new(model, initial)?;
    let mut out = TanpuraTrajectory {
        nut_force: Vec::with_capacity(n_steps + 1),
        energy: Vec::with_capacity(n_steps + 1),
        max_compression: 0.0,
        iterations: Vec::with_capacity(n_steps),
        snapshots: Vec::new(),
    };
    let record = |run: &StringRun<BridgeModel>, out: &mut TanpuraTrajectory| -> Result<()> {
        let state = run.state();
        out.nut_force.push(nut_force(state, params)?);
        out.energy.push(run.energy().total);
        out.max_compression = out
            .max_compression
            .max(model.contact.max_compression(&state.y));
        if recording.snapshot_every > 0 && state.n.is_multiple_of(recording.snapshot_every) {
            out.snapshots.push((state.n, state.y.clone()));
        }
        Ok(())
    };
    record(&run, &mut out)?;
    for _ in 0..n_steps {
        let report = run.step()?;
        out.iterations.push(report.iterations);
        record(&run, &mut out)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributed::{initial_condition, jacobian_vec, residual_vec, InitialShape, NoContact};
    use approx::assert_relative_eq;

    fn setup() -> (StringParams, BridgeModel) {
        let cfg = TanpuraConfig::default();
        let p = cfg.string_params().unwrap();
        let b = cfg.bridge(&p).unwrap();
        (p, b)
    }

    #[test]
    fn stencils_reproduce_cubics() {
        let (p, b) = setup();
        for (first, w) in &b.stencils {
            assert_relative_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
            assert!(first + 3 <= p.n + 1);
        }
        // nodes from 0: pinned node 0 holds the cubic's value 0 at x = 0
        let cubic = |x: f64| x * (x - 0.2) * (x + 0.1);
        let y: Vec<f64> = p.positions().iter().map(|&x| cubic(x)).collect();
        for (x, v) in b.positions.iter().zip(b.upsample(&y)) {
            assert_relative_eq!(v, cubic(*x), epsilon = 1e-15);
        }
    }

    #[test]
    fn apex_and_profile() {
        let (_, b) = setup();
        let at = |x: f64| {
            let i = (x / b.dx_b).round() as usize;
            assert!((b.positions[i] - x).abs() < 1e-12);
            b.y_b[i]
        };
        assert_eq!(at(5e-3), 0.0);
        assert_relative_eq!(at(4e-3), -4e-6, max_relative = 1e-9);
        assert_relative_eq!(at(6e-3), -4e-6, max_relative = 1e-9);
        assert_eq!(b.positions.len(), 51);
        assert_eq!(b.span, 0..5);
    }

    #[test]
    fn downsampling_is_scaled_adjoint() {
        let (p, b) = setup();
        let a: Vec<f64> = (0..b.positions.len()).map(|i| (0.7 * i as f64).sin()).collect();
        let v: Vec<f64> = (0..p.unknowns()).map(|i| (0.3 * i as f64).cos()).collect();
        let lhs: f64 = b.dx_b * a.iter().zip(b.upsample(&v)).map(|(x, y)| x * y).sum::<f64>();
        let mut down = vec![0.0; p.unknowns()];
        b.add_downsampled(&a, &mut down);
        let rhs: f64 = p.dx * down.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-13);
    }

    #[test]
    fn rejects_bad_geometry() {
        let p = TanpuraConfig::default().string_params().unwrap();
        assert!(build_bridge(&p, 5e-3, 0.01, 5e8, 0.01).is_err());
        assert!(build_bridge(&p, 5e-3, 2e-4, 5e8, 0.627).is_err());
        assert!(build_bridge(&p, 0.0, 2e-4, 5e8, 0.01).is_err());
    }

    #[test]
    fn no_contact_matches_plain_string() {
        let (p, b) = setup();
        let model = StringModel::new(p, b).unwrap();
        let plain = StringModel::new(p, NoContact).unwrap();
        let n = p.unknowns();
        let state = GridState {
            y: (0..n).map(|i| 1e-3 + 1e-4 * (0.2 * i as f64).sin()).collect(),
            q: (0..n).map(|i| 1e-7 * (0.5 * i as f64).cos()).collect(),
            n: 0,
        };
        let s: Vec<f64> = state.q.iter().map(|q| 2.0 * q).collect();
        assert_eq!(
            residual_vec(&model, &state, &s).unwrap(),
            residual_vec(&plain, &state, &s).unwrap()
        );
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let (p, b) = setup();
        let model = StringModel::new(p, b).unwrap();
        let n = p.unknowns();
        // string pressed into the bridge near the thread
        let state = GridState {
            y: (0..n).map(|i| -2e-6 * (-(i as f64)).exp()).collect(),
            q: (0..n).map(|i| 1e-7 * (0.9 * i as f64).sin()).collect(),
            n: 0,
        };
        let s: Vec<f64> = (0..n).map(|i| -1e-6 * (0.4 * i as f64).cos()).collect();
        let jac = jacobian_vec(&model, &state, &s).unwrap();
        assert!((jac.get(0, 1) - model.linear_part().get(0, 1)).abs() > 1e-6);
        let h = 1e-9;
        for j in 0..6 {
            let mut sp = s.clone();
            let mut sm = s.clone();
            sp[j] += h;
            sm[j] -= h;
            let fp = residual_vec(&model, &state, &sp).unwrap();
            let fm = residual_vec(&model, &state, &sm).unwrap();
            for i in 0..6 {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                assert_relative_eq!(jac.get(i, j), fd, max_relative = 1e-6, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn nut_force_of_first_mode() {
        let p = StringParams::new(1e-3, 100.0, 0.0, 0.7, 0.007, 1e-5).unwrap();
        let st = initial_condition(&InitialShape::SineMode { amplitude: 0.002, mode: 1 }, &p).unwrap();
        let analytic = 100.0 * std::f64::consts::PI / 0.7 * 0.002;
        assert_relative_eq!(nut_force(&st, &p).unwrap(), analytic, max_relative = 2e-4);
        assert_eq!(nut_force(&GridState::zeros(p.unknowns()), &p).unwrap(), 0.0);
    }

    #[test]
    fn lossless_bridge_run_conserves_energy() {
        let cfg = TanpuraConfig {
            gamma: 0.0,
            eta: 0.0,
            ..TanpuraConfig::default()
        };
        let model = cfg.build().unwrap();
        let init = initial_condition(
            &InitialShape::SineMode { amplitude: 0.002, mode: 1 },
            &model.params,
        )
        .unwrap();
        let traj = simulate_tanpura(&model, init, 2000, Recording::default()).unwrap();
        assert!(traj.max_compression > 0.0);
        let h0 = traj.energy[0];
        for w in traj.energy.windows(2) {
            assert!(((w[1] - w[0]) / h0).abs() < 1e-13);
        }
    }
}
