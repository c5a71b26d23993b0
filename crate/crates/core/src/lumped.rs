//! Mass–spring–gravity system against a one-sided barrier.
//!
//! The state is the displacement `y` and the scaled momentum
//! `q = p Δt / (2m)`. The implicit schemes solve a scalar equation
//! `F(s) = 0` for the step `s = y^{n+1} - y^n` and then set
//! `q^{n+1} = s - q^n`. The barrier sits at `y_c` and pushes upwards: the
//! compression is `y_c - y`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::contact::{bracket_power, contact_potential, unit_quotient, ContactLaw};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeKind {
    /// Energy-conserving discrete gradient.
    #[serde(rename = "EC")]
    Ec,
    /// Trapezoidal rule.
    #[serde(rename = "TR")]
    Tr,
    /// Implicit midpoint rule.
    #[serde(rename = "MR")]
    Mr,
    /// Explicit scheme with the contact force partially averaged.
    #[serde(rename = "PSE")]
    Pse,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [SchemeKind::Ec, SchemeKind::Tr, SchemeKind::Mr, SchemeKind::Pse];

    pub fn is_implicit(self) -> bool {
        self != SchemeKind::Pse
    }

    pub fn label(self) -> &'static str {
        match self {
            SchemeKind::Ec => "EC",
            SchemeKind::Tr => "TR",
            SchemeKind::Mr => "MR",
            SchemeKind::Pse => "PSE",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "EC" => Ok(SchemeKind::Ec),
            "TR" => Ok(SchemeKind::Tr),
            "MR" => Ok(SchemeKind::Mr),
            "PSE" => Ok(SchemeKind::Pse),
            _ => Err(Error::InvalidParameter(format!(
                "unknown scheme `{s}` (expected EC, TR, MR or PSE)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LumpedParams {
    /// Mass `m` (kg).
    pub mass: f64,
    /// Linear spring stiffness `k` (N/m).
    pub stiffness: f64,
    pub law: ContactLaw,
    /// Barrier position `y_c` (m).
    pub barrier: f64,
    /// Gravitational acceleration `g_0` (m/s², negative pulls down).
    pub gravity: f64,
    /// Time step (s).
    pub dt: f64,
}

impl LumpedParams {
    pub fn new(
        mass: f64,
        stiffness: f64,
        law: ContactLaw,
        barrier: f64,
        gravity: f64,
        dt: f64,
    ) -> Result<Self> {
        let params = Self {
            mass,
            stiffness,
            law,
            barrier,
            gravity,
            dt,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| {
            Err(Error::InvalidParameter(format!("{what} is invalid: {v}")))
        };
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return bad("mass", self.mass);
        }
        if !(self.stiffness.is_finite() && self.stiffness >= 0.0) {
            return bad("spring stiffness", self.stiffness);
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("time step", self.dt);
        }
        if !self.barrier.is_finite() {
            return bad("barrier position", self.barrier);
        }
        if !self.gravity.is_finite() {
            return bad("gravity", self.gravity);
        }
        self.law.validate()
    }

    /// `ξ = Δt² / (2m)`
    pub fn xi(&self) -> f64 {
        self.dt * self.dt / (2.0 * self.mass)
    }

    /// `β_c = ξ k_c`
    pub fn beta_c(&self) -> f64 {
        self.xi() * self.law.stiffness
    }

    pub fn compression(&self, y: f64) -> f64 {
        self.barrier - y
    }

    /// Total potential `V(y)`.
    pub fn potential(&self, y: f64) -> f64 {
        0.5 * self.stiffness * y * y - self.mass * self.gravity * y
            + contact_potential(self.compression(y), &self.law)
    }

    /// `V'(y)`
    pub fn potential_gradient(&self, y: f64) -> f64 {
        self.stiffness * y
            - self.mass * self.gravity
            - self.law.stiffness * bracket_power(self.compression(y), self.law.exponent)
    }

    /// `V''(y)`; the linear-force law contributes a unit step.
    pub fn potential_curvature(&self, y: f64) -> f64 {
        let chi = self.compression(y);
        let contact = if chi > 0.0 {
            self.law.stiffness * self.law.exponent * chi.powf(self.law.exponent - 1.0)
        } else {
            0.0
        };
        self.stiffness + contact
    }

    /// Undamped natural angular frequency of the spring alone.
    pub fn natural_frequency(&self) -> f64 {
        (self.stiffness / self.mass).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LumpedState {
    pub y: f64,
    /// Scaled momentum `p Δt / (2m)`.
    pub q: f64,
    pub n: usize,
}

impl LumpedState {
    pub fn new(y: f64, q: f64) -> Self {
        Self { y, q, n: 0 }
    }

    pub fn from_momentum(y: f64, p: f64, params: &LumpedParams) -> Self {
        Self::new(y, p * params.dt / (2.0 * params.mass))
    }

    pub fn momentum(&self, params: &LumpedParams) -> f64 {
        2.0 * params.mass * self.q / params.dt
    }
}

/// `F(s)` and `dF/ds`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub value: f64,
    pub derivative: f64,
}

/// Residual of an implicit scheme at step `s`.
pub fn residual(
    scheme: SchemeKind,
    s: f64,
    state: &LumpedState,
    params: &LumpedParams,
) -> Result<Residual> {
    let xi = params.xi();
    let y = state.y;
    let q = state.q;
    match scheme {
        SchemeKind::Ec => {
            let half_k = 0.5 * xi * params.stiffness;
            let quotient = unit_quotient(params.compression(y), s, params.law.exponent);
            let beta_c = params.beta_c();
            Ok(Residual {
                // `1 + ξk/2` is never formed: rounding it separately from
                // `ξk/2` biases the energy by O(ε) every step.
                value: s - 2.0 * q + half_k * (2.0 * y + s)
                    - xi * params.mass * params.gravity
                    - beta_c * quotient.value,
                derivative: 1.0 + half_k - beta_c * quotient.d_step,
            })
        }
        SchemeKind::Tr => Ok(Residual {
            value: 0.5 * xi * (params.potential_gradient(y + s) + params.potential_gradient(y))
                + s
                - 2.0 * q,
            derivative: 0.5 * xi * params.potential_curvature(y + s) + 1.0,
        }),
        SchemeKind::Mr => Ok(Residual {
            value: xi * params.potential_gradient(y + 0.5 * s) + s - 2.0 * q,
            derivative: 0.5 * xi * params.potential_curvature(y + 0.5 * s) + 1.0,
        }),
        SchemeKind::Pse => Err(Error::Usage(
            "the explicit scheme has no residual".to_string(),
        )),
    }
}

/// `d²F/ds²` of the energy-conserving residual.
pub fn ec_residual_curvature(s: f64, state: &LumpedState, params: &LumpedParams) -> f64 {
    -params.beta_c() * unit_quotient(params.compression(state.y), s, params.law.exponent).d2_step
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Stop once `|Δs| <= step_tol (1 + |s|)` ...
    pub step_tol: f64,
    /// ... and `|F| <= residual_tol (1 + |2q|)`.
    pub residual_tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            step_tol: 1e-14,
            residual_tol: 1e-12,
            max_iter: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonReport {
    pub s: f64,
    /// Newton updates taken. The evaluation that only confirms convergence
    /// is not counted, except when it is the first one.
    pub iterations: usize,
    /// `|F|` at the last evaluation.
    pub residual: f64,
}

/// Solve `F(s) = 0`. Without a guess the contact-free step `2q` is used.
pub fn solve_step(
    scheme: SchemeKind,
    state: &LumpedState,
    params: &LumpedParams,
    guess: Option<f64>,
) -> Result<NewtonReport> {
    solve_step_with(scheme, state, params, guess, &NewtonOptions::default())
}

pub fn solve_step_with(
    scheme: SchemeKind,
    state: &LumpedState,
    params: &LumpedParams,
    guess: Option<f64>,
    opts: &NewtonOptions,
) -> Result<NewtonReport> {
    let mut s = guess.unwrap_or(2.0 * state.q);
    let f_tol = opts.residual_tol * (1.0 + (2.0 * state.q).abs());
    let mut last = f64::NAN;
    for eval in 1..=opts.max_iter {
        let r = residual(scheme, s, state, params)?;
        last = r.value.abs();
        let delta = -r.value / r.derivative;
        if !delta.is_finite() {
            break;
        }
        s += delta;
        if delta.abs() <= opts.step_tol * (1.0 + s.abs()) && last <= f_tol {
            return Ok(NewtonReport {
                s,
                iterations: (eval - 1).max(1),
                residual: last,
            });
        }
    }
    Err(Error::NonConvergence {
        step: state.n,
        iterations: opts.max_iter,
        residual: last,
    })
}

/// Explicit update `y^{n+1}` from `y^n` and `y^{n-1}`.
///
/// Acceleration by the centred second difference; spring force and the
/// first factor of `k_c (y_c - y) ⌊(y_c - y^n)^(α-1)⌋` averaged over
/// `n ± 1`, so the update is linear in `y^{n+1}`.
pub fn explicit_update(y: f64, y_prev: f64, params: &LumpedParams) -> f64 {
    let m_dt2 = params.mass / (params.dt * params.dt);
    let chi = params.compression(y);
    let c = if chi > 0.0 {
        params.law.stiffness * chi.powf(params.law.exponent - 1.0)
    } else {
        0.0
    };
    let k = params.stiffness;
    let rhs = m_dt2 * (2.0 * y - y_prev) - 0.5 * k * y_prev
        + params.mass * params.gravity
        + c * (params.barrier - 0.5 * y_prev);
    rhs / (m_dt2 + 0.5 * k + 0.5 * c)
}

/// Advance one step.
///
/// For the implicit schemes `guess` seeds Newton. The explicit scheme needs
/// `prev_y = y^{n-1}` and reports the backward estimate
/// `q^{n+1} = (y^{n+1} - y^n) / 2`; [`simulate`] replaces it with the
/// centred one.
pub fn step(
    scheme: SchemeKind,
    state: &LumpedState,
    params: &LumpedParams,
    prev_y: Option<f64>,
) -> Result<LumpedState> {
    step_with_guess(scheme, state, params, prev_y, None).map(|(next, _)| next)
}

fn step_with_guess(
    scheme: SchemeKind,
    state: &LumpedState,
    params: &LumpedParams,
    prev_y: Option<f64>,
    guess: Option<f64>,
) -> Result<(LumpedState, NewtonReport)> {
    if scheme == SchemeKind::Pse {
        let y_prev = prev_y.ok_or_else(|| {
            Error::Usage("the explicit scheme needs the previous displacement".to_string())
        })?;
        let y_next = explicit_update(state.y, y_prev, params);
        let s = y_next - state.y;
        let next = LumpedState {
            y: y_next,
            q: 0.5 * s,
            n: state.n + 1,
        };
        return Ok((
            next,
            NewtonReport {
                s,
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let report = solve_step(scheme, state, params, guess)?;
    let next = LumpedState {
        y: state.y + report.s,
        q: report.s - state.q,
        n: state.n + 1,
    };
    Ok((next, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct LumpedEnergy {
    pub kinetic: f64,
    pub spring: f64,
    pub contact: f64,
    pub gravity: f64,
    pub total: f64,
}

pub fn hamiltonian(state: &LumpedState, params: &LumpedParams) -> LumpedEnergy {
    let p = state.momentum(params);
    let kinetic = p * p / (2.0 * params.mass);
    let spring = 0.5 * params.stiffness * state.y * state.y;
    let contact = contact_potential(params.compression(state.y), &params.law);
    let gravity = -params.mass * params.gravity * state.y;
    LumpedEnergy {
        kinetic,
        spring,
        contact,
        gravity,
        total: kinetic + spring + contact + gravity,
    }
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub states: Vec<LumpedState>,
    pub energies: Vec<LumpedEnergy>,
    /// Newton updates per step (zero for the explicit scheme).
    pub iterations: Vec<usize>,
}

impl Trajectory {
    pub fn displacement(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.y).collect()
    }

    pub fn total_energy(&self) -> Vec<f64> {
        self.energies.iter().map(|e| e.total).collect()
    }

    pub fn momentum(&self, params: &LumpedParams) -> Vec<f64> {
        self.states.iter().map(|s| s.momentum(params)).collect()
    }

    pub fn max_iterations(&self) -> usize {
        self.iterations.iter().copied().max().unwrap_or(0)
    }
}

/// Run `n_steps` steps from `initial`.
///
/// The explicit scheme is started with one energy-conserving step and its
/// momentum is the centred difference, so it takes one extra step past
/// `n_steps` internally.
pub fn simulate(
    scheme: SchemeKind,
    params: &LumpedParams,
    initial: LumpedState,
    n_steps: usize,
) -> Result<Trajectory> {
    params.validate()?;
    let mut traj = Trajectory {
        states: Vec::with_capacity(n_steps + 1),
        energies: Vec::with_capacity(n_steps + 1),
        iterations: Vec::with_capacity(n_steps),
    };
    traj.states.push(initial);
    traj.energies.push(hamiltonian(&initial, params));
    if n_steps == 0 {
        return Ok(traj);
    }
    if scheme == SchemeKind::Pse {
        return simulate_explicit(params, initial, n_steps, traj);
    }
    let mut state = initial;
    let mut guess = None;
    for _ in 0..n_steps {
        let (next, report) =
            step_with_guess(scheme, &state, params, None, guess).map_err(|e| e.at_step(state.n))?;
        guess = Some(report.s);
        state = next;
        traj.states.push(state);
        traj.energies.push(hamiltonian(&state, params));
        traj.iterations.push(report.iterations);
    }
    Ok(traj)
}

fn simulate_explicit(
    params: &LumpedParams,
    initial: LumpedState,
    n_steps: usize,
    mut traj: Trajectory,
) -> Result<Trajectory> {
    let (first, report) = step_with_guess(SchemeKind::Ec, &initial, params, None, None)
        .map_err(|e| e.at_step(0))?;
    let mut ys = Vec::with_capacity(n_steps + 2);
    ys.push(initial.y);
    ys.push(first.y);
    for _ in 1..=n_steps {
        let len = ys.len();
        ys.push(explicit_update(ys[len - 1], ys[len - 2], params));
    }
    traj.iterations.push(report.iterations);
    traj.iterations.extend(std::iter::repeat_n(0, n_steps - 1));
    for n in 1..=n_steps {
        let state = LumpedState {
            y: ys[n],
            q: 0.25 * (ys[n + 1] - ys[n - 1]),
            n,
        };
        traj.states.push(state);
        traj.energies.push(hamiltonian(&state, params));
    }
    Ok(traj)
}

/// One sample of the effective contact force.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveForcePoint {
    /// `y_c - (y^{n+1} + y^n) / 2`
    pub mid_compression: f64,
    /// Force actually applied by the scheme over the step.
    pub effective: f64,
    /// `k_c ⌊χ^α⌋` at the mid compression.
    pub theoretical: f64,
}

/// Effective contact force over each step of an energy-conserving run.
pub fn effective_force_curve(
    states: &[LumpedState],
    params: &LumpedParams,
) -> Vec<EffectiveForcePoint> {
    states
        .windows(2)
        .map(|w| {
            let chi = params.compression(w[0].y);
            let s = w[1].y - w[0].y;
            let mid = chi - 0.5 * s;
            EffectiveForcePoint {
                mid_compression: mid,
                effective: params.law.stiffness * unit_quotient(chi, s, params.law.exponent).value,
                theoretical: params.law.force(mid),
            }
        })
        .collect()
}

/// Frequency observed in the discrete scheme for a linear oscillator of
/// angular frequency `omega_a`.
pub fn warped_frequency(omega_a: f64, dt: f64) -> f64 {
    2.0 / dt * (0.5 * omega_a * dt).atan()
}
