//! Energy-conserving step for the distributed model.
//!
//! Each step solves
//!
//! ```text
//! F(s) = A s + 2 (D y - q) + f(s) = 0,   A = (1 + γΔt/2) I + (1 + 2η/Δt) D
//! ```
//!
//! for `s = y^{n+1} - y^n`, where `f` is the contact term, then sets
//! `q^{n+1} = s - q^n`. `A` is symmetric positive definite and the contact
//! Jacobian is a congruence of a non-negative diagonal, so Newton steps use
//! a banded Cholesky solve.

use super::{ContactTerm, EnergyBreakdown, GridState, SpatialOperators, StringParams};
use crate::banded::{BandCholesky, BandMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorNewtonOptions {
    /// Stop once `‖Δs‖∞ <= step_tol (1 + ‖s‖∞)` ...
    pub step_tol: f64,
    /// ... and `‖F‖∞ <= residual_tol (1 + ‖2q‖∞)`.
    pub residual_tol: f64,
    pub max_iter: usize,
}

impl Default for VectorNewtonOptions {
    fn default() -> Self {
        Self {
            step_tol: 1e-14,
            residual_tol: 1e-12,
            max_iter: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub s: Vec<f64>,
    /// Newton updates; see [`crate::lumped::NewtonReport::iterations`].
    pub iterations: usize,
    /// `‖F‖∞` at the last evaluation.
    pub residual: f64,
}

/// Parameters, operators and contact term for one simulation.
#[derive(Debug, Clone)]
pub struct StringModel<C> {
    pub params: StringParams,
    pub ops: SpatialOperators,
    pub contact: C,
    pub options: VectorNewtonOptions,
    linear: BandMatrix,
    linear_factor: BandCholesky,
}

impl<C: ContactTerm> StringModel<C> {
    pub fn new(params: StringParams, contact: C) -> Result<Self> {
        let ops = super::build_operators(&params)?;
        params.check_beta2();
        let n = ops.dim();
        let linear = BandMatrix::identity(n).combine(
            1.0 + 0.5 * params.gamma * params.dt,
            &ops.d,
            1.0 + 2.0 * params.eta / params.dt,
        );
        let linear_factor = linear.cholesky()?;
        Ok(Self {
            params,
            ops,
            contact,
            options: VectorNewtonOptions::default(),
            linear,
            linear_factor,
        })
    }

    pub fn with_options(mut self, options: VectorNewtonOptions) -> Self {
        self.options = options;
        self
    }

    pub fn dim(&self) -> usize {
        self.ops.dim()
    }

    /// The constant part `A` of the Jacobian.
    pub fn linear_part(&self) -> &BandMatrix {
        &self.linear
    }

    fn check_dims(&self, state: &GridState, s: &[f64]) -> Result<()> {
        let n = self.dim();
        for got in [state.y.len(), state.q.len(), s.len()] {
            if got != n {
                return Err(Error::DimensionMismatch { expected: n, got });
            }
        }
        Ok(())
    }

    /// Energy in the matrix form `b [qᵗq + yᵗDy] + contact`.
    pub fn matrix_form_energy(&self, state: &GridState) -> f64 {
        let b = self.params.energy_scale();
        let qq: f64 = state.q.iter().map(|v| v * v).sum();
        b * (qq + self.ops.d.quadratic_form(&state.y)) + self.contact.energy(&self.params, &state.y)
    }
}

pub fn residual_vec<C: ContactTerm>(
    model: &StringModel<C>,
    state: &GridState,
    s: &[f64],
) -> Result<Vec<f64>> {
    model.check_dims(state, s)?;
    // A s + 2(D y - q), grouped as s - 2q + g s + D((1 + e) s + 2y) so that
    // no rounded `1 + D_ii` enters; that rounding drifts the energy.
    let p = &model.params;
    let g = 0.5 * p.gamma * p.dt;
    let e = 2.0 * p.eta / p.dt;
    let arg: Vec<f64> = s
        .iter()
        .zip(&state.y)
        .map(|(si, yi)| (si + e * si) + 2.0 * yi)
        .collect();
    let mut f = model.ops.d.mul_vec(&arg);
    for i in 0..f.len() {
        f[i] += s[i] - 2.0 * state.q[i] + g * s[i];
    }
    model.contact.add_force(&model.params, &state.y, s, &mut f);
    Ok(f)
}

/// Jacobian of [`residual_vec`], stored with the contact term's band.
pub fn jacobian_vec<C: ContactTerm>(
    model: &StringModel<C>,
    state: &GridState,
    s: &[f64],
) -> Result<BandMatrix> {
    model.check_dims(state, s)?;
    let mut jac = model
        .linear
        .widened(model.linear.bandwidth().max(model.contact.bandwidth()));
    model
        .contact
        .add_jacobian(&model.params, &state.y, s, &mut jac);
    Ok(jac)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Newton solve from `guess` (the previous step, or `2q` at the start).
pub fn solve_step_vec<C: ContactTerm>(
    model: &StringModel<C>,
    state: &GridState,
    guess: &[f64],
) -> Result<StepReport> {
    model.check_dims(state, guess)?;
    let opts = &model.options;
    let mut s = guess.to_vec();
    let two_q = 2.0 * inf_norm(&state.q);
    let f_tol = opts.residual_tol * (1.0 + two_q);
    let bandwidth = model.linear.bandwidth().max(model.contact.bandwidth());
    let mut last = f64::NAN;
    for eval in 1..=opts.max_iter {
        let mut delta = residual_vec(model, state, &s)?;
        last = inf_norm(&delta);
        let mut jac = model.linear.widened(bandwidth);
        if model
            .contact
            .add_jacobian(&model.params, &state.y, &s, &mut jac)
        {
            jac.cholesky()?.solve_in_place(&mut delta);
        } else {
            model.linear_factor.solve_in_place(&mut delta);
        }
        if delta.iter().any(|d| !d.is_finite()) {
            break;
        }
        for (si, di) in s.iter_mut().zip(&delta) {
            *si -= di;
        }
        if inf_norm(&delta) <= opts.step_tol * (1.0 + inf_norm(&s)) && last <= f_tol {
            return Ok(StepReport {
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

/// Advance one step; `guess` seeds Newton.
pub fn step_string<C: ContactTerm>(
    model: &StringModel<C>,
    state: &GridState,
    guess: &[f64],
) -> Result<(GridState, StepReport)> {
    let report = solve_step_vec(model, state, guess)?;
    let y = state.y.iter().zip(&report.s).map(|(y, s)| y + s).collect();
    let q = report
        .s
        .iter()
        .zip(&state.q)
        .map(|(s, q)| s - q)
        .collect();
    Ok((
        GridState {
            y,
            q,
            n: state.n + 1,
        },
        report,
    ))
}

pub fn energy_string<C: ContactTerm>(model: &StringModel<C>, state: &GridState) -> EnergyBreakdown {
    let p = &model.params;
    let qq: f64 = state.q.iter().map(|v| v * v).sum();
    let kinetic = p.energy_scale() * qq;
    let tension = p.tension / (2.0 * p.dx) * model.ops.d1.norm_sq(&state.y);
    let bending = p.bending / (2.0 * p.dx.powi(3)) * model.ops.curvature.norm_sq(&state.y);
    let contact = model.contact.energy(p, &state.y);
    EnergyBreakdown::new(kinetic, tension, bending, contact)
}

/// A running simulation: current state plus the warm start for Newton.
#[derive(Debug, Clone)]
pub struct StringRun<'a, C> {
    model: &'a StringModel<C>,
    state: GridState,
    s_prev: Vec<f64>,
}

impl<'a, C: ContactTerm> StringRun<'a, C> {
    pub fn new(model: &'a StringModel<C>, initial: GridState) -> Result<Self> {
        if initial.len() != model.dim() || initial.q.len() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                got: initial.len(),
            });
        }
        let s_prev = initial.q.iter().map(|q| 2.0 * q).collect();
        Ok(Self {
            model,
            state: initial,
            s_prev,
        })
    }

    pub fn state(&self) -> &GridState {
        &self.state
    }

    pub fn energy(&self) -> EnergyBreakdown {
        energy_string(self.model, &self.state)
    }

    pub fn step(&mut self) -> Result<StepReport> {
        let (next, report) = step_string(self.model, &self.state, &self.s_prev)
            .map_err(|e| e.at_step(self.state.n))?;
        self.s_prev.clone_from(&report.s);
        self.state = next;
        Ok(report)
    }
}
