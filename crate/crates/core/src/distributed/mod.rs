//! Stiff string / beam with distributed contact.
//!
//! Nodes sit at `x_m = m Δx`, `m = 0..=N+1`. Fixed ends (clamped or simply
//! supported) pin the boundary node to zero; a free end keeps it as an
//! unknown, so the state vector has `N` entries plus one per free end.

mod barrier;
mod initial;
mod operators;
mod scheme;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::contact::ContactLaw;
use crate::error::{Error, Result};

pub use barrier::{BarrierProfile, ContactTerm, NoContact};
pub use initial::{initial_condition, InitialShape};
pub use operators::{build_operators, SparseRows, SpatialOperators};
pub use scheme::{
    energy_string, jacobian_vec, residual_vec, solve_step_vec, step_string, StepReport,
    StringModel, StringRun, VectorNewtonOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    Clamped,
    SimplySupported,
    Free,
}

impl BoundaryCondition {
    pub const ALL: [BoundaryCondition; 3] = [
        BoundaryCondition::Clamped,
        BoundaryCondition::SimplySupported,
        BoundaryCondition::Free,
    ];

    pub fn is_fixed(self) -> bool {
        self != BoundaryCondition::Free
    }

    pub fn label(self) -> &'static str {
        match self {
            BoundaryCondition::Clamped => "clamped",
            BoundaryCondition::SimplySupported => "simply_supported",
            BoundaryCondition::Free => "free",
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "clamped" => Ok(Self::Clamped),
            "simply_supported" | "ss" => Ok(Self::SimplySupported),
            "free" => Ok(Self::Free),
            _ => Err(Error::InvalidParameter(format!(
                "unknown boundary condition `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StringParams {
    /// Linear mass density `ρA` (kg/m).
    pub rho_a: f64,
    /// Tension `τ` (N).
    pub tension: f64,
    /// Bending stiffness `EI` (N m²).
    pub bending: f64,
    /// Frequency-independent damping `γ` (1/s).
    pub gamma: f64,
    /// Kelvin-Voigt coefficient `η` (s).
    pub eta: f64,
    pub length: f64,
    /// Interior node count `N`; `(N + 1) Δx = L`.
    pub n: usize,
    pub dx: f64,
    pub dt: f64,
    pub bc_left: BoundaryCondition,
    pub bc_right: BoundaryCondition,
}

impl StringParams {
    /// Lossless, simply supported string. The grid uses
    /// `round(L / dx_target)` intervals, so `Δx` is adjusted to fit `L`.
    pub fn new(
        rho_a: f64,
        tension: f64,
        bending: f64,
        length: f64,
        dx_target: f64,
        dt: f64,
    ) -> Result<Self> {
        if !(length > 0.0 && length.is_finite() && dx_target > 0.0 && dx_target.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "length {length} and spatial step {dx_target} must be positive"
            )));
        }
        let intervals = (length / dx_target).round().max(1.0) as usize;
        let params = Self {
            rho_a,
            tension,
            bending,
            gamma: 0.0,
            eta: 0.0,
            length,
            n: intervals - 1,
            dx: length / intervals as f64,
            dt,
            bc_left: BoundaryCondition::SimplySupported,
            bc_right: BoundaryCondition::SimplySupported,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_damping(mut self, gamma: f64, eta: f64) -> Result<Self> {
        self.gamma = gamma;
        self.eta = eta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_boundaries(mut self, left: BoundaryCondition, right: BoundaryCondition) -> Self {
        self.bc_left = left;
        self.bc_right = right;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParameter(msg));
        let finite = [
            self.rho_a,
            self.tension,
            self.bending,
            self.gamma,
            self.eta,
            self.length,
            self.dx,
            self.dt,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return fail("string parameters must be finite".into());
        }
        if self.rho_a <= 0.0 {
            return fail(format!("rho_a must be positive, got {}", self.rho_a));
        }
        if self.tension < 0.0 || self.bending < 0.0 || self.tension + self.bending <= 0.0 {
            return fail(format!(
                "need tension, EI >= 0 with a positive sum, got {} and {}",
                self.tension, self.bending
            ));
        }
        if self.gamma < 0.0 || self.eta < 0.0 {
            return fail("damping coefficients must be non-negative".into());
        }
        if self.dt <= 0.0 || self.dx <= 0.0 {
            return fail("time and space steps must be positive".into());
        }
        let mismatch = ((self.n + 1) as f64 * self.dx - self.length).abs();
        if mismatch > 1e-9 * self.length {
            return fail(format!(
                "(N + 1) dx = {} does not match L = {}",
                (self.n + 1) as f64 * self.dx,
                self.length
            ));
        }
        Ok(())
    }

    /// `β_2 = τ Δt² / (4 ρA Δx²)`
    pub fn beta2(&self) -> f64 {
        self.tension * self.dt * self.dt / (4.0 * self.rho_a * self.dx * self.dx)
    }

    /// `β_4 = EI Δt² / (4 ρA Δx⁴)`
    pub fn beta4(&self) -> f64 {
        self.bending * self.dt * self.dt / (4.0 * self.rho_a * self.dx.powi(4))
    }

    /// `ζ = k_c Δt² / (2 ρA (α + 1))`
    pub fn zeta(&self, law: &ContactLaw) -> f64 {
        law.stiffness * self.dt * self.dt / (2.0 * self.rho_a * (law.exponent + 1.0))
    }

    /// `θ = 2 ρA / Δt`, so that `q = p / θ`.
    pub fn theta(&self) -> f64 {
        2.0 * self.rho_a / self.dt
    }

    /// `b = 2 ρA Δx / Δt²`, the factor from scaled to physical energy.
    pub fn energy_scale(&self) -> f64 {
        2.0 * self.rho_a * self.dx / (self.dt * self.dt)
    }

    /// Emits a warning when `β_2` is well above 1/4 (densely packed high modes).
    pub fn check_beta2(&self) -> bool {
        let beta2 = self.beta2();
        if beta2 > 0.3 {
            log::warn!("beta2 = {beta2:.3} exceeds 0.3; high string modes will be compressed");
            false
        } else {
            true
        }
    }

    /// Length of the state vector.
    pub fn unknowns(&self) -> usize {
        self.n + usize::from(!self.bc_left.is_fixed()) + usize::from(!self.bc_right.is_fixed())
    }

    /// Grid index `m` of state entry `i`.
    pub fn node_of(&self, i: usize) -> usize {
        if self.bc_left.is_fixed() {
            i + 1
        } else {
            i
        }
    }

    /// State entry holding grid node `m`, if that node is not pinned.
    pub fn unknown_of(&self, m: usize) -> Option<usize> {
        let offset = usize::from(self.bc_left.is_fixed());
        let i = m.checked_sub(offset)?;
        (i < self.unknowns()).then_some(i)
    }

    /// Positions of the state entries.
    pub fn positions(&self) -> Vec<f64> {
        (0..self.unknowns())
            .map(|i| self.node_of(i) as f64 * self.dx)
            .collect()
    }

    /// Fundamental of the ideal flexible string, `c / (2L)` in Hz.
    pub fn ideal_fundamental(&self) -> f64 {
        (self.tension / self.rho_a).sqrt() / (2.0 * self.length)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub y: Vec<f64>,
    /// Scaled momentum `p Δt / (2 ρA)`.
    pub q: Vec<f64>,
    pub n: usize,
}

impl GridState {
    pub fn zeros(len: usize) -> Self {
        Self {
            y: vec![0.0; len],
            q: vec![0.0; len],
            n: 0,
        }
    }

    pub fn at_rest(y: Vec<f64>) -> Self {
        let q = vec![0.0; y.len()];
        Self { y, q, n: 0 }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn momentum(&self, params: &StringParams) -> Vec<f64> {
        let theta = params.theta();
        self.q.iter().map(|q| theta * q).collect()
    }
}

/// Energy components in joules.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub tension_potential: f64,
    pub bending_potential: f64,
    pub contact_potential: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(kinetic: f64, tension: f64, bending: f64, contact: f64) -> Self {
        Self {
            kinetic,
            tension_potential: tension,
            bending_potential: bending,
            contact_potential: contact,
            total: kinetic + tension + bending + contact,
        }
    }
}
