use super::StringParams;
use crate::banded::BandMatrix;
use crate::contact::{contact_potential, unit_quotient, ContactLaw};
use crate::error::{Error, Result};

/// Nonlinear contact contribution to the distributed residual.
///
/// Forces are in the scaled units of the residual, i.e. a potential
/// density `V` contributes `Δt²/(2ρA)` times its discrete gradient.
pub trait ContactTerm {
    /// Extra half-bandwidth the contact Jacobian needs.
    fn bandwidth(&self) -> usize;

    /// Adds the contact force for step `s` from state `y` to `out`.
    fn add_force(&self, params: &StringParams, y: &[f64], s: &[f64], out: &mut [f64]);

    /// Adds `∂force/∂s` to `jac`. Returns `false` when nothing was added.
    fn add_jacobian(&self, params: &StringParams, y: &[f64], s: &[f64], jac: &mut BandMatrix)
        -> bool;

    /// Contact energy of displacement `y` (J).
    fn energy(&self, params: &StringParams, y: &[f64]) -> f64;

    /// Largest compression anywhere (m), zero when not touching.
    fn max_compression(&self, y: &[f64]) -> f64;
}

/// No obstacle at all.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoContact;

impl ContactTerm for NoContact {
    fn bandwidth(&self) -> usize {
        0
    }

    fn add_force(&self, _: &StringParams, _: &[f64], _: &[f64], _: &mut [f64]) {}

    fn add_jacobian(&self, _: &StringParams, _: &[f64], _: &[f64], _: &mut BandMatrix) -> bool {
        false
    }

    fn energy(&self, _: &StringParams, _: &[f64]) -> f64 {
        0.0
    }

    fn max_compression(&self, _: &[f64]) -> f64 {
        0.0
    }
}

/// Rigid obstacle below the string, one height per state entry.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierProfile {
    pub heights: Vec<f64>,
    /// Nodes with no obstacle underneath.
    pub active: Vec<bool>,
    pub law: ContactLaw,
}

impl BarrierProfile {
    /// Flat obstacle at height `y_c` under the whole string.
    pub fn flat(params: &StringParams, y_c: f64, law: ContactLaw) -> Result<Self> {
        Self::from_fn(params, law, |_| Some(y_c))
    }

    /// Obstacle height as a function of position; `None` leaves the node free.
    pub fn from_fn(
        params: &StringParams,
        law: ContactLaw,
        profile: impl Fn(f64) -> Option<f64>,
    ) -> Result<Self> {
        law.validate()?;
        let (heights, active): (Vec<f64>, Vec<bool>) = params
            .positions()
            .into_iter()
            .map(|x| match profile(x) {
                Some(h) => (h, true),
                None => (f64::NEG_INFINITY, false),
            })
            .unzip();
        let barrier = Self {
            heights,
            active,
            law,
        };
        barrier.validate()?;
        Ok(barrier)
    }

    pub fn validate(&self) -> Result<()> {
        if self.heights.len() != self.active.len() {
            return Err(Error::DimensionMismatch {
                expected: self.heights.len(),
                got: self.active.len(),
            });
        }
        if self
            .heights
            .iter()
            .zip(&self.active)
            .any(|(h, &on)| on && !h.is_finite())
        {
            return Err(Error::InvalidParameter(
                "active barrier heights must be finite".into(),
            ));
        }
        self.law.validate()
    }

    fn active_nodes(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.heights
            .iter()
            .zip(&self.active)
            .enumerate()
            .filter(|(_, (_, &on))| on)
            .map(|(i, (&h, _))| (i, h))
    }

    /// `k_c Δt² / (2ρA)`, equal to `ζ (α + 1)`.
    fn scale(&self, params: &StringParams) -> f64 {
        self.law.stiffness * params.dt * params.dt / (2.0 * params.rho_a)
    }
}

impl ContactTerm for BarrierProfile {
    fn bandwidth(&self) -> usize {
        0
    }

    fn add_force(&self, params: &StringParams, y: &[f64], s: &[f64], out: &mut [f64]) {
        if !self.law.is_active() {
            return;
        }
        let scale = self.scale(params);
        for (i, h) in self.active_nodes() {
            let g = unit_quotient(h - y[i], s[i], self.law.exponent);
            out[i] -= scale * g.value;
        }
    }

    fn add_jacobian(
        &self,
        params: &StringParams,
        y: &[f64],
        s: &[f64],
        jac: &mut BandMatrix,
    ) -> bool {
        if !self.law.is_active() {
            return false;
        }
        let scale = self.scale(params);
        let mut any = false;
        for (i, h) in self.active_nodes() {
            let d = unit_quotient(h - y[i], s[i], self.law.exponent).d_step;
            if d != 0.0 {
                jac.add_diagonal(i, -scale * d);
                any = true;
            }
        }
        any
    }

    fn energy(&self, params: &StringParams, y: &[f64]) -> f64 {
        params.dx
            * self
                .active_nodes()
                .map(|(i, h)| contact_potential(h - y[i], &self.law))
                .sum::<f64>()
    }

    fn max_compression(&self, y: &[f64]) -> f64 {
        self.active_nodes()
            .map(|(i, h)| h - y[i])
            .fold(0.0, f64::max)
    }
}
