use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    /// Time steps, coarsest first; the last one is the reference.
    pub dts: Vec<f64>,
    /// Max-norm distance of each rung's terminal state from the reference.
    pub errors: Vec<f64>,
    /// Fitted order `p`.
    pub slope: f64,
}

/// Observed order of accuracy from a halving ladder of time steps.
///
/// `run(dt)` returns the terminal state. Because the reference is itself a
/// discrete solution, the fit is `e(Δt) = C (Δt^p - Δt_ref^p)` in the log
/// domain rather than a plain straight line, which would bias `p` upwards
/// at the fine end.
pub fn convergence_order<F>(dt_ladder: &[f64], run: F) -> Result<ConvergenceStudy>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    if dt_ladder.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "need at least 4 rungs, got {}",
            dt_ladder.len()
        )));
    }
    for w in dt_ladder.windows(2) {
        if ((w[0] / w[1]) - 2.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "rungs must halve the time step ({} -> {})",
                w[0], w[1]
            )));
        }
    }
    use rayon::prelude::*;
    let finals: Vec<Vec<f64>> = dt_ladder
        .par_iter()
        .map(|&dt| run(dt))
        .collect::<Result<_>>()?;
    let reference = finals.last().expect("non-empty ladder");
    let errors: Vec<f64> = finals[..finals.len() - 1]
        .iter()
        .map(|x| {
            x.iter()
                .zip(reference)
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
        })
        .collect();
    let dts = dt_ladder.to_vec();
    fit_order(&dts, &errors).map(|slope| ConvergenceStudy { dts, errors, slope })
}

/// Fit `p` given per-rung errors against the last entry of `dts`.
pub fn fit_order(dts: &[f64], errors: &[f64]) -> Result<f64> {
    if errors.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::NonMonotoneConvergence(
            "a rung coincides with the reference".into(),
        ));
    }
    if errors.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::NonMonotoneConvergence(format!(
            "errors do not decrease with the time step: {errors:?}"
        )));
    }
    let dt_ref = *dts.last().expect("non-empty");
    let misfit = |p: f64| {
        let logs: Vec<f64> = errors
            .iter()
            .zip(dts)
            .map(|(e, dt)| e.ln() - (dt.powf(p) - dt_ref.powf(p)).ln())
            .collect();
        let mean = logs.iter().sum::<f64>() / logs.len() as f64;
        logs.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
    };
    // golden-section search
    let (mut a, mut b) = (0.1, 8.0);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    while b - a > 1e-10 {
        if misfit(c) < misfit(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    Ok(0.5 * (a + b))
}
