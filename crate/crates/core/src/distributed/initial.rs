use serde::{Deserialize, Serialize};

use super::{GridState, StringParams};
use crate::error::{Error, Result};

/// Initial displacement; the string always starts at rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialShape {
    /// `amplitude · sin(mode π x / L)`
    SineMode { amplitude: f64, mode: u32 },
    /// Piecewise-linear hat with apex `amplitude` at `peak`.
    TrianglePluck { amplitude: f64, peak: f64 },
    /// Displacement given per state entry.
    Custom { values: Vec<f64> },
}

pub fn initial_condition(shape: &InitialShape, params: &StringParams) -> Result<GridState> {
    let l = params.length;
    let xs = params.positions();
    let y = match shape {
        InitialShape::SineMode { amplitude, mode } => {
            check_amplitude(*amplitude)?;
            let k = *mode as f64 * std::f64::consts::PI / l;
            xs.iter().map(|x| amplitude * (k * x).sin()).collect()
        }
        InitialShape::TrianglePluck { amplitude, peak } => {
            check_amplitude(*amplitude)?;
            if !(*peak > 0.0 && *peak < l) {
                return Err(Error::InvalidParameter(format!(
                    "pluck position {peak} must lie inside (0, {l})"
                )));
            }
            xs.iter()
                .map(|&x| {
                    let rel = if x <= *peak { x / peak } else { (l - x) / (l - peak) };
                    amplitude * rel
                })
                .collect()
        }
        InitialShape::Custom { values } => {
            if values.len() != xs.len() {
                return Err(Error::DimensionMismatch {
                    expected: xs.len(),
                    got: values.len(),
                });
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("initial shape must be finite".into()));
            }
            values.clone()
        }
    };
    Ok(GridState::at_rest(y))
}

fn check_amplitude(a: f64) -> Result<()> {
    if a.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("amplitude must be finite, got {a}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> StringParams {
        StringParams::new(0.001, 100.0, 0.0, 0.7, 0.007, 1.0 / 44100.0).unwrap()
    }

    #[test]
    fn sine_mode_samples_nodes() {
        let p = params();
        let st = initial_condition(&InitialShape::SineMode { amplitude: 0.002, mode: 1 }, &p).unwrap();
        assert_eq!(st.len(), 99);
        for (m, y) in st.y.iter().enumerate() {
            let x = (m + 1) as f64 * 0.007;
            assert_relative_eq!(*y, 0.002 * (std::f64::consts::PI * x / 0.7).sin(), max_relative = 1e-12);
        }
        assert!(st.q.iter().all(|q| *q == 0.0));
    }

    #[test]
    fn triangle_apex() {
        let p = params();
        let st = initial_condition(&InitialShape::TrianglePluck { amplitude: 0.002, peak: 0.35 }, &p)
            .unwrap();
        assert_relative_eq!(st.y[49], 0.002, max_relative = 1e-12);
        assert_relative_eq!(st.y[0], 0.002 * 0.007 / 0.35, max_relative = 1e-12);
        assert!(initial_condition(&InitialShape::TrianglePluck { amplitude: 1.0, peak: 0.7 }, &p).is_err());
    }

    #[test]
    fn zero_amplitude_is_rest() {
        let st = initial_condition(&InitialShape::SineMode { amplitude: 0.0, mode: 1 }, &params()).unwrap();
        assert!(st.y.iter().all(|v| *v == 0.0));
    }
}
