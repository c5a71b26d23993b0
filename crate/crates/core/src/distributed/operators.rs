//! Finite-difference operators with the end conditions folded in.
//!
//! Both `D2` and `D4` are built as Gram matrices, `D2 = -D1ᵗ D1` and
//! `D4 = Lᵗ L`, where `D1` takes differences across every grid edge and `L`
//! evaluates curvature at every node where it is not forced to zero. That
//! makes them exactly symmetric and keeps `yᵗ D y` a sum of squares.
//!
//! Curvature rows:
//! - every interior node `1..=N`;
//! - a clamped end adds its boundary node, where the ghost equals the
//!   (zero) boundary value, leaving the single term `y_1` (or `y_N`);
//! - simply supported and free ends have zero boundary curvature and add
//!   nothing. A free end differs only in keeping its node as an unknown.

use super::{BoundaryCondition, StringParams};
use crate::banded::BandMatrix;
use crate::error::{Error, Result};

/// Rectangular sparse matrix stored by rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows {
    pub cols: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, a)| a * x[j]).sum())
            .collect()
    }

    /// `xᵗ (Aᵗ A) x = |A x|²`
    pub fn norm_sq(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().map(|v| v * v).sum()
    }

    /// `Aᵗ A` as a band matrix.
    pub fn gram(&self, bandwidth: usize) -> BandMatrix {
        let mut out = BandMatrix::zeros(self.cols, bandwidth);
        for row in &self.rows {
            for &(i, a) in row {
                for &(j, b) in row {
                    if i <= j {
                        out.add(i, j, a * b);
                    }
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|row| {
                let mut dense = vec![0.0; self.cols];
                for &(j, a) in row {
                    dense[j] += a;
                }
                dense
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SpatialOperators {
    /// Differences across the `N + 1` grid edges.
    pub d1: SparseRows,
    /// Curvature operator, `D4 = Lᵗ L`.
    pub curvature: SparseRows,
    pub d2: BandMatrix,
    pub d4: BandMatrix,
    /// `β4 D4 - β2 D2`
    pub d: BandMatrix,
}

impl SpatialOperators {
    pub fn dim(&self) -> usize {
        self.d.dim()
    }
}

pub fn build_operators(params: &StringParams) -> Result<SpatialOperators> {
    params.validate()?;
    if params.n < 4 {
        return Err(Error::InvalidParameter(format!(
            "need at least 4 interior nodes, got {}",
            params.n
        )));
    }
    let cols = params.unknowns();
    let n = params.n;
    // Pinned nodes are zero and drop out.
    let entry = |m: usize, coef: f64| params.unknown_of(m).map(|i| (i, coef));

    let d1 = SparseRows {
        cols,
        rows: (0..=n)
            .map(|e| entry(e, -1.0).into_iter().chain(entry(e + 1, 1.0)).collect())
            .collect(),
    };

    let mut curvature_rows = Vec::with_capacity(n + 2);
    if params.bc_left == BoundaryCondition::Clamped {
        curvature_rows.push(vec![(0, 1.0)]);
    }
    for m in 1..=n {
        curvature_rows.push(
            entry(m - 1, 1.0)
                .into_iter()
                .chain(entry(m, -2.0))
                .chain(entry(m + 1, 1.0))
                .collect(),
        );
    }
    if params.bc_right == BoundaryCondition::Clamped {
        curvature_rows.push(vec![(cols - 1, 1.0)]);
    }
    let curvature = SparseRows {
        cols,
        rows: curvature_rows,
    };

    let d2 = d1.gram(1).scaled(-1.0);
    let d4 = curvature.gram(2);
    let d = d4.combine(params.beta4(), &d2, -params.beta2());
    Ok(SpatialOperators {
        d1,
        curvature,
        d2,
        d4,
        d,
    })
}
