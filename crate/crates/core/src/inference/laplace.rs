// SPDX-License-Identifier: MIT
//! Laplace approximation of `log ∫ exp(-U(θ)) dθ` around a mode:
//!
//! `-U(θ*) + (d/2) log 2π - ½ log det H`
//!
//! with `H` the Hessian of `U` at `θ*`, obtained by central differences of the
//! analytic gradient.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use super::optimize::Objective;
use crate::error::{Error, Result};

/// Eigenvalues below this fraction of the largest are floored.
pub const EIGEN_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceApproximation {
    pub log_integral: f64,
    pub hessian_log_det: f64,
    pub dim: usize,
    /// Some eigenvalue had to be floored (non-positive-definite Hessian).
    pub floored: bool,
    /// `max |H - H^T| / max |H|` before symmetrization.
    pub asymmetry: f64,
}

/// Finite-difference Hessian, step `1e-4 * max(1, |θ_j|)` per coordinate.
/// Returned unsymmetrized.
pub fn finite_difference_hessian<O: Objective>(obj: &O, x: &[f64]) -> Result<DMatrix<f64>> {
    let n = x.len();
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let h = 1e-4 * x[j].abs().max(1.0);
            let mut up = x.to_vec();
            let mut dn = x.to_vec();
            up[j] += h;
            dn[j] -= h;
            let (_, gu) = obj.eval(&up).ok_or_else(undefined)?;
            let (_, gd) = obj.eval(&dn).ok_or_else(undefined)?;
            Ok(gu.iter().zip(&gd).map(|(a, b)| (a - b) / (2.0 * h)).collect())
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(n, n, |i, j| columns[j][i]))
}

fn undefined() -> Error {
    Error::NumericalBreakdown("objective undefined next to the mode".into())
}

/// `log det` of a symmetric matrix. A positive definite matrix is used as is,
/// however badly conditioned; otherwise eigenvalues are floored at
/// `EIGEN_FLOOR * max eigenvalue`. The flag reports whether flooring kicked in.
pub fn floored_log_det(h: &DMatrix<f64>) -> (f64, bool) {
    if h.nrows() == 0 {
        return (0.0, false);
    }
    let eig = SymmetricEigen::new(h.clone());
    if eig.eigenvalues.min() > 0.0 {
        return (eig.eigenvalues.iter().map(|l| l.ln()).sum(), false);
    }
    let top = eig.eigenvalues.max();
    let floor = EIGEN_FLOOR * top.abs().max(f64::MIN_POSITIVE);
    let log_det = eig.eigenvalues.iter().map(|&l| l.max(floor).ln()).sum();
    (log_det, true)
}

/// Laplace approximation at a mode `x` where the objective equals `value`.
pub fn laplace_approximation<O: Objective>(
    obj: &O,
    x: &[f64],
    value: f64,
) -> Result<LaplaceApproximation> {
    let raw = finite_difference_hessian(obj, x)?;
    let scale = raw.amax();
    let asymmetry = if scale > 0.0 {
        (&raw - raw.transpose()).amax() / scale
    } else {
        0.0
    };
    let sym = (&raw + raw.transpose()) * 0.5;
    let (hessian_log_det, floored) = floored_log_det(&sym);
    let dim = x.len();
    Ok(LaplaceApproximation {
        log_integral: -value + 0.5 * dim as f64 * (2.0 * PI).ln() - 0.5 * hessian_log_det,
        hessian_log_det,
        dim,
        floored,
        asymmetry,
    })
}

/// Holds some coordinates of an objective fixed; the remaining ones are free.
pub struct FixedCoordinates<'a, O: Objective> {
    inner: &'a O,
    /// Full-length template carrying the fixed values.
    template: Vec<f64>,
    free: Vec<usize>,
}

impl<'a, O: Objective> FixedCoordinates<'a, O> {
    pub fn new(inner: &'a O, template: Vec<f64>, fixed: &[usize]) -> Self {
        let free = (0..template.len()).filter(|k| !fixed.contains(k)).collect();
        Self {
            inner,
            template,
            free,
        }
    }

    pub fn embed(&self, x: &[f64]) -> Vec<f64> {
        let mut full = self.template.clone();
        for (&k, &v) in self.free.iter().zip(x) {
            full[k] = v;
        }
        full
    }

    pub fn project(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&k| full[k]).collect()
    }
}

impl<O: Objective> Objective for FixedCoordinates<'_, O> {
    fn dim(&self) -> usize {
        self.free.len()
    }

    fn eval(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let (v, g) = self.inner.eval(&self.embed(x))?;
        Some((v, self.project(&g)))
    }
}
