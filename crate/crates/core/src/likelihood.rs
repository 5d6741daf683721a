// SPDX-License-Identifier: MIT
//! Multi-condition likelihood of linearized (possibly cyclic) structural models.
//!
//! Within one condition the data satisfy `X (I - B) = 1 mu^T + E diag(alpha)`,
//! and the negative log-likelihood is
//!
//! `-N log|det(I - B)| + sum_{n,i} [ rho(E_ni) + a_i ]`
//!
//! with `rho = -log p0` and `a = log alpha`. Conditions contribute additively.
//!
//! Free coordinates are vectorized per condition, in condition order: masked
//! entries of `B` column by column (target-major, parents ascending), then
//! `mu`, then `a`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Graph;

/// Pivot ratio below which `I - B` is declared singular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// `p0(e) = exp(-e^2 / 2) / sqrt(2 pi)`
    Gaussian,
    /// `p0(e) = 1 / (pi cosh e)`
    SuperGaussian,
}

impl NoiseModel {
    pub fn density(self, e: f64) -> f64 {
        (-noise_nll(e, self)).exp()
    }
}

impl std::str::FromStr for NoiseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(NoiseModel::Gaussian),
            "supergaussian" | "super-gaussian" | "super_gaussian" => Ok(NoiseModel::SuperGaussian),
            other => Err(Error::InvalidArgument(format!("unknown noise model `{other}`"))),
        }
    }
}

/// `-log p0(e)`
pub fn noise_nll(e: f64, model: NoiseModel) -> f64 {
    match model {
        NoiseModel::Gaussian => 0.5 * e * e + 0.5 * (2.0 * PI).ln(),
        NoiseModel::SuperGaussian => PI.ln() + log_cosh(e),
    }
}

/// `d/de [-log p0(e)]`
pub fn noise_nll_deriv(e: f64, model: NoiseModel) -> f64 {
    match model {
        NoiseModel::Gaussian => e,
        NoiseModel::SuperGaussian => e.tanh(),
    }
}

fn log_cosh(e: f64) -> f64 {
    let a = e.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Linearized mechanisms of one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionParameters {
    /// `b[(i, j)]` is the direct effect of `x_i` on `x_j`.
    pub b: DMatrix<f64>,
    pub mu: DVector<f64>,
    /// Log noise scales.
    pub a: DVector<f64>,
}

impl ConditionParameters {
    pub fn zeros(d: usize) -> Self {
        Self {
            b: DMatrix::zeros(d, d),
            mu: DVector::zeros(d),
            a: DVector::zeros(d),
        }
    }

    pub fn d(&self) -> usize {
        self.mu.len()
    }

    pub fn alpha(&self) -> DVector<f64> {
        self.a.map(f64::exp)
    }

    /// Checks shapes and that `b` vanishes outside the graph's edges.
    pub fn check_mask(&self, g: &Graph) -> Result<()> {
        let d = g.d();
        if self.b.shape() != (d, d) || self.mu.len() != d || self.a.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "condition parameters do not match {d} compounds"
            )));
        }
        for i in 0..d {
            for j in 0..d {
                if !g.has_edge(i, j) && self.b[(i, j)] != 0.0 {
                    return Err(Error::InvalidParameters(format!(
                        "b({i},{j}) is nonzero but {i} -> {j} is not an edge"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Per-condition parameters sharing a masking graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    graph: Graph,
    per_condition: Vec<ConditionParameters>,
}

/// Masked `(from, to)` pairs in vectorization order.
pub fn masked_entries(g: &Graph) -> Vec<(usize, usize)> {
    let d = g.d();
    let mut out = Vec::with_capacity(g.edge_count());
    for j in 0..d {
        for i in 0..d {
            if g.has_edge(i, j) {
                out.push((i, j));
            }
        }
    }
    out
}

impl ParameterSet {
    pub fn new(graph: Graph, per_condition: Vec<ConditionParameters>) -> Result<Self> {
        for p in &per_condition {
            p.check_mask(&graph)?;
        }
        Ok(Self {
            graph,
            per_condition,
        })
    }

    pub fn zeros(graph: Graph, k: usize) -> Self {
        let d = graph.d();
        Self {
            graph,
            per_condition: vec![ConditionParameters::zeros(d); k],
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn d(&self) -> usize {
        self.graph.d()
    }

    pub fn k(&self) -> usize {
        self.per_condition.len()
    }

    pub fn conditions(&self) -> &[ConditionParameters] {
        &self.per_condition
    }

    pub fn condition(&self, c: usize) -> &ConditionParameters {
        &self.per_condition[c]
    }

    /// Free coordinates per condition: masked slopes, intercepts, log scales.
    pub fn per_condition_len(g: &Graph) -> usize {
        g.edge_count() + 2 * g.d()
    }

    pub fn vector_len(&self) -> usize {
        self.k() * Self::per_condition_len(&self.graph)
    }

    pub fn to_vector(&self) -> Vec<f64> {
        let masked = masked_entries(&self.graph);
        let mut v = Vec::with_capacity(self.vector_len());
        for p in &self.per_condition {
            v.extend(masked.iter().map(|&(i, j)| p.b[(i, j)]));
            v.extend(p.mu.iter());
            v.extend(p.a.iter());
        }
        v
    }

    pub fn from_vector(graph: Graph, k: usize, v: &[f64]) -> Result<Self> {
        let d = graph.d();
        let per = Self::per_condition_len(&graph);
        if v.len() != k * per {
            return Err(Error::DimensionMismatch(format!(
                "parameter vector has {} entries, expected {}",
                v.len(),
                k * per
            )));
        }
        let masked = masked_entries(&graph);
        let e = masked.len();
        let per_condition = v
            .chunks(per)
            .map(|chunk| {
                let mut p = ConditionParameters::zeros(d);
                for (&(i, j), &x) in masked.iter().zip(chunk) {
                    p.b[(i, j)] = x;
                }
                p.mu = DVector::from_column_slice(&chunk[e..e + d]);
                p.a = DVector::from_column_slice(&chunk[e + d..e + 2 * d]);
                p
            })
            .collect();
        Ok(Self {
            graph,
            per_condition,
        })
    }
}

/// LU factorization of `I - B` with its log absolute determinant.
pub struct ImBFactor {
    pub log_abs_det: f64,
    lu: LU<f64, Dyn, Dyn>,
}

impl ImBFactor {
    /// `(I - B)^{-1}`
    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        self.lu.try_inverse().ok_or(Error::SingularMatrix)
    }

    /// Solves `(I - B) z = rhs`.
    pub fn solve(&self, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.lu.solve(rhs).ok_or(Error::SingularMatrix)
    }
}

/// `log |det(I - B)|` by partial-pivoted LU.
pub fn log_abs_det_i_minus_b(b: &DMatrix<f64>) -> Result<ImBFactor> {
    let d = b.nrows();
    let imb = DMatrix::identity(d, d) - b;
    let lu = imb.lu();
    let pivots = lu.u().diagonal();
    let max_pivot = pivots.iter().fold(0.0_f64, |m, p| m.max(p.abs()));
    let min_pivot = pivots.iter().fold(f64::INFINITY, |m, p| m.min(p.abs()));
    if d > 0 && (!max_pivot.is_finite() || min_pivot <= SINGULAR_PIVOT_RATIO * max_pivot) {
        return Err(Error::SingularMatrix);
    }
    let log_abs_det = pivots.iter().map(|p| p.abs().ln()).sum();
    Ok(ImBFactor { log_abs_det, lu })
}

/// Standardized disturbances `E = (X (I - B) - 1 mu^T) diag(1/alpha)`.
pub fn residuals(x: &DMatrix<f64>, p: &ConditionParameters) -> Result<DMatrix<f64>> {
    let d = p.d();
    if x.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "data has {} columns, parameters have {d}",
            x.ncols()
        )));
    }
    let mut e = x * (DMatrix::<f64>::identity(d, d) - &p.b);
    for i in 0..d {
        let inv_alpha = (-p.a[i]).exp();
        for v in e.column_mut(i).iter_mut() {
            *v = (*v - p.mu[i]) * inv_alpha;
        }
    }
    Ok(e)
}

fn check_shapes(data: &[DMatrix<f64>], params: &ParameterSet) -> Result<()> {
    if data.len() != params.k() {
        return Err(Error::DimensionMismatch(format!(
            "{} data matrices for {} conditions",
            data.len(),
            params.k()
        )));
    }
    if let Some(x) = data.iter().find(|x| x.ncols() != params.d()) {
        return Err(Error::DimensionMismatch(format!(
            "data has {} columns, model has {}",
            x.ncols(),
            params.d()
        )));
    }
    Ok(())
}

/// Value and (optionally) the full `dB`, `dmu`, `da` of one condition.
fn condition_terms(
    x: &DMatrix<f64>,
    p: &ConditionParameters,
    noise: NoiseModel,
    with_gradient: bool,
) -> Result<(f64, Option<ConditionParameters>)> {
    let n = x.nrows() as f64;
    let d = p.d();
    let factor = log_abs_det_i_minus_b(&p.b)?;
    let e = residuals(x, p)?;

    let mut value = -n * factor.log_abs_det + n * p.a.sum();
    for v in e.iter() {
        value += noise_nll(*v, noise);
    }
    if !with_gradient {
        return Ok((value, None));
    }

    let mut grad = ConditionParameters::zeros(d);
    // w = psi / alpha, column-scaled
    let mut w = e.map(|v| noise_nll_deriv(v, noise));
    for i in 0..d {
        let inv_alpha = (-p.a[i]).exp();
        let col_e = e.column(i);
        let mut dmu = 0.0;
        let mut da = n;
        for (psi, ev) in w.column_mut(i).iter_mut().zip(col_e.iter()) {
            da -= *psi * ev;
            *psi *= inv_alpha;
            dmu -= *psi;
        }
        grad.mu[i] = dmu;
        grad.a[i] = da;
    }
    let inv = factor.inverse()?;
    grad.b = -(x.transpose() * &w) + inv.transpose() * n;
    grad.b.fill_diagonal(0.0);
    Ok((value, Some(grad)))
}

/// Negative log-likelihood summed over conditions.
pub fn neg_log_likelihood(
    data: &[DMatrix<f64>],
    params: &ParameterSet,
    noise: NoiseModel,
) -> Result<f64> {
    check_shapes(data, params)?;
    data.iter()
        .zip(params.conditions())
        .map(|(x, p)| condition_terms(x, p, noise, false).map(|(v, _)| v))
        .sum()
}

/// Negative log-likelihood and its gradient in free-vector order.
pub fn nll_and_gradient(
    data: &[DMatrix<f64>],
    params: &ParameterSet,
    noise: NoiseModel,
) -> Result<(f64, Vec<f64>)> {
    check_shapes(data, params)?;
    let masked = masked_entries(params.graph());
    let mut total = 0.0;
    let mut grad = Vec::with_capacity(params.vector_len());
    for (x, p) in data.iter().zip(params.conditions()) {
        let (v, g) = condition_terms(x, p, noise, true)?;
        let g = g.expect("gradient requested");
        total += v;
        grad.extend(masked.iter().map(|&(i, j)| g.b[(i, j)]));
        grad.extend(g.mu.iter());
        grad.extend(g.a.iter());
    }
    Ok((total, grad))
}

/// Gradient of [`neg_log_likelihood`] in free-vector order.
pub fn nll_gradient(
    data: &[DMatrix<f64>],
    params: &ParameterSet,
    noise: NoiseModel,
) -> Result<Vec<f64>> {
    nll_and_gradient(data, params, noise).map(|(_, g)| g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quad(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        // composite Simpson
        let h = (hi - lo) / n as f64;
        let mut s = f(lo) + f(hi);
        for k in 1..n {
            let x = lo + k as f64 * h;
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn noise_values() {
        assert_relative_eq!(noise_nll(0.0, NoiseModel::Gaussian), 0.918_938_533_204_672_7, epsilon = 1e-12);
        assert_relative_eq!(noise_nll(0.0, NoiseModel::SuperGaussian), PI.ln(), epsilon = 1e-12);
        assert_eq!(noise_nll_deriv(2.0, NoiseModel::Gaussian), 2.0);
        assert_relative_eq!(noise_nll_deriv(2.0, NoiseModel::SuperGaussian), 0.964_027_580_075_817, epsilon = 1e-12);
        // log cosh stays finite far in the tails
        assert!(noise_nll(800.0, NoiseModel::SuperGaussian).is_finite());
    }

    #[test]
    fn densities_integrate_to_one() {
        for model in [NoiseModel::Gaussian, NoiseModel::SuperGaussian] {
            let total = quad(|e| model.density(e), -30.0, 30.0, 20_000);
            assert!((total - 1.0).abs() < 1e-6, "{model:?}: {total}");
        }
    }

    #[test]
    fn log_det_cases() {
        let mut b = DMatrix::zeros(3, 3);
        b[(0, 1)] = 0.7;
        b[(0, 2)] = -1.3;
        b[(1, 2)] = 2.0;
        assert_relative_eq!(log_abs_det_i_minus_b(&b).unwrap().log_abs_det, 0.0, epsilon = 1e-14);

        let b = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
        assert_relative_eq!(log_abs_det_i_minus_b(&b).unwrap().log_abs_det, 0.75_f64.ln(), epsilon = 1e-14);

        let b = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(matches!(log_abs_det_i_minus_b(&b), Err(Error::SingularMatrix)));
    }

    #[test]
    fn residual_cases() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -1.0, 0.5, 3.0, 4.0]);
        let p = ConditionParameters::zeros(2);
        assert_eq!(residuals(&x, &p).unwrap(), x);

        let mut p = ConditionParameters::zeros(2);
        p.mu = DVector::from_iterator(2, x.column_iter().map(|c| c.mean()));
        let e = residuals(&x, &p).unwrap();
        for c in e.column_iter() {
            assert!(c.mean().abs() < 1e-12);
        }

        let x = DMatrix::from_element(1, 1, 3.0);
        let mut p = ConditionParameters::zeros(1);
        p.mu[0] = 1.0;
        p.a[0] = 2.0_f64.ln();
        assert_relative_eq!(residuals(&x, &p).unwrap()[(0, 0)], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn single_standard_normal_point() {
        let params = ParameterSet::zeros(Graph::empty(1), 1);
        let v = neg_log_likelihood(&[DMatrix::zeros(1, 1)], &params, NoiseModel::Gaussian).unwrap();
        assert_relative_eq!(v, 0.5 * (2.0 * PI).ln(), epsilon = 1e-14);
    }

    #[test]
    fn two_cycle_hand_evaluation() {
        let g = Graph::from_edges(2, &[(0, 1), (1, 0)]).unwrap();
        let mut p = ConditionParameters::zeros(2);
        p.b[(0, 1)] = 0.5;
        p.b[(1, 0)] = 0.5;
        let params = ParameterSet::new(g, vec![p]).unwrap();
        let x = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        // x (I - B) = (1 - 0.5, 1 - 0.5)
        let expected = 2.0 * 0.5 * (2.0 * PI).ln() + 0.5 * (0.25 + 0.25) - 0.75_f64.ln();
        let v = neg_log_likelihood(&[x], &params, NoiseModel::Gaussian).unwrap();
        assert_relative_eq!(v, expected, epsilon = 1e-13);
    }

    #[test]
    fn centered_gradient_wrt_mu_vanishes() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, -1.0, 0.5, 3.0, 4.0, 1.0, -0.5]);
        let mut p = ConditionParameters::zeros(2);
        p.mu = DVector::from_iterator(2, x.column_iter().map(|c| c.mean()));
        let params = ParameterSet::new(Graph::empty(2), vec![p]).unwrap();
        let g = nll_gradient(&[x], &params, NoiseModel::Gaussian).unwrap();
        assert!(g[0].abs() < 1e-12 && g[1].abs() < 1e-12);
    }

    #[test]
    fn vector_round_trip() {
        let g = Graph::from_edges(3, &[(1, 0), (0, 2), (2, 1)]).unwrap();
        let v: Vec<f64> = (0..2 * (3 + 6)).map(|k| k as f64 * 0.1).collect();
        let ps = ParameterSet::from_vector(g.clone(), 2, &v).unwrap();
        assert_eq!(ps.to_vector(), v);
        // column-major: first masked entry is b(1,0)
        assert_eq!(ps.condition(0).b[(1, 0)], 0.0);
        assert_eq!(ps.condition(0).b[(2, 1)], 0.1);
        assert_eq!(ps.condition(0).b[(0, 2)], 0.2);
        assert!(ParameterSet::from_vector(g, 2, &v[1..]).is_err());
    }

    #[test]
    fn mask_enforced() {
        let mut p = ConditionParameters::zeros(2);
        p.b[(0, 1)] = 1.0;
        assert!(ParameterSet::new(Graph::empty(2), vec![p]).is_err());
    }
}
