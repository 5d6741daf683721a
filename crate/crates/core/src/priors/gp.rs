// SPDX-License-Identifier: MIT
//! Gaussian-process prior on per-condition linearizations.
//!
//! For compound `i` and mechanism label `m`, each condition `c` with that label
//! contributes one pseudo-datum: the linearized function value at its own
//! linearization point `(<X_pa(i)>^(c), 0)` and the slopes with respect to each
//! parent and to the disturbance. All pseudo-data of a label are jointly
//! Gaussian under a zero-mean GP with an isotropic squared exponential kernel
//! and its derivative covariances, plus `sigma_jitter^2 I`.
//!
//! Stacking order within a label: every value (conditions ascending), then
//! every slope vector (conditions ascending; parents ascending, then the
//! disturbance slope).
//!
//! The disturbance slope is `alpha = exp(a)`; the density is over `alpha`, so
//! the log-Jacobian `sum_c a_i^(c)` is subtracted when working in `a`.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{masked_entries, ParameterSet};
use crate::model::{Graph, MechanismLabeling};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpPriorConfig {
    pub sigma_in: f64,
    pub sigma_out: f64,
    pub sigma_jitter: f64,
}

impl Default for GpPriorConfig {
    fn default() -> Self {
        Self {
            sigma_in: 10.0,
            sigma_out: 10.0,
            sigma_jitter: 0.01,
        }
    }
}

impl GpPriorConfig {
    pub fn new(sigma_in: f64, sigma_out: f64, sigma_jitter: f64) -> Result<Self> {
        if !(sigma_in > 0.0 && sigma_out > 0.0 && sigma_jitter > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "GP prior scales must be positive, got {sigma_in}, {sigma_out}, {sigma_jitter}"
            )));
        }
        Ok(Self {
            sigma_in,
            sigma_out,
            sigma_jitter,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoDatum {
    /// `(<X_pa(i)>, 0)`
    pub location: Vec<f64>,
    /// `mu_i + sum_j B_ji <X_j>`
    pub value: f64,
    /// `(B_ji for j in pa(i), alpha_i)`
    pub slopes: Vec<f64>,
}

/// Pseudo-data for every `(i, m)`, indexed `[i][m]`.
///
/// `parent_means[c]` holds the per-compound empirical means of condition `c`.
pub fn build_pseudodata(
    params: &ParameterSet,
    parent_means: &[DVector<f64>],
    g: &Graph,
    labeling: &MechanismLabeling,
) -> Result<Vec<Vec<Vec<PseudoDatum>>>> {
    if parent_means.len() != params.k() || labeling.k() != params.k() {
        return Err(Error::DimensionMismatch(
            "parent means, labels and parameters disagree on the condition count".into(),
        ));
    }
    (0..g.d())
        .map(|i| {
            let pa = g.parents(i)?;
            Ok((0..labeling.counts()[i])
                .map(|m| {
                    labeling
                        .conditions_with(i, m)
                        .into_iter()
                        .map(|c| {
                            let p = params.condition(c);
                            let means = &parent_means[c];
                            let mut location: Vec<f64> = pa.iter().map(|&j| means[j]).collect();
                            location.push(0.0);
                            let value =
                                p.mu[i] + pa.iter().map(|&j| p.b[(j, i)] * means[j]).sum::<f64>();
                            let mut slopes: Vec<f64> = pa.iter().map(|&j| p.b[(j, i)]).collect();
                            slopes.push(p.a[i].exp());
                            PseudoDatum {
                                location,
                                value,
                                slopes,
                            }
                        })
                        .collect()
                })
                .collect())
        })
        .collect()
}

/// Covariances between `f` and its gradient at two input locations.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBlock {
    /// `cov(f(u), f(u2))`
    pub value_value: f64,
    /// `cov(f(u), df(u2)/du2_j)`
    pub value_slope: Vec<f64>,
    /// `cov(df(u)/du_i, df(u2)/du2_j)`
    pub slope_slope: DMatrix<f64>,
}

pub fn gp_kernel_block(u: &[f64], u2: &[f64], cfg: &GpPriorConfig) -> KernelBlock {
    assert_eq!(u.len(), u2.len(), "kernel inputs differ in dimension");
    let q = u.len();
    let l2 = cfg.sigma_in * cfg.sigma_in;
    let diff: Vec<f64> = u.iter().zip(u2).map(|(a, b)| a - b).collect();
    let sq: f64 = diff.iter().map(|d| d * d).sum();
    let k = cfg.sigma_out * cfg.sigma_out * (-sq / (2.0 * l2)).exp();
    let value_slope = diff.iter().map(|d| k * d / l2).collect();
    let slope_slope = DMatrix::from_fn(q, q, |a, b| {
        let delta = if a == b { 1.0 / l2 } else { 0.0 };
        k * (delta - diff[a] * diff[b] / (l2 * l2))
    });
    KernelBlock {
        value_value: k,
        value_slope,
        slope_slope,
    }
}

/// Joint covariance of stacked pseudo-data at `locations`, jitter included.
fn assemble_covariance(locations: &[Vec<f64>], cfg: &GpPriorConfig) -> DMatrix<f64> {
    let n = locations.len();
    let q = locations.first().map_or(0, Vec::len);
    let size = n * (q + 1);
    let mut cov = DMatrix::zeros(size, size);
    let slot = |c: usize, r: usize| n + c * q + r;
    for c in 0..n {
        for c2 in 0..n {
            let blk = gp_kernel_block(&locations[c], &locations[c2], cfg);
            cov[(c, c2)] = blk.value_value;
            for r in 0..q {
                cov[(c, slot(c2, r))] = blk.value_slope[r];
                // cov(df(u_c)/du_r, f(u_c2)) = cov(f(u_c2), df(u_c)/du_r)
                cov[(slot(c2, r), c)] = blk.value_slope[r];
                for r2 in 0..q {
                    cov[(slot(c, r), slot(c2, r2))] = blk.slope_slope[(r, r2)];
                }
            }
        }
    }
    let jitter = cfg.sigma_jitter * cfg.sigma_jitter;
    for k in 0..size {
        cov[(k, k)] += jitter;
    }
    cov
}

fn factorize(cov: DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let chol = Cholesky::new(cov).ok_or_else(|| {
        Error::NumericalBreakdown("GP covariance not positive definite after jitter".into())
    })?;
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok((chol, log_det))
}

fn stack(pseudo: &[PseudoDatum]) -> DVector<f64> {
    let values = pseudo.iter().map(|p| p.value);
    let slopes = pseudo.iter().flat_map(|p| p.slopes.iter().copied());
    DVector::from_iterator(pseudo.len() * (1 + pseudo[0].slopes.len()), values.chain(slopes))
}

/// Negative log prior density of one label's pseudo-data, in `(b, mu, a)`
/// coordinates (the `alpha -> a` log-Jacobian included).
pub fn gp_prior_neg_logpdf(pseudo: &[PseudoDatum], cfg: &GpPriorConfig) -> Result<f64> {
    if pseudo.is_empty() {
        return Err(Error::InvalidArgument("GP block without pseudo-data".into()));
    }
    let locations: Vec<Vec<f64>> = pseudo.iter().map(|p| p.location.clone()).collect();
    let (chol, log_det) = factorize(assemble_covariance(&locations, cfg))?;
    let y = stack(pseudo);
    let solved = chol.solve(&y);
    let jacobian: f64 = pseudo.iter().map(|p| p.slopes.last().unwrap().ln()).sum();
    Ok(0.5 * y.dot(&solved) + 0.5 * log_det + 0.5 * y.len() as f64 * (2.0 * PI).ln() - jacobian)
}

struct LabelBlock {
    compound: usize,
    parents: Vec<usize>,
    conditions: Vec<usize>,
    /// `parent_means[c][k]` for the k-th parent, per listed condition.
    means: Vec<Vec<f64>>,
    chol: Cholesky<f64, Dyn>,
    log_det: f64,
}

/// GP prior over the full per-condition parameter vector for one graph.
///
/// Locations depend only on the data, so each label's covariance is factorized
/// once at construction.
pub struct GpPrior {
    graph: Graph,
    k: usize,
    blocks: Vec<LabelBlock>,
}

impl GpPrior {
    pub fn new(
        graph: &Graph,
        labeling: &MechanismLabeling,
        parent_means: &[DVector<f64>],
        cfg: &GpPriorConfig,
    ) -> Result<Self> {
        let mut blocks = Vec::with_capacity(labeling.total_mechanisms());
        for i in 0..graph.d() {
            let parents = graph.parents(i)?;
            for m in 0..labeling.counts()[i] {
                let conditions = labeling.conditions_with(i, m);
                let means: Vec<Vec<f64>> = conditions
                    .iter()
                    .map(|&c| parents.iter().map(|&j| parent_means[c][j]).collect())
                    .collect();
                let locations: Vec<Vec<f64>> = means
                    .iter()
                    .map(|mu| mu.iter().copied().chain(std::iter::once(0.0)).collect())
                    .collect();
                let (chol, log_det) = factorize(assemble_covariance(&locations, cfg))?;
                blocks.push(LabelBlock {
                    compound: i,
                    parents: parents.clone(),
                    conditions,
                    means,
                    chol,
                    log_det,
                });
            }
        }
        Ok(Self {
            graph: graph.clone(),
            k: labeling.k(),
            blocks,
        })
    }

    /// Value and gradient in full free-vector order.
    pub fn neg_logpdf_and_gradient(&self, params: &ParameterSet) -> (f64, Vec<f64>) {
        let d = self.graph.d();
        let masked = masked_entries(&self.graph);
        let e = masked.len();
        let per = e + 2 * d;
        let b_slot = |p: usize, i: usize| masked.iter().position(|&x| x == (p, i)).unwrap();
        let mut value = 0.0;
        let mut grad = vec![0.0; self.k * per];
        for blk in &self.blocks {
            let i = blk.compound;
            let np = blk.parents.len();
            let n = blk.conditions.len();
            let q = np + 1;
            let mut y = DVector::zeros(n * (q + 1));
            for (r, &c) in blk.conditions.iter().enumerate() {
                let p = params.condition(c);
                let mut v = p.mu[i];
                for (k, &j) in blk.parents.iter().enumerate() {
                    v += p.b[(j, i)] * blk.means[r][k];
                    y[n + r * q + k] = p.b[(j, i)];
                }
                y[r] = v;
                y[n + r * q + np] = p.a[i].exp();
            }
            let solved = blk.chol.solve(&y);
            value += 0.5 * y.dot(&solved)
                + 0.5 * blk.log_det
                + 0.5 * y.len() as f64 * (2.0 * PI).ln();
            for (r, &c) in blk.conditions.iter().enumerate() {
                let base = c * per;
                let gv = solved[r];
                grad[base + e + i] += gv;
                for (k, &j) in blk.parents.iter().enumerate() {
                    grad[base + b_slot(j, i)] += gv * blk.means[r][k] + solved[n + r * q + k];
                }
                let a = params.condition(c).a[i];
                value -= a;
                grad[base + e + d + i] += solved[n + r * q + np] * a.exp() - 1.0;
            }
        }
        (value, grad)
    }
}
