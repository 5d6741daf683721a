// SPDX-License-Identifier: MIT
use nalgebra::{DMatrix, DVector};

use super::optimize::Objective;
use crate::error::{Error, Result};
use crate::likelihood::{nll_and_gradient, NoiseModel, ParameterSet};
use crate::model::{derive_mechanism_labels, ExperimentDesign, Graph, MechanismLabeling};
use crate::priors::{linear_prior_neg_logpdf, GpPrior, LinearPriorConfig, PriorConfig, TyingMap};

enum Coupling {
    /// Free vector is the reduced (tied) vector.
    Linear { tying: TyingMap, cfg: LinearPriorConfig },
    /// Free vector is the full per-condition vector.
    Gp { prior: GpPrior },
}

/// Negative log posterior of the parameters of one graph.
pub struct Posterior<'a> {
    data: &'a [DMatrix<f64>],
    graph: Graph,
    labeling: MechanismLabeling,
    noise: NoiseModel,
    coupling: Coupling,
}

/// Per-condition column means.
pub fn condition_means(data: &[DMatrix<f64>]) -> Vec<DVector<f64>> {
    data.iter()
        .map(|x| DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.mean())))
        .collect()
}

impl<'a> Posterior<'a> {
    pub fn new(
        graph: &Graph,
        data: &'a [DMatrix<f64>],
        design: &ExperimentDesign,
        prior: &PriorConfig,
        noise: NoiseModel,
    ) -> Result<Self> {
        if data.len() != design.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} data matrices for {} conditions",
                data.len(),
                design.len()
            )));
        }
        if let Some(x) = data.iter().find(|x| x.ncols() != graph.d()) {
            return Err(Error::DimensionMismatch(format!(
                "data has {} columns, graph has {} compounds",
                x.ncols(),
                graph.d()
            )));
        }
        if data.iter().any(|x| x.nrows() == 0) {
            return Err(Error::InvalidArgument("every condition needs at least one sample".into()));
        }
        let labeling = derive_mechanism_labels(graph, design)?;
        let coupling = match prior {
            PriorConfig::Linear(cfg) => Coupling::Linear {
                tying: TyingMap::new(graph, &labeling)?,
                cfg: *cfg,
            },
            PriorConfig::Gp(cfg) => Coupling::Gp {
                prior: GpPrior::new(graph, &labeling, &condition_means(data), cfg)?,
            },
        };
        Ok(Self {
            data,
            graph: graph.clone(),
            labeling,
            noise,
            coupling,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn labeling(&self) -> &MechanismLabeling {
        &self.labeling
    }

    pub fn data(&self) -> &[DMatrix<f64>] {
        self.data
    }

    pub fn dim(&self) -> usize {
        match &self.coupling {
            Coupling::Linear { tying, .. } => tying.reduced_len(),
            Coupling::Gp { .. } => self.data.len() * ParameterSet::per_condition_len(&self.graph),
        }
    }

    pub fn parameters(&self, x: &[f64]) -> Result<ParameterSet> {
        match &self.coupling {
            Coupling::Linear { tying, .. } => tying.expand(x),
            Coupling::Gp { .. } => ParameterSet::from_vector(self.graph.clone(), self.data.len(), x),
        }
    }

    pub fn vector(&self, params: &ParameterSet) -> Vec<f64> {
        match &self.coupling {
            Coupling::Linear { tying, .. } => tying.restrict(params),
            Coupling::Gp { .. } => params.to_vector(),
        }
    }

    /// Negative log-likelihood plus negative log prior, with gradient.
    pub fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let params = self.parameters(x)?;
        let (nll, full_grad) = nll_and_gradient(self.data, &params, self.noise)?;
        match &self.coupling {
            Coupling::Linear { tying, cfg } => {
                let (prior, prior_grad) = linear_prior_neg_logpdf(x, tying, cfg);
                let mut grad = tying.contract(&full_grad);
                for (g, p) in grad.iter_mut().zip(prior_grad) {
                    *g += p;
                }
                Ok((nll + prior, grad))
            }
            Coupling::Gp { prior } => {
                let (pv, pg) = prior.neg_logpdf_and_gradient(&params);
                let grad = full_grad.iter().zip(pg).map(|(a, b)| a + b).collect();
                Ok((nll + pv, grad))
            }
        }
    }

    /// Ridge-regression starting point.
    ///
    /// Each compound is regressed on its graph parents: pooled over the
    /// conditions sharing a label under the linear prior, per condition under
    /// the GP prior. Intercepts and log scales come from the residuals.
    pub fn initial_point(&self) -> Vec<f64> {
        let d = self.graph.d();
        let k = self.data.len();
        let parents: Vec<Vec<usize>> = (0..d).map(|i| self.graph.parents(i).unwrap()).collect();
        let mut params = ParameterSet::zeros(self.graph.clone(), k);
        let mut fits: Vec<Vec<(Vec<f64>, f64, f64)>> = vec![Vec::new(); d];
        for (i, pa) in parents.iter().enumerate() {
            let groups: Vec<Vec<usize>> = match &self.coupling {
                Coupling::Linear { .. } => (0..self.labeling.counts()[i])
                    .map(|m| self.labeling.conditions_with(i, m))
                    .collect(),
                Coupling::Gp { .. } => (0..k).map(|c| vec![c]).collect(),
            };
            fits[i] = groups
                .iter()
                .map(|conds| ridge_fit(self.data, conds, i, pa))
                .collect();
        }
        let mut per_condition = params.conditions().to_vec();
        for (c, p) in per_condition.iter_mut().enumerate() {
            for (i, pa) in parents.iter().enumerate() {
                let group = match &self.coupling {
                    Coupling::Linear { .. } => self.labeling.label(i, c),
                    Coupling::Gp { .. } => c,
                };
                let (b, mu, a) = &fits[i][group];
                for (&j, &bj) in pa.iter().zip(b) {
                    p.b[(j, i)] = bj;
                }
                p.mu[i] = *mu;
                p.a[i] = *a;
            }
        }
        params = ParameterSet::new(self.graph.clone(), per_condition).expect("mask respected");
        self.vector(&params)
    }
}

/// Ridge regression of column `target` on `parents` over the rows of `conds`.
/// Returns `(slopes, intercept, log residual scale)`.
fn ridge_fit(
    data: &[DMatrix<f64>],
    conds: &[usize],
    target: usize,
    parents: &[usize],
) -> (Vec<f64>, f64, f64) {
    let p = parents.len();
    let rows: usize = conds.iter().map(|&c| data[c].nrows()).sum();
    if rows == 0 {
        return (vec![0.0; p], 0.0, 0.0);
    }
    let n = rows as f64;
    let mut xm = vec![0.0; p];
    let mut ym = 0.0;
    for &c in conds {
        let x = &data[c];
        for r in 0..x.nrows() {
            ym += x[(r, target)];
            for (k, &j) in parents.iter().enumerate() {
                xm[k] += x[(r, j)];
            }
        }
    }
    ym /= n;
    xm.iter_mut().for_each(|v| *v /= n);
    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut xty = DVector::<f64>::zeros(p);
    for &c in conds {
        let x = &data[c];
        for r in 0..x.nrows() {
            let y = x[(r, target)] - ym;
            for (a, &ja) in parents.iter().enumerate() {
                let xa = x[(r, ja)] - xm[a];
                xty[a] += xa * y;
                for (b, &jb) in parents.iter().enumerate() {
                    gram[(a, b)] += xa * (x[(r, jb)] - xm[b]);
                }
            }
        }
    }
    for a in 0..p {
        gram[(a, a)] += 1e-3 * n;
    }
    let slopes = gram
        .cholesky()
        .map(|ch| ch.solve(&xty))
        .unwrap_or_else(|| DVector::zeros(p));
    let mu = ym - slopes.iter().zip(&xm).map(|(b, m)| b * m).sum::<f64>();
    let mut ss = 0.0;
    for &c in conds {
        let x = &data[c];
        for r in 0..x.nrows() {
            let mut res = x[(r, target)] - mu;
            for (k, &j) in parents.iter().enumerate() {
                res -= slopes[k] * x[(r, j)];
            }
            ss += res * res;
        }
    }
    let scale = (ss / n).sqrt().max(1e-3);
    (slopes.as_slice().to_vec(), mu, scale.ln())
}

impl Objective for Posterior<'_> {
    fn dim(&self) -> usize {
        Posterior::dim(self)
    }

    fn eval(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        match self.value_and_gradient(x) {
            Ok(v) => Some(v),
            Err(Error::SingularMatrix) => None,
            Err(e) => {
                log::debug!("posterior evaluation failed: {e}");
                None
            }
        }
    }
}
