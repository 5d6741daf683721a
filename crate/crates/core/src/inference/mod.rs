// SPDX-License-Identifier: MIT
//! MAP fitting for a fixed graph and Laplace-approximated log evidence.

pub mod laplace;
pub mod optimize;
mod posterior;

use nalgebra::DMatrix;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use laplace::{laplace_approximation, FixedCoordinates, LaplaceApproximation};
pub use optimize::{minimize_bfgs, minimize_bfgs_preconditioned, MinimizeOptions, Minimum, Objective};
pub use posterior::{condition_means, Posterior};

use crate::error::{Error, Result};
use crate::likelihood::{NoiseModel, ParameterSet};
use crate::model::{ExperimentDesign, Graph};
use crate::priors::PriorConfig;
use crate::seed::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Sup-norm of the gradient at which a run counts as converged.
    pub gradient_tolerance: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            gradient_tolerance: 1e-6,
            restarts: 1,
            seed: 0,
        }
    }
}

/// Standard deviation of the Gaussian jitter added to the start of restarts
/// after the first.
pub const RESTART_JITTER: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: ParameterSet,
    /// Free vector at the optimum.
    pub vector: Vec<f64>,
    pub neg_log_posterior: f64,
    pub converged: bool,
    pub gradient_norm_at_solution: f64,
    pub iterations: usize,
    /// Objective at each accepted iterate of the winning restart.
    pub objective_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceResult {
    pub log_evidence: f64,
    pub map: FitResult,
    pub hessian_log_det: f64,
    pub parameter_count: usize,
    pub hessian_floored: bool,
    pub hessian_asymmetry: f64,
}

/// Best of `opts.restarts` BFGS runs on the negative log posterior.
pub fn fit_posterior(posterior: &Posterior<'_>, opts: &FitOptions) -> Result<FitResult> {
    let restarts = opts.restarts.max(1);
    let init = posterior.initial_point();
    let mopts = MinimizeOptions {
        max_iterations: opts.max_iterations,
        gradient_tolerance: opts.gradient_tolerance,
    };
    let jitter = Normal::new(0.0, RESTART_JITTER).expect("valid normal");
    let curvature = optimize::diagonal_curvature(posterior, &init);
    let mut best: Option<Minimum> = None;
    for r in 0..restarts {
        let start: Vec<f64> = if r == 0 {
            init.clone()
        } else {
            let mut rng = rng_for(opts.seed, &[r as u64]);
            init.iter().map(|v| v + jitter.sample(&mut rng)).collect()
        };
        match optimize::minimize_bfgs_preconditioned(posterior, &start, curvature.as_deref(), &mopts) {
            Some(m) if best.as_ref().is_none_or(|b| m.value < b.value) => best = Some(m),
            Some(_) => {}
            None => log::debug!("restart {r} started at an undefined point"),
        }
    }
    let mut best = best.ok_or(Error::AllRestartsFailed(restarts))?;
    if !best.converged {
        newton_polish(posterior, &mut best, opts.gradient_tolerance);
    }
    Ok(FitResult {
        params: posterior.parameters(&best.x)?,
        vector: best.x,
        neg_log_posterior: best.value,
        converged: best.converged,
        gradient_norm_at_solution: best.gradient_norm,
        iterations: best.iterations,
        objective_trace: best.trace,
    })
}

/// Newton steps with a finite-difference Hessian for when BFGS stalls in the
/// roundoff regime. Stiff coordinates (clamped compounds have tiny noise
/// scales) leave objective differences below machine precision long before
/// the gradient is small, so an objective change within `POLISH_SLACK` ulps
/// counts as a tie. A step is kept only if the gradient shrinks and the
/// objective does not rise beyond that slack. Polish steps are not part of
/// the optimizer trace.
fn newton_polish<O: Objective>(obj: &O, m: &mut Minimum, tol: f64) {
    for _ in 0..POLISH_STEPS {
        let Ok(h) = laplace::finite_difference_hessian(obj, &m.x) else {
            return;
        };
        let h = (&h + h.transpose()) * 0.5;
        let Some(chol) = h.cholesky() else {
            return;
        };
        let g = nalgebra::DVector::from_column_slice(&m.gradient);
        let step = chol.solve(&g);
        let x: Vec<f64> = m.x.iter().zip(step.iter()).map(|(a, s)| a - s).collect();
        let Some((f, grad)) = obj.eval(&x) else {
            return;
        };
        let norm = optimize::sup_norm(&grad);
        let slack = POLISH_SLACK * f64::EPSILON * m.value.abs().max(1.0);
        if !(f <= m.value + slack && norm < m.gradient_norm) {
            return;
        }
        m.x = x;
        m.value = f;
        m.gradient = grad;
        m.gradient_norm = norm;
        if norm <= tol {
            m.converged = true;
            return;
        }
    }
}

const POLISH_SLACK: f64 = 64.0;
const POLISH_STEPS: usize = 3;

pub fn map_fit(
    g: &Graph,
    data: &[DMatrix<f64>],
    design: &ExperimentDesign,
    prior: &PriorConfig,
    noise: NoiseModel,
    opts: &FitOptions,
) -> Result<FitResult> {
    let posterior = Posterior::new(g, data, design, prior, noise)?;
    fit_posterior(&posterior, opts)
}

/// Laplace evidence of an already-constructed posterior.
pub fn posterior_evidence(posterior: &Posterior<'_>, opts: &FitOptions) -> Result<EvidenceResult> {
    let map = fit_posterior(posterior, opts)?;
    let lap = laplace_approximation(posterior, &map.vector, map.neg_log_posterior)?;
    if lap.floored {
        log::debug!("Hessian not positive definite for {:?}; eigenvalues floored", posterior.graph());
    }
    Ok(EvidenceResult {
        log_evidence: lap.log_integral,
        map,
        hessian_log_det: lap.hessian_log_det,
        parameter_count: lap.dim,
        hessian_floored: lap.floored,
        hessian_asymmetry: lap.asymmetry,
    })
}

pub fn laplace_log_evidence(
    g: &Graph,
    data: &[DMatrix<f64>],
    design: &ExperimentDesign,
    prior: &PriorConfig,
    noise: NoiseModel,
    opts: &FitOptions,
) -> Result<EvidenceResult> {
    let posterior = Posterior::new(g, data, design, prior, noise)?;
    posterior_evidence(&posterior, opts)
}
