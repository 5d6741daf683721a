// SPDX-License-Identifier: MIT
//! Synthetic equilibrium data from a known linear SCM under interventions.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{log_abs_det_i_minus_b, ConditionParameters, NoiseModel};
use crate::model::{ExperimentDesign, Graph, Intervention};
use crate::seed::rng_for;

/// Log noise scale of a clamped compound.
pub const ABUNDANCE_CLAMP_LOG_SCALE: f64 = -4.605_170_185_988_091; // ln 0.01

/// Fresh seeds tried per condition before giving up on a singular draw.
pub const MAX_RESAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthModel {
    pub graph: Graph,
    pub base: ConditionParameters,
    pub noise: NoiseModel,
}

impl GroundTruthModel {
    pub fn new(graph: Graph, base: ConditionParameters, noise: NoiseModel) -> Result<Self> {
        base.check_mask(&graph)?;
        log_abs_det_i_minus_b(&base.b)?;
        Ok(Self { graph, base, noise })
    }

    pub fn d(&self) -> usize {
        self.graph.d()
    }

    /// Random base mechanisms on `graph`: coefficients with magnitude uniform in
    /// `coef_range` and random sign, intercepts `N(0, 1)`, unit noise scales.
    /// Draws are repeated until `I - B` is comfortably nonsingular.
    pub fn random<R: Rng + ?Sized>(
        graph: Graph,
        noise: NoiseModel,
        coef_range: (f64, f64),
        rng: &mut R,
    ) -> Result<Self> {
        let (lo, hi) = coef_range;
        if !(0.0 <= lo && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad coefficient range {lo}..{hi}")));
        }
        let d = graph.d();
        for _ in 0..100 {
            let mut base = ConditionParameters::zeros(d);
            for (i, j) in graph.edges() {
                let m = rng.random_range(lo..=hi);
                base.b[(i, j)] = if rng.random::<bool>() { m } else { -m };
            }
            for i in 0..d {
                base.mu[i] = StandardNormal.sample(rng);
            }
            let det = (DMatrix::identity(d, d) - &base.b).determinant().abs();
            if det > 0.1 {
                return Self::new(graph, base, noise);
            }
        }
        Err(Error::SingularMatrix)
    }

    /// `E[x] = (I - B)^{-T} mu` under the base mechanisms.
    pub fn equilibrium_mean(&self) -> DVector<f64> {
        equilibrium_mean(&self.base).expect("base is nonsingular")
    }
}

pub fn equilibrium_mean(p: &ConditionParameters) -> Result<DVector<f64>> {
    let d = p.d();
    let imb_t = (DMatrix::identity(d, d) - &p.b).transpose();
    imb_t.lu().solve(&p.mu).ok_or(Error::SingularMatrix)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedStudy {
    pub design: ExperimentDesign,
    pub per_condition_models: Vec<ConditionParameters>,
    pub data: Vec<DMatrix<f64>>,
    pub truth: GroundTruthModel,
}

/// Rows `x = (I - B)^{-T} (mu + alpha ∘ eps)` for every row `eps` of `eps`.
pub fn solve_equilibrium(p: &ConditionParameters, eps: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = p.d();
    if eps.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "disturbances have {} columns, model has {d}",
            eps.ncols()
        )));
    }
    // same singularity threshold as the likelihood
    log_abs_det_i_minus_b(&p.b)?;
    let alpha = p.alpha();
    // rhs^T = (1 mu^T + E diag(alpha))^T, solved as (I - B)^T X^T = rhs^T
    let rhs_t = DMatrix::from_fn(d, eps.nrows(), |i, n| p.mu[i] + alpha[i] * eps[(n, i)]);
    let imb_t = (DMatrix::identity(d, d) - &p.b).transpose();
    let x_t = imb_t.lu().solve(&rhs_t).ok_or(Error::SingularMatrix)?;
    Ok(x_t.transpose())
}

/// One draw from the noise model. The super-Gaussian case inverts the CDF
/// `(2/π) arctan(e^x)`.
pub fn sample_noise<R: Rng + ?Sized>(noise: NoiseModel, rng: &mut R) -> f64 {
    match noise {
        NoiseModel::Gaussian => StandardNormal.sample(rng),
        NoiseModel::SuperGaussian => {
            let u: f64 = rng.random();
            // u in [0, 1); 0 maps to -inf, so nudge it into the open interval
            let u = u.max(f64::MIN_POSITIVE);
            (FRAC_PI_2 * u).tan().ln()
        }
    }
}

pub fn sample_disturbances<R: Rng + ?Sized>(
    noise: NoiseModel,
    n: usize,
    d: usize,
    rng: &mut R,
) -> DMatrix<f64> {
    // row-major draw order so adding columns does not reshuffle earlier rows
    let mut e = DMatrix::zeros(n, d);
    for r in 0..n {
        for c in 0..d {
            e[(r, c)] = sample_noise(noise, rng);
        }
    }
    e
}

fn perturb_column(p: &mut ConditionParameters, g: &Graph, j: usize, magnitude: f64, seed: u64) {
    let mut rng = rng_for(seed, &[j as u64]);
    let n = Normal::new(0.0, magnitude).expect("positive magnitude");
    for i in g.parents(j).expect("in range") {
        p.b[(i, j)] += n.sample(&mut rng);
    }
    p.mu[j] += n.sample(&mut rng);
    p.a[j] += n.sample(&mut rng);
}

/// Intervened mechanisms for one condition.
///
/// Abundance on `i` clamps `x_i` near a level drawn from
/// `N(E[x_i], magnitude²)`: its incoming column of `b` is zeroed and its noise
/// scale set to `ABUNDANCE_CLAMP_LOG_SCALE`. Activity on `i` and mechanism
/// sets perturb the affected columns (`b` on graph edges, `mu`, `a`) by
/// independent `N(0, magnitude²)` draws, seeded per column.
pub fn apply_intervention(
    model: &GroundTruthModel,
    iv: &Intervention,
    magnitude: f64,
    seed: u64,
) -> Result<ConditionParameters> {
    if !(magnitude > 0.0) {
        return Err(Error::InvalidArgument(format!("magnitude {magnitude} must be positive")));
    }
    iv.targets().iter().try_for_each(|&t| {
        if t < model.d() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: t, d: model.d() })
        }
    })?;
    let g = &model.graph;
    let mut p = model.base.clone();
    match iv {
        Intervention::Observational => {}
        Intervention::Abundance(i) => {
            let mut rng = rng_for(seed, &[u64::MAX, *i as u64]);
            let mean = model.equilibrium_mean()[*i];
            let z: f64 = StandardNormal.sample(&mut rng);
            p.b.column_mut(*i).fill(0.0);
            p.mu[*i] = mean + magnitude * z;
            p.a[*i] = ABUNDANCE_CLAMP_LOG_SCALE;
        }
        Intervention::Activity(i) => {
            for j in g.children(*i)? {
                perturb_column(&mut p, g, j, magnitude, seed);
            }
        }
        Intervention::MechanismSet(set) => {
            for &j in set {
                perturb_column(&mut p, g, j, magnitude, seed);
            }
        }
    }
    Ok(p)
}

/// Applies each condition's intervention and draws `n_per_condition`
/// equilibrium samples. A condition whose perturbed `I - B` is singular is
/// redrawn with a new sub-seed, at most `MAX_RESAMPLES` times.
pub fn generate_study(
    truth: &GroundTruthModel,
    design: &ExperimentDesign,
    n_per_condition: usize,
    magnitude: f64,
    seed: u64,
) -> Result<SimulatedStudy> {
    design.validate_for(truth.d())?;
    let d = truth.d();
    let per: Vec<(ConditionParameters, DMatrix<f64>)> = design
        .conditions()
        .par_iter()
        .enumerate()
        .map(|(c, iv)| {
            let mut last = Error::SingularMatrix;
            for attempt in 0..MAX_RESAMPLES {
                let sub = crate::seed::derive_seed(seed, ((c as u64) << 8) | attempt as u64);
                let p = apply_intervention(truth, iv, magnitude, sub)?;
                let mut rng = rng_for(sub, &[0xe5]);
                let eps = sample_disturbances(truth.noise, n_per_condition, d, &mut rng);
                match solve_equilibrium(&p, &eps) {
                    Ok(x) => return Ok((p, x)),
                    Err(e @ Error::SingularMatrix) => {
                        log::debug!("condition {c}: singular draw, attempt {attempt}");
                        last = e;
                    }
                    Err(e) => return Err(e),
                }
            }
            Err(last)
        })
        .collect::<Result<_>>()?;
    let (per_condition_models, data) = per.into_iter().unzip();
    Ok(SimulatedStudy {
        design: design.clone(),
        per_condition_models,
        data,
        truth: truth.clone(),
    })
}
