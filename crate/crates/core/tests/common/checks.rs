// SPDX-License-Identifier: MIT
//! Oracle suites shared by the focused tests and the acceptance run. Each
//! returns the worst error and the instance that produced it.

use std::f64::consts::PI;

use cyclic_scm::inference::{
    condition_means, laplace_approximation, minimize_bfgs, FixedCoordinates, MinimizeOptions, Posterior,
};
use cyclic_scm::likelihood::{log_abs_det_i_minus_b, neg_log_likelihood, nll_and_gradient, NoiseModel, ParameterSet};
use cyclic_scm::model::{derive_mechanism_labels, ExperimentDesign, Graph};
use cyclic_scm::priors::{linear_prior_neg_logpdf, GpPrior, GpPriorConfig, LinearPriorConfig, PriorConfig, TyingMap};
use nalgebra::DMatrix;
use rand::Rng;

use super::*;

pub const GRADIENT_INSTANCES: u64 = 50;
pub const GRADIENT_TOL: f64 = 1e-6;
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Worst {
    pub error: f64,
    pub instance: u64,
}

impl Worst {
    fn new() -> Self {
        Self { error: 0.0, instance: 0 }
    }

    fn update(&mut self, error: f64, instance: u64) {
        // NaN must not hide behind max
        if !(error <= self.error) {
            self.error = error;
            self.instance = instance;
        }
    }
}

fn noise_for(i: u64) -> NoiseModel {
    if i % 2 == 0 {
        NoiseModel::Gaussian
    } else {
        NoiseModel::SuperGaussian
    }
}

pub fn likelihood_gradient() -> Worst {
    let mut w = Worst::new();
    for s in 0..GRADIENT_INSTANCES {
        let mut r = rng(s);
        let d = r.random_range(1..=5);
        let k = r.random_range(1..=4);
        let g = random_graph(&mut r, d, s % 3 == 0);
        let params = random_params(&mut r, &g, k);
        let n = r.random_range(3..12);
        let data = random_data(&mut r, d, k, n);
        let noise = noise_for(s);
        let (v, grad) = nll_and_gradient(&data, &params, noise).unwrap();
        assert_eq!(v, neg_log_likelihood(&data, &params, noise).unwrap());
        let f = |x: &[f64]| {
            let p = ParameterSet::from_vector(g.clone(), k, x).unwrap();
            neg_log_likelihood(&data, &p, noise).unwrap()
        };
        let fd = fd_gradient(&f, &params.to_vector(), FD_STEP);
        w.update(max_rel_err(&grad, &fd), s);
    }
    w
}

pub fn linear_prior_gradient() -> Worst {
    let mut w = Worst::new();
    for s in 0..GRADIENT_INSTANCES {
        let mut r = rng(100 + s);
        let d = r.random_range(1..=5);
        let k = r.random_range(1..=4);
        let g = random_graph(&mut r, d, s % 2 == 0);
        let design = random_design(&mut r, d, k);
        let labeling = derive_mechanism_labels(&g, &design).unwrap();
        let tying = TyingMap::new(&g, &labeling).unwrap();
        let cfg = LinearPriorConfig::new(r.random_range(0.5..5.0), r.random_range(1.0..50.0)).unwrap();
        let x: Vec<f64> = (0..tying.reduced_len()).map(|_| normal(&mut r)).collect();
        let (_, grad) = linear_prior_neg_logpdf(&x, &tying, &cfg);
        let fd = fd_gradient(&|v: &[f64]| linear_prior_neg_logpdf(v, &tying, &cfg).0, &x, FD_STEP);
        w.update(max_rel_err(&grad, &fd), s);
    }
    w
}

pub fn gp_prior_gradient() -> Worst {
    let mut w = Worst::new();
    for s in 0..GRADIENT_INSTANCES {
        let mut r = rng(200 + s);
        let d = r.random_range(1..=5);
        let k = r.random_range(1..=4);
        let g = random_graph(&mut r, d, s % 2 == 1);
        let design = random_design(&mut r, d, k);
        let labeling = derive_mechanism_labels(&g, &design).unwrap();
        let data = random_data(&mut r, d, k, 6);
        let cfg = GpPriorConfig::new(r.random_range(1.0..5.0), r.random_range(1.0..5.0), 0.1).unwrap();
        let prior = GpPrior::new(&g, &labeling, &condition_means(&data), &cfg).unwrap();
        let params = random_params(&mut r, &g, k);
        let (_, grad) = prior.neg_logpdf_and_gradient(&params);
        let f = |x: &[f64]| {
            let p = ParameterSet::from_vector(g.clone(), k, x).unwrap();
            prior.neg_logpdf_and_gradient(&p).0
        };
        let fd = fd_gradient(&f, &params.to_vector(), FD_STEP);
        w.update(max_rel_err(&grad, &fd), s);
    }
    w
}

pub fn posterior_gradient() -> Worst {
    let mut w = Worst::new();
    for s in 0..GRADIENT_INSTANCES {
        let mut r = rng(300 + s);
        let d = r.random_range(1..=5);
        let k = r.random_range(1..=4);
        let g = random_graph(&mut r, d, s % 4 == 0);
        let design = random_design(&mut r, d, k);
        let n = r.random_range(3..10);
        let data = random_data(&mut r, d, k, n);
        let prior = if s % 2 == 0 {
            PriorConfig::Linear(LinearPriorConfig::new(2.0, 10.0).unwrap())
        } else {
            PriorConfig::Gp(GpPriorConfig::new(2.0, 3.0, 0.1).unwrap())
        };
        let post = Posterior::new(&g, &data, &design, &prior, noise_for(s / 2)).unwrap();
        // evaluate away from the ridge start to exercise every term
        let params = random_params(&mut r, &g, k);
        let x = post.vector(&params);
        let (_, grad) = post.value_and_gradient(&x).unwrap();
        let fd = fd_gradient(&|v: &[f64]| post.value_and_gradient(v).unwrap().0, &x, FD_STEP);
        w.update(max_rel_err(&grad, &fd), s);
    }
    w
}

fn regression_nll(x: &DMatrix<f64>, b: &DMatrix<f64>, mu: f64, a: f64, i: usize, noise: NoiseModel) -> f64 {
    let alpha = a.exp();
    let mut total = 0.0;
    for n in 0..x.nrows() {
        let mut pred = mu;
        for j in 0..x.ncols() {
            pred += b[(j, i)] * x[(n, j)];
        }
        let e = (x[(n, i)] - pred) / alpha;
        let rho = match noise {
            NoiseModel::Gaussian => 0.5 * e * e + 0.5 * (2.0 * PI).ln(),
            NoiseModel::SuperGaussian => PI.ln() + e.cosh().ln(),
        };
        total += rho + a;
    }
    total
}

/// Joint likelihood against a sum of per-variable regressions on 100 random
/// acyclic instances; absolute error.
pub fn acyclic_factorization() -> Worst {
    let mut w = Worst::new();
    for s in 0..100 {
        let mut r = rng(1000 + s);
        let d = r.random_range(1..=6);
        let k = r.random_range(1..=4);
        let g = random_graph(&mut r, d, true);
        assert!(g.is_acyclic());
        let params = random_params(&mut r, &g, k);
        let n = r.random_range(1..30);
        let data = random_data(&mut r, d, k, n);
        let noise = noise_for(s);
        let joint = neg_log_likelihood(&data, &params, noise).unwrap();
        let mut split = 0.0;
        for (c, x) in data.iter().enumerate() {
            let p = params.condition(c);
            assert!(log_abs_det_i_minus_b(&p.b).unwrap().log_abs_det.abs() < 1e-15);
            for i in 0..d {
                split += regression_nll(x, &p.b, p.mu[i], p.a[i], i, noise);
            }
        }
        w.update((joint - split).abs(), s);
    }
    w
}

/// `log N(x | 0, α² I + τ² 1 1ᵀ) + log N(a | 0, τ²)`, by Sherman–Morrison.
pub fn conjugate_log_evidence(x: &[f64], a: f64, tau: f64) -> f64 {
    let n = x.len() as f64;
    let s2 = (2.0 * a).exp();
    let t2 = tau * tau;
    let sum: f64 = x.iter().sum();
    let ss: f64 = x.iter().map(|v| v * v).sum();
    let quad = (ss - t2 * sum * sum / (s2 + n * t2)) / s2;
    let log_det = n * s2.ln() + (1.0 + n * t2 / s2).ln();
    let ml = -0.5 * (quad + log_det + n * (2.0 * PI).ln());
    let prior_a = -0.5 * a * a / t2 - 0.5 * (2.0 * PI * t2).ln();
    ml + prior_a
}

/// Laplace evidence of the one-compound Gaussian model with the noise scale
/// held at its true value, against the closed form, on 20 datasets; relative
/// error.
pub fn conjugate_laplace() -> Worst {
    let mut w = Worst::new();
    for s in 0..20 {
        let mut r = rng(2000 + s);
        let n = r.random_range(5..200);
        let tau = r.random_range(0.5..20.0);
        let a_fixed: f64 = r.random_range(-1.0..1.0);
        let shift = r.random_range(-3.0..3.0);
        let x: Vec<f64> = (0..n).map(|_| shift + a_fixed.exp() * normal(&mut r)).collect();
        let data = vec![DMatrix::from_column_slice(n, 1, &x)];
        let design = ExperimentDesign::observational(1).unwrap();
        let prior = PriorConfig::Linear(LinearPriorConfig::new(10.0, tau).unwrap());
        let post = Posterior::new(&Graph::empty(1), &data, &design, &prior, NoiseModel::Gaussian).unwrap();
        // reduced vector is [mu, a]; hold a at its true value
        let fixed = FixedCoordinates::new(&post, vec![0.0, a_fixed], &[1]);
        let m = minimize_bfgs(
            &fixed,
            &[0.0],
            &MinimizeOptions {
                max_iterations: 200,
                gradient_tolerance: 1e-10,
            },
        )
        .unwrap();
        let lap = laplace_approximation(&fixed, &m.x, m.value).unwrap();
        let exact = conjugate_log_evidence(&x, a_fixed, tau);
        w.update((lap.log_integral - exact).abs() / exact.abs(), s);
    }
    w
}
