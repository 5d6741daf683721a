// SPDX-License-Identifier: MIT
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::tying::TyingMap;
use crate::error::{Error, Result};

/// `lambda` scales the Gaussian prior on slopes; `tau` is the (large) prior
/// standard deviation on intercepts and log noise scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearPriorConfig {
    pub lambda: f64,
    pub tau: f64,
}

impl Default for LinearPriorConfig {
    fn default() -> Self {
        Self {
            lambda: 10.0,
            tau: 1e3,
        }
    }
}

impl LinearPriorConfig {
    pub fn new(lambda: f64, tau: f64) -> Result<Self> {
        if !(lambda > 0.0 && tau > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "linear prior needs lambda > 0 and tau > 0, got {lambda}, {tau}"
            )));
        }
        Ok(Self { lambda, tau })
    }
}

/// Negative log prior density over the reduced (tied) vector, with gradient.
pub fn linear_prior_neg_logpdf(
    reduced: &[f64],
    tying: &TyingMap,
    cfg: &LinearPriorConfig,
) -> (f64, Vec<f64>) {
    let d = tying.labeling().d();
    let slope_norm = (cfg.lambda * (2.0 * PI).sqrt()).ln();
    let loc_norm = (cfg.tau * (2.0 * PI).sqrt()).ln();
    let (l2, t2) = (cfg.lambda * cfg.lambda, cfg.tau * cfg.tau);
    let mut value = 0.0;
    let mut grad = vec![0.0; reduced.len()];
    for i in 0..d {
        let np = tying.parents(i).len();
        for m in 0..tying.labeling().counts()[i] {
            let r = tying.block(i, m);
            for k in r.start..r.start + np {
                value += reduced[k] * reduced[k] / (2.0 * l2) + slope_norm;
                grad[k] = reduced[k] / l2;
            }
            for k in r.start + np..r.end {
                value += reduced[k] * reduced[k] / (2.0 * t2);
                grad[k] = reduced[k] / t2;
            }
            value += 2.0 * loc_norm;
        }
    }
    (value, grad)
}
