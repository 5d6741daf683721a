// SPDX-License-Identifier: MIT
//! Two-sample Kolmogorov-Smirnov test with the asymptotic Kolmogorov tail.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cap on `-ln p`; `exp(-745)` is the smallest subnormal double.
pub const NEG_LOG_P_CEILING: f64 = 745.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    /// `-ln p_value`, computed without underflow and capped at
    /// `NEG_LOG_P_CEILING`.
    pub neg_log_p: f64,
}

/// Sup-distance between the empirical CDFs of `x` and `y`.
pub fn ks_statistic(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (nx, ny) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut sup = 0.0_f64;
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        sup = sup.max((i as f64 / nx - j as f64 / ny).abs());
    }
    Ok(sup)
}

/// `ln Q(λ)` for the Kolmogorov survival function
/// `Q(λ) = 2 Σ_{k≥1} (-1)^{k-1} exp(-2 k² λ²)`.
pub fn kolmogorov_log_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    let l2 = lambda * lambda;
    if lambda < 1.0 {
        // theta-function form converges fast for small λ
        let mut cdf = 0.0;
        for k in 1..=20 {
            let m = (2 * k - 1) as f64;
            cdf += (-m * m * PI * PI / (8.0 * l2)).exp();
        }
        cdf *= (2.0 * PI).sqrt() / lambda;
        return (1.0 - cdf).max(0.0).min(1.0).ln();
    }
    // ln 2 - 2λ² + ln(1 - e^{-6λ²} + e^{-16λ²} - ...)
    let mut tail = 0.0;
    for k in 2..=50 {
        let kk = (k * k - 1) as f64;
        let term = (-2.0 * kk * l2).exp();
        if term == 0.0 {
            break;
        }
        tail += if k % 2 == 0 { -term } else { term };
    }
    (LN_2 - 2.0 * l2 + tail.ln_1p()).min(0.0)
}

pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<KsResult> {
    let statistic = ks_statistic(x, y)?;
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let n_eff = nx * ny / (nx + ny);
    let log_p = kolmogorov_log_sf(n_eff.sqrt() * statistic);
    Ok(KsResult {
        statistic,
        p_value: log_p.exp(),
        neg_log_p: (-log_p).clamp(0.0, NEG_LOG_P_CEILING),
    })
}
