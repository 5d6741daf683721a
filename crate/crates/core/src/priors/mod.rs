// SPDX-License-Identifier: MIT
//! Parameter priors that couple per-condition linearizations of the same
//! causal mechanism.
//!
//! [`linear`] ties conditions with equal mechanism labels exactly; [`gp`] treats
//! each condition's linearization as value and derivative observations of one
//! latent Gaussian-process mechanism per label.

pub mod gp;
pub mod linear;
mod tying;

use serde::{Deserialize, Serialize};

pub use gp::{gp_kernel_block, gp_prior_neg_logpdf, build_pseudodata, GpPrior, GpPriorConfig, KernelBlock, PseudoDatum};
pub use linear::{linear_prior_neg_logpdf, LinearPriorConfig};
pub use tying::TyingMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorConfig {
    Linear(LinearPriorConfig),
    Gp(GpPriorConfig),
}

impl PriorConfig {
    pub fn name(&self) -> &'static str {
        match self {
            PriorConfig::Linear(_) => "linear",
            PriorConfig::Gp(_) => "gp",
        }
    }
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig::Linear(LinearPriorConfig::default())
    }
}
