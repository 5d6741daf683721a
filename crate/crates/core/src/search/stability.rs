// SPDX-License-Identifier: MIT
use nalgebra::DMatrix;
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ScoringContext, SearchOptions, StructureConstraints};
use crate::error::{Error, Result};
use crate::likelihood::NoiseModel;
use crate::model::{ExperimentDesign, Graph};
use crate::priors::PriorConfig;
use crate::seed::rng_for;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeFrequencies {
    /// `freq[(i, j)]` is the fraction of runs whose best graph has `i → j`.
    pub freq: DMatrix<f64>,
    pub runs: usize,
}

impl EdgeFrequencies {
    pub fn from_graphs(d: usize, graphs: &[Graph]) -> Self {
        let mut freq = DMatrix::zeros(d, d);
        for g in graphs {
            for (i, j) in g.edges() {
                freq[(i, j)] += 1.0;
            }
        }
        if !graphs.is_empty() {
            freq /= graphs.len() as f64;
        }
        Self {
            freq,
            runs: graphs.len(),
        }
    }

    pub fn d(&self) -> usize {
        self.freq.nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityOptions {
    pub n_runs: usize,
    pub subsample_fraction: f64,
    /// Restart budget and seed for every run; each run derives its own seed.
    pub search: SearchOptions,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self {
            n_runs: 50,
            subsample_fraction: 0.5,
            search: SearchOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityOutcome {
    pub frequencies: EdgeFrequencies,
    /// Best graph of each successful run, by run index.
    pub selected: Vec<Graph>,
    pub failed_runs: Vec<usize>,
}

/// Rows `⌊fraction · N_c⌋` (at least one) drawn without replacement per
/// condition, kept in their original order.
pub fn subsample(
    data: &[DMatrix<f64>],
    fraction: f64,
    seed: u64,
    run: usize,
) -> Vec<DMatrix<f64>> {
    data.iter()
        .enumerate()
        .map(|(c, x)| {
            let n = x.nrows();
            let m = ((fraction * n as f64).floor() as usize).clamp(n.min(1), n);
            let mut rng = rng_for(seed, &[0x57ab, run as u64, c as u64]);
            let mut rows = sample(&mut rng, n, m).into_vec();
            rows.sort_unstable();
            x.select_rows(&rows)
        })
        .collect()
}

pub fn stability_selection(
    data: &[DMatrix<f64>],
    design: &ExperimentDesign,
    prior: &PriorConfig,
    noise: NoiseModel,
    constraints: StructureConstraints,
    opts: &StabilityOptions,
) -> Result<StabilityOutcome> {
    if opts.n_runs == 0 {
        return Err(Error::InvalidArgument("n_runs must be at least 1".into()));
    }
    if !(opts.subsample_fraction > 0.0 && opts.subsample_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "subsample fraction {} outside (0, 1)",
            opts.subsample_fraction
        )));
    }
    let d = data.first().map_or(0, |x| x.ncols());
    let base = opts.search.seed;
    let results: Vec<Result<Graph>> = (0..opts.n_runs)
        .into_par_iter()
        .map(|r| {
            let sub = subsample(data, opts.subsample_fraction, base, r);
            let ctx = ScoringContext::new(&sub, design, prior, noise, constraints, opts.search.fit)?;
            let search = SearchOptions {
                seed: crate::seed::derive_seed(base, r as u64),
                ..opts.search
            };
            Ok(ctx.greedy_search(&search)?.best.graph)
        })
        .collect();
    let mut selected = Vec::new();
    let mut failed_runs = Vec::new();
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(g) => selected.push(g),
            Err(e) => {
                log::warn!("stability run {r} failed: {e}");
                failed_runs.push(r);
            }
        }
    }
    if selected.is_empty() {
        return Err(Error::AllRestartsFailed(opts.n_runs));
    }
    Ok(StabilityOutcome {
        frequencies: EdgeFrequencies::from_graphs(d, &selected),
        selected,
        failed_runs,
    })
}
