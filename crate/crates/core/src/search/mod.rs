// SPDX-License-Identifier: MIT
//! Greedy structure search under flat structure priors, plus stability
//! selection over half-subsamples.

mod moves;
mod stability;

use std::collections::HashMap;
use std::sync::RwLock;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use moves::{neighbors, Move};
pub use stability::{stability_selection, subsample, EdgeFrequencies, StabilityOptions, StabilityOutcome};

use crate::error::{Error, Result};
use crate::inference::{posterior_evidence, EvidenceResult, FitOptions, Posterior};
use crate::likelihood::NoiseModel;
use crate::model::{ExperimentDesign, Graph};
use crate::priors::PriorConfig;
use crate::seed::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StructureConstraints {
    pub max_edges: Option<usize>,
    pub require_acyclic: bool,
}

impl StructureConstraints {
    pub fn admits(&self, g: &Graph) -> bool {
        self.max_edges.is_none_or(|m| g.edge_count() <= m)
            && (!self.require_acyclic || g.is_acyclic())
    }

    /// Largest admissible edge count for `d` compounds, ignoring acyclicity.
    pub fn edge_budget(&self, d: usize) -> usize {
        let all = d * d.saturating_sub(1);
        let cap = if self.require_acyclic { all / 2 } else { all };
        self.max_edges.map_or(cap, |m| m.min(cap))
    }

    pub fn check(&self, g: &Graph) -> Result<()> {
        if self.admits(g) {
            Ok(())
        } else {
            Err(Error::ConstraintViolation(format!(
                "{g:?} violates max_edges={:?}, acyclic={}",
                self.max_edges, self.require_acyclic
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredStructure {
    pub graph: Graph,
    pub evidence: EvidenceResult,
    /// Log evidence plus the (flat, zero) structure log prior.
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub restarts: usize,
    pub seed: u64,
    pub fit: FitOptions,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            seed: 0,
            fit: FitOptions::default(),
        }
    }
}

/// One greedy climb.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    pub restart: usize,
    pub start: Graph,
    pub local_optimum: Graph,
    pub score: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub best: ScoredStructure,
    pub trace: Vec<RestartRecord>,
}

/// Scores graphs for one dataset under one prior, noise model and set of
/// constraints. Results are memoized by graph.
pub struct ScoringContext<'a> {
    data: &'a [DMatrix<f64>],
    design: &'a ExperimentDesign,
    prior: PriorConfig,
    noise: NoiseModel,
    constraints: StructureConstraints,
    fit: FitOptions,
    cache: RwLock<HashMap<Graph, Option<ScoredStructure>>>,
}

impl<'a> ScoringContext<'a> {
    pub fn new(
        data: &'a [DMatrix<f64>],
        design: &'a ExperimentDesign,
        prior: &PriorConfig,
        noise: NoiseModel,
        constraints: StructureConstraints,
        fit: FitOptions,
    ) -> Result<Self> {
        if data.len() != design.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} data matrices for {} conditions",
                data.len(),
                design.len()
            )));
        }
        let d = data.first().map_or(0, |x| x.ncols());
        if data.iter().any(|x| x.ncols() != d) {
            return Err(Error::DimensionMismatch("conditions disagree on compound count".into()));
        }
        design.validate_for(d)?;
        Ok(Self {
            data,
            design,
            prior: prior.clone(),
            noise,
            constraints,
            fit,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn d(&self) -> usize {
        self.data.first().map_or(0, |x| x.ncols())
    }

    pub fn constraints(&self) -> &StructureConstraints {
        &self.constraints
    }

    /// Number of distinct graphs scored so far.
    pub fn cache_len(&self) -> usize {
        self.cache.read().expect("cache lock").len()
    }

    fn compute(&self, g: &Graph) -> Result<ScoredStructure> {
        let posterior = Posterior::new(g, self.data, self.design, &self.prior, self.noise)?;
        let evidence = posterior_evidence(&posterior, &self.fit)?;
        Ok(ScoredStructure {
            graph: g.clone(),
            score: evidence.log_evidence,
            evidence,
        })
    }

    /// Laplace score of an admissible graph.
    pub fn score(&self, g: &Graph) -> Result<ScoredStructure> {
        self.constraints.check(g)?;
        if let Some(hit) = self.cache.read().expect("cache lock").get(g) {
            return hit.clone().ok_or_else(|| {
                Error::NumericalBreakdown(format!("scoring {g:?} failed earlier"))
            });
        }
        let result = self.compute(g);
        let stored = result.as_ref().ok().cloned();
        self.cache.write().expect("cache lock").insert(g.clone(), stored);
        result
    }

    fn try_score(&self, g: &Graph) -> Option<ScoredStructure> {
        match self.score(g) {
            Ok(s) => Some(s),
            Err(e) => {
                log::warn!("skipping {g:?}: {e}");
                None
            }
        }
    }

    /// Seeded random admissible starting graph: a uniform edge count, then
    /// edges sampled without replacement, skipping ones that would close a
    /// cycle when acyclicity is required.
    pub fn random_start(&self, seed: u64, restart: usize) -> Graph {
        let d = self.d();
        let mut rng = rng_for(seed, &[0x5eed_57a7, restart as u64]);
        let target = rng.random_range(0..=self.constraints.edge_budget(d));
        let mut pairs: Vec<(usize, usize)> = (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect();
        pairs.shuffle(&mut rng);
        let mut g = Graph::empty(d);
        for (i, j) in pairs {
            if g.edge_count() >= target {
                break;
            }
            g.add_edge(i, j).expect("in range");
            if !self.constraints.admits(&g) {
                g.remove_edge(i, j).expect("in range");
            }
        }
        g
    }

    /// Best-improvement hill climb from `start`.
    pub fn climb(&self, start: Graph) -> Option<(ScoredStructure, usize)> {
        let mut current = self.try_score(&start).or_else(|| {
            log::warn!("start {start:?} could not be scored; climbing from the empty graph");
            self.try_score(&Graph::empty(self.d()))
        })?;
        let mut steps = 0;
        loop {
            let candidates = neighbors(&current.graph, &self.constraints);
            let scored: Vec<Option<ScoredStructure>> =
                candidates.par_iter().map(|g| self.try_score(g)).collect();
            let mut best: Option<ScoredStructure> = None;
            for s in scored.into_iter().flatten() {
                if s.score > best.as_ref().map_or(current.score, |b| b.score) {
                    best = Some(s);
                }
            }
            match best {
                Some(b) => {
                    current = b;
                    steps += 1;
                }
                None => return Some((current, steps)),
            }
        }
    }

    /// Greedy search with `opts.restarts` seeded random restarts.
    pub fn greedy_search(&self, opts: &SearchOptions) -> Result<SearchOutcome> {
        let restarts = opts.restarts.max(1);
        let runs: Vec<Option<(RestartRecord, ScoredStructure)>> = (0..restarts)
            .into_par_iter()
            .map(|r| {
                let start = self.random_start(opts.seed, r);
                let (best, steps) = self.climb(start.clone())?;
                let record = RestartRecord {
                    restart: r,
                    start,
                    local_optimum: best.graph.clone(),
                    score: best.score,
                    steps,
                };
                Some((record, best))
            })
            .collect();
        let mut trace = Vec::with_capacity(restarts);
        let mut best: Option<ScoredStructure> = None;
        for (record, s) in runs.into_iter().flatten() {
            if best.as_ref().is_none_or(|b| s.score > b.score) {
                best = Some(s);
            }
            trace.push(record);
        }
        let best = best.ok_or(Error::AllRestartsFailed(restarts))?;
        Ok(SearchOutcome { best, trace })
    }
}

pub fn greedy_search(
    data: &[DMatrix<f64>],
    design: &ExperimentDesign,
    prior: &PriorConfig,
    noise: NoiseModel,
    constraints: StructureConstraints,
    opts: &SearchOptions,
) -> Result<SearchOutcome> {
    ScoringContext::new(data, design, prior, noise, constraints, opts.fit)?.greedy_search(opts)
}

pub fn score_structure(
    g: &Graph,
    data: &[DMatrix<f64>],
    design: &ExperimentDesign,
    prior: &PriorConfig,
    noise: NoiseModel,
    constraints: StructureConstraints,
    fit: &FitOptions,
) -> Result<ScoredStructure> {
    ScoringContext::new(data, design, prior, noise, constraints, *fit)?.score(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissibility() {
        let c = StructureConstraints {
            max_edges: Some(1),
            require_acyclic: true,
        };
        let two_cycle = Graph::from_edges(2, &[(0, 1), (1, 0)]).unwrap();
        assert!(!c.admits(&two_cycle));
        assert!(c.admits(&Graph::from_edges(2, &[(0, 1)]).unwrap()));
        assert!(StructureConstraints::default().admits(&two_cycle));
        assert!(matches!(c.check(&two_cycle), Err(Error::ConstraintViolation(_))));
    }

    #[test]
    fn random_starts_are_admissible_and_seeded() {
        let data = vec![DMatrix::<f64>::zeros(3, 4)];
        let design = ExperimentDesign::observational(1).unwrap();
        for acyclic in [false, true] {
            let c = StructureConstraints {
                max_edges: Some(4),
                require_acyclic: acyclic,
            };
            let ctx = ScoringContext::new(
                &data,
                &design,
                &PriorConfig::default(),
                NoiseModel::Gaussian,
                c,
                FitOptions::default(),
            )
            .unwrap();
            for r in 0..50 {
                let g = ctx.random_start(7, r);
                assert!(c.admits(&g));
                assert_eq!(g, ctx.random_start(7, r));
            }
        }
    }
}
