// SPDX-License-Identifier: MIT
//! JSON records emitted by the command-line tools. Every record carries a
//! `schema` tag and a `kind`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::inference::FitResult;
use crate::likelihood::ConditionParameters;
use crate::model::Graph;
use crate::search::{EdgeFrequencies, RestartRecord, ScoredStructure, StructureConstraints};

pub const SCHEMA: &str = "cyclic-scm/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record<T> {
    pub schema: String,
    pub kind: String,
    #[serde(flatten)]
    pub body: T,
}

impl<T> Record<T> {
    pub fn new(kind: &str, body: T) -> Self {
        Self {
            schema: SCHEMA.to_string(),
            kind: kind.to_string(),
            body,
        }
    }
}

pub fn named_edges(g: &Graph, names: &[String]) -> Vec<[String; 2]> {
    g.edges()
        .into_iter()
        .map(|(i, j)| [names[i].clone(), names[j].clone()])
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedCondition {
    pub condition: String,
    /// `from -> to -> coefficient`, graph edges only.
    pub b: BTreeMap<String, BTreeMap<String, f64>>,
    pub mu: BTreeMap<String, f64>,
    pub log_alpha: BTreeMap<String, f64>,
}

impl NamedCondition {
    pub fn new(condition: &str, p: &ConditionParameters, g: &Graph, names: &[String]) -> Self {
        let mut b: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for (i, j) in g.edges() {
            b.entry(names[i].clone())
                .or_default()
                .insert(names[j].clone(), p.b[(i, j)]);
        }
        let by_name =
            |v: &nalgebra::DVector<f64>| names.iter().cloned().zip(v.iter().copied()).collect();
        Self {
            condition: condition.to_string(),
            b,
            mu: by_name(&p.mu),
            log_alpha: by_name(&p.a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitBody {
    pub edges: Vec<[String; 2]>,
    pub neg_log_posterior: f64,
    pub converged: bool,
    pub gradient_norm_at_solution: f64,
    pub iterations: usize,
    pub conditions: Vec<NamedCondition>,
}

impl FitBody {
    pub fn new(fit: &FitResult, names: &[String], condition_names: &[String]) -> Self {
        let g = fit.params.graph();
        Self {
            edges: named_edges(g, names),
            neg_log_posterior: fit.neg_log_posterior,
            converged: fit.converged,
            gradient_norm_at_solution: fit.gradient_norm_at_solution,
            iterations: fit.iterations,
            conditions: fit
                .params
                .conditions()
                .iter()
                .zip(condition_names)
                .map(|(p, c)| NamedCondition::new(c, p, g, names))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub label: String,
    pub edges: Vec<[String; 2]>,
    pub log_evidence: f64,
    pub neg_log_evidence: f64,
    pub neg_log_posterior: f64,
    pub parameter_count: usize,
    pub converged: bool,
    pub hessian_floored: bool,
}

impl ScoreEntry {
    pub fn new(label: &str, s: &ScoredStructure, names: &[String]) -> Self {
        Self {
            label: label.to_string(),
            edges: named_edges(&s.graph, names),
            log_evidence: s.score,
            neg_log_evidence: -s.score,
            neg_log_posterior: s.evidence.map.neg_log_posterior,
            parameter_count: s.evidence.parameter_count,
            converged: s.evidence.map.converged,
            hessian_floored: s.evidence.hessian_floored,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreBody {
    pub scores: Vec<ScoreEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartEntry {
    pub restart: usize,
    pub steps: usize,
    pub edge_count: usize,
    pub neg_log_evidence: f64,
    pub edges: Vec<[String; 2]>,
}

impl RestartEntry {
    pub fn new(r: &RestartRecord, names: &[String]) -> Self {
        Self {
            restart: r.restart,
            steps: r.steps,
            edge_count: r.local_optimum.edge_count(),
            neg_log_evidence: -r.score,
            edges: named_edges(&r.local_optimum, names),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBody {
    pub constraints: StructureConstraints,
    pub best: ScoreEntry,
    pub restarts: Vec<RestartEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityBody {
    pub constraints: StructureConstraints,
    pub runs: usize,
    pub failed_runs: Vec<usize>,
    pub compounds: Vec<String>,
    /// Row-major `freq[from][to]`.
    pub frequencies: Vec<Vec<f64>>,
}

impl StabilityBody {
    pub fn new(
        f: &EdgeFrequencies,
        failed_runs: &[usize],
        constraints: StructureConstraints,
        names: &[String],
    ) -> Self {
        Self {
            constraints,
            runs: f.runs,
            failed_runs: failed_runs.to_vec(),
            compounds: names.to_vec(),
            frequencies: f.freq.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

impl From<&Error> for ErrorBody {
    fn from(e: &Error) -> Self {
        Self {
            error: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}
