// SPDX-License-Identifier: MIT
use std::ops::Range;

use crate::error::{Error, Result};
use crate::likelihood::{masked_entries, ConditionParameters, ParameterSet};
use crate::model::{Graph, MechanismLabeling};

/// Hard equality coupling: conditions that share a mechanism label share one
/// parameter block.
///
/// The reduced vector is ordered compound by compound, label by label; each
/// block holds the slopes from the compound's parents (ascending), then its
/// intercept, then its log noise scale.
#[derive(Debug, Clone)]
pub struct TyingMap {
    graph: Graph,
    labeling: MechanismLabeling,
    parents: Vec<Vec<usize>>,
    /// `offsets[i][m]` is where block `(i, m)` starts.
    offsets: Vec<Vec<usize>>,
    /// Full-vector position of `b(parents[i][k], i)` within one condition.
    b_slots: Vec<Vec<usize>>,
    len: usize,
}

impl TyingMap {
    pub fn new(graph: &Graph, labeling: &MechanismLabeling) -> Result<Self> {
        let d = graph.d();
        if labeling.d() != d {
            return Err(Error::DimensionMismatch(format!(
                "labeling covers {} compounds, graph has {d}",
                labeling.d()
            )));
        }
        let masked = masked_entries(graph);
        let parents: Vec<Vec<usize>> = (0..d).map(|i| graph.parents(i)).collect::<Result<_>>()?;
        let b_slots = parents
            .iter()
            .enumerate()
            .map(|(i, pa)| {
                pa.iter()
                    .map(|&p| masked.iter().position(|&e| e == (p, i)).unwrap())
                    .collect()
            })
            .collect();
        let mut offsets = Vec::with_capacity(d);
        let mut len = 0;
        for (i, pa) in parents.iter().enumerate() {
            let block = pa.len() + 2;
            offsets.push(
                (0..labeling.counts()[i])
                    .map(|m| len + m * block)
                    .collect::<Vec<_>>(),
            );
            len += labeling.counts()[i] * block;
        }
        Ok(Self {
            graph: graph.clone(),
            labeling: labeling.clone(),
            parents,
            offsets,
            b_slots,
            len,
        })
    }

    pub fn reduced_len(&self) -> usize {
        self.len
    }

    pub fn labeling(&self) -> &MechanismLabeling {
        &self.labeling
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn block(&self, i: usize, m: usize) -> Range<usize> {
        let start = self.offsets[i][m];
        start..start + self.parents[i].len() + 2
    }

    /// Number of parameter blocks, i.e. the sum of mechanism counts.
    pub fn block_count(&self) -> usize {
        self.offsets.iter().map(Vec::len).sum()
    }

    /// Reduced vector to the tied per-condition parameter set.
    pub fn expand(&self, reduced: &[f64]) -> Result<ParameterSet> {
        if reduced.len() != self.len {
            return Err(Error::DimensionMismatch(format!(
                "reduced vector has {} entries, expected {}",
                reduced.len(),
                self.len
            )));
        }
        let d = self.graph.d();
        let per_condition = (0..self.labeling.k())
            .map(|c| {
                let mut p = ConditionParameters::zeros(d);
                for i in 0..d {
                    let block = &reduced[self.block(i, self.labeling.label(i, c))];
                    let np = self.parents[i].len();
                    for (k, &pa) in self.parents[i].iter().enumerate() {
                        p.b[(pa, i)] = block[k];
                    }
                    p.mu[i] = block[np];
                    p.a[i] = block[np + 1];
                }
                p
            })
            .collect();
        ParameterSet::new(self.graph.clone(), per_condition)
    }

    /// Adjoint of [`expand`](Self::expand): accumulates a full-vector gradient
    /// onto the reduced coordinates.
    pub fn contract(&self, full: &[f64]) -> Vec<f64> {
        let d = self.graph.d();
        let e = self.graph.edge_count();
        let per = e + 2 * d;
        let mut out = vec![0.0; self.len];
        for c in 0..self.labeling.k() {
            let base = c * per;
            for i in 0..d {
                let r = self.block(i, self.labeling.label(i, c));
                let np = self.parents[i].len();
                for (k, &slot) in self.b_slots[i].iter().enumerate() {
                    out[r.start + k] += full[base + slot];
                }
                out[r.start + np] += full[base + e + i];
                out[r.start + np + 1] += full[base + e + d + i];
            }
        }
        out
    }

    /// Reads each block from the first condition that uses it.
    pub fn restrict(&self, params: &ParameterSet) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for i in 0..self.graph.d() {
            for m in 0..self.labeling.counts()[i] {
                let c = self.labeling.conditions_with(i, m)[0];
                let p = params.condition(c);
                let r = self.block(i, m);
                let np = self.parents[i].len();
                for (k, &pa) in self.parents[i].iter().enumerate() {
                    out[r.start + k] = p.b[(pa, i)];
                }
                out[r.start + np] = p.mu[i];
                out[r.start + np + 1] = p.a[i];
            }
        }
        out
    }
}
