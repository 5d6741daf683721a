// SPDX-License-Identifier: MIT
use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Directed graph over `d` compounds. Cycles are allowed, self-loops are not.
///
/// `adjacency[i * d + j]` is true iff `x_i -> x_j`, i.e. `i` is a parent of `j`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Graph {
    d: usize,
    adjacency: Vec<bool>,
}

impl Graph {
    pub fn empty(d: usize) -> Self {
        Self {
            d,
            adjacency: vec![false; d * d],
        }
    }

    /// Builds a graph from `(from, to)` pairs.
    pub fn from_edges(d: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(d);
        for &(i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    /// Builds a graph from a row-major boolean adjacency matrix.
    pub fn from_adjacency(d: usize, adjacency: Vec<bool>) -> Result<Self> {
        if adjacency.len() != d * d {
            return Err(Error::DimensionMismatch(format!(
                "adjacency has {} entries, expected {}",
                adjacency.len(),
                d * d
            )));
        }
        if (0..d).any(|i| adjacency[i * d + i]) {
            return Err(Error::InvalidArgument("self-loops are not allowed".into()));
        }
        Ok(Self { d, adjacency })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    fn check(&self, i: usize) -> Result<()> {
        if i < self.d {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: i,
                d: self.d,
            })
        }
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.d && j < self.d && self.adjacency[i * self.d + j]
    }

    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        self.check(i)?;
        self.check(j)?;
        if i == j {
            return Err(Error::InvalidArgument(format!("self-loop on {i}")));
        }
        self.adjacency[i * self.d + j] = true;
        Ok(())
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) -> Result<()> {
        self.check(i)?;
        self.check(j)?;
        self.adjacency[i * self.d + j] = false;
        Ok(())
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().filter(|&&e| e).count()
    }

    /// Edges in row-major `(from, to)` order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let d = self.d;
        (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .filter(|&(i, j)| self.adjacency[i * d + j])
            .collect()
    }

    /// Parents of `j`, sorted ascending.
    pub fn parents(&self, j: usize) -> Result<Vec<usize>> {
        self.check(j)?;
        Ok((0..self.d).filter(|&i| self.adjacency[i * self.d + j]).collect())
    }

    /// Children of `i`, sorted ascending.
    pub fn children(&self, i: usize) -> Result<Vec<usize>> {
        self.check(i)?;
        Ok((0..self.d).filter(|&j| self.adjacency[i * self.d + j]).collect())
    }

    /// Kahn elimination.
    pub fn is_acyclic(&self) -> bool {
        let d = self.d;
        let mut indegree: Vec<usize> = (0..d)
            .map(|j| (0..d).filter(|&i| self.adjacency[i * d + j]).count())
            .collect();
        let mut queue: VecDeque<usize> = (0..d).filter(|&j| indegree[j] == 0).collect();
        let mut seen = 0;
        while let Some(i) = queue.pop_front() {
            seen += 1;
            for j in 0..d {
                if self.adjacency[i * d + j] {
                    indegree[j] -= 1;
                    if indegree[j] == 0 {
                        queue.push_back(j);
                    }
                }
            }
        }
        seen == d
    }

    /// Relabels compounds: compound `i` of `self` becomes compound `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut g = Self::empty(self.d);
        for (i, j) in self.edges() {
            g.adjacency[perm[i] * self.d + perm[j]] = true;
        }
        g
    }
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph(d={}, {:?})", self.d, self.edges())
    }
}
