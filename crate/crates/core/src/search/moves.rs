// SPDX-License-Identifier: MIT
use serde::{Deserialize, Serialize};

use super::StructureConstraints;
use crate::model::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Move {
    Add,
    Delete,
    Reverse,
}

/// One-edge moves from `g` in `(i, j)` order, then add < delete < reverse,
/// keeping only admissible results. Reversing `i→j` is skipped when `j→i`
/// already exists.
pub fn neighbors(g: &Graph, constraints: &StructureConstraints) -> Vec<Graph> {
    neighbor_moves(g, constraints).into_iter().map(|(_, _, _, h)| h).collect()
}

pub(crate) fn neighbor_moves(
    g: &Graph,
    constraints: &StructureConstraints,
) -> Vec<(usize, usize, Move, Graph)> {
    let d = g.d();
    let mut out = Vec::new();
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let mut moves = Vec::with_capacity(2);
            if !g.has_edge(i, j) {
                let mut h = g.clone();
                h.add_edge(i, j).expect("in range");
                moves.push((Move::Add, h));
            } else {
                let mut h = g.clone();
                h.remove_edge(i, j).expect("in range");
                moves.push((Move::Delete, h.clone()));
                if !g.has_edge(j, i) {
                    h.add_edge(j, i).expect("in range");
                    moves.push((Move::Reverse, h));
                }
            }
            for (m, h) in moves {
                if constraints.admits(&h) {
                    out.push((i, j, m, h));
                }
            }
        }
    }
    out
}
