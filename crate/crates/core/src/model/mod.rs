// SPDX-License-Identifier: MIT
//! Graphs, interventions and mechanism labels.

mod design;
mod graph;
mod labels;

pub use design::{ExperimentDesign, Intervention, InterventionKind};
pub use graph::Graph;
pub use labels::{derive_mechanism_labels, MechanismLabeling};
