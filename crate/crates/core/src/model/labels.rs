// SPDX-License-Identifier: MIT
//! Mechanism labels: which version of each compound's causal mechanism is
//! active in each condition, given a hypothesised graph.
//!
//! Labels are stored zero-based here; label `0` is the baseline mechanism.

use serde::{Deserialize, Serialize};

use super::design::{ExperimentDesign, Intervention};
use super::graph::Graph;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MechanismLabeling {
    d: usize,
    k: usize,
    /// `labels[i * k + c]`
    labels: Vec<usize>,
    counts: Vec<usize>,
}

impl MechanismLabeling {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Zero-based label of compound `i` in condition `c`.
    pub fn label(&self, i: usize, c: usize) -> usize {
        self.labels[i * self.k + c]
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.labels[i * self.k..(i + 1) * self.k]
    }

    /// Number of distinct mechanisms per compound.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn total_mechanisms(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Conditions that share mechanism `m` of compound `i`, in increasing order.
    pub fn conditions_with(&self, i: usize, m: usize) -> Vec<usize> {
        (0..self.k).filter(|&c| self.label(i, c) == m).collect()
    }

    /// The label matrix in the one-based convention, `[i][c]`.
    pub fn one_based(&self) -> Vec<Vec<usize>> {
        (0..self.d)
            .map(|i| self.row(i).iter().map(|l| l + 1).collect())
            .collect()
    }
}

/// Whether condition `iv` replaces the mechanism of compound `i` under graph `g`.
fn changes_mechanism(g: &Graph, iv: &Intervention, i: usize) -> bool {
    match iv {
        Intervention::Observational => false,
        Intervention::Abundance(t) => *t == i,
        Intervention::Activity(t) => g.has_edge(*t, i),
        Intervention::MechanismSet(s) => s.contains(&i),
    }
}

/// Every condition that changes mechanism `i` receives its own fresh label, in
/// increasing condition order; all other conditions keep the baseline label.
pub fn derive_mechanism_labels(g: &Graph, design: &ExperimentDesign) -> Result<MechanismLabeling> {
    let d = g.d();
    design.validate_for(d)?;
    let k = design.len();
    let mut labels = vec![0; d * k];
    let mut counts = vec![1; d];
    for i in 0..d {
        for (c, iv) in design.conditions().iter().enumerate() {
            if changes_mechanism(g, iv, i) {
                labels[i * k + c] = counts[i];
                counts[i] += 1;
            }
        }
    }
    Ok(MechanismLabeling {
        d,
        k,
        labels,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn figure_one() -> (Graph, ExperimentDesign) {
        let g = Graph::from_edges(4, &[(0, 1), (0, 2), (1, 3)]).unwrap();
        let design = ExperimentDesign::unnamed(vec![
            Intervention::Observational,
            Intervention::Activity(0),
            Intervention::Activity(1),
            Intervention::Abundance(2),
            Intervention::Abundance(0),
        ])
        .unwrap();
        (g, design)
    }

    #[test]
    fn figure_one_labels() {
        let (g, design) = figure_one();
        let m = derive_mechanism_labels(&g, &design).unwrap();
        assert_eq!(
            m.one_based(),
            vec![
                vec![1, 1, 1, 1, 2],
                vec![1, 2, 1, 1, 1],
                vec![1, 2, 1, 3, 1],
                vec![1, 1, 2, 1, 1],
            ]
        );
        assert_eq!(m.counts(), &[2, 2, 3, 2]);
        assert_eq!(m.total_mechanisms(), 9);
        assert_eq!(m.conditions_with(2, 0), vec![0, 2, 4]);
    }

    #[test]
    fn observational_only() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let m = derive_mechanism_labels(&g, &ExperimentDesign::observational(4).unwrap()).unwrap();
        assert!(m.one_based().iter().flatten().all(|&l| l == 1));
        assert_eq!(m.counts(), &[1, 1, 1]);
    }

    #[test]
    fn activity_without_children_changes_nothing() {
        let design =
            ExperimentDesign::unnamed(vec![Intervention::Observational, Intervention::Activity(0)])
                .unwrap();
        let m = derive_mechanism_labels(&Graph::empty(3), &design).unwrap();
        assert_eq!(m.counts(), &[1, 1, 1]);
    }

    #[test]
    fn multiple_routes_one_label() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let design = ExperimentDesign::unnamed(vec![
            Intervention::Observational,
            Intervention::MechanismSet(vec![1]),
        ])
        .unwrap();
        let m = derive_mechanism_labels(&g, &design).unwrap();
        assert_eq!(m.row(1), &[0, 1]);
        assert_eq!(m.counts(), &[1, 2]);
    }

    #[test]
    fn target_out_of_range() {
        let design = ExperimentDesign::unnamed(vec![Intervention::Abundance(5)]).unwrap();
        assert!(derive_mechanism_labels(&Graph::empty(2), &design).is_err());
    }

    fn arb_instance() -> impl Strategy<Value = (Graph, ExperimentDesign)> {
        (2usize..6).prop_flat_map(|d| {
            let edges = proptest::collection::vec(any::<bool>(), d * d);
            let iv = (0usize..4, 0..d, proptest::collection::vec(0..d, 1..3)).prop_map(
                |(kind, t, set)| match kind {
                    0 => Intervention::Observational,
                    1 => Intervention::Abundance(t),
                    2 => Intervention::Activity(t),
                    _ => {
                        let mut s = set;
                        s.sort_unstable();
                        s.dedup();
                        Intervention::MechanismSet(s)
                    }
                },
            );
            (
                Just(d),
                edges,
                proptest::collection::vec(iv, 0..6),
            )
                .prop_map(|(d, mut adj, rest)| {
                    for i in 0..d {
                        adj[i * d + i] = false;
                    }
                    let mut conditions = vec![Intervention::Observational];
                    conditions.extend(rest);
                    (
                        Graph::from_adjacency(d, adj).unwrap(),
                        ExperimentDesign::unnamed(conditions).unwrap(),
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn labeling_invariants((g, design) in arb_instance()) {
            let m = derive_mechanism_labels(&g, &design).unwrap();
            for i in 0..g.d() {
                prop_assert_eq!(m.label(i, 0), 0);
                let mut next = 0;
                for &l in m.row(i) {
                    prop_assert!(l <= next);
                    if l == next {
                        next += 1;
                    }
                }
                prop_assert_eq!(next, m.counts()[i]);
            }
        }

        #[test]
        fn adding_an_edge_only_touches_its_head((g, design) in arb_instance(), a in 0usize..6, b in 0usize..6) {
            let d = g.d();
            let (i, j) = (a % d, b % d);
            prop_assume!(i != j && !g.has_edge(i, j));
            let mut g2 = g.clone();
            g2.add_edge(i, j).unwrap();
            let before = derive_mechanism_labels(&g, &design).unwrap();
            let after = derive_mechanism_labels(&g2, &design).unwrap();
            for k in 0..d {
                if k != j {
                    prop_assert_eq!(before.row(k), after.row(k));
                }
            }
            let has_activity = design.conditions().contains(&Intervention::Activity(i));
            if has_activity {
                prop_assert!(after.counts()[j] >= before.counts()[j]);
            } else {
                prop_assert_eq!(after.counts()[j], before.counts()[j]);
            }
        }

        #[test]
        fn abundance_labels_graph_independent((g, design) in arb_instance()) {
            let no_activity: Vec<Intervention> = design
                .conditions()
                .iter()
                .map(|iv| if matches!(iv, Intervention::Activity(_)) { Intervention::Observational } else { iv.clone() })
                .collect();
            let design = ExperimentDesign::unnamed(no_activity).unwrap();
            let a = derive_mechanism_labels(&g, &design).unwrap();
            let b = derive_mechanism_labels(&Graph::empty(g.d()), &design).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
