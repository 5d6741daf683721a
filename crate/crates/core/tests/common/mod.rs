// SPDX-License-Identifier: MIT
#![allow(dead_code)]

pub mod checks;

use cyclic_scm::likelihood::{log_abs_det_i_minus_b, ConditionParameters, NoiseModel, ParameterSet};
use cyclic_scm::model::{ExperimentDesign, Graph, Intervention};
use cyclic_scm::seed::rng_for;
use cyclic_scm::simulate::{generate_study, GroundTruthModel, SimulatedStudy};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    rng_for(seed, &[0x7e57])
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn random_graph(rng: &mut ChaCha8Rng, d: usize, acyclic: bool) -> Graph {
    let mut g = Graph::empty(d);
    for i in 0..d {
        for j in 0..d {
            if i != j && rng.random_bool(0.4) {
                g.add_edge(i, j).unwrap();
            }
        }
    }
    if acyclic {
        // keep only edges that agree with a random order
        let mut order: Vec<usize> = (0..d).collect();
        order.shuffle(rng);
        let mut pos = vec![0; d];
        for (k, &v) in order.iter().enumerate() {
            pos[v] = k;
        }
        for (i, j) in g.edges() {
            if pos[i] > pos[j] {
                g.remove_edge(i, j).unwrap();
            }
        }
    }
    g
}

pub fn random_design(rng: &mut ChaCha8Rng, d: usize, k: usize) -> ExperimentDesign {
    let mut conds = vec![Intervention::Observational];
    for _ in 1..k {
        let t = rng.random_range(0..d);
        conds.push(match rng.random_range(0..4) {
            0 => Intervention::Observational,
            1 => Intervention::Abundance(t),
            2 => Intervention::Activity(t),
            _ => {
                let mut s: Vec<usize> = (0..d).filter(|_| rng.random_bool(0.5)).collect();
                if s.is_empty() {
                    s.push(t);
                }
                Intervention::MechanismSet(s)
            }
        });
    }
    ExperimentDesign::unnamed(conds).unwrap()
}

pub fn random_condition(rng: &mut ChaCha8Rng, g: &Graph, scale: f64) -> ConditionParameters {
    let d = g.d();
    loop {
        let mut p = ConditionParameters::zeros(d);
        for (i, j) in g.edges() {
            p.b[(i, j)] = scale * normal(rng);
        }
        for i in 0..d {
            p.mu[i] = normal(rng);
            p.a[i] = 0.5 * normal(rng);
        }
        if log_abs_det_i_minus_b(&p.b).is_ok_and(|f| f.log_abs_det > -3.0) {
            return p;
        }
    }
}

pub fn random_params(rng: &mut ChaCha8Rng, g: &Graph, k: usize) -> ParameterSet {
    let per = (0..k).map(|_| random_condition(rng, g, 0.4)).collect();
    ParameterSet::new(g.clone(), per).unwrap()
}

pub fn random_data(rng: &mut ChaCha8Rng, d: usize, k: usize, n: usize) -> Vec<DMatrix<f64>> {
    (0..k)
        .map(|_| DMatrix::from_fn(n, d, |_, _| 1.5 * normal(rng)))
        .collect()
}

/// Relative error convention of the gradient suite.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

/// Central differences of `f` at `x`, step `h * max(1, |x_j|)`.
pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|j| {
            let step = h * x[j].abs().max(1.0);
            let mut up = x.to_vec();
            let mut dn = x.to_vec();
            up[j] += step;
            dn[j] -= step;
            (f(&up) - f(&dn)) / (2.0 * step)
        })
        .collect()
}

pub fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, b)| rel_err(*a, *b))
        .fold(0.0, f64::max)
}

/// Two-compound feedback loop with an activity intervention on x1 and an
/// abundance intervention on x2.
pub fn feedback_study(seed: u64, n: usize) -> SimulatedStudy {
    let g = Graph::from_edges(2, &[(0, 1), (1, 0)]).unwrap();
    let mut r = rng_for(seed, &[0xfeed]);
    let truth = GroundTruthModel::random(g, NoiseModel::Gaussian, (0.5, 0.9), &mut r).unwrap();
    let design = ExperimentDesign::new(
        vec![
            Intervention::Observational,
            Intervention::Activity(0),
            Intervention::Abundance(1),
        ],
        vec!["obs".into(), "activity x1".into(), "abundance x2".into()],
    )
    .unwrap();
    generate_study(&truth, &design, n, 1.0, seed).unwrap()
}

/// Observational, activity on each compound, abundance on each compound.
pub fn full_design(d: usize) -> ExperimentDesign {
    let mut conds = vec![Intervention::Observational];
    conds.extend((0..d).map(Intervention::Activity));
    conds.extend((0..d).map(Intervention::Abundance));
    ExperimentDesign::unnamed(conds).unwrap()
}

/// Four compounds, strong chain `x1 → x2 → x3` with unit coefficients; `x4`
/// is isolated.
pub fn benchmark_study(seed: u64, n: usize) -> SimulatedStudy {
    let g = Graph::from_edges(4, &[(0, 1), (1, 2)]).unwrap();
    let mut base = ConditionParameters::zeros(4);
    base.b[(0, 1)] = 1.0;
    base.b[(1, 2)] = 1.0;
    base.mu = nalgebra::DVector::from_vec(vec![0.5, -0.2, 0.1, 0.0]);
    let truth = GroundTruthModel::new(g, base, NoiseModel::Gaussian).unwrap();
    let design = ExperimentDesign::unnamed(vec![
        Intervention::Observational,
        Intervention::Activity(0),
        Intervention::Abundance(1),
        Intervention::Activity(1),
        Intervention::Abundance(3),
    ])
    .unwrap();
    generate_study(&truth, &design, n, 1.0, seed).unwrap()
}

/// Every graph on `d` compounds with at most `max_edges` edges.
pub fn all_graphs(d: usize, max_edges: usize) -> Vec<Graph> {
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    (0u32..1 << pairs.len())
        .filter(|m| m.count_ones() as usize <= max_edges)
        .map(|m| {
            let edges: Vec<(usize, usize)> = pairs
                .iter()
                .enumerate()
                .filter(|(k, _)| m >> k & 1 == 1)
                .map(|(_, &p)| p)
                .collect();
            Graph::from_edges(d, &edges).unwrap()
        })
        .collect()
}
