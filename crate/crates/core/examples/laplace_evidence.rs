//! Laplace log evidence of a few candidate graphs for the same study.
//!
//! ```bash
//! cargo run --release --example laplace_evidence
//! ```

use cyclic_scm::inference::{laplace_log_evidence, FitOptions};
use cyclic_scm::likelihood::NoiseModel;
use cyclic_scm::model::{ExperimentDesign, Graph, Intervention};
use cyclic_scm::priors::PriorConfig;
use cyclic_scm::simulate::{generate_study, GroundTruthModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cyclic_scm::Result<()> {
    let truth_graph = Graph::from_edges(3, &[(0, 1), (1, 2), (2, 1)])?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let truth = GroundTruthModel::random(truth_graph.clone(), NoiseModel::Gaussian, (0.4, 0.8), &mut rng)?;
    let design = ExperimentDesign::unnamed(vec![
        Intervention::Observational,
        Intervention::Activity(0),
        Intervention::Activity(1),
        Intervention::Abundance(2),
    ])?;
    let study = generate_study(&truth, &design, 400, 1.0, 5)?;

    let candidates = [
        ("empty", Graph::empty(3)),
        ("chain", Graph::from_edges(3, &[(0, 1), (1, 2)])?),
        ("truth", truth_graph),
        ("reversed", Graph::from_edges(3, &[(1, 0), (2, 1), (1, 2)])?),
        ("complete", Graph::from_edges(3, &[(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)])?),
    ];
    println!("{:>9} {:>12} {:>12} {:>10} {:>4}", "graph", "log ev", "-log post", "log|H|", "dim");
    for (name, g) in candidates {
        let ev = laplace_log_evidence(&g, &study.data, &design, &PriorConfig::default(), NoiseModel::Gaussian, &FitOptions::default())?;
        println!(
            "{name:>9} {:>12.3} {:>12.3} {:>10.3} {:>4}{}",
            ev.log_evidence,
            ev.map.neg_log_posterior,
            ev.hessian_log_det,
            ev.parameter_count,
            if ev.hessian_floored { "  (floored)" } else { "" }
        );
    }
    Ok(())
}
