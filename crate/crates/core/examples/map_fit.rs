//! MAP parameters for a known graph under both priors.
//!
//! ```bash
//! cargo run --release --example map_fit
//! ```

use cyclic_scm::inference::{map_fit, FitOptions};
use cyclic_scm::likelihood::{ConditionParameters, NoiseModel};
use cyclic_scm::model::{ExperimentDesign, Graph, Intervention};
use cyclic_scm::priors::{GpPriorConfig, PriorConfig};
use cyclic_scm::simulate::{generate_study, GroundTruthModel};
use nalgebra::DVector;

fn main() -> cyclic_scm::Result<()> {
    let g = Graph::from_edges(2, &[(0, 1), (1, 0)])?;
    let mut base = ConditionParameters::zeros(2);
    base.b[(0, 1)] = 0.6;
    base.b[(1, 0)] = -0.4;
    base.mu = DVector::from_vec(vec![1.0, 0.0]);
    let truth = GroundTruthModel::new(g.clone(), base, NoiseModel::Gaussian)?;
    let design = ExperimentDesign::unnamed(vec![
        Intervention::Observational,
        Intervention::Activity(0),
        Intervention::Abundance(1),
    ])?;
    let study = generate_study(&truth, &design, 2000, 1.0, 11)?;

    for prior in [PriorConfig::default(), PriorConfig::Gp(GpPriorConfig::default())] {
        let fit = map_fit(&g, &study.data, &design, &prior, NoiseModel::Gaussian, &FitOptions::default())?;
        println!(
            "{} prior: -log posterior {:.3}, converged {}, |grad| {:.1e}, {} iterations",
            prior.name(),
            fit.neg_log_posterior,
            fit.converged,
            fit.gradient_norm_at_solution,
            fit.iterations
        );
        for (c, p) in fit.params.conditions().iter().enumerate() {
            println!(
                "  condition {}: b12 {:+.3} (true {:+.3}), b21 {:+.3} (true {:+.3})",
                c + 1,
                p.b[(0, 1)],
                study.per_condition_models[c].b[(0, 1)],
                p.b[(1, 0)],
                study.per_condition_models[c].b[(1, 0)]
            );
        }
    }
    Ok(())
}
