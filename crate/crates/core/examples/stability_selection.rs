//! Edge selection frequencies over half-subsamples of a simulated chain.
//!
//! ```bash
//! cargo run --release --example stability_selection
//! ```

use cyclic_scm::io::frequencies_to_dot;
use cyclic_scm::likelihood::{ConditionParameters, NoiseModel};
use cyclic_scm::model::{ExperimentDesign, Graph, Intervention};
use cyclic_scm::priors::PriorConfig;
use cyclic_scm::search::{stability_selection, SearchOptions, StabilityOptions, StructureConstraints};
use cyclic_scm::simulate::{generate_study, GroundTruthModel};

fn main() -> cyclic_scm::Result<()> {
    let g = Graph::from_edges(3, &[(0, 1), (1, 2)])?;
    let mut base = ConditionParameters::zeros(3);
    base.b[(0, 1)] = 1.0;
    base.b[(1, 2)] = 0.8;
    let truth = GroundTruthModel::new(g, base, NoiseModel::Gaussian)?;
    let design = ExperimentDesign::unnamed(vec![
        Intervention::Observational,
        Intervention::Activity(0),
        Intervention::Abundance(1),
    ])?;
    let study = generate_study(&truth, &design, 800, 1.0, 2)?;

    let opts = StabilityOptions {
        n_runs: 10,
        subsample_fraction: 0.5,
        search: SearchOptions {
            restarts: 3,
            seed: 2,
            ..SearchOptions::default()
        },
    };
    let out = stability_selection(
        &study.data,
        &design,
        &PriorConfig::default(),
        NoiseModel::Gaussian,
        StructureConstraints::default(),
        &opts,
    )?;
    println!("selection frequency (row -> column) over {} runs:", out.frequencies.runs);
    println!("{}", out.frequencies.freq);
    let names: Vec<String> = ["x1", "x2", "x3"].iter().map(|s| s.to_string()).collect();
    print!("{}", frequencies_to_dot(&out.frequencies, &names));
    Ok(())
}
