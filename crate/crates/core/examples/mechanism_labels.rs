//! Mechanism labels for a four-compound graph under five conditions.
//!
//! Compound `i` gets a new label in condition `c` when the intervention there
//! changes its mechanism: an activity intervention on a parent, or an
//! abundance intervention on `i` itself.
//!
//! ```bash
//! cargo run --example mechanism_labels
//! ```

use cyclic_scm::model::{derive_mechanism_labels, ExperimentDesign, Graph, Intervention};

fn main() -> cyclic_scm::Result<()> {
    let g = Graph::from_edges(4, &[(0, 1), (0, 2), (1, 3)])?;
    let design = ExperimentDesign::new(
        vec![
            Intervention::Observational,
            Intervention::Activity(0),
            Intervention::Activity(1),
            Intervention::Abundance(2),
            Intervention::Abundance(0),
        ],
        (1..=5).map(|c| format!("c{c}")).collect(),
    )?;
    let labels = derive_mechanism_labels(&g, &design)?;

    println!("       {}", design.names().join("  "));
    for (i, row) in labels.one_based().iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|m| format!("{m:>2}")).collect();
        println!("x{}    {}   M = {}", i + 1, cells.join("  "), labels.counts()[i]);
    }
    println!(
        "{} parameter blocks instead of {}",
        labels.total_mechanisms(),
        g.d() * design.len()
    );
    Ok(())
}
