//! The GP prior on local linearizations: two conditions that share a
//! mechanism are cheap when their linearizations lie on one smooth function
//! and expensive when the slopes disagree.
//!
//! ```bash
//! cargo run --example gp_prior
//! ```

use cyclic_scm::priors::{gp_kernel_block, gp_prior_neg_logpdf, GpPriorConfig, PseudoDatum};

fn datum(u: f64, value: f64, slope: f64) -> PseudoDatum {
    PseudoDatum {
        // parent mean, then the noise input at 0
        location: vec![u, 0.0],
        value,
        // slope on the parent, then alpha
        slopes: vec![slope, 0.5],
    }
}

fn main() -> cyclic_scm::Result<()> {
    let cfg = GpPriorConfig::default();
    let k = gp_kernel_block(&[0.0, 0.0], &[2.0, 0.0], &cfg);
    println!("k(0, 2) = {:.3}, dk/du2 = {:.3}", k.value_value, k.value_slope[0]);

    println!("{:>6} {:>12} {:>12}", "gap", "concordant", "discordant");
    for gap in [0.5, 1.0, 2.0, 5.0, 10.0, 20.0] {
        let a = datum(0.0, 1.0, 0.8);
        let same = [a.clone(), datum(gap, 1.0 + 0.8 * gap, 0.8)];
        let flipped = [a, datum(gap, 1.0 + 0.8 * gap, -0.8)];
        println!(
            "{gap:>6.1} {:>12.3} {:>12.3}",
            gp_prior_neg_logpdf(&same, &cfg)?,
            gp_prior_neg_logpdf(&flipped, &cfg)?
        );
    }
    println!("(negative log prior density; lower is more plausible)");
    Ok(())
}
