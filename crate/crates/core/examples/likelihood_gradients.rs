//! Negative log-likelihood of a three-compound cycle and its analytic
//! gradient, checked against central differences.
//!
//! ```bash
//! cargo run --example likelihood_gradients
//! ```

use cyclic_scm::likelihood::{
    log_abs_det_i_minus_b, neg_log_likelihood, nll_and_gradient, ConditionParameters, NoiseModel,
    ParameterSet,
};
use cyclic_scm::model::Graph;
use cyclic_scm::simulate::{sample_disturbances, solve_equilibrium};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cyclic_scm::Result<()> {
    let g = Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)])?;
    let mut p = ConditionParameters::zeros(3);
    p.b[(0, 1)] = 0.7;
    p.b[(1, 2)] = -0.5;
    p.b[(2, 0)] = 0.4;
    p.mu = DVector::from_vec(vec![0.2, -0.1, 0.3]);
    p.a = DVector::from_vec(vec![0.0, -0.5, 0.2]);
    println!("log|det(I - B)| = {:.6}", log_abs_det_i_minus_b(&p.b)?.log_abs_det);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for noise in [NoiseModel::Gaussian, NoiseModel::SuperGaussian] {
        let eps = sample_disturbances(noise, 200, 3, &mut rng);
        let data = vec![solve_equilibrium(&p, &eps)?];
        let params = ParameterSet::new(g.clone(), vec![p.clone()])?;
        let (nll, grad) = nll_and_gradient(&data, &params, noise)?;

        let x = params.to_vector();
        let mut worst: f64 = 0.0;
        for j in 0..x.len() {
            let h = 1e-5 * x[j].abs().max(1.0);
            let at = |d: f64| {
                let mut v = x.clone();
                v[j] += d;
                neg_log_likelihood(&data, &ParameterSet::from_vector(g.clone(), 1, &v).unwrap(), noise)
                    .unwrap()
            };
            let fd = (at(h) - at(-h)) / (2.0 * h);
            worst = worst.max((fd - grad[j]).abs() / grad[j].abs().max(1.0));
        }
        println!("{noise:?}: nll {nll:.4}, {} coordinates, worst rel err {worst:.2e}", x.len());
    }
    Ok(())
}
