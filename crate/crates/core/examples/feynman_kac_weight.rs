//! Monte Carlo Feynman-Kac weight for a compressible transport field.
#![allow(clippy::needless_range_loop)]

use std::sync::Arc;

use roughlab::flow::{feynman_kac_pair, sample_seed, weight_bounds, TrigField, VectorField, VectorFieldSet};
use roughlab::roughpath::{lift_brownian, Convention, TimeGrid};

fn main() -> roughlab::Result<()> {
    let beta = TrigField::sine(1, 0, 0.5, 20.0, 0.0, vec![1.0])?;
    let beta = VectorFieldSet::new(vec![Arc::new(beta) as Arc<dyn VectorField>])?;
    let rp = lift_brownian(1, TimeGrid::new(0.5, 256)?, 1, Convention::Stratonovich)?;
    let points: Vec<f64> = (0..16).map(|i| -10.0 + 20.0 * i as f64 / 16.0).collect();

    let (m, dual) = feynman_kac_pair(&points, 0.0, &beta, &rp, 2000, sample_seed(0, 1))?;
    let (lo, hi) = weight_bounds(&m)?;
    println!("inf m = {lo:.4}, sup m = {hi:.4}");
    println!("{:>8} {:>10} {:>10} {:>10}", "x", "m", "se", "m·m̃");
    for i in 0..points.len() {
        println!("{:>8.3} {:>10.5} {:>10.2e} {:>10.5}", points[i], m.mean[i], m.std_error[i], m.mean[i] * dual.mean[i]);
    }
    Ok(())
}
