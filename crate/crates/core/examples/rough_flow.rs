//! Solves a rough differential equation with the Davie scheme and checks the
//! Liouville Jacobian for divergence-free fields.

use std::sync::Arc;

use roughlab::flow::{jacobian_liouville, solve_rde, TrigField, VectorField, VectorFieldSet};
use roughlab::roughpath::{lift_brownian, Convention, TimeGrid};

fn main() -> roughlab::Result<()> {
    let rp = lift_brownian(3, TimeGrid::new(1.0, 1 << 10)?, 2, Convention::Stratonovich)?;
    let fields = (0..2)
        .map(|j| Ok(Arc::new(TrigField::solenoidal(1.0, 3.0, j as f64)?) as Arc<dyn VectorField>))
        .collect::<roughlab::Result<Vec<_>>>()?;
    let fields = VectorFieldSet::new(fields)?;

    let traj = solve_rde(&[0.2, -0.4], &fields, &rp)?;
    let jac = jacobian_liouville(&fields, &traj, &rp)?;
    println!("X_T = {:?}", traj.last());
    println!("max |J - 1| = {:.3e}", jac.iter().map(|j| (j - 1.0).abs()).fold(0.0, f64::max));

    // Dyadic self-convergence of the endpoint.
    let mut prev: Option<Vec<f64>> = None;
    for level in 4..=10 {
        let coarse = rp.coarsen(rp.grid().n_steps() >> level)?;
        let end = solve_rde(&[0.2, -0.4], &fields, &coarse)?.last().to_vec();
        if let Some(p) = &prev {
            let d = p.iter().zip(&end).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            println!("level {level:>2}: |X^(n) - X^(n-1)| = {d:.3e}");
        }
        prev = Some(end);
    }
    Ok(())
}
