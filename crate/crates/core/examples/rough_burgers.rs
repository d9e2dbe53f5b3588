//! Viscous Burgers with rough transport noise along dyadic driver levels.

use std::sync::Arc;

use roughlab::drivers::{GridField, GridSpec};
use roughlab::flow::{TrigField, VectorField, VectorFieldSet};
use roughlab::pde::{solve_rough, Nonlinearity, SolverOptions};
use roughlab::roughpath::{lift_brownian, Convention, TimeGrid};

fn main() -> roughlab::Result<()> {
    let spec = GridSpec::new(1, 20.0, 64)?;
    let u0 = GridField::from_fn(spec, |x| (-x[0] * x[0]).exp());
    let beta = TrigField::sine(1, 0, 0.5, 20.0, 0.0, vec![1.0])?;
    let beta = VectorFieldSet::new(vec![Arc::new(beta) as Arc<dyn VectorField>])?;
    let rp = lift_brownian(9, TimeGrid::new(0.5, 256)?, 1, Convention::Stratonovich)?;

    let rs = solve_rough(&u0, &Nonlinearity::Burgers, &beta, &rp, &[4, 5, 6, 7, 8], &SolverOptions::default())?;
    for (level, r) in rs.levels.iter().zip(&rs.results) {
        let peak = r.energy.iter().fold(0.0_f64, |a, b| a.max(*b));
        println!("level {level}: max |u_t|² = {peak:.6}, |u_T|² = {:.6}, steps {}", r.energy.last().unwrap(), r.steps);
    }
    for (a, b, d) in &rs.cauchy {
        println!("sup_t |u({a}) - u({b})|_0 = {d:.3e}");
    }
    if let Some(rate) = rs.rate {
        println!("fitted Cauchy rate {rate:.3}");
    }
    Ok(())
}
