//! Guaranteed horizon for Burgers from the Bihari-LaSalle inequality, compared
//! with the computed energy.

use std::sync::Arc;

use roughlab::drivers::{GridField, GridSpec};
use roughlab::flow::{feynman_kac_weight_series, TrigField, VectorField, VectorFieldSet};
use roughlab::pde::{burgers_bihari, level_path, report_indices, solve_smooth_driver, summarize_weights, Nonlinearity, SolverOptions};
use roughlab::roughpath::{lift_brownian, lift_piecewise_linear, Convention, TimeGrid};

fn main() -> roughlab::Result<()> {
    let spec = GridSpec::new(1, 20.0, 64)?;
    let u0 = GridField::from_fn(spec, |x| 1.5 * (-x[0] * x[0]).exp());
    let beta = TrigField::sine(1, 0, 0.5, 20.0, 0.0, vec![1.0])?;
    let beta = VectorFieldSet::new(vec![Arc::new(beta) as Arc<dyn VectorField>])?;
    let rp = lift_brownian(2, TimeGrid::new(0.5, 128)?, 1, Convention::Stratonovich)?;
    let path = level_path(&rp, 7)?;
    let lift = lift_piecewise_linear(&path)?;

    let report = report_indices(128, 17);
    let weights = feynman_kac_weight_series(&spec.coordinates(), &report, &beta, &lift, 128, 11)?;
    let summary = summarize_weights(&weights, &spec)?;
    let bound = burgers_bihari(u0.l2_norm(), &summary, 0.5)?;
    println!("inf m {:.4}, sup m {:.4}, sup |∇m| {:.4}", summary.inf, summary.sup, summary.grad_sup);
    println!("explosion time {:.4}, guaranteed horizon {:.4}", bound.explosion_time(), bound.t0);

    let sol = solve_smooth_driver(&u0, &Nonlinearity::Burgers, &beta, &path, &SolverOptions::default())?;
    for &r in report.iter().step_by(4) {
        let t = sol.grid.time(r);
        println!("t = {t:.4}: |u_t|² = {:.6} ≤ {:.6}", sol.energy[r], bound.curve(t));
    }
    Ok(())
}
