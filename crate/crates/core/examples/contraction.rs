//! Difference estimate for two Lipschitz-flux runs that differ in their
//! initial data.

use std::sync::Arc;

use roughlab::drivers::{GridField, GridSpec};
use roughlab::flow::{feynman_kac_weight_series, TrigField, VectorField, VectorFieldSet};
use roughlab::pde::{
    contraction_check, level_path, report_indices, solve_smooth_driver, summarize_weights, Nonlinearity, Profile,
    SolverOptions,
};
use roughlab::roughpath::{lift_brownian, lift_piecewise_linear, Convention, TimeGrid};

fn main() -> roughlab::Result<()> {
    let spec = GridSpec::new(1, 20.0, 64)?;
    let beta = TrigField::sine(1, 0, 0.5, 20.0, 0.0, vec![1.0])?;
    let beta = VectorFieldSet::new(vec![Arc::new(beta) as Arc<dyn VectorField>])?;
    let flux = Nonlinearity::Lipschitz { profile: Profile::Arctan, direction: vec![1.0] };
    let rp = lift_brownian(4, TimeGrid::new(0.5, 128)?, 1, Convention::Stratonovich)?;
    let path = level_path(&rp, 7)?;
    let opts = SolverOptions::default();

    let report = report_indices(128, 33);
    let weights = feynman_kac_weight_series(&spec.coordinates(), &report, &beta, &lift_piecewise_linear(&path)?, 128, 1)?;
    let summary = summarize_weights(&weights, &spec)?;

    let u0 = GridField::from_fn(spec, |x| (-x[0] * x[0]).exp());
    let a = solve_smooth_driver(&u0, &flux, &beta, &path, &opts)?;
    for eps in [1e-1, 1e-2, 1e-3] {
        let v0 = GridField::from_fn(spec, |x| (-x[0] * x[0]).exp() + eps * x[0] * (-x[0] * x[0]).exp());
        let b = solve_smooth_driver(&v0, &flux, &beta, &path, &opts)?;
        let rep = contraction_check(&a, &b, &flux, &summary)?;
        println!(
            "ε = {eps:.0e}: sup energy {:.3e} ≤ C|v0|² = {:.3e} (C = {:.3}), terminal {:.3e}",
            rep.lhs, rep.rhs, rep.constant, rep.terminal
        );
    }
    Ok(())
}
