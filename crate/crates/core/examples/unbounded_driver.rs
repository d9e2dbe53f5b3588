//! Spectral Sobolev norms, the smoothing family and the transport driver
//! pair built from a Brownian lift.

use std::sync::Arc;

use roughlab::drivers::{build_drivers, smoothing_apply, sobolev_norm, GridField, GridSpec};
use roughlab::flow::{TrigField, VectorField, VectorFieldSet};
use roughlab::roughpath::{lift_brownian, Convention, TimeGrid};

fn main() -> roughlab::Result<()> {
    let spec = GridSpec::new(1, 20.0, 128)?;
    let phi = GridField::from_fn(spec, |x| (-x[0] * x[0]).exp());
    for s in [-3.0, -1.0, 0.0, 1.0, 2.0] {
        println!("|φ|_{s:+} = {:.6}", sobolev_norm(&phi, s));
    }
    for eta in [0.5, 0.1, 0.02] {
        let (smooth, _) = smoothing_apply(&phi, eta)?;
        let diff = GridField::new(spec, phi.values().iter().zip(smooth.values()).map(|(a, b)| a - b).collect())?;
        println!("η = {eta}: |φ - J^η φ|_0 = {:.3e}", diff.l2_norm());
    }

    let beta = TrigField::sine(1, 0, 0.5, 20.0, 0.0, vec![1.0])?;
    let beta = VectorFieldSet::new(vec![Arc::new(beta) as Arc<dyn VectorField>])?;
    let rp = lift_brownian(5, TimeGrid::new(1.0, 64)?, 1, Convention::Stratonovich)?;
    let drivers = build_drivers(&beta, &rp, &spec)?;
    let defect = drivers.chen_defect(0, 20, 64, &phi)?;
    println!("driver Chen defect |δA²_(0,20,64) φ|_0 = {:.3e}", defect.l2_norm());
    Ok(())
}
