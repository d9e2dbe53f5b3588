//! Lifts a Brownian path and a smooth loop, then measures Chen defects on
//! random triples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roughlab::roughpath::{chen_defect, lift_brownian, lift_piecewise_linear, joint_lift, Convention, SampledPath, TimeGrid};

fn max_defect(rp: &roughlab::roughpath::RoughPath, rng: &mut ChaCha8Rng) -> roughlab::Result<f64> {
    let n = rp.grid().n_steps();
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let mut ix = [rng.random_range(0..=n), rng.random_range(0..=n), rng.random_range(0..=n)];
        ix.sort_unstable();
        let d = chen_defect(rp, ix[0], ix[1], ix[2])?;
        worst = worst.max(d.iter().fold(0.0, |a, b| a.max(b.abs())));
    }
    Ok(worst)
}

fn main() -> roughlab::Result<()> {
    let grid = TimeGrid::new(1.0, 1 << 12)?;
    let brownian = lift_brownian(42, grid, 2, Convention::Stratonovich)?;
    let ito = lift_brownian(42, grid, 2, Convention::Ito)?;
    let circle = lift_piecewise_linear(&SampledPath::from_fn(grid, 2, |t, z| {
        let a = 2.0 * std::f64::consts::PI * t;
        z[0] = a.cos();
        z[1] = a.sin();
    })?)?;
    let joint = joint_lift(&brownian, &circle)?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (name, rp) in [("stratonovich", &brownian), ("ito", &ito), ("circle", &circle), ("joint", &joint)] {
        println!("{name:>13}: max Chen defect {:.3e}", max_defect(rp, &mut rng)?);
    }

    // The circle's Lévy area over one turn is its enclosed area, π.
    let inc = circle.increment(0, grid.n_steps())?;
    let area = 0.5 * (inc.second_at(0, 1) - inc.second_at(1, 0));
    println!("circle Lévy area {area:.6} (π = {:.6})", std::f64::consts::PI);
    Ok(())
}
