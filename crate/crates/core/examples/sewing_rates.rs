//! Sews a Riemann-Stieltjes germ and fits remainder rates.

use std::f64::consts::PI;

use roughlab::roughpath::TimeGrid;
use roughlab::sewing::{sew, verify_sewing_rate, FnGerm, Refinement, SewOptions};

fn main() -> roughlab::Result<()> {
    let grid = TimeGrid::new(1.0, 64)?;

    let power = FnGerm::new(1.5, |s: f64, t: f64| (t - s).powf(1.5)).with_size_order(1.5);
    let rate = verify_sewing_rate(&power, &grid)?;
    println!("(t-s)^1.5 germ: fitted remainder slope {:.3}", rate.slope);

    // ∫_0^t cos(2πs) d sin(2πs) = πt + sin(4πt)/4.
    let young = FnGerm::new(2.0, |s: f64, t: f64| (2.0 * PI * s).cos() * ((2.0 * PI * t).sin() - (2.0 * PI * s).sin()));
    let opts = SewOptions { tol: 1e-10, ..SewOptions::default() };
    let mid = sew(&young, &grid, &opts)?;
    let thirds = sew(&young, &grid, &SewOptions { refinement: Refinement::Thirds, ..opts })?;
    let exact = PI + (4.0 * PI).sin() / 4.0;
    println!("Young integral: midpoint {:.12}, thirds {:.12}, exact {exact:.12}", mid.last(), thirds.last());
    Ok(())
}
