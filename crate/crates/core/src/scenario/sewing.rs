//! `sewing-rate`: remainder rates, a Young integral against its closed form,
//! refinement-strategy agreement and controlled rough integrals.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use super::{num, Check, RunContext};
use crate::error::Result;
use crate::fit::loglog_fit;
use crate::flow::{controlled_integral_germ, solve_rde, TrigField, VectorField, VectorFieldSet};
use crate::roughpath::TimeGrid;
use crate::sewing::{sew, verify_sewing_rate, FnGerm, Refinement, SewOptions};

/// Largest scale, as a fraction of the horizon, in the rough-rate fit.
const COARSEST_FIT_SCALE: f64 = 1.0 / 16.0;

/// `V_j(x) = sin(x + jπ/2)` on the line.
fn sine_fields(count: usize) -> Result<VectorFieldSet> {
    let fields = (0..count)
        .map(|j| {
            let f = TrigField::sine(1, 0, 1.0, 2.0 * PI, j as f64 * PI / 2.0, vec![1.0])?;
            Ok(Arc::new(f) as Arc<dyn VectorField>)
        })
        .collect::<Result<Vec<_>>>()?;
    VectorFieldSet::new(fields)
}

pub(super) fn run(ctx: &mut RunContext) -> Result<Vec<Check>> {
    let cfg = ctx.cfg;
    let sc = &cfg.sewing;
    let grid = TimeGrid::new(1.0, sc.steps)?;
    let mut checks = Vec::new();

    let a = sc.power;
    let power = FnGerm::new(a, move |s: f64, t: f64| (t - s).powf(a)).with_size_order(a);
    let rate = verify_sewing_rate(&power, &grid)?;
    checks.push(Check::within("sewing-power-rate", "slope", rate.slope, a, sc.slack));
    ctx.csv(
        "sewing_rate.csv",
        &[("germ", format!("(t-s)^{a}")), ("slope", num(rate.slope))],
        |w| {
            writeln!(w, "h,max_remainder")?;
            for (h, r) in &rate.samples {
                writeln!(w, "{},{}", num(*h), num(*r))?;
            }
            Ok(())
        },
    )?;

    // Young germ Z¹_s δZ²_{st} for Z = (cos 2πt, sin 2πt); I_t = π t + sin(4πt)/4.
    let young = FnGerm::new(2.0, |s: f64, t: f64| (2.0 * PI * s).cos() * ((2.0 * PI * t).sin() - (2.0 * PI * s).sin()));
    let opts = SewOptions { tol: sc.tol, ..SewOptions::default() };
    let mid = sew(&young, &grid, &opts)?;
    let thirds = sew(&young, &grid, &SewOptions { refinement: Refinement::Thirds, ..opts })?;
    let mut err = 0.0_f64;
    let mut split = 0.0_f64;
    for i in 0..=grid.n_steps() {
        let t = grid.time(i);
        err = err.max((mid.values[i] - (PI * t + (4.0 * PI * t).sin() / 4.0)).abs());
        split = split.max((mid.values[i] - thirds.values[i]).abs());
    }
    checks.push(Check::at_most("sewing-young-integral", "abs_error", err, 1e-6));
    checks.push(Check::at_most("sewing-refinement-agreement", "abs_gap", split, 10.0 * sc.tol));

    // Controlled rough integrals ∫ V(X) dZ along Davie trajectories.
    let mut worst = f64::INFINITY;
    let mut rows = Vec::new();
    for seed in cfg.driver_seeds() {
        let rp = cfg.rough_path(seed)?;
        let fields = sine_fields(rp.dim())?;
        let traj = solve_rde(&[0.3], &fields, &rp)?;
        let germ = controlled_integral_germ(&fields, &traj, &rp)?;
        let r = verify_sewing_rate(&germ, rp.grid())?;
        // Coarse scales hold too few intervals for a stable maximum.
        let cut = rp.grid().horizon() * COARSEST_FIT_SCALE;
        let pts: Vec<(f64, f64)> = r.samples[r.dropped..].iter().copied().filter(|(h, _)| *h <= cut).collect();
        worst = worst.min(loglog_fit(&pts).map_or(f64::NAN, |f| f.slope));
        rows.extend(r.samples.iter().map(|(h, v)| (seed, *h, *v)));
    }
    let claimed = 3.0 * cfg.driver.alpha;
    checks.push(
        Check::at_least("sewing-rough-rate", "min_slope", worst, claimed - sc.slack)
            .with_detail(format!("{} driver seeds", cfg.driver.replicates)),
    );
    ctx.csv("sewing_rough.csv", &[("claimed_order", num(claimed))], |w| {
        writeln!(w, "seed,h,max_remainder")?;
        for (seed, h, v) in &rows {
            writeln!(w, "{seed},{},{}", num(*h), num(*v))?;
        }
        Ok(())
    })?;
    Ok(checks)
}
