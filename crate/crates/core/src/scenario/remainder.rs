//! `remainder-fit`: Hölder exponents of `u♮` in `H^{-3}` and of `δu` in
//! `H^{-1}` along the finest driver level.

use std::io::Write;

use super::energy::level_lift;
use super::{num, Check, RunContext};
use crate::drivers::{build_drivers, extract_remainder, fit_exponent};
use crate::error::Result;
use crate::pde::{level_path, solve_smooth_driver};

pub(super) fn run(ctx: &mut RunContext) -> Result<Vec<Check>> {
    let cfg = ctx.cfg;
    let spec = cfg.grid_spec()?;
    let u0 = cfg.initial()?;
    let flux = cfg.flux();
    let beta = cfg.beta()?;
    let level = *cfg.driver.levels.last().expect("validated");
    let alpha = cfg.driver.alpha;
    let window = cfg.remainder.window * cfg.driver.horizon;
    let mut rows = Vec::new();
    let mut zeta_min = f64::INFINITY;
    let mut margin_min = f64::INFINITY;
    let mut blown = 0;
    for seed in cfg.driver_seeds() {
        let rp = cfg.rough_path(seed)?;
        let sol = solve_smooth_driver(&u0, &flux, &beta, &level_path(&rp, level)?, &cfg.solver_options())?;
        ctx.steps += sol.steps as u64;
        if !sol.completed() {
            blown += 1;
            continue;
        }
        let lift = level_lift(&rp, level)?;
        let drivers = build_drivers(&beta, &lift, &spec)?;
        let rem = extract_remainder(&sol.u, &sol.mu, &drivers)?;
        let natural = fit_exponent(&rem.natural(), -3.0, window)?;
        let incr = fit_exponent(&rem.increments(), -1.0, window)?;
        let zeta = natural.slope;
        let target = alpha.min(1.0 - alpha).min(zeta - 2.0 * alpha);
        zeta_min = zeta_min.min(zeta);
        margin_min = margin_min.min(incr.slope - (target - cfg.remainder.slack));
        for (kind, fit) in [("natural", &natural), ("increment", &incr)] {
            rows.extend(fit.samples.iter().map(|(h, v)| (seed, kind, *h, *v, fit.slope)));
        }
    }
    let mut checks = Vec::new();
    checks.push(Check::holds("remainder-completed", "blow_ups", blown as f64, "=0", blown == 0));
    checks.push(
        Check::greater("remainder-zeta", "zeta", zeta_min, 1.0)
            .with_detail(format!("minimum over {} driver seeds", cfg.driver.replicates)),
    );
    checks.push(Check::at_least("remainder-increment-rate", "margin", margin_min, 0.0).with_detail(
        "fitted δu exponent minus (min(α, 1-α, ζ-2α) - slack)".to_string(),
    ));
    ctx.csv(
        "remainder.csv",
        &[("level", level.to_string()), ("window", num(window)), ("alpha", num(alpha))],
        |w| {
            writeln!(w, "seed,kind,h,value,slope")?;
            for (seed, kind, h, v, slope) in &rows {
                writeln!(w, "{seed},{kind},{},{},{}", num(*h), num(*v), num(*slope))?;
            }
            Ok(())
        },
    )?;
    Ok(checks)
}
