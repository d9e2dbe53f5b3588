//! `contraction`: difference estimates for two solutions that differ only in
//! their initial data, with a perturbation-size sweep. The quadratic
//! scaling is fitted on the terminal difference energy.

use std::io::Write;

use super::energy::level_weights;
use super::{num, Check, RunContext};
use crate::drivers::GridField;
use crate::error::Result;
use crate::fit::loglog_fit;
use crate::pde::{contraction_check, level_path, report_indices, solve_smooth_driver, summarize_weights};

/// Odd bump `x₁ exp(-|x - c|²/w²)` normalised to `|ψ|_0 = 1`.
fn perturbation_shape(u0: &GridField, center: f64, width: f64) -> GridField {
    let raw = GridField::from_fn(*u0.spec(), |x| {
        let r2: f64 = x.iter().map(|v| (v - center) * (v - center)).sum();
        (x[0] - center) * (-r2 / (width * width)).exp()
    });
    let n = raw.l2_norm();
    raw.map(|v| v / n)
}

pub(super) fn run(ctx: &mut RunContext) -> Result<Vec<Check>> {
    let cfg = ctx.cfg;
    let spec = cfg.grid_spec()?;
    let u0 = cfg.initial()?;
    let psi = perturbation_shape(&u0, cfg.initial.center, cfg.initial.width);
    let flux = cfg.flux();
    let beta = cfg.beta()?;
    let opts = cfg.solver_options();
    let level = *cfg.driver.levels.last().expect("validated");
    let eps = &cfg.contraction.perturbations;

    let mut rows = Vec::new();
    let mut all_hold = true;
    let mut worst_ratio = 0.0_f64;
    let mut slope_dev = 0.0_f64;
    let mut slopes = Vec::new();
    let mut blown = 0;
    for seed in cfg.driver_seeds() {
        let rp = cfg.rough_path(seed)?;
        let path = level_path(&rp, level)?;
        let base = solve_smooth_driver(&u0, &flux, &beta, &path, &opts)?;
        ctx.steps += base.steps as u64;
        if !base.completed() {
            blown += 1;
            continue;
        }
        let rep = report_indices(1 << level, cfg.report.times);
        let weights = level_weights(cfg, &rp, level, &rep, seed)?;
        let summary = summarize_weights(&weights, &spec)?;
        let mut pts = Vec::new();
        for &e in eps {
            let mut v0 = u0.clone();
            for (a, p) in v0.values_mut().iter_mut().zip(psi.values()) {
                *a += e * p;
            }
            let other = solve_smooth_driver(&v0, &flux, &beta, &path, &opts)?;
            ctx.steps += other.steps as u64;
            if !other.completed() {
                blown += 1;
                continue;
            }
            let rep = contraction_check(&base, &other, &flux, &summary)?;
            all_hold &= rep.holds;
            worst_ratio = worst_ratio.max(rep.lhs / rep.rhs);
            pts.push((e, rep.terminal));
            rows.push((seed, e, rep.lhs, rep.terminal, rep.rhs, rep.constant));
        }
        if pts.len() >= 2 {
            let s = loglog_fit(&pts).map_or(f64::NAN, |f| f.slope);
            slope_dev = slope_dev.max((s - 2.0).abs());
            slopes.push(s);
        }
    }
    let mut checks = Vec::new();
    checks.push(Check::holds("contraction-completed", "blow_ups", blown as f64, "=0", blown == 0));
    checks.push(
        Check::at_most("contraction-bound", "max_lhs_over_rhs", worst_ratio, 1.0).with_detail(if all_hold {
            String::new()
        } else {
            "estimate violated for at least one perturbation".to_string()
        }),
    );
    if eps.len() >= 2 {
        checks.push(
            Check::at_most("contraction-quadratic-scaling", "max_slope_dev", slope_dev, cfg.contraction.slope_tolerance)
                .with_detail(format!("slopes {slopes:?}")),
        );
    }
    ctx.csv("contraction.csv", &[("level", level.to_string())], |w| {
        writeln!(w, "seed,perturbation,lhs,terminal,rhs,constant")?;
        for (seed, e, l, t, r, c) in &rows {
            writeln!(w, "{seed},{},{},{},{},{}", num(*e), num(*l), num(*t), num(*r), num(*c))?;
        }
        Ok(())
    })?;
    Ok(checks)
}
