//! `lift-check`: Chen relations, geometric symmetry and the Itô correction
//! on random grid triples.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{smooth_path, DriverKind};
use super::{num, Check, RunContext};
use crate::error::Result;
use crate::roughpath::{chen_defect, joint_lift, lift_brownian, lift_piecewise_linear, Convention, RoughPath};

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Largest entry among the terms of Chen's relation at `(s, θ, t)`.
fn entry_scale(rp: &RoughPath, s: usize, th: usize, t: usize) -> Result<f64> {
    let (full, left, right) = (rp.increment(s, t)?, rp.increment(s, th)?, rp.increment(th, t)?);
    let outer = max_abs(&left.first) * max_abs(&right.first);
    Ok(max_abs(&full.second).max(max_abs(&left.second)).max(max_abs(&right.second)).max(outer))
}

/// `|Sym ℤ_{st} - ½ δZ⊗δZ|` relative to `max(1, |δZ|²)`.
fn symmetry_defect(rp: &RoughPath, s: usize, t: usize) -> Result<f64> {
    let inc = rp.increment(s, t)?;
    let d = inc.dim();
    let sym = inc.sym();
    let mut worst = 0.0_f64;
    for i in 0..d {
        for j in 0..d {
            worst = worst.max((sym[i * d + j] - 0.5 * inc.first[i] * inc.first[j]).abs());
        }
    }
    Ok(worst / max_abs(&inc.first).powi(2).max(1.0))
}

pub(super) fn run(ctx: &mut RunContext) -> Result<Vec<Check>> {
    let cfg = ctx.cfg;
    let grid = cfg.time_grid()?;
    let n = grid.n_steps();
    let seed = cfg.driver.seed;
    let circle = lift_piecewise_linear(&smooth_path(DriverKind::Smooth, grid, 2, 1.0)?)?;
    let strat = lift_brownian(seed, grid, cfg.driver.dim, Convention::Stratonovich)?;
    let ito = lift_brownian(seed, grid, cfg.driver.dim, Convention::Ito)?;
    let joint = joint_lift(&strat, &circle)?;
    let lifts: Vec<(&str, RoughPath, bool)> = vec![
        ("driver", cfg.rough_path(seed)?, cfg.driver.kind != DriverKind::Brownian || cfg.driver.convention == Convention::Stratonovich),
        ("piecewise-linear", circle, true),
        ("brownian-stratonovich", strat.clone(), true),
        ("brownian-ito", ito.clone(), false),
        ("joint", joint, true),
    ];

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let triples: Vec<[usize; 3]> = (0..cfg.lift.triples)
        .map(|_| {
            let mut t = [rng.random_range(0..=n), rng.random_range(0..=n), rng.random_range(0..=n)];
            t.sort_unstable();
            t
        })
        .collect();

    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for (name, rp, geometric) in &lifts {
        let mut worst = 0.0_f64;
        let mut worst_sym = 0.0_f64;
        for &[s, th, t] in &triples {
            let defect = max_abs(&chen_defect(rp, s, th, t)?);
            let scale = entry_scale(rp, s, th, t)?;
            let rel = if defect == 0.0 { 0.0 } else { defect / scale };
            worst = worst.max(rel);
            rows.push((name.to_string(), s, th, t, defect, scale));
            if *geometric {
                worst_sym = worst_sym.max(symmetry_defect(rp, s, t)?);
            }
        }
        checks.push(Check::at_most(&format!("chen-{name}"), "relative_defect", worst, cfg.lift.tolerance));
        if *geometric {
            checks.push(Check::at_most(&format!("symmetry-{name}"), "relative_defect", worst_sym, cfg.lift.tolerance));
        }
    }

    // Itô minus Stratonovich on the diagonal is -T/2 over the whole horizon.
    let (a, b) = (ito.increment(0, n)?, strat.increment(0, n)?);
    let d = cfg.driver.dim;
    let gap = (0..d)
        .map(|i| (a.second_at(i, i) - b.second_at(i, i) + 0.5 * grid.horizon()).abs())
        .fold(0.0, f64::max);
    checks.push(Check::at_most("ito-correction", "abs_error", gap, 1e-12 * grid.horizon().max(1.0)));

    ctx.csv(
        "chen_defect.csv",
        &[("steps", n.to_string()), ("horizon", num(grid.horizon())), ("triple_seed", cfg.seed.to_string())],
        |w| {
            writeln!(w, "lift,s,theta,t,defect,scale")?;
            for (name, s, th, t, defect, scale) in &rows {
                writeln!(w, "{name},{s},{th},{t},{},{}", num(*defect), num(*scale))?;
            }
            Ok(())
        },
    )?;
    Ok(checks)
}
