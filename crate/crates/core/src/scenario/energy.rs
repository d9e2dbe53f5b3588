//! `burgers-energy`: weighted energy residuals along the finest driver
//! level, the unperturbed energy identity under time-step refinement,
//! uniformity over levels and the Bihari bound.

use std::io::Write;
use std::sync::Arc;

use super::config::{FluxKind, ScenarioConfig};
use super::{num, Check, RunContext};
use crate::drivers::GridField;
use crate::error::Result;
use crate::flow::{feynman_kac_weight_series, sample_seed, TrigField, VectorField, VectorFieldSet, WeightField};
use crate::pde::{
    burgers_bihari, energy_report, level_path, report_indices, solve_rough, solve_smooth_driver, SolverOptions,
};
use crate::roughpath::{lift_piecewise_linear, RoughPath, SampledPath, TimeGrid};

fn zero_fields(count: usize, dim: usize) -> Result<VectorFieldSet> {
    let fields = (0..count)
        .map(|_| Ok(Arc::new(TrigField::constant(vec![0.0; dim])?) as Arc<dyn VectorField>))
        .collect::<Result<Vec<_>>>()?;
    VectorFieldSet::new(fields)
}

/// Canonical lift of the level-`n` driver, with the configured exponent.
pub(super) fn level_lift(rp: &RoughPath, level: u32) -> Result<RoughPath> {
    lift_piecewise_linear(&level_path(rp, level)?)?.with_alpha(rp.alpha())
}

/// Feynman-Kac weights at the report indices of the level-`n` driver.
pub(super) fn level_weights(
    cfg: &ScenarioConfig,
    rp: &RoughPath,
    level: u32,
    report: &[usize],
    seed: u64,
) -> Result<Vec<WeightField>> {
    let coords = cfg.grid_spec()?.coordinates();
    let lift = level_lift(rp, level)?;
    feynman_kac_weight_series(&coords, report, &cfg.beta()?, &lift, cfg.monte_carlo.samples, sample_seed(cfg.seed, seed))
}

/// Classical residual at the horizon for each substep count, on the
/// configured fields when they are divergence free and on `β ≡ 0` otherwise.
fn identity_order(ctx: &mut RunContext, u0: &GridField) -> Result<Vec<(usize, f64, f64)>> {
    let cfg = ctx.cfg;
    let level = *cfg.driver.levels.last().expect("validated");
    let segments = 1usize << level;
    let (beta, path) = if cfg.beta_divergence_free() {
        (cfg.beta()?, level_path(&cfg.rough_path(cfg.driver.seed)?, level)?)
    } else {
        let grid = TimeGrid::new(cfg.driver.horizon, segments)?;
        let path = SampledPath::from_fn(grid, cfg.driver.dim, |_, z| z.fill(0.0))?;
        (zero_fields(cfg.driver.dim, cfg.grid.dim)?, path)
    };
    let mut out = Vec::new();
    for &s in &cfg.energy.substeps_sweep {
        let opts = SolverOptions { substeps: s, ..cfg.solver_options() };
        let sol = solve_smooth_driver(u0, &cfg.flux(), &beta, &path, &opts)?;
        ctx.steps += sol.steps as u64;
        let r = *sol.classical_residual().last().expect("non-empty");
        out.push((s, sol.dt, r.abs()));
    }
    Ok(out)
}

pub(super) fn run(ctx: &mut RunContext) -> Result<Vec<Check>> {
    let cfg = ctx.cfg;
    let u0 = cfg.initial()?;
    let flux = cfg.flux();
    let beta = cfg.beta()?;
    let opts = cfg.solver_options();
    let levels = cfg.driver.levels.clone();
    let finest = *levels.last().expect("validated");
    let horizon = cfg.driver.horizon;
    let mut checks = Vec::new();

    let order = identity_order(ctx, &u0)?;
    let min_order = order
        .windows(2)
        .map(|w| (w[0].2 / w[1].2).log2() / (w[0].1 / w[1].1).log2())
        .fold(f64::INFINITY, f64::min);
    checks.push(Check::at_least("energy-identity-order", "min_order", min_order, cfg.energy.min_order));
    ctx.csv("energy_order.csv", &[("level", finest.to_string())], |w| {
        writeln!(w, "substeps,dt,residual")?;
        for (s, dt, r) in &order {
            writeln!(w, "{s},{},{}", num(*dt), num(*r))?;
        }
        Ok(())
    })?;

    let mut worst_ratio = 0.0_f64;
    let mut worst_spread = 0.0_f64;
    let mut all_completed = true;
    let mut bihari_horizon_ok = true;
    let mut worst_dominance = 0.0_f64;
    let mut t0_min = f64::INFINITY;
    let mut level_rows = Vec::new();
    for seed in cfg.driver_seeds() {
        let rp = cfg.rough_path(seed)?;
        let rs = solve_rough(&u0, &flux, &beta, &rp, &levels, &opts)?;
        ctx.steps += rs.results.iter().map(|r| r.steps as u64).sum::<u64>();
        for (l, r) in levels.iter().zip(&rs.results) {
            let peak = r.energy.iter().fold(0.0_f64, |a, b| a.max(*b));
            level_rows.push((seed, *l, peak, r.blow_up, *r.seam_fraction.last().expect("non-empty")));
            all_completed &= r.completed();
        }
        if rs.results.len() >= 2 {
            let k = rs.results.len();
            let peak = |r: &crate::pde::SolveResult| r.energy.iter().fold(0.0_f64, |a, b| a.max(*b));
            let (a, b) = (peak(&rs.results[k - 2]), peak(&rs.results[k - 1]));
            worst_spread = worst_spread.max((a - b).abs() / a.max(b));
        }
        let sol = rs.results.last().expect("non-empty");
        if !sol.completed() {
            continue;
        }
        let rep = report_indices(1 << finest, cfg.report.times);
        let weights = level_weights(cfg, &rp, finest, &rep, seed)?;
        let er = energy_report(sol, &flux, &weights, &rep)?;
        for r in 0..er.times.len() {
            let budget = er.budget(r);
            let ratio = if er.residual[r] == 0.0 { 0.0 } else { er.residual[r].abs() / budget };
            worst_ratio = worst_ratio.max(ratio);
        }
        let meta = [
            ("driver_seed", seed.to_string()),
            ("level", finest.to_string()),
            ("samples", cfg.monte_carlo.samples.to_string()),
            ("inf_m", num(er.weights.inf)),
            ("sup_m", num(er.weights.sup)),
            ("grad_sup_m", num(er.weights.grad_sup)),
        ];
        ctx.csv(&format!("energy_seed{seed}.csv"), &meta, |w| er.write_csv(w))?;
        ctx.csv(&format!("energy_budget_seed{seed}.csv"), &[("driver_seed", seed.to_string())], |w| {
            writeln!(w, "t,residual,residual_se,quadrature_gap,classical_residual")?;
            for r in 0..er.times.len() {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    num(er.times[r]),
                    num(er.residual[r]),
                    num(er.residual_se[r]),
                    num(er.quadrature_gap[r]),
                    num(er.classical_residual[r])
                )?;
            }
            Ok(())
        })?;

        if cfg.nonlinearity.kind == FluxKind::Burgers {
            let bound = burgers_bihari(u0.l2_norm(), &er.weights, horizon)?;
            let blow = bound.explosion_time();
            t0_min = t0_min.min(blow);
            bihari_horizon_ok &= horizon < blow;
            for r in &rs.results {
                for (i, e) in r.energy.iter().enumerate() {
                    worst_dominance = worst_dominance.max(e / bound.curve(r.grid.time(i)));
                }
            }
            ctx.csv(
                &format!("bihari_seed{seed}.csv"),
                &[("x0", num(bound.x0)), ("k", num(bound.k)), ("q", num(bound.q)), ("t0", num(bound.t0))],
                |w| {
                    writeln!(w, "t,energy,bound")?;
                    for (i, e) in sol.energy.iter().enumerate() {
                        let t = sol.grid.time(i);
                        writeln!(w, "{},{},{}", num(t), num(*e), num(bound.curve(t)))?;
                    }
                    Ok(())
                },
            )?;
        }
    }
    ctx.csv("levels.csv", &[], |w| {
        writeln!(w, "seed,level,max_energy,blow_up_time,seam_fraction")?;
        for (seed, l, peak, blow, seam) in &level_rows {
            let blow = blow.map_or_else(String::new, num);
            writeln!(w, "{seed},{l},{},{blow},{}", num(*peak), num(*seam))?;
        }
        Ok(())
    })?;

    checks.push(Check::holds("energy-completed", "blow_ups", level_rows.iter().filter(|r| r.3.is_some()).count() as f64, "=0", all_completed));
    if all_completed {
        checks.push(Check::at_most("energy-weighted-residual", "max_residual_over_budget", worst_ratio, 1.0));
    } else {
        checks.push(Check::skip("energy-weighted-residual", "a driver level blew up"));
    }
    if levels.len() >= 2 {
        checks.push(Check::less("energy-level-spread", "max_spread", worst_spread, cfg.energy.max_spread));
    }
    if cfg.nonlinearity.kind == FluxKind::Burgers && all_completed {
        checks.push(Check::holds("bihari-horizon", "explosion_time", t0_min, &format!(">{horizon}"), bihari_horizon_ok));
        checks.push(Check::at_most("bihari-dominance", "max_energy_over_bound", worst_dominance, 1.0));
    }
    Ok(checks)
}
