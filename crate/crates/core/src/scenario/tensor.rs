//! `tensor-energy`: the energy equality tested against the Hermite tensor
//! weight `Mᴺ` for a sweep of basis sizes (`d = 1`).

use std::io::Write;

use super::energy::level_lift;
use super::{num, Check, RunContext};
use crate::error::Result;
use crate::flow::{feynman_kac_weight_series, sample_seed, tensor_weight_series};
use crate::pde::{level_path, report_indices, solve_smooth_driver, tensor_energy_check, tensor_work};

const NAMES: [&str; 2] = ["tensor-pairing-monotone", "tensor-terminal-parseval"];

pub(super) fn run(ctx: &mut RunContext) -> Result<Vec<Check>> {
    let cfg = ctx.cfg;
    let tc = &cfg.tensor;
    let skip = |reason: &str| NAMES.iter().map(|n| Check::skip(n, reason)).collect::<Vec<_>>();
    if cfg.grid.dim != 1 {
        return Ok(skip("the tensor weight is implemented for d = 1 only"));
    }
    let spec = cfg.grid_spec()?;
    let coords = spec.coordinates();
    let level = *cfg.driver.levels.last().expect("validated");
    let rep = report_indices(1 << level, cfg.report.times);
    let nmax = *tc.bases.iter().max().expect("validated");
    let work = tensor_work(cfg.monte_carlo.samples, rep.len(), coords.len(), nmax);
    if work > tc.budget {
        return Ok(skip(&format!("tensor work {work:e} exceeds the budget {:e}", tc.budget)));
    }

    let u0 = cfg.initial()?;
    let flux = cfg.flux();
    let beta = cfg.beta()?;
    let rp = cfg.rough_path(cfg.driver.seed)?;
    let sol = solve_smooth_driver(&u0, &flux, &beta, &level_path(&rp, level)?, &cfg.solver_options())?;
    ctx.steps += sol.steps as u64;
    if !sol.completed() {
        return Ok(skip("the solution blew up"));
    }
    let lift = level_lift(&rp, level)?;
    let mc_seed = sample_seed(cfg.seed, cfg.driver.seed);
    let n = cfg.monte_carlo.samples;
    let weights = feynman_kac_weight_series(&coords, &rep, &beta, &lift, n, mc_seed)?;
    let tensors = tensor_weight_series(&tc.bases, &coords, &coords, &rep, &beta, &lift, n, mc_seed)?;

    let mut reports = Vec::new();
    for b in 0..tc.bases.len() {
        let per_time: Vec<_> = tensors.iter().map(|row| row[b].clone()).collect();
        reports.push(tensor_energy_check(&sol, &flux, &per_time, Some(&weights), &rep)?);
    }
    let mid = 0.5 * cfg.driver.horizon;
    let mut order: Vec<usize> = (0..reports.len()).collect();
    order.sort_by_key(|&i| reports[i].basis);
    let gaps: Vec<(usize, f64)> = order
        .iter()
        .map(|&i| (reports[i].basis, reports[i].pairing_gap_at(mid).expect("weights supplied")))
        .collect();
    let worst_rise = gaps
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / w[0].1.max(f64::MIN_POSITIVE))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut checks = Vec::new();
    if gaps.len() >= 2 {
        checks.push(
            Check::at_most("tensor-pairing-monotone", "max_relative_rise", worst_rise, 1e-12)
                .with_detail(format!("gaps at t = {mid}: {gaps:?}")),
        );
    } else {
        checks.push(Check::skip(NAMES[0], "a single basis size"));
    }
    let largest = &reports[*order.last().expect("non-empty")];
    let u_t = sol.u[*rep.last().expect("non-empty")].l2_norm().powi(2);
    let terminal = *largest.tensor_energy.last().expect("non-empty");
    checks.push(
        Check::at_most("tensor-terminal-parseval", "relative_gap", (u_t - terminal).abs() / u_t, tc.parseval_tol)
            .with_detail(format!("basis {}", largest.basis)),
    );

    ctx.csv(
        "tensor_energy.csv",
        &[("driver_seed", cfg.driver.seed.to_string()), ("level", level.to_string()), ("samples", n.to_string())],
        |w| {
            writeln!(w, "basis,t,tensor_energy,weighted_energy,residual")?;
            for &i in &order {
                let r = &reports[i];
                let we = r.weighted_energy.as_ref().expect("weights supplied");
                for k in 0..r.times.len() {
                    writeln!(
                        w,
                        "{},{},{},{},{}",
                        r.basis,
                        num(r.times[k]),
                        num(r.tensor_energy[k]),
                        num(we[k]),
                        num(r.residual[k])
                    )?;
                }
            }
            Ok(())
        },
    )?;
    Ok(checks)
}
