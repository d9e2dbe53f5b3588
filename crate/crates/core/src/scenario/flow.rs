//! `flow-convergence`: Davie flows against a closed form, Liouville for
//! divergence-free fields, and dyadic self-convergence along the driver.

use std::io::Write;
use std::sync::Arc;

use super::{num, Check, RunContext};
use crate::error::{ensure, Result};
use crate::fit::linear_fit;
use crate::flow::{jacobian_liouville, solve_rde, LinearField, TrigField, VectorField, VectorFieldSet};
use crate::roughpath::{lift_brownian, lift_piecewise_linear, Convention, SampledPath, TimeGrid};

/// `|X_T - x0 e^T|` for `dX = X dt` on `2^10` steps.
fn exponential_error() -> Result<f64> {
    let grid = TimeGrid::new(1.0, 1 << 10)?;
    let rp = lift_piecewise_linear(&SampledPath::from_fn(grid, 1, |t, z| z[0] = t)?)?;
    let f: Arc<dyn VectorField> = Arc::new(LinearField::new(vec![1.0], vec![0.0])?);
    let traj = solve_rde(&[1.0], &VectorFieldSet::new(vec![f])?, &rp)?;
    Ok((traj.last()[0] - 1.0_f64.exp()).abs())
}

/// `max |J - 1|` along a planar flow driven by two solenoidal fields.
fn solenoidal_jacobian(seed: u64) -> Result<f64> {
    let rp = lift_brownian(seed, TimeGrid::new(1.0, 256)?, 2, Convention::Stratonovich)?;
    let fields = (0..2)
        .map(|j| Ok(Arc::new(TrigField::solenoidal(1.0, 3.0, j as f64)?) as Arc<dyn VectorField>))
        .collect::<Result<Vec<_>>>()?;
    let fields = VectorFieldSet::new(fields)?;
    let traj = solve_rde(&[0.2, -0.4], &fields, &rp)?;
    let jac = jacobian_liouville(&fields, &traj, &rp)?;
    Ok(jac.iter().map(|j| (j - 1.0).abs()).fold(0.0, f64::max))
}

/// `-slope` of `log2 diff` against the level; infinite when all diffs vanish.
fn dyadic_rate(pts: &[(f64, f64)]) -> f64 {
    let (x, y): (Vec<f64>, Vec<f64>) = pts.iter().filter(|p| p.1 > 0.0).map(|p| (p.0, p.1.log2())).unzip();
    if x.len() < 2 {
        return f64::INFINITY;
    }
    linear_fit(&x, &y).map_or(f64::NAN, |f| -f.slope)
}

pub(super) fn run(ctx: &mut RunContext) -> Result<Vec<Check>> {
    let cfg = ctx.cfg;
    let fc = &cfg.flow;
    let mut checks = Vec::new();
    checks.push(Check::at_most("flow-exponential", "abs_error", exponential_error()?, 1e-4));
    checks.push(Check::at_most("flow-solenoidal-jacobian", "max_dev", solenoidal_jacobian(cfg.seed)?, 1e-12));

    let beta = cfg.beta()?;
    let d = beta.dim();
    let n = cfg.driver.steps;
    let top = *fc.levels.last().expect("validated");
    ensure!((1usize << top) <= n, "flow.levels exceed driver.steps = {n}");
    let mut rows = Vec::new();
    // Squared Cauchy differences summed over seeds, per level pair.
    let mut sq = vec![0.0_f64; fc.levels.len() - 1];
    let mut worst_seed = f64::INFINITY;
    for seed in cfg.driver_seeds() {
        let rp = cfg.rough_path(seed)?;
        let mut finals: Vec<Vec<Vec<f64>>> = Vec::new();
        for &l in &fc.levels {
            let coarse = rp.coarsen(n >> l)?;
            let states = fc
                .points
                .chunks(d)
                .map(|x0| {
                    let traj = solve_rde(x0, &beta, &coarse)?;
                    Ok((0..=coarse.grid().n_steps()).flat_map(|i| traj.state(i).to_vec()).collect())
                })
                .collect::<Result<Vec<Vec<f64>>>>()?;
            finals.push(states);
        }
        let mut pts = Vec::new();
        for (k, w) in fc.levels.windows(2).enumerate() {
            // sup over common nodes and starting points
            let mut diff = 0.0_f64;
            for (c, f) in finals[k].iter().zip(&finals[k + 1]) {
                for i in 0..c.len() / d {
                    for a in 0..d {
                        diff = diff.max((c[i * d + a] - f[2 * i * d + a]).abs());
                    }
                }
            }
            rows.push((seed, w[0], cfg.driver.horizon / (1usize << w[0]) as f64, diff));
            sq[k] += diff * diff;
            pts.push((w[0] as f64, diff));
        }
        worst_seed = worst_seed.min(dyadic_rate(&pts));
    }
    let rms: Vec<(f64, f64)> = fc
        .levels
        .iter()
        .zip(&sq)
        .map(|(&l, s)| (l as f64, (s / cfg.driver.replicates as f64).sqrt()))
        .collect();
    let rate = dyadic_rate(&rms);
    let bound = 2.0 * cfg.driver.alpha - fc.slack;
    checks.push(Check::at_least("flow-self-convergence", "rate", rate, bound).with_detail(format!(
        "rms over {} driver seeds; slowest single seed {worst_seed:.3}",
        cfg.driver.replicates
    )));
    ctx.csv("flow_convergence.csv", &[("points", format!("{:?}", fc.points))], |w| {
        writeln!(w, "seed,level,dt,cauchy_diff")?;
        for (seed, l, dt, diff) in &rows {
            writeln!(w, "{seed},{l},{},{}", num(*dt), num(*diff))?;
        }
        Ok(())
    })?;
    Ok(checks)
}
