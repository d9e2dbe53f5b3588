//! `weight-field`: the Feynman-Kac weight at `t = 0` with positivity, the
//! paired lower bound and standard-error scaling.

use std::io::Write;

use super::{num, Check, RunContext};
use crate::error::{Error, Result};
use crate::fit::loglog_fit;
use crate::flow::{feynman_kac_pair, feynman_kac_weight, sample_seed, weight_bounds};

/// Points used for the sample-size sweep (every `stride`-th grid point).
const SWEEP_POINTS: usize = 8;

pub(super) fn run(ctx: &mut RunContext) -> Result<Vec<Check>> {
    let cfg = ctx.cfg;
    let spec = cfg.grid_spec()?;
    let coords = spec.coordinates();
    let beta = cfg.beta()?;
    let rp = cfg.rough_path(cfg.driver.seed)?;
    let samples = cfg.monte_carlo.samples;
    let mc_seed = sample_seed(cfg.seed, cfg.driver.seed);
    let (m, dual) = feynman_kac_pair(&coords, 0.0, &beta, &rp, samples, mc_seed)?;
    let mut checks = Vec::new();

    match weight_bounds(&m) {
        Ok((lo, hi)) => {
            checks.push(Check::greater("weight-positive", "inf_m", lo, 0.0).with_detail(format!("sup m = {hi:e}")));
        }
        Err(Error::Violation(msg)) => {
            checks.push(Check::holds("weight-positive", "inf_m", f64::NAN, ">0", false).with_detail(msg));
        }
        Err(e) => return Err(e),
    }

    // m m̃ >= 1 - 3σ with σ the delta-method error of the product.
    let mut margin = f64::INFINITY;
    for i in 0..m.len() {
        let (a, b) = (m.mean[i], dual.mean[i]);
        let sigma = (b * m.std_error[i]).hypot(a * dual.std_error[i]);
        margin = margin.min(a * b - (1.0 - 3.0 * sigma));
    }
    checks.push(Check::at_least("weight-lower-bound", "min_margin", margin, 0.0));

    if cfg.beta_divergence_free() {
        let dev = m.mean.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        let se = m.std_error.iter().fold(0.0_f64, |a, b| a.max(*b));
        checks.push(Check::at_most("weight-divergence-free", "max_dev", dev.max(se), 0.0));
    }

    let mut sweep = Vec::new();
    if !cfg.beta_divergence_free() && cfg.monte_carlo.sample_sweep.len() >= 2 {
        let stride = (coords.len() / spec.dim() / SWEEP_POINTS).max(1) * spec.dim();
        let pts: Vec<f64> = coords.chunks(stride).flat_map(|c| c[..spec.dim()].to_vec()).collect();
        for &n in &cfg.monte_carlo.sample_sweep {
            let w = feynman_kac_weight(&pts, 0.0, &beta, &rp, n, mc_seed)?;
            let mean_se = w.std_error.iter().sum::<f64>() / w.len() as f64;
            sweep.push((n as f64, mean_se));
        }
        let slope = loglog_fit(&sweep).map_or(f64::NAN, |f| f.slope);
        checks.push(Check::within("weight-stderr-scaling", "slope", slope, -0.5, 0.1));
    } else {
        checks.push(Check::skip("weight-stderr-scaling", "zero variance or no sweep configured"));
    }

    ctx.csv("weight.csv", &[("driver_seed", cfg.driver.seed.to_string())], |w| m.write_csv(w))?;
    ctx.csv("weight_dual.csv", &[("driver_seed", cfg.driver.seed.to_string())], |w| dual.write_csv(w))?;
    ctx.csv("weight_stderr.csv", &[], |w| {
        writeln!(w, "n_samples,mean_stderr")?;
        for (n, se) in &sweep {
            writeln!(w, "{n},{}", num(*se))?;
        }
        Ok(())
    })?;
    Ok(checks)
}
