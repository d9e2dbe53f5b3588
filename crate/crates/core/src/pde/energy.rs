//! Weighted and tensorised energy identities along computed solutions.

use std::io::Write;

use super::nonlinearity::Nonlinearity;
use super::solver::SolveResult;
use crate::drivers::{GridField, Spectral};
use crate::error::{ensure, Result};
use crate::flow::{weight_bounds, TensorWeight, WeightField};

/// Extremes of a weight series: `inf m`, `sup m`, `sup |∇m|`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct WeightSummary {
    pub inf: f64,
    pub sup: f64,
    pub grad_sup: f64,
}

impl WeightSummary {
    /// Young parameter `ε = ¼ inf m / sup |∇m|` for the energy bound.
    pub fn young_epsilon(&self) -> f64 {
        0.25 * self.inf / self.grad_sup.max(f64::MIN_POSITIVE)
    }
}

/// Central-difference gradient bound on the periodic grid (noise-robust for
/// Monte Carlo fields).
fn grad_sup(w: &GridField) -> f64 {
    let spec = w.spec();
    let n = spec.points_per_axis();
    let h = spec.spacing();
    let v = w.values();
    let mut sup = 0.0_f64;
    if spec.dim() == 1 {
        for i in 0..n {
            let g = (v[(i + 1) % n] - v[(i + n - 1) % n]) / (2.0 * h);
            sup = sup.max(g.abs());
        }
    } else {
        for i in 0..n {
            for j in 0..n {
                let gx = (v[((i + 1) % n) * n + j] - v[((i + n - 1) % n) * n + j]) / (2.0 * h);
                let gy = (v[i * n + (j + 1) % n] - v[i * n + (j + n - 1) % n]) / (2.0 * h);
                sup = sup.max(gx.hypot(gy));
            }
        }
    }
    sup
}

/// Weight series as grid fields, checked against the solution grid.
fn weights_on_grid(sol: &SolveResult, weights: &[WeightField], report: &[usize]) -> Result<Vec<GridField>> {
    ensure!(weights.len() == report.len(), "one weight field per report time is required");
    ensure!(report.len() >= 2, "need at least two report times");
    ensure!(report[0] == 0, "the first report time must be t = 0");
    ensure!(report.windows(2).all(|w| w[0] < w[1]), "report indices must increase");
    ensure!(
        *report.last().expect("non-empty") < sol.u.len(),
        "report index beyond the computed trajectory"
    );
    let spec = *sol.spec();
    let coords = spec.coordinates();
    weights
        .iter()
        .zip(report)
        .map(|(w, &r)| {
            ensure!(w.points == coords, "weights must be evaluated at the solution grid points");
            ensure!(
                (w.time - sol.grid.time(r)).abs() <= 1e-12 * sol.grid.horizon(),
                "weight time {} does not match report time {}",
                w.time,
                sol.grid.time(r)
            );
            weight_bounds(w)?;
            GridField::new(spec, w.mean.clone())
        })
        .collect()
}

pub fn summarize_weights(weights: &[WeightField], spec: &crate::drivers::GridSpec) -> Result<WeightSummary> {
    let mut s = WeightSummary { inf: f64::INFINITY, sup: 0.0, grad_sup: 0.0 };
    for w in weights {
        let (lo, hi) = weight_bounds(w)?;
        s.inf = s.inf.min(lo);
        s.sup = s.sup.max(hi);
        s.grad_sup = s.grad_sup.max(grad_sup(&GridField::new(*spec, w.mean.clone())?));
    }
    Ok(s)
}

/// Trapezoid weights for `∫_{t_0}^{t_r}` at every prefix of `times`.
fn trapezoid_prefix(times: &[f64]) -> Vec<Vec<f64>> {
    (0..times.len())
        .map(|r| {
            let mut w = vec![0.0; times.len()];
            for q in 0..r {
                let dt = times[q + 1] - times[q];
                w[q] += 0.5 * dt;
                w[q + 1] += 0.5 * dt;
            }
            w
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct EnergyReport {
    pub times: Vec<f64>,
    /// `(u_t², m_t)`.
    pub l2_energy: Vec<f64>,
    /// `∫_0^t (|∇u|², m)`.
    pub h1_dissipation: Vec<f64>,
    /// Weighted residual
    /// `(u_t², m_t) + 2∫(|∇u|², m) - (u_0², m_0) + 2∫(F(u), ∇(um))`.
    pub residual: Vec<f64>,
    /// Monte Carlo standard error propagated linearly into each residual.
    pub residual_se: Vec<f64>,
    /// `|r - r'|` with `r'` from every other report time (time-quadrature error).
    pub quadrature_gap: Vec<f64>,
    /// Unweighted residual at the same times.
    pub classical_residual: Vec<f64>,
    pub weights: WeightSummary,
}

impl EnergyReport {
    /// Allowed `|residual|` at report `r`: three propagated standard errors
    /// plus the quadrature gap.
    pub fn budget(&self, r: usize) -> f64 {
        3.0 * self.residual_se[r] + self.quadrature_gap[r]
    }

    pub fn within_budget(&self) -> bool {
        (0..self.times.len()).all(|r| self.residual[r].abs() <= self.budget(r))
    }

    /// Writes the `t l2_energy h1_dissipation residual` table.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,l2_energy,h1_dissipation,residual")?;
        for r in 0..self.times.len() {
            writeln!(w, "{:e},{:e},{:e},{:e}", self.times[r], self.l2_energy[r], self.h1_dissipation[r], self.residual[r])?;
        }
        Ok(())
    }
}

/// Residual of the weighted energy equality at the report indices, with `m`
/// given at the same times.
pub fn energy_report(
    sol: &SolveResult,
    flux: &Nonlinearity,
    weights: &[WeightField],
    report: &[usize],
) -> Result<EnergyReport> {
    let m = weights_on_grid(sol, weights, report)?;
    let spec = *sol.spec();
    let sp = Spectral::new(spec);
    let cell = spec.cell_volume();
    let times: Vec<f64> = report.iter().map(|&r| sol.grid.time(r)).collect();
    // Pointwise densities whose pairing with m gives each term.
    let dens: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = report
        .iter()
        .map(|&r| {
            let u = sol.u[r].values();
            let e: Vec<f64> = u.iter().map(|v| v * v).collect();
            let grads = sp.gradient(u);
            let g: Vec<f64> = (0..u.len()).map(|i| grads.iter().map(|c| c[i] * c[i]).sum()).collect();
            let divf = flux.divergence(u, &sp);
            // (F(u), ∇(um)) = -(div F(u), um) for the skew-adjoint spectral derivative.
            let f: Vec<f64> = u.iter().zip(&divf).map(|(a, b)| -a * b).collect();
            (e, g, f)
        })
        .collect();
    let pair = |d: &[f64], w: &GridField| d.iter().zip(w.values()).map(|(a, b)| a * b).sum::<f64>() * cell;
    let se_pair = |d: &[f64], w: &WeightField| d.iter().zip(&w.std_error).map(|(a, b)| a.abs() * b).sum::<f64>() * cell;

    let residual_for = |idx: &[usize]| -> Vec<f64> {
        let ts: Vec<f64> = idx.iter().map(|&q| times[q]).collect();
        let tw = trapezoid_prefix(&ts);
        (0..idx.len())
            .map(|r| {
                let q = idx[r];
                let mut res = pair(&dens[q].0, &m[q]) - pair(&dens[0].0, &m[0]);
                for (p, w) in idx.iter().zip(&tw[r]) {
                    res += 2.0 * w * (pair(&dens[*p].1, &m[*p]) + pair(&dens[*p].2, &m[*p]));
                }
                res
            })
            .collect()
    };
    let all: Vec<usize> = (0..report.len()).collect();
    let residual = residual_for(&all);
    let even: Vec<usize> = (0..report.len()).step_by(2).collect();
    let coarse = residual_for(&even);
    let mut quadrature_gap = vec![0.0; report.len()];
    for (c, &q) in even.iter().enumerate() {
        quadrature_gap[q] = (residual[q] - coarse[c]).abs();
    }
    for q in (1..report.len()).step_by(2) {
        let left = quadrature_gap[q - 1];
        let right = if q + 1 < report.len() { quadrature_gap[q + 1] } else { left };
        quadrature_gap[q] = left.max(right);
    }
    let tw = trapezoid_prefix(&times);
    let residual_se = (0..report.len())
        .map(|r| {
            let mut s = se_pair(&dens[r].0, &weights[r]) + se_pair(&dens[0].0, &weights[0]);
            for p in 0..report.len() {
                let w = tw[r][p];
                if w > 0.0 {
                    let combined: Vec<f64> = dens[p].1.iter().zip(&dens[p].2).map(|(a, b)| a + b).collect();
                    s += 2.0 * w * se_pair(&combined, &weights[p]);
                }
            }
            s
        })
        .collect();
    let l2_energy = (0..report.len()).map(|r| pair(&dens[r].0, &m[r])).collect();
    let h1_dissipation = (0..report.len())
        .map(|r| (0..report.len()).map(|p| tw[r][p] * pair(&dens[p].1, &m[p])).sum())
        .collect();
    let classical = sol.classical_residual();
    Ok(EnergyReport {
        times,
        l2_energy,
        h1_dissipation,
        residual,
        residual_se,
        quadrature_gap,
        classical_residual: report.iter().map(|&r| classical[r]).collect(),
        weights: summarize_weights(weights, &spec)?,
    })
}

/// `n` report indices spread evenly over `0..=n_steps` (all nodes if fewer).
pub fn report_indices(n_steps: usize, count: usize) -> Vec<usize> {
    if n_steps < count {
        return (0..=n_steps).collect();
    }
    let mut out: Vec<usize> = (0..count)
        .map(|r| ((r as f64) * n_steps as f64 / (count - 1) as f64).round() as usize)
        .collect();
    out.dedup();
    out
}

/// Outcome of the tensorised energy check.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub enum TensorStatus {
    Checked(TensorEnergyReport),
    Skipped { reason: String },
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct TensorEnergyReport {
    pub basis: usize,
    pub times: Vec<f64>,
    /// `(u_t⊗u_t, Mᴺ_t) + 2∫(∇u⊗∇u, Mᴺ) - (u_0⊗u_0, Mᴺ_0) - 2∫(u ⊗̂ div F(u), Mᴺ)`.
    pub residual: Vec<f64>,
    /// `(u_t⊗u_t, Mᴺ_t)`.
    pub tensor_energy: Vec<f64>,
    /// `(u_t², m_t)` when weights were supplied.
    pub weighted_energy: Option<Vec<f64>>,
}

impl TensorEnergyReport {
    /// `|(u², m) - (u⊗u, Mᴺ)|` at the report closest to `t`.
    pub fn pairing_gap_at(&self, t: f64) -> Option<f64> {
        let w = self.weighted_energy.as_ref()?;
        let r = (0..self.times.len())
            .min_by(|a, b| (self.times[*a] - t).abs().total_cmp(&(self.times[*b] - t).abs()))?;
        Some((w[r] - self.tensor_energy[r]).abs())
    }
}

/// Tensor-weight work above which [`tensor_energy_check`] skips.
pub const TENSOR_BUDGET: f64 = 5e9;

/// Estimated work of a tensor-weight series (samples × times × points² × basis).
pub fn tensor_work(n_samples: usize, times: usize, points: usize, basis: usize) -> f64 {
    n_samples as f64 * times as f64 * (points * points) as f64 * basis as f64
}

/// Approximate energy equality tested against `Mᴺ` (`d = 1`).
pub fn tensor_energy_check(
    sol: &SolveResult,
    flux: &Nonlinearity,
    tensors: &[TensorWeight],
    weights: Option<&[WeightField]>,
    report: &[usize],
) -> Result<TensorEnergyReport> {
    let spec = *sol.spec();
    ensure!(spec.dim() == 1, "the tensor check is implemented for d = 1 only");
    ensure!(tensors.len() == report.len() && report.len() >= 2, "one tensor weight per report time is required");
    ensure!(report[0] == 0 && report.windows(2).all(|w| w[0] < w[1]), "report indices must start at 0 and increase");
    ensure!(*report.last().expect("non-empty") < sol.u.len(), "report index beyond the computed trajectory");
    let coords = spec.coordinates();
    let basis = tensors[0].basis;
    for t in tensors {
        ensure!(t.x == coords && t.y == coords, "tensor weights must live on the solution grid");
        ensure!(t.basis == basis, "tensor weights must share one basis size");
    }
    let sp = Spectral::new(spec);
    let h = spec.spacing();
    let n = coords.len();
    let bilinear = |a: &[f64], b: &[f64], m: &TensorWeight| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += m.mean[i * n + j] * b[j];
            }
            s += a[i] * row;
        }
        s * h * h
    };
    let times: Vec<f64> = report.iter().map(|&r| sol.grid.time(r)).collect();
    let mut energy = Vec::new();
    let mut integrand = Vec::new();
    for (m, &r) in tensors.iter().zip(report) {
        let u = sol.u[r].values();
        let du = &sp.gradient(u)[0];
        let divf = flux.divergence(u, &sp);
        energy.push(bilinear(u, u, m));
        let sym = 0.5 * (bilinear(u, &divf, m) + bilinear(&divf, u, m));
        integrand.push(2.0 * bilinear(du, du, m) - 2.0 * sym);
    }
    let tw = trapezoid_prefix(&times);
    let residual = (0..report.len())
        .map(|r| energy[r] - energy[0] + (0..report.len()).map(|p| tw[r][p] * integrand[p]).sum::<f64>())
        .collect();
    let weighted_energy = match weights {
        Some(ws) => {
            let m = weights_on_grid(sol, ws, report)?;
            Some(
                report
                    .iter()
                    .zip(&m)
                    .map(|(&r, w)| sol.u[r].values().iter().zip(w.values()).map(|(u, m)| u * u * m).sum::<f64>() * h)
                    .collect(),
            )
        }
        None => None,
    };
    Ok(TensorEnergyReport { basis, times, residual, tensor_energy: energy, weighted_energy })
}
