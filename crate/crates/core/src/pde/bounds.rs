//! A priori bounds: Bihari-LaSalle for the Burgers energy, Gronwall for
//! Lipschitz fluxes, and the contraction estimate for differences.

use super::energy::WeightSummary;
use super::nonlinearity::Nonlinearity;
use super::solver::SolveResult;
use crate::drivers::Spectral;
use crate::error::{ensure, Result};
use crate::roughpath::TimeGrid;
use crate::value::LinearValue;

/// Safety margin below the Bihari blow-up time.
pub const BIHARI_MARGIN: f64 = 0.05;

/// Exponent `q = 5/3` of the Burgers energy inequality.
pub const BURGERS_EXPONENT: f64 = 5.0 / 3.0;

/// Constant of Young's inequality `ab <= ε a^p + c_ε b^{p'}`:
/// `c_ε = (εp)^{-p'/p} / p'`.
pub fn young_constant(eps: f64, p: f64) -> f64 {
    let pp = p / (p - 1.0);
    (eps * p).powf(-pp / p) / pp
}

/// Solution of `x' = k x^q`, `x(0) = x0`, valid on `[0, t0]`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct BihariBound {
    pub x0: f64,
    pub k: f64,
    pub q: f64,
    /// Guaranteed existence horizon, `(1 - margin)` times the explosion time
    /// and capped at `horizon`.
    pub t0: f64,
    pub horizon: f64,
}

impl BihariBound {
    /// `x0 / (1 - (q-1) x0^{q-1} k t)^{1/(q-1)}`; `+∞` past the explosion time.
    pub fn curve(&self, t: f64) -> f64 {
        let base = 1.0 - (self.q - 1.0) * self.x0.powf(self.q - 1.0) * self.k * t;
        if base <= 0.0 {
            f64::INFINITY
        } else {
            self.x0 / base.powf(1.0 / (self.q - 1.0))
        }
    }

    pub fn explosion_time(&self) -> f64 {
        if self.k == 0.0 || self.x0 == 0.0 {
            f64::INFINITY
        } else {
            1.0 / ((self.q - 1.0) * self.x0.powf(self.q - 1.0) * self.k)
        }
    }
}

/// Bihari-LaSalle bound for `x_t <= x0 + ∫ k x^q` with `x0 = |u0|²` and
/// constant kernel `k = m_grad_sup · c_ε`.
pub fn bihari_time_bound(u0_norm: f64, m_grad_sup: f64, q: f64, c_eps: f64, horizon: f64) -> Result<BihariBound> {
    ensure!(u0_norm >= 0.0 && u0_norm.is_finite(), "initial norm must be finite and nonnegative");
    ensure!(m_grad_sup >= 0.0 && c_eps >= 0.0, "constants must be nonnegative");
    ensure!(q > 1.0, "exponent must exceed 1, got {q}");
    ensure!(horizon > 0.0, "horizon must be positive");
    let mut b = BihariBound { x0: u0_norm * u0_norm, k: m_grad_sup * c_eps, q, t0: horizon, horizon };
    b.t0 = ((1.0 - BIHARI_MARGIN) * b.explosion_time()).min(horizon);
    Ok(b)
}

/// Bihari bound for the Burgers flux with the weight extremes `w`.
///
/// Uses `‖u‖_∞ <= √2 |u|^{1/2}|∂u|^{1/2}` and Young with `ε = ¼ inf m / sup|∇m|`
/// to absorb the gradient term, giving `x0 = (sup m / inf m)|u0|²` and
/// `k = ⅔·2^{2/3}·sup|∇m|·c_ε / inf m` for `x = |u_t|²`.
pub fn burgers_bihari(u0_norm: f64, w: &WeightSummary, horizon: f64) -> Result<BihariBound> {
    ensure!(w.inf > 0.0 && w.sup >= w.inf, "weight bounds must satisfy 0 < inf <= sup");
    let scaled = u0_norm * (w.sup / w.inf).sqrt();
    if w.grad_sup == 0.0 {
        return bihari_time_bound(scaled, 0.0, BURGERS_EXPONENT, 0.0, horizon);
    }
    let c_eps = young_constant(w.young_epsilon(), 4.0);
    let kernel = 2.0 / 3.0 * 2.0_f64.powf(2.0 / 3.0) * w.grad_sup / w.inf;
    bihari_time_bound(scaled, kernel, BURGERS_EXPONENT, c_eps, horizon)
}

/// `x0 · exp(∫_0^t k)` at every node (trapezoid rule).
pub fn gronwall_bound(x0: f64, k: &[f64], grid: &TimeGrid) -> Result<Vec<f64>> {
    ensure!(k.len() == grid.n_steps() + 1, "kernel must be sampled at every node");
    ensure!(k.iter().all(|v| *v >= 0.0 && v.is_finite()), "kernel must be nonnegative and finite");
    let mut out = Vec::with_capacity(k.len());
    let mut acc = 0.0;
    out.push(x0);
    for i in 0..grid.n_steps() {
        acc += 0.5 * (grid.time(i + 1) - grid.time(i)) * (k[i] + k[i + 1]);
        out.push(x0 * acc.exp());
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ContractionReport {
    /// `sup_t |v_t|² + ∫|∇v|²` for `v = u¹ - u²`.
    pub lhs: f64,
    /// `|v_T|² + ∫_0^T |∇v|²`.
    pub terminal: f64,
    /// `C(T)|v_0|²`.
    pub rhs: f64,
    pub constant: f64,
    pub initial_gap: f64,
    pub holds: bool,
}

/// Checks the contraction estimate for two runs that differ only in `u0`.
///
/// Lipschitz flux: `C = 2(sup m/inf m) exp(kT)` with
/// `k = L(L sup m²/inf m + 2 sup|∇m|)/inf m`.
/// Burgers flux: `C = 2(sup m/inf m) exp(c ∫P^{4/3})` with
/// `P = sup m|∂u¹| + sup|∇m||u¹| + 2 sup m|∂u²|` and
/// `c = 2^{2/3} c_ε / inf m`, `ε = inf m`.
pub fn contraction_check(a: &SolveResult, b: &SolveResult, flux: &Nonlinearity, w: &WeightSummary) -> Result<ContractionReport> {
    ensure!(a.grid == b.grid && a.spec() == b.spec(), "runs must share grids");
    ensure!(a.completed() && b.completed(), "both runs must reach the horizon");
    ensure!(w.inf > 0.0 && w.sup >= w.inf, "weight bounds must satisfy 0 < inf <= sup");
    let sp = Spectral::new(*a.spec());
    let grid = a.grid;
    let diffs: Vec<_> = a.u.iter().zip(&b.u).map(|(x, y)| x.sub(y)).collect();
    let grad_sq: Vec<f64> = diffs
        .iter()
        .map(|v| sp.gradient(v.values()).iter().map(|g| g.iter().map(|x| x * x).sum::<f64>()).sum::<f64>() * v.spec().cell_volume())
        .collect();
    let mut lhs = 0.0_f64;
    let mut integral = 0.0;
    for i in 0..diffs.len() {
        if i > 0 {
            integral += 0.5 * (grid.time(i) - grid.time(i - 1)) * (grad_sq[i] + grad_sq[i - 1]);
        }
        lhs = lhs.max(diffs[i].l2_norm().powi(2) + integral);
    }
    let terminal = diffs.last().expect("non-empty").l2_norm().powi(2) + integral;
    let ratio = w.sup / w.inf;
    let exponent = match flux.lipschitz() {
        Some(l) => l * (l * w.sup * w.sup / w.inf + 2.0 * w.grad_sup) / w.inf * grid.horizon(),
        None => {
            let c = 2.0_f64.powf(2.0 / 3.0) * young_constant(w.inf, 4.0) / w.inf;
            let grad_norm = |u: &crate::drivers::GridField| -> f64 {
                (sp.gradient(u.values())[0].iter().map(|x| x * x).sum::<f64>() * u.spec().cell_volume()).sqrt()
            };
            let p: Vec<f64> = a
                .u
                .iter()
                .zip(&b.u)
                .map(|(u1, u2)| {
                    (w.sup * grad_norm(u1) + w.grad_sup * u1.l2_norm() + 2.0 * w.sup * grad_norm(u2)).powf(4.0 / 3.0)
                })
                .collect();
            let mut acc = 0.0;
            for i in 1..p.len() {
                acc += 0.5 * (grid.time(i) - grid.time(i - 1)) * (p[i] + p[i - 1]);
            }
            c * acc
        }
    };
    let constant = 2.0 * ratio * exponent.exp();
    let initial_gap = diffs[0].l2_norm().powi(2);
    let rhs = constant * initial_gap;
    Ok(ContractionReport { lhs, terminal, rhs, constant, initial_gap, holds: lhs <= rhs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn young_constant_balances() {
        // ab <= ε a^4 + c_ε b^{4/3} with equality at the optimum.
        let eps = 0.3;
        let c = young_constant(eps, 4.0);
        for (a, b) in [(0.5_f64, 2.0_f64), (1.7, 0.2), (3.0, 3.0)] {
            assert!(a * b <= eps * a.powi(4) + c * b.powf(4.0 / 3.0) + 1e-12);
        }
        let b: f64 = 1.3;
        let a = (b / (4.0 * eps)).powf(1.0 / 3.0);
        assert!((a * b - eps * a.powi(4) - c * b.powf(4.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn bihari_degenerates_to_constant() {
        let b = bihari_time_bound(2.0, 0.0, BURGERS_EXPONENT, 1.0, 3.0).unwrap();
        assert_eq!(b.t0, 3.0);
        assert_eq!(b.curve(2.5), 4.0);
        let g = gronwall_bound(1.5, &[0.0; 5], &TimeGrid::new(1.0, 4).unwrap()).unwrap();
        assert!(g.iter().all(|v| *v == 1.5));
    }
}
