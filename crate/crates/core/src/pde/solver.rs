//! Integrating-factor RK4 for `∂_t u = Δu + div F(u) + Ż^j β_j·∇u` on the
//! periodic grid, driven by a piecewise-linear path.

use rustfft::num_complex::Complex64;

use super::nonlinearity::Nonlinearity;
use crate::drivers::{GridField, GridSpec, Spectral};
use crate::error::{ensure, Error, Result};
use crate::fit::linear_fit;
use crate::flow::VectorFieldSet;
use crate::roughpath::{RoughPath, SampledPath, TimeGrid};
use crate::value::LinearValue;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverOptions {
    /// Time steps per driver segment.
    pub substeps: usize,
    /// Admissible Courant number.
    pub cfl: f64,
    /// `sup |u|` beyond which a run is declared blown up.
    pub blowup_threshold: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { substeps: 4, cfl: 0.8, blowup_threshold: 1e6 }
    }
}

/// A solution sampled at the driver nodes.
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub grid: TimeGrid,
    /// Snapshots `u_{t_i}`, truncated at a blow-up.
    pub u: Vec<GridField>,
    /// Drift path `μ_t = ∫_0^t (Δu + div F(u))`.
    pub mu: Vec<GridField>,
    /// `|u_t|_0²`.
    pub energy: Vec<f64>,
    /// `∫_0^t |∇u|_0²`.
    pub dissipation: Vec<f64>,
    /// `∫_0^t (F(u), ∇u)`.
    pub flux_work: Vec<f64>,
    /// Share of `|u_t|_0²` in the outer half of the box, a wrap-around monitor.
    pub seam_fraction: Vec<f64>,
    pub blow_up: Option<f64>,
    pub steps: usize,
    pub dt: f64,
}

impl SolveResult {
    pub fn spec(&self) -> &GridSpec {
        self.u[0].spec()
    }

    pub fn completed(&self) -> bool {
        self.blow_up.is_none()
    }

    /// `|u_t|² + 2∫|∇u|² - |u_0|² + 2∫(F(u), ∇u)` at every node.
    pub fn classical_residual(&self) -> Vec<f64> {
        (0..self.energy.len())
            .map(|i| self.energy[i] + 2.0 * self.dissipation[i] - self.energy[0] + 2.0 * self.flux_work[i])
            .collect()
    }
}

struct Stage {
    /// `div F(v) + w·∇v`.
    rhs: Vec<f64>,
    /// `Δv + div F(v)`.
    drift: Vec<f64>,
    grad_sq: f64,
    flux_work: f64,
}

struct Stepper<'a> {
    spectral: Spectral,
    flux: &'a Nonlinearity,
    /// `beta[j][axis]` on the grid.
    beta: Vec<Vec<Vec<f64>>>,
    cell: f64,
}

impl Stepper<'_> {
    fn eval(&self, v: &[f64], velocity: &[Vec<f64>]) -> Stage {
        let sp = &self.spectral;
        let c = sp.coefficients(v);
        let n = v.len();
        let d = sp.spec().dim();
        let mut rhs = vec![0.0; n];
        let mut grad_sq = 0.0;
        let mut flux_work = 0.0;
        let fluxes = self.flux.flux(v, d);
        for axis in 0..d {
            let dc: Vec<Complex64> = c
                .iter()
                .enumerate()
                .map(|(i, z)| {
                    let k = sp.wavevector(i)[axis];
                    if is_nyquist(sp, i, axis) {
                        Complex64::new(0.0, 0.0)
                    } else {
                        z * Complex64::new(0.0, k)
                    }
                })
                .collect();
            let g = sp.synthesize(dc);
            for (i, gx) in g.iter().enumerate() {
                rhs[i] += velocity[axis][i] * gx;
                grad_sq += gx * gx;
                flux_work += fluxes[axis][i] * gx;
            }
        }
        let divf = if matches!(self.flux, Nonlinearity::Zero) { vec![0.0; n] } else { sp.divergence(&fluxes) };
        let lap = {
            let lc: Vec<Complex64> = c.iter().enumerate().map(|(i, z)| z * (-sp.k2(i))).collect();
            sp.synthesize(lc)
        };
        let mut drift = lap;
        for i in 0..n {
            rhs[i] += divf[i];
            drift[i] += divf[i];
        }
        Stage { rhs, drift, grad_sq: grad_sq * self.cell, flux_work: flux_work * self.cell }
    }

    /// Heat semigroup `e^{τΔ}`.
    fn heat(&self, v: &[f64], tau: f64) -> Vec<f64> {
        self.spectral.apply_radial(v, |k2| (-k2 * tau).exp())
    }
}

fn is_nyquist(sp: &Spectral, idx: usize, axis: usize) -> bool {
    let n = sp.spec().points_per_axis();
    let m = if sp.spec().dim() == 1 || axis == 1 { idx % n } else { idx / n };
    m == n / 2
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (p, q) in y.iter_mut().zip(x) {
        *p += a * q;
    }
}

fn sum(a: &[f64], ca: f64, b: &[f64], cb: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| ca * x + cb * y).collect()
}

fn seam_fraction(u: &GridField) -> f64 {
    let spec = u.spec();
    let quarter = 0.25 * spec.length();
    let coords = spec.coordinates();
    let mut outer = 0.0;
    let mut total = 0.0;
    for (x, v) in coords.chunks(spec.dim()).zip(u.values()) {
        let e = v * v;
        total += e;
        if x.iter().any(|c| c.abs() >= quarter) {
            outer += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        outer / total
    }
}

/// Solves the equation driven by the piecewise-linear interpolation of `z`,
/// recording at the nodes of `z`.
pub fn solve_smooth_driver(
    u0: &GridField,
    flux: &Nonlinearity,
    beta: &VectorFieldSet,
    z: &SampledPath,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    let spec = *u0.spec();
    flux.check(&spec)?;
    ensure!(beta.dim() == spec.dim(), "transport fields and grid dimensions differ");
    ensure!(beta.len() == z.dim(), "{} transport fields for a {}-dimensional driver", beta.len(), z.dim());
    ensure!(opts.substeps >= 1, "need at least one substep per segment");
    let d = spec.dim();
    let coords = spec.coordinates();
    let mut tmp = vec![0.0; d];
    let beta_grid: Vec<Vec<Vec<f64>>> = (0..beta.len())
        .map(|j| {
            let mut comps = vec![Vec::with_capacity(spec.len()); d];
            for x in coords.chunks(d) {
                beta.field(j).value(x, &mut tmp);
                for a in 0..d {
                    comps[a].push(tmp[a]);
                }
            }
            comps
        })
        .collect();
    let stepper = Stepper { spectral: Spectral::new(spec), flux, beta: beta_grid, cell: spec.cell_volume() };

    let grid = *z.grid();
    let seg = grid.dt();
    let h = seg / opts.substeps as f64;
    let u_sup = u0.max_abs();
    let beta_sup = beta.sup_on(&coords);
    for k in 0..grid.n_steps() {
        let dz = z.increment(k, k + 1);
        let speed: f64 = dz.iter().zip(&beta_sup).map(|(a, b)| (a / seg).abs() * b).sum::<f64>()
            + flux.max_speed(2.0 * u_sup);
        if speed * h > opts.cfl * spec.spacing() {
            return Err(Error::Config(format!(
                "time step {h:.3e} violates the CFL limit on segment {k} (speed {speed:.3e}, spacing {:.3e}); \
                 increase substeps or refine the driver",
                spec.spacing()
            )));
        }
    }

    let mut u = u0.values().to_vec();
    let mut mu = vec![0.0; u.len()];
    let mut out = SolveResult {
        grid,
        u: vec![u0.clone()],
        mu: vec![GridField::zeros(spec)],
        energy: vec![u0.l2_norm().powi(2)],
        dissipation: vec![0.0],
        flux_work: vec![0.0],
        seam_fraction: vec![seam_fraction(u0)],
        blow_up: None,
        steps: 0,
        dt: h,
    };
    let (mut diss, mut work) = (0.0, 0.0);
    let mut velocity = vec![vec![0.0; u.len()]; d];
    for k in 0..grid.n_steps() {
        let zdot: Vec<f64> = z.increment(k, k + 1).iter().map(|v| v / seg).collect();
        for (axis, vel) in velocity.iter_mut().enumerate() {
            vel.fill(0.0);
            for (j, c) in zdot.iter().enumerate() {
                axpy(vel, *c, &stepper.beta[j][axis]);
            }
        }
        for _ in 0..opts.substeps {
            let s1 = stepper.eval(&u, &velocity);
            let a = stepper.heat(&sum(&u, 1.0, &s1.rhs, 0.5 * h), 0.5 * h);
            let s2 = stepper.eval(&a, &velocity);
            let eu_half = stepper.heat(&u, 0.5 * h);
            let b = sum(&eu_half, 1.0, &s2.rhs, 0.5 * h);
            let s3 = stepper.eval(&b, &velocity);
            let eu = stepper.heat(&u, h);
            let c = sum(&eu, 1.0, &stepper.heat(&s3.rhs, 0.5 * h), h);
            let s4 = stepper.eval(&c, &velocity);
            let mut next = eu;
            axpy(&mut next, h / 6.0, &stepper.heat(&s1.rhs, h));
            axpy(&mut next, h / 3.0, &stepper.heat(&sum(&s2.rhs, 1.0, &s3.rhs, 1.0), 0.5 * h));
            axpy(&mut next, h / 6.0, &s4.rhs);
            axpy(&mut mu, h / 6.0, &s1.drift);
            axpy(&mut mu, h / 3.0, &s2.drift);
            axpy(&mut mu, h / 3.0, &s3.drift);
            axpy(&mut mu, h / 6.0, &s4.drift);
            out.steps += 1;
            let sup = next.iter().fold(0.0_f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY });
            if sup > opts.blowup_threshold {
                out.blow_up = Some(grid.time(k) + (out.steps - k * opts.substeps) as f64 * h);
                return Ok(out);
            }
            let s_next = stepper.eval(&next, &velocity);
            diss += 0.5 * h * (s1.grad_sq + s_next.grad_sq);
            work += 0.5 * h * (s1.flux_work + s_next.flux_work);
            u = next;
        }
        let uf = GridField::from_raw(spec, u.clone());
        out.energy.push(uf.l2_norm().powi(2));
        out.dissipation.push(diss);
        out.flux_work.push(work);
        out.seam_fraction.push(seam_fraction(&uf));
        out.u.push(uf);
        out.mu.push(GridField::from_raw(spec, mu.clone()));
    }
    Ok(out)
}

/// Runs at several dyadic levels of a rough path.
#[derive(Clone, Debug)]
pub struct RoughSolve {
    pub levels: Vec<u32>,
    pub results: Vec<SolveResult>,
    /// `(coarse level, fine level, sup_t |u^coarse_t - u^fine_t|_0)` over common nodes.
    pub cauchy: Vec<(u32, u32, f64)>,
    /// Fitted decay of the Cauchy differences per level, in powers of 2.
    pub rate: Option<f64>,
}

/// The level-`n` piecewise-linear approximation `Z(n)` of a rough path.
pub fn level_path(rp: &RoughPath, level: u32) -> Result<SampledPath> {
    let n = rp.grid().n_steps();
    let m = 1usize << level;
    ensure!(m <= n && n.is_multiple_of(m), "level {level} does not divide the {n}-step driver grid");
    rp.path().subsample(n / m)
}

/// Solves along `Z(n)` for every requested level.
pub fn solve_rough(
    u0: &GridField,
    flux: &Nonlinearity,
    beta: &VectorFieldSet,
    rp: &RoughPath,
    levels: &[u32],
    opts: &SolverOptions,
) -> Result<RoughSolve> {
    ensure!(!levels.is_empty(), "need at least one level");
    ensure!(levels.windows(2).all(|w| w[0] < w[1]), "levels must be strictly increasing");
    let results = levels
        .iter()
        .map(|&l| solve_smooth_driver(u0, flux, beta, &level_path(rp, l)?, opts))
        .collect::<Result<Vec<_>>>()?;
    let mut cauchy = Vec::new();
    for (w, r) in levels.windows(2).zip(results.windows(2)) {
        let (coarse, fine) = (&r[0], &r[1]);
        if !coarse.completed() || !fine.completed() {
            continue;
        }
        let ratio = 1usize << (w[1] - w[0]);
        let diff = coarse
            .u
            .iter()
            .enumerate()
            .map(|(i, uc)| uc.sub(&fine.u[i * ratio]).l2_norm())
            .fold(0.0, f64::max);
        cauchy.push((w[0], w[1], diff));
    }
    let pts: Vec<(f64, f64)> = cauchy.iter().filter(|c| c.2 > 0.0).map(|c| (c.0 as f64, c.2.log2())).collect();
    let rate = if pts.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        linear_fit(&x, &y).map(|f| -f.slope)
    } else {
        None
    };
    Ok(RoughSolve { levels: levels.to_vec(), results, cauchy, rate })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;
    use crate::flow::{TrigField, VectorField};

    fn zero_driver(n: usize, horizon: f64) -> SampledPath {
        SampledPath::from_fn(TimeGrid::new(horizon, n).unwrap(), 1, |_, z| z[0] = 0.0).unwrap()
    }

    fn beta_const(c: f64) -> VectorFieldSet {
        let f: Arc<dyn VectorField> = Arc::new(TrigField::constant(vec![c]).unwrap());
        VectorFieldSet::new(vec![f]).unwrap()
    }

    #[test]
    fn heat_mode_decays_exactly() {
        let spec = GridSpec::new(1, 2.0 * PI, 32).unwrap();
        let u0 = GridField::from_fn(spec, |x| (3.0 * x[0]).sin());
        let sol = solve_smooth_driver(&u0, &Nonlinearity::Zero, &beta_const(1.0), &zero_driver(4, 0.1), &SolverOptions::default())
            .unwrap();
        let want = u0.map(|v| v * (-0.9_f64).exp());
        assert!(sol.u[4].sub(&want).max_abs() < 1e-13);
        // μ = ∫Δu recovers the increment.
        let inc = sol.u[4].sub(&u0);
        assert!(inc.sub(&sol.mu[4]).max_abs() < 1e-8);
    }

    #[test]
    fn constant_transport_is_a_shift() {
        // u_t = u_xx + Ż b u_x: with Z_t = t the mode is shifted by b t.
        let spec = GridSpec::new(1, 2.0 * PI, 32).unwrap();
        let u0 = GridField::from_fn(spec, |x| x[0].cos());
        let z = SampledPath::from_fn(TimeGrid::new(0.5, 8).unwrap(), 1, |t, v| v[0] = t).unwrap();
        let sol = solve_smooth_driver(&u0, &Nonlinearity::Zero, &beta_const(0.8), &z, &SolverOptions::default()).unwrap();
        let want = GridField::from_fn(spec, |x| (-0.5_f64).exp() * (x[0] + 0.4).cos());
        assert!(sol.u[8].sub(&want).max_abs() < 1e-8);
    }

    #[test]
    fn cfl_violation_is_a_config_error() {
        let spec = GridSpec::new(1, 20.0, 64).unwrap();
        let u0 = GridField::from_fn(spec, |x| (-x[0] * x[0]).exp());
        let z = SampledPath::from_fn(TimeGrid::new(1.0, 2).unwrap(), 1, |t, v| v[0] = 1e3 * t).unwrap();
        let r = solve_smooth_driver(&u0, &Nonlinearity::Zero, &beta_const(1.0), &z, &SolverOptions::default());
        assert!(matches!(r, Err(Error::Config(_))));
    }
}
