//! Second-order (Davie) scheme for `dX = V_j(X) dZ^j`.

use super::fields::VectorFieldSet;
use crate::error::{ensure, Error, Result};
use crate::roughpath::{RoughPath, TimeGrid};
use crate::sewing::{sew, Germ, SewOptions};

/// Norm above which a flow is treated as blown up.
pub const BLOWUP_NORM: f64 = 1e12;

/// Scratch space for one Davie step.
pub(crate) struct Workspace {
    dim: usize,
    n_fields: usize,
    v: Vec<f64>,
    dv: Vec<f64>,
    div: Vec<f64>,
    grad_div: Vec<f64>,
}

impl Workspace {
    pub(crate) fn new(fields: &VectorFieldSet) -> Self {
        let (d, j) = (fields.dim(), fields.len());
        Self {
            dim: d,
            n_fields: j,
            v: vec![0.0; j * d],
            dv: vec![0.0; j * d * d],
            div: vec![0.0; j],
            grad_div: vec![0.0; j * d],
        }
    }

    fn load(&mut self, fields: &VectorFieldSet, x: &[f64]) {
        let d = self.dim;
        for j in 0..self.n_fields {
            self.div[j] = fields.field(j).eval_all(
                x,
                &mut self.v[j * d..(j + 1) * d],
                &mut self.dv[j * d * d..(j + 1) * d * d],
                &mut self.grad_div[j * d..(j + 1) * d],
            );
        }
    }

    /// Davie increment of the state and of the log-Jacobian from `x` over a
    /// step with increments `dz` (length J) and `zz` (J x J, row-major).
    /// The state increment is added to `out`.
    pub(crate) fn germ(&mut self, fields: &VectorFieldSet, x: &[f64], dz: &[f64], zz: &[f64], out: &mut [f64]) -> f64 {
        self.load(fields, x);
        let (d, nj) = (self.dim, self.n_fields);
        let mut logjac = 0.0;
        for j in 0..nj {
            let vj = &self.v[j * d..(j + 1) * d];
            for a in 0..d {
                out[a] += vj[a] * dz[j];
            }
            logjac += self.div[j] * dz[j];
        }
        for i in 0..nj {
            let vi = &self.v[i * d..(i + 1) * d];
            for j in 0..nj {
                let z = zz[i * nj + j];
                if z == 0.0 {
                    continue;
                }
                let dvj = &self.dv[j * d * d..(j + 1) * d * d];
                for a in 0..d {
                    let mut s = 0.0;
                    for b in 0..d {
                        s += dvj[a * d + b] * vi[b];
                    }
                    out[a] += s * z;
                }
                let gd = &self.grad_div[j * d..(j + 1) * d];
                logjac += z * gd.iter().zip(vi).map(|(g, v)| g * v).sum::<f64>();
            }
        }
        logjac
    }
}

/// States of a rough flow on the driver's grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    dim: usize,
    states: Vec<f64>,
}

impl Trajectory {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn last(&self) -> &[f64] {
        self.state(self.grid.n_steps())
    }
}

fn check_driver(fields: &VectorFieldSet, rp: &RoughPath) -> Result<()> {
    ensure!(
        fields.len() == rp.dim(),
        "{} vector fields but a {}-dimensional driver",
        fields.len(),
        rp.dim()
    );
    Ok(())
}

/// Solves `dX = V_j(X) dZ^j`, `X_0 = x0`, on the grid of `rp`.
pub fn solve_rde(x0: &[f64], fields: &VectorFieldSet, rp: &RoughPath) -> Result<Trajectory> {
    check_driver(fields, rp)?;
    let d = fields.dim();
    ensure!(x0.len() == d, "initial state has length {}, expected {d}", x0.len());
    let n = rp.grid().n_steps();
    let mut ws = Workspace::new(fields);
    let mut states = Vec::with_capacity((n + 1) * d);
    states.extend_from_slice(x0);
    let mut x = x0.to_vec();
    let mut next = vec![0.0; d];
    let mut dz = vec![0.0; rp.dim()];
    for k in 0..n {
        rp.step_first(k, &mut dz);
        next.copy_from_slice(&x);
        ws.germ(fields, &x, &dz, rp.step_second(k), &mut next);
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm > BLOWUP_NORM {
            return Err(Error::BlowUp { time: rp.grid().time(k + 1) });
        }
        x.copy_from_slice(&next);
        states.extend_from_slice(&x);
    }
    Ok(Trajectory { grid: *rp.grid(), dim: d, states })
}

/// Germ `V_j(X_s) δZ^j + DV_j V_i(X_s) ℤ^{ij}` along a computed trajectory.
pub struct ControlledGerm<'a> {
    fields: &'a VectorFieldSet,
    traj: &'a Trajectory,
    rp: &'a RoughPath,
}

/// Germ `div V_j(X_s) δZ^j + ∇div V_j · V_i(X_s) ℤ^{ij}` whose sewing is the
/// log-Jacobian of the flow.
pub struct DivergenceGerm<'a> {
    fields: &'a VectorFieldSet,
    traj: &'a Trajectory,
    rp: &'a RoughPath,
}

fn check_trajectory(fields: &VectorFieldSet, traj: &Trajectory, rp: &RoughPath) -> Result<()> {
    check_driver(fields, rp)?;
    ensure!(traj.grid() == rp.grid(), "trajectory and driver grids differ");
    ensure!(traj.dim() == fields.dim(), "trajectory and field dimensions differ");
    Ok(())
}

pub fn controlled_integral_germ<'a>(
    fields: &'a VectorFieldSet,
    traj: &'a Trajectory,
    rp: &'a RoughPath,
) -> Result<ControlledGerm<'a>> {
    check_trajectory(fields, traj, rp)?;
    Ok(ControlledGerm { fields, traj, rp })
}

fn eval_on_grid(
    fields: &VectorFieldSet,
    traj: &Trajectory,
    rp: &RoughPath,
    s: f64,
    t: f64,
    out: &mut [f64],
) -> f64 {
    let grid = rp.grid();
    let i = grid.index_of(s).expect("germ queried off its native grid");
    let j = grid.index_of(t).expect("germ queried off its native grid");
    let inc = rp.increment(i, j).expect("ordered grid indices");
    let mut ws = Workspace::new(fields);
    ws.germ(fields, traj.state(i), &inc.first, &inc.second, out)
}

impl Germ for ControlledGerm<'_> {
    type Value = Vec<f64>;
    fn eval(&self, s: f64, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.fields.dim()];
        eval_on_grid(self.fields, self.traj, self.rp, s, t, &mut out);
        out
    }
    fn order(&self) -> f64 {
        3.0 * self.rp.alpha()
    }
    fn size_order(&self) -> Option<f64> {
        Some(self.rp.alpha())
    }
    fn native_grid(&self) -> Option<&TimeGrid> {
        Some(self.rp.grid())
    }
}

impl Germ for DivergenceGerm<'_> {
    type Value = f64;
    fn eval(&self, s: f64, t: f64) -> f64 {
        let mut scratch = vec![0.0; self.fields.dim()];
        eval_on_grid(self.fields, self.traj, self.rp, s, t, &mut scratch)
    }
    fn order(&self) -> f64 {
        3.0 * self.rp.alpha()
    }
    fn size_order(&self) -> Option<f64> {
        Some(self.rp.alpha())
    }
    fn native_grid(&self) -> Option<&TimeGrid> {
        Some(self.rp.grid())
    }
}

/// Jacobian determinant `|∇φ_{t,0}(x)|` at every grid time, via the rough
/// Liouville formula `exp ∫ div V_j(φ) dZ^j`.
pub fn jacobian_liouville(fields: &VectorFieldSet, traj: &Trajectory, rp: &RoughPath) -> Result<Vec<f64>> {
    check_trajectory(fields, traj, rp)?;
    let germ = DivergenceGerm { fields, traj, rp };
    let sewn = sew(&germ, rp.grid(), &SewOptions::default())?;
    Ok(sewn.values.iter().map(|v| v.exp()).collect())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::flow::fields::{LinearField, TrigField, VectorField};
    use crate::roughpath::{lift_brownian, lift_piecewise_linear, Convention, SampledPath};

    #[test]
    fn linear_equation_is_exponential() {
        // dX = X dZ with a smooth scalar driver: X_T = x0 exp(Z_T - Z_0).
        let grid = TimeGrid::new(1.0, 1024).unwrap();
        let path = SampledPath::from_fn(grid, 1, |t, z| z[0] = (3.0 * t).sin()).unwrap();
        let rp = lift_piecewise_linear(&path).unwrap();
        let fields = VectorFieldSet::new(vec![Arc::new(LinearField::new(vec![1.0], vec![0.0]).unwrap())]).unwrap();
        let traj = solve_rde(&[2.0], &fields, &rp).unwrap();
        let want = 2.0 * 3.0_f64.sin().exp();
        assert!((traj.last()[0] - want).abs() < 1e-5);
    }

    #[test]
    fn blow_up_is_reported() {
        let grid = TimeGrid::new(1.0, 64).unwrap();
        let path = SampledPath::from_fn(grid, 1, |t, z| z[0] = 200.0 * t).unwrap();
        let rp = lift_piecewise_linear(&path).unwrap();
        let fields = VectorFieldSet::new(vec![Arc::new(LinearField::new(vec![1.0], vec![0.0]).unwrap())]).unwrap();
        assert!(matches!(solve_rde(&[1.0], &fields, &rp), Err(Error::BlowUp { .. })));
    }

    #[test]
    fn divergence_free_jacobian_is_one() {
        let grid = TimeGrid::new(1.0, 256).unwrap();
        let rp = lift_brownian(4, grid, 1, Convention::Stratonovich).unwrap();
        let fields = VectorFieldSet::new(vec![Arc::new(TrigField::solenoidal(1.0, 3.0, 0.1).unwrap())]).unwrap();
        let traj = solve_rde(&[0.3, 0.4], &fields, &rp).unwrap();
        let jac = jacobian_liouville(&fields, &traj, &rp).unwrap();
        assert!(jac.iter().all(|j| (j - 1.0).abs() < 1e-12));
    }

    #[test]
    fn shape_mismatches_rejected() {
        let grid = TimeGrid::new(1.0, 8).unwrap();
        let rp = lift_brownian(4, grid, 2, Convention::Ito).unwrap();
        let f: Arc<dyn VectorField> = Arc::new(TrigField::constant(vec![1.0]).unwrap());
        let fields = VectorFieldSet::new(vec![f]).unwrap();
        assert!(solve_rde(&[0.0], &fields, &rp).is_err());
    }
}
