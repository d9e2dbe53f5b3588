//! Discrete rough paths on uniform time grids.
//!
//! A [`RoughPath`] stores the first level at every grid node and the second
//! level of each elementary step. Increments over longer intervals are
//! assembled with Chen's relation, so the algebraic identity holds up to
//! rounding by construction.

mod holder;
mod io;
mod lift;

pub use holder::{
    hoelder_seminorm, path_hoelder_seminorm, second_increment, FnField, PathIncrements,
    SecondLevel, TwoParamField,
};
pub use lift::{joint_lift, lift_brownian, lift_piecewise_linear, Convention};

use crate::error::{ensure, invalid, Result};

/// Default Hölder exponent attached to lifted paths.
pub const DEFAULT_ALPHA: f64 = 0.45;

/// Uniform partition of `[0, horizon]` into `n_steps` intervals.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        ensure!(
            horizon.is_finite() && horizon > 0.0,
            "horizon must be positive and finite, got {horizon}"
        );
        ensure!(n_steps >= 1, "a time grid needs at least one step");
        Ok(Self { horizon, n_steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.horizon
        } else {
            i as f64 * self.horizon / self.n_steps as f64
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|i| self.time(i)).collect()
    }

    /// Index of a grid time; times off the grid are rejected.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let r = t / self.dt();
        let i = r.round();
        if !r.is_finite() || i < 0.0 || i > self.n_steps as f64 || (r - i).abs() > 1e-9 {
            return Err(invalid!("time {t} is not a node of {self:?}"));
        }
        Ok(i as usize)
    }

    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        ensure!(
            factor >= 1 && self.n_steps.is_multiple_of(factor),
            "cannot coarsen {} steps by {factor}",
            self.n_steps
        );
        Self::new(self.horizon, self.n_steps / factor)
    }

    pub fn refine(&self, factor: usize) -> Result<Self> {
        ensure!(factor >= 1, "refinement factor must be positive");
        Self::new(self.horizon, self.n_steps * factor)
    }

    /// Whether `fine` refines `self` by an integer factor.
    pub fn refinement_factor(&self, fine: &TimeGrid) -> Option<usize> {
        if (self.horizon - fine.horizon).abs() > 1e-12 * self.horizon
            || !fine.n_steps.is_multiple_of(self.n_steps)
        {
            return None;
        }
        Some(fine.n_steps / self.n_steps)
    }
}

/// Values of an `R^dim` valued path at the nodes of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledPath {
    grid: TimeGrid,
    dim: usize,
    values: Vec<f64>,
}

impl SampledPath {
    /// `values` holds `n_steps + 1` rows of `dim` entries.
    pub fn new(grid: TimeGrid, dim: usize, values: Vec<f64>) -> Result<Self> {
        ensure!(dim >= 1, "path dimension must be positive");
        ensure!(
            values.len() == (grid.n_steps() + 1) * dim,
            "expected {} values, got {}",
            (grid.n_steps() + 1) * dim,
            values.len()
        );
        ensure!(values.iter().all(|v| v.is_finite()), "path values must be finite");
        Ok(Self { grid, dim, values })
    }

    /// Samples on a uniform grid over `[0, horizon]`; needs at least two rows.
    pub fn from_samples(horizon: f64, dim: usize, values: Vec<f64>) -> Result<Self> {
        ensure!(dim >= 1, "path dimension must be positive");
        ensure!(
            values.len().is_multiple_of(dim) && values.len() / dim >= 2,
            "a path needs at least 2 samples of dimension {dim}"
        );
        let grid = TimeGrid::new(horizon, values.len() / dim - 1)?;
        Self::new(grid, dim, values)
    }

    pub fn from_fn(grid: TimeGrid, dim: usize, mut f: impl FnMut(f64, &mut [f64])) -> Result<Self> {
        let mut values = vec![0.0; (grid.n_steps() + 1) * dim];
        for (i, row) in values.chunks_mut(dim).enumerate() {
            f(grid.time(i), row);
        }
        Self::new(grid, dim, values)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn increment(&self, i: usize, j: usize) -> Vec<f64> {
        self.at(j).iter().zip(self.at(i)).map(|(b, a)| b - a).collect()
    }

    /// Keeps every `factor`-th node.
    pub fn subsample(&self, factor: usize) -> Result<Self> {
        let grid = self.grid.coarsen(factor)?;
        let values = (0..=grid.n_steps())
            .flat_map(|i| self.at(i * factor).to_vec())
            .collect();
        Self::new(grid, self.dim, values)
    }

    /// Linear interpolation onto a grid `factor` times finer.
    pub fn refine_linear(&self, factor: usize) -> Result<Self> {
        let grid = self.grid.refine(factor)?;
        let mut values = Vec::with_capacity((grid.n_steps() + 1) * self.dim);
        for k in 0..self.grid.n_steps() {
            let (a, b) = (self.at(k), self.at(k + 1));
            for r in 0..factor {
                let w = r as f64 / factor as f64;
                values.extend(a.iter().zip(b).map(|(x, y)| x + w * (y - x)));
            }
        }
        values.extend_from_slice(self.at(self.grid.n_steps()));
        Self::new(grid, self.dim, values)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            dim: self.dim,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }
}

/// First and second level of a rough path over one interval.
#[derive(Clone, Debug, PartialEq)]
pub struct Increment {
    pub first: Vec<f64>,
    /// Row-major `dim x dim`, entry `(i, j)` approximates `∫ δZ^i dZ^j`.
    pub second: Vec<f64>,
}

impl Increment {
    pub fn dim(&self) -> usize {
        self.first.len()
    }

    pub fn second_at(&self, i: usize, j: usize) -> f64 {
        self.second[i * self.dim() + j]
    }

    /// Symmetric part of the second level.
    pub fn sym(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = 0.5 * (self.second[i * d + j] + self.second[j * d + i]);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoughPath {
    alpha: f64,
    path: SampledPath,
    /// Second level of each elementary step, `n_steps` blocks of `dim * dim`.
    steps: Vec<f64>,
}

impl RoughPath {
    pub fn from_parts(alpha: f64, path: SampledPath, steps: Vec<f64>) -> Result<Self> {
        check_alpha(alpha)?;
        let d = path.dim();
        ensure!(
            steps.len() == path.grid().n_steps() * d * d,
            "expected {} second-level entries, got {}",
            path.grid().n_steps() * d * d,
            steps.len()
        );
        ensure!(steps.iter().all(|v| v.is_finite()), "second level must be finite");
        Ok(Self { alpha, path, steps })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        self.alpha = alpha;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.path.dim()
    }

    pub fn grid(&self) -> &TimeGrid {
        self.path.grid()
    }

    pub fn path(&self) -> &SampledPath {
        &self.path
    }

    /// Step increment `Z_{k+1} - Z_k` written into `out`.
    pub fn step_first(&self, k: usize, out: &mut [f64]) {
        let (a, b) = (self.path.at(k), self.path.at(k + 1));
        for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
            *o = y - x;
        }
    }

    /// Second level over `[t_k, t_{k+1}]`.
    pub fn step_second(&self, k: usize) -> &[f64] {
        let dd = self.dim() * self.dim();
        &self.steps[k * dd..(k + 1) * dd]
    }

    /// Increment between grid indices `i <= j`, assembled by Chen's relation.
    pub fn increment(&self, i: usize, j: usize) -> Result<Increment> {
        let n = self.grid().n_steps();
        ensure!(i <= j && j <= n, "invalid index pair ({i}, {j}) on {n} steps");
        let d = self.dim();
        let mut second = vec![0.0; d * d];
        let mut step = vec![0.0; d];
        let base = self.path.at(i);
        for k in i..j {
            self.step_first(k, &mut step);
            let zk = self.path.at(k);
            for a in 0..d {
                let lag = zk[a] - base[a];
                for b in 0..d {
                    second[a * d + b] += lag * step[b];
                }
            }
            for (s, z) in second.iter_mut().zip(self.step_second(k)) {
                *s += z;
            }
        }
        Ok(Increment { first: self.path.increment(i, j), second })
    }

    /// Increment over `[s, t]`; both times must be grid nodes.
    pub fn query(&self, s: f64, t: f64) -> Result<Increment> {
        let (i, j) = (self.grid().index_of(s)?, self.grid().index_of(t)?);
        ensure!(i <= j, "query needs s <= t, got ({s}, {t})");
        self.increment(i, j)
    }

    /// Same path seen on a grid `factor` times coarser.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let path = self.path.subsample(factor)?;
        let d = self.dim();
        let mut steps = Vec::with_capacity(path.grid().n_steps() * d * d);
        for k in 0..path.grid().n_steps() {
            steps.extend(self.increment(k * factor, (k + 1) * factor)?.second);
        }
        Self::from_parts(self.alpha, path, steps)
    }

    /// Dilation `(Z, ℤ) -> (cZ, c²ℤ)`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            alpha: self.alpha,
            path: self.path.scaled(c),
            steps: self.steps.iter().map(|v| c * c * v).collect(),
        }
    }

    /// Restriction to `[t_start, T]`, re-based so that the new grid starts at 0.
    pub fn tail(&self, start: usize) -> Result<Self> {
        let n = self.grid().n_steps();
        ensure!(start < n, "tail start {start} must be below {n}");
        let grid = TimeGrid::new(self.grid().horizon() - self.grid().time(start), n - start)?;
        let d = self.dim();
        let path = SampledPath::new(grid, d, self.path.values()[start * d..].to_vec())?;
        Self::from_parts(self.alpha, path, self.steps[start * d * d..].to_vec())
    }
}

/// Chen defect `δℤ_{sθt} - δZ_{sθ} ⊗ δZ_{θt}` at grid indices `s <= θ <= t`.
pub fn chen_defect(rp: &RoughPath, s: usize, theta: usize, t: usize) -> Result<Vec<f64>> {
    ensure!(s <= theta && theta <= t, "need s <= θ <= t, got ({s}, {theta}, {t})");
    let full = rp.increment(s, t)?;
    let left = rp.increment(s, theta)?;
    let right = rp.increment(theta, t)?;
    let d = rp.dim();
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            let k = i * d + j;
            out[k] = full.second[k] - left.second[k] - right.second[k]
                - left.first[i] * right.first[j];
        }
    }
    Ok(out)
}

fn check_alpha(alpha: f64) -> Result<()> {
    ensure!(
        alpha > 1.0 / 3.0 && alpha <= 0.5,
        "Hölder exponent must lie in (1/3, 1/2], got {alpha}"
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_index_rejects_off_grid_times() {
        let g = TimeGrid::new(1.0, 8).unwrap();
        assert_eq!(g.index_of(0.375).unwrap(), 3);
        assert_eq!(g.index_of(1.0).unwrap(), 8);
        assert!(g.index_of(0.3).is_err());
        assert!(g.index_of(1.5).is_err());
        assert!(g.index_of(-0.125).is_err());
    }

    #[test]
    fn refine_then_subsample_round_trips() {
        let g = TimeGrid::new(2.0, 4).unwrap();
        let p = SampledPath::from_fn(g, 2, |t, x| {
            x[0] = t * t;
            x[1] = t.sin();
        })
        .unwrap();
        let back = p.refine_linear(4).unwrap().subsample(4).unwrap();
        for (a, b) in back.values().iter().zip(p.values()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn tail_shifts_time_origin() {
        let rp = lift_brownian(3, TimeGrid::new(1.0, 16).unwrap(), 2, Convention::Ito).unwrap();
        let tail = rp.tail(4).unwrap();
        assert!((tail.grid().horizon() - 0.75).abs() < 1e-15);
        let a = rp.increment(6, 13).unwrap();
        let b = tail.increment(2, 9).unwrap();
        for (x, y) in a.second.iter().zip(&b.second) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn alpha_outside_range_rejected() {
        let rp = lift_brownian(1, TimeGrid::new(1.0, 4).unwrap(), 1, Convention::Ito).unwrap();
        assert!(rp.clone().with_alpha(0.3).is_err());
        assert!(rp.with_alpha(0.5).is_ok());
    }
}
