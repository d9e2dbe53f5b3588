use super::{RoughPath, SampledPath, TimeGrid};
use crate::error::{ensure, Result};
use crate::value::LinearValue;

/// A two-parameter quantity `g_{st}` evaluated at grid index pairs.
pub trait TwoParamField {
    type Value: LinearValue;
    fn grid(&self) -> &TimeGrid;
    fn value(&self, i: usize, j: usize) -> Self::Value;
}

/// `δX_{st} = X_t - X_s` of a sampled path.
pub struct PathIncrements<'a>(pub &'a SampledPath);

impl TwoParamField for PathIncrements<'_> {
    type Value = Vec<f64>;
    fn grid(&self) -> &TimeGrid {
        self.0.grid()
    }
    fn value(&self, i: usize, j: usize) -> Vec<f64> {
        self.0.increment(i, j)
    }
}

/// Second level `ℤ_{st}` of a rough path, flattened row-major.
pub struct SecondLevel<'a>(pub &'a RoughPath);

impl TwoParamField for SecondLevel<'_> {
    type Value = Vec<f64>;
    fn grid(&self) -> &TimeGrid {
        self.0.grid()
    }
    fn value(&self, i: usize, j: usize) -> Vec<f64> {
        self.0.increment(i, j).expect("grid indices in range").second
    }
}

/// Adapter for closures `(s, t) -> value` on grid times.
pub struct FnField<F> {
    pub grid: TimeGrid,
    pub f: F,
}

impl<V: LinearValue, F: Fn(f64, f64) -> V> TwoParamField for FnField<F> {
    type Value = V;
    fn grid(&self) -> &TimeGrid {
        &self.grid
    }
    fn value(&self, i: usize, j: usize) -> V {
        (self.f)(self.grid.time(i), self.grid.time(j))
    }
}

/// `δg_{sθt} = g_{st} - g_{θt} - g_{sθ}`.
pub fn second_increment<G: TwoParamField>(g: &G, s: usize, theta: usize, t: usize) -> Result<G::Value> {
    let n = g.grid().n_steps();
    ensure!(
        s <= theta && theta <= t && t <= n,
        "need s <= θ <= t <= {n}, got ({s}, {theta}, {t})"
    );
    let mut out = g.value(s, t);
    out.axpy(-1.0, &g.value(theta, t));
    out.axpy(-1.0, &g.value(s, theta));
    Ok(out)
}

fn check_window(grid: &TimeGrid, exponent: f64, window: f64) -> Result<usize> {
    ensure!(exponent > 0.0 && exponent.is_finite(), "exponent must be positive");
    ensure!(
        window > 0.0 && window <= grid.horizon() * (1.0 + 1e-12),
        "window {window} must lie in (0, {}]",
        grid.horizon()
    );
    let lags = ((window / grid.dt()) * (1.0 + 1e-12)).floor() as usize;
    ensure!(lags >= 1, "window {window} is shorter than one grid step");
    Ok(lags.min(grid.n_steps()))
}

/// `sup |g_{st}| / |t-s|^a` over grid pairs with `0 < t-s <= window`.
pub fn hoelder_seminorm<G: TwoParamField>(g: &G, exponent: f64, window: f64) -> Result<f64> {
    let grid = *g.grid();
    let lags = check_window(&grid, exponent, window)?;
    let mut sup = 0.0_f64;
    for m in 1..=lags {
        let h = (m as f64 * grid.dt()).powf(exponent);
        for i in 0..=grid.n_steps() - m {
            sup = sup.max(g.value(i, i + m).norm() / h);
        }
    }
    Ok(sup)
}

/// Allocation-free specialisation of [`hoelder_seminorm`] for path increments.
pub fn path_hoelder_seminorm(path: &SampledPath, exponent: f64, window: f64) -> Result<f64> {
    let grid = *path.grid();
    let lags = check_window(&grid, exponent, window)?;
    let mut sup = 0.0_f64;
    for m in 1..=lags {
        let h = (m as f64 * grid.dt()).powf(exponent);
        for i in 0..=grid.n_steps() - m {
            let n2: f64 = path.at(i + m).iter().zip(path.at(i)).map(|(b, a)| (b - a) * (b - a)).sum();
            sup = sup.max(n2.sqrt() / h);
        }
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seminorm_of_linear_path() {
        let g = TimeGrid::new(1.0, 10).unwrap();
        let p = SampledPath::from_fn(g, 1, |t, x| x[0] = 3.0 * t).unwrap();
        // |3h| / h^{1/2} is maximal at the window length.
        let v = path_hoelder_seminorm(&p, 0.5, 0.4).unwrap();
        assert!((v - 3.0 * 0.4_f64.sqrt()).abs() < 1e-12);
        let generic = hoelder_seminorm(&PathIncrements(&p), 0.5, 0.4).unwrap();
        assert!((v - generic).abs() < 1e-14);
        assert!(path_hoelder_seminorm(&p, 0.5, 2.0).is_err());
        assert!(path_hoelder_seminorm(&p, 0.0, 0.5).is_err());
    }

    #[test]
    fn second_increment_of_additive_field_vanishes() {
        let g = TimeGrid::new(2.0, 8).unwrap();
        let f = FnField { grid: g, f: |s: f64, t: f64| t.exp() - s.exp() };
        assert!(second_increment(&f, 1, 4, 7).unwrap().abs() < 1e-14);
        let q = FnField { grid: g, f: |s: f64, t: f64| (t - s).powi(2) };
        // (t-s)^2 - (t-θ)^2 - (θ-s)^2 = 2(θ-s)(t-θ)
        let want = 2.0 * (g.time(4) - g.time(1)) * (g.time(7) - g.time(4));
        assert!((second_increment(&q, 1, 4, 7).unwrap() - want).abs() < 1e-14);
    }
}
