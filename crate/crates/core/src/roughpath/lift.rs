use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{RoughPath, SampledPath, TimeGrid, DEFAULT_ALPHA};
use crate::error::{ensure, Result};

/// Stochastic integration convention for Brownian lifts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    Ito,
    Stratonovich,
}

/// Canonical lift of the piecewise-linear interpolation: each step carries
/// `½ δZ ⊗ δZ`.
pub fn lift_piecewise_linear(path: &SampledPath) -> Result<RoughPath> {
    let d = path.dim();
    let n = path.grid().n_steps();
    let mut steps = Vec::with_capacity(n * d * d);
    let mut dz = vec![0.0; d];
    for k in 0..n {
        for (o, (a, b)) in dz.iter_mut().zip(path.at(k).iter().zip(path.at(k + 1))) {
            *o = b - a;
        }
        for i in 0..d {
            for j in 0..d {
                steps.push(0.5 * dz[i] * dz[j]);
            }
        }
    }
    RoughPath::from_parts(DEFAULT_ALPHA, path.clone(), steps)
}

/// Brownian rough path sampled on `grid` from a ChaCha stream.
///
/// Each step uses the Stratonovich step `½ δB ⊗ δB`; the Itô variant
/// subtracts `½ dt` on the diagonal.
pub fn lift_brownian(seed: u64, grid: TimeGrid, dim: usize, convention: Convention) -> Result<RoughPath> {
    ensure!(grid.n_steps() >= 2, "a Brownian lift needs at least 2 steps");
    ensure!(dim >= 1, "dimension must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.n_steps();
    let sd = grid.dt().sqrt();
    let mut values = vec![0.0; (n + 1) * dim];
    for k in 0..n {
        for a in 0..dim {
            let xi: f64 = StandardNormal.sample(&mut rng);
            values[(k + 1) * dim + a] = values[k * dim + a] + sd * xi;
        }
    }
    let path = SampledPath::new(grid, dim, values)?;
    let mut rp = lift_piecewise_linear(&path)?;
    if convention == Convention::Ito {
        let dt = grid.dt();
        let dd = dim * dim;
        for k in 0..n {
            for a in 0..dim {
                rp.steps[k * dd + a * dim + a] -= 0.5 * dt;
            }
        }
    }
    Ok(rp)
}

/// Lift of the concatenated path `(B, Z)` on a common grid.
///
/// Diagonal blocks are taken from the inputs. The cross integrals are those
/// of the piecewise-linear interpolation, `½ δB ⊗ δZ` per step, so that
/// `∫δB dZ + ∫δZ dB = δB ⊗ δZ` holds exactly.
pub fn joint_lift(b: &RoughPath, z: &RoughPath) -> Result<RoughPath> {
    ensure!(
        b.grid() == z.grid(),
        "joint lift needs a common grid, got {:?} and {:?}",
        b.grid(),
        z.grid()
    );
    let (p, q) = (b.dim(), z.dim());
    let d = p + q;
    let n = b.grid().n_steps();
    let mut values = Vec::with_capacity((n + 1) * d);
    for k in 0..=n {
        values.extend_from_slice(b.path().at(k));
        values.extend_from_slice(z.path().at(k));
    }
    let path = SampledPath::new(*b.grid(), d, values)?;
    let mut steps = vec![0.0; n * d * d];
    let (mut db, mut dz) = (vec![0.0; p], vec![0.0; q]);
    for k in 0..n {
        b.step_first(k, &mut db);
        z.step_first(k, &mut dz);
        let (sb, sz) = (b.step_second(k), z.step_second(k));
        let blk = &mut steps[k * d * d..(k + 1) * d * d];
        for i in 0..p {
            for j in 0..p {
                blk[i * d + j] = sb[i * p + j];
            }
            for j in 0..q {
                blk[i * d + p + j] = 0.5 * db[i] * dz[j];
                blk[(p + j) * d + i] = 0.5 * dz[j] * db[i];
            }
        }
        for i in 0..q {
            for j in 0..q {
                blk[(p + i) * d + p + j] = sz[i * q + j];
            }
        }
    }
    RoughPath::from_parts(b.alpha().min(z.alpha()), path, steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_linear_lift_is_geometric() {
        let p = SampledPath::from_samples(1.0, 2, vec![0.0, 0.0, 1.0, 0.5, 0.2, 2.0, -1.0, 0.3]).unwrap();
        let rp = lift_piecewise_linear(&p).unwrap();
        let inc = rp.increment(0, 3).unwrap();
        let sym = inc.sym();
        for i in 0..2 {
            for j in 0..2 {
                let want = 0.5 * inc.first[i] * inc.first[j];
                assert!((sym[i * 2 + j] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn single_linear_segment_area_vanishes() {
        // Straight line: antisymmetric part is zero.
        let p = SampledPath::from_samples(1.0, 2, vec![0.0, 0.0, 0.5, 1.0, 1.0, 2.0]).unwrap();
        let inc = lift_piecewise_linear(&p).unwrap().increment(0, 2).unwrap();
        assert!((inc.second_at(0, 1) - inc.second_at(1, 0)).abs() < 1e-15);
    }

    #[test]
    fn ito_correction_on_diagonal() {
        let g = TimeGrid::new(1.0, 64).unwrap();
        let s = lift_brownian(5, g, 2, Convention::Stratonovich).unwrap();
        let i = lift_brownian(5, g, 2, Convention::Ito).unwrap();
        let (a, b) = (s.increment(3, 40).unwrap(), i.increment(3, 40).unwrap());
        let h = g.time(40) - g.time(3);
        assert!((a.second_at(0, 0) - b.second_at(0, 0) - 0.5 * h).abs() < 1e-14);
        assert!((a.second_at(0, 1) - b.second_at(0, 1)).abs() < 1e-15);
    }

    #[test]
    fn brownian_lift_is_deterministic() {
        let g = TimeGrid::new(1.0, 32).unwrap();
        assert_eq!(
            lift_brownian(9, g, 3, Convention::Ito).unwrap(),
            lift_brownian(9, g, 3, Convention::Ito).unwrap()
        );
        assert!(lift_brownian(9, TimeGrid::new(1.0, 1).unwrap(), 1, Convention::Ito).is_err());
    }

    #[test]
    fn joint_lift_integration_by_parts() {
        let g = TimeGrid::new(1.0, 50).unwrap();
        let b = lift_brownian(1, g, 1, Convention::Stratonovich).unwrap();
        let z = lift_brownian(2, g, 1, Convention::Stratonovich).unwrap();
        let j = joint_lift(&b, &z).unwrap();
        let inc = j.increment(7, 41).unwrap();
        let lhs = inc.second_at(0, 1) + inc.second_at(1, 0);
        assert!((lhs - inc.first[0] * inc.first[1]).abs() < 1e-13);
    }
}
