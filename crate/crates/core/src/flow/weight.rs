//! Monte Carlo Feynman-Kac weights.
//!
//! The weight `m` solves the backward equation
//! `∂_t m = -Δm + div(β_j m) Ż^j`, `m_T = 1`. It is represented through the
//! flow of `dX = √2 dB - β_j(X) dZ^j` started at `(t, x)`, whose Jacobian
//! exponent `-∫ div β_j(X) dZ^j` is sewn alongside the state.
//!
//! Every sample draws one Brownian path on the driver grid and reuses it for
//! all spatial points and start times. Samples are processed in fixed-size
//! chunks in parallel and reduced sequentially in sample order, so results
//! do not depend on the number of worker threads.

use std::f64::consts::SQRT_2;
use std::io::Write;

use rayon::prelude::*;

use super::fields::VectorFieldSet;
use super::hermite::{hermite_functions, MAX_BASIS};
use super::rde::{Workspace, BLOWUP_NORM};
use crate::error::{ensure, Error, Result};
use crate::roughpath::{joint_lift, lift_brownian, Convention, RoughPath};

/// Samples handed to the worker pool at a time.
const CHUNK: usize = 64;

/// Independent per-sample seed derived from a run seed (SplitMix64 mix).
pub fn sample_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Running mean and variance (Welford), one slot per estimated entry.
#[derive(Clone, Debug)]
struct Accumulator {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Accumulator {
    fn new(len: usize) -> Self {
        Self { n: 0, mean: vec![0.0; len], m2: vec![0.0; len] }
    }

    fn push(&mut self, x: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let d = v - *m;
            *m += d / n;
            *s += d * (v - *m);
        }
    }

    fn std_errors(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.m2.iter().map(|s| (s / (n - 1.0) / n).sqrt()).collect()
    }
}

/// Monte Carlo estimate of a scalar field at one time.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct WeightField {
    pub dim: usize,
    /// Evaluation points, `dim` coordinates each.
    pub points: Vec<f64>,
    pub time: f64,
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
}

impl WeightField {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// Writes the `x m stderr n_samples seed` table (first coordinate only
    /// for `x` in one dimension; `x,y` columns in two).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# time: {:e}", self.time)?;
        if self.dim == 1 {
            writeln!(w, "x,m,stderr,n_samples,seed")?;
        } else {
            writeln!(w, "x,y,m,stderr,n_samples,seed")?;
        }
        for i in 0..self.len() {
            let coords: Vec<String> = self.point(i).iter().map(|v| format!("{v:e}")).collect();
            writeln!(
                w,
                "{},{:e},{:e},{},{}",
                coords.join(","),
                self.mean[i],
                self.std_error[i],
                self.n_samples,
                self.seed
            )?;
        }
        Ok(())
    }
}

/// Inputs shared by all weight estimators.
struct Problem<'a> {
    beta: &'a VectorFieldSet,
    neg_z: RoughPath,
    fields: VectorFieldSet,
}

impl<'a> Problem<'a> {
    fn new(beta: &'a VectorFieldSet, rp: &RoughPath, points: &[f64], n_samples: usize) -> Result<Self> {
        ensure!(
            beta.len() == rp.dim(),
            "{} transport fields but a {}-dimensional driver",
            beta.len(),
            rp.dim()
        );
        let d = beta.dim();
        ensure!(
            !points.is_empty() && points.len().is_multiple_of(d),
            "points must hold a positive multiple of {d} coordinates"
        );
        ensure!(points.iter().all(|p| p.is_finite()), "points must be finite");
        ensure!(n_samples >= 2, "need at least 2 Monte Carlo samples");
        ensure!(rp.grid().n_steps() >= 2, "driver grid needs at least 2 steps");
        let fields = VectorFieldSet::coordinate(d, 1.0)?.concat(beta)?;
        Ok(Self { beta, neg_z: rp.scaled(-1.0), fields })
    }

    fn driver(&self, seed: u64, index: u64) -> Result<RoughPath> {
        let b = lift_brownian(sample_seed(seed, index), *self.neg_z.grid(), self.beta.dim(), Convention::Stratonovich)?;
        joint_lift(&b.scaled(SQRT_2), &self.neg_z)
    }

    /// Flows every point from grid index `start` to the horizon; writes the
    /// log-weights and end positions.
    fn flow(&self, joint: &RoughPath, start: usize, points: &[f64], logw: &mut [f64], ends: &mut [f64]) -> Result<()> {
        let d = self.beta.dim();
        let n = joint.grid().n_steps();
        let mut ws = Workspace::new(&self.fields);
        let mut dz = vec![0.0; joint.dim()];
        let mut next = vec![0.0; d];
        ends.copy_from_slice(points);
        logw.fill(0.0);
        for k in start..n {
            joint.step_first(k, &mut dz);
            let zz = joint.step_second(k);
            for (x, lw) in ends.chunks_mut(d).zip(logw.iter_mut()) {
                next.copy_from_slice(x);
                *lw += ws.germ(&self.fields, x, &dz, zz, &mut next);
                if !next.iter().all(|v| v.abs() < BLOWUP_NORM) {
                    return Err(Error::BlowUp { time: joint.grid().time(k + 1) });
                }
                x.copy_from_slice(&next);
            }
        }
        Ok(())
    }
}

/// Runs `per_sample` for every sample in parallel chunks and feeds the
/// results to `reduce` in sample order.
fn run_samples<T: Send>(
    n_samples: usize,
    per_sample: impl Fn(u64) -> Result<T> + Sync,
    mut reduce: impl FnMut(T),
) -> Result<()> {
    let mut start = 0;
    while start < n_samples {
        let end = (start + CHUNK).min(n_samples);
        let chunk: Vec<Result<T>> = (start..end).into_par_iter().map(|i| per_sample(i as u64)).collect();
        for r in chunk {
            reduce(r?);
        }
        start = end;
    }
    Ok(())
}

fn grid_index(rp: &RoughPath, t: f64) -> Result<usize> {
    rp.grid().index_of(t)
}

/// Estimates `E[exp(s·D)]` at the given start indices for each sign `s`.
fn weight_series_signed(
    points: &[f64],
    starts: &[usize],
    beta: &VectorFieldSet,
    rp: &RoughPath,
    n_samples: usize,
    seed: u64,
    signs: &[f64],
) -> Result<Vec<Vec<WeightField>>> {
    let problem = Problem::new(beta, rp, points, n_samples)?;
    let n = rp.grid().n_steps();
    ensure!(starts.iter().all(|&s| s <= n), "start index beyond the horizon");
    let d = beta.dim();
    let np = points.len() / d;
    let slots = signs.len() * starts.len() * np;
    let mut acc = Accumulator::new(slots);
    run_samples(
        n_samples,
        |i| {
            let joint = problem.driver(seed, i)?;
            let mut out = vec![0.0; slots];
            let mut logw = vec![0.0; np];
            let mut ends = vec![0.0; points.len()];
            for (r, &start) in starts.iter().enumerate() {
                problem.flow(&joint, start, points, &mut logw, &mut ends)?;
                for (si, s) in signs.iter().enumerate() {
                    let base = (si * starts.len() + r) * np;
                    for (o, lw) in out[base..base + np].iter_mut().zip(&logw) {
                        *o = (s * lw).exp();
                    }
                }
            }
            Ok(out)
        },
        |v| acc.push(&v),
    )?;
    let se = acc.std_errors();
    Ok(signs
        .iter()
        .enumerate()
        .map(|(si, _)| {
            starts
                .iter()
                .enumerate()
                .map(|(r, &start)| {
                    let base = (si * starts.len() + r) * np;
                    WeightField {
                        dim: d,
                        points: points.to_vec(),
                        time: rp.grid().time(start),
                        mean: acc.mean[base..base + np].to_vec(),
                        std_error: se[base..base + np].to_vec(),
                        n_samples,
                        seed,
                    }
                })
                .collect()
        })
        .collect())
}

/// Weight `m_t` at the given points; `t` must be a node of the driver grid.
pub fn feynman_kac_weight(
    points: &[f64],
    t: f64,
    beta: &VectorFieldSet,
    rp: &RoughPath,
    n_samples: usize,
    seed: u64,
) -> Result<WeightField> {
    let start = grid_index(rp, t)?;
    let mut out = weight_series_signed(points, &[start], beta, rp, n_samples, seed, &[1.0])?;
    Ok(out.remove(0).remove(0))
}

/// Weights `m_{t_r}` for several start indices on common samples.
pub fn feynman_kac_weight_series(
    points: &[f64],
    starts: &[usize],
    beta: &VectorFieldSet,
    rp: &RoughPath,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<WeightField>> {
    Ok(weight_series_signed(points, starts, beta, rp, n_samples, seed, &[1.0])?.remove(0))
}

/// `m_t` together with its dual `m̃_t` (opposite sign in the exponent),
/// computed on the same samples.
pub fn feynman_kac_pair(
    points: &[f64],
    t: f64,
    beta: &VectorFieldSet,
    rp: &RoughPath,
    n_samples: usize,
    seed: u64,
) -> Result<(WeightField, WeightField)> {
    let start = grid_index(rp, t)?;
    let mut out = weight_series_signed(points, &[start], beta, rp, n_samples, seed, &[1.0, -1.0])?;
    let dual = out.remove(1).remove(0);
    Ok((out.remove(0).remove(0), dual))
}

/// `(inf, sup)` of the estimates; a nonpositive or non-finite entry is a
/// violation naming the offending point.
pub fn weight_bounds(w: &WeightField) -> Result<(f64, f64)> {
    ensure!(!w.is_empty(), "empty weight field");
    let mut lo = f64::INFINITY;
    let mut hi = 0.0_f64;
    for (i, &m) in w.mean.iter().enumerate() {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::Violation(format!(
                "weight estimate {m} at point {:?} (index {i}) is not positive and finite",
                w.point(i)
            )));
        }
        lo = lo.min(m);
        hi = hi.max(m);
    }
    Ok((lo, hi))
}

/// Monte Carlo estimate of `Mᴺ_t(x, y)` on a product grid (`d = 1`).
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct TensorWeight {
    pub basis: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub time: f64,
    /// Row-major `x.len() x y.len()`.
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
}

impl TensorWeight {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.mean[i * self.y.len() + j]
    }
}

fn check_tensor(beta: &VectorFieldSet, bases: &[usize]) -> Result<usize> {
    ensure!(beta.dim() == 1, "tensor weights are implemented for d = 1 only");
    ensure!(!bases.is_empty(), "need at least one basis size");
    let nmax = *bases.iter().max().expect("non-empty");
    ensure!(
        bases.iter().all(|&n| (1..=MAX_BASIS).contains(&n)),
        "basis sizes must lie in 1..={MAX_BASIS}, got {bases:?}"
    );
    Ok(nmax)
}

/// Hermite values at the flowed points, scaled by the point weight.
fn weighted_basis(ends: &[f64], logw: &[f64], nmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; ends.len() * nmax];
    for ((row, x), lw) in out.chunks_mut(nmax).zip(ends).zip(logw) {
        hermite_functions(*x, row);
        let w = lw.exp();
        row.iter_mut().for_each(|v| *v *= w);
    }
    out
}

/// `Mᴺ_t` for each basis size in `bases` and each start index, on common
/// samples; indexed `[start][basis]`.
pub fn tensor_weight_series(
    bases: &[usize],
    x: &[f64],
    y: &[f64],
    starts: &[usize],
    beta: &VectorFieldSet,
    rp: &RoughPath,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<Vec<TensorWeight>>> {
    let nmax = check_tensor(beta, bases)?;
    let problem = Problem::new(beta, rp, x, n_samples)?;
    ensure!(!y.is_empty() && y.iter().all(|v| v.is_finite()), "y points must be finite and non-empty");
    let n = rp.grid().n_steps();
    ensure!(starts.iter().all(|&s| s <= n), "start index beyond the horizon");
    let (nx, ny) = (x.len(), y.len());
    let block = nx * ny;
    let slots = starts.len() * bases.len() * block;
    let mut acc = Accumulator::new(slots);
    let mut sorted: Vec<(usize, usize)> = bases.iter().copied().enumerate().collect();
    sorted.sort_by_key(|p| p.1);
    run_samples(
        n_samples,
        |i| {
            let joint = problem.driver(seed, i)?;
            let mut out = vec![0.0; slots];
            let (mut lx, mut ex) = (vec![0.0; nx], vec![0.0; nx]);
            let (mut ly, mut ey) = (vec![0.0; ny], vec![0.0; ny]);
            for (r, &start) in starts.iter().enumerate() {
                problem.flow(&joint, start, x, &mut lx, &mut ex)?;
                problem.flow(&joint, start, y, &mut ly, &mut ey)?;
                let hx = weighted_basis(&ex, &lx, nmax);
                let hy = weighted_basis(&ey, &ly, nmax);
                for a in 0..nx {
                    for b in 0..ny {
                        let (ra, rb) = (&hx[a * nmax..(a + 1) * nmax], &hy[b * nmax..(b + 1) * nmax]);
                        let mut partial = 0.0;
                        let mut k = 0;
                        for &(bi, nb) in &sorted {
                            while k < nb {
                                partial += ra[k] * rb[k];
                                k += 1;
                            }
                            out[(r * bases.len() + bi) * block + a * ny + b] = partial;
                        }
                    }
                }
            }
            Ok(out)
        },
        |v| acc.push(&v),
    )?;
    let se = acc.std_errors();
    Ok(starts
        .iter()
        .enumerate()
        .map(|(r, &start)| {
            bases
                .iter()
                .enumerate()
                .map(|(bi, &nb)| {
                    let base = (r * bases.len() + bi) * block;
                    TensorWeight {
                        basis: nb,
                        x: x.to_vec(),
                        y: y.to_vec(),
                        time: rp.grid().time(start),
                        mean: acc.mean[base..base + block].to_vec(),
                        std_error: se[base..base + block].to_vec(),
                        n_samples,
                        seed,
                    }
                })
                .collect()
        })
        .collect())
}

/// `Mᴺ_t(x, y)` for one basis size; `t` must be a driver grid node.
#[allow(clippy::too_many_arguments)]
pub fn tensor_weight(
    basis: usize,
    x: &[f64],
    y: &[f64],
    t: f64,
    beta: &VectorFieldSet,
    rp: &RoughPath,
    n_samples: usize,
    seed: u64,
) -> Result<TensorWeight> {
    let start = grid_index(rp, t)?;
    let mut out = tensor_weight_series(&[basis], x, y, &[start], beta, rp, n_samples, seed)?;
    Ok(out.remove(0).remove(0))
}

/// `∬ f(x) f(y) Mᴺ_t` against `(f², m_t)` on shared samples.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct PairingEstimate {
    pub basis: usize,
    pub tensor: f64,
    pub weighted: f64,
    /// Mean and standard error of `tensor - weighted`, sample by sample.
    pub difference: f64,
    pub difference_se: f64,
}

/// Tests `f` (values at the points `x`, quadrature weight `h`) against both
/// weights for each basis size.
#[allow(clippy::too_many_arguments)]
pub fn tensor_pairing(
    f: &[f64],
    x: &[f64],
    h: f64,
    bases: &[usize],
    t: f64,
    beta: &VectorFieldSet,
    rp: &RoughPath,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<PairingEstimate>> {
    let nmax = check_tensor(beta, bases)?;
    ensure!(f.len() == x.len(), "f and x lengths differ");
    let problem = Problem::new(beta, rp, x, n_samples)?;
    let start = grid_index(rp, t)?;
    let nb = bases.len();
    // Per basis: tensor value, then difference; final slot: weighted value.
    let mut acc = Accumulator::new(2 * nb + 1);
    run_samples(
        n_samples,
        |i| {
            let joint = problem.driver(seed, i)?;
            let (mut lw, mut ends) = (vec![0.0; x.len()], vec![0.0; x.len()]);
            problem.flow(&joint, start, x, &mut lw, &mut ends)?;
            let hb = weighted_basis(&ends, &lw, nmax);
            let mut proj = vec![0.0; nmax];
            for (a, fa) in f.iter().enumerate() {
                for k in 0..nmax {
                    proj[k] += fa * hb[a * nmax + k] * h;
                }
            }
            let weighted: f64 = f.iter().zip(&lw).map(|(fa, l)| fa * fa * l.exp() * h).sum();
            let mut out = vec![0.0; 2 * nb + 1];
            for (bi, &n) in bases.iter().enumerate() {
                let q: f64 = proj[..n].iter().map(|p| p * p).sum();
                out[bi] = q;
                out[nb + bi] = q - weighted;
            }
            out[2 * nb] = weighted;
            Ok(out)
        },
        |v| acc.push(&v),
    )?;
    let se = acc.std_errors();
    Ok(bases
        .iter()
        .enumerate()
        .map(|(bi, &n)| PairingEstimate {
            basis: n,
            tensor: acc.mean[bi],
            weighted: acc.mean[2 * nb],
            difference: acc.mean[nb + bi],
            difference_se: se[nb + bi],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::flow::fields::{LinearField, TrigField, VectorField};
    use crate::roughpath::{lift_piecewise_linear, SampledPath, TimeGrid};

    fn sine_beta(a: f64) -> VectorFieldSet {
        let f: Arc<dyn VectorField> = Arc::new(TrigField::sine(1, 0, a, 2.0 * std::f64::consts::PI, 0.0, vec![1.0]).unwrap());
        VectorFieldSet::new(vec![f]).unwrap()
    }

    #[test]
    fn terminal_weight_is_one() {
        let rp = lift_brownian(1, TimeGrid::new(1.0, 16).unwrap(), 1, Convention::Ito).unwrap();
        let w = feynman_kac_weight(&[0.0, 1.0], 1.0, &sine_beta(0.5), &rp, 8, 3).unwrap();
        assert!(w.mean.iter().all(|m| *m == 1.0));
    }

    #[test]
    fn linear_field_has_closed_form() {
        // β(x) = x, Z_t = t: m_t = exp(-(T - t)) for every x.
        let grid = TimeGrid::new(1.0, 32).unwrap();
        let path = SampledPath::from_fn(grid, 1, |t, z| z[0] = t).unwrap();
        let rp = lift_piecewise_linear(&path).unwrap();
        let f: Arc<dyn VectorField> = Arc::new(LinearField::new(vec![1.0], vec![0.0]).unwrap());
        let beta = VectorFieldSet::new(vec![f]).unwrap();
        let w = feynman_kac_weight(&[0.3, -2.0], 0.25, &beta, &rp, 4, 0).unwrap();
        for m in &w.mean {
            assert!((m - (-0.75_f64).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn nonpositive_weight_is_named() {
        let w = WeightField {
            dim: 1,
            points: vec![0.0, 0.5],
            time: 0.0,
            mean: vec![1.0, 0.0],
            std_error: vec![0.0, 0.0],
            n_samples: 2,
            seed: 0,
        };
        let err = weight_bounds(&w).unwrap_err().to_string();
        assert!(err.contains("[0.5]"), "{err}");
    }

    #[test]
    fn terminal_tensor_weight_is_projection() {
        let rp = lift_brownian(1, TimeGrid::new(1.0, 8).unwrap(), 1, Convention::Ito).unwrap();
        let xs = [-0.5, 0.0, 1.2];
        let m = tensor_weight(5, &xs, &xs, 1.0, &sine_beta(0.3), &rp, 4, 0).unwrap();
        let mut a = vec![0.0; 5];
        let mut b = vec![0.0; 5];
        for i in 0..3 {
            for j in 0..3 {
                hermite_functions(xs[i], &mut a);
                hermite_functions(xs[j], &mut b);
                let want: f64 = a.iter().zip(&b).map(|(p, q)| p * q).sum();
                assert!((m.at(i, j) - want).abs() < 1e-15);
            }
        }
        assert!(tensor_weight(65, &xs, &xs, 1.0, &sine_beta(0.3), &rp, 4, 0).is_err());
    }
}
