//! Periodic grids, grid fields and FFT-based derivatives.

use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{ensure, Result};
use crate::value::LinearValue;

/// Default side length of the periodic box.
pub const DEFAULT_LENGTH: f64 = 20.0;

/// Uniform grid on the torus `[-L/2, L/2)^d`, `N` points per axis.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridSpec {
    dim: usize,
    length: f64,
    n: usize,
}

impl GridSpec {
    pub fn new(dim: usize, length: f64, n: usize) -> Result<Self> {
        ensure!(dim == 1 || dim == 2, "spatial dimension must be 1 or 2, got {dim}");
        ensure!(length > 0.0 && length.is_finite(), "box length must be positive");
        ensure!(n >= 8 && n.is_power_of_two(), "points per axis must be a power of 2 and at least 8, got {n}");
        Ok(Self { dim, length, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Quadrature weight `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn axis_coordinate(&self, i: usize) -> f64 {
        -0.5 * self.length + i as f64 * self.spacing()
    }

    /// Coordinates of every grid point, `dim` per point, first axis slowest.
    pub fn coordinates(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len() * self.dim);
        if self.dim == 1 {
            out.extend((0..self.n).map(|i| self.axis_coordinate(i)));
        } else {
            for i in 0..self.n {
                for j in 0..self.n {
                    out.push(self.axis_coordinate(i));
                    out.push(self.axis_coordinate(j));
                }
            }
        }
        out
    }

    /// Wavenumber of FFT index `m`; the Nyquist index gets `+πN/L`.
    pub fn wavenumber(&self, m: usize) -> f64 {
        let m = if m <= self.n / 2 { m as f64 } else { m as f64 - self.n as f64 };
        2.0 * PI * m / self.length
    }
}

/// Real field sampled on a [`GridSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    spec: GridSpec,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        ensure!(values.len() == spec.len(), "expected {} values, got {}", spec.len(), values.len());
        ensure!(values.iter().all(|v| v.is_finite()), "grid field values must be finite");
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self { spec, values: vec![0.0; spec.len()] }
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = spec.coordinates().chunks(spec.dim()).map(f).collect();
        Self { spec, values }
    }

    pub(crate) fn from_raw(spec: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), spec.len());
        Self { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { spec: self.spec, values: self.values.iter().map(|v| f(*v)).collect() }
    }

    /// `∫ f g` by the rectangle rule (spectrally exact for band-limited data).
    pub fn inner(&self, other: &GridField) -> f64 {
        assert_eq!(self.spec, other.spec, "grid mismatch");
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * self.spec.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn product(&self, other: &GridField) -> Self {
        assert_eq!(self.spec, other.spec, "grid mismatch");
        Self {
            spec: self.spec,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        }
    }
}

impl LinearValue for GridField {
    fn zeroed(&self) -> Self {
        Self::zeros(self.spec)
    }
    fn axpy(&mut self, a: f64, other: &Self) {
        assert_eq!(self.spec, other.spec, "grid mismatch");
        for (x, y) in self.values.iter_mut().zip(&other.values) {
            *x += a * y;
        }
    }
    fn norm(&self) -> f64 {
        self.l2_norm()
    }
}

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

/// FFT plans and wavenumbers for one grid.
#[derive(Clone)]
pub struct Spectral {
    spec: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("spec", &self.spec).finish()
    }
}

impl Spectral {
    pub fn new(spec: GridSpec) -> Self {
        let n = spec.points_per_axis();
        let (forward, inverse) = {
            let mut p = planner().lock().expect("FFT planner lock");
            (p.plan_fft_forward(n), p.plan_fft_inverse(n))
        };
        let k = (0..n).map(|m| spec.wavenumber(m)).collect();
        Self { spec, forward, inverse, k }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.spec.points_per_axis();
        fft.process(data);
        if self.spec.dim() == 2 {
            let mut col = vec![Complex64::new(0.0, 0.0); n];
            for j in 0..n {
                for i in 0..n {
                    col[i] = data[i * n + j];
                }
                fft.process(&mut col);
                for i in 0..n {
                    data[i * n + j] = col[i];
                }
            }
        }
    }

    /// Normalised Fourier coefficients `c_k = N^{-d} Σ f(x) e^{-ikx}`.
    pub fn coefficients(&self, f: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = f.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        self.transform(&mut data, &self.forward);
        let scale = 1.0 / self.spec.len() as f64;
        data.iter_mut().for_each(|c| *c *= scale);
        data
    }

    /// Inverse of [`coefficients`](Self::coefficients), real part.
    pub fn synthesize(&self, mut c: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut c, &self.inverse);
        c.iter().map(|v| v.re).collect()
    }

    /// Wavevector `(k_1, .., k_d)` of flat coefficient index `idx`.
    pub fn wavevector(&self, idx: usize) -> [f64; 2] {
        let n = self.spec.points_per_axis();
        if self.spec.dim() == 1 {
            [self.k[idx], 0.0]
        } else {
            [self.k[idx / n], self.k[idx % n]]
        }
    }

    fn is_nyquist(&self, idx: usize, axis: usize) -> bool {
        let n = self.spec.points_per_axis();
        let m = if self.spec.dim() == 1 || axis == 1 { idx % n } else { idx / n };
        m == n / 2
    }

    /// `|k|²` of flat coefficient index `idx`.
    pub fn k2(&self, idx: usize) -> f64 {
        let k = self.wavevector(idx);
        k[0] * k[0] + k[1] * k[1]
    }

    /// Applies the Fourier multiplier `mult(|k|²)`.
    pub fn apply_radial(&self, f: &[f64], mult: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut c = self.coefficients(f);
        for (i, v) in c.iter_mut().enumerate() {
            *v *= mult(self.k2(i));
        }
        self.synthesize(c)
    }

    /// Spectral partial derivatives along every axis (Nyquist mode dropped).
    pub fn gradient(&self, f: &[f64]) -> Vec<Vec<f64>> {
        let c = self.coefficients(f);
        (0..self.spec.dim())
            .map(|axis| {
                let d: Vec<Complex64> = c
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        if self.is_nyquist(i, axis) {
                            Complex64::new(0.0, 0.0)
                        } else {
                            v * Complex64::new(0.0, self.wavevector(i)[axis])
                        }
                    })
                    .collect();
                self.synthesize(d)
            })
            .collect()
    }

    /// `div` of a vector field given by its components.
    pub fn divergence(&self, components: &[Vec<f64>]) -> Vec<f64> {
        assert_eq!(components.len(), self.spec.dim());
        let mut total = vec![Complex64::new(0.0, 0.0); self.spec.len()];
        for (axis, comp) in components.iter().enumerate() {
            let c = self.coefficients(comp);
            for (i, (t, v)) in total.iter_mut().zip(&c).enumerate() {
                if !self.is_nyquist(i, axis) {
                    *t += v * Complex64::new(0.0, self.wavevector(i)[axis]);
                }
            }
        }
        self.synthesize(total)
    }

    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        self.apply_radial(f, |k2| -k2)
    }

    /// `|f|_s² = L^d Σ (1 + |k|²)^s |c_k|²`.
    pub fn sobolev_norm_sq(&self, f: &[f64], s: f64) -> f64 {
        let c = self.coefficients(f);
        let vol = self.spec.length().powi(self.spec.dim() as i32);
        c.iter().enumerate().map(|(i, v)| (1.0 + self.k2(i)).powf(s) * v.norm_sqr()).sum::<f64>() * vol
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        assert!(GridSpec::new(3, 20.0, 16).is_err());
        assert!(GridSpec::new(1, 20.0, 12).is_err());
        assert!(GridSpec::new(1, 20.0, 4).is_err());
        assert!(GridSpec::new(2, 20.0, 8).is_ok());
    }

    #[test]
    fn derivative_of_trig_mode_2d() {
        let spec = GridSpec::new(2, 2.0 * PI, 16).unwrap();
        let sp = Spectral::new(spec);
        let f = GridField::from_fn(spec, |x| (2.0 * x[0]).sin() * (3.0 * x[1]).cos());
        let g = sp.gradient(f.values());
        let want = GridField::from_fn(spec, |x| 2.0 * (2.0 * x[0]).cos() * (3.0 * x[1]).cos());
        let want_y = GridField::from_fn(spec, |x| -3.0 * (2.0 * x[0]).sin() * (3.0 * x[1]).sin());
        for i in 0..spec.len() {
            assert!((g[0][i] - want.values()[i]).abs() < 1e-12);
            assert!((g[1][i] - want_y.values()[i]).abs() < 1e-12);
        }
        let div = sp.divergence(&g);
        let lap = sp.laplacian(f.values());
        for i in 0..spec.len() {
            assert!((div[i] - lap[i]).abs() < 1e-11 && (lap[i] + 13.0 * f.values()[i]).abs() < 1e-11);
        }
    }
}
