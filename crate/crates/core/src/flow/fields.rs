//! Smooth vector fields with analytic derivatives up to third order.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{ensure, Result};

/// A smooth vector field on `R^d`.
///
/// Derivative layouts: `jacobian[a * d + b] = ∂_b V^a`,
/// `hessian[(a * d + b) * d + c] = ∂_b ∂_c V^a`, and analogously for the
/// third derivative.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64], out: &mut [f64]);
    fn jacobian(&self, x: &[f64], out: &mut [f64]);
    fn hessian(&self, x: &[f64], out: &mut [f64]);
    fn third(&self, x: &[f64], out: &mut [f64]);
    fn divergence(&self, x: &[f64]) -> f64;
    fn grad_divergence(&self, x: &[f64], out: &mut [f64]);
    /// `max(|V|_∞, |DV|_∞, |D²V|_∞, |D³V|_∞)`, infinite for unbounded fields.
    fn bound(&self) -> f64;

    /// Value, Jacobian, divergence and its gradient in one pass.
    fn eval_all(&self, x: &[f64], v: &mut [f64], dv: &mut [f64], grad_div: &mut [f64]) -> f64 {
        self.value(x, v);
        self.jacobian(x, dv);
        self.grad_divergence(x, grad_div);
        self.divergence(x)
    }
}

/// One Fourier mode `amp · sin(k·x + phase) · e`.
#[derive(Clone, Debug, PartialEq)]
pub struct SineMode {
    pub amplitude: f64,
    pub wavevector: Vec<f64>,
    pub phase: f64,
    pub direction: Vec<f64>,
}

/// Constant vector plus a finite sum of sine modes; bounded with all derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigField {
    dim: usize,
    constant: Vec<f64>,
    modes: Vec<SineMode>,
}

impl TrigField {
    pub fn new(constant: Vec<f64>, modes: Vec<SineMode>) -> Result<Self> {
        let dim = constant.len();
        ensure!(dim >= 1, "field dimension must be positive");
        for m in &modes {
            ensure!(
                m.wavevector.len() == dim && m.direction.len() == dim,
                "mode shapes must match dimension {dim}"
            );
        }
        Ok(Self { dim, constant, modes })
    }

    pub fn constant(c: Vec<f64>) -> Result<Self> {
        Self::new(c, Vec::new())
    }

    /// `a · sin(2πx_axis/period + phase)` along `direction`.
    pub fn sine(dim: usize, axis: usize, amplitude: f64, period: f64, phase: f64, direction: Vec<f64>) -> Result<Self> {
        ensure!(axis < dim, "axis {axis} out of range for dimension {dim}");
        ensure!(period > 0.0, "period must be positive");
        let mut k = vec![0.0; dim];
        k[axis] = 2.0 * PI / period;
        Self::new(
            vec![0.0; dim],
            vec![SineMode { amplitude, wavevector: k, phase, direction }],
        )
    }

    /// Divergence-free field on `R^2` built from two shear modes:
    /// `½a[sin(κ(x+y))(1,-1) + sin(κ(x-y))(1,1)]` with `κ = 2π/period`.
    pub fn solenoidal(amplitude: f64, period: f64, phase: f64) -> Result<Self> {
        ensure!(period > 0.0, "period must be positive");
        let k = 2.0 * PI / period;
        let h = 0.5 * amplitude;
        Self::new(
            vec![0.0, 0.0],
            vec![
                SineMode { amplitude: h, wavevector: vec![k, k], phase, direction: vec![1.0, -1.0] },
                SineMode { amplitude: h, wavevector: vec![k, -k], phase, direction: vec![1.0, 1.0] },
            ],
        )
    }

    fn phase_of(m: &SineMode, x: &[f64]) -> f64 {
        m.wavevector.iter().zip(x).map(|(k, x)| k * x).sum::<f64>() + m.phase
    }

    fn k_dot_e(m: &SineMode) -> f64 {
        m.wavevector.iter().zip(&m.direction).map(|(k, e)| k * e).sum()
    }
}

impl VectorField for TrigField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.constant);
        for m in &self.modes {
            let s = m.amplitude * Self::phase_of(m, x).sin();
            for (o, e) in out.iter_mut().zip(&m.direction) {
                *o += s * e;
            }
        }
    }

    fn jacobian(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        out.fill(0.0);
        for m in &self.modes {
            let c = m.amplitude * Self::phase_of(m, x).cos();
            for a in 0..d {
                for b in 0..d {
                    out[a * d + b] += c * m.direction[a] * m.wavevector[b];
                }
            }
        }
    }

    fn hessian(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        out.fill(0.0);
        for m in &self.modes {
            let s = -m.amplitude * Self::phase_of(m, x).sin();
            for a in 0..d {
                for b in 0..d {
                    for c in 0..d {
                        out[(a * d + b) * d + c] += s * m.direction[a] * m.wavevector[b] * m.wavevector[c];
                    }
                }
            }
        }
    }

    fn third(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        out.fill(0.0);
        for m in &self.modes {
            let c0 = -m.amplitude * Self::phase_of(m, x).cos();
            let k = &m.wavevector;
            for a in 0..d {
                for b in 0..d {
                    for c in 0..d {
                        for e in 0..d {
                            out[((a * d + b) * d + c) * d + e] += c0 * m.direction[a] * k[b] * k[c] * k[e];
                        }
                    }
                }
            }
        }
    }

    fn divergence(&self, x: &[f64]) -> f64 {
        self.modes
            .iter()
            .map(|m| m.amplitude * Self::k_dot_e(m) * Self::phase_of(m, x).cos())
            .sum()
    }

    fn grad_divergence(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for m in &self.modes {
            let s = -m.amplitude * Self::k_dot_e(m) * Self::phase_of(m, x).sin();
            for (o, k) in out.iter_mut().zip(&m.wavevector) {
                *o += s * k;
            }
        }
    }

    fn bound(&self) -> f64 {
        let c: f64 = self.constant.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut b = c;
        for p in 0..=3 {
            let s: f64 = self
                .modes
                .iter()
                .map(|m| {
                    let k: f64 = m.wavevector.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let e: f64 = m.direction.iter().map(|v| v * v).sum::<f64>().sqrt();
                    m.amplitude.abs() * e * k.powi(p)
                })
                .sum();
            b = b.max(if p == 0 { c + s } else { s });
        }
        b
    }

    fn eval_all(&self, x: &[f64], v: &mut [f64], dv: &mut [f64], grad_div: &mut [f64]) -> f64 {
        let d = self.dim;
        v.copy_from_slice(&self.constant);
        dv.fill(0.0);
        grad_div.fill(0.0);
        let mut div = 0.0;
        for m in &self.modes {
            let (s, c) = Self::phase_of(m, x).sin_cos();
            let (sa, ca) = (m.amplitude * s, m.amplitude * c);
            let ke = Self::k_dot_e(m);
            div += ca * ke;
            for a in 0..d {
                v[a] += sa * m.direction[a];
                grad_div[a] -= sa * ke * m.wavevector[a];
                for b in 0..d {
                    dv[a * d + b] += ca * m.direction[a] * m.wavevector[b];
                }
            }
        }
        div
    }
}

/// Affine field `V(x) = A x + b`; unbounded, intended for closed-form checks.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearField {
    dim: usize,
    matrix: Vec<f64>,
    offset: Vec<f64>,
}

impl LinearField {
    pub fn new(matrix: Vec<f64>, offset: Vec<f64>) -> Result<Self> {
        let dim = offset.len();
        ensure!(dim >= 1 && matrix.len() == dim * dim, "matrix must be {dim}x{dim}");
        Ok(Self { dim, matrix, offset })
    }
}

impl VectorField for LinearField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for a in 0..d {
            out[a] = self.offset[a] + (0..d).map(|b| self.matrix[a * d + b] * x[b]).sum::<f64>();
        }
    }
    fn jacobian(&self, _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.matrix);
    }
    fn hessian(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn third(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn divergence(&self, _x: &[f64]) -> f64 {
        (0..self.dim).map(|a| self.matrix[a * self.dim + a]).sum()
    }
    fn grad_divergence(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn bound(&self) -> f64 {
        f64::INFINITY
    }
}

/// The family `V_1..V_J` driving a rough equation.
#[derive(Clone)]
pub struct VectorFieldSet {
    dim: usize,
    fields: Vec<Arc<dyn VectorField>>,
}

impl std::fmt::Debug for VectorFieldSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VectorFieldSet").field("dim", &self.dim).field("count", &self.fields.len()).finish()
    }
}

impl VectorFieldSet {
    pub fn new(fields: Vec<Arc<dyn VectorField>>) -> Result<Self> {
        ensure!(!fields.is_empty(), "need at least one vector field");
        let dim = fields[0].dim();
        ensure!(fields.iter().all(|f| f.dim() == dim), "all fields must share one dimension");
        Ok(Self { dim, fields })
    }

    /// The coordinate fields `e_1..e_d`, scaled by `c`.
    pub fn coordinate(dim: usize, c: f64) -> Result<Self> {
        let fields = (0..dim)
            .map(|a| {
                let mut v = vec![0.0; dim];
                v[a] = c;
                Ok(Arc::new(TrigField::constant(v)?) as Arc<dyn VectorField>)
            })
            .collect::<Result<_>>()?;
        Self::new(fields)
    }

    /// Concatenation `(self, other)`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        ensure!(self.dim == other.dim, "field dimensions differ");
        Self::new(self.fields.iter().chain(&other.fields).cloned().collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn field(&self, j: usize) -> &dyn VectorField {
        self.fields[j].as_ref()
    }

    /// `max_j` of the `C³_b` bounds.
    pub fn bound_norm(&self) -> f64 {
        self.fields.iter().map(|f| f.bound()).fold(0.0, f64::max)
    }

    /// `max_j |V_j|_∞` over the sample points.
    pub fn sup_on(&self, points: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut v = vec![0.0; d];
        self.fields
            .iter()
            .map(|f| {
                points
                    .chunks(d)
                    .map(|x| {
                        f.value(x, &mut v);
                        v.iter().map(|a| a * a).sum::<f64>().sqrt()
                    })
                    .fold(0.0, f64::max)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: &dyn VectorField, x: &[f64]) {
        let d = f.dim();
        let h = 1e-5;
        let (mut jac, mut hes, mut thi) = (vec![0.0; d * d], vec![0.0; d * d * d], vec![0.0; d * d * d * d]);
        f.jacobian(x, &mut jac);
        f.hessian(x, &mut hes);
        f.third(x, &mut thi);
        let (mut vp, mut vm) = (vec![0.0; d], vec![0.0; d]);
        let (mut jp, mut jm) = (vec![0.0; d * d], vec![0.0; d * d]);
        let (mut hp, mut hm) = (vec![0.0; d * d * d], vec![0.0; d * d * d]);
        let mut gd = vec![0.0; d];
        f.grad_divergence(x, &mut gd);
        for b in 0..d {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[b] += h;
            xm[b] -= h;
            f.value(&xp, &mut vp);
            f.value(&xm, &mut vm);
            f.jacobian(&xp, &mut jp);
            f.jacobian(&xm, &mut jm);
            f.hessian(&xp, &mut hp);
            f.hessian(&xm, &mut hm);
            for a in 0..d {
                assert!(((vp[a] - vm[a]) / (2.0 * h) - jac[a * d + b]).abs() < 1e-8);
                for c in 0..d {
                    let fd = (jp[a * d + c] - jm[a * d + c]) / (2.0 * h);
                    assert!((fd - hes[(a * d + c) * d + b]).abs() < 1e-8);
                    for e in 0..d {
                        let fd = (hp[(a * d + c) * d + e] - hm[(a * d + c) * d + e]) / (2.0 * h);
                        assert!((fd - thi[((a * d + c) * d + e) * d + b]).abs() < 1e-7);
                    }
                }
            }
            let fd = (f.divergence(&xp) - f.divergence(&xm)) / (2.0 * h);
            assert!((fd - gd[b]).abs() < 1e-8);
        }
        let trace: f64 = (0..d).map(|a| jac[a * d + a]).sum();
        assert!((trace - f.divergence(x)).abs() < 1e-13);
        let (mut v2, mut j2, mut g2) = (vec![0.0; d], vec![0.0; d * d], vec![0.0; d]);
        let div = f.eval_all(x, &mut v2, &mut j2, &mut g2);
        f.value(x, &mut vp);
        assert!((div - f.divergence(x)).abs() < 1e-14);
        for a in 0..d {
            assert!((v2[a] - vp[a]).abs() < 1e-14 && (g2[a] - gd[a]).abs() < 1e-13);
        }
    }

    #[test]
    fn trig_derivatives_match_finite_differences() {
        let f = TrigField::sine(1, 0, 0.7, 5.0, 0.3, vec![1.0]).unwrap();
        fd_check(&f, &[0.37]);
        let mut g = TrigField::solenoidal(1.3, 4.0, 0.2).unwrap();
        fd_check(&g, &[0.3, -1.1]);
        g.constant = vec![0.5, -0.25];
        fd_check(&g, &[2.0, 0.4]);
    }

    #[test]
    fn solenoidal_is_divergence_free() {
        let g = TrigField::solenoidal(2.0, 3.0, 0.7).unwrap();
        for x in [[0.1, 0.2], [1.7, -2.3], [5.0, 0.0]] {
            assert!(g.divergence(&x).abs() < 1e-14);
        }
    }
}
