//! Sobolev calculus on the periodic grid, smoothing operators, the
//! unbounded rough driver `(A¹, A²)`, remainder extraction and exponent fits.

mod grid;

use std::io::Write;

pub use grid::{GridField, GridSpec, Spectral, DEFAULT_LENGTH};

use crate::error::{ensure, Result};
use crate::fit::{loglog_fit, LineFit};
use crate::flow::VectorFieldSet;
use crate::pde::Nonlinearity;
use crate::roughpath::{Increment, RoughPath, TimeGrid, TwoParamField};
use crate::value::LinearValue;

/// Discrete `|f|_s` with Fourier weights `(1 + |k|²)^s`; `s` may be negative.
pub fn sobolev_norm(f: &GridField, s: f64) -> f64 {
    Spectral::new(*f.spec()).sobolev_norm_sq(f.values(), s).sqrt()
}

/// Constant in the smoothing bounds; `C = 1` is valid for every `η <= 1`.
pub const SMOOTHING_CONSTANT: f64 = 1.0;

/// Ratios of the smoothing bounds for `k = 0, 1, 2` (each should be `<= C`).
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SmoothingReport {
    pub eta: f64,
    /// `|J^η f|_k / (η^{-k} |f|_0)`.
    pub gain: [f64; 3],
    /// `|(I - J^η) f|_0 / (η^k |f|_k)`.
    pub residual: [f64; 3],
    pub constant: f64,
    pub holds: bool,
}

fn smoothing_multiplier(eta: f64) -> impl Fn(f64) -> f64 {
    move |k2| (-eta * eta * k2).exp()
}

/// Gaussian mollifier `J^η` (multiplier `exp(-η²|k|²)`) with a check of the
/// smoothing bounds on `f`.
pub fn smoothing_apply(f: &GridField, eta: f64) -> Result<(GridField, SmoothingReport)> {
    ensure!(eta > 0.0 && eta <= 1.0, "smoothing scale must lie in (0, 1], got {eta}");
    let sp = Spectral::new(*f.spec());
    let smooth = sp.apply_radial(f.values(), smoothing_multiplier(eta));
    let rest: Vec<f64> = f.values().iter().zip(&smooth).map(|(a, b)| a - b).collect();
    let base = sp.sobolev_norm_sq(f.values(), 0.0).sqrt();
    let mut gain = [0.0; 3];
    let mut residual = [0.0; 3];
    for k in 0..3 {
        let kf = k as f64;
        let up = sp.sobolev_norm_sq(&smooth, kf).sqrt();
        gain[k] = ratio(up, eta.powf(-kf) * base);
        let hi = sp.sobolev_norm_sq(f.values(), kf).sqrt();
        residual[k] = ratio(sp.sobolev_norm_sq(&rest, 0.0).sqrt(), eta.powf(kf) * hi);
    }
    let tol = SMOOTHING_CONSTANT * (1.0 + 1e-12);
    let holds = gain.iter().chain(&residual).all(|r| *r <= tol);
    let field = GridField::from_raw(*f.spec(), smooth);
    Ok((field, SmoothingReport { eta, gain, residual, constant: SMOOTHING_CONSTANT, holds }))
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// Operator norms of `J^η: H^0 -> H^k` and `I - J^η: H^k -> H^0` restricted
/// to the grid's Fourier modes, for `k = 0, 1, 2`.
pub fn smoothing_operator_norms(spec: &GridSpec, eta: f64) -> Result<([f64; 3], [f64; 3])> {
    ensure!(eta > 0.0 && eta <= 1.0, "smoothing scale must lie in (0, 1], got {eta}");
    let sp = Spectral::new(*spec);
    let mult = smoothing_multiplier(eta);
    let mut gain = [0.0_f64; 3];
    let mut residual = [0.0_f64; 3];
    for i in 0..spec.len() {
        let k2 = sp.k2(i);
        let m = mult(k2);
        for k in 0..3 {
            let w = (1.0 + k2).powf(0.5 * k as f64);
            gain[k] = gain[k].max(m * w);
            residual[k] = residual[k].max((1.0 - m) / w);
        }
    }
    Ok((gain, residual))
}

/// Exponents of the smoothing operator norms against `η` for `k = 0, 1, 2`:
/// `(gain slopes, residual slopes)`, ideally `(-k, +k)`.
pub fn smoothing_rate_sweep(spec: &GridSpec, etas: &[f64]) -> Result<([f64; 3], [f64; 3])> {
    ensure!(etas.len() >= 2, "need at least two smoothing scales");
    let norms = etas.iter().map(|&e| smoothing_operator_norms(spec, e)).collect::<Result<Vec<_>>>()?;
    let mut gain = [0.0; 3];
    let mut residual = [0.0; 3];
    for k in 0..3 {
        let g: Vec<(f64, f64)> = etas.iter().zip(&norms).map(|(e, n)| (*e, n.0[k])).collect();
        let r: Vec<(f64, f64)> = etas.iter().zip(&norms).map(|(e, n)| (*e, n.1[k])).collect();
        gain[k] = loglog_fit(&g).map_or(0.0, |f| f.slope);
        residual[k] = loglog_fit(&r).map_or(0.0, |f| f.slope);
    }
    Ok((gain, residual))
}

/// Unbounded rough driver `A¹_{st}φ = δZ^j β_j·∇φ`,
/// `A²_{st}φ = ℤ^{ij} β_j·∇(β_i·∇φ)` on a periodic grid.
#[derive(Clone, Debug)]
pub struct DriverPair {
    spectral: Spectral,
    /// `beta[j][axis]` sampled on the grid.
    beta: Vec<Vec<Vec<f64>>>,
    rp: RoughPath,
    constant: f64,
}

/// Probes used to measure the driver constant.
fn probes(spec: &GridSpec) -> Vec<GridField> {
    let l = spec.length();
    let two_pi = 2.0 * std::f64::consts::PI;
    vec![
        GridField::from_fn(*spec, |x| (-x.iter().map(|v| v * v).sum::<f64>()).exp()),
        GridField::from_fn(*spec, |x| (3.0 * two_pi * x[0] / l).sin() * (-0.25 * x.iter().map(|v| v * v).sum::<f64>()).exp()),
        GridField::from_fn(*spec, |x| x.iter().map(|v| (2.0 * two_pi * v / l).cos()).product()),
    ]
}

/// Cap on the number of start points per scale in driver and remainder sweeps.
const MAX_STARTS: usize = 256;

fn dyadic_starts(n: usize, m: usize, aligned: bool) -> Vec<usize> {
    let step = if aligned { m } else { 1 };
    let count = (n - m) / step + 1;
    let stride = count.div_ceil(MAX_STARTS).max(1);
    (0..count).step_by(stride).map(|c| c * step).collect()
}

/// Builds the driver on `spec` from the transport fields and a rough path.
pub fn build_drivers(beta: &VectorFieldSet, rp: &RoughPath, spec: &GridSpec) -> Result<DriverPair> {
    ensure!(
        beta.dim() == spec.dim(),
        "transport fields live in R^{} but the grid is {}-dimensional",
        beta.dim(),
        spec.dim()
    );
    ensure!(beta.len() == rp.dim(), "{} transport fields for a {}-dimensional driver", beta.len(), rp.dim());
    let coords = spec.coordinates();
    let d = spec.dim();
    let mut v = vec![0.0; d];
    let values = (0..beta.len())
        .map(|j| {
            let mut comps = vec![Vec::with_capacity(spec.len()); d];
            for x in coords.chunks(d) {
                beta.field(j).value(x, &mut v);
                for a in 0..d {
                    comps[a].push(v[a]);
                }
            }
            comps
        })
        .collect();
    let mut pair = DriverPair { spectral: Spectral::new(*spec), beta: values, rp: rp.clone(), constant: 0.0 };
    pair.constant = pair
        .probe_norms()?
        .iter()
        .map(|p| (p.a1 / p.dt.powf(rp.alpha())).max(p.a2 / p.dt.powf(2.0 * rp.alpha())))
        .fold(0.0, f64::max);
    Ok(pair)
}

/// Largest observed `|A¹φ|_0/|φ|_1` and `|A²φ|_0/|φ|_2` at one scale.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct DriverProbe {
    pub dt: f64,
    pub a1: f64,
    pub a2: f64,
}

impl DriverPair {
    pub fn spec(&self) -> &GridSpec {
        self.spectral.spec()
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn rough_path(&self) -> &RoughPath {
        &self.rp
    }

    /// Measured `[A]_α`.
    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// `β_j · ∇φ`.
    pub fn transport(&self, j: usize, phi: &[f64]) -> Vec<f64> {
        let grad = self.spectral.gradient(phi);
        let mut out = vec![0.0; phi.len()];
        for (comp, g) in self.beta[j].iter().zip(&grad) {
            for ((o, b), gx) in out.iter_mut().zip(comp).zip(g) {
                *o += b * gx;
            }
        }
        out
    }

    /// `Σ_j c_j β_j·∇φ`.
    fn combined_transport(&self, coeffs: &[f64], phi: &[f64]) -> Vec<f64> {
        let grad = self.spectral.gradient(phi);
        let mut out = vec![0.0; phi.len()];
        for (c, field) in coeffs.iter().zip(&self.beta) {
            if *c == 0.0 {
                continue;
            }
            for (comp, g) in field.iter().zip(&grad) {
                for ((o, b), gx) in out.iter_mut().zip(comp).zip(g) {
                    *o += c * b * gx;
                }
            }
        }
        out
    }

    pub fn apply_first_increment(&self, inc: &Increment, phi: &GridField) -> GridField {
        GridField::from_raw(*phi.spec(), self.combined_transport(&inc.first, phi.values()))
    }

    pub fn apply_second_increment(&self, inc: &Increment, phi: &GridField) -> GridField {
        let nj = self.beta.len();
        let inner: Vec<Vec<f64>> = (0..nj).map(|i| self.transport(i, phi.values())).collect();
        let mut out = vec![0.0; phi.values().len()];
        for j in 0..nj {
            let mut psi = vec![0.0; out.len()];
            for (i, t) in inner.iter().enumerate() {
                let z = inc.second_at(i, j);
                for (p, v) in psi.iter_mut().zip(t) {
                    *p += z * v;
                }
            }
            for (o, v) in out.iter_mut().zip(self.transport(j, &psi)) {
                *o += v;
            }
        }
        GridField::from_raw(*phi.spec(), out)
    }

    fn check_field(&self, phi: &GridField) -> Result<()> {
        ensure!(phi.spec() == self.spec(), "field grid {:?} differs from driver grid {:?}", phi.spec(), self.spec());
        Ok(())
    }

    /// `A¹_{st}φ` for grid indices `s <= t`.
    pub fn apply_first(&self, s: usize, t: usize, phi: &GridField) -> Result<GridField> {
        self.check_field(phi)?;
        Ok(self.apply_first_increment(&self.rp.increment(s, t)?, phi))
    }

    /// `A²_{st}φ` for grid indices `s <= t`.
    pub fn apply_second(&self, s: usize, t: usize, phi: &GridField) -> Result<GridField> {
        self.check_field(phi)?;
        Ok(self.apply_second_increment(&self.rp.increment(s, t)?, phi))
    }

    /// `δA²_{sθt}φ - A¹_{θt}A¹_{sθ}φ`, zero in exact arithmetic.
    pub fn chen_defect(&self, s: usize, theta: usize, t: usize, phi: &GridField) -> Result<GridField> {
        ensure!(s <= theta && theta <= t, "need s <= θ <= t");
        let mut out = self.apply_second(s, t, phi)?;
        out.axpy(-1.0, &self.apply_second(theta, t, phi)?);
        out.axpy(-1.0, &self.apply_second(s, theta, phi)?);
        let inner = self.apply_first(s, theta, phi)?;
        out.axpy(-1.0, &self.apply_first(theta, t, &inner)?);
        Ok(out)
    }

    /// Driver norms on fixed probes over dyadic scales `dt·2^q`.
    pub fn probe_norms(&self) -> Result<Vec<DriverProbe>> {
        let grid = *self.rp.grid();
        let n = grid.n_steps();
        let probes = probes(self.spec());
        let norms: Vec<(f64, f64)> = probes
            .iter()
            .map(|p| (sobolev_norm(p, 1.0), sobolev_norm(p, 2.0)))
            .collect();
        let mut out = Vec::new();
        let mut m = 1;
        while m <= n {
            let (mut a1, mut a2) = (0.0_f64, 0.0_f64);
            for s in dyadic_starts(n, m, true) {
                let inc = self.rp.increment(s, s + m)?;
                for (p, (n1, n2)) in probes.iter().zip(&norms) {
                    a1 = a1.max(self.apply_first_increment(&inc, p).l2_norm() / n1);
                    a2 = a2.max(self.apply_second_increment(&inc, p).l2_norm() / n2);
                }
            }
            out.push(DriverProbe { dt: m as f64 * grid.dt(), a1, a2 });
            m *= 2;
        }
        Ok(out)
    }

    /// Writes the `dt A1_norm A2_norm` table.
    pub fn write_probe_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# constant: {:e}", self.constant)?;
        writeln!(w, "dt,A1_norm,A2_norm")?;
        for p in self.probe_norms()? {
            writeln!(w, "{:e},{:e},{:e}", p.dt, p.a1, p.a2)?;
        }
        Ok(())
    }
}

/// Which two-parameter quantity of a solution to expose.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RemainderKind {
    /// `u♮ = δu - δμ - A¹u_s - A²u_s`.
    Natural,
    /// `u♭ = δu - A¹u_s`.
    Flat,
    /// `δu`.
    Increment,
}

/// Remainders of a computed solution path against a driver.
pub struct Remainders<'a> {
    u: &'a [GridField],
    mu: &'a [GridField],
    drivers: &'a DriverPair,
    kind: RemainderKind,
}

/// Checks shapes and wraps `(u, μ)` for remainder evaluation; `u` and `μ`
/// must be sampled on the nodes of the driver's grid.
pub fn extract_remainder<'a>(
    u: &'a [GridField],
    mu: &'a [GridField],
    drivers: &'a DriverPair,
) -> Result<Remainders<'a>> {
    let n = drivers.rp.grid().n_steps();
    ensure!(
        u.len() == n + 1 && mu.len() == n + 1,
        "expected {} snapshots of u and μ, got {} and {}",
        n + 1,
        u.len(),
        mu.len()
    );
    ensure!(
        u.iter().chain(mu).all(|f| f.spec() == drivers.spec()),
        "snapshots must live on the driver grid"
    );
    Ok(Remainders { u, mu, drivers, kind: RemainderKind::Natural })
}

impl<'a> Remainders<'a> {
    pub fn with_kind(&self, kind: RemainderKind) -> Remainders<'a> {
        Remainders { u: self.u, mu: self.mu, drivers: self.drivers, kind }
    }

    pub fn natural(&self) -> Remainders<'a> {
        self.with_kind(RemainderKind::Natural)
    }

    pub fn flat(&self) -> Remainders<'a> {
        self.with_kind(RemainderKind::Flat)
    }

    pub fn increments(&self) -> Remainders<'a> {
        self.with_kind(RemainderKind::Increment)
    }
}

impl TwoParamField for Remainders<'_> {
    type Value = GridField;

    fn grid(&self) -> &TimeGrid {
        self.drivers.rp.grid()
    }

    fn value(&self, s: usize, t: usize) -> GridField {
        let mut out = self.u[t].sub(&self.u[s]);
        if self.kind == RemainderKind::Increment {
            return out;
        }
        let inc = self.drivers.rp.increment(s, t).expect("grid indices in range");
        out.axpy(-1.0, &self.drivers.apply_first_increment(&inc, &self.u[s]));
        if self.kind == RemainderKind::Flat {
            return out;
        }
        out.axpy(-1.0, &self.mu[t].sub(&self.mu[s]));
        out.axpy(-1.0, &self.drivers.apply_second_increment(&inc, &self.u[s]));
        out
    }
}

/// Log-log fit of `max_s |g_{s,s+h}|` over dyadic `h`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ExponentFit {
    /// Fitted exponent; `+∞` when every sampled value vanishes.
    pub slope: f64,
    /// `exp` of the fitted intercept, a seminorm-type constant.
    pub intercept: f64,
    pub samples: Vec<(f64, f64)>,
    pub dropped: usize,
    pub exact: bool,
}

impl ExponentFit {
    /// Writes the `h value` table.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# slope: {:e}", self.slope)?;
        writeln!(w, "h,value")?;
        for (h, v) in &self.samples {
            writeln!(w, "{h:e},{v:e}")?;
        }
        Ok(())
    }
}

/// Fits the Hölder exponent of `g` in the `H^{norm_order}` norm over dyadic
/// windows up to `window`.
pub fn fit_exponent<G: TwoParamField<Value = GridField>>(g: &G, norm_order: f64, window: f64) -> Result<ExponentFit> {
    fit_exponent_with(g, window, |f| sobolev_norm(f, norm_order))
}

/// [`fit_exponent`] with an arbitrary norm.
pub fn fit_exponent_with<G: TwoParamField>(g: &G, window: f64, norm: impl Fn(&G::Value) -> f64) -> Result<ExponentFit> {
    let grid = *g.grid();
    let n = grid.n_steps();
    ensure!(window > 0.0, "window must be positive");
    let mut samples = Vec::new();
    let mut m = 1;
    while m <= n && m as f64 * grid.dt() <= window * (1.0 + 1e-12) {
        let worst = dyadic_starts(n, m, false)
            .into_iter()
            .map(|s| norm(&g.value(s, s + m)))
            .fold(0.0, f64::max);
        samples.push((m as f64 * grid.dt(), worst));
        m *= 2;
    }
    ensure!(samples.len() >= 2, "window {window} covers fewer than two dyadic scales");
    let peak = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(ExponentFit { slope: f64::INFINITY, intercept: 0.0, samples, dropped: 0, exact: true });
    }
    let dropped = usize::from(samples.len() > 2 && samples[0].1 < 1e3 * f64::EPSILON * peak);
    let LineFit { slope, intercept } = loglog_fit(&samples[dropped..])
        .ok_or_else(|| crate::error::invalid!("not enough nonzero samples to fit an exponent"))?;
    Ok(ExponentFit { slope, intercept: intercept.exp(), samples, dropped, exact: false })
}

/// Outcome of a Nemytskii-type flux estimate.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct NemytskiiReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub holds: bool,
}

/// Checks `|div F(u) - div F(v)|_{-1} <= |∇F|_∞ |u - v|_0` for Lipschitz
/// fluxes, or `|∂_x(F(u) - F(v))|_{-2} <= |u - v|_0 (|u|_0 + |v|_0)` for
/// the Burgers flux.
pub fn nemytskii_check(flux: &Nonlinearity, u: &GridField, v: &GridField) -> Result<NemytskiiReport> {
    ensure!(u.spec() == v.spec(), "u and v live on different grids");
    flux.check(u.spec())?;
    let sp = Spectral::new(*u.spec());
    let diff: Vec<f64> = flux
        .divergence(u.values(), &sp)
        .iter()
        .zip(flux.divergence(v.values(), &sp))
        .map(|(a, b)| a - b)
        .collect();
    let du = u.sub(v).l2_norm();
    let (lhs, rhs) = match flux.lipschitz() {
        Some(lip) => (sp.sobolev_norm_sq(&diff, -1.0).sqrt(), lip * du),
        None => (sp.sobolev_norm_sq(&diff, -2.0).sqrt(), du * (u.l2_norm() + v.l2_norm())),
    };
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(NemytskiiReport { lhs, rhs, ratio, holds: lhs <= rhs * (1.0 + 1e-12) + 1e-300 })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;
    use crate::flow::{TrigField, VectorField};
    use crate::roughpath::{lift_brownian, Convention, FnField};

    fn spec1(n: usize) -> GridSpec {
        GridSpec::new(1, 2.0 * PI, n).unwrap()
    }

    #[test]
    fn sobolev_norm_of_mode_and_constant() {
        let spec = spec1(32);
        let f = GridField::from_fn(spec, |x| (3.0 * x[0]).cos());
        for s in [-3.0, -1.0, 0.0, 1.5] {
            let want = 10.0_f64.powf(0.5 * s) * f.l2_norm();
            assert!((sobolev_norm(&f, s) - want).abs() < 1e-12 * want.max(1.0));
        }
        let c = GridField::from_fn(spec, |_| -2.0);
        assert!((sobolev_norm(&c, -2.0) - 2.0 * (2.0 * PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn smoothing_bounds_hold_for_low_mode() {
        let spec = GridSpec::new(1, 20.0, 64).unwrap();
        let f = GridField::from_fn(spec, |x| (2.0 * PI * x[0] / 20.0).sin());
        for eta in [1.0, 0.5, 0.1] {
            let (_, rep) = smoothing_apply(&f, eta).unwrap();
            assert!(rep.holds, "{rep:?}");
        }
        assert!(smoothing_apply(&f, 0.0).is_err());
        assert!(smoothing_apply(&f, 1.5).is_err());
    }

    #[test]
    fn constant_transport_is_multiplier() {
        let spec = spec1(16);
        let grid = TimeGrid::new(1.0, 8).unwrap();
        let rp = lift_brownian(2, grid, 1, Convention::Stratonovich).unwrap();
        let b: Arc<dyn VectorField> = Arc::new(TrigField::constant(vec![0.7]).unwrap());
        let beta = VectorFieldSet::new(vec![b]).unwrap();
        let pair = build_drivers(&beta, &rp, &spec).unwrap();
        let phi = GridField::from_fn(spec, |x| (2.0 * x[0]).sin());
        let a1 = pair.apply_first(1, 6, &phi).unwrap();
        let dz = rp.increment(1, 6).unwrap().first[0];
        let want = GridField::from_fn(spec, |x| 0.7 * 2.0 * (2.0 * x[0]).cos() * dz);
        assert!(a1.sub(&want).max_abs() < 1e-12);
    }

    #[test]
    fn fit_exponent_recovers_power_and_scales() {
        let spec = spec1(16);
        let phi = GridField::from_fn(spec, |x| x[0].sin());
        let grid = TimeGrid::new(1.0, 64).unwrap();
        let g = FnField { grid, f: |s: f64, t: f64| phi.map(|v| v * (t - s).powf(1.2)) };
        let fit = fit_exponent(&g, -1.0, 0.5).unwrap();
        assert!((fit.slope - 1.2).abs() < 1e-9);
        let g3 = FnField { grid, f: |s: f64, t: f64| phi.map(|v| -3.0 * v * (t - s).powf(1.2)) };
        let fit3 = fit_exponent(&g3, -1.0, 0.5).unwrap();
        assert!((fit3.slope - fit.slope).abs() < 1e-12);
        assert!((fit3.intercept / fit.intercept - 3.0).abs() < 1e-9);
        let zero = FnField { grid, f: |_: f64, _: f64| GridField::zeros(spec) };
        assert!(fit_exponent(&zero, 0.0, 0.5).unwrap().exact);
    }

    #[test]
    fn burgers_nemytskii_requires_one_dimension() {
        let spec = GridSpec::new(2, 20.0, 8).unwrap();
        let u = GridField::zeros(spec);
        assert!(nemytskii_check(&Nonlinearity::Burgers, &u, &u).is_err());
    }
}
