//! Independent reference solutions shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Composite Simpson rule on `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n.is_multiple_of(2));
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Classical RK4 for the scalar ODE `x' = g(t, x)`.
pub fn rk4(g: impl Fn(f64, f64) -> f64, x0: f64, t: f64, steps: usize) -> f64 {
    let h = t / steps as f64;
    let mut x = x0;
    for i in 0..steps {
        let s = i as f64 * h;
        let k1 = g(s, x);
        let k2 = g(s + 0.5 * h, x + 0.5 * h * k1);
        let k3 = g(s + 0.5 * h, x + 0.5 * h * k2);
        let k4 = g(s + h, x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    x
}

/// Fourth-order periodic central differences.
fn d1(v: &[f64], h: f64, i: usize) -> f64 {
    let n = v.len();
    let at = |k: isize| v[((i as isize + k).rem_euclid(n as isize)) as usize];
    (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h)
}

fn d2(v: &[f64], h: f64, i: usize) -> f64 {
    let n = v.len();
    let at = |k: isize| v[((i as isize + k).rem_euclid(n as isize)) as usize];
    (-at(2) + 16.0 * at(1) - 30.0 * at(0) + 16.0 * at(-1) - at(-2)) / (12.0 * h * h)
}

/// Backward equation `∂_t m = -m'' + (β m)' ż(t)`, `m_T = 1`, for
/// `β(x) = a sin(2πx/P + phase)` on the periodic box `[-L/2, L/2)` with `n`
/// points (`P` must divide `L`), marched with RK4 in reversed time.
/// Returns `m_0` at the nodes.
pub struct BackwardWeight {
    pub amplitude: f64,
    pub period: f64,
    pub length: f64,
    pub phase: f64,
    pub points: usize,
}

impl BackwardWeight {
    pub fn node(&self, i: usize) -> f64 {
        -0.5 * self.length + i as f64 * self.length / self.points as f64
    }

    pub fn solve(&self, zdot: impl Fn(f64) -> f64, horizon: f64, steps: usize) -> Vec<f64> {
        let n = self.points;
        let h = self.length / n as f64;
        let beta: Vec<f64> =
            (0..n).map(|i| self.amplitude * (2.0 * PI * self.node(i) / self.period + self.phase).sin()).collect();
        // τ = T - t: ∂_τ m = m'' - (β m)' ż(T - τ).
        let rhs = |tau: f64, m: &[f64]| -> Vec<f64> {
            let bm: Vec<f64> = m.iter().zip(&beta).map(|(a, b)| a * b).collect();
            let z = zdot(horizon - tau);
            (0..n).map(|i| d2(m, h, i) - d1(&bm, h, i) * z).collect()
        };
        let dt = horizon / steps as f64;
        let mut m = vec![1.0; n];
        for k in 0..steps {
            let tau = k as f64 * dt;
            let k1 = rhs(tau, &m);
            let y: Vec<f64> = m.iter().zip(&k1).map(|(a, b)| a + 0.5 * dt * b).collect();
            let k2 = rhs(tau + 0.5 * dt, &y);
            let y: Vec<f64> = m.iter().zip(&k2).map(|(a, b)| a + 0.5 * dt * b).collect();
            let k3 = rhs(tau + 0.5 * dt, &y);
            let y: Vec<f64> = m.iter().zip(&k3).map(|(a, b)| a + dt * b).collect();
            let k4 = rhs(tau + dt, &y);
            for i in 0..n {
                m[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        m
    }
}
