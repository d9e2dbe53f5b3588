//! Orthonormal Hermite functions on `R`.

use std::f64::consts::PI;

/// Largest supported basis size.
pub const MAX_BASIS: usize = 64;

/// Writes `ψ_0(x)..ψ_{n-1}(x)` into `out[..n]`.
///
/// The three-term recurrence runs on rescaled values with the Gaussian factor
/// kept in log form, so large `|x|` underflows gracefully instead of
/// producing `0 · ∞`.
pub fn hermite_functions(x: f64, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    let mut log_scale = -0.5 * x * x - 0.25 * PI.ln();
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut raw = Vec::with_capacity(n);
    let mut scales = Vec::with_capacity(n);
    for k in 0..n {
        raw.push(cur);
        scales.push(log_scale);
        let next = (2.0 / (k as f64 + 1.0)).sqrt() * x * cur - (k as f64 / (k as f64 + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        let m = cur.abs().max(prev.abs());
        if m > 1e100 {
            prev /= m;
            cur /= m;
            log_scale += m.ln();
        }
    }
    for k in 0..n {
        out[k] = if raw[k] == 0.0 { 0.0 } else { raw[k].signum() * (raw[k].abs().ln() + scales[k]).exp() };
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_on_fine_grid() {
        let n = 12;
        let h = 0.01;
        let xs: Vec<f64> = (-1500..=1500).map(|i| i as f64 * h).collect();
        let vals: Vec<Vec<f64>> = xs
            .iter()
            .map(|&x| {
                let mut v = vec![0.0; n];
                hermite_functions(x, &mut v);
                v
            })
            .collect();
        for a in 0..n {
            for b in 0..n {
                let ip: f64 = vals.iter().map(|v| v[a] * v[b]).sum::<f64>() * h;
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-10, "({a},{b}) -> {ip}");
            }
        }
    }

    #[test]
    fn closed_forms_and_far_tail() {
        let mut v = vec![0.0; 3];
        let x: f64 = 0.7;
        hermite_functions(x, &mut v);
        let g = PI.powf(-0.25) * (-0.5 * x * x).exp();
        assert!((v[0] - g).abs() < 1e-15);
        assert!((v[1] - 2.0_f64.sqrt() * x * g).abs() < 1e-15);
        assert!((v[2] - (2.0 * x * x - 1.0) / 2.0_f64.sqrt() * g).abs() < 1e-15);
        let mut w = vec![0.0; MAX_BASIS];
        hermite_functions(45.0, &mut w);
        assert!(w.iter().all(|v| v.is_finite() && v.abs() < 1e-100));
    }
}
