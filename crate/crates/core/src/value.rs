//! Minimal vector-space interface shared by sewing, Hölder norms and fits.

pub trait LinearValue: Clone + Send + Sync {
    /// A zero of the same shape.
    fn zeroed(&self) -> Self;
    /// `self += a * other`.
    fn axpy(&mut self, a: f64, other: &Self);
    fn norm(&self) -> f64;

    fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }
}

impl LinearValue for f64 {
    fn zeroed(&self) -> Self {
        0.0
    }
    fn axpy(&mut self, a: f64, other: &Self) {
        *self += a * other;
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
}

/// Euclidean (Frobenius for flattened matrices) norm.
impl LinearValue for Vec<f64> {
    fn zeroed(&self) -> Self {
        vec![0.0; self.len()]
    }
    fn axpy(&mut self, a: f64, other: &Self) {
        assert_eq!(self.len(), other.len(), "shape mismatch");
        for (x, y) in self.iter_mut().zip(other) {
            *x += a * y;
        }
    }
    fn norm(&self) -> f64 {
        self.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}
