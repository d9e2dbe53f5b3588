use crate::drivers::{GridField, GridSpec, Spectral};
use crate::error::{ensure, Result};

/// Scalar profile `g` with `|g'| <= 1`, used as `F(u) = g(u)·a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Linear,
    Arctan,
    Sine,
}

impl Profile {
    fn eval(self, u: f64) -> f64 {
        match self {
            Profile::Linear => u,
            Profile::Arctan => u.atan(),
            Profile::Sine => u.sin(),
        }
    }
}

/// Flux `F` in the conservative term `div F(u)`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Nonlinearity {
    /// `F ≡ 0`.
    Zero,
    /// `F(u) = g(u)·direction`; Lipschitz constant `|direction|`.
    Lipschitz { profile: Profile, direction: Vec<f64> },
    /// `F(u) = -½u²` in one dimension.
    Burgers,
}

impl Nonlinearity {
    pub fn check(&self, spec: &GridSpec) -> Result<()> {
        match self {
            Nonlinearity::Zero => Ok(()),
            Nonlinearity::Lipschitz { direction, .. } => {
                ensure!(
                    direction.len() == spec.dim(),
                    "flux direction has {} components on a {}-dimensional grid",
                    direction.len(),
                    spec.dim()
                );
                ensure!(direction.iter().all(|v| v.is_finite()), "flux direction must be finite");
                Ok(())
            }
            Nonlinearity::Burgers => {
                ensure!(spec.dim() == 1, "the Burgers flux is only defined for d = 1");
                Ok(())
            }
        }
    }

    /// Declared `|∇F|_∞`; `None` for the Burgers flux.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            Nonlinearity::Zero => Some(0.0),
            Nonlinearity::Lipschitz { direction, .. } => Some(direction.iter().map(|v| v * v).sum::<f64>().sqrt()),
            Nonlinearity::Burgers => None,
        }
    }

    pub fn is_burgers(&self) -> bool {
        matches!(self, Nonlinearity::Burgers)
    }

    /// Largest characteristic speed for states bounded by `u_sup`.
    pub fn max_speed(&self, u_sup: f64) -> f64 {
        self.lipschitz().unwrap_or(u_sup)
    }

    /// Components of `F(u)` on the grid.
    pub fn flux(&self, u: &[f64], dim: usize) -> Vec<Vec<f64>> {
        match self {
            Nonlinearity::Zero => vec![vec![0.0; u.len()]; dim],
            Nonlinearity::Lipschitz { profile, direction } => direction
                .iter()
                .map(|a| u.iter().map(|v| a * profile.eval(*v)).collect())
                .collect(),
            Nonlinearity::Burgers => vec![u.iter().map(|v| -0.5 * v * v).collect()],
        }
    }

    /// `div F(u)` by spectral differentiation.
    pub fn divergence(&self, u: &[f64], spectral: &Spectral) -> Vec<f64> {
        if matches!(self, Nonlinearity::Zero) {
            return vec![0.0; u.len()];
        }
        spectral.divergence(&self.flux(u, spectral.spec().dim()))
    }

    /// `div F(u)` as a grid field.
    pub fn divergence_field(&self, u: &GridField, spectral: &Spectral) -> GridField {
        GridField::from_raw(*u.spec(), self.divergence(u.values(), spectral))
    }
}
