//! Scenario configuration: TOML with dotted sections, every field defaulted.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::SCENARIOS;
use crate::drivers::{GridField, GridSpec, DEFAULT_LENGTH};
use crate::error::{Error, Result};
use crate::flow::{TrigField, VectorField, VectorFieldSet};
use crate::pde::{Nonlinearity, Profile, SolverOptions};
use crate::roughpath::{lift_brownian, lift_piecewise_linear, Convention, RoughPath, SampledPath, TimeGrid};

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

macro_rules! require {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err(config_err(format!($($arg)*)));
        }
    };
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: String,
    /// Seed for everything not tied to the driver (probe triples, Monte Carlo).
    pub seed: u64,
    /// Output directory; relative paths are resolved against the config file.
    pub output: PathBuf,
    pub grid: GridConfig,
    pub driver: DriverConfig,
    pub beta: BetaConfig,
    pub nonlinearity: FluxConfig,
    pub initial: InitialConfig,
    pub solver: SolverConfig,
    pub monte_carlo: MonteCarloConfig,
    pub report: ReportConfig,
    pub lift: LiftConfig,
    pub sewing: SewingConfig,
    pub flow: FlowConfig,
    pub energy: EnergyConfig,
    pub remainder: RemainderConfig,
    pub contraction: ContractionConfig,
    pub tensor: TensorConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: String::new(),
            seed: 0,
            output: PathBuf::from("out"),
            grid: GridConfig::default(),
            driver: DriverConfig::default(),
            beta: BetaConfig::default(),
            nonlinearity: FluxConfig::default(),
            initial: InitialConfig::default(),
            solver: SolverConfig::default(),
            monte_carlo: MonteCarloConfig::default(),
            report: ReportConfig::default(),
            lift: LiftConfig::default(),
            sewing: SewingConfig::default(),
            flow: FlowConfig::default(),
            energy: EnergyConfig::default(),
            remainder: RemainderConfig::default(),
            contraction: ContractionConfig::default(),
            tensor: TensorConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub length: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { dim: 1, length: DEFAULT_LENGTH, points: 64 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriverKind {
    /// `Z^j_t = a cos(2π(1 + ⌊j/2⌋)t/T - jπ/2)`.
    Smooth,
    Brownian,
    /// `Z^j_t = a t`.
    Linear,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriverConfig {
    pub kind: DriverKind,
    pub dim: usize,
    pub seed: u64,
    /// Independent drivers with seeds `seed, seed + 1, ...`.
    pub replicates: usize,
    pub alpha: f64,
    pub convention: Convention,
    pub horizon: f64,
    pub steps: usize,
    pub amplitude: f64,
    /// Dyadic approximation levels `Z(n)` on `2^n` segments.
    pub levels: Vec<u32>,
}

impl Default for DriverConfig {
    fn default() -> Self {
        Self {
            kind: DriverKind::Brownian,
            dim: 1,
            seed: 1,
            replicates: 1,
            alpha: 0.45,
            convention: Convention::Stratonovich,
            horizon: 0.5,
            steps: 512,
            amplitude: 1.0,
            levels: vec![5, 6, 7, 8, 9],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaFamily {
    Zero,
    Constant,
    /// `β_j = a sin(2π x_{j mod d}/period + phase + jπ/2) e_{j mod d}`.
    Sine,
    /// Divergence-free shear pair, `d = 2` only.
    Solenoidal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BetaConfig {
    pub family: BetaFamily,
    pub amplitude: f64,
    pub phase: f64,
    /// Spatial period; `0` means the domain length.
    pub period: f64,
}

impl Default for BetaConfig {
    fn default() -> Self {
        Self { family: BetaFamily::Sine, amplitude: 0.5, phase: 0.0, period: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FluxKind {
    Zero,
    Lipschitz,
    Burgers,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluxConfig {
    pub kind: FluxKind,
    pub profile: Profile,
    /// Flux direction for the Lipschitz family; its length is `|∇F|_∞`.
    pub direction: Vec<f64>,
}

impl Default for FluxConfig {
    fn default() -> Self {
        Self { kind: FluxKind::Burgers, profile: Profile::Arctan, direction: vec![1.0] }
    }
}

/// Gaussian bump `a exp(-|x - c|²/w²)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self { amplitude: 1.0, width: 1.0, center: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub substeps: usize,
    pub cfl: f64,
    pub blowup_threshold: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self { substeps: o.substeps, cfl: o.cfl, blowup_threshold: o.blowup_threshold }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub samples: usize,
    /// Sample counts for the standard-error scaling fit (`weight-field`).
    pub sample_sweep: Vec<usize>,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self { samples: 256, sample_sweep: vec![100, 1000, 10000] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Report times per run (weights are estimated only there).
    pub times: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self { times: 33 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiftConfig {
    pub triples: usize,
    pub tolerance: f64,
}

impl Default for LiftConfig {
    fn default() -> Self {
        Self { triples: 1000, tolerance: 1e-12 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SewingConfig {
    /// Output grid steps for the analytic germs.
    pub steps: usize,
    pub tol: f64,
    /// Claimed order of the power germ `(t - s)^order`.
    pub power: f64,
    pub slack: f64,
}

impl Default for SewingConfig {
    fn default() -> Self {
        Self { steps: 64, tol: 1e-10, power: 1.5, slack: 0.15 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    /// Starting points for the self-convergence study.
    pub points: Vec<f64>,
    /// Grid levels (`2^level` steps) compared pairwise.
    pub levels: Vec<u32>,
    pub slack: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self { points: vec![-2.0, 0.0, 1.5], levels: vec![5, 6, 7, 8, 9, 10], slack: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    /// Substep counts for the unperturbed energy-identity order study.
    pub substeps_sweep: Vec<usize>,
    pub min_order: f64,
    pub max_spread: f64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self { substeps_sweep: vec![1, 2, 4], min_order: 0.9, max_spread: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemainderConfig {
    /// Fit window as a fraction of the horizon.
    pub window: f64,
    pub slack: f64,
}

impl Default for RemainderConfig {
    fn default() -> Self {
        Self { window: 0.25, slack: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContractionConfig {
    /// `|u0¹ - u0²|_0` values of the perturbation sweep.
    pub perturbations: Vec<f64>,
    pub slope_tolerance: f64,
}

impl Default for ContractionConfig {
    fn default() -> Self {
        Self { perturbations: vec![1e-2, 1e-3, 1e-4], slope_tolerance: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TensorConfig {
    pub bases: Vec<usize>,
    /// Largest allowed tensor work (samples × times × points² × basis).
    pub budget: f64,
    /// Relative Parseval tolerance at the terminal time for the largest basis.
    pub parseval_tol: f64,
}

impl Default for TensorConfig {
    fn default() -> Self {
        Self { bases: vec![8, 16, 32], budget: crate::pde::TENSOR_BUDGET, parseval_tol: 1e-3 }
    }
}

impl ScenarioConfig {
    /// Parses a TOML config, or the `config` object of a run manifest when
    /// the file is JSON. Relative output paths are anchored at the file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = if path.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
            let c = v.get("config").cloned().ok_or_else(|| config_err("manifest has no `config` object"))?;
            serde_json::from_value::<ScenarioConfig>(c).map_err(|e| config_err(format!("{}: {e}", path.display())))?
        } else {
            Self::from_toml(&text).map_err(|e| match e {
                Error::Config(m) => config_err(format!("{}: {m}", path.display())),
                other => other,
            })?
        };
        if cfg.output.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.output = base.join(&cfg.output);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is TOML-representable")
    }

    /// Defaults for a named scenario, with the output directory set.
    pub fn for_scenario(name: &str, output: impl Into<PathBuf>) -> Self {
        Self { scenario: name.to_string(), output: output.into(), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        require!(
            SCENARIOS.contains(&self.scenario.as_str()),
            "unknown scenario {:?}; registered: {}",
            self.scenario,
            SCENARIOS.join(", ")
        );
        let g = &self.grid;
        require!(g.dim == 1 || g.dim == 2, "grid.dim must be 1 or 2");
        require!(g.points >= 8 && g.points.is_power_of_two(), "grid.points must be a power of two >= 8");
        require!(g.length > 0.0 && g.length.is_finite(), "grid.length must be positive");
        let d = &self.driver;
        require!(d.dim >= 1, "driver.dim must be positive");
        require!(d.replicates >= 1, "driver.replicates must be positive");
        require!(d.alpha > 1.0 / 3.0 && d.alpha <= 0.5, "driver.alpha must lie in (1/3, 1/2]");
        require!(d.horizon > 0.0 && d.horizon.is_finite(), "driver.horizon must be positive");
        require!(d.steps >= 2 && d.steps.is_power_of_two(), "driver.steps must be a power of two >= 2");
        require!(d.amplitude.is_finite(), "driver.amplitude must be finite");
        require!(!d.levels.is_empty(), "driver.levels must not be empty");
        require!(d.levels.windows(2).all(|w| w[0] < w[1]), "driver.levels must increase");
        require!(
            d.levels.iter().all(|&l| (1usize << l) <= d.steps),
            "every driver level needs 2^level <= driver.steps"
        );
        require!(
            self.beta.family != BetaFamily::Solenoidal || g.dim == 2,
            "beta.family = solenoidal requires grid.dim = 2"
        );
        require!(self.beta.amplitude.is_finite() && self.beta.period >= 0.0, "beta parameters must be finite");
        if self.nonlinearity.kind == FluxKind::Burgers {
            require!(g.dim == 1, "the Burgers flux needs grid.dim = 1");
        }
        if self.nonlinearity.kind == FluxKind::Lipschitz {
            require!(
                self.nonlinearity.direction.len() == g.dim,
                "nonlinearity.direction needs {} components",
                g.dim
            );
        }
        require!(self.initial.width > 0.0, "initial.width must be positive");
        require!(self.solver.substeps >= 1, "solver.substeps must be positive");
        require!(self.solver.cfl > 0.0, "solver.cfl must be positive");
        require!(self.monte_carlo.samples >= 2, "monte_carlo.samples must be at least 2");
        require!(self.report.times >= 3, "report.times must be at least 3");
        require!(self.lift.triples >= 1, "lift.triples must be positive");
        require!(self.sewing.steps >= 2 && self.sewing.steps.is_power_of_two(), "sewing.steps must be a power of two");
        require!(self.sewing.power > 1.0, "sewing.power must exceed 1");
        require!(self.flow.levels.len() >= 3, "flow.levels needs at least three levels");
        require!(self.flow.levels.windows(2).all(|w| w[1] == w[0] + 1), "flow.levels must be consecutive");
        require!(
            self.flow.points.len().is_multiple_of(g.dim) && !self.flow.points.is_empty(),
            "flow.points must hold whole points of dimension {}",
            g.dim
        );
        require!(self.energy.substeps_sweep.len() >= 2, "energy.substeps_sweep needs two entries");
        require!(self.remainder.window > 0.0 && self.remainder.window <= 1.0, "remainder.window must lie in (0, 1]");
        require!(!self.contraction.perturbations.is_empty(), "contraction.perturbations must not be empty");
        require!(
            self.contraction.perturbations.iter().all(|p| *p > 0.0),
            "contraction.perturbations must be positive"
        );
        require!(!self.tensor.bases.is_empty(), "tensor.bases must not be empty");
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid.dim, self.grid.length, self.grid.points)
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.driver.horizon, self.driver.steps)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            substeps: self.solver.substeps,
            cfl: self.solver.cfl,
            blowup_threshold: self.solver.blowup_threshold,
        }
    }

    /// Seeds of the driver replicates.
    pub fn driver_seeds(&self) -> Vec<u64> {
        (0..self.driver.replicates as u64).map(|r| self.driver.seed.wrapping_add(r)).collect()
    }

    /// The driving rough path for one seed.
    pub fn rough_path(&self, seed: u64) -> Result<RoughPath> {
        let d = &self.driver;
        let grid = self.time_grid()?;
        let rp = match d.kind {
            DriverKind::Brownian => lift_brownian(seed, grid, d.dim, d.convention)?.scaled(d.amplitude),
            kind => lift_piecewise_linear(&smooth_path(kind, grid, d.dim, d.amplitude)?)?,
        };
        rp.with_alpha(d.alpha)
    }

    pub fn beta(&self) -> Result<VectorFieldSet> {
        let dim = self.grid.dim;
        let b = &self.beta;
        let period = if b.period > 0.0 { b.period } else { self.grid.length };
        let fields = (0..self.driver.dim)
            .map(|j| {
                let axis = j % dim;
                let mut e = vec![0.0; dim];
                e[axis] = 1.0;
                let phase = b.phase + j as f64 * PI / 2.0;
                let f = match b.family {
                    BetaFamily::Zero => TrigField::constant(vec![0.0; dim])?,
                    BetaFamily::Constant => TrigField::constant(e.iter().map(|v| v * b.amplitude).collect())?,
                    BetaFamily::Sine => TrigField::sine(dim, axis, b.amplitude, period, phase, e)?,
                    BetaFamily::Solenoidal => TrigField::solenoidal(b.amplitude, period, phase)?,
                };
                Ok(Arc::new(f) as Arc<dyn VectorField>)
            })
            .collect::<Result<Vec<_>>>()?;
        VectorFieldSet::new(fields)
    }

    /// Whether the configured transport fields are divergence free.
    pub fn beta_divergence_free(&self) -> bool {
        matches!(self.beta.family, BetaFamily::Zero | BetaFamily::Constant | BetaFamily::Solenoidal)
            || self.beta.amplitude == 0.0
    }

    pub fn flux(&self) -> Nonlinearity {
        match self.nonlinearity.kind {
            FluxKind::Zero => Nonlinearity::Zero,
            FluxKind::Burgers => Nonlinearity::Burgers,
            FluxKind::Lipschitz => Nonlinearity::Lipschitz {
                profile: self.nonlinearity.profile,
                direction: self.nonlinearity.direction.clone(),
            },
        }
    }

    pub fn initial(&self) -> Result<GridField> {
        let spec = self.grid_spec()?;
        let i = &self.initial;
        Ok(GridField::from_fn(spec, |x| {
            let r2: f64 = x.iter().map(|v| (v - i.center) * (v - i.center)).sum();
            i.amplitude * (-r2 / (i.width * i.width)).exp()
        }))
    }
}

/// Deterministic driver samples for the non-random kinds.
pub fn smooth_path(kind: DriverKind, grid: TimeGrid, dim: usize, amplitude: f64) -> Result<SampledPath> {
    let horizon = grid.horizon();
    SampledPath::from_fn(grid, dim, |t, z| {
        for (j, v) in z.iter_mut().enumerate() {
            *v = match kind {
                DriverKind::Smooth => {
                    let freq = 1.0 + (j / 2) as f64;
                    amplitude * (2.0 * PI * freq * t / horizon - j as f64 * PI / 2.0).cos()
                }
                DriverKind::Linear => amplitude * t,
                DriverKind::Zero | DriverKind::Brownian => 0.0,
            };
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dotted_keys_and_defaults() {
        let cfg = ScenarioConfig::from_toml(
            "scenario = \"weight-field\"\ndriver.kind = \"smooth\"\ndriver.seed = 9\n[beta]\nfamily = \"constant\"\n",
        )
        .unwrap();
        assert_eq!(cfg.driver.kind, DriverKind::Smooth);
        assert_eq!(cfg.driver.seed, 9);
        assert_eq!(cfg.beta.family, BetaFamily::Constant);
        assert_eq!(cfg.report.times, 33);
        let back = ScenarioConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_names_are_config_errors() {
        let e = ScenarioConfig::from_toml("scenario = \"nope\"").unwrap_err();
        assert!(matches!(&e, Error::Config(m) if m.contains("lift-check")));
        assert!(ScenarioConfig::from_toml("scenario = \"lift-check\"\ndriver.colour = 1").is_err());
        assert!(ScenarioConfig::from_toml("scenario = \"lift-check\"\nbeta.family = \"solenoidal\"").is_err());
    }
}
