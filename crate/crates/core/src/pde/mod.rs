//! Viscous conservation laws with rough transport noise: the spectral
//! solver, energy diagnostics and a priori bounds.

mod bounds;
mod energy;
mod nonlinearity;
mod solver;

pub use bounds::{
    bihari_time_bound, burgers_bihari, contraction_check, gronwall_bound, young_constant, BihariBound,
    ContractionReport, BIHARI_MARGIN, BURGERS_EXPONENT,
};
pub use energy::{
    energy_report, report_indices, summarize_weights, tensor_energy_check, tensor_work, EnergyReport,
    TensorEnergyReport, TensorStatus, WeightSummary, TENSOR_BUDGET,
};
pub use nonlinearity::{Nonlinearity, Profile};
pub use solver::{level_path, solve_rough, solve_smooth_driver, RoughSolve, SolveResult, SolverOptions};
