//! Rough flows, Liouville Jacobians and Feynman-Kac weights.

mod fields;
mod hermite;
mod rde;
mod weight;

pub use fields::{LinearField, SineMode, TrigField, VectorField, VectorFieldSet};
pub use hermite::{hermite_functions, MAX_BASIS};
pub use rde::{
    controlled_integral_germ, jacobian_liouville, solve_rde, ControlledGerm, DivergenceGerm, Trajectory,
    BLOWUP_NORM,
};
pub use weight::{
    feynman_kac_pair, feynman_kac_weight, feynman_kac_weight_series, sample_seed, tensor_pairing,
    tensor_weight, tensor_weight_series, weight_bounds, PairingEstimate, TensorWeight, WeightField,
};
