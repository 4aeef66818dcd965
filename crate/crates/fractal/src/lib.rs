//! Discretized Euclidean laboratory: grid measures on `[0,1)^d` (`d ∈ {1, 2}`), their
//! spectra, dimension estimators, pushforwards under dilations and rotations, sums,
//! and occupancy unions.
//!
//! All reductions run in a fixed order, so results do not depend on the worker count.

pub mod error;
pub mod estimators;
pub mod grid;
pub mod io;
pub mod pushforward;
pub mod samples;
pub mod spectrum;

pub use error::{FractalError, Result};
pub use estimators::{
    ball_average, ball_growth, box_dimension, energy, envelope_decay, sigma_gamma, sigma_gamma_zeta, sigma_zeta,
    spherical_average, spherical_decay, zeta_decay, DecayReport, EnergyReport,
};
pub use grid::{cantor_intervals, cantor_measure, circle_measure, circle_set, segment_measure, sphere_measure, GridMeasure, GridSet};
pub use pushforward::{
    kfold_sum, pushforward_dilate, pushforward_rotate, pushforward_similarity, sum_pushforward, union_construct,
    union_construct_projected, Similarity, UnionSample,
};
pub use samples::{RotationSample, ScaleSample};
pub use spectrum::{fourier_at, spectrum, Spectrum};
