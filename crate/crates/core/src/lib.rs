//! Exact finite-field laboratory for rigid-motion packing in `F_q^d`.
//!
//! * [`ffield`]: prime fields, vectors, additive characters.
//! * [`orthgroup`]: enumeration of `O(d, F_q)` and stabilizers.
//! * [`ffourier`]: transforms on `F_q^d`, spheres `S_j`, restriction quantities.
//! * [`rigidpack`]: orbit unions `Θ(E)`, the multiplicity `λ_Θ` and theorem verifiers.

pub mod error;
pub mod ffield;
pub mod ffourier;
pub mod orthgroup;
pub mod rigidpack;
pub mod sampling;
pub mod trend;

pub use error::{Error, Result};
pub use ffield::{AdditiveCharacter, FieldSpace, FieldVector, PrimeField};
pub use ffourier::{PointSet, SpectrumTable, SphereDecomposition};
pub use orthgroup::{OrthGroup, OrthMatrix};
pub use rigidpack::{MotionSet, MultiplicityFunction, RigidMotion, Theorem};
