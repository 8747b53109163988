//! Interval distance geometry for protein backbones: sequential placement
//! from torsion domains, stress refinement by spectral projected gradient,
//! and a multistart driver tying them together.

pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod model;
pub mod report;
pub mod search;
pub mod spg;

pub type Vec3 = nalgebra::Vector3<f64>;

pub use error::{Error, Result};
pub use model::{AtomRecord, Conformation, EdgeConstraint, Instance, SolverParams, TorsionDomain};
pub use search::{multistart_solve, SolveOutcome, SolveStatus};
