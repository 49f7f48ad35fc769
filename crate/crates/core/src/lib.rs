//! degel: a numerical laboratory for fully nonlinear elliptic equations
//! with non-homogeneous gradient degeneracy,
//!
//! ```text
//!   [ |Du|^p + a(x) |Du|^q ] F(x, D^2 u) = f(x, u)   on a ball,
//! ```
//!
//! built to measure the geometry such solutions exhibit: sharp C^{1,beta}
//! oscillation growth at critical points, gradient growth rates, dead-core
//! free-boundary exponents, non-degeneracy lower bounds, and the barrier
//! constants certifying them.
//!
//! The crate is organized around the pipeline
//! grid -> operators/degeneracy -> discretization -> solver -> analysis,
//! with `barriers` providing the closed-form reference profiles, `scaling`
//! the normalization machinery, `validation` the viscosity and comparison
//! audits, and `config`/`runner` the `degel` command-line experiment driver.

pub mod analysis;
pub mod barriers;
pub mod config;
pub mod degeneracy;
pub mod discretization;
pub mod error;
pub mod grid;
pub mod operators;
pub mod runner;
pub mod scaling;
pub mod solver;
pub mod validation;

pub use analysis::{fit_exponent, log_spaced_radii, DensityReport, ExponentFit};
pub use degeneracy::{DegeneracyLaw, ModulatingFn, MultiPhaseLaw};
pub use discretization::{jet_at, DiscreteJet};
pub use error::{Error, Result};
pub use grid::{make_grid, sup_over_ball, sup_over_sphere, Grid2D, NodeClass, ScalarField};
pub use operators::{
    pucci_minus, pucci_plus, recession, EllipticityPair, OmegaModulus, OperatorKind, OperatorSpec,
    SymMat2,
};
pub use solver::{
    residual_field, solve, solve_frozen_homogeneous, ProblemSpec, SolveReport, SolverConfig,
    SourceSpec,
};
pub use validation::{check_viscosity, comparison_audit, ComparisonReport, ViscosityReport};
