//! Independent component analysis with weighted squared third and fourth
//! cumulants: four estimators, their asymptotic variances and a Monte Carlo
//! harness for checking one against the other.

pub mod asymptotics;
pub mod cumulants;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod simulation;

pub use asymptotics::{AsvTable, ZetaTriple};
pub use cumulants::{DataMatrix, Standardization, StandardizedSample};
pub use distributions::{MomentProfile, SourceSpec};
pub use error::{Error, Result};
pub use estimators::{estimate, Method, SolverOptions, Standardizer, UnmixingEstimate, Warning};
pub use linalg::{OrthMatrix, SymMatrix};
pub use simulation::{IcModelSpec, McResult, Mixing};
