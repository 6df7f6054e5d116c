//! Functional local linear regression with a data-adaptive ridge penalty.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common case.

pub mod error;
pub mod estimators;
pub mod funcspace;
pub mod linalg;
pub mod localkernel;
pub mod ridgepen;
pub mod rng;
pub mod scalar;
pub mod simgen;
pub mod tuning;

pub use error::{FllrError, Result};
pub use scalar::Real;

pub type Grid = funcspace::Grid<f64>;
pub type Curve = funcspace::Curve<f64>;
pub type CurveSet = funcspace::CurveSet<f64>;
pub type BasisSystem = funcspace::BasisSystem<f64>;
pub type ScoreMatrix = funcspace::ScoreMatrix<f64>;
pub type Matrix = linalg::Matrix<f64>;
pub type LocalWeights = localkernel::LocalWeights<f64>;
pub type LocalFit = estimators::LocalFit<f64>;
pub type WeightedScoreEigen = ridgepen::WeightedScoreEigen<f64>;
pub type MseComponents = ridgepen::MseComponents<f64>;
pub type RidgeProblem = ridgepen::RidgeProblem<f64>;
pub type RidgeFit = ridgepen::RidgeFit<f64>;
pub type SimulatedSample = simgen::SimulatedSample<f64>;
pub type TuningReport = tuning::TuningReport<f64>;

pub type GridF32 = funcspace::Grid<f32>;
pub type CurveSetF32 = funcspace::CurveSet<f32>;
pub type ScoreMatrixF32 = funcspace::ScoreMatrix<f32>;
pub type MatrixF32 = linalg::Matrix<f32>;
