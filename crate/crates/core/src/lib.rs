//! Exact evaluation, optimization and model-free estimation for discounted,
//! entropy-regularized linear-quadratic control with Gaussian policies
//! `u ~ N(-Kx, Σ)`.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod eval;
pub mod linalg;
pub mod model;
pub mod modelfree;
pub mod optim;
pub mod riccati;
pub mod transfer;

pub use error::{Error, Result};
pub use eval::{evaluate, evaluate_policy, Evaluation};
pub use linalg::{Mat, SolveOptions};
pub use model::{random_instance, validate_instance, EnvModel, InstanceDoc, Policy, TauMode, ValidationReport};
pub use modelfree::{EstimatorSettings, GradientEstimate, Trajectory};
pub use optim::{IterateTrace, Method, StopRule, TheoryConstants, TraceStatus};
pub use riccati::{solve_optimal, solve_optimal_default, OptimalSolution, StationarityReport};
pub use transfer::{Certificate, EnvPair};

pub use nalgebra;
