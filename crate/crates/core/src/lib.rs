//! Game-theoretic learning in finite potential games: log-linear learners,
//! second-order Q-learning, a stochastic-stability oracle, Gaussian-mixture
//! environment estimation and a multi-robot coverage case study.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coverage;
pub mod em;
pub mod error;
pub mod field;
pub mod game;
pub mod harness;
pub mod loglinear;
pub mod qlearn;
pub mod stability;

pub use coverage::{CoverageParams, CoverageWorld};
pub use em::{GmmEstimate, ObservationLog};
pub use error::{Error, Result};
pub use field::{Cell, FieldRaster, GaussianComponent, WorthField, WorthMap};
pub use game::{Game, JointAction, JointSpace, MixedStrategy, TableGame};
pub use harness::{Algorithm, Environment, ExperimentConfig, RunRecord};
pub use loglinear::{ConstrainedActionMap, RevisionPolicy};
pub use qlearn::SoqlParams;
pub use stability::{OracleOptions, OracleReport};
