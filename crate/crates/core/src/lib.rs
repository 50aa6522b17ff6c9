//! Greedy k-center with distances that can only be sampled.
//!
//! Distances come from an [`oracles::OracleSession`] under one of three models:
//! single-coordinate queries, additive Gaussian noise, or Bernoulli draws. The
//! solvers in [`algorithms`] recover the exact greedy centers from those samples
//! at a fraction of the cost of computing every distance.
//!
//! Everything is generic over the scalar ([`scalar::Real`], `f32` or `f64`);
//! the aliases below fix it to `f64`, with `*32` variants for `f32`.

pub mod algorithms;
pub mod bandit;
pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod maximin;
pub mod oracles;
pub mod scalar;

pub use algorithms::{run, Algorithm, FirstCenter, RunResult, StageReport};
pub use dataset::{CenterSet, DataSource};
pub use error::{Error, Result};
pub use oracles::QueryLedger;
pub use scalar::Real;

pub type PointSet = dataset::PointSet<f64>;
pub type DistanceMatrix = dataset::DistanceMatrix<f64>;
pub type OracleModel = oracles::OracleModel<f64>;
pub type OracleSession<'a> = oracles::OracleSession<'a, f64>;
pub type RunConfig = algorithms::RunConfig<f64>;
pub type MaximinInstance = maximin::MaximinInstance<f64>;
pub type WeightMatrix = maximin::WeightMatrix<f64>;

pub type PointSet32 = dataset::PointSet<f32>;
pub type DistanceMatrix32 = dataset::DistanceMatrix<f32>;
pub type OracleModel32 = oracles::OracleModel<f32>;
pub type OracleSession32<'a> = oracles::OracleSession<'a, f32>;
pub type RunConfig32 = algorithms::RunConfig<f32>;
pub type MaximinInstance32 = maximin::MaximinInstance<f32>;
pub type WeightMatrix32 = maximin::WeightMatrix<f32>;
