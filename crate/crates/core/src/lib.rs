//! Monte Carlo simulator for hiring markets with social learning.
//!
//! Firms arrive one per round, see a pool of candidates from several groups,
//! and hire one. Skill is linear in observed features with a group-specific
//! coefficient that the market learns by ridge regression on past hires.
//! Greedy (laissez-faire) hiring can starve a group of data forever; the
//! crate simulates that failure and the UCB, hybrid, subsidy and
//! interview-quota remedies.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`.

pub mod engine;
pub mod error;
pub mod estimator;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod policies;
pub mod presets;
pub mod rng;
pub mod scalar;
pub mod subsidy;

pub use engine::{default_workers, run_batch, run_batch_traces, run_single, WORKERS_ENV};
pub use error::{ConfigError, PolicyError, SimError};
pub use estimator::{RadiusParams, RadiusVariant};
pub use metrics::{AggregateStats, SeriesKind};
pub use model::{GroupSpec, MarketConfig, StageMode};
pub use io::{parse_config_str, ExperimentConfig, ResultsBundle};
pub use policies::PolicyKind;
pub use presets::{preset, ExperimentPreset, PRESET_NAMES};
pub use scalar::Scalar;
pub use subsidy::SubsidyRule;

pub type Posterior = estimator::GroupPosterior<f64>;
pub type Posterior32 = estimator::GroupPosterior<f32>;
pub type Candidate = model::Candidate<f64>;
pub type Market = model::Market<f64>;
pub type Trace = metrics::RunTrace<f64>;
pub type Trace32 = metrics::RunTrace<f32>;
