//! Simulation, protocols and verification for g-partial gathering of mobile
//! agents on an asynchronous unidirectional ring with node whiteboards.
//!
//! Three agent models are covered:
//! - [`algo_distinct`]: deterministic agents with distinct ids,
//! - [`algo_random`]: anonymous agents using random bits,
//! - [`algo_anon`]: anonymous deterministic agents, solvable iff the
//!   placement's period is at least `g`.
//!
//! [`scheduler::run`] drives a [`ring_model::Configuration`] under a fair
//! asynchronous schedule; [`verifier`] judges the result.

pub mod algo_anon;
pub mod algo_distinct;
pub mod algo_random;
pub mod ring_model;
pub mod scheduler;
pub mod verifier;
pub mod workload;

pub use algo_distinct::MarkingRule;
pub use ring_model::{build_initial_config, Configuration, InstanceSpec, Model, Role};
pub use scheduler::{run, run_spec, RunOptions, RunOutcome, RunResult, ScheduleStrategy, StrategyKind};
pub use verifier::{check_partial_gathering, run_verdict, Verdict, VerdictKind};
