//! Simulator for parallel regularized-evolution architecture search with
//! prefix transfer, plus trace analytics, cache-policy replay and the
//! closed-form probability calculators used to reason about them.
//!
//! ```
//! use regevo::{run_search, SearchConfig, SpaceSpec};
//!
//! let config = SearchConfig { total_candidates: 200, population_size: 20, ..Default::default() };
//! let outcome = run_search(&config, &SpaceSpec::default()).unwrap();
//! assert_eq!(outcome.trace.len(), 200);
//! ```

pub mod analytics;
pub mod cache_sim;
pub mod config;
pub mod engine;
pub mod error;
pub mod manifest;
pub mod prob;
pub mod repo;
pub mod space;
pub mod trace;

pub use cache_sim::{replay, CacheReport, ReplayContext};
pub use engine::{
    run_search, simulate_quanta, DelayReport, DonorScope, DurationModel, RunStats, SchedulingMode,
    SearchConfig, SearchOutcome,
};
pub use error::{Error, Result};
pub use manifest::RunManifest;
pub use repo::{CachePolicy, PolicyKind, TransferRepo};
pub use space::{ArchSequence, SpaceSize, SpaceSpec};
pub use trace::{decode_trace, encode_trace, read_trace, write_trace, TraceEvent};
