//! Indexed external-memory library and benchmark harness for page-bounded
//! retrieval.
//!
//! A store of key-value items is packed into fixed-capacity pages. An agent
//! that can only inspect one page per tool call must find the value for a
//! target key. The crate provides:
//!
//! - closed-form cost calculators for sequential and indexed retrieval
//!   ([`theory`]),
//! - deterministic store generation, pagination and rendering ([`store`]),
//! - flat and two-level lookup structures with corruption and traversal
//!   ([`index`]),
//! - a tool-call environment with full-history token accounting and a hard
//!   budget ([`env`]),
//! - agent policies, from deterministic oracles to a stochastic
//!   parametric-shortcut wrapper and a remote chat-completions adapter
//!   ([`agents`]),
//! - seeded trial execution, sweeps, grow-mode and aggregation ([`harness`]),
//! - summary tables, plot-data emission and theory comparison ([`report`]).

pub mod agents;
pub mod env;
pub mod error;
pub mod harness;
pub mod index;
pub mod key;
pub mod report;
pub mod store;
pub mod sweepfile;
pub mod theory;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
