//! Agent policies: the step contract and its implementations.
//!
//! A policy maps observations to the next action. It sees only what the
//! tools returned (never the store), so every navigation decision is a pure
//! function of its observation history, its own state, and its seed. The
//! deterministic policies are oracles in the sense that they execute their
//! strategy perfectly; comparing them with live-model medians is exactly the
//! point of the benchmark.

pub mod deterministic;
pub mod remote;
pub mod shortcut;

pub use deterministic::{
    BinarySearch, CorruptedFallback, DeepTraversal, FlatTocTraversal, LinearScan, UniformProbe,
};
pub use remote::{RemoteConfig, RemotePolicy};
pub use shortcut::{Guesser, ParametricShortcut, ShortcutMode, ShortcutParams};

use crate::env::{AgentAction, Condition};
use crate::key::Key;
use crate::theory::StoreShape;

/// What a policy is allowed to see when choosing its next action.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    /// Result text of the previous action (None before the first tool result
    /// and after a free-text turn).
    pub last_result: Option<&'a str>,
    pub calls_made: u64,
    pub condition: Condition,
    pub shape: StoreShape,
    pub target_key: &'a Key,
}

/// One policy step: the action plus, for remote adapters in external counter
/// mode, the provider-reported token usage of the underlying API call.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub action: AgentAction,
    pub reported_tokens: Option<u64>,
}

impl StepOutput {
    pub fn call(call: crate::env::ToolCall) -> Self {
        StepOutput {
            action: AgentAction::Call(call),
            reported_tokens: None,
        }
    }

    pub fn free_text(text: String) -> Self {
        StepOutput {
            action: AgentAction::FreeText(text),
            reported_tokens: None,
        }
    }
}

/// Failures a policy can raise instead of an action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicyFailure {
    /// The counterpart kept answering but never produced a usable action.
    Protocol(String),
    /// Transport, auth, or configuration failure; the trial is excluded from
    /// accuracy statistics.
    Infrastructure(String),
}

/// The policy step contract. Implementations keep their own state; malformed
/// internal state surfaces as a submit of an empty answer rather than a
/// panic.
pub trait Policy: Send {
    fn step(&mut self, obs: &Observation<'_>) -> Result<StepOutput, PolicyFailure>;
}
