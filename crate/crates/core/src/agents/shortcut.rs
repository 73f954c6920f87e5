//! Stochastic parametric-shortcut policy.
//!
//! Wraps any base policy with a per-step coin: with probability
//! `familiarity_f` the step bypasses retrieval — either submitting a
//! generated guess or emitting a free-text turn that pays tokens without
//! executing anything — and otherwise delegates to the base policy. The
//! wrapper buffers the base policy's tool results so the base state machine
//! sees exactly the observation sequence its own actions produced, which is
//! why `f = 0` reproduces the base policy call-for-call.

use super::{Observation, Policy, PolicyFailure, StepOutput};
use crate::env::ToolCall;
use crate::key::Key;
use crate::store::ContentKind;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// Mixture knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShortcutParams {
    /// Per-step probability of taking the parametric pathway.
    pub familiarity_f: f64,
    /// Probability that a generated guess equals the truth.
    pub hallucination_accuracy: f64,
}

impl ShortcutParams {
    pub fn new(familiarity_f: f64, hallucination_accuracy: f64) -> crate::Result<Self> {
        for (name, v) in [
            ("familiarity_f", familiarity_f),
            ("hallucination_accuracy", hallucination_accuracy),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(crate::Error::InvalidConfig(format!(
                    "{name} must be in [0, 1], got {v}"
                )));
            }
        }
        Ok(ShortcutParams {
            familiarity_f,
            hallucination_accuracy,
        })
    }

    /// Default guess accuracy per content type: hash values are unguessable,
    /// numeric values follow from the key, encyclopedia facts are plausible
    /// but unreliable. Calibration knobs, overridable in policy params.
    pub fn default_accuracy(kind: ContentKind) -> f64 {
        match kind {
            ContentKind::Hash => 0.0,
            ContentKind::Numeric => 1.0,
            ContentKind::Encyclopedia => 0.3,
        }
    }
}

/// What a shortcut step emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShortcutMode {
    /// Submit a generated answer immediately.
    Guess,
    /// Emit a free-text turn of this many tokens (bytes4 and whitespace
    /// agree on the filler used).
    FreeText { turn_tokens: u64 },
}

/// Generates the guessed answers. The harness injects the trial's truth
/// value here so `hallucination_accuracy` can be realized; this is the
/// modeled hallucination channel, not an information channel — the wrapper's
/// tool-call decisions never consult it.
#[derive(Debug, Clone)]
pub struct Guesser {
    kind: ContentKind,
    truth_value: String,
    accuracy: f64,
}

impl Guesser {
    pub fn new(kind: ContentKind, truth_value: String, accuracy: f64) -> Self {
        Guesser {
            kind,
            truth_value,
            accuracy,
        }
    }

    fn guess<R: Rng>(&self, target_key: &Key, rng: &mut R) -> String {
        if self.accuracy > 0.0 && rng.random_bool(self.accuracy) {
            return self.truth_value.clone();
        }
        let mut wrong = match self.kind {
            ContentKind::Hash => (0..4)
                .map(|_| char::from(b'A' + rng.random_range(0..26u8)))
                .collect(),
            ContentKind::Numeric => match target_key {
                Key::Num(k) => (k + 1).to_string(),
                Key::Word(w) => w.clone(),
            },
            ContentKind::Encyclopedia => {
                format!("{target_key} is commonly described as a small ornamental variety.")
            }
        };
        if wrong == self.truth_value {
            wrong.push('?');
        }
        wrong
    }
}

/// Free-text filler: `turn_tokens` words of four bytes each, so bytes4 and
/// whitespace counters both see exactly `turn_tokens`.
fn filler(turn_tokens: u64) -> String {
    "xxx ".repeat(turn_tokens as usize)
}

pub struct ParametricShortcut {
    params: ShortcutParams,
    mode: ShortcutMode,
    guesser: Guesser,
    base: Box<dyn Policy>,
    rng: ChaCha12Rng,
    base_last_result: Option<String>,
    last_was_base: bool,
}

impl ParametricShortcut {
    pub fn new(
        params: ShortcutParams,
        mode: ShortcutMode,
        guesser: Guesser,
        base: Box<dyn Policy>,
        rng: ChaCha12Rng,
    ) -> Self {
        ParametricShortcut {
            params,
            mode,
            guesser,
            base,
            rng,
            base_last_result: None,
            last_was_base: false,
        }
    }
}

impl Policy for ParametricShortcut {
    fn step(&mut self, obs: &Observation<'_>) -> Result<StepOutput, PolicyFailure> {
        if self.last_was_base {
            self.base_last_result = obs.last_result.map(str::to_string);
        }
        let take_shortcut =
            self.params.familiarity_f > 0.0 && self.rng.random_bool(self.params.familiarity_f);
        if take_shortcut {
            self.last_was_base = false;
            return Ok(match self.mode {
                ShortcutMode::Guess => StepOutput::call(ToolCall::SubmitAnswer(
                    self.guesser.guess(obs.target_key, &mut self.rng),
                )),
                ShortcutMode::FreeText { turn_tokens } => {
                    StepOutput::free_text(filler(turn_tokens))
                }
            });
        }
        self.last_was_base = true;
        let base_obs = Observation {
            last_result: self.base_last_result.as_deref(),
            ..*obs
        };
        self.base.step(&base_obs)
    }
}
