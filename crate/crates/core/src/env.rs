//! The tool-call environment: executes tools against a store and its index,
//! keeps the transcript, and charges tokens under full-history accounting
//! with a hard budget.
//!
//! Charging rule: appending the k-th turn costs the token size of the entire
//! transcript so far plus the new turn. A scanning agent therefore pays
//! quadratically for linear reading; that asymmetry is the object under
//! measurement, so it is implemented once here and nowhere else.

use crate::error::Error;
use crate::index::{self, DeepIndex, FlatToc};
use crate::key::Key;
use crate::store::{render_page, PageStore};
use std::sync::Arc;
use crate::Result;
use serde::{Deserialize, Serialize};
use std::fmt;

// ---------------------------------------------------------------------------
// Conditions and tools
// ---------------------------------------------------------------------------

/// Experimental condition; decides page ordering, available tools, and which
/// lookup structure `get_index` serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Condition {
    Flat,
    FlatSorted,
    Indexed,
    IndexedCorrupted,
    DeepIndexed,
}

impl Condition {
    pub const ALL: [Condition; 5] = [
        Condition::Flat,
        Condition::FlatSorted,
        Condition::Indexed,
        Condition::IndexedCorrupted,
        Condition::DeepIndexed,
    ];

    pub fn tool_allowed(&self, call: &ToolCall) -> bool {
        match call {
            ToolCall::ReadPage(_) | ToolCall::SubmitAnswer(_) => true,
            ToolCall::GetIndex => matches!(
                self,
                Condition::Indexed | Condition::IndexedCorrupted | Condition::DeepIndexed
            ),
            ToolCall::GetSectionIndex(_) => matches!(self, Condition::DeepIndexed),
        }
    }

    pub fn tool_names(&self) -> &'static str {
        match self {
            Condition::Flat | Condition::FlatSorted => "read_page, submit_answer",
            Condition::Indexed | Condition::IndexedCorrupted => {
                "read_page, get_index, submit_answer"
            }
            Condition::DeepIndexed => {
                "read_page, get_index, get_section_index, submit_answer"
            }
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Condition::Flat => "FLAT",
            Condition::FlatSorted => "FLAT_SORTED",
            Condition::Indexed => "INDEXED",
            Condition::IndexedCorrupted => "INDEXED_CORRUPTED",
            Condition::DeepIndexed => "DEEP_INDEXED",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Condition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "flat" => Ok(Condition::Flat),
            "flat_sorted" | "sorted" => Ok(Condition::FlatSorted),
            "indexed" => Ok(Condition::Indexed),
            "indexed_corrupted" | "corrupted" => Ok(Condition::IndexedCorrupted),
            "deep_indexed" | "deep" => Ok(Condition::DeepIndexed),
            other => Err(Error::InvalidConfig(format!("unknown condition {other:?}"))),
        }
    }
}

/// One tool invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ToolCall {
    ReadPage(u64),
    GetIndex,
    GetSectionIndex(u64),
    SubmitAnswer(String),
}

impl ToolCall {
    /// Canonical transcript text of a call.
    pub fn render(&self) -> String {
        match self {
            ToolCall::ReadPage(n) => format!("read_page({n})"),
            ToolCall::GetIndex => "get_index()".to_string(),
            ToolCall::GetSectionIndex(s) => format!("get_section_index({s})"),
            ToolCall::SubmitAnswer(v) => format!("submit_answer({v})"),
        }
    }
}

/// What a policy emits each step: a tool call, or free text (charged but
/// executing nothing).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AgentAction {
    Call(ToolCall),
    FreeText(String),
}

// ---------------------------------------------------------------------------
// Token accounting
// ---------------------------------------------------------------------------

/// Deterministic token counters, plus a passthrough mode for provider
/// usage reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenCounter {
    /// `ceil(byte_length / 4)`.
    Bytes4,
    /// Whitespace-delimited word count.
    Whitespace,
    /// Counts come from the remote provider's reported usage; counting text
    /// directly is an error.
    External,
}

impl TokenCounter {
    pub fn count(&self, text: &str) -> Result<u64> {
        match self {
            TokenCounter::Bytes4 => Ok((text.len() as u64).div_ceil(4)),
            TokenCounter::Whitespace => Ok(text.split_whitespace().count() as u64),
            TokenCounter::External => Err(Error::ExternalCounterWithoutProvider),
        }
    }
}

impl fmt::Display for TokenCounter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TokenCounter::Bytes4 => "bytes4",
            TokenCounter::Whitespace => "whitespace",
            TokenCounter::External => "external",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for TokenCounter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bytes4" => Ok(TokenCounter::Bytes4),
            "whitespace" => Ok(TokenCounter::Whitespace),
            "external" => Ok(TokenCounter::External),
            other => Err(Error::InvalidConfig(format!("unknown counter {other:?}"))),
        }
    }
}

/// Hard per-trial token limit (default 100,000). Crossing it aborts the
/// trial; the final charge may overshoot by its own size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenBudget {
    pub limit: u64,
    pub spent: u64,
}

impl TokenBudget {
    pub const DEFAULT_LIMIT: u64 = 100_000;

    pub fn new(limit: u64) -> Self {
        TokenBudget { limit, spent: 0 }
    }

    pub fn exhausted(&self) -> bool {
        self.spent > self.limit
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    Agent,
    Environment,
}

impl Role {
    fn tag(&self) -> &'static str {
        match self {
            Role::System => "system",
            Role::Agent => "agent",
            Role::Environment => "environment",
        }
    }
}

/// Append-only transcript with full-history charging.
#[derive(Debug, Clone)]
pub struct Transcript {
    turns: Vec<(Role, String)>,
    turn_tokens: Vec<u64>,
    cumulative_tokens: u64,
    history_tokens: u64,
    pub calls_made: u64,
    pub data_page_reads: u64,
}

impl Transcript {
    pub fn new() -> Self {
        Transcript {
            turns: Vec::new(),
            turn_tokens: Vec::new(),
            cumulative_tokens: 0,
            history_tokens: 0,
            calls_made: 0,
            data_page_reads: 0,
        }
    }

    /// Appends a turn and charges it: the charge is the token size of the
    /// entire transcript so far plus the new turn. Returns the updated
    /// cumulative charge.
    pub fn charge_and_append(&mut self, counter: TokenCounter, role: Role, text: String) -> Result<u64> {
        let turn = counter.count(&text)?;
        self.charge_reported_and_append(role, text, self.history_tokens + turn, turn)
    }

    /// External-counter variant: the caller supplies the charge (provider
    /// usage) and the turn's own size for history growth.
    pub fn charge_reported_and_append(
        &mut self,
        role: Role,
        text: String,
        charge: u64,
        turn_tokens: u64,
    ) -> Result<u64> {
        self.turns.push((role, text));
        self.turn_tokens.push(turn_tokens);
        self.history_tokens += turn_tokens;
        self.cumulative_tokens += charge;
        Ok(self.cumulative_tokens)
    }

    pub fn cumulative_tokens(&self) -> u64 {
        self.cumulative_tokens
    }

    /// Token size of the transcript text itself (the prefix every new turn
    /// pays for again).
    pub fn history_tokens(&self) -> u64 {
        self.history_tokens
    }

    pub fn turns(&self) -> &[(Role, String)] {
        &self.turns
    }

    /// Canonical serialization, hashed into the trial's transcript digest.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        for (role, text) in &self.turns {
            out.push_str(role.tag());
            out.push('\t');
            out.push_str(text);
            out.push('\n');
        }
        out
    }
}

impl Default for Transcript {
    fn default() -> Self {
        Self::new()
    }
}

// ---------------------------------------------------------------------------
// Environment
// ---------------------------------------------------------------------------

/// How a trial ended.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Answered { correct: bool },
    BudgetExhausted,
    MaxSteps,
    ProtocolFailure,
    InfrastructureError,
}

/// The environment's reply to one agent action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    /// Tool result text (None for free text and for the terminal submit).
    pub result: Option<String>,
    /// Set when the action ended the trial.
    pub termination: Option<Termination>,
}

pub const RESULT_TOOL_NOT_AVAILABLE: &str = "tool not available";

/// Per-trial tool executor and accountant. One instance per trial; mutation
/// is single-owner, so distinct trials run concurrently without sharing.
pub struct Environment {
    condition: Condition,
    store: Arc<PageStore>,
    flat_toc: Option<FlatToc>,
    deep: Option<DeepIndex>,
    target_key: Key,
    target_value: String,
    counter: TokenCounter,
    budget: TokenBudget,
    max_steps: u64,
    steps: u64,
    transcript: Transcript,
    preamble_tokens: u64,
    termination: Option<Termination>,
}

impl Environment {
    /// Builds the environment and charges the system preamble as the first
    /// transcript turn, so every later charge includes it as history.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        condition: Condition,
        store: Arc<PageStore>,
        flat_toc: Option<FlatToc>,
        deep: Option<DeepIndex>,
        target_key: Key,
        target_value: String,
        counter: TokenCounter,
        budget_limit: u64,
        max_steps: u64,
    ) -> Result<Self> {
        // Kept deliberately small: it is charged into every call's history,
        // so it is pure constant overhead on the token-shape measurements.
        // Store shape and tool availability reach policies via observations;
        // the remote adapter sends its own full instruction prompt.
        let preamble = format!("CONDITION {condition}. TARGET KEY {target_key}.");
        let mut env = Environment {
            condition,
            store,
            flat_toc,
            deep,
            target_key,
            target_value,
            counter,
            budget: TokenBudget::new(budget_limit),
            max_steps,
            steps: 0,
            transcript: Transcript::new(),
            preamble_tokens: 0,
            termination: None,
        };
        let preamble_tokens = match counter {
            // The remote provider's usage covers the preamble; charge it as
            // zero-cost history in external mode.
            TokenCounter::External => 0,
            _ => counter.count(&preamble)?,
        };
        env.preamble_tokens = preamble_tokens;
        env.budget.spent = env.transcript.charge_reported_and_append(
            Role::System,
            preamble,
            preamble_tokens,
            preamble_tokens,
        )?;
        if env.budget.exhausted() {
            env.termination = Some(Termination::BudgetExhausted);
        }
        Ok(env)
    }

    pub fn condition(&self) -> Condition {
        self.condition
    }

    pub fn store(&self) -> &PageStore {
        &self.store
    }

    pub fn target_key(&self) -> &Key {
        &self.target_key
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn budget(&self) -> TokenBudget {
        self.budget
    }

    pub fn preamble_tokens(&self) -> u64 {
        self.preamble_tokens
    }

    pub fn terminated(&self) -> Option<&Termination> {
        self.termination.as_ref()
    }

    /// Forces a terminal state from outside the tool loop (adapter protocol
    /// or transport failures).
    pub fn terminate(&mut self, t: Termination) {
        if self.termination.is_none() {
            self.termination = Some(t);
        }
    }

    fn charge(&mut self, role: Role, text: String, reported: Option<u64>) -> Result<()> {
        let cumulative = match (self.counter, reported) {
            (TokenCounter::External, Some(usage)) => {
                let turn = (text.len() as u64).div_ceil(4);
                self.transcript
                    .charge_reported_and_append(role, text, usage, turn)?
            }
            (TokenCounter::External, None) => return Err(Error::ExternalCounterWithoutProvider),
            _ => self.transcript.charge_and_append(self.counter, role, text)?,
        };
        self.budget.spent = cumulative;
        Ok(())
    }

    /// Applies one agent action: charges the agent turn, executes the tool
    /// (if any), charges the result, and enforces budget and step cap.
    ///
    /// `reported_tokens` carries provider usage for the step in external
    /// counter mode; deterministic policies pass `None`.
    pub fn apply(&mut self, action: &AgentAction, reported_tokens: Option<u64>) -> Result<StepOutcome> {
        debug_assert!(self.termination.is_none(), "apply called on finished trial");
        self.steps += 1;

        let agent_text = match action {
            AgentAction::Call(call) => call.render(),
            AgentAction::FreeText(t) => t.clone(),
        };
        self.charge(Role::Agent, agent_text, reported_tokens)?;
        if self.budget.exhausted() {
            self.termination = Some(Termination::BudgetExhausted);
            return Ok(StepOutcome {
                result: None,
                termination: self.termination.clone(),
            });
        }

        let mut outcome = StepOutcome {
            result: None,
            termination: None,
        };

        if let AgentAction::Call(call) = action {
            self.transcript.calls_made += 1;
            match self.execute(call) {
                Executed::Submitted(answer) => {
                    let correct = answer.trim() == self.target_value;
                    self.termination = Some(Termination::Answered { correct });
                    outcome.termination = self.termination.clone();
                    return Ok(outcome);
                }
                Executed::Result(text) => {
                    // Result turns carry no separate provider usage; in
                    // external mode they enter history at bytes4 size and the
                    // next call's reported usage covers them.
                    let reported_result = match self.counter {
                        TokenCounter::External => Some(0),
                        _ => None,
                    };
                    self.charge(Role::Environment, text.clone(), reported_result)?;
                    if self.budget.exhausted() {
                        self.termination = Some(Termination::BudgetExhausted);
                        outcome.termination = self.termination.clone();
                        return Ok(outcome);
                    }
                    outcome.result = Some(text);
                }
            }
        }

        if self.steps >= self.max_steps {
            self.termination = Some(Termination::MaxSteps);
            outcome.termination = self.termination.clone();
        }
        Ok(outcome)
    }

    /// Tool dispatch. Disallowed tools and out-of-range arguments come back
    /// as charged error text; the trial continues.
    fn execute(&mut self, call: &ToolCall) -> Executed {
        if !self.condition.tool_allowed(call) {
            return Executed::Result(RESULT_TOOL_NOT_AVAILABLE.to_string());
        }
        match call {
            ToolCall::SubmitAnswer(v) => Executed::Submitted(v.clone()),
            ToolCall::ReadPage(n) => match render_page(&self.store, *n) {
                Ok(text) => {
                    self.transcript.data_page_reads += 1;
                    Executed::Result(text.to_string())
                }
                Err(e) => Executed::Result(e.to_string()),
            },
            ToolCall::GetIndex => match self.condition {
                Condition::DeepIndexed => Executed::Result(index::render_master(
                    self.deep.as_ref().expect("deep index built for condition"),
                )),
                _ => Executed::Result(index::render_flat_toc(
                    self.flat_toc.as_ref().expect("flat toc built for condition"),
                )),
            },
            ToolCall::GetSectionIndex(s) => {
                let deep = self.deep.as_ref().expect("deep index built for condition");
                match index::render_section_toc(deep, *s) {
                    Ok(text) => Executed::Result(text),
                    Err(e) => Executed::Result(e.to_string()),
                }
            }
        }
    }
}

enum Executed {
    Submitted(String),
    Result(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::build_flat_toc;
    use crate::store::{generate_items, paginate, ContentKind, ContentSpec, PageOrdering};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    fn numeric_env(condition: Condition, m: u64, budget: u64) -> Environment {
        let items =
            generate_items(&ContentSpec::new(ContentKind::Numeric), m, &mut rng(1)).unwrap();
        let ordering = match condition {
            Condition::Flat => PageOrdering::Random,
            _ => PageOrdering::Sorted,
        };
        let store = paginate(ContentKind::Numeric, items, 10, 10, ordering, &mut rng(2)).unwrap();
        let flat_toc = match condition {
            Condition::Indexed | Condition::IndexedCorrupted => {
                Some(build_flat_toc(&store).unwrap())
            }
            _ => None,
        };
        let deep = match condition {
            Condition::DeepIndexed => Some(crate::index::build_deep_index(&store, 10).unwrap()),
            _ => None,
        };
        Environment::new(
            condition,
            Arc::new(store),
            flat_toc,
            deep,
            Key::Num(1),
            "1".to_string(),
            TokenCounter::Bytes4,
            budget,
            200,
        )
        .unwrap()
    }

    #[test]
    fn token_counter_modes() {
        assert_eq!(TokenCounter::Bytes4.count("").unwrap(), 0);
        assert_eq!(TokenCounter::Bytes4.count("abcd").unwrap(), 1);
        assert_eq!(TokenCounter::Bytes4.count("abcde").unwrap(), 2);
        assert_eq!(TokenCounter::Whitespace.count("").unwrap(), 0);
        assert_eq!(TokenCounter::Whitespace.count("two words").unwrap(), 2);
        assert!(matches!(
            TokenCounter::External.count("x"),
            Err(Error::ExternalCounterWithoutProvider)
        ));
    }

    #[test]
    fn charge_is_full_history() {
        let mut t = Transcript::new();
        // First turn of t tokens charges t.
        let turn = "x".repeat(40); // 10 tokens
        let c1 = t
            .charge_and_append(TokenCounter::Bytes4, Role::Agent, turn.clone())
            .unwrap();
        assert_eq!(c1, 10);
        // Second identical turn charges history + turn = 2t; total 3t.
        let c2 = t
            .charge_and_append(TokenCounter::Bytes4, Role::Agent, turn)
            .unwrap();
        assert_eq!(c2, 30);
    }

    #[test]
    fn quadratic_accumulation_closed_form() {
        // k turns of t tokens each must total t * k(k+1)/2 exactly.
        let (k, tok) = (40u64, 12u64);
        let mut t = Transcript::new();
        let turn = "y".repeat((tok * 4) as usize);
        let mut total = 0;
        for _ in 0..k {
            total = t
                .charge_and_append(TokenCounter::Bytes4, Role::Agent, turn.clone())
                .unwrap();
        }
        assert_eq!(total, tok * k * (k + 1) / 2);
    }

    #[test]
    fn tool_gating_by_condition() {
        let mut env = numeric_env(Condition::Flat, 10, 100_000);
        let out = env
            .apply(&AgentAction::Call(ToolCall::GetIndex), None)
            .unwrap();
        assert_eq!(out.result.as_deref(), Some(RESULT_TOOL_NOT_AVAILABLE));
        assert!(out.termination.is_none());

        let out = env
            .apply(&AgentAction::Call(ToolCall::GetSectionIndex(1)), None)
            .unwrap();
        assert_eq!(out.result.as_deref(), Some(RESULT_TOOL_NOT_AVAILABLE));

        // Gated tools never leak page or index content.
        let mut env = numeric_env(Condition::Indexed, 10, 100_000);
        let out = env
            .apply(&AgentAction::Call(ToolCall::GetSectionIndex(1)), None)
            .unwrap();
        assert_eq!(out.result.as_deref(), Some(RESULT_TOOL_NOT_AVAILABLE));
    }

    #[test]
    fn read_page_returns_rendered_page_and_counts_reads() {
        let mut env = numeric_env(Condition::Indexed, 10, 100_000);
        let out = env
            .apply(&AgentAction::Call(ToolCall::ReadPage(1)), None)
            .unwrap();
        assert!(out.result.unwrap().contains("Item 1: 1"));
        assert_eq!(env.transcript().data_page_reads, 1);
        assert_eq!(env.transcript().calls_made, 1);

        let out = env
            .apply(&AgentAction::Call(ToolCall::ReadPage(99)), None)
            .unwrap();
        assert!(out.result.unwrap().contains("page out of range"));
        assert_eq!(env.transcript().data_page_reads, 1, "failed read not counted");
    }

    #[test]
    fn submit_terminates_with_exact_match_after_trim() {
        let mut env = numeric_env(Condition::Flat, 10, 100_000);
        let out = env
            .apply(
                &AgentAction::Call(ToolCall::SubmitAnswer("  1 ".into())),
                None,
            )
            .unwrap();
        assert_eq!(out.termination, Some(Termination::Answered { correct: true }));

        let mut env = numeric_env(Condition::Flat, 10, 100_000);
        let out = env
            .apply(&AgentAction::Call(ToolCall::SubmitAnswer("01".into())), None)
            .unwrap();
        assert_eq!(
            out.termination,
            Some(Termination::Answered { correct: false })
        );
    }

    #[test]
    fn budget_aborts_exactly_when_crossed() {
        let mut env = numeric_env(Condition::Flat, 100, 400);
        let mut terminated = None;
        for n in 1..=100 {
            let before = env.budget().spent;
            assert!(before <= env.budget().limit, "live trial over budget");
            let out = env
                .apply(&AgentAction::Call(ToolCall::ReadPage(n)), None)
                .unwrap();
            if let Some(t) = out.termination {
                terminated = Some(t);
                break;
            }
        }
        assert_eq!(terminated, Some(Termination::BudgetExhausted));
        assert!(env.budget().exhausted());
    }

    #[test]
    fn free_text_is_charged_but_executes_nothing() {
        let mut env = numeric_env(Condition::Flat, 10, 100_000);
        let before = env.budget().spent;
        let out = env
            .apply(&AgentAction::FreeText("musing instead of acting".into()), None)
            .unwrap();
        assert!(out.result.is_none());
        assert!(out.termination.is_none());
        assert!(env.budget().spent > before);
        assert_eq!(env.transcript().calls_made, 0);
    }

    #[test]
    fn max_steps_cap_terminates() {
        let items =
            generate_items(&ContentSpec::new(ContentKind::Numeric), 10, &mut rng(1)).unwrap();
        let store = paginate(
            ContentKind::Numeric,
            items,
            10,
            10,
            PageOrdering::Random,
            &mut rng(2),
        )
        .unwrap();
        let mut env = Environment::new(
            Condition::Flat,
            Arc::new(store),
            None,
            None,
            Key::Num(1),
            "1".into(),
            TokenCounter::Bytes4,
            100_000,
            3,
        )
        .unwrap();
        for _ in 0..2 {
            let out = env
                .apply(&AgentAction::Call(ToolCall::ReadPage(1)), None)
                .unwrap();
            assert!(out.termination.is_none());
        }
        let out = env
            .apply(&AgentAction::Call(ToolCall::ReadPage(1)), None)
            .unwrap();
        assert_eq!(out.termination, Some(Termination::MaxSteps));
    }

    #[test]
    fn deep_condition_serves_master_toc() {
        let mut env = numeric_env(Condition::DeepIndexed, 200, 100_000);
        let out = env
            .apply(&AgentAction::Call(ToolCall::GetIndex), None)
            .unwrap();
        let text = out.result.unwrap();
        assert!(text.starts_with("MASTER INDEX (2 sections)"));
        let out = env
            .apply(&AgentAction::Call(ToolCall::GetSectionIndex(2)), None)
            .unwrap();
        assert!(out.result.unwrap().starts_with("SECTION 2 INDEX"));
        let out = env
            .apply(&AgentAction::Call(ToolCall::GetSectionIndex(9)), None)
            .unwrap();
        assert!(out.result.unwrap().contains("section out of range"));
    }
}
