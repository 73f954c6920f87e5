//! Trial execution, sweep orchestration, grow mode, and aggregation.
//!
//! Every trial is reproducible from its config: the master seed is a hash of
//! (condition, content, M, P, policy, trial index), and each consumer of
//! randomness (item generation, page shuffle, corruption, target pick,
//! policy) draws from its own labeled stream. Reruns are byte-identical for
//! non-remote policies regardless of parallelism.

use crate::agents::{
    BinarySearch, CorruptedFallback, DeepTraversal, FlatTocTraversal, Guesser, LinearScan,
    Observation, ParametricShortcut, Policy, PolicyFailure, RemoteConfig, RemotePolicy,
    ShortcutMode, ShortcutParams, UniformProbe,
};
use crate::env::{Condition, Environment, Termination, TokenBudget, TokenCounter};
use crate::error::Error;
use crate::index::{build_deep_index, build_flat_toc, corrupt_toc, locate_page, FlatToc, IndexEntry};
use crate::key::Key;
use crate::store::{self, ContentKind, ContentSpec, PageOrdering, PageStore};
use crate::theory::{self, cost_to_f64, AccumulationShape, StoreShape};
use crate::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::sync::Arc;

pub const DEFAULT_MAX_STEPS: u64 = 200;

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

/// Policy id plus string parameters (`p_err`, `f`, `mode`, ...).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, String>,
}

impl PolicySpec {
    pub fn new(id: &str) -> Self {
        PolicySpec {
            id: id.to_string(),
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: &str) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    /// Parses `id[;k=v]*` (the sweep-file form).
    pub fn parse(text: &str) -> Result<Self> {
        let mut parts = text.split(';');
        let id = parts.next().unwrap_or("").trim();
        if id.is_empty() {
            return Err(Error::InvalidConfig("empty policy id".into()));
        }
        let mut spec = PolicySpec::new(id);
        for part in parts {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("bad policy param {part:?}")))?;
            spec.params.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(spec)
    }

    /// Stable cell label, e.g. `binary_search(p_err=0.3)`. Parameters are
    /// joined with ';' so the label stays a single CSV field.
    pub fn label(&self) -> String {
        if self.params.is_empty() {
            self.id.clone()
        } else {
            let params: Vec<String> = self
                .params
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            format!("{}({})", self.id, params.join(";"))
        }
    }

    fn param_f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("param {key}={v:?} is not a number"))),
        }
    }

    fn param_u64(&self, key: &str, default: u64) -> Result<u64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("param {key}={v:?} is not an integer"))),
        }
    }
}

/// The oracle policy conventionally paired with each condition.
pub fn auto_policy(condition: Condition) -> &'static str {
    match condition {
        Condition::Flat => "uniform_probe",
        Condition::FlatSorted => "binary_search",
        Condition::Indexed => "flat_toc",
        Condition::IndexedCorrupted => "corrupted_fallback",
        Condition::DeepIndexed => "deep_traversal",
    }
}

/// Full description of one trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialConfig {
    pub condition: Condition,
    pub content: ContentSpec,
    pub m: u64,
    pub p: u64,
    pub s: u64,
    pub policy: PolicySpec,
    pub trial_index: u64,
    pub budget: u64,
    pub counter: TokenCounter,
    pub max_steps: u64,
    #[serde(default)]
    pub log_wire: bool,
}

impl TrialConfig {
    pub fn new(condition: Condition, kind: ContentKind, m: u64, policy: PolicySpec) -> Self {
        TrialConfig {
            condition,
            content: ContentSpec::new(kind),
            m,
            p: 10,
            s: 10,
            policy,
            trial_index: 0,
            budget: TokenBudget::DEFAULT_LIMIT,
            counter: TokenCounter::Bytes4,
            max_steps: DEFAULT_MAX_STEPS,
            log_wire: false,
        }
    }

    pub fn shape(&self) -> Result<StoreShape> {
        StoreShape::new(self.m, self.p, self.s)
    }

    /// Rejects impossible configs before any store is built.
    pub fn validate(&self) -> Result<()> {
        let shape = self.shape()?;
        if self.condition == Condition::IndexedCorrupted && shape.page_count_n < 2 {
            return Err(Error::InvalidConfig(
                "INDEXED_CORRUPTED needs at least 2 pages (no derangement of 1)".into(),
            ));
        }
        if self.content.kind == ContentKind::Hash && self.m > 9000 {
            return Err(Error::InvalidConfig(
                "hash content supports at most 9000 items (distinct 4-digit keys)".into(),
            ));
        }
        if self.counter == TokenCounter::External && self.policy.id != "remote" {
            return Err(Error::InvalidConfig(
                "external token counting requires the remote policy".into(),
            ));
        }
        if self.max_steps < 1 {
            return Err(Error::InvalidConfig("max_steps must be >= 1".into()));
        }
        let known = [
            "linear_scan",
            "uniform_probe",
            "binary_search",
            "flat_toc",
            "deep_traversal",
            "corrupted_fallback",
            "shortcut",
            "remote",
        ];
        if !known.contains(&self.policy.id.as_str()) {
            return Err(Error::InvalidConfig(format!(
                "unknown policy {:?} (known: {})",
                self.policy.id,
                known.join(", ")
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Seeding
// ---------------------------------------------------------------------------

/// Master seed for one trial, with labeled sub-streams so adding a consumer
/// never shifts another's randomness.
#[derive(Debug, Clone, Copy)]
pub struct TrialSeed {
    master: [u8; 32],
}

impl TrialSeed {
    pub fn derive(cfg: &TrialConfig) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(b"pagebench.trial.v1|");
        hasher.update(cfg.condition.to_string().as_bytes());
        hasher.update(b"|");
        hasher.update(cfg.content.kind.to_string().as_bytes());
        hasher.update(b"|");
        hasher.update(cfg.m.to_le_bytes());
        hasher.update(cfg.p.to_le_bytes());
        hasher.update(cfg.s.to_le_bytes());
        hasher.update(cfg.policy.label().as_bytes());
        hasher.update(b"|");
        hasher.update(cfg.trial_index.to_le_bytes());
        TrialSeed {
            master: hasher.finalize().into(),
        }
    }

    pub fn rng(&self, stream: &str) -> ChaCha12Rng {
        let mut hasher = Sha256::new();
        hasher.update(self.master);
        hasher.update(stream.as_bytes());
        ChaCha12Rng::from_seed(hasher.finalize().into())
    }
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

/// Per-trial metrics with a full config echo; one JSONL line each.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialResult {
    pub condition: Condition,
    pub content: ContentKind,
    pub m: u64,
    pub p: u64,
    pub s: u64,
    pub policy: String,
    pub trial_index: u64,
    pub budget: u64,
    pub counter: TokenCounter,
    pub data_page_reads: u64,
    pub tool_calls: u64,
    pub tokens: u64,
    pub correct: bool,
    pub budget_exhausted: bool,
    pub infrastructure_error: bool,
    pub termination: Termination,
    pub transcript_digest: String,
    pub preamble_tokens: u64,
}

fn digest_hex(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

// ---------------------------------------------------------------------------
// Trial execution
// ---------------------------------------------------------------------------

/// Store, index, and target for one trial, built deterministically from the
/// config. Exposed so tests can override the target before execution.
#[derive(Clone)]
pub struct PreparedTrial {
    pub store: Arc<PageStore>,
    pub flat_toc: Option<FlatToc>,
    pub deep: Option<crate::index::DeepIndex>,
    pub target_key: Key,
    pub target_value: String,
}

pub fn prepare_trial(cfg: &TrialConfig) -> Result<PreparedTrial> {
    cfg.validate()?;
    let seed = TrialSeed::derive(cfg);

    let items = store::generate_items(&cfg.content, cfg.m, &mut seed.rng("items"))?;
    let ordering = match cfg.condition {
        Condition::Flat => PageOrdering::Random,
        _ => PageOrdering::Sorted,
    };
    let page_store = store::paginate(
        cfg.content.kind,
        items,
        cfg.p,
        cfg.s,
        ordering,
        &mut seed.rng("pages"),
    )?;

    let flat_toc = match cfg.condition {
        Condition::Indexed => Some(build_flat_toc(&page_store)?),
        Condition::IndexedCorrupted => Some(corrupt_toc(
            &build_flat_toc(&page_store)?,
            &mut seed.rng("corrupt"),
        )?),
        _ => None,
    };
    let deep = match cfg.condition {
        Condition::DeepIndexed => Some(build_deep_index(&page_store, cfg.s)?),
        _ => None,
    };

    let (target_key, target_value) = store::pick_target(&page_store, &mut seed.rng("target"));
    Ok(PreparedTrial {
        store: Arc::new(page_store),
        flat_toc,
        deep,
        target_key,
        target_value,
    })
}

fn build_policy(cfg: &TrialConfig, prepared: &PreparedTrial) -> Result<Box<dyn Policy>> {
    let seed = TrialSeed::derive(cfg);
    build_policy_spec(cfg, &cfg.policy, prepared, &seed)
}

fn build_policy_spec(
    cfg: &TrialConfig,
    spec: &PolicySpec,
    prepared: &PreparedTrial,
    seed: &TrialSeed,
) -> Result<Box<dyn Policy>> {
    match spec.id.as_str() {
        "linear_scan" => Ok(Box::new(LinearScan::new())),
        "uniform_probe" => Ok(Box::new(UniformProbe::new(seed.rng("policy")))),
        "binary_search" => {
            let p_err = spec.param_f64("p_err", 0.0)?;
            if !(0.0..=1.0).contains(&p_err) {
                return Err(Error::InvalidConfig(format!(
                    "p_err must be in [0, 1], got {p_err}"
                )));
            }
            Ok(Box::new(BinarySearch::new(p_err, seed.rng("policy"))))
        }
        "flat_toc" => Ok(Box::new(FlatTocTraversal::new())),
        "deep_traversal" => Ok(Box::new(DeepTraversal::new())),
        "corrupted_fallback" => Ok(Box::new(CorruptedFallback::new())),
        "shortcut" => {
            let f = spec.param_f64("f", 0.0)?;
            let accuracy = spec.param_f64(
                "hallucination_accuracy",
                ShortcutParams::default_accuracy(cfg.content.kind),
            )?;
            let params = ShortcutParams::new(f, accuracy)?;
            let mode = match spec.params.get("mode").map(String::as_str) {
                None | Some("guess") => ShortcutMode::Guess,
                Some("free_text") => ShortcutMode::FreeText {
                    turn_tokens: spec.param_u64("turn_tokens", 500)?,
                },
                Some(other) => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown shortcut mode {other:?} (guess, free_text)"
                    )))
                }
            };
            let base_id = spec
                .params
                .get("base")
                .cloned()
                .unwrap_or_else(|| auto_policy(cfg.condition).to_string());
            if base_id == "shortcut" {
                return Err(Error::InvalidConfig("shortcut cannot wrap itself".into()));
            }
            let base = build_policy_spec(cfg, &PolicySpec::new(&base_id), prepared, seed)?;
            let guesser = Guesser::new(
                cfg.content.kind,
                prepared.target_value.clone(),
                params.hallucination_accuracy,
            );
            Ok(Box::new(ParametricShortcut::new(
                params,
                mode,
                guesser,
                base,
                seed.rng("shortcut"),
            )))
        }
        "remote" => {
            let mut remote_cfg = RemoteConfig::from_env()?;
            remote_cfg.max_retries = spec.param_u64("retries", 2)? as u32;
            remote_cfg.log_wire = cfg.log_wire;
            Ok(Box::new(RemotePolicy::new(remote_cfg)?))
        }
        other => Err(Error::InvalidConfig(format!("unknown policy {other:?}"))),
    }
}

/// Runs a prepared trial with an explicit policy. Used directly by tests
/// that force a target; everything else goes through [`run_trial`].
pub fn execute_trial(
    cfg: &TrialConfig,
    prepared: PreparedTrial,
    mut policy: Box<dyn Policy>,
) -> Result<TrialResult> {
    let shape = prepared.store.shape();
    let mut env = Environment::new(
        cfg.condition,
        prepared.store,
        prepared.flat_toc,
        prepared.deep,
        prepared.target_key,
        prepared.target_value,
        cfg.counter,
        cfg.budget,
        cfg.max_steps,
    )?;

    let mut last_result: Option<String> = None;
    let termination = loop {
        if let Some(t) = env.terminated() {
            break t.clone();
        }
        let obs = Observation {
            last_result: last_result.as_deref(),
            calls_made: env.transcript().calls_made,
            condition: cfg.condition,
            shape,
            target_key: env.target_key(),
        };
        let step = match policy.step(&obs) {
            Ok(step) => step,
            Err(PolicyFailure::Protocol(_)) => {
                env.terminate(Termination::ProtocolFailure);
                break Termination::ProtocolFailure;
            }
            Err(PolicyFailure::Infrastructure(_)) => {
                env.terminate(Termination::InfrastructureError);
                break Termination::InfrastructureError;
            }
        };
        let outcome = match env.apply(&step.action, step.reported_tokens) {
            Ok(outcome) => outcome,
            Err(Error::ExternalCounterWithoutProvider) => {
                env.terminate(Termination::InfrastructureError);
                break Termination::InfrastructureError;
            }
            Err(e) => return Err(e),
        };
        if let Some(t) = outcome.termination {
            break t;
        }
        last_result = outcome.result;
    };

    let transcript = env.transcript();
    Ok(TrialResult {
        condition: cfg.condition,
        content: cfg.content.kind,
        m: cfg.m,
        p: cfg.p,
        s: cfg.s,
        policy: cfg.policy.label(),
        trial_index: cfg.trial_index,
        budget: cfg.budget,
        counter: cfg.counter,
        data_page_reads: transcript.data_page_reads,
        tool_calls: transcript.calls_made,
        tokens: transcript.cumulative_tokens(),
        correct: matches!(termination, Termination::Answered { correct: true }),
        budget_exhausted: matches!(termination, Termination::BudgetExhausted),
        infrastructure_error: matches!(termination, Termination::InfrastructureError),
        termination,
        transcript_digest: digest_hex(&env.transcript().canonical_text()),
        preamble_tokens: env.preamble_tokens(),
    })
}

/// Builds the trial from its seed, picks the target, and runs the policy
/// loop to termination. Fully deterministic for non-remote policies.
pub fn run_trial(cfg: &TrialConfig) -> Result<TrialResult> {
    let prepared = prepare_trial(cfg)?;
    let policy = build_policy(cfg, &prepared)?;
    execute_trial(cfg, prepared, policy)
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// Declarative sweep: the cartesian product of conditions, contents, store
/// sizes, and policies, at a fixed P/S/budget.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub conditions: Vec<Condition>,
    pub contents: Vec<ContentSpec>,
    pub ms: Vec<u64>,
    pub p: u64,
    pub s: u64,
    pub policies: Vec<PolicySpec>,
    /// Trials per cell; None applies the per-cell default.
    pub trials: Option<u64>,
    pub budget: u64,
    pub counter: TokenCounter,
    pub seed_offset: u64,
    pub max_steps: u64,
    #[serde(default)]
    pub log_wire: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            conditions: vec![Condition::Flat, Condition::Indexed],
            contents: vec![ContentSpec::new(ContentKind::Hash)],
            ms: vec![50, 100, 200, 500],
            p: 10,
            s: 10,
            policies: vec![PolicySpec::new("auto")],
            trials: None,
            budget: TokenBudget::DEFAULT_LIMIT,
            counter: TokenCounter::Bytes4,
            seed_offset: 0,
            max_steps: DEFAULT_MAX_STEPS,
            log_wire: false,
        }
    }
}

/// Trials per cell when unspecified: 30 for the sorted condition, 20 for
/// large stores, 50 otherwise.
pub fn default_trials(condition: Condition, m: u64) -> u64 {
    if condition == Condition::FlatSorted {
        30
    } else if m >= 1000 {
        20
    } else {
        50
    }
}

impl SweepSpec {
    /// Expands the sweep into per-trial configs in deterministic cell order.
    pub fn trial_configs(&self) -> Result<Vec<TrialConfig>> {
        if self.conditions.is_empty()
            || self.contents.is_empty()
            || self.ms.is_empty()
            || self.policies.is_empty()
        {
            return Err(Error::InvalidConfig("empty sweep grid".into()));
        }
        let mut configs = Vec::new();
        for condition in &self.conditions {
            for content in &self.contents {
                for &m in &self.ms {
                    for policy in &self.policies {
                        let policy = if policy.id == "auto" {
                            let mut resolved = policy.clone();
                            resolved.id = auto_policy(*condition).to_string();
                            resolved
                        } else {
                            policy.clone()
                        };
                        let trials = self.trials.unwrap_or(default_trials(*condition, m));
                        for t in 0..trials {
                            let cfg = TrialConfig {
                                condition: *condition,
                                content: content.clone(),
                                m,
                                p: self.p,
                                s: self.s,
                                policy: policy.clone(),
                                trial_index: self.seed_offset + t,
                                budget: self.budget,
                                counter: self.counter,
                                max_steps: self.max_steps,
                                log_wire: self.log_wire,
                            };
                            cfg.validate()?;
                            configs.push(cfg);
                        }
                    }
                }
            }
        }
        Ok(configs)
    }
}

/// Runs every trial of a sweep (in parallel for non-remote policies; remote
/// sweeps run serially to keep one in-flight request per endpoint) and
/// returns results in deterministic (cell, trial) order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<TrialResult>> {
    let configs = spec.trial_configs()?;
    let remote = configs.iter().any(|c| c.policy.id == "remote");
    if remote {
        configs.iter().map(run_trial).collect()
    } else {
        configs.par_iter().map(run_trial).collect()
    }
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

/// Identity of one summary cell.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub condition: String,
    pub content: String,
    pub m: u64,
    pub p: u64,
    pub policy: String,
}

/// Aggregated metrics of one cell; None when the cell has no scorable
/// (non-infrastructure-error) trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub median_r: f64,
    pub iqr_lo_r: f64,
    pub iqr_hi_r: f64,
    pub median_tok: f64,
    pub iqr_lo_tok: f64,
    pub iqr_hi_tok: f64,
    pub accuracy_pct: f64,
    pub exhausted_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub key: CellKey,
    pub n_trials: u64,
    pub infrastructure_errors: u64,
    pub stats: Option<CellStats>,
    /// Expected sequential data-page reads, (N+1)/2.
    pub predicted_r: f64,
    /// Total page-read bound through a b-ary index with b = S.
    pub predicted_bound: u64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Summary {
    pub cells: Vec<CellSummary>,
}

/// Median with the standard even-count rule (mean of the middle two).
pub fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "median of empty slice");
    if n.is_multiple_of(2) {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    } else {
        sorted[n / 2]
    }
}

/// Percentile by lower interpolation: the sorted value at
/// `floor(q * (n - 1))`.
pub fn percentile_lower(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "percentile of empty slice");
    let idx = ((n - 1) as f64 * q).floor() as usize;
    sorted[idx]
}

/// Groups results into cells and computes median/IQR of reads and tokens,
/// accuracy, and budget-exhaustion rate. Infrastructure-error trials count
/// toward `n_trials` but are excluded from every statistic.
pub fn aggregate(results: &[TrialResult]) -> Summary {
    let mut groups: BTreeMap<CellKey, Vec<&TrialResult>> = BTreeMap::new();
    for r in results {
        let key = CellKey {
            condition: r.condition.to_string(),
            content: r.content.to_string(),
            m: r.m,
            p: r.p,
            policy: r.policy.clone(),
        };
        groups.entry(key).or_default().push(r);
    }

    let cells = groups
        .into_iter()
        .map(|(key, trials)| {
            let (p, s) = (trials[0].p, trials[0].s);
            let shape = StoreShape::new(key.m, p, s).expect("echoed config was validated");
            let predicted_r = cost_to_f64(theory::predicted_flat_reads(&shape));
            let predicted_bound = theory::indexed_cost_bound(shape.page_count_n, s.max(2));

            let scorable: Vec<&&TrialResult> =
                trials.iter().filter(|t| !t.infrastructure_error).collect();
            let stats = if scorable.is_empty() {
                None
            } else {
                let mut reads: Vec<f64> =
                    scorable.iter().map(|t| t.data_page_reads as f64).collect();
                let mut toks: Vec<f64> = scorable.iter().map(|t| t.tokens as f64).collect();
                reads.sort_by(|a, b| a.total_cmp(b));
                toks.sort_by(|a, b| a.total_cmp(b));
                let n = scorable.len() as f64;
                let correct = scorable.iter().filter(|t| t.correct).count() as f64;
                let exhausted = scorable.iter().filter(|t| t.budget_exhausted).count() as f64;
                Some(CellStats {
                    median_r: median(&reads),
                    iqr_lo_r: percentile_lower(&reads, 0.25),
                    iqr_hi_r: percentile_lower(&reads, 0.75),
                    median_tok: median(&toks),
                    iqr_lo_tok: percentile_lower(&toks, 0.25),
                    iqr_hi_tok: percentile_lower(&toks, 0.75),
                    accuracy_pct: 100.0 * correct / n,
                    exhausted_pct: 100.0 * exhausted / n,
                })
            };
            CellSummary {
                key,
                n_trials: trials.len() as u64,
                infrastructure_errors: (trials.len() - scorable.len()) as u64,
                stats,
                predicted_r,
                predicted_bound,
            }
        })
        .collect();
    Summary { cells }
}

// ---------------------------------------------------------------------------
// Grow mode
// ---------------------------------------------------------------------------

/// How grow-mode retrievals are performed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowAccess {
    /// Uniform probing over all pages, simulated at page level.
    Sequential,
    /// Rebuild the flat TOC each step, then traverse it (one data read).
    IndexedRebuild,
}

impl std::str::FromStr for GrowAccess {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "sequential" => Ok(GrowAccess::Sequential),
            "indexed-rebuild" | "indexed" => Ok(GrowAccess::IndexedRebuild),
            other => Err(Error::InvalidConfig(format!("unknown grow access {other:?}"))),
        }
    }
}

impl std::fmt::Display for GrowAccess {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GrowAccess::Sequential => f.write_str("sequential"),
            GrowAccess::IndexedRebuild => f.write_str("indexed-rebuild"),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GrowModeConfig {
    pub n0: u64,
    pub t: u64,
    pub access: GrowAccess,
    pub runs: u64,
    pub seed_offset: u64,
}

/// Per-step read series of a grow-mode experiment (means over runs), with
/// the expected-case accumulation overlay.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowSeries {
    pub config: GrowModeConfig,
    pub mean_reads: Vec<f64>,
    pub mean_cumulative: Vec<f64>,
    /// Theory overlay: expected-case accumulation for the sequential arm,
    /// one read per step for the indexed oracle.
    pub predicted_cumulative: Vec<f64>,
    /// Index-maintenance metadata for the indexed arm: TOC entries rebuilt
    /// per run (retrieval cost excludes this, it is reported separately).
    pub rebuild_entries_per_run: u64,
}

impl GrowSeries {
    pub fn final_mean_cumulative(&self) -> f64 {
        *self
            .mean_cumulative
            .last()
            .expect("grow series has at least one step")
    }
}

/// Number of probes a uniform without-replacement prober needs to hit the
/// target page, simulated as a lazy partial shuffle.
fn probe_reads<R: Rng>(n_pages: u64, target_page: u64, rng: &mut R) -> u64 {
    let mut pages: Vec<u64> = (1..=n_pages).collect();
    for i in 0..pages.len() {
        let j = rng.random_range(i..pages.len());
        pages.swap(i, j);
        if pages[i] == target_page {
            return i as u64 + 1;
        }
    }
    unreachable!("target page is always among the pages");
}

/// Runs the grow-mode experiment: at each step one page of fresh numeric
/// items is appended, then one uniformly chosen stored key is retrieved
/// through the configured access mode.
pub fn grow_mode(cfg: &GrowModeConfig) -> Result<GrowSeries> {
    AccumulationShape::new(cfg.n0, cfg.t)?;
    if cfg.runs < 1 {
        return Err(Error::InvalidConfig("grow mode needs at least 1 run".into()));
    }
    let items_per_page = 10u64;

    let mut reads_sum = vec![0f64; cfg.t as usize];
    let mut rebuild_entries_per_run = 0u64;

    for run in 0..cfg.runs {
        let mut hasher = Sha256::new();
        hasher.update(b"pagebench.grow.v1|");
        hasher.update(cfg.n0.to_le_bytes());
        hasher.update(cfg.t.to_le_bytes());
        hasher.update((cfg.seed_offset + run).to_le_bytes());
        let mut rng = ChaCha12Rng::from_seed(hasher.finalize().into());

        let mut rebuilds = 0u64;
        for t in 1..=cfg.t {
            let n_pages = cfg.n0 + t;
            // One retrieval of a uniformly chosen stored key; with equally
            // full pages the target page is uniform as well.
            let target_page = rng.random_range(1..=n_pages);
            let reads = match cfg.access {
                GrowAccess::Sequential => probe_reads(n_pages, target_page, &mut rng),
                GrowAccess::IndexedRebuild => {
                    // Rebuild the TOC over the grown store, then traverse.
                    let target_key =
                        Key::Num((target_page - 1) * items_per_page + rng.random_range(1..=items_per_page));
                    let entries: Vec<IndexEntry> = (1..=n_pages)
                        .map(|p| IndexEntry {
                            page_no: p,
                            key_lo: Key::Num((p - 1) * items_per_page + 1),
                            key_hi: Key::Num(p * items_per_page),
                        })
                        .collect();
                    rebuilds += entries.len() as u64;
                    let toc = FlatToc::new(entries)?;
                    let page = locate_page(&toc, &target_key)?;
                    debug_assert_eq!(page, target_page);
                    1
                }
            };
            reads_sum[t as usize - 1] += reads as f64;
        }
        rebuild_entries_per_run = rebuilds;
    }

    let mean_reads: Vec<f64> = reads_sum.iter().map(|s| s / cfg.runs as f64).collect();
    let mut mean_cumulative = Vec::with_capacity(mean_reads.len());
    let mut acc = 0f64;
    for r in &mean_reads {
        acc += r;
        mean_cumulative.push(acc);
    }
    let predicted_cumulative: Vec<f64> = (1..=cfg.t)
        .map(|t| match cfg.access {
            GrowAccess::Sequential => cost_to_f64(theory::cumulative_sequential_cost(
                &AccumulationShape::new(cfg.n0, t).expect("validated"),
            )),
            GrowAccess::IndexedRebuild => t as f64,
        })
        .collect();

    Ok(GrowSeries {
        config: *cfg,
        mean_reads,
        mean_cumulative,
        predicted_cumulative,
        rebuild_entries_per_run,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(condition: Condition, kind: ContentKind, m: u64, policy: &str) -> TrialConfig {
        TrialConfig::new(condition, kind, m, PolicySpec::new(policy))
    }

    #[test]
    fn indexed_oracle_reads_one_page_and_is_correct() {
        for trial in 0..5 {
            let mut c = cfg(Condition::Indexed, ContentKind::Hash, 500, "flat_toc");
            c.trial_index = trial;
            let r = run_trial(&c).unwrap();
            assert_eq!(r.data_page_reads, 1);
            assert_eq!(r.tool_calls, 3); // get_index, read_page, submit
            assert!(r.correct);
        }
    }

    #[test]
    fn trials_are_reproducible_byte_for_byte() {
        let c = cfg(Condition::Flat, ContentKind::Hash, 100, "uniform_probe");
        let a = run_trial(&c).unwrap();
        let b = run_trial(&c).unwrap();
        assert_eq!(a.transcript_digest, b.transcript_digest);
        assert_eq!(a.tokens, b.tokens);

        let mut c2 = c.clone();
        c2.trial_index = 1;
        let d = run_trial(&c2).unwrap();
        assert_ne!(a.transcript_digest, d.transcript_digest);
    }

    #[test]
    fn linear_scan_reads_exactly_target_page_position() {
        let c = cfg(Condition::Flat, ContentKind::Numeric, 100, "linear_scan");
        let prepared = prepare_trial(&c).unwrap();
        // Find which page holds the target in the shuffled order.
        let mut target_page = 0;
        for n in 1..=prepared.store.page_count() {
            let text = store::render_page(&prepared.store, n).unwrap();
            if crate::store::format::value_from_page(text, &prepared.target_key).is_some() {
                target_page = n;
            }
        }
        let policy = Box::new(LinearScan::new());
        let r = execute_trial(&c, prepared, policy).unwrap();
        assert_eq!(r.data_page_reads, target_page);
        assert!(r.correct);
    }

    #[test]
    fn corrupted_config_needs_two_pages() {
        let c = cfg(
            Condition::IndexedCorrupted,
            ContentKind::Numeric,
            5,
            "corrupted_fallback",
        );
        assert!(matches!(run_trial(&c), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn corrupted_fallback_at_two_pages() {
        // Derangement at N=2 swaps the page pointers; the fallback scanner
        // skips only the page it just read, so both target positions finish
        // in exactly two reads.
        for trial in 0..10 {
            let mut c = cfg(
                Condition::IndexedCorrupted,
                ContentKind::Numeric,
                20,
                "corrupted_fallback",
            );
            c.trial_index = trial;
            let r = run_trial(&c).unwrap();
            assert_eq!(r.data_page_reads, 2, "trial {trial}");
            assert!(r.correct, "trial {trial}");
        }
    }

    #[test]
    fn deep_traversal_uses_three_calls_before_answer() {
        let c = cfg(Condition::DeepIndexed, ContentKind::Hash, 500, "deep_traversal");
        let r = run_trial(&c).unwrap();
        assert_eq!(r.data_page_reads, 1);
        assert_eq!(r.tool_calls, 4);
        assert!(r.correct);
    }

    #[test]
    fn external_counter_requires_remote_policy() {
        let mut c = cfg(Condition::Indexed, ContentKind::Hash, 100, "flat_toc");
        c.counter = TokenCounter::External;
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn whitespace_counter_runs_and_charges_differently() {
        let bytes = cfg(Condition::Indexed, ContentKind::Hash, 100, "flat_toc");
        let mut words = bytes.clone();
        words.counter = TokenCounter::Whitespace;
        let a = run_trial(&bytes).unwrap();
        let b = run_trial(&words).unwrap();
        assert!(a.correct && b.correct);
        assert_eq!(a.data_page_reads, b.data_page_reads);
        assert_ne!(a.tokens, b.tokens);
    }

    #[test]
    fn sweep_grid_expands_cartesian_product() {
        let spec = SweepSpec {
            trials: Some(2),
            ..SweepSpec::default()
        };
        let configs = spec.trial_configs().unwrap();
        // 2 conditions x 1 content x 4 Ms x 1 policy x 2 trials.
        assert_eq!(configs.len(), 16);
        assert_eq!(configs[0].policy.id, "uniform_probe"); // auto resolved
    }

    #[test]
    fn sweep_results_are_order_deterministic() {
        let spec = SweepSpec {
            ms: vec![50],
            trials: Some(4),
            ..SweepSpec::default()
        };
        let a = run_sweep(&spec).unwrap();
        let b = run_sweep(&spec).unwrap();
        let da: Vec<&str> = a.iter().map(|r| r.transcript_digest.as_str()).collect();
        let db: Vec<&str> = b.iter().map(|r| r.transcript_digest.as_str()).collect();
        assert_eq!(da, db);
    }

    #[test]
    fn aggregate_median_and_iqr_rules() {
        assert_eq!(median(&[1.0, 1.0, 1.0]), 1.0);
        assert_eq!(median(&[3.0, 6.0, 9.0, 21.0]), 7.5);
        assert_eq!(percentile_lower(&[1.0, 1.0, 1.0], 0.25), 1.0);
        assert_eq!(percentile_lower(&[3.0, 6.0, 9.0, 21.0], 0.75), 9.0);
    }

    #[test]
    fn aggregate_excludes_infrastructure_errors_from_stats() {
        let c = cfg(Condition::Indexed, ContentKind::Hash, 50, "flat_toc");
        let mut results = vec![run_trial(&c).unwrap(), run_trial(&c).unwrap()];
        results[1].infrastructure_error = true;
        results[1].correct = false;
        results[1].termination = Termination::InfrastructureError;
        let summary = aggregate(&results);
        assert_eq!(summary.cells.len(), 1);
        let cell = &summary.cells[0];
        assert_eq!(cell.n_trials, 2);
        assert_eq!(cell.infrastructure_errors, 1);
        assert_eq!(cell.stats.as_ref().unwrap().accuracy_pct, 100.0);
    }

    #[test]
    fn aggregate_empty_cell_is_no_data() {
        let c = cfg(Condition::Indexed, ContentKind::Hash, 50, "flat_toc");
        let mut r = run_trial(&c).unwrap();
        r.infrastructure_error = true;
        let summary = aggregate(&[r]);
        assert!(summary.cells[0].stats.is_none());
    }

    #[test]
    fn grow_mode_single_step_costs_one_read() {
        for access in [GrowAccess::Sequential, GrowAccess::IndexedRebuild] {
            let series = grow_mode(&GrowModeConfig {
                n0: 0,
                t: 1,
                access,
                runs: 1,
                seed_offset: 0,
            })
            .unwrap();
            assert_eq!(series.final_mean_cumulative(), 1.0);
        }
    }

    #[test]
    fn grow_mode_sequential_tracks_expected_case() {
        let series = grow_mode(&GrowModeConfig {
            n0: 0,
            t: 100,
            access: GrowAccess::Sequential,
            runs: 1000,
            seed_offset: 0,
        })
        .unwrap();
        let predicted = *series.predicted_cumulative.last().unwrap();
        let measured = series.final_mean_cumulative();
        let rel = (measured - predicted).abs() / predicted;
        assert!(rel < 0.03, "measured {measured}, predicted {predicted}");
    }

    #[test]
    fn grow_mode_indexed_rebuild_reads_once_per_step() {
        let series = grow_mode(&GrowModeConfig {
            n0: 5,
            t: 50,
            access: GrowAccess::IndexedRebuild,
            runs: 3,
            seed_offset: 0,
        })
        .unwrap();
        assert_eq!(series.final_mean_cumulative(), 50.0);
        assert!(series.mean_reads.iter().all(|&r| r == 1.0));
        // Rebuild work is metadata: sum of N over steps 6..=55.
        assert_eq!(series.rebuild_entries_per_run, (6..=55).sum::<u64>());
    }
}
