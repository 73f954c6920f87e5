//! Remote-model adapter: drives a chat-completions-style endpoint as a
//! policy.
//!
//! Each step sends the system prompt, the running message history, and the
//! condition's tool schema; the returned tool invocation becomes the next
//! [`ToolCall`]. Plain-text responses pass through as free text (charged,
//! trial continues). Malformed responses are retried up to a configured
//! count and then surface as protocol failures; transport and auth failures
//! surface as infrastructure errors and the trial is excluded from accuracy
//! statistics.

use super::{Observation, Policy, PolicyFailure, StepOutput};
use crate::env::{Condition, ToolCall};
use crate::error::Error;
use crate::Result;
use serde_json::{json, Value};
use std::time::Duration;

pub const ENV_BASE_URL: &str = "REPRO_LLM_BASE_URL";
pub const ENV_MODEL: &str = "REPRO_LLM_MODEL";
pub const ENV_API_KEY: &str = "REPRO_LLM_API_KEY";

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    /// Base URL; the adapter posts to `<base_url>/chat/completions`.
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
    /// Retries per step for malformed (unparseable) responses.
    pub max_retries: u32,
    /// Log request/response bodies verbatim to stderr.
    pub log_wire: bool,
    pub timeout: Duration,
}

impl RemoteConfig {
    pub fn new(base_url: String, model: String) -> Self {
        RemoteConfig {
            base_url,
            model,
            api_key: None,
            max_retries: 2,
            log_wire: false,
            timeout: Duration::from_secs(120),
        }
    }

    /// Reads endpoint, model, and credential from the environment.
    pub fn from_env() -> Result<Self> {
        let base_url = std::env::var(ENV_BASE_URL)
            .map_err(|_| Error::RemoteNotConfigured(format!("{ENV_BASE_URL} not set")))?;
        let model = std::env::var(ENV_MODEL)
            .map_err(|_| Error::RemoteNotConfigured(format!("{ENV_MODEL} not set")))?;
        let mut cfg = RemoteConfig::new(base_url, model);
        cfg.api_key = std::env::var(ENV_API_KEY).ok();
        Ok(cfg)
    }
}

/// System prompt sent to the remote model; the condition's rules are spelled
/// out because the live model, unlike the deterministic policies, has to be
/// told how the store is organized.
fn system_prompt(condition: Condition) -> String {
    let organization = match condition {
        Condition::Flat => "Pages are ordered randomly with respect to keys; no structural information is available.",
        Condition::FlatSorted => "Pages are sorted by key in ascending order: page 1 holds the smallest keys and the last page the largest. There is no index.",
        Condition::Indexed => "Pages are sorted by key. get_index() returns a table of contents mapping each page number to its key range.",
        Condition::IndexedCorrupted => "Pages are sorted by key. get_index() returns a table of contents mapping each page number to its key range.",
        Condition::DeepIndexed => "Pages are sorted by key and grouped into sections. get_index() returns a master table of contents listing sections with key ranges; get_section_index(s) returns the page-level table of contents for section s.",
    };
    format!(
        "You are searching a paginated key-value store for the value of a target key. \
{organization} You cannot see any page without calling a tool. Use the tools exactly; \
when you have found the value, call submit_answer with the value string only. \
Available tools: {}.",
        condition.tool_names()
    )
}

fn tool_schema(condition: Condition) -> Vec<Value> {
    let mut tools = vec![
        json!({
            "type": "function",
            "function": {
                "name": "read_page",
                "description": "Read page n of the store (1-based).",
                "parameters": {
                    "type": "object",
                    "properties": {"n": {"type": "integer", "description": "page number"}},
                    "required": ["n"]
                }
            }
        }),
        json!({
            "type": "function",
            "function": {
                "name": "submit_answer",
                "description": "Submit the value found for the target key. Terminates the trial.",
                "parameters": {
                    "type": "object",
                    "properties": {"v": {"type": "string", "description": "the value"}},
                    "required": ["v"]
                }
            }
        }),
    ];
    if matches!(
        condition,
        Condition::Indexed | Condition::IndexedCorrupted | Condition::DeepIndexed
    ) {
        tools.push(json!({
            "type": "function",
            "function": {
                "name": "get_index",
                "description": "Return the table of contents (master table of contents in the deep-indexed condition).",
                "parameters": {"type": "object", "properties": {}}
            }
        }));
    }
    if condition == Condition::DeepIndexed {
        tools.push(json!({
            "type": "function",
            "function": {
                "name": "get_section_index",
                "description": "Return the page-level table of contents of section s (1-based).",
                "parameters": {
                    "type": "object",
                    "properties": {"s": {"type": "integer", "description": "section number"}},
                    "required": ["s"]
                }
            }
        }));
    }
    tools
}

fn arg_u64(args: &Value, names: &[&str]) -> Option<u64> {
    for name in names {
        match &args[*name] {
            Value::Number(n) => return n.as_u64(),
            Value::String(s) => {
                if let Ok(v) = s.trim().parse() {
                    return Some(v);
                }
            }
            _ => {}
        }
    }
    None
}

fn arg_string(args: &Value, names: &[&str]) -> Option<String> {
    for name in names {
        match &args[*name] {
            Value::String(s) => return Some(s.clone()),
            Value::Number(n) => return Some(n.to_string()),
            _ => {}
        }
    }
    None
}

fn parse_tool_call(name: &str, arguments: &str) -> Option<ToolCall> {
    let args: Value = serde_json::from_str(arguments).unwrap_or(Value::Null);
    match name {
        "read_page" => arg_u64(&args, &["n", "page", "page_number"]).map(ToolCall::ReadPage),
        "get_index" => Some(ToolCall::GetIndex),
        "get_section_index" => {
            arg_u64(&args, &["s", "section", "section_number"]).map(ToolCall::GetSectionIndex)
        }
        "submit_answer" => {
            arg_string(&args, &["v", "value", "answer"]).map(ToolCall::SubmitAnswer)
        }
        _ => None,
    }
}

enum Parsed {
    Call { id: String, call: ToolCall },
    Text(String),
}

pub struct RemotePolicy {
    cfg: RemoteConfig,
    client: reqwest::blocking::Client,
    messages: Vec<Value>,
    pending_tool_id: Option<String>,
    started: bool,
}

impl RemotePolicy {
    pub fn new(cfg: RemoteConfig) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(cfg.timeout)
            .build()
            .map_err(|e| Error::RemoteTransport(e.to_string()))?;
        Ok(RemotePolicy {
            cfg,
            client,
            messages: Vec::new(),
            pending_tool_id: None,
            started: false,
        })
    }

    fn post(&self, body: &Value) -> std::result::Result<Value, PolicyFailure> {
        let url = format!("{}/chat/completions", self.cfg.base_url.trim_end_matches('/'));
        if self.cfg.log_wire {
            eprintln!("--> POST {url}\n{body}");
        }
        let mut req = self.client.post(&url).json(body);
        if let Some(key) = &self.cfg.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| PolicyFailure::Infrastructure(format!("transport: {e}")))?;
        let status = resp.status();
        let text = resp
            .text()
            .map_err(|e| PolicyFailure::Infrastructure(format!("read body: {e}")))?;
        if self.cfg.log_wire {
            eprintln!("<-- {status}\n{text}");
        }
        if !status.is_success() {
            return Err(PolicyFailure::Infrastructure(format!(
                "endpoint returned {status}: {text}"
            )));
        }
        serde_json::from_str(&text)
            .map_err(|e| PolicyFailure::Infrastructure(format!("response not JSON: {e}")))
    }

    /// Extracts the assistant message and turns it into an action. `None`
    /// means the response shape was unusable (triggers a retry).
    fn parse_response(&self, resp: &Value) -> Option<(Parsed, Option<u64>)> {
        let usage = resp["usage"]["total_tokens"].as_u64();
        let message = &resp["choices"][0]["message"];
        if !message.is_object() {
            return None;
        }
        if let Some(tc) = message["tool_calls"].as_array().and_then(|a| a.first()) {
            let id = tc["id"].as_str().unwrap_or("call_0").to_string();
            let name = tc["function"]["name"].as_str()?;
            let arguments = tc["function"]["arguments"].as_str().unwrap_or("{}");
            let call = parse_tool_call(name, arguments)?;
            return Some((Parsed::Call { id, call }, usage));
        }
        if let Some(content) = message["content"].as_str() {
            if !content.is_empty() {
                return Some((Parsed::Text(content.to_string()), usage));
            }
        }
        None
    }
}

impl Policy for RemotePolicy {
    fn step(&mut self, obs: &Observation<'_>) -> std::result::Result<StepOutput, PolicyFailure> {
        if !self.started {
            self.started = true;
            self.messages.push(json!({
                "role": "system",
                "content": system_prompt(obs.condition),
            }));
            self.messages.push(json!({
                "role": "user",
                "content": format!(
                    "The store has {} pages of {} items. TARGET KEY {}. Find its value.",
                    obs.shape.page_count_n, obs.shape.items_per_page_p, obs.target_key
                ),
            }));
        } else if let Some(result) = obs.last_result {
            match self.pending_tool_id.take() {
                Some(id) => self.messages.push(json!({
                    "role": "tool",
                    "tool_call_id": id,
                    "content": result,
                })),
                None => self.messages.push(json!({
                    "role": "user",
                    "content": result,
                })),
            }
        }

        let body = json!({
            "model": self.cfg.model,
            "messages": self.messages,
            "tools": tool_schema(obs.condition),
        });

        let mut attempts = 0;
        loop {
            let resp = self.post(&body)?;
            match self.parse_response(&resp) {
                Some((Parsed::Call { id, call }, usage)) => {
                    self.messages.push(json!({
                        "role": "assistant",
                        "content": Value::Null,
                        "tool_calls": [{
                            "id": id,
                            "type": "function",
                            "function": {
                                "name": match &call {
                                    ToolCall::ReadPage(_) => "read_page",
                                    ToolCall::GetIndex => "get_index",
                                    ToolCall::GetSectionIndex(_) => "get_section_index",
                                    ToolCall::SubmitAnswer(_) => "submit_answer",
                                },
                                "arguments": match &call {
                                    ToolCall::ReadPage(n) => format!("{{\"n\": {n}}}"),
                                    ToolCall::GetIndex => "{}".to_string(),
                                    ToolCall::GetSectionIndex(s) => format!("{{\"s\": {s}}}"),
                                    ToolCall::SubmitAnswer(v) =>
                                        serde_json::to_string(&json!({"v": v})).expect("json"),
                                },
                            },
                        }],
                    }));
                    self.pending_tool_id = Some(id);
                    return Ok(StepOutput {
                        action: crate::env::AgentAction::Call(call),
                        reported_tokens: usage,
                    });
                }
                Some((Parsed::Text(content), usage)) => {
                    self.messages.push(json!({
                        "role": "assistant",
                        "content": content,
                    }));
                    self.pending_tool_id = None;
                    return Ok(StepOutput {
                        action: crate::env::AgentAction::FreeText(content),
                        reported_tokens: usage,
                    });
                }
                None => {
                    attempts += 1;
                    if attempts > self.cfg.max_retries {
                        return Err(PolicyFailure::Protocol(format!(
                            "no usable action after {attempts} attempts"
                        )));
                    }
                }
            }
        }
    }
}
