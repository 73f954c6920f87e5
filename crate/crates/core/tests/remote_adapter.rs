//! Remote adapter against a scripted local endpoint.
//!
//! The mock server speaks just enough HTTP/1.1 and chat-completions JSON to
//! drive the adapter: it reads the running message history out of each
//! request and answers with the next step of a deterministic deep traversal.
//! The adapter's trial must then be indistinguishable from the in-process
//! deep-traversal policy on the same prepared trial.

use pagebench_core::agents::{DeepTraversal, RemoteConfig, RemotePolicy};
use pagebench_core::env::{Condition, Termination};
use pagebench_core::harness::{execute_trial, prepare_trial, PolicySpec, TrialConfig};
use pagebench_core::index::{locate_page, locate_section_in_entries, parse_flat_toc, parse_master};
use pagebench_core::key::Key;
use pagebench_core::store::{format, ContentKind};
use serde_json::{json, Value};
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::thread;
use std::time::Duration;

fn read_request_body(stream: &mut TcpStream) -> Option<String> {
    let mut reader = BufReader::new(stream.try_clone().ok()?);
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).ok()? == 0 {
            return None;
        }
        let trimmed = line.trim();
        if trimmed.is_empty() {
            break;
        }
        if let Some(v) = trimmed.to_ascii_lowercase().strip_prefix("content-length:") {
            content_length = v.trim().parse().ok()?;
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body).ok()?;
    String::from_utf8(body).ok()
}

fn respond_json(stream: &mut TcpStream, body: &Value) {
    let text = body.to_string();
    let response = format!(
        "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
        text.len()
    );
    let _ = stream.write_all(response.as_bytes());
}

fn tool_call_response(name: &str, arguments: Value) -> Value {
    json!({
        "choices": [{
            "message": {
                "role": "assistant",
                "content": null,
                "tool_calls": [{
                    "id": "call_1",
                    "type": "function",
                    "function": {"name": name, "arguments": arguments.to_string()}
                }]
            }
        }],
        "usage": {"prompt_tokens": 100, "completion_tokens": 10, "total_tokens": 110}
    })
}

fn text_response(content: &str) -> Value {
    json!({
        "choices": [{"message": {"role": "assistant", "content": content}}],
        "usage": {"total_tokens": 50}
    })
}

/// Target key as announced in the adapter's task message.
fn target_from_messages(messages: &[Value]) -> Key {
    let user = messages
        .iter()
        .find(|m| m["role"] == "user")
        .and_then(|m| m["content"].as_str())
        .expect("task message present");
    let key = user
        .split("TARGET KEY ")
        .nth(1)
        .and_then(|rest| rest.split('.').next())
        .expect("target key in task message");
    Key::parse(key)
}

/// The scripted model: deterministic deep traversal over whatever tool
/// results appear in the request history.
fn scripted_deep_step(messages: &[Value]) -> Value {
    let target = target_from_messages(messages);
    let last_tool = messages
        .iter()
        .rev()
        .find(|m| m["role"] == "tool")
        .and_then(|m| m["content"].as_str());
    match last_tool {
        None => tool_call_response("get_index", json!({})),
        Some(text) if text.starts_with("MASTER INDEX") => {
            let entries = parse_master(text).expect("master parses");
            let section = locate_section_in_entries(&entries, &target).expect("section");
            tool_call_response("get_section_index", json!({"s": section}))
        }
        Some(text) if text.starts_with("SECTION") => {
            let toc = parse_flat_toc(text).expect("section toc parses");
            let page = locate_page(&toc, &target).expect("page");
            tool_call_response("read_page", json!({"n": page}))
        }
        Some(text) => {
            let value = format::value_from_page(text, &target).expect("value on page");
            tool_call_response("submit_answer", json!({"v": value}))
        }
    }
}

/// Serves `requests` chat-completions calls, scripting each with `script`.
fn spawn_mock(
    requests: usize,
    script: impl Fn(usize, &[Value]) -> Value + Send + 'static,
) -> (String, thread::JoinHandle<()>) {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
    let addr = listener.local_addr().expect("addr");
    let handle = thread::spawn(move || {
        for i in 0..requests {
            let (mut stream, _) = match listener.accept() {
                Ok(pair) => pair,
                Err(_) => return,
            };
            let Some(body) = read_request_body(&mut stream) else { return };
            let request: Value = serde_json::from_str(&body).expect("request is JSON");
            let messages = request["messages"].as_array().expect("messages").clone();
            let reply = script(i, &messages);
            respond_json(&mut stream, &reply);
        }
    });
    (format!("http://{addr}"), handle)
}

fn deep_cfg() -> TrialConfig {
    let mut cfg = TrialConfig::new(
        Condition::DeepIndexed,
        ContentKind::Hash,
        500,
        PolicySpec::new("remote"),
    );
    cfg.trial_index = 3;
    cfg
}

#[test]
fn scripted_adapter_matches_deterministic_deep_traversal() {
    let (url, server) = spawn_mock(4, |_, messages| scripted_deep_step(messages));

    let cfg = deep_cfg();
    let prepared = prepare_trial(&cfg).expect("prepare");
    let remote = RemotePolicy::new(RemoteConfig::new(url, "mock-model".into())).expect("policy");
    let via_adapter = execute_trial(&cfg, prepared.clone(), Box::new(remote)).expect("trial");

    let mut det_cfg = cfg.clone();
    det_cfg.policy = PolicySpec::new("deep_traversal");
    let via_policy =
        execute_trial(&det_cfg, prepared, Box::new(DeepTraversal::new())).expect("trial");

    assert!(via_adapter.correct);
    assert_eq!(via_adapter.data_page_reads, via_policy.data_page_reads);
    assert_eq!(via_adapter.tool_calls, via_policy.tool_calls);
    assert_eq!(via_adapter.tokens, via_policy.tokens);
    assert_eq!(via_adapter.transcript_digest, via_policy.transcript_digest);
    server.join().expect("server");
}

#[test]
fn non_tool_text_is_charged_and_the_trial_continues() {
    let (url, server) = spawn_mock(5, |i, messages| {
        if i == 0 {
            text_response("Considering which tool to call first.")
        } else {
            scripted_deep_step(messages)
        }
    });

    let cfg = deep_cfg();
    let prepared = prepare_trial(&cfg).expect("prepare");
    let remote = RemotePolicy::new(RemoteConfig::new(url, "mock-model".into())).expect("policy");
    let r = execute_trial(&cfg, prepared, Box::new(remote)).expect("trial");

    assert!(r.correct, "trial should finish despite the free-text turn");
    assert_eq!(r.data_page_reads, 1);
    assert_eq!(r.tool_calls, 4);
    server.join().expect("server");
}

#[test]
fn malformed_responses_become_protocol_failure_after_retries() {
    // Empty content parses to no action; the adapter retries then gives up.
    let (url, server) = spawn_mock(3, |_, _| json!({"choices": [{"message": {"content": ""}}]}));

    let cfg = deep_cfg();
    let prepared = prepare_trial(&cfg).expect("prepare");
    let mut remote_cfg = RemoteConfig::new(url, "mock-model".into());
    remote_cfg.max_retries = 2;
    let remote = RemotePolicy::new(remote_cfg).expect("policy");
    let r = execute_trial(&cfg, prepared, Box::new(remote)).expect("trial");

    assert_eq!(r.termination, Termination::ProtocolFailure);
    assert!(!r.correct);
    assert!(!r.infrastructure_error);
    server.join().expect("server");
}

#[test]
fn unreachable_endpoint_is_an_infrastructure_error() {
    let cfg = deep_cfg();
    let prepared = prepare_trial(&cfg).expect("prepare");
    let mut remote_cfg = RemoteConfig::new("http://127.0.0.1:9".into(), "mock-model".into());
    remote_cfg.timeout = Duration::from_millis(800);
    let remote = RemotePolicy::new(remote_cfg).expect("policy");
    let r = execute_trial(&cfg, prepared, Box::new(remote)).expect("trial");

    assert!(r.infrastructure_error);
    assert_eq!(r.termination, Termination::InfrastructureError);
    assert!(!r.correct);
}
