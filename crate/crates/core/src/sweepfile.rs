//! Line-oriented sweep files: `key = value`, repeatable keys, `#` comments.
//!
//! Diff-friendly experiment configs. Repeatable keys (`condition`, `content`,
//! `M`, `policy`) accumulate; `condition`, `content` and `M` also accept
//! comma lists. Policies carry inline parameters as `id;k=v;k=v`.

use crate::env::{Condition, TokenCounter};
use crate::error::Error;
use crate::harness::{PolicySpec, SweepSpec};
use crate::store::{ContentKind, ContentSpec};
use crate::Result;
use std::path::PathBuf;

/// A parsed sweep file: the grid plus optional output directory.
#[derive(Debug, Clone)]
pub struct SweepFile {
    pub spec: SweepSpec,
    pub out_dir: Option<PathBuf>,
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::SweepParse {
        line,
        msg: msg.into(),
    }
}

pub fn parse(text: &str) -> Result<SweepFile> {
    let mut conditions = Vec::new();
    let mut contents: Vec<ContentKind> = Vec::new();
    let mut corpus: Option<PathBuf> = None;
    let mut ms = Vec::new();
    let mut policies = Vec::new();
    let mut spec = SweepSpec::default();
    let mut out_dir = None;
    let mut trials: Option<u64> = None;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(lineno, format!("expected key=value, got {line:?}")))?;
        let (key, value) = (key.trim().to_ascii_lowercase(), value.trim());
        if value.is_empty() {
            return Err(err(lineno, format!("empty value for {key:?}")));
        }
        let parse_u64 = |v: &str, what: &str| -> Result<u64> {
            v.parse()
                .map_err(|_| err(lineno, format!("{what} must be an integer, got {v:?}")))
        };
        match key.as_str() {
            "condition" => {
                for part in value.split(',') {
                    conditions.push(
                        part.trim()
                            .parse::<Condition>()
                            .map_err(|e| err(lineno, e.to_string()))?,
                    );
                }
            }
            "content" => {
                for part in value.split(',') {
                    contents.push(
                        part.trim()
                            .parse::<ContentKind>()
                            .map_err(|e| err(lineno, e.to_string()))?,
                    );
                }
            }
            "corpus" => corpus = Some(PathBuf::from(value)),
            "m" => {
                for part in value.split(',') {
                    ms.push(parse_u64(part.trim(), "M")?);
                }
            }
            "p" => spec.p = parse_u64(value, "P")?,
            "s" => spec.s = parse_u64(value, "S")?,
            "policy" => {
                policies.push(PolicySpec::parse(value).map_err(|e| err(lineno, e.to_string()))?)
            }
            "trials" => trials = Some(parse_u64(value, "trials")?),
            "budget" => spec.budget = parse_u64(value, "budget")?,
            "counter" => {
                spec.counter = value
                    .parse::<TokenCounter>()
                    .map_err(|e| err(lineno, e.to_string()))?
            }
            "seed_offset" => spec.seed_offset = parse_u64(value, "seed_offset")?,
            "max_steps" => spec.max_steps = parse_u64(value, "max_steps")?,
            "out_dir" => out_dir = Some(PathBuf::from(value)),
            other => return Err(err(lineno, format!("unknown key {other:?}"))),
        }
    }

    if !conditions.is_empty() {
        spec.conditions = conditions;
    }
    if !contents.is_empty() {
        spec.contents = contents
            .into_iter()
            .map(|kind| {
                let mut c = ContentSpec::new(kind);
                if kind == ContentKind::Encyclopedia {
                    c.corpus_path = corpus.clone();
                }
                c
            })
            .collect();
    }
    if !ms.is_empty() {
        spec.ms = ms;
    }
    if !policies.is_empty() {
        spec.policies = policies;
    }
    spec.trials = trials;

    // Surface grid errors (bad policy names, impossible conditions) with the
    // file, not at run time.
    spec.trial_configs()
        .map_err(|e| Error::SweepParse {
            line: 0,
            msg: e.to_string(),
        })?;
    Ok(SweepFile { spec, out_dir })
}
