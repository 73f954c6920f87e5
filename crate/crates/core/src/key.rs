//! Ordered item keys.
//!
//! Two key families cover the three content types: numeric keys (hash and
//! numeric content, compared as integers, rendered without zero padding) and
//! word keys (encyclopedia content, stored lowercase and compared bytewise on
//! the lowercased form). Keys never mix families within one store; the
//! cross-family order (numbers before words) exists only to make `Ord` total.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Key {
    Num(u64),
    Word(String),
}

impl Key {
    /// Builds a word key, normalizing to lowercase so `Eq`/`Ord`/`Hash`
    /// agree with the case-insensitive comparison rule.
    pub fn word(s: &str) -> Key {
        Key::Word(s.to_lowercase())
    }

    /// Parses a key from its rendered form: all-digit tokens are numeric,
    /// anything else is a word.
    pub fn parse(s: &str) -> Key {
        let t = s.trim();
        if !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit()) {
            if let Ok(n) = t.parse::<u64>() {
                return Key::Num(n);
            }
        }
        Key::word(t)
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Key::Num(a), Key::Num(b)) => a.cmp(b),
            (Key::Word(a), Key::Word(b)) => a.as_bytes().cmp(b.as_bytes()),
            (Key::Num(_), Key::Word(_)) => Ordering::Less,
            (Key::Word(_), Key::Num(_)) => Ordering::Greater,
        }
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Key::Num(n) => write!(f, "{n}"),
            Key::Word(w) => write!(f, "{w}"),
        }
    }
}
