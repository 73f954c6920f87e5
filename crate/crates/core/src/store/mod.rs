//! Per-trial item generation, pagination, and page rendering.
//!
//! A trial's store is generated from a seed, paginated into `N = ceil(M/P)`
//! pages, and rendered to text once; everything downstream (tools, policies,
//! token accounting) sees only the rendered text. The store also keeps the
//! ground-truth `key -> value` map used to score submitted answers.

pub mod corpus;

use crate::error::Error;
use crate::key::Key;
use crate::theory::StoreShape;
use crate::Result;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

/// One stored key-value pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Item {
    pub key: Key,
    pub value: String,
}

/// The three content types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContentKind {
    /// Random 4-digit integer keys with random 4-letter uppercase values.
    Hash,
    /// Keys 1..=M; the value of key `k` is the decimal string of `k`.
    Numeric,
    /// English headwords with one-sentence facts.
    Encyclopedia,
}

impl fmt::Display for ContentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ContentKind::Hash => "hash",
            ContentKind::Numeric => "numeric",
            ContentKind::Encyclopedia => "encyclopedia",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for ContentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hash" => Ok(ContentKind::Hash),
            "numeric" => Ok(ContentKind::Numeric),
            "encyclopedia" | "encycl" => Ok(ContentKind::Encyclopedia),
            other => Err(Error::InvalidConfig(format!("unknown content type {other:?}"))),
        }
    }
}

/// Content type plus an optional external corpus (encyclopedia only; the
/// bundled corpus is used when no path is given).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContentSpec {
    pub kind: ContentKind,
    pub corpus_path: Option<PathBuf>,
}

impl ContentSpec {
    pub fn new(kind: ContentKind) -> Self {
        ContentSpec {
            kind,
            corpus_path: None,
        }
    }
}

/// Page order within a store.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PageOrdering {
    /// Page order shuffled with respect to keys (within-page order stays
    /// key-sorted).
    Random,
    /// Pages ascending by key range.
    Sorted,
}

/// Immutable paginated store for one trial.
#[derive(Debug, Clone)]
pub struct PageStore {
    kind: ContentKind,
    pages: Vec<String>,
    page_ranges: Vec<(Key, Key)>,
    truth: BTreeMap<Key, String>,
    ordering: PageOrdering,
    shape: StoreShape,
}

impl PageStore {
    pub fn kind(&self) -> ContentKind {
        self.kind
    }

    pub fn ordering(&self) -> PageOrdering {
        self.ordering
    }

    pub fn shape(&self) -> StoreShape {
        self.shape
    }

    pub fn page_count(&self) -> u64 {
        self.pages.len() as u64
    }

    /// Key range (lo, hi) of page `n` (1-based).
    pub fn page_range(&self, n: u64) -> Result<&(Key, Key)> {
        self.check_page(n)?;
        Ok(&self.page_ranges[n as usize - 1])
    }

    pub fn page_ranges(&self) -> &[(Key, Key)] {
        &self.page_ranges
    }

    pub fn truth(&self) -> &BTreeMap<Key, String> {
        &self.truth
    }

    pub fn truth_value(&self, key: &Key) -> Option<&str> {
        self.truth.get(key).map(String::as_str)
    }

    fn check_page(&self, n: u64) -> Result<()> {
        if n < 1 || n > self.page_count() {
            return Err(Error::PageOutOfRange {
                page: n,
                max: self.page_count(),
            });
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Text format
// ---------------------------------------------------------------------------

/// Rendered text formats for pages. Policies parse tool results with
/// [`format::value_from_line`]; they never touch a `PageStore` directly.
pub mod format {
    use super::ContentKind;
    use crate::key::Key;

    pub fn page_header(n: u64, total: u64) -> String {
        format!("PAGE {n} OF {total}")
    }

    pub fn item_line(kind: ContentKind, key: &Key, value: &str) -> String {
        match kind {
            ContentKind::Numeric => format!("Item {key}: {value}"),
            ContentKind::Hash | ContentKind::Encyclopedia => format!("{key}: {value}"),
        }
    }

    /// Extracts the value for `key` from one rendered line, trying both item
    /// line shapes ("Item <k>: <v>" and "<k>: <v>"). Returns `None` when the
    /// line is for a different key.
    pub fn value_from_line<'a>(line: &'a str, key: &Key) -> Option<&'a str> {
        let numeric_prefix = format!("Item {key}: ");
        if let Some(rest) = line.strip_prefix(&numeric_prefix) {
            return Some(rest);
        }
        let plain_prefix = format!("{key}: ");
        line.strip_prefix(&plain_prefix)
    }

    /// Extracts the value for `key` from a whole rendered page.
    pub fn value_from_page<'a>(page_text: &'a str, key: &Key) -> Option<&'a str> {
        page_text.lines().find_map(|l| value_from_line(l, key))
    }

    /// Parses the key of one rendered item line, for policies that need the
    /// key span of a page (binary search reads the first and last line).
    pub fn key_from_line(line: &str) -> Option<Key> {
        let rest = line.strip_prefix("Item ").unwrap_or(line);
        let (key_part, _) = rest.split_once(": ")?;
        Some(Key::parse(key_part))
    }
}

/// Renders page `n` (1-based): a `PAGE n OF N` header, one line per item,
/// trailing newline. Byte-identical across runs for the same trial.
pub fn render_page(store: &PageStore, n: u64) -> Result<&str> {
    store.check_page(n)?;
    Ok(&store.pages[n as usize - 1])
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

const HASH_KEY_LO: u64 = 1000;
const HASH_KEY_HI: u64 = 9999;

/// Generates the `M` items of one trial. Hash keys are drawn without
/// replacement from 1000..=9999 and values are random `[A-Z]{4}` strings;
/// numeric item `k` is `(k, "k")`; encyclopedia items are the first `M`
/// corpus entries in alphabetical key order (deterministic, seed unused).
pub fn generate_items<R: Rng>(spec: &ContentSpec, m: u64, rng: &mut R) -> Result<Vec<Item>> {
    if m < 1 {
        return Err(Error::InvalidShape("item count M must be >= 1".into()));
    }
    match spec.kind {
        ContentKind::Hash => {
            let space = HASH_KEY_HI - HASH_KEY_LO + 1;
            if m > space {
                return Err(Error::KeySpaceExceeded {
                    requested: m,
                    available: space,
                });
            }
            // Partial Fisher-Yates over the 4-digit key space.
            let mut keys: Vec<u64> = (HASH_KEY_LO..=HASH_KEY_HI).collect();
            let mut items = Vec::with_capacity(m as usize);
            for i in 0..m as usize {
                let j = rng.random_range(i..keys.len());
                keys.swap(i, j);
                let value: String = (0..4)
                    .map(|_| char::from(b'A' + rng.random_range(0..26u8)))
                    .collect();
                items.push(Item {
                    key: Key::Num(keys[i]),
                    value,
                });
            }
            Ok(items)
        }
        ContentKind::Numeric => Ok((1..=m)
            .map(|k| Item {
                key: Key::Num(k),
                value: k.to_string(),
            })
            .collect()),
        ContentKind::Encyclopedia => {
            let all = match &spec.corpus_path {
                Some(path) => corpus::from_jsonl(path)?,
                None => corpus::bundled(),
            };
            if m as usize > all.len() {
                return Err(Error::KeySpaceExceeded {
                    requested: m,
                    available: all.len() as u64,
                });
            }
            Ok(all.into_iter().take(m as usize).collect())
        }
    }
}

/// Sorts items by key, chunks them into `ceil(M/P)` pages, renders each page,
/// and (for [`PageOrdering::Random`]) shuffles the page order. Within-page
/// order is always key-sorted.
pub fn paginate<R: Rng>(
    kind: ContentKind,
    mut items: Vec<Item>,
    items_per_page: u64,
    pages_per_section: u64,
    ordering: PageOrdering,
    rng: &mut R,
) -> Result<PageStore> {
    let m = items.len() as u64;
    let shape = StoreShape::new(m, items_per_page, pages_per_section)?;
    items.sort_by(|a, b| a.key.cmp(&b.key));

    let mut chunks: Vec<&[Item]> = items.chunks(items_per_page as usize).collect();
    debug_assert_eq!(chunks.len() as u64, shape.page_count_n);
    if ordering == PageOrdering::Random {
        chunks.shuffle(rng);
    }

    let total = chunks.len() as u64;
    let mut pages = Vec::with_capacity(chunks.len());
    let mut page_ranges = Vec::with_capacity(chunks.len());
    for (i, chunk) in chunks.iter().enumerate() {
        let mut text = format::page_header(i as u64 + 1, total);
        text.push('\n');
        for item in *chunk {
            text.push_str(&format::item_line(kind, &item.key, &item.value));
            text.push('\n');
        }
        pages.push(text);
        page_ranges.push((
            chunk.first().expect("chunks are non-empty").key.clone(),
            chunk.last().expect("chunks are non-empty").key.clone(),
        ));
    }

    let truth: BTreeMap<Key, String> = items
        .into_iter()
        .map(|item| (item.key, item.value))
        .collect();
    if truth.len() as u64 != m {
        return Err(Error::InvalidShape("duplicate keys in item set".into()));
    }

    Ok(PageStore {
        kind,
        pages,
        page_ranges,
        truth,
        ordering,
        shape,
    })
}

/// Picks a uniformly random stored item; the returned value equals
/// `truth[key]`.
pub fn pick_target<R: Rng>(store: &PageStore, rng: &mut R) -> (Key, String) {
    let idx = rng.random_range(0..store.truth.len());
    let (k, v) = store.truth.iter().nth(idx).expect("store is non-empty");
    (k.clone(), v.clone())
}
