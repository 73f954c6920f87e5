//! Lookup structures over a sorted store: flat TOC, corrupted TOC, and
//! two-level deep index.
//!
//! Structures are immutable after build and traversal is pure text-free
//! computation, so locating a page never costs a data-page read. The rendered
//! text formats here are a wire contract: policies parse tool results with
//! [`parse_flat_toc`] / [`parse_master`] and never see the structures
//! themselves.

use crate::error::Error;
use crate::key::Key;
use crate::store::{PageOrdering, PageStore};
use crate::Result;
use rand::Rng;

/// One flat-TOC entry: the key range stored on `page_no`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexEntry {
    pub page_no: u64,
    pub key_lo: Key,
    pub key_hi: Key,
}

/// One master-TOC entry: the key range covered by `section_no`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MasterEntry {
    pub section_no: u64,
    pub key_lo: Key,
    pub key_hi: Key,
}

/// Flat table of contents: one entry per page, ascending by `key_lo`.
///
/// A corrupted TOC keeps the range column intact (still ascending, still
/// searchable) and deranges the page numbers attached to the ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatToc {
    entries: Vec<IndexEntry>,
}

impl FlatToc {
    pub fn new(entries: Vec<IndexEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::IndexParse("empty table of contents".into()));
        }
        for e in &entries {
            if e.key_lo > e.key_hi {
                return Err(Error::IndexParse(format!(
                    "entry for page {} has inverted range",
                    e.page_no
                )));
            }
        }
        for pair in entries.windows(2) {
            if pair[0].key_hi >= pair[1].key_lo {
                return Err(Error::IndexParse(
                    "entry ranges must be disjoint and ascending".into(),
                ));
            }
        }
        Ok(FlatToc { entries })
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Two-level index: a master TOC over sections of `S` pages plus one
/// page-level TOC per section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeepIndex {
    master: Vec<MasterEntry>,
    sections: Vec<FlatToc>,
}

impl DeepIndex {
    pub fn master(&self) -> &[MasterEntry] {
        &self.master
    }

    pub fn section_count(&self) -> u64 {
        self.sections.len() as u64
    }

    /// Page-level TOC of section `s` (1-based).
    pub fn section_toc(&self, s: u64) -> Result<&FlatToc> {
        if s < 1 || s > self.section_count() {
            return Err(Error::SectionOutOfRange {
                section: s,
                max: self.section_count(),
            });
        }
        Ok(&self.sections[s as usize - 1])
    }
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

/// Builds the flat TOC of a sorted store: entry `i` carries page `i`'s true
/// key range. Random-ordered stores are rejected; a TOC over shuffled pages
/// is a different experimental condition.
pub fn build_flat_toc(store: &PageStore) -> Result<FlatToc> {
    if store.ordering() != PageOrdering::Sorted {
        return Err(Error::TocOverRandomStore);
    }
    let entries = store
        .page_ranges()
        .iter()
        .enumerate()
        .map(|(i, (lo, hi))| IndexEntry {
            page_no: i as u64 + 1,
            key_lo: lo.clone(),
            key_hi: hi.clone(),
        })
        .collect();
    FlatToc::new(entries)
}

/// Deranges the range-to-page assignment of a TOC: every range ends up
/// pointing at a different page than its true one. Uses a Sattolo
/// single-cycle shuffle of the page-number column, which cannot leave fixed
/// points, and is deterministic under the caller's seeded rng.
pub fn corrupt_toc<R: Rng>(toc: &FlatToc, rng: &mut R) -> Result<FlatToc> {
    let n = toc.len();
    if n < 2 {
        return Err(Error::DerangementImpossible);
    }
    let mut pages: Vec<u64> = toc.entries.iter().map(|e| e.page_no).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..i);
        pages.swap(i, j);
    }
    let entries = toc
        .entries
        .iter()
        .zip(pages)
        .map(|(e, page_no)| IndexEntry {
            page_no,
            key_lo: e.key_lo.clone(),
            key_hi: e.key_hi.clone(),
        })
        .collect();
    FlatToc::new(entries)
}

/// Partitions a sorted store into sections of `S` pages: section `s` covers
/// pages `(s-1)*S+1 ..= min(s*S, N)` and its master range spans those pages'
/// ranges.
pub fn build_deep_index(store: &PageStore, pages_per_section: u64) -> Result<DeepIndex> {
    if pages_per_section < 1 {
        return Err(Error::InvalidShape("pages per section S must be >= 1".into()));
    }
    let flat = build_flat_toc(store)?;
    let mut master = Vec::new();
    let mut sections = Vec::new();
    for (idx, chunk) in flat
        .entries
        .chunks(pages_per_section as usize)
        .enumerate()
    {
        let section_no = idx as u64 + 1;
        master.push(MasterEntry {
            section_no,
            key_lo: chunk.first().expect("non-empty chunk").key_lo.clone(),
            key_hi: chunk.last().expect("non-empty chunk").key_hi.clone(),
        });
        sections.push(FlatToc::new(chunk.to_vec())?);
    }
    Ok(DeepIndex { master, sections })
}

// ---------------------------------------------------------------------------
// Traversal
// ---------------------------------------------------------------------------

/// Binary search over ascending disjoint ranges: returns the position of the
/// entry containing `k`, or, when `k` falls in a gap, the entry with the
/// greatest `key_lo <= k` (B-tree leaf-search convention). Errors when `k`
/// lies below the first range.
fn locate_position(ranges: &[(&Key, &Key)], k: &Key) -> Result<usize> {
    let first = ranges.first().expect("validated non-empty");
    if k < first.0 {
        return Err(Error::KeyOutOfRange(k.to_string()));
    }
    // partition_point: count of entries with key_lo <= k.
    let pos = ranges.partition_point(|(lo, _)| *lo <= k);
    Ok(pos - 1)
}

/// Page holding key `k` according to the TOC.
pub fn locate_page(toc: &FlatToc, k: &Key) -> Result<u64> {
    let ranges: Vec<(&Key, &Key)> = toc.entries.iter().map(|e| (&e.key_lo, &e.key_hi)).collect();
    Ok(toc.entries[locate_position(&ranges, k)?].page_no)
}

/// Section covering key `k` according to the master TOC.
pub fn locate_section(index: &DeepIndex, k: &Key) -> Result<u64> {
    let ranges: Vec<(&Key, &Key)> = index
        .master
        .iter()
        .map(|e| (&e.key_lo, &e.key_hi))
        .collect();
    Ok(index.master[locate_position(&ranges, k)?].section_no)
}

// ---------------------------------------------------------------------------
// Rendered text formats
// ---------------------------------------------------------------------------

/// Flat TOC text: `PAGE INDEX (<N> pages)` header, then one
/// `page <n>: <lo>..<hi>` line per entry, trailing newline.
pub fn render_flat_toc(toc: &FlatToc) -> String {
    let mut out = format!("PAGE INDEX ({} pages)\n", toc.len());
    for e in &toc.entries {
        out.push_str(&format!("page {}: {}..{}\n", e.page_no, e.key_lo, e.key_hi));
    }
    out
}

/// Master TOC text: `MASTER INDEX (<K> sections)` header, then one
/// `section <s>: <lo>..<hi>` line per section, trailing newline.
pub fn render_master(index: &DeepIndex) -> String {
    let mut out = format!("MASTER INDEX ({} sections)\n", index.section_count());
    for e in &index.master {
        out.push_str(&format!(
            "section {}: {}..{}\n",
            e.section_no, e.key_lo, e.key_hi
        ));
    }
    out
}

/// Section TOC text: `SECTION <s> INDEX (<n> pages)` header, then page lines
/// as in the flat TOC.
pub fn render_section_toc(index: &DeepIndex, s: u64) -> Result<String> {
    let toc = index.section_toc(s)?;
    let mut out = format!("SECTION {s} INDEX ({} pages)\n", toc.len());
    for e in &toc.entries {
        out.push_str(&format!("page {}: {}..{}\n", e.page_no, e.key_lo, e.key_hi));
    }
    Ok(out)
}

fn parse_range_line(rest: &str) -> Result<(u64, Key, Key)> {
    let (no, range) = rest
        .split_once(": ")
        .ok_or_else(|| Error::IndexParse(format!("missing ': ' in {rest:?}")))?;
    let no: u64 = no
        .trim()
        .parse()
        .map_err(|_| Error::IndexParse(format!("bad entry number in {rest:?}")))?;
    let (lo, hi) = range
        .split_once("..")
        .ok_or_else(|| Error::IndexParse(format!("missing '..' in {rest:?}")))?;
    Ok((no, Key::parse(lo), Key::parse(hi)))
}

/// Parses rendered flat/section TOC text back into a [`FlatToc`]. Lines that
/// are not `page ...` entries (the header) are skipped.
pub fn parse_flat_toc(text: &str) -> Result<FlatToc> {
    let mut entries = Vec::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("page ") {
            let (page_no, key_lo, key_hi) = parse_range_line(rest)?;
            entries.push(IndexEntry {
                page_no,
                key_lo,
                key_hi,
            });
        }
    }
    FlatToc::new(entries)
}

/// Parses rendered master TOC text into its entries.
pub fn parse_master(text: &str) -> Result<Vec<MasterEntry>> {
    let mut entries = Vec::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("section ") {
            let (section_no, key_lo, key_hi) = parse_range_line(rest)?;
            entries.push(MasterEntry {
                section_no,
                key_lo,
                key_hi,
            });
        }
    }
    if entries.is_empty() {
        return Err(Error::IndexParse("no section entries found".into()));
    }
    Ok(entries)
}

/// Section covering key `k` among parsed master entries (policy-side twin of
/// [`locate_section`]).
pub fn locate_section_in_entries(entries: &[MasterEntry], k: &Key) -> Result<u64> {
    let ranges: Vec<(&Key, &Key)> = entries.iter().map(|e| (&e.key_lo, &e.key_hi)).collect();
    Ok(entries[locate_position(&ranges, k)?].section_no)
}
