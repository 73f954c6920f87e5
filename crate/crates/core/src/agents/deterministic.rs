//! The six deterministic policies.
//!
//! Scanners for unstructured stores (linear, uniform probe), fallible binary
//! search for sorted-but-unindexed stores, index traversals for the flat and
//! deep conditions, and the corrupted-index fallback. All of them parse tool
//! result text only; none holds a store reference.

use super::{Observation, Policy, PolicyFailure, StepOutput};
use crate::env::ToolCall;
use crate::index::{locate_page, locate_section_in_entries, parse_flat_toc, parse_master};
use crate::key::Key;
use crate::store::format;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha12Rng;

fn submit_empty() -> StepOutput {
    StepOutput::call(ToolCall::SubmitAnswer(String::new()))
}

/// Value for the target key on the last result, if it was a page holding it.
fn found_value(obs: &Observation<'_>) -> Option<String> {
    obs.last_result
        .and_then(|text| format::value_from_page(text, obs.target_key))
        .map(str::to_string)
}

/// First and last item keys of a rendered page.
fn page_span(text: &str) -> Option<(Key, Key)> {
    let mut lines = text.lines().skip(1).filter(|l| !l.is_empty());
    let first = format::key_from_line(lines.next()?)?;
    let last = match lines.last() {
        Some(l) => format::key_from_line(l)?,
        None => first.clone(),
    };
    Some((first, last))
}

// ---------------------------------------------------------------------------
// Scanners
// ---------------------------------------------------------------------------

/// Reads pages 1, 2, 3, ... and submits as soon as a page holds the target.
pub struct LinearScan {
    next_page: u64,
}

impl LinearScan {
    pub fn new() -> Self {
        LinearScan { next_page: 1 }
    }
}

impl Default for LinearScan {
    fn default() -> Self {
        Self::new()
    }
}

impl Policy for LinearScan {
    fn step(&mut self, obs: &Observation<'_>) -> Result<StepOutput, PolicyFailure> {
        if let Some(value) = found_value(obs) {
            return Ok(StepOutput::call(ToolCall::SubmitAnswer(value)));
        }
        if self.next_page > obs.shape.page_count_n {
            return Ok(submit_empty());
        }
        let call = ToolCall::ReadPage(self.next_page);
        self.next_page += 1;
        Ok(StepOutput::call(call))
    }
}

/// Reads distinct pages in seeded random order and submits on the first hit.
pub struct UniformProbe {
    rng: ChaCha12Rng,
    order: Vec<u64>,
    pos: usize,
}

impl UniformProbe {
    pub fn new(rng: ChaCha12Rng) -> Self {
        UniformProbe {
            rng,
            order: Vec::new(),
            pos: 0,
        }
    }
}

impl Policy for UniformProbe {
    fn step(&mut self, obs: &Observation<'_>) -> Result<StepOutput, PolicyFailure> {
        if let Some(value) = found_value(obs) {
            return Ok(StepOutput::call(ToolCall::SubmitAnswer(value)));
        }
        if self.order.is_empty() {
            self.order = (1..=obs.shape.page_count_n).collect();
            self.order.shuffle(&mut self.rng);
        }
        if self.pos >= self.order.len() {
            return Ok(submit_empty());
        }
        let call = ToolCall::ReadPage(self.order[self.pos]);
        self.pos += 1;
        Ok(StepOutput::call(call))
    }
}

// ---------------------------------------------------------------------------
// Binary search over sorted pages
// ---------------------------------------------------------------------------

/// Bisection over sorted pages with an optional per-step chance of losing a
/// bound.
///
/// With `p_err = 0` the search is exact and reads at most
/// `ceil(log2 N) + 1` pages. With `p_err > 0`, each step may reset one bound
/// toward its extreme before probing, which models losing track of the
/// search interval: progress is forgotten, never inverted, so the search
/// stays correct and only slows down.
pub struct BinarySearch {
    p_err: f64,
    rng: ChaCha12Rng,
    bounds: Option<(u64, u64)>,
    last_probe: Option<u64>,
}

impl BinarySearch {
    pub fn new(p_err: f64, rng: ChaCha12Rng) -> Self {
        BinarySearch {
            p_err,
            rng,
            bounds: None,
            last_probe: None,
        }
    }
}

impl Policy for BinarySearch {
    fn step(&mut self, obs: &Observation<'_>) -> Result<StepOutput, PolicyFailure> {
        if let Some(value) = found_value(obs) {
            return Ok(StepOutput::call(ToolCall::SubmitAnswer(value)));
        }
        let n = obs.shape.page_count_n;
        let (mut lo, mut hi) = self.bounds.unwrap_or((1, n));

        // Narrow using the page just read, when there was one.
        if let (Some(probe), Some(text)) = (self.last_probe, obs.last_result) {
            match page_span(text) {
                Some((page_lo, page_hi)) => {
                    if *obs.target_key < page_lo {
                        hi = probe - 1; // probe >= 1, so this can reach 0 and empty the interval
                    } else if *obs.target_key > page_hi {
                        lo = probe + 1;
                    } else {
                        // Page covers the key but the item line was absent:
                        // nothing left to search.
                        return Ok(submit_empty());
                    }
                }
                None => return Ok(submit_empty()),
            }
        }

        if lo > hi || lo < 1 || hi > n {
            return Ok(submit_empty());
        }

        // Bound corruption: forget one side of the interval.
        if self.p_err > 0.0 && self.rng.random_bool(self.p_err) {
            if self.rng.random_bool(0.5) {
                lo = 1;
            } else {
                hi = n;
            }
        }

        let mid = lo + (hi - lo) / 2;
        self.bounds = Some((lo, hi));
        self.last_probe = Some(mid);
        Ok(StepOutput::call(ToolCall::ReadPage(mid)))
    }
}

// ---------------------------------------------------------------------------
// Index traversals
// ---------------------------------------------------------------------------

/// Fetches the flat TOC, locates the target's page, reads it, submits.
/// Exactly one data-page read on a sound index; a page that lacks the target
/// (corrupted index) ends in an empty submit — see [`CorruptedFallback`] for
/// the recovering variant.
pub struct FlatTocTraversal {
    stage: FlatStage,
}

enum FlatStage {
    FetchToc,
    LocatePage,
    Extract,
}

impl FlatTocTraversal {
    pub fn new() -> Self {
        FlatTocTraversal {
            stage: FlatStage::FetchToc,
        }
    }
}

impl Default for FlatTocTraversal {
    fn default() -> Self {
        Self::new()
    }
}

impl Policy for FlatTocTraversal {
    fn step(&mut self, obs: &Observation<'_>) -> Result<StepOutput, PolicyFailure> {
        match self.stage {
            FlatStage::FetchToc => {
                self.stage = FlatStage::LocatePage;
                Ok(StepOutput::call(ToolCall::GetIndex))
            }
            FlatStage::LocatePage => {
                let Some(text) = obs.last_result else {
                    return Ok(submit_empty());
                };
                let Ok(toc) = parse_flat_toc(text) else {
                    return Ok(submit_empty());
                };
                let Ok(page) = locate_page(&toc, obs.target_key) else {
                    return Ok(submit_empty());
                };
                self.stage = FlatStage::Extract;
                Ok(StepOutput::call(ToolCall::ReadPage(page)))
            }
            FlatStage::Extract => match found_value(obs) {
                Some(value) => Ok(StepOutput::call(ToolCall::SubmitAnswer(value))),
                None => Ok(submit_empty()),
            },
        }
    }
}

/// Master TOC, then section TOC, then the page: exactly three tool calls
/// before the answer.
pub struct DeepTraversal {
    stage: DeepStage,
}

enum DeepStage {
    FetchMaster,
    LocateSection,
    LocatePage,
    Extract,
}

impl DeepTraversal {
    pub fn new() -> Self {
        DeepTraversal {
            stage: DeepStage::FetchMaster,
        }
    }
}

impl Default for DeepTraversal {
    fn default() -> Self {
        Self::new()
    }
}

impl Policy for DeepTraversal {
    fn step(&mut self, obs: &Observation<'_>) -> Result<StepOutput, PolicyFailure> {
        match self.stage {
            DeepStage::FetchMaster => {
                self.stage = DeepStage::LocateSection;
                Ok(StepOutput::call(ToolCall::GetIndex))
            }
            DeepStage::LocateSection => {
                let Some(entries) = obs.last_result.and_then(|t| parse_master(t).ok()) else {
                    return Ok(submit_empty());
                };
                let Ok(section) = locate_section_in_entries(&entries, obs.target_key) else {
                    return Ok(submit_empty());
                };
                self.stage = DeepStage::LocatePage;
                Ok(StepOutput::call(ToolCall::GetSectionIndex(section)))
            }
            DeepStage::LocatePage => {
                let Some(toc) = obs.last_result.and_then(|t| parse_flat_toc(t).ok()) else {
                    return Ok(submit_empty());
                };
                let Ok(page) = locate_page(&toc, obs.target_key) else {
                    return Ok(submit_empty());
                };
                self.stage = DeepStage::Extract;
                Ok(StepOutput::call(ToolCall::ReadPage(page)))
            }
            DeepStage::Extract => match found_value(obs) {
                Some(value) => Ok(StepOutput::call(ToolCall::SubmitAnswer(value))),
                None => Ok(submit_empty()),
            },
        }
    }
}

/// Flat traversal that recovers from a corrupted index: when the indexed
/// page lacks the target it falls back to scanning pages 1, 2, ... The
/// scanner remembers only the page it just read (it skips a candidate solely
/// to avoid reading the same page twice in a row), so the wasted indexed
/// read is paid on top of an essentially fresh scan.
pub struct CorruptedFallback {
    traversal: FlatTocTraversal,
    scanning: bool,
    cursor: u64,
    last_read: Option<u64>,
}

impl CorruptedFallback {
    pub fn new() -> Self {
        CorruptedFallback {
            traversal: FlatTocTraversal::new(),
            scanning: false,
            cursor: 1,
            last_read: None,
        }
    }
}

impl Default for CorruptedFallback {
    fn default() -> Self {
        Self::new()
    }
}

impl Policy for CorruptedFallback {
    fn step(&mut self, obs: &Observation<'_>) -> Result<StepOutput, PolicyFailure> {
        if !self.scanning {
            let out = self.traversal.step(obs)?;
            match &out.action {
                crate::env::AgentAction::Call(ToolCall::ReadPage(n)) => {
                    self.last_read = Some(*n);
                    return Ok(out);
                }
                crate::env::AgentAction::Call(ToolCall::SubmitAnswer(v)) if v.is_empty() => {
                    // Traversal reached a page without the target: scan.
                    self.scanning = true;
                }
                _ => return Ok(out),
            }
        }
        if let Some(value) = found_value(obs) {
            return Ok(StepOutput::call(ToolCall::SubmitAnswer(value)));
        }
        if Some(self.cursor) == self.last_read {
            self.cursor += 1;
        }
        if self.cursor > obs.shape.page_count_n {
            return Ok(submit_empty());
        }
        let page = self.cursor;
        self.cursor += 1;
        self.last_read = Some(page);
        Ok(StepOutput::call(ToolCall::ReadPage(page)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{AgentAction, Condition};
    use crate::theory::StoreShape;
    use rand::SeedableRng;

    fn obs<'a>(
        last: Option<&'a str>,
        calls: u64,
        condition: Condition,
        n_pages: u64,
        target: &'a Key,
    ) -> Observation<'a> {
        Observation {
            last_result: last,
            calls_made: calls,
            condition,
            shape: StoreShape::new(n_pages * 10, 10, 10).unwrap(),
            target_key: target,
        }
    }

    #[test]
    fn linear_scan_starts_at_page_one() {
        let target = Key::Num(7);
        let mut p = LinearScan::new();
        let out = p
            .step(&obs(None, 0, Condition::Flat, 5, &target))
            .unwrap();
        assert_eq!(out.action, AgentAction::Call(ToolCall::ReadPage(1)));
    }

    #[test]
    fn flat_traversal_fetches_toc_first() {
        let target = Key::Num(7);
        let mut p = FlatTocTraversal::new();
        let out = p
            .step(&obs(None, 0, Condition::Indexed, 5, &target))
            .unwrap();
        assert_eq!(out.action, AgentAction::Call(ToolCall::GetIndex));
    }

    #[test]
    fn scanners_submit_value_after_finding_target() {
        let target = Key::Num(13);
        let page = "PAGE 2 OF 5\nItem 11: 11\nItem 12: 12\nItem 13: 13\n";
        let mut p = LinearScan::new();
        p.step(&obs(None, 0, Condition::Flat, 5, &target)).unwrap();
        let out = p
            .step(&obs(Some(page), 1, Condition::Flat, 5, &target))
            .unwrap();
        assert_eq!(
            out.action,
            AgentAction::Call(ToolCall::SubmitAnswer("13".into()))
        );
    }

    #[test]
    fn binary_search_narrows_toward_target() {
        let target = Key::Num(95); // page 10 of 10
        let mut p = BinarySearch::new(0.0, ChaCha12Rng::seed_from_u64(0));
        let out = p
            .step(&obs(None, 0, Condition::FlatSorted, 10, &target))
            .unwrap();
        assert_eq!(out.action, AgentAction::Call(ToolCall::ReadPage(5)));
        let page5 = "PAGE 5 OF 10\nItem 41: 41\nItem 50: 50\n";
        let out = p
            .step(&obs(Some(page5), 1, Condition::FlatSorted, 10, &target))
            .unwrap();
        assert_eq!(out.action, AgentAction::Call(ToolCall::ReadPage(8)));
    }

    #[test]
    fn malformed_result_surfaces_as_empty_submit() {
        let target = Key::Num(3);
        let mut p = FlatTocTraversal::new();
        p.step(&obs(None, 0, Condition::Indexed, 5, &target)).unwrap();
        let out = p
            .step(&obs(Some("tool not available"), 1, Condition::Indexed, 5, &target))
            .unwrap();
        assert_eq!(
            out.action,
            AgentAction::Call(ToolCall::SubmitAnswer(String::new()))
        );
    }
}
