//! Result emission and theory comparison: JSONL results, summary CSV,
//! printable tables, per-figure plot data.
//!
//! Plot data is CSV only; any plotting tool can consume it. Each summary
//! cell is routed to exactly one of the three cell-level figure files
//! (reads-vs-M, deep-vs-flat, content comparison); the separation-ratio and
//! token files are derived views computed across cells.

use crate::env::Condition;
use crate::harness::{CellSummary, PolicySpec, Summary, TrialResult};
use crate::theory::{self, cost_to_f64, StoreShape};
use crate::Result;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

// ---------------------------------------------------------------------------
// Results files
// ---------------------------------------------------------------------------

/// One TrialResult object per line, in deterministic trial order.
pub fn write_results_jsonl(path: &Path, results: &[TrialResult]) -> Result<()> {
    let mut file = fs::File::create(path)?;
    for r in results {
        serde_json::to_writer(&mut file, r)?;
        file.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_results_jsonl(path: &Path) -> Result<Vec<TrialResult>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn pct(v: f64) -> String {
    format!("{v:.1}")
}

fn stat_or_na(cell: &CellSummary, f: impl Fn(&crate::harness::CellStats) -> f64) -> String {
    match &cell.stats {
        Some(s) => num(f(s)),
        None => "NA".to_string(),
    }
}

fn pct_or_na(cell: &CellSummary, f: impl Fn(&crate::harness::CellStats) -> f64) -> String {
    match &cell.stats {
        Some(s) => pct(f(s)),
        None => "NA".to_string(),
    }
}

pub const SUMMARY_HEADER: &str = "condition,content,M,P,policy,n_trials,median_R,iqr_lo_R,iqr_hi_R,median_Tok,iqr_lo_Tok,iqr_hi_Tok,accuracy_pct,exhausted_pct,predicted_R,predicted_bound";

/// Summary CSV, one row per cell. Cells with no scorable trials carry NA
/// statistics.
pub fn summary_csv(summary: &Summary) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for cell in &summary.cells {
        let k = &cell.key;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            k.condition,
            k.content,
            k.m,
            k.p,
            k.policy,
            cell.n_trials,
            stat_or_na(cell, |s| s.median_r),
            stat_or_na(cell, |s| s.iqr_lo_r),
            stat_or_na(cell, |s| s.iqr_hi_r),
            stat_or_na(cell, |s| s.median_tok),
            stat_or_na(cell, |s| s.iqr_lo_tok),
            stat_or_na(cell, |s| s.iqr_hi_tok),
            pct_or_na(cell, |s| s.accuracy_pct),
            pct_or_na(cell, |s| s.exhausted_pct),
            num(cell.predicted_r),
            cell.predicted_bound,
        );
    }
    out
}

/// Fixed-width table for terminal output.
pub fn summary_table(summary: &Summary) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<18} {:<12} {:>6} {:<28} {:>5} {:>8} {:>13} {:>10} {:>13} {:>6} {:>6} {:>8} {:>6}",
        "condition", "content", "M", "policy", "n", "med_R", "iqr_R", "med_Tok", "iqr_Tok",
        "acc%", "exh%", "pred_R", "bound"
    );
    for cell in &summary.cells {
        let k = &cell.key;
        let (med_r, iqr_r, med_t, iqr_t, acc, exh) = match &cell.stats {
            Some(s) => (
                num(s.median_r),
                format!("[{},{}]", num(s.iqr_lo_r), num(s.iqr_hi_r)),
                num(s.median_tok),
                format!("[{},{}]", num(s.iqr_lo_tok), num(s.iqr_hi_tok)),
                pct(s.accuracy_pct),
                pct(s.exhausted_pct),
            ),
            None => ("no".into(), "data".into(), "-".into(), "-".into(), "-".into(), "-".into()),
        };
        let _ = writeln!(
            out,
            "{:<18} {:<12} {:>6} {:<28} {:>5} {:>8} {:>13} {:>10} {:>13} {:>6} {:>6} {:>8} {:>6}",
            k.condition,
            k.content,
            k.m,
            k.policy,
            cell.n_trials,
            med_r,
            iqr_r,
            med_t,
            iqr_t,
            acc,
            exh,
            num(cell.predicted_r),
            cell.predicted_bound,
        );
    }
    out
}

// ---------------------------------------------------------------------------
// Theory comparison
// ---------------------------------------------------------------------------

/// One row of the measured-vs-predicted table.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub condition: String,
    pub content: String,
    pub m: u64,
    pub policy: String,
    pub measured_median_r: f64,
    pub predicted_r: f64,
    pub ratio: f64,
    /// Worst-case read bound of the policy when it is an oracle (None for
    /// policies without one).
    pub oracle_bound: Option<f64>,
    pub violates_bound: bool,
}

/// Per-policy oracle read bound for a store of `n` pages. The index
/// traversals inherit the cell's b-ary bound (computed with the cell's real
/// section size).
fn oracle_bound(policy_label: &str, n: u64, indexed_bound: u64) -> Option<f64> {
    let spec = parse_label(policy_label);
    match spec.id.as_str() {
        "linear_scan" | "uniform_probe" => Some(n as f64),
        "binary_search" => {
            let p_err: f64 = spec
                .params
                .get("p_err")
                .and_then(|v| v.parse().ok())
                .unwrap_or(0.0);
            if p_err == 0.0 {
                Some(((n as f64).log2().ceil() + 1.0).max(1.0))
            } else {
                None
            }
        }
        "flat_toc" | "deep_traversal" => Some(indexed_bound as f64),
        _ => None,
    }
}

/// Inverse of [`PolicySpec::label`]: `id(k=v;k=v)` back to a spec.
fn parse_label(label: &str) -> PolicySpec {
    match label.split_once('(') {
        None => PolicySpec::new(label),
        Some((id, rest)) => {
            let params = rest.trim_end_matches(')');
            PolicySpec::parse(&format!("{id};{params}")).unwrap_or_else(|_| PolicySpec::new(id))
        }
    }
}

/// Builds the comparison table: measured median reads against the theory
/// prediction, flagging any oracle cell whose median exceeds its bound.
pub fn compare(summary: &Summary) -> Vec<ComparisonRow> {
    let mut rows = Vec::new();
    for cell in &summary.cells {
        let Some(stats) = &cell.stats else { continue };
        let shape = StoreShape::new(cell.key.m, cell.key.p, 10).expect("validated shape");
        let n = shape.page_count_n;
        let bound = oracle_bound(&cell.key.policy, n, cell.predicted_bound);
        let violates = bound.map(|b| stats.median_r > b).unwrap_or(false);
        rows.push(ComparisonRow {
            condition: cell.key.condition.clone(),
            content: cell.key.content.clone(),
            m: cell.key.m,
            policy: cell.key.policy.clone(),
            measured_median_r: stats.median_r,
            predicted_r: cell.predicted_r,
            ratio: stats.median_r / cell.predicted_r,
            oracle_bound: bound,
            violates_bound: violates,
        });
    }
    rows
}

pub fn compare_table(rows: &[ComparisonRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<18} {:<12} {:>6} {:<28} {:>8} {:>8} {:>7} {:>7} {:>9}",
        "condition", "content", "M", "policy", "med_R", "pred_R", "ratio", "bound", "violates"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<18} {:<12} {:>6} {:<28} {:>8} {:>8} {:>7.3} {:>7} {:>9}",
            r.condition,
            r.content,
            r.m,
            r.policy,
            num(r.measured_median_r),
            num(r.predicted_r),
            r.ratio,
            r.oracle_bound.map(num).unwrap_or_else(|| "-".into()),
            if r.violates_bound { "YES" } else { "no" },
        );
    }
    out
}

// ---------------------------------------------------------------------------
// Plot data
// ---------------------------------------------------------------------------

/// One plottable series: x ascending, IQR band around the median.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    pub x: Vec<u64>,
    pub y: Vec<f64>,
    pub band_lo: Vec<f64>,
    pub band_hi: Vec<f64>,
    /// Theory overlay values aligned with `x`, when the figure has one.
    pub overlay: Vec<f64>,
}

impl PlotSeries {
    fn push(&mut self, x: u64, y: f64, lo: f64, hi: f64, overlay: f64) {
        debug_assert!(self.x.last().is_none_or(|&last| x > last), "x must ascend");
        debug_assert!(lo <= y && y <= hi, "band must contain the median");
        self.x.push(x);
        self.y.push(y);
        self.band_lo.push(lo);
        self.band_hi.push(hi);
        self.overlay.push(overlay);
    }
}

/// Which figure-analog file a cell belongs to. Every cell lands in exactly
/// one of the three cell-level files.
pub fn figure_analog(cell: &CellSummary) -> &'static str {
    if cell.key.content != "hash" {
        "content_compare"
    } else if cell.key.condition == Condition::DeepIndexed.to_string() {
        "deep_vs_flat"
    } else {
        "reads_vs_m"
    }
}

const CELL_PLOT_HEADER: &str = "condition,content,policy,M,n_trials,median_R,iqr_lo_R,iqr_hi_R,median_Tok,iqr_lo_Tok,iqr_hi_Tok,accuracy_pct,predicted_R,predicted_bound";

fn cell_plot_rows(summary: &Summary, analog: &str) -> String {
    let mut out = String::from(CELL_PLOT_HEADER);
    out.push('\n');
    for cell in &summary.cells {
        if figure_analog(cell) != analog {
            continue;
        }
        let Some(s) = &cell.stats else { continue };
        let k = &cell.key;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            k.condition,
            k.content,
            k.policy,
            k.m,
            cell.n_trials,
            num(s.median_r),
            num(s.iqr_lo_r),
            num(s.iqr_hi_r),
            num(s.median_tok),
            num(s.iqr_lo_tok),
            num(s.iqr_hi_tok),
            pct(s.accuracy_pct),
            num(cell.predicted_r),
            cell.predicted_bound,
        );
    }
    out
}

/// Separation-ratio file: FLAT over INDEXED median reads per (content, M),
/// with the exact `(N+1)/2` and coarse `M/(2P)` theory curves.
fn separation_rows(summary: &Summary) -> String {
    let mut out = String::from(
        "content,M,flat_median_R,indexed_median_R,ratio,predicted_ratio_exact,predicted_ratio_approx",
    );
    out.push('\n');
    type MedianPair = (Option<f64>, Option<f64>);
    let mut pairs: std::collections::BTreeMap<(String, u64, u64), MedianPair> =
        std::collections::BTreeMap::new();
    for cell in &summary.cells {
        let Some(s) = &cell.stats else { continue };
        let key = (cell.key.content.clone(), cell.key.m, cell.key.p);
        let entry = pairs.entry(key).or_default();
        if cell.key.condition == Condition::Flat.to_string() && entry.0.is_none() {
            entry.0 = Some(s.median_r);
        }
        if cell.key.condition == Condition::Indexed.to_string() && entry.1.is_none() {
            entry.1 = Some(s.median_r);
        }
    }
    for ((content, m, p), (flat, indexed)) in pairs {
        let (Some(flat), Some(indexed)) = (flat, indexed) else { continue };
        if indexed == 0.0 {
            continue;
        }
        let shape = StoreShape::new(m, p, 10).expect("validated shape");
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            content,
            m,
            num(flat),
            num(indexed),
            num(flat / indexed),
            num(cost_to_f64(theory::predicted_flat_reads(&shape))),
            num(theory::predicted_flat_reads_approx(&shape)),
        );
    }
    out
}

/// Token-cost file: the token view of every cell (derived across all three
/// cell-level files).
fn token_rows(summary: &Summary) -> String {
    let mut out = String::from("condition,content,policy,M,median_Tok,iqr_lo_Tok,iqr_hi_Tok");
    out.push('\n');
    for cell in &summary.cells {
        let Some(s) = &cell.stats else { continue };
        let k = &cell.key;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            k.condition,
            k.content,
            k.policy,
            k.m,
            num(s.median_tok),
            num(s.iqr_lo_tok),
            num(s.iqr_hi_tok),
        );
    }
    out
}

/// Writes the five plot-data CSVs and returns their paths.
pub fn emit_plotdata(summary: &Summary, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let files = [
        ("plot_reads_vs_m.csv", cell_plot_rows(summary, "reads_vs_m")),
        ("plot_deep_vs_flat.csv", cell_plot_rows(summary, "deep_vs_flat")),
        (
            "plot_content_compare.csv",
            cell_plot_rows(summary, "content_compare"),
        ),
        ("plot_separation_ratio.csv", separation_rows(summary)),
        ("plot_tokens_vs_m.csv", token_rows(summary)),
    ];
    let mut paths = Vec::new();
    for (name, content) in files {
        let path = out_dir.join(name);
        fs::write(&path, content)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Builds per-(condition, content, policy) read series from a summary; used
/// by tests and available to downstream tooling.
pub fn read_series(summary: &Summary) -> Vec<PlotSeries> {
    let mut by_label: std::collections::BTreeMap<String, Vec<&CellSummary>> =
        std::collections::BTreeMap::new();
    for cell in &summary.cells {
        if cell.stats.is_none() {
            continue;
        }
        let label = format!(
            "{}/{}/{}",
            cell.key.condition, cell.key.content, cell.key.policy
        );
        by_label.entry(label).or_default().push(cell);
    }
    by_label
        .into_iter()
        .map(|(label, mut cells)| {
            cells.sort_by_key(|c| c.key.m);
            let mut series = PlotSeries {
                label,
                x: Vec::new(),
                y: Vec::new(),
                band_lo: Vec::new(),
                band_hi: Vec::new(),
                overlay: Vec::new(),
            };
            for cell in cells {
                let s = cell.stats.as_ref().expect("filtered above");
                series.push(cell.key.m, s.median_r, s.iqr_lo_r, s.iqr_hi_r, cell.predicted_r);
            }
            series
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::TokenCounter;
    use crate::harness::{aggregate, run_sweep, SweepSpec};
    use crate::store::{ContentKind, ContentSpec};

    fn small_summary() -> Summary {
        let spec = SweepSpec {
            conditions: vec![Condition::Flat, Condition::Indexed, Condition::DeepIndexed],
            contents: vec![
                ContentSpec::new(ContentKind::Hash),
                ContentSpec::new(ContentKind::Numeric),
            ],
            ms: vec![50, 100],
            trials: Some(5),
            counter: TokenCounter::Bytes4,
            ..SweepSpec::default()
        };
        aggregate(&run_sweep(&spec).unwrap())
    }

    #[test]
    fn jsonl_round_trips() {
        let spec = SweepSpec {
            ms: vec![50],
            trials: Some(3),
            ..SweepSpec::default()
        };
        let results = run_sweep(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.jsonl");
        write_results_jsonl(&path, &results).unwrap();
        let back = read_results_jsonl(&path).unwrap();
        assert_eq!(back.len(), results.len());
        assert_eq!(back[0].transcript_digest, results[0].transcript_digest);
    }

    #[test]
    fn summary_csv_has_fixed_columns() {
        let summary = small_summary();
        let csv = summary_csv(&summary);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), SUMMARY_HEADER);
        let first = lines.next().unwrap();
        assert_eq!(first.split(',').count(), SUMMARY_HEADER.split(',').count());
    }

    #[test]
    fn every_cell_lands_in_exactly_one_figure_file() {
        let summary = small_summary();
        for cell in &summary.cells {
            let analog = figure_analog(cell);
            let hits = ["reads_vs_m", "deep_vs_flat", "content_compare"]
                .iter()
                .filter(|a| **a == analog)
                .count();
            assert_eq!(hits, 1);
        }
        // And the emitted files jointly cover all cells exactly once.
        let dir = tempfile::tempdir().unwrap();
        emit_plotdata(&summary, dir.path()).unwrap();
        let mut rows = 0;
        for name in ["plot_reads_vs_m.csv", "plot_deep_vs_flat.csv", "plot_content_compare.csv"] {
            let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
            rows += text.lines().count() - 1;
        }
        assert_eq!(rows, summary.cells.len());
    }

    #[test]
    fn separation_file_pairs_flat_with_indexed() {
        let summary = small_summary();
        let dir = tempfile::tempdir().unwrap();
        emit_plotdata(&summary, dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("plot_separation_ratio.csv")).unwrap();
        // 2 contents x 2 Ms with both conditions present.
        assert_eq!(text.lines().count(), 1 + 4);
        for line in text.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            let ratio: f64 = fields[4].parse().unwrap();
            assert!(ratio >= 1.0, "separation below 1: {line}");
        }
    }

    #[test]
    fn plot_series_bands_contain_medians_and_x_ascends() {
        let summary = small_summary();
        for series in read_series(&summary) {
            for i in 0..series.x.len() {
                assert!(series.band_lo[i] <= series.y[i]);
                assert!(series.y[i] <= series.band_hi[i]);
                if i > 0 {
                    assert!(series.x[i] > series.x[i - 1]);
                }
            }
        }
    }

    #[test]
    fn compare_flags_no_violations_for_oracles() {
        let summary = small_summary();
        let rows = compare(&summary);
        assert!(!rows.is_empty());
        for row in &rows {
            assert!(!row.violates_bound, "oracle bound violated: {row:?}");
            if row.policy == "flat_toc" || row.policy == "deep_traversal" {
                let bound = row.oracle_bound.unwrap();
                assert!(row.measured_median_r / bound <= 1.0);
            }
        }
    }

    #[test]
    fn compare_of_empty_summary_is_empty() {
        let rows = compare(&Summary::default());
        assert!(rows.is_empty());
        assert_eq!(compare_table(&rows).lines().count(), 1);
    }
}
