//! `pagebench` — run retrieval benchmarks over paginated stores, print
//! theory predictions, compare measurements against them, and emit plot
//! data.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pagebench_core::env::{Condition, TokenCounter};
use pagebench_core::harness::{
    aggregate, grow_mode, run_sweep, GrowAccess, GrowModeConfig, PolicySpec, SweepSpec,
};
use pagebench_core::report;
use pagebench_core::store::{ContentKind, ContentSpec};
use pagebench_core::theory::{self, cost_to_f64, CostParams, StoreShape};
use pagebench_core::sweepfile;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "pagebench", version, about = "Benchmark sequential vs indexed retrieval for page-bounded agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep (from flags or a sweep file) and write results, summary,
    /// and plot data.
    Run(Box<RunArgs>),
    /// Print closed-form cost predictions for a store shape.
    Predict(PredictArgs),
    /// Compare measured medians in a results file against theory.
    Compare(CompareArgs),
    /// Grow-mode experiment: the store gains one page per step.
    Grow(GrowArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Sweep file (key=value lines); flags below override its values.
    #[arg(long)]
    sweep_file: Option<PathBuf>,
    /// Conditions: flat, flat-sorted, indexed, indexed-corrupted, deep-indexed.
    #[arg(long, value_delimiter = ',')]
    condition: Vec<String>,
    /// Content types: hash, numeric, encyclopedia.
    #[arg(long, value_delimiter = ',')]
    content: Vec<String>,
    /// Store sizes (item counts).
    #[arg(long = "M", value_delimiter = ',')]
    m: Vec<u64>,
    /// Items per page.
    #[arg(long = "P")]
    p: Option<u64>,
    /// Pages per section (deep index).
    #[arg(long = "S")]
    s: Option<u64>,
    /// Policy id (auto picks the condition's oracle).
    #[arg(long)]
    policy: Option<String>,
    /// Policy parameter k=v (repeatable).
    #[arg(long = "policy-param")]
    policy_param: Vec<String>,
    /// Trials per cell (default: 50; 30 for flat-sorted; 20 for M >= 1000).
    #[arg(long)]
    trials: Option<u64>,
    /// Token budget per trial.
    #[arg(long)]
    budget: Option<u64>,
    /// Token counter: bytes4, whitespace, external.
    #[arg(long)]
    counter: Option<String>,
    /// Added to every trial index (fresh seeds without new configs).
    #[arg(long, default_value_t = 0)]
    seed_offset: u64,
    /// Step cap per trial.
    #[arg(long)]
    max_steps: Option<u64>,
    /// JSONL corpus for encyclopedia content (bundled corpus when unset).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Exit nonzero if any trial hits an infrastructure error.
    #[arg(long)]
    strict: bool,
    /// Log remote request/response bodies verbatim to stderr.
    #[arg(long)]
    log_wire: bool,
}

#[derive(Args)]
struct PredictArgs {
    /// Item count.
    #[arg(long = "M")]
    m: u64,
    /// Items per page.
    #[arg(long = "P", default_value_t = 10)]
    p: u64,
    /// Pages per section.
    #[arg(long = "S", default_value_t = 10)]
    s: u64,
    /// Branching factor (overrides the value derived from --C/--eta/--kappa/--delta).
    #[arg(long)]
    b: Option<u64>,
    /// Page capacity in tokens (with eta/kappa/delta, derives b).
    #[arg(long = "C")]
    c: Option<u64>,
    #[arg(long, default_value_t = 8)]
    eta: u64,
    #[arg(long, default_value_t = 8)]
    kappa: u64,
    #[arg(long, default_value_t = 4)]
    delta: u64,
    /// Also print cumulative grow-mode costs for this many steps.
    #[arg(long = "T")]
    t: Option<u64>,
    /// Initial pages for the cumulative forms.
    #[arg(long, default_value_t = 0)]
    n0: u64,
}

#[derive(Args)]
struct CompareArgs {
    /// Results JSONL produced by `run`.
    #[arg(long)]
    results: PathBuf,
}

#[derive(Args)]
struct GrowArgs {
    #[arg(long, default_value_t = 0)]
    n0: u64,
    /// Steps (one page appended per step).
    #[arg(long = "T")]
    t: u64,
    /// sequential or indexed-rebuild.
    #[arg(long)]
    access: String,
    #[arg(long, default_value_t = 100)]
    runs: u64,
    #[arg(long, default_value_t = 0)]
    seed_offset: u64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(*args),
        Command::Predict(args) => predict(args),
        Command::Compare(args) => compare(args),
        Command::Grow(args) => grow(args),
    }
}

fn build_spec(args: &RunArgs) -> Result<(SweepSpec, PathBuf)> {
    let (mut spec, file_out_dir) = match &args.sweep_file {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading sweep file {}", path.display()))?;
            let file = sweepfile::parse(&text)?;
            (file.spec, file.out_dir)
        }
        None => (SweepSpec::default(), None),
    };

    if !args.condition.is_empty() {
        spec.conditions = args
            .condition
            .iter()
            .map(|s| s.parse::<Condition>())
            .collect::<pagebench_core::Result<_>>()?;
    }
    if !args.content.is_empty() {
        spec.contents = args
            .content
            .iter()
            .map(|s| {
                let kind = s.parse::<ContentKind>()?;
                let mut c = ContentSpec::new(kind);
                if kind == ContentKind::Encyclopedia {
                    c.corpus_path = args.corpus.clone();
                }
                Ok(c)
            })
            .collect::<pagebench_core::Result<_>>()?;
    }
    if !args.m.is_empty() {
        spec.ms = args.m.clone();
    }
    if let Some(p) = args.p {
        spec.p = p;
    }
    if let Some(s) = args.s {
        spec.s = s;
    }
    if let Some(policy) = &args.policy {
        let mut p = PolicySpec::parse(policy)?;
        for param in &args.policy_param {
            let (k, v) = param
                .split_once('=')
                .with_context(|| format!("--policy-param needs k=v, got {param:?}"))?;
            p.params.insert(k.trim().to_string(), v.trim().to_string());
        }
        spec.policies = vec![p];
    } else if !args.policy_param.is_empty() {
        bail!("--policy-param requires --policy");
    }
    if args.trials.is_some() {
        spec.trials = args.trials;
    }
    if let Some(budget) = args.budget {
        spec.budget = budget;
    }
    if let Some(counter) = &args.counter {
        spec.counter = counter.parse::<TokenCounter>()?;
    }
    if let Some(max_steps) = args.max_steps {
        spec.max_steps = max_steps;
    }
    spec.seed_offset = args.seed_offset;
    spec.log_wire = args.log_wire;

    // Flag out-dir wins over the sweep file's; "out" is the flag default.
    let out_dir = if args.out_dir.as_path() != Path::new("out") {
        args.out_dir.clone()
    } else {
        file_out_dir.unwrap_or_else(|| args.out_dir.clone())
    };
    Ok((spec, out_dir))
}

fn run(args: RunArgs) -> Result<()> {
    let (spec, out_dir) = build_spec(&args)?;
    let results = run_sweep(&spec)?;
    let summary = aggregate(&results);

    fs::create_dir_all(&out_dir)?;
    let results_path = out_dir.join("results.jsonl");
    report::write_results_jsonl(&results_path, &results)?;
    fs::write(out_dir.join("summary.csv"), report::summary_csv(&summary))?;
    report::emit_plotdata(&summary, &out_dir)?;

    println!("{}", report::summary_table(&summary));
    println!("theory comparison (predicted_R is the expected sequential cost):");
    println!("{}", report::compare_table(&report::compare(&summary)));
    println!(
        "wrote {} trials to {}",
        results.len(),
        results_path.display()
    );

    let infra = results.iter().filter(|r| r.infrastructure_error).count();
    if infra > 0 {
        eprintln!("{infra} trial(s) hit infrastructure errors (excluded from accuracy)");
        if args.strict {
            bail!("--strict: {infra} infrastructure error(s)");
        }
    }
    Ok(())
}

fn predict(args: PredictArgs) -> Result<()> {
    let shape = StoreShape::new(args.m, args.p, args.s)?;
    let n = shape.page_count_n;
    let b = match (args.b, args.c) {
        (Some(b), _) => b,
        (None, Some(c)) => {
            let params = CostParams::new(c, args.eta, args.kappa, args.delta)?;
            let b = theory::branching_factor(&params)?;
            println!("branching factor b = floor(C/(eta+kappa+delta)) = {b}");
            b
        }
        (None, None) => args.s.max(2),
    };
    if b < 2 {
        bail!("branching factor must be >= 2, got {b}");
    }

    let mut out = String::new();
    let _ = writeln!(out, "N = {n} pages (M={}, P={})", args.m, args.p);
    let _ = writeln!(
        out,
        "expected sequential reads (N+1)/2 = {} (approx M/(2P) = {})",
        cost_to_f64(theory::expected_sequential_cost(n)),
        theory::predicted_flat_reads_approx(&shape),
    );
    let _ = writeln!(
        out,
        "worst-case sequential reads = {}",
        theory::worst_sequential_cost(n)
    );
    let _ = writeln!(
        out,
        "indexed bound ceil(log_b N)+1 (b={b}) = {}",
        theory::indexed_cost_bound(n, b)
    );
    let _ = writeln!(
        out,
        "separation ratio = {}",
        cost_to_f64(theory::separation_ratio(n, b))
    );
    if let Some(t) = args.t {
        let acc = theory::AccumulationShape::new(args.n0, t)?;
        let _ = writeln!(
            out,
            "cumulative over T={t} steps from N0={} (expected-case accumulation):",
            args.n0
        );
        let _ = writeln!(
            out,
            "  sequential = {}",
            cost_to_f64(theory::cumulative_sequential_cost(&acc))
        );
        let _ = writeln!(
            out,
            "  indexed    = {}",
            theory::cumulative_indexed_cost(&acc, b)
        );
    }
    print!("{out}");
    Ok(())
}

fn compare(args: CompareArgs) -> Result<()> {
    let results = report::read_results_jsonl(&args.results)?;
    let summary = aggregate(&results);
    let rows = report::compare(&summary);
    println!("{}", report::compare_table(&rows));
    let violations = rows.iter().filter(|r| r.violates_bound).count();
    if violations > 0 {
        bail!("{violations} cell(s) violate oracle bounds");
    }
    Ok(())
}

fn grow(args: GrowArgs) -> Result<()> {
    let cfg = GrowModeConfig {
        n0: args.n0,
        t: args.t,
        access: args.access.parse::<GrowAccess>()?,
        runs: args.runs,
        seed_offset: args.seed_offset,
    };
    let series = grow_mode(&cfg)?;

    fs::create_dir_all(&args.out_dir)?;
    let mut csv = String::from("step,mean_reads,mean_cumulative,predicted_cumulative_expected_case\n");
    for i in 0..series.mean_reads.len() {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            i + 1,
            series.mean_reads[i],
            series.mean_cumulative[i],
            series.predicted_cumulative[i]
        );
    }
    let path = args.out_dir.join(format!("grow_{}.csv", cfg.access));
    fs::write(&path, csv)?;

    println!(
        "grow mode: access={}, N0={}, T={}, runs={}",
        cfg.access, cfg.n0, cfg.t, cfg.runs
    );
    println!(
        "final cumulative reads: measured mean = {}, predicted (expected-case accumulation) = {}",
        series.final_mean_cumulative(),
        series.predicted_cumulative.last().unwrap(),
    );
    if cfg.access == GrowAccess::IndexedRebuild {
        println!(
            "index maintenance (reported separately, not charged as reads): {} TOC entries rebuilt per run",
            series.rebuild_entries_per_run
        );
        let seq = theory::cumulative_sequential_cost(&theory::AccumulationShape::new(
            cfg.n0, cfg.t,
        )?);
        println!(
            "expected sequential/indexed ratio at T={}: {}",
            cfg.t,
            cost_to_f64(seq) / series.final_mean_cumulative()
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}
