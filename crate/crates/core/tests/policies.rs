//! Policy behavior over many seeded trials: fallibility effects, mixture
//! monotonicity, bound conformance, and the no-clairvoyance contract.

use pagebench_core::agents::{DeepTraversal, FlatTocTraversal, Observation, Policy};
use pagebench_core::env::{AgentAction, Condition, ToolCall};
use pagebench_core::harness::{
    execute_trial, median, prepare_trial, run_sweep, run_trial, PolicySpec, PreparedTrial,
    SweepSpec, TrialConfig,
};
use pagebench_core::store::ContentKind;
use pagebench_core::theory::StoreShape;

fn reads_median(policy: PolicySpec, condition: Condition, m: u64, trials: u64) -> f64 {
    let mut reads = Vec::new();
    for t in 0..trials {
        let mut cfg = TrialConfig::new(condition, ContentKind::Hash, m, policy.clone());
        cfg.trial_index = t;
        cfg.budget = 1_000_000_000;
        let r = run_trial(&cfg).expect("trial");
        reads.push(r.data_page_reads as f64);
    }
    reads.sort_by(|a, b| a.total_cmp(b));
    median(&reads)
}

#[test]
fn bound_corruption_slows_binary_search() {
    // Losing bounds costs reads: p_err=0.3 median strictly above the exact
    // search's median at N=50, and every trial still ends correct.
    let exact = reads_median(
        PolicySpec::new("binary_search"),
        Condition::FlatSorted,
        500,
        1000,
    );
    let fallible = reads_median(
        PolicySpec::new("binary_search").with_param("p_err", "0.3"),
        Condition::FlatSorted,
        500,
        1000,
    );
    assert!(
        fallible > exact,
        "p_err=0.3 median {fallible} not above exact median {exact}"
    );
}

#[test]
fn fallible_binary_search_stays_correct() {
    for trial in 0..200 {
        let mut cfg = TrialConfig::new(
            Condition::FlatSorted,
            ContentKind::Hash,
            200,
            PolicySpec::new("binary_search").with_param("p_err", "0.3"),
        );
        cfg.trial_index = trial;
        cfg.budget = 1_000_000_000;
        let r = run_trial(&cfg).expect("trial");
        assert!(r.correct, "trial {trial}");
    }
}

#[test]
fn shortcut_reads_nonincreasing_in_familiarity() {
    // Guess-mode mixture over the flat TOC oracle: expected data-page reads
    // can only fall as the parametric pathway fires more often.
    let mut means = Vec::new();
    for f in ["0", "0.25", "0.5", "0.75", "1"] {
        let mut total = 0u64;
        let trials = 400u64;
        for t in 0..trials {
            let mut cfg = TrialConfig::new(
                Condition::Indexed,
                ContentKind::Hash,
                100,
                PolicySpec::new("shortcut")
                    .with_param("f", f)
                    .with_param("base", "flat_toc"),
            );
            cfg.trial_index = t;
            total += run_trial(&cfg).expect("trial").data_page_reads;
        }
        means.push(total as f64 / trials as f64);
    }
    for pair in means.windows(2) {
        assert!(
            pair[1] <= pair[0] + 1e-9,
            "mean reads increased along f grid: {means:?}"
        );
    }
    assert_eq!(*means.last().unwrap(), 0.0, "f=1 guess mode must read nothing");
}

#[test]
fn shortcut_guess_mode_at_f1_submits_without_reading() {
    for trial in 0..50 {
        let mut cfg = TrialConfig::new(
            Condition::DeepIndexed,
            ContentKind::Encyclopedia,
            200,
            PolicySpec::new("shortcut").with_param("f", "1"),
        );
        cfg.trial_index = trial;
        let r = run_trial(&cfg).expect("trial");
        assert_eq!(r.data_page_reads, 0, "trial {trial}");
        assert_eq!(r.tool_calls, 1, "trial {trial}"); // the submit itself
    }
}

#[test]
fn traversal_extracts_the_truth_for_every_target() {
    // Exhaustive over all 500 stored keys: the flat TOC oracle's submitted
    // value always equals the truth.
    let cfg = TrialConfig::new(
        Condition::Indexed,
        ContentKind::Hash,
        500,
        PolicySpec::new("flat_toc"),
    );
    let prepared = prepare_trial(&cfg).expect("prepare");
    for (key, value) in prepared.store.truth().clone() {
        let trial = PreparedTrial {
            store: prepared.store.clone(),
            flat_toc: prepared.flat_toc.clone(),
            deep: None,
            target_key: key.clone(),
            target_value: value,
        };
        let r = execute_trial(&cfg, trial, Box::new(FlatTocTraversal::new())).expect("trial");
        assert!(r.correct, "wrong value extracted for {key}");
        assert_eq!(r.data_page_reads, 1);
    }
}

#[test]
fn scanners_respect_worst_case_bounds() {
    for policy in ["linear_scan", "uniform_probe"] {
        for trial in 0..100 {
            let mut cfg = TrialConfig::new(
                Condition::Flat,
                ContentKind::Hash,
                200,
                PolicySpec::new(policy),
            );
            cfg.trial_index = trial;
            cfg.budget = 1_000_000_000;
            let r = run_trial(&cfg).expect("trial");
            assert!(r.data_page_reads <= 20, "{policy} trial {trial}");
            assert!(r.correct, "{policy} trial {trial}");
        }
    }
}

#[test]
fn policies_have_no_clairvoyance() {
    // Identical observation prefixes produce identical actions; feeding a
    // different tool result changes behavior only from the step that
    // consumes it.
    let shape = StoreShape::new(200, 10, 10).unwrap();
    let target = pagebench_core::key::Key::Num(42);
    let obs = |last: Option<&'static str>, calls: u64| Observation {
        last_result: last,
        calls_made: calls,
        condition: Condition::DeepIndexed,
        shape,
        target_key: &target,
    };

    let mut a = DeepTraversal::new();
    let mut b = DeepTraversal::new();
    let first_a = a.step(&obs(None, 0)).unwrap().action;
    let first_b = b.step(&obs(None, 0)).unwrap().action;
    assert_eq!(first_a, first_b);
    assert_eq!(first_a, AgentAction::Call(ToolCall::GetIndex));

    // Same master TOC -> same section hop.
    let master_one = "MASTER INDEX (2 sections)\nsection 1: 1..100\nsection 2: 101..200\n";
    let second_a = a.step(&obs(Some(master_one), 1)).unwrap().action;
    let second_b = b.step(&obs(Some(master_one), 1)).unwrap().action;
    assert_eq!(second_a, second_b);

    // Divergence appears exactly when the observed results diverge.
    let toc_one = "SECTION 1 INDEX (2 pages)\npage 3: 1..50\npage 4: 51..100\n";
    let toc_two = "SECTION 1 INDEX (2 pages)\npage 7: 1..50\npage 8: 51..100\n";
    let third_a = a.step(&obs(Some(toc_one), 2)).unwrap().action;
    let third_b = b.step(&obs(Some(toc_two), 2)).unwrap().action;
    assert_eq!(third_a, AgentAction::Call(ToolCall::ReadPage(3)));
    assert_eq!(third_b, AgentAction::Call(ToolCall::ReadPage(7)));
}

#[test]
fn sweep_results_match_serial_execution() {
    // Parallel sweep output is identical to running each config serially,
    // so results are independent of parallelism degree and execution order.
    let spec = SweepSpec {
        ms: vec![50, 100],
        trials: Some(3),
        ..SweepSpec::default()
    };
    let parallel = run_sweep(&spec).unwrap();
    let serial: Vec<_> = spec
        .trial_configs()
        .unwrap()
        .iter()
        .map(|c| run_trial(c).unwrap())
        .collect();
    assert_eq!(parallel.len(), serial.len());
    for (p, s) in parallel.iter().zip(&serial) {
        assert_eq!(p.transcript_digest, s.transcript_digest);
        assert_eq!(p.tokens, s.tokens);
    }
}
