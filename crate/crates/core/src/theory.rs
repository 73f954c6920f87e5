//! Closed-form retrieval-cost calculators.
//!
//! Everything here is exact: expected costs are rationals (never floats) and
//! logarithmic bounds use an exact integer logarithm, because a floating
//! `log_b` misclassifies exact powers of `b`. The harness overlays these
//! values on measured results; the CLI exposes them under `predict`.

use crate::error::Error;
use crate::Result;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};

/// Exact cost value in page reads.
pub type Cost = Rational64;

/// Renders a cost for human-facing output (exact for the denominators that
/// occur here).
pub fn cost_to_f64(c: Cost) -> f64 {
    *c.numer() as f64 / *c.denom() as f64
}

/// Token make-up of one index page, from which the branching factor derives.
///
/// `page_capacity_c` is the page size in tokens; each index entry costs
/// `eta` tokens of key, `kappa` tokens of separator key and `delta` tokens of
/// formatting overhead. A parameter set is only usable for tree math when the
/// derived branching factor is at least 2; [`branching_factor`] rejects the
/// rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostParams {
    pub page_capacity_c: u64,
    pub eta: u64,
    pub kappa: u64,
    pub delta: u64,
}

impl CostParams {
    pub fn new(page_capacity_c: u64, eta: u64, kappa: u64, delta: u64) -> Result<Self> {
        for (name, v) in [
            ("page_capacity_c", page_capacity_c),
            ("eta", eta),
            ("kappa", kappa),
            ("delta", delta),
        ] {
            if v < 1 {
                return Err(Error::InvalidCostParams(format!("{name} must be >= 1")));
            }
        }
        Ok(CostParams {
            page_capacity_c,
            eta,
            kappa,
            delta,
        })
    }
}

/// Item-level shape of a paginated store: `M` items packed `P` per page in
/// sections of `S` pages, giving `N = ceil(M/P)` pages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreShape {
    pub item_count_m: u64,
    pub items_per_page_p: u64,
    pub pages_per_section_s: u64,
    pub page_count_n: u64,
}

impl StoreShape {
    pub fn new(item_count_m: u64, items_per_page_p: u64, pages_per_section_s: u64) -> Result<Self> {
        if item_count_m < 1 {
            return Err(Error::InvalidShape("item count M must be >= 1".into()));
        }
        if items_per_page_p < 1 {
            return Err(Error::InvalidShape("items per page P must be >= 1".into()));
        }
        if pages_per_section_s < 1 {
            return Err(Error::InvalidShape("pages per section S must be >= 1".into()));
        }
        Ok(StoreShape {
            item_count_m,
            items_per_page_p,
            pages_per_section_s,
            page_count_n: item_count_m.div_ceil(items_per_page_p),
        })
    }
}

/// Shape of an accumulating store: `N0` initial pages growing by one page per
/// step for `T` steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccumulationShape {
    pub initial_pages_n0: u64,
    pub steps_t: u64,
}

impl AccumulationShape {
    pub fn new(initial_pages_n0: u64, steps_t: u64) -> Result<Self> {
        if steps_t < 1 {
            return Err(Error::InvalidShape("steps T must be >= 1".into()));
        }
        Ok(AccumulationShape {
            initial_pages_n0,
            steps_t,
        })
    }
}

/// Index entries per page: `b = floor(C / (eta + kappa + delta))`.
///
/// Rejects parameter sets with `b < 2`, for which no tree exists.
pub fn branching_factor(p: &CostParams) -> Result<u64> {
    let per_entry = p.eta + p.kappa + p.delta;
    let b = p.page_capacity_c / per_entry;
    if b < 2 {
        return Err(Error::BranchingFactorBelowTwo { b });
    }
    Ok(b)
}

/// Expected page reads to find a uniformly placed target by sequential
/// scanning: exactly `(N+1)/2`.
pub fn expected_sequential_cost(n_pages: u64) -> Cost {
    Cost::new(n_pages as i64 + 1, 2)
}

/// Worst-case page reads under sequential access: all `N` pages.
pub fn worst_sequential_cost(n_pages: u64) -> u64 {
    n_pages
}

/// Smallest `k` with `b^k >= n`, the exact integer form of `ceil(log_b n)`.
fn ceil_log(b: u64, n: u64) -> u64 {
    debug_assert!(b >= 2 && n >= 1);
    let (mut k, mut acc) = (0u64, 1u128);
    while acc < n as u128 {
        acc *= b as u128;
        k += 1;
    }
    k
}

/// Page reads to find a target through a `b`-ary index over `N` pages:
/// `ceil(log_b N) + 1` (index descent plus one data read).
pub fn indexed_cost_bound(n_pages: u64, b: u64) -> u64 {
    ceil_log(b, n_pages) + 1
}

/// Expected sequential cost over the indexed bound for the same store.
pub fn separation_ratio(n_pages: u64, b: u64) -> Cost {
    expected_sequential_cost(n_pages) / Cost::from_integer(indexed_cost_bound(n_pages, b) as i64)
}

/// Expected-case cumulative sequential cost over an accumulating store:
/// one retrieval per step, `sum_{t=1..T} (N0 + t + 1)/2`.
pub fn cumulative_sequential_cost(a: &AccumulationShape) -> Cost {
    let (n0, t) = (a.initial_pages_n0 as i64, a.steps_t as i64);
    // sum (n0 + t + 1)/2 = (T*(n0+1) + T(T+1)/2) / 2
    Cost::new(t * (n0 + 1), 2) + Cost::new(t * (t + 1), 4)
}

/// Cumulative indexed cost over an accumulating store:
/// `sum_{t=1..T} indexed_cost_bound(N0 + t, b)`.
pub fn cumulative_indexed_cost(a: &AccumulationShape, b: u64) -> u64 {
    (1..=a.steps_t)
        .map(|t| indexed_cost_bound(a.initial_pages_n0 + t, b))
        .sum()
}

/// Expected sequential reads for a store of `M` items at `P` per page.
pub fn predicted_flat_reads(s: &StoreShape) -> Cost {
    expected_sequential_cost(s.page_count_n)
}

/// The coarser `M/(2P)` form of [`predicted_flat_reads`], reported alongside
/// the exact value in tables and plot data.
pub fn predicted_flat_reads_approx(s: &StoreShape) -> f64 {
    s.item_count_m as f64 / (2.0 * s.items_per_page_p as f64)
}
