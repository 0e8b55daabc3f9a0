//! Adaptive top-down support recovery for tree-sparse signals.
//!
//! The procedure tests coordinates by direct measurement, starting at the
//! root: a node whose averaged observation clears the threshold `tau` joins
//! the estimate and enqueues its children; a node that fails is dropped
//! along with its whole subtree. On the good event (every on-support test
//! passes, every neighbor test fails) the estimate equals the true support
//! and the procedure spends at most `r(2k + 1)` measurements.

use crate::error::{Error, Result};
use crate::sensing::MeasurementOracle;
use crate::tree::TreeShape;
use crate::IndexSet;
use std::collections::{BTreeSet, VecDeque};

/// Threshold for the single-measurement procedure:
/// `sqrt(2 sigma^2 ln(4 k' / delta))`. Natural logarithm.
pub fn threshold_lemma1(k_prime: usize, delta: f64, sigma2: f64) -> Result<f64> {
    threshold_corollary(k_prime, delta, sigma2, 1)
}

/// Threshold for the `r`-repeat variant:
/// `sqrt(2 (sigma^2 / r) ln(4 k' / delta))`. Equals [`threshold_lemma1`]
/// at `r = 1`.
pub fn threshold_corollary(k_prime: usize, delta: f64, sigma2: f64, r: u32) -> Result<f64> {
    if k_prime == 0 {
        return Err(Error::arg("sparsity parameter k' must be at least 1"));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::arg("delta must be positive"));
    }
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(Error::arg("sigma2 must be finite and nonnegative"));
    }
    if r == 0 {
        return Err(Error::arg("repeat count must be at least 1"));
    }
    let ratio = 4.0 * k_prime as f64 / delta;
    if ratio <= 1.0 {
        return Err(Error::arg("4k'/delta must exceed 1 for a real threshold"));
    }
    Ok((2.0 * (sigma2 / f64::from(r)) * ratio.ln()).sqrt())
}

/// Amplitude sufficient for recovery with probability `1 - delta` by the
/// `r`-repeat procedure when `k' <= beta k`:
/// `sqrt(8 [1 + ln(4 beta / delta)]) * sqrt((sigma^2 / r) ln k)`.
pub fn sufficient_mu_corollary(
    k: usize,
    beta: f64,
    delta: f64,
    sigma2: f64,
    r: u32,
) -> Result<f64> {
    if k < 2 {
        return Err(Error::arg("sparsity k must be at least 2"));
    }
    if !(beta >= 1.0) {
        return Err(Error::arg("beta must be at least 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::arg("delta must lie in (0,1)"));
    }
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(Error::arg("sigma2 must be finite and nonnegative"));
    }
    if r == 0 {
        return Err(Error::arg("repeat count must be at least 1"));
    }
    let front = (8.0 * (1.0 + (4.0 * beta / delta).ln())).sqrt();
    Ok(front * ((sigma2 / f64::from(r)) * (k as f64).ln()).sqrt())
}

/// Discipline for the pending-node structure. The analysis (and the final
/// estimate, in the noiseless limit) does not depend on this choice; it
/// only changes the measurement order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraversalOrder {
    /// Breadth-first. The default: coarse-to-fine, and the most useful
    /// partial estimate under truncation.
    #[default]
    Fifo,
    /// Depth-first.
    Lifo,
    /// Set semantics; this implementation removes the smallest index.
    UnorderedSet,
}

/// Parameters of one recovery run.
#[derive(Debug, Clone)]
pub struct TreeSensingParams {
    pub k_prime: usize,
    pub delta: f64,
    pub sigma2: f64,
    pub r: u32,
    pub order: TraversalOrder,
    /// Stop (truncated) rather than start a measurement that would push the
    /// run past this many budget units.
    pub hard_budget: Option<f64>,
}

impl TreeSensingParams {
    pub fn new(k_prime: usize, delta: f64, sigma2: f64, r: u32) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::arg("delta must lie in (0,1)"));
        }
        // surfaces the remaining domain errors (k', r, sigma2)
        threshold_corollary(k_prime, delta, sigma2, r)?;
        Ok(TreeSensingParams {
            k_prime,
            delta,
            sigma2,
            r,
            order: TraversalOrder::default(),
            hard_budget: None,
        })
    }

    pub fn with_order(mut self, order: TraversalOrder) -> Self {
        self.order = order;
        self
    }

    pub fn with_hard_budget(mut self, budget: f64) -> Self {
        self.hard_budget = Some(budget);
        self
    }

    /// The acceptance threshold this run tests against.
    pub fn threshold(&self) -> f64 {
        threshold_corollary(self.k_prime, self.delta, self.sigma2, self.r)
            .expect("validated at construction")
    }
}

/// Outcome of a recovery run.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingResult {
    /// Estimated support. A valid rooted connected subtree whenever the run
    /// was not truncated.
    pub estimate: IndexSet,
    /// Budget units spent by this run.
    pub measurements_used: f64,
    /// True when a hard budget stopped the run before its queue drained.
    pub truncated: bool,
}

enum Pending {
    Fifo(VecDeque<usize>),
    Lifo(Vec<usize>),
    Set(BTreeSet<usize>),
}

impl Pending {
    fn new(order: TraversalOrder, root: usize) -> Self {
        match order {
            TraversalOrder::Fifo => Pending::Fifo(VecDeque::from([root])),
            TraversalOrder::Lifo => Pending::Lifo(vec![root]),
            TraversalOrder::UnorderedSet => Pending::Set(BTreeSet::from([root])),
        }
    }

    fn pop(&mut self) -> Option<usize> {
        match self {
            Pending::Fifo(q) => q.pop_front(),
            Pending::Lifo(q) => q.pop(),
            Pending::Set(q) => q.pop_first(),
        }
    }

    fn push(&mut self, i: usize) {
        match self {
            Pending::Fifo(q) => q.push_back(i),
            Pending::Lifo(q) => q.push(i),
            Pending::Set(q) => {
                q.insert(i);
            }
        }
    }
}

/// Runs the adaptive procedure against `oracle`. Ties accept: `|y| >= tau`
/// adds the node. Budget exhaustion (either the oracle's or
/// `params.hard_budget`) is not an error; the run returns its partial
/// estimate with `truncated = true`.
pub fn run_tree_sensing(
    oracle: &mut MeasurementOracle,
    shape: TreeShape,
    params: &TreeSensingParams,
) -> Result<SensingResult> {
    let tau = params.threshold();
    let cost = f64::from(params.r);
    let start = oracle.consumed();
    let mut estimate = IndexSet::new();
    let mut pending = Pending::new(params.order, 1);
    let mut truncated = false;

    while let Some(node) = pending.pop() {
        let used = oracle.consumed() - start;
        if let Some(hb) = params.hard_budget {
            if used + cost > hb + 1e-9 {
                truncated = true;
                break;
            }
        }
        let y = match oracle.direct_measure(node, params.r) {
            Ok(y) => y,
            Err(Error::BudgetExhausted { .. }) => {
                truncated = true;
                break;
            }
            Err(e) => return Err(e),
        };
        if y.abs() >= tau {
            estimate.insert(node);
            for c in shape.children(node)? {
                pending.push(c);
            }
        }
    }

    Ok(SensingResult {
        estimate,
        measurements_used: oracle.consumed() - start,
        truncated,
    })
}

/// Dense signal estimate from the two-stage procedure.
#[derive(Debug, Clone)]
pub struct TwoStageEstimate {
    /// 0-indexed dense vector; entry `j` estimates the value at node `j+1`.
    pub values: ndarray::Array1<f64>,
    /// Stage-1 support estimate.
    pub support: IndexSet,
    pub measurements_used: f64,
    pub truncated: bool,
}

/// Stage 2 of the two-stage procedure: direct measurement of each index in
/// `support` averaged over `r2` repeats. Budget exhaustion leaves the
/// remaining indices at zero and flags truncation.
pub fn estimate_amplitudes(
    oracle: &mut MeasurementOracle,
    n: usize,
    support: &IndexSet,
    r2: u32,
) -> Result<TwoStageEstimate> {
    let start = oracle.consumed();
    let mut values = ndarray::Array1::<f64>::zeros(n);
    let mut truncated = false;
    for &i in support {
        match oracle.direct_measure(i, r2) {
            Ok(y) => values[i - 1] = y,
            Err(Error::BudgetExhausted { .. }) => {
                truncated = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(TwoStageEstimate {
        values,
        support: support.clone(),
        measurements_used: oracle.consumed() - start,
        truncated,
    })
}

/// Support recovery followed by direct amplitude measurement: stage 1 runs
/// the adaptive procedure, stage 2 measures each estimated coordinate `r2`
/// times. Off-estimate coordinates are estimated as zero.
pub fn two_stage_estimate(
    oracle: &mut MeasurementOracle,
    shape: TreeShape,
    params: &TreeSensingParams,
    r2: u32,
) -> Result<TwoStageEstimate> {
    let stage1 = run_tree_sensing(oracle, shape, params)?;
    let mut out = estimate_amplitudes(oracle, shape.n(), &stage1.estimate, r2)?;
    out.measurements_used += stage1.measurements_used;
    out.truncated |= stage1.truncated;
    Ok(out)
}
