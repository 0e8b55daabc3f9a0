//! Sequential-thresholding stand-in for an adaptive compressive sensing
//! baseline. Unstructured and adaptive: each pass spends half of the
//! remaining sensing energy uniformly across the surviving coordinates and
//! keeps the half with the largest observations; the final pass absorbs the
//! remaining energy and keeps the top `k`. The energy budget is spent
//! exactly, with fractional energy `e` served as a coordinate observation
//! of variance `sigma^2 / e`.
//!
//! This preserves the two properties the comparison experiments rely on —
//! energy-budget equality and structure-agnostic adaptivity — without
//! reproducing any external procedure's internal schedule. Selection is
//! one-sided (largest observations), matching the nonnegative-amplitude
//! signals used in the comparisons.

use crate::error::{Error, Result};
use crate::sensing::MeasurementOracle;
use crate::tree::TreeShape;
use crate::IndexSet;

/// Smallest per-coordinate energy the first pass may allocate; guards the
/// effective noise variance `sigma^2/e` against absurd configurations.
pub const MIN_COORD_ENERGY: f64 = 1e-6;

/// Runs the multi-pass procedure and returns the surviving `k` coordinates.
///
/// `m_budget` is in the same units as the oracle budget: total sensing
/// energy. Requires `m_budget >= 2 n * MIN_COORD_ENERGY` so the first pass
/// is meaningful, and an oracle with at least `m_budget` remaining.
pub fn adaptive_seq_threshold(
    oracle: &mut MeasurementOracle,
    shape: TreeShape,
    m_budget: f64,
    k: usize,
) -> Result<IndexSet> {
    let n = shape.n();
    if k == 0 || k > n {
        return Err(Error::arg(format!("k={k} out of range 1..={n}")));
    }
    if !(m_budget >= 2.0 * n as f64 * MIN_COORD_ENERGY) {
        return Err(Error::arg(format!(
            "energy budget {m_budget} below the feasible floor {}",
            2.0 * n as f64 * MIN_COORD_ENERGY
        )));
    }
    if let Some(remaining) = oracle.remaining() {
        if remaining + 1e-9 < m_budget {
            return Err(Error::arg(
                "oracle budget is smaller than the requested energy budget",
            ));
        }
    }

    let passes = ((n as f64 / k as f64).log2().ceil() as usize).max(1);
    let start = oracle.consumed();
    let mut survivors: Vec<usize> = (1..=n).collect();

    for pass in 1..=passes {
        let spent = oracle.consumed() - start;
        let pass_budget = if pass == passes {
            // absorb the remainder so the total comes out exact
            m_budget - spent
        } else {
            (m_budget - spent) / 2.0
        };
        let energy = pass_budget / survivors.len() as f64;
        let mut scored: Vec<(usize, f64)> = Vec::with_capacity(survivors.len());
        for &i in &survivors {
            scored.push((i, oracle.energy_measure(i, energy)?));
        }
        // largest observation first; index breaks exact ties reproducibly
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let keep = if pass == passes {
            k
        } else {
            (scored.len() / 2).max(k)
        };
        survivors = scored.into_iter().take(keep).map(|(i, _)| i).collect();
        survivors.sort_unstable();
    }

    Ok(survivors.into_iter().collect())
}
