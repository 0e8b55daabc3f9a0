//! Rooted connected subtrees of a nearly complete binary tree.
//!
//! The underlying tree on indices `1..=n` is implicit: node `i` has children
//! `2i` and `2i+1` (when in range) and parent `i/2`. That heap layout *is*
//! the nearly complete shape — every level full except possibly the last,
//! which is filled left to right — so no node objects are ever materialized.

use crate::error::{Error, Result};
use crate::IndexSet;
use rand::Rng;
use std::fmt;

/// The implicit nearly complete binary tree on indices `1..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeShape {
    n: usize,
}

impl TreeShape {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("tree must have at least one node"));
        }
        Ok(TreeShape { n })
    }

    /// Number of nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.n {
            return Err(Error::arg(format!(
                "node index {i} out of range 1..={}",
                self.n
            )));
        }
        Ok(())
    }

    /// In-range children of node `i`, ascending. Zero, one, or two entries;
    /// a single entry happens only on the boundary of a partially filled
    /// last level.
    pub fn children(&self, i: usize) -> Result<Vec<usize>> {
        self.check_index(i)?;
        Ok([2 * i, 2 * i + 1]
            .into_iter()
            .filter(|&c| c <= self.n)
            .collect())
    }

    /// Parent of node `i`, or `None` for the root.
    pub fn parent(&self, i: usize) -> Result<Option<usize>> {
        self.check_index(i)?;
        Ok(if i == 1 { None } else { Some(i / 2) })
    }

    /// True iff `indices` is empty or forms a rooted connected subtree:
    /// contains the root and the parent of each of its members.
    pub fn is_tree_support<'a, I>(&self, indices: I) -> Result<bool>
    where
        I: IntoIterator<Item = &'a usize>,
    {
        let mut set = IndexSet::new();
        for &i in indices {
            self.check_index(i)?;
            set.insert(i);
        }
        if set.is_empty() {
            return Ok(true);
        }
        if !set.contains(&1) {
            return Ok(false);
        }
        Ok(set.iter().all(|&i| i == 1 || set.contains(&(i / 2))))
    }
}

/// A validated rooted connected subtree of a [`TreeShape`], stored as an
/// ascending index list. The empty support is allowed (vacuously valid);
/// nonempty supports always contain the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Support {
    indices: Vec<usize>,
    n: usize,
}

impl Support {
    /// Validates and builds a support from an arbitrary index collection.
    pub fn new<I: IntoIterator<Item = usize>>(shape: TreeShape, indices: I) -> Result<Self> {
        let set: IndexSet = indices.into_iter().collect();
        if !shape.is_tree_support(set.iter())? {
            return Err(Error::arg(format!(
                "{{{}}} is not a rooted connected subtree",
                join(set.iter())
            )));
        }
        Ok(Support {
            indices: set.into_iter().collect(),
            n: shape.n(),
        })
    }

    pub fn empty(shape: TreeShape) -> Self {
        Support {
            indices: Vec::new(),
            n: shape.n(),
        }
    }

    pub fn shape(&self) -> TreeShape {
        TreeShape { n: self.n }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Member indices in ascending order.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn to_set(&self) -> IndexSet {
        self.indices.iter().copied().collect()
    }

    /// The neighbor set: indices whose addition yields a valid support one
    /// node larger, i.e. all in-range children of members that are not
    /// themselves members.
    pub fn neighbor_set(&self) -> Result<IndexSet> {
        if self.is_empty() {
            return Err(Error::arg("neighbor set of the empty support"));
        }
        let shape = self.shape();
        let mut out = IndexSet::new();
        for &i in &self.indices {
            for c in shape.children(i)? {
                if !self.contains(c) {
                    out.insert(c);
                }
            }
        }
        Ok(out)
    }

    /// Support obtained by adding one neighbor index. Validates.
    pub fn extended(&self, j: usize) -> Result<Support> {
        Support::new(self.shape(), self.indices.iter().copied().chain([j]))
    }
}

impl fmt::Display for Support {
    /// Ascending comma-separated index list, e.g. `1,2,3,5`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", join(self.indices.iter()))
    }
}

fn join<'a, I: Iterator<Item = &'a usize>>(it: I) -> String {
    it.map(|i| i.to_string()).collect::<Vec<_>>().join(",")
}

/// The first `k` heap indices `{1, ..., k}`. Heap order coincides with
/// top-down left-to-right order, so this is always a valid support, and for
/// `2 <= k <= (n+1)/2` the size-`(k-1)` instance has a neighbor set of size
/// exactly `k`.
pub fn leftmost_support(shape: TreeShape, k: usize) -> Result<Support> {
    if k == 0 || k > shape.n() {
        return Err(Error::arg(format!("k={k} out of range 1..={}", shape.n())));
    }
    Ok(Support {
        indices: (1..=k).collect(),
        n: shape.n(),
    })
}

/// Exact, duplicate-free enumeration of all size-`k` supports, in
/// lexicographic order of their ascending index lists.
///
/// Brute force; intended for small instances (n <= 63, k <= 8). The caller
/// is responsible for respecting the combinatorial growth.
pub fn enumerate_supports(shape: TreeShape, k: usize) -> Result<Vec<Support>> {
    if k == 0 || k > shape.n() {
        return Err(Error::arg(format!("k={k} out of range 1..={}", shape.n())));
    }
    let mut sets = rooted_subsets(shape, 1, k);
    sets.sort();
    Ok(sets
        .into_iter()
        .map(|indices| Support {
            indices,
            n: shape.n(),
        })
        .collect())
}

/// All connected subtrees of size `size` rooted at `root` (each contains
/// `root`), as sorted index vectors. `size == 0` yields the single empty set.
fn rooted_subsets(shape: TreeShape, root: usize, size: usize) -> Vec<Vec<usize>> {
    if size == 0 {
        return vec![Vec::new()];
    }
    if root > shape.n() {
        return Vec::new();
    }
    let left = 2 * root;
    let right = 2 * root + 1;
    let mut out = Vec::new();
    for left_size in 0..size {
        let right_size = size - 1 - left_size;
        let lefts = rooted_subsets(shape, left, left_size);
        if lefts.is_empty() {
            continue;
        }
        let rights = rooted_subsets(shape, right, right_size);
        for l in &lefts {
            for r in &rights {
                let mut s = Vec::with_capacity(size);
                s.push(root);
                s.extend_from_slice(l);
                s.extend_from_slice(r);
                s.sort_unstable();
                out.push(s);
            }
        }
    }
    out
}

/// Random size-`k` support by sequential uniform growth: start from the root
/// and repeatedly add a uniformly random element of the current neighbor
/// set. Deterministic given the rng state.
///
/// This is *not* the uniform distribution over all size-`k` supports (growth
/// histories weight supports unevenly); see [`random_support_uniform`] for an
/// exact-uniform sampler on small trees.
pub fn random_support<R: Rng>(shape: TreeShape, k: usize, rng: &mut R) -> Result<Support> {
    if k == 0 || 2 * k > shape.n() + 1 {
        return Err(Error::arg(format!(
            "k={k} out of range 1..=(n+1)/2 for n={}",
            shape.n()
        )));
    }
    let mut members = vec![1usize];
    // frontier kept sorted so index draws are reproducible
    let mut frontier: Vec<usize> = shape.children(1)?;
    while members.len() < k {
        let pick = rng.random_range(0..frontier.len());
        let j = frontier.remove(pick);
        members.push(j);
        for c in shape.children(j)? {
            let pos = frontier.binary_search(&c).unwrap_err();
            frontier.insert(pos, c);
        }
    }
    members.sort_unstable();
    Ok(Support {
        indices: members,
        n: shape.n(),
    })
}

/// Uniform draw from the exact enumeration of size-`k` supports. Only for
/// small trees (n <= 31), where the enumeration is cheap.
pub fn random_support_uniform<R: Rng>(
    shape: TreeShape,
    k: usize,
    rng: &mut R,
) -> Result<Support> {
    if shape.n() > 31 {
        return Err(Error::arg("uniform-exact sampling is limited to n <= 31"));
    }
    let all = enumerate_supports(shape, k)?;
    Ok(all[rng.random_range(0..all.len())].clone())
}

/// Sign convention for generated amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignMode {
    /// All nonzero components positive.
    Nonnegative,
    /// Independent fair-coin signs.
    RandomSign,
}

/// Magnitude convention for generated amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeMode {
    /// Every magnitude exactly `mu` (the hard subclass used by the lower
    /// bound constructions).
    ConstantMu,
    /// Independent magnitudes uniform on `[mu, 2mu)`.
    IidAboveMu,
}

/// Amplitudes on a support: `x_i = a_i` for members, `0` elsewhere, with
/// `|a_i| >= mu` for every member.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal {
    support: Support,
    /// Aligned with `support.indices()`.
    amplitudes: Vec<f64>,
    mu: f64,
}

impl SparseSignal {
    /// Builds a signal from explicit amplitudes (aligned with the support's
    /// ascending index order). `mu` may be zero here, which admits the
    /// all-zero signal used as the degenerate point of amplitude sweeps;
    /// [`make_signal`] is the stricter generator.
    pub fn with_amplitudes(support: Support, amplitudes: Vec<f64>, mu: f64) -> Result<Self> {
        if amplitudes.len() != support.len() {
            return Err(Error::arg("amplitude count differs from support size"));
        }
        if mu < 0.0 || !mu.is_finite() {
            return Err(Error::arg("mu must be finite and nonnegative"));
        }
        if amplitudes.iter().any(|a| !a.is_finite() || a.abs() < mu) {
            return Err(Error::arg("every amplitude must satisfy |a| >= mu"));
        }
        Ok(SparseSignal {
            support,
            amplitudes,
            mu,
        })
    }

    /// The all-zero signal carrying a nominal (planted) support.
    pub fn zeros_on(support: Support) -> Self {
        let amplitudes = vec![0.0; support.len()];
        SparseSignal {
            support,
            amplitudes,
            mu: 0.0,
        }
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn n(&self) -> usize {
        self.support.n
    }

    /// Value at node `i` (1-based); zero off support.
    pub fn value(&self, i: usize) -> f64 {
        match self.support.indices.binary_search(&i) {
            Ok(pos) => self.amplitudes[pos],
            Err(_) => 0.0,
        }
    }

    /// Dense 0-indexed vector: entry `j` is the value at node `j+1`.
    pub fn to_dense(&self) -> ndarray::Array1<f64> {
        let mut x = ndarray::Array1::zeros(self.n());
        for (&i, &a) in self.support.indices.iter().zip(&self.amplitudes) {
            x[i - 1] = a;
        }
        x
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.support
            .indices
            .iter()
            .copied()
            .zip(self.amplitudes.iter().copied())
    }
}

impl fmt::Display for SparseSignal {
    /// Sparse `index:value` pairs joined by `;`, e.g. `1:1;2:1;3:1;5:1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|(i, a)| format!("{i}:{a}")).collect();
        write!(f, "{}", parts.join(";"))
    }
}

/// Draws amplitudes for `support` with magnitude lower bound `mu > 0`.
pub fn make_signal<R: Rng>(
    support: Support,
    mu: f64,
    sign_mode: SignMode,
    amplitude_mode: AmplitudeMode,
    rng: &mut R,
) -> Result<SparseSignal> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::arg("mu must be positive"));
    }
    let amplitudes: Vec<f64> = (0..support.len())
        .map(|_| {
            let mag = match amplitude_mode {
                AmplitudeMode::ConstantMu => mu,
                AmplitudeMode::IidAboveMu => mu * (1.0 + rng.random::<f64>()),
            };
            let sign = match sign_mode {
                SignMode::Nonnegative => 1.0,
                SignMode::RandomSign => {
                    if rng.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                }
            };
            sign * mag
        })
        .collect();
    SparseSignal::with_amplitudes(support, amplitudes, mu)
}
