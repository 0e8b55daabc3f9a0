//! Comparison methods: Lasso (non-adaptive, unstructured), hierarchical
//! group Lasso (non-adaptive, tree-structured), and a sequential-thresholding
//! adaptive stand-in (adaptive, unstructured).
//!
//! The two Lasso solvers share one accelerated proximal-gradient core and a
//! common support-extraction rule: a sweep over a regularization grid, with
//! `{ i : |x_i| > mu/3 }` read off each solution. Extraction never enforces
//! tree validity; structure enters only through the group penalty.

mod adaptive_cs;
mod group;
mod lasso;

pub use adaptive_cs::adaptive_seq_threshold;
pub use group::{
    build_tree_groups, group_lasso_solve, group_lasso_support_sweep, tree_group_prox,
    GroupHierarchy,
};
pub use lasso::{default_lambda_grid, fista_lasso, lasso_support_sweep};

use crate::sensing::GaussianEnsemble;
use crate::IndexSet;
use ndarray::Array1;

/// Step-size rule for the proximal-gradient solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// Use the given step (an inverse Lipschitz estimate).
    Fixed(f64),
    /// Estimate the Lipschitz constant by power iteration on `A^T A`.
    Estimate,
    /// Backtracking line search from a power-iteration warm start.
    Backtracking,
}

/// Iteration controls shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub max_iters: usize,
    /// Relative-change stopping tolerance on the iterate.
    pub tol: f64,
    pub step: StepRule,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            max_iters: 500,
            tol: 1e-6,
            step: StepRule::Estimate,
        }
    }
}

/// Solution plus convergence diagnostics. On non-convergence the best
/// iterate found is returned with `converged = false`.
#[derive(Debug, Clone)]
pub struct SolverOutput {
    pub coefficients: Array1<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub objective: f64,
}

/// Support candidate read off a solution: `{ i : |x_{i-1}| > mu/3 }`
/// (1-based node indices).
pub(crate) fn extract_support(x: &Array1<f64>, mu: f64) -> IndexSet {
    let threshold = mu / 3.0;
    x.iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > threshold)
        .map(|(j, _)| j + 1)
        .collect()
}

/// Squared spectral norm of the ensemble (the gradient Lipschitz constant),
/// by power iteration with a deterministic start, inflated 2% to keep the
/// fixed step on the safe side of 1/L.
pub(crate) fn lipschitz_estimate(a: &GaussianEnsemble) -> f64 {
    let rows = a.rows();
    let n = a.n();
    let mut v = Array1::<f64>::from_elem(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 1.0;
    for _ in 0..50 {
        let av = rows.dot(&v);
        let mut w = rows.t().dot(&av);
        let norm = w.dot(&w).sqrt();
        if norm == 0.0 {
            return 1.0;
        }
        w.mapv_inplace(|x| x / norm);
        lambda = norm;
        v = w;
    }
    lambda * 1.02
}

/// Accelerated proximal gradient from a zero start.
pub(crate) fn fista_solve(
    a: &GaussianEnsemble,
    y: &Array1<f64>,
    prox: impl Fn(&mut Array1<f64>, f64),
    penalty: impl Fn(&Array1<f64>) -> f64,
    settings: &SolverSettings,
) -> SolverOutput {
    fista_from(a, y, Array1::zeros(a.n()), prox, penalty, settings)
}

/// Accelerated proximal gradient with a monotone (objective-nonincreasing)
/// safeguard: a candidate that increases the objective is rejected and the
/// momentum restarted, after which the next step is a plain proximal
/// gradient step and must descend. Sweeps pass the previous solution as
/// `x0` to warm-start neighboring grid points.
pub(crate) fn fista_from(
    a: &GaussianEnsemble,
    y: &Array1<f64>,
    x0: Array1<f64>,
    prox: impl Fn(&mut Array1<f64>, f64),
    penalty: impl Fn(&Array1<f64>) -> f64,
    settings: &SolverSettings,
) -> SolverOutput {
    let rows = a.rows();
    let objective = |x: &Array1<f64>| -> f64 {
        let r = &rows.dot(x) - y;
        0.5 * r.dot(&r) + penalty(x)
    };

    let mut step = match settings.step {
        StepRule::Fixed(s) => s,
        StepRule::Estimate | StepRule::Backtracking => 1.0 / lipschitz_estimate(a),
    };

    let mut x = x0;
    let mut momentum = x.clone();
    let mut theta = 1.0f64;
    let mut obj = objective(&x);
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=settings.max_iters {
        iterations = iter;
        let residual = &rows.dot(&momentum) - y;
        let grad = rows.t().dot(&residual);
        let smooth_at_momentum = 0.5 * residual.dot(&residual);

        let mut candidate;
        loop {
            candidate = &momentum - &(step * &grad);
            prox(&mut candidate, step);
            if settings.step != StepRule::Backtracking {
                break;
            }
            // quadratic upper model check at the candidate
            let diff = &candidate - &momentum;
            let rc = &rows.dot(&candidate) - y;
            let smooth = 0.5 * rc.dot(&rc);
            let model =
                smooth_at_momentum + grad.dot(&diff) + diff.dot(&diff) / (2.0 * step);
            if smooth <= model + 1e-12 {
                break;
            }
            step *= 0.5;
        }

        let cand_obj = objective(&candidate);
        if cand_obj > obj {
            // reject and restart; the next step is unaccelerated
            theta = 1.0;
            momentum = x.clone();
            continue;
        }

        let delta = &candidate - &x;
        let delta_norm = delta.dot(&delta).sqrt();
        let scale = x.dot(&x).sqrt().max(1.0);

        let theta_next = (1.0 + (1.0 + 4.0 * theta * theta).sqrt()) / 2.0;
        let beta = (theta - 1.0) / theta_next;
        momentum = &candidate + &(beta * &delta);
        theta = theta_next;
        x = candidate;
        obj = cand_obj;

        if delta_norm <= settings.tol * scale {
            converged = true;
            break;
        }
    }

    SolverOutput {
        coefficients: x,
        converged,
        iterations,
        objective: obj,
    }
}
