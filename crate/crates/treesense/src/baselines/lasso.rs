//! L1-penalized least squares by accelerated proximal gradient, and the
//! support sweep over a regularization grid.

use super::{extract_support, fista_from, fista_solve, SolverOutput, SolverSettings};
use crate::error::{Error, Result};
use crate::sensing::GaussianEnsemble;
use crate::IndexSet;
use ndarray::Array1;

fn check_inputs(a: &GaussianEnsemble, y: &Array1<f64>, lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::arg("lambda must be finite and nonnegative"));
    }
    if y.len() != a.m() {
        return Err(Error::arg("observation length differs from row count"));
    }
    Ok(())
}

fn soft_threshold(u: f64, t: f64) -> f64 {
    if u > t {
        u - t
    } else if u < -t {
        u + t
    } else {
        0.0
    }
}

/// Minimizes `0.5 ||y - A x||^2 + lambda ||x||_1`.
pub fn fista_lasso(
    a: &GaussianEnsemble,
    y: &Array1<f64>,
    lambda: f64,
    settings: &SolverSettings,
) -> Result<SolverOutput> {
    check_inputs(a, y, lambda)?;
    Ok(fista_solve(
        a,
        y,
        |v, step| {
            let t = lambda * step;
            v.mapv_inplace(|u| soft_threshold(u, t));
        },
        |x| lambda * x.iter().map(|v| v.abs()).sum::<f64>(),
        settings,
    ))
}

/// 30 logarithmically spaced values from `lambda_max = ||A^T y||_inf` down
/// to `1e-3 lambda_max`. Descending, so sweeps warm-start from the sparsest
/// solution.
pub fn default_lambda_grid(a: &GaussianEnsemble, y: &Array1<f64>) -> Vec<f64> {
    let corr = a.rows().t().dot(y);
    let lambda_max = corr.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if lambda_max == 0.0 {
        return vec![0.0];
    }
    let points = 30;
    (0..points)
        .map(|i| lambda_max * 1e-3f64.powf(i as f64 / (points - 1) as f64))
        .collect()
}

/// One support candidate per grid value: solve at each `lambda`, warm
/// started from the previous solution, and extract `{ i : |x_i| > mu/3 }`.
/// Candidates need not be valid tree supports.
pub fn lasso_support_sweep(
    a: &GaussianEnsemble,
    y: &Array1<f64>,
    lambda_grid: &[f64],
    mu: f64,
    settings: &SolverSettings,
) -> Result<Vec<IndexSet>> {
    if lambda_grid.is_empty() {
        return Err(Error::arg("lambda grid must be nonempty"));
    }
    let mut out = Vec::with_capacity(lambda_grid.len());
    let mut warm = Array1::<f64>::zeros(a.n());
    for &lambda in lambda_grid {
        check_inputs(a, y, lambda)?;
        let sol = fista_from(
            a,
            y,
            warm,
            |v, step| {
                let t = lambda * step;
                v.mapv_inplace(|u| soft_threshold(u, t));
            },
            |x| lambda * x.iter().map(|v| v.abs()).sum::<f64>(),
            settings,
        );
        out.push(extract_support(&sol.coefficients, mu));
        warm = sol.coefficients;
    }
    Ok(out)
}
