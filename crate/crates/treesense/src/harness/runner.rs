//! Trial execution and CSV emission.
//!
//! Every random quantity in a trial comes from a stream indexed by
//! `(cell, trial, purpose)` on top of the experiment's base seed, so rows
//! are a pure function of the configuration: scheduling, worker count, and
//! execution order cannot change them. Raw rows appear in deterministic
//! (cell-major, then trial, then method) order; summary rows follow, with
//! `trial = -1`. Wall-clock times are reported in a trailing column that is
//! excluded from determinism comparisons.

use super::config::{CompareSpec, Method, PhaseSpec};
use super::run_trials;
use crate::baselines::{
    adaptive_seq_threshold, build_tree_groups, default_lambda_grid, group_lasso_support_sweep,
    lasso_support_sweep, GroupHierarchy, SolverSettings,
};
use crate::error::{Error, Result};
use crate::recover::{run_tree_sensing, sufficient_mu_corollary, TreeSensingParams};
use crate::sensing::{gaussian_ensemble, nonadaptive_observe, rng_stream, MeasurementOracle, TrialRng};
use crate::tree::{make_signal, random_support, SparseSignal, TreeShape};
use crate::IndexSet;
use std::io::Write;
use std::time::Instant;

/// One CSV row: a single `(method, trial)` outcome, or a summary when
/// `trial == -1` (then `success` carries the empirical success rate and
/// `measurements` the per-trial mean).
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub experiment: &'static str,
    pub method: Method,
    pub n: usize,
    pub k: usize,
    pub mu: f64,
    pub trial: i64,
    pub seed: u64,
    pub success: f64,
    pub measurements: f64,
    pub truncated: bool,
    pub status: String,
    pub wall_ms: f64,
}

pub const CSV_HEADER: &str =
    "experiment,method,n,k,mu,trial,seed,success,measurements,truncated,status,wall_ms";

pub fn write_csv<W: Write>(rows: &[TrialResult], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.method,
            r.n,
            r.k,
            r.mu,
            r.trial,
            r.seed,
            r.success,
            r.measurements,
            u8::from(r.truncated),
            r.status,
            r.wall_ms
        )?;
    }
    Ok(())
}

pub fn csv_string(rows: &[TrialResult]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("csv is ascii")
}

/// Drops the trailing wall-clock column from a CSV produced by
/// [`write_csv`]; the remainder is the determinism surface (identical for
/// identical configs regardless of scheduling).
pub fn strip_wall_column(csv: &str) -> String {
    csv.lines()
        .map(|line| match line.rfind(',') {
            Some(pos) => &line[..pos],
            None => line,
        })
        .collect::<Vec<_>>()
        .join("\n")
}

// stream purposes within one (cell, trial)
const PURPOSE_SUPPORT: u64 = 0;
const PURPOSE_AMPLITUDE: u64 = 1;
const PURPOSE_TREE_NOISE: u64 = 2;
const PURPOSE_ACS_NOISE: u64 = 3;
const PURPOSE_ENSEMBLE: u64 = 4;
const PURPOSE_NA_NOISE: u64 = 5;

/// Stream for one purpose of one trial of one grid cell. Cells get 2^36
/// slots, trials 2^24, purposes 2^4.
fn substream(base_seed: u64, cell: u64, trial: u64, purpose: u64) -> TrialRng {
    debug_assert!(trial < 1 << 24 && purpose < 1 << 4);
    rng_stream(base_seed, (cell << 28) | (trial << 4) | purpose)
}

/// Solver controls for the regularization sweeps. The `mu/3` extraction
/// only needs coefficients resolved well below the amplitude scale, so a
/// moderate tolerance keeps the sweeps fast.
const SWEEP_SETTINGS: SolverSettings = SolverSettings {
    max_iters: 400,
    tol: 1e-5,
    step: crate::baselines::StepRule::Estimate,
};

fn planted_signal(
    spec_sign: crate::tree::SignMode,
    spec_amp: crate::tree::AmplitudeMode,
    shape: TreeShape,
    k: usize,
    mu: f64,
    base_seed: u64,
    cell: u64,
    trial: u64,
) -> Result<(SparseSignal, IndexSet)> {
    let support = random_support(
        shape,
        k,
        &mut substream(base_seed, cell, trial, PURPOSE_SUPPORT),
    )?;
    let truth = support.to_set();
    let signal = if mu > 0.0 {
        make_signal(
            support,
            mu,
            spec_sign,
            spec_amp,
            &mut substream(base_seed, cell, trial, PURPOSE_AMPLITUDE),
        )?
    } else {
        SparseSignal::zeros_on(support)
    };
    Ok((signal, truth))
}

/// The comparison experiment: each trial plants one signal and runs every
/// enabled method against it. The two non-adaptive methods share one
/// freshly drawn ensemble and observation vector per trial.
pub fn run_compare(spec: &CompareSpec) -> Result<Vec<TrialResult>> {
    let shape = TreeShape::new(spec.n)?;
    let params = TreeSensingParams::new(spec.k_prime, spec.delta, spec.sigma2, spec.r)?
        .with_order(spec.order)
        .with_hard_budget(spec.m as f64);
    let hierarchy = if spec.methods.contains(&Method::Glasso) {
        Some(build_tree_groups(shape))
    } else {
        None
    };

    let n_mu = spec.mu_grid.len();
    let items = n_mu * spec.trials;
    let results: Vec<Result<Vec<TrialResult>>> = run_trials(items, |item| {
        let mu_idx = item / spec.trials;
        let trial = (item % spec.trials) as u64;
        compare_trial(spec, shape, &params, hierarchy.as_ref(), mu_idx, trial)
    });

    let mut rows = Vec::with_capacity(items * spec.methods.len());
    for r in results {
        rows.extend(r?);
    }
    append_summaries(&mut rows);
    Ok(rows)
}

fn compare_trial(
    spec: &CompareSpec,
    shape: TreeShape,
    params: &TreeSensingParams,
    hierarchy: Option<&GroupHierarchy>,
    mu_idx: usize,
    trial: u64,
) -> Result<Vec<TrialResult>> {
    let mu = spec.mu_grid[mu_idx];
    let cell = mu_idx as u64;
    let (signal, truth) = planted_signal(
        spec.sign_mode,
        spec.amplitude_mode,
        shape,
        spec.k,
        mu,
        spec.base_seed,
        cell,
        trial,
    )?;

    // one shared ensemble + observation per trial for the non-adaptive pair
    let needs_ensemble = spec
        .methods
        .iter()
        .any(|m| matches!(m, Method::Glasso | Method::Lasso));
    let nonadaptive = if needs_ensemble {
        let a = gaussian_ensemble(
            shape,
            spec.m,
            &mut substream(spec.base_seed, cell, trial, PURPOSE_ENSEMBLE),
        );
        let y = nonadaptive_observe(
            &signal,
            &a,
            spec.sigma2,
            &mut substream(spec.base_seed, cell, trial, PURPOSE_NA_NOISE),
        )?;
        let grid = default_lambda_grid(&a, &y);
        Some((a, y, grid))
    } else {
        None
    };

    let mut rows = Vec::with_capacity(spec.methods.len());
    for &method in &spec.methods {
        let started = Instant::now();
        let mut row = TrialResult {
            experiment: spec.label,
            method,
            n: spec.n,
            k: spec.k,
            mu,
            trial: trial as i64,
            seed: spec.base_seed,
            success: 0.0,
            measurements: 0.0,
            truncated: false,
            status: "ok".into(),
            wall_ms: 0.0,
        };
        match method {
            Method::Tree => {
                let mut oracle = MeasurementOracle::new(
                    signal.clone(),
                    spec.sigma2,
                    Some(spec.m as f64),
                    substream(spec.base_seed, cell, trial, PURPOSE_TREE_NOISE),
                );
                let res = run_tree_sensing(&mut oracle, shape, params)?;
                row.success = as01(res.estimate == truth);
                row.measurements = res.measurements_used;
                row.truncated = res.truncated;
            }
            Method::Acs => {
                let mut oracle = MeasurementOracle::new(
                    signal.clone(),
                    spec.sigma2,
                    Some(spec.m as f64),
                    substream(spec.base_seed, cell, trial, PURPOSE_ACS_NOISE),
                );
                match adaptive_seq_threshold(&mut oracle, shape, spec.m as f64, spec.k) {
                    Ok(est) => {
                        row.success = as01(est == truth);
                        row.measurements = oracle.consumed();
                    }
                    Err(Error::InvalidArgument(reason)) => {
                        row.status = format!("infeasible:{}", sanitize(&reason));
                    }
                    Err(e) => return Err(e),
                }
            }
            Method::Glasso | Method::Lasso => {
                let (a, y, grid) = nonadaptive.as_ref().expect("ensemble drawn above");
                let candidates = match method {
                    Method::Glasso => group_lasso_support_sweep(
                        a,
                        y,
                        grid,
                        mu,
                        hierarchy.expect("hierarchy built when glasso enabled"),
                        &SWEEP_SETTINGS,
                    )?,
                    _ => lasso_support_sweep(a, y, grid, mu, &SWEEP_SETTINGS)?,
                };
                row.success = as01(candidates.iter().any(|c| *c == truth));
                row.measurements = spec.m as f64;
            }
        }
        row.wall_ms = started.elapsed().as_secs_f64() * 1e3;
        rows.push(row);
    }
    Ok(rows)
}

fn sanitize(reason: &str) -> String {
    reason.replace(',', ";")
}

fn as01(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Appends one summary row per `(n, k, mu, method)` group, in first-seen
/// order of the groups: `trial = -1`, success rate in `success`, mean
/// measurements, truncation count folded into `truncated` (any), mean wall
/// time. Only `status == "ok"` rows enter the averages; a group with no ok
/// rows reports its first status.
fn append_summaries(rows: &mut Vec<TrialResult>) {
    let mut order: Vec<(usize, usize, f64, Method)> = Vec::new();
    for r in rows.iter().filter(|r| r.trial >= 0) {
        let key = (r.n, r.k, r.mu, r.method);
        if !order.contains(&key) {
            order.push(key);
        }
    }
    let mut summaries = Vec::with_capacity(order.len());
    for key in order {
        let group: Vec<&TrialResult> = rows
            .iter()
            .filter(|r| r.trial >= 0 && (r.n, r.k, r.mu, r.method) == key)
            .collect();
        let ok: Vec<&&TrialResult> = group.iter().filter(|r| r.status == "ok").collect();
        let count = ok.len().max(1) as f64;
        let template = group[0];
        summaries.push(TrialResult {
            experiment: template.experiment,
            method: key.3,
            n: key.0,
            k: key.1,
            mu: key.2,
            trial: -1,
            seed: template.seed,
            success: ok.iter().map(|r| r.success).sum::<f64>() / count,
            measurements: ok.iter().map(|r| r.measurements).sum::<f64>() / count,
            truncated: ok.iter().any(|r| r.truncated),
            status: if ok.is_empty() {
                template.status.clone()
            } else {
                "summary".into()
            },
            wall_ms: group.iter().map(|r| r.wall_ms).sum::<f64>() / group.len() as f64,
        });
    }
    rows.extend(summaries);
}

/// Rows plus the sufficient-amplitude overlay (one value per feasible
/// `k >= 2`), the dashed-line data of the phase figure.
#[derive(Debug, Clone)]
pub struct PhaseOutput {
    pub rows: Vec<TrialResult>,
    pub overlay: Vec<(usize, f64)>,
}

/// The phase-transition experiment: for each `(k, mu)` cell, `trials` runs
/// of the repeated-measurement procedure with `r = floor(m_max / (2k+1))`,
/// `k' = k`, and the whole budget enforced. Cells whose budget cannot fund
/// one repeated test per node (`r = 0`) are emitted as infeasible.
pub fn run_phase(spec: &PhaseSpec) -> Result<PhaseOutput> {
    let shape = TreeShape::new(spec.n)?;
    let n_mu = spec.mu_grid.len();

    let mut feasible: Vec<(usize, usize, u32)> = Vec::new(); // (k_idx, k, r)
    let mut infeasible_rows = Vec::new();
    for (k_idx, &k) in spec.k_grid.iter().enumerate() {
        let r = (spec.m_max / (2 * k + 1)) as u32;
        if r == 0 {
            for &mu in &spec.mu_grid {
                infeasible_rows.push(TrialResult {
                    experiment: "phase",
                    method: Method::Tree,
                    n: spec.n,
                    k,
                    mu,
                    trial: -1,
                    seed: spec.base_seed,
                    success: 0.0,
                    measurements: 0.0,
                    truncated: false,
                    status: "infeasible:r=0".into(),
                    wall_ms: 0.0,
                });
            }
        } else {
            feasible.push((k_idx, k, r));
        }
    }
    if feasible.is_empty() && infeasible_rows.is_empty() {
        return Err(Error::Infeasible("empty phase grid".into()));
    }

    let items = feasible.len() * n_mu * spec.trials;
    let per_cell = spec.trials;
    let results: Vec<Result<TrialResult>> = run_trials(items, |item| {
        let cell_idx = item / per_cell;
        let trial = (item % per_cell) as u64;
        let (k_idx, k, r) = feasible[cell_idx / n_mu];
        let mu_idx = cell_idx % n_mu;
        phase_trial(spec, shape, k_idx, k, r, mu_idx, trial)
    });

    let mut rows = Vec::with_capacity(items + infeasible_rows.len());
    for r in results {
        rows.push(r?);
    }
    rows.extend(infeasible_rows);
    append_summaries(&mut rows);

    let mut overlay = Vec::new();
    for &(_, k, r) in &feasible {
        if k >= 2 {
            overlay.push((k, sufficient_mu_corollary(k, 1.0, spec.delta, spec.sigma2, r)?));
        }
    }
    Ok(PhaseOutput { rows, overlay })
}

fn phase_trial(
    spec: &PhaseSpec,
    shape: TreeShape,
    k_idx: usize,
    k: usize,
    r: u32,
    mu_idx: usize,
    trial: u64,
) -> Result<TrialResult> {
    let mu = spec.mu_grid[mu_idx];
    let cell = (k_idx * spec.mu_grid.len() + mu_idx) as u64;
    let started = Instant::now();
    let (signal, truth) = planted_signal(
        spec.sign_mode,
        spec.amplitude_mode,
        shape,
        k,
        mu,
        spec.base_seed,
        cell,
        trial,
    )?;
    let params = TreeSensingParams::new(k, spec.delta, spec.sigma2, r)?
        .with_order(spec.order)
        .with_hard_budget(spec.m_max as f64);
    let mut oracle = MeasurementOracle::new(
        signal,
        spec.sigma2,
        Some(spec.m_max as f64),
        substream(spec.base_seed, cell, trial, PURPOSE_TREE_NOISE),
    );
    let res = run_tree_sensing(&mut oracle, shape, &params)?;
    Ok(TrialResult {
        experiment: "phase",
        method: Method::Tree,
        n: spec.n,
        k,
        mu,
        trial: trial as i64,
        seed: spec.base_seed,
        success: as01(res.estimate == truth),
        measurements: res.measurements_used,
        truncated: res.truncated,
        status: "ok".into(),
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

/// Gnuplot-compatible overlay data: `k mu_sufficient` per line.
pub fn write_overlay<W: Write>(overlay: &[(usize, f64)], mut w: W) -> std::io::Result<()> {
    writeln!(w, "# k mu_sufficient")?;
    for &(k, mu) in overlay {
        writeln!(w, "{k} {mu}")?;
    }
    Ok(())
}
