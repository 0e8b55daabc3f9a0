//! Monte Carlo orchestration: configuration, trial execution, CSV output.
//!
//! Trials are independent work items indexed by position. With the
//! `parallel` feature (default) they run on the rayon pool; without it, a
//! plain sequential loop. Results come back in index order either way, so
//! the emitted CSV is identical across worker counts and feature choices
//! (wall-clock column aside).

mod config;
mod runner;

pub use config::{CompareSpec, ExperimentConfig, ExperimentKind, Method, PhaseSpec};
pub use runner::{
    csv_string, run_compare, run_phase, strip_wall_column, write_csv, write_overlay, PhaseOutput,
    TrialResult, CSV_HEADER,
};

use crate::error::Result;
use crate::tree::enumerate_supports;
use crate::tree::TreeShape;

/// Runs `count` work items sequentially.
pub fn run_trials_serial<T, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..count).map(f).collect()
}

/// Runs `count` work items on the rayon pool, preserving index order.
#[cfg(feature = "parallel")]
pub fn run_trials_parallel<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

/// Feature-dispatched runner used by the experiments.
pub fn run_trials<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        run_trials_parallel(count, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_trials_serial(count, f)
    }
}

/// What an experiment produces: CSV rows (plus the phase overlay) or plain
/// text for the calculator-style subcommands.
#[derive(Debug)]
pub enum ExperimentOutput {
    Rows {
        rows: Vec<TrialResult>,
        overlay: Option<Vec<(usize, f64)>>,
    },
    Text(String),
}

/// Dispatches a validated configuration. `paper_scale` widens the phase
/// defaults to the full-size grid.
pub fn run_experiment(config: &ExperimentConfig, paper_scale: bool) -> Result<ExperimentOutput> {
    match config.experiment {
        ExperimentKind::Compare | ExperimentKind::SweepMu => {
            let spec = config.compare_spec()?;
            Ok(ExperimentOutput::Rows {
                rows: run_compare(&spec)?,
                overlay: None,
            })
        }
        ExperimentKind::Phase => {
            let spec = config.phase_spec(paper_scale)?;
            let out = run_phase(&spec)?;
            Ok(ExperimentOutput::Rows {
                rows: out.rows,
                overlay: Some(out.overlay),
            })
        }
        ExperimentKind::Bounds => {
            let query = config.bound_query()?;
            Ok(ExperimentOutput::Text(bounds_table_text(&query)?))
        }
        ExperimentKind::Enumerate => {
            let (n, k, list) = config.enumerate_spec()?;
            Ok(ExperimentOutput::Text(enumerate_text(n, k, list)?))
        }
    }
}

/// Aligned label/value table over every bound calculator.
pub fn bounds_table_text(query: &crate::bounds::BoundQuery) -> Result<String> {
    let table = query.table()?;
    let width = table.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
    let mut out = format!(
        "bounds at n={} m={} k={} gamma={} delta={} beta={} sigma2={} r={}\n",
        query.n, query.m, query.k, query.gamma, query.delta, query.beta, query.sigma2, query.r
    );
    for (label, value) in table {
        out.push_str(&format!("{label:<width$}  {value:.9}\n"));
    }
    Ok(out)
}

/// Same table as `quantity,value` CSV.
pub fn bounds_table_csv(query: &crate::bounds::BoundQuery) -> Result<String> {
    let mut out = String::from("quantity,value\n");
    for (label, value) in query.table()? {
        out.push_str(&format!("{label},{value}\n"));
    }
    Ok(out)
}

/// `|T_{n,k}| = count`, optionally followed by every member as an ascending
/// comma-separated index list.
pub fn enumerate_text(n: usize, k: usize, list_members: bool) -> Result<String> {
    let shape = TreeShape::new(n)?;
    let supports = enumerate_supports(shape, k)?;
    let mut out = format!("|T_{{{n},{k}}}| = {}\n", supports.len());
    if list_members {
        for s in &supports {
            out.push_str(&format!("{s}\n"));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serial_runner_preserves_order() {
        let out = run_trials_serial(5, |i| i * i);
        assert_eq!(out, vec![0, 1, 4, 9, 16]);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_runner_matches_serial() {
        let serial = run_trials_serial(100, |i| i as u64 * 3 + 1);
        let parallel = run_trials_parallel(100, |i| i as u64 * 3 + 1);
        assert_eq!(serial, parallel);
    }

    #[test]
    fn enumerate_text_lists_members() {
        let text = enumerate_text(7, 2, true).unwrap();
        assert_eq!(text, "|T_{7,2}| = 2\n1,2\n1,3\n");
        let head = enumerate_text(7, 4, false).unwrap();
        assert_eq!(head, "|T_{7,4}| = 6\n");
    }

    #[test]
    fn bounds_text_contains_the_table() {
        let q = crate::bounds::BoundQuery {
            n: 1023,
            m: 132,
            k: 16,
            gamma: 0.25,
            delta: 0.01,
            beta: 1.0,
            sigma2: 1.0,
            r: 4,
        };
        let text = bounds_table_text(&q).unwrap();
        assert!(text.contains("theorem1_necessary_mu"));
        assert!(text.contains("0.655554156"));
        assert!(text.contains("theorem2_necessary_mu"));
        assert!(text.contains("0.174077656"));
        let csv = bounds_table_csv(&q).unwrap();
        assert!(csv.starts_with("quantity,value\n"));
        assert_eq!(csv.lines().count(), 10);
    }
}
