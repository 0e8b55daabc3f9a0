//! Stochastic measurement oracles for the observation model
//! `y_j = <a_j, x> + w_j` with iid `N(0, sigma^2)` noise.
//!
//! Two measurement families are served:
//!
//! * **coordinate measurements** for adaptive procedures — node `i` observed
//!   directly, optionally averaged over `r` repeats (effective variance
//!   `sigma^2 / r`) or scaled to a fractional sensing energy `e` (effective
//!   variance `sigma^2 / e`);
//! * **dense Gaussian ensembles** for non-adaptive procedures — `m` rows of
//!   iid `N(0, 1/n)` entries, norm one in expectation.
//!
//! The oracle hides the signal from estimators, accounts for every budget
//! unit spent, and appends one log record per served measurement so a run
//! can be replayed or audited.

use crate::error::{Error, Result};
use crate::tree::{SparseSignal, TreeShape};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::io::Write;

/// The reproducible generator used throughout: one independent stream per
/// trial index on top of a shared base seed.
pub type TrialRng = ChaCha8Rng;

/// Pure function of `(base_seed, trial_index)` yielding independent-looking
/// streams; same arguments, same draw sequence.
pub fn rng_stream(base_seed: u64, trial_index: u64) -> TrialRng {
    use rand::SeedableRng;
    let mut rng = TrialRng::seed_from_u64(base_seed);
    rng.set_stream(trial_index);
    rng
}

/// An `m x n` ensemble with iid `N(0, 1/n)` entries, so each row has
/// expected squared norm 1.
#[derive(Debug, Clone)]
pub struct GaussianEnsemble {
    rows: Array2<f64>,
}

impl GaussianEnsemble {
    /// Wraps an explicit measurement matrix (rows are measurement vectors).
    /// The solvers only need the matrix, so nothing about the entries is
    /// assumed here; the `N(0, 1/n)` law applies to [`gaussian_ensemble`].
    pub fn from_rows(rows: Array2<f64>) -> Self {
        GaussianEnsemble { rows }
    }

    pub fn m(&self) -> usize {
        self.rows.nrows()
    }

    pub fn n(&self) -> usize {
        self.rows.ncols()
    }

    pub fn rows(&self) -> &Array2<f64> {
        &self.rows
    }
}

/// Draws a fresh ensemble; deterministic under the rng state.
pub fn gaussian_ensemble<R: Rng>(shape: TreeShape, m: usize, rng: &mut R) -> GaussianEnsemble {
    let n = shape.n();
    let std = (1.0 / n as f64).sqrt();
    let data: Vec<f64> = (0..m * n)
        .map(|_| std * rng.sample::<f64, _>(StandardNormal))
        .collect();
    GaussianEnsemble {
        rows: Array2::from_shape_vec((m, n), data).expect("m*n entries"),
    }
}

/// Non-adaptive observation vector `y = A x + w` with iid `N(0, sigma2)`
/// noise. Exploits the sparsity of `x`: cost `O(mk)` not `O(mn)`.
pub fn nonadaptive_observe<R: Rng>(
    signal: &SparseSignal,
    ensemble: &GaussianEnsemble,
    sigma2: f64,
    rng: &mut R,
) -> Result<Array1<f64>> {
    if ensemble.n() != signal.n() {
        return Err(Error::arg(format!(
            "ensemble has {} columns but the signal dimension is {}",
            ensemble.n(),
            signal.n()
        )));
    }
    let mut y = Array1::<f64>::zeros(ensemble.m());
    for (i, a) in signal.iter() {
        y.scaled_add(a, &ensemble.rows.column(i - 1));
    }
    let std = sigma2.sqrt();
    y.mapv_inplace(|v| v + std * rng.sample::<f64, _>(StandardNormal));
    Ok(y)
}

/// What a log record describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementKind {
    /// Coordinate measurement averaged over an integer repeat count.
    Direct,
    /// Coordinate measurement at a fractional sensing energy.
    Energy,
    /// Reference to a dense ensemble row.
    Row,
}

impl MeasurementKind {
    fn label(self) -> &'static str {
        match self {
            MeasurementKind::Direct => "direct",
            MeasurementKind::Energy => "energy",
            MeasurementKind::Row => "row",
        }
    }
}

/// One served measurement: what was measured, what it cost, what came back.
#[derive(Debug, Clone)]
pub struct LogRecord {
    pub kind: MeasurementKind,
    /// Node index (1-based) for coordinate measurements, row index for rows.
    pub index_or_row: usize,
    /// Budget units consumed: the repeat count, the sensing energy, or 1.
    pub cost: f64,
    pub observation: f64,
}

/// Ordered, replayable record of everything an oracle served.
#[derive(Debug, Clone, Default)]
pub struct SensingLog {
    records: Vec<LogRecord>,
    consumed: f64,
}

impl SensingLog {
    pub fn records(&self) -> &[LogRecord] {
        &self.records
    }

    pub fn consumed(&self) -> f64 {
        self.consumed
    }

    pub fn push(&mut self, record: LogRecord) {
        self.consumed += record.cost;
        self.records.push(record);
    }

    /// CSV with header `record_idx,kind,index_or_row,repeats_or_energy,observation`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "record_idx,kind,index_or_row,repeats_or_energy,observation")?;
        for (idx, r) in self.records.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{}",
                idx,
                r.kind.label(),
                r.index_or_row,
                r.cost,
                r.observation
            )?;
        }
        Ok(())
    }
}

/// Serves noisy coordinate measurements of a hidden signal, enforcing a
/// measurement budget. One oracle is owned by exactly one trial.
#[derive(Debug)]
pub struct MeasurementOracle {
    signal: SparseSignal,
    sigma2: f64,
    budget: Option<f64>,
    log: SensingLog,
    rng: TrialRng,
    record_raw: bool,
    raw_draws: Vec<(usize, f64)>,
}

impl MeasurementOracle {
    /// `budget` is in unit-norm measurement equivalents; `None` is unlimited.
    pub fn new(signal: SparseSignal, sigma2: f64, budget: Option<f64>, rng: TrialRng) -> Self {
        MeasurementOracle {
            signal,
            sigma2,
            budget,
            log: SensingLog::default(),
            rng,
            record_raw: false,
            raw_draws: Vec::new(),
        }
    }

    /// Debug mode: additionally retain every raw (un-averaged) draw.
    pub fn with_raw_log(mut self) -> Self {
        self.record_raw = true;
        self
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn consumed(&self) -> f64 {
        self.log.consumed()
    }

    pub fn remaining(&self) -> Option<f64> {
        self.budget.map(|b| b - self.log.consumed())
    }

    pub fn log(&self) -> &SensingLog {
        &self.log
    }

    /// Raw draws retained under [`Self::with_raw_log`], as `(node, draw)`.
    pub fn raw_draws(&self) -> &[(usize, f64)] {
        &self.raw_draws
    }

    /// Oracle-side access for instrumentation and tests; estimators must not
    /// call this.
    pub fn signal(&self) -> &SparseSignal {
        &self.signal
    }

    fn check_budget(&self, cost: f64) -> Result<()> {
        if let Some(b) = self.budget {
            let remaining = b - self.log.consumed();
            // tolerate float accumulation when a schedule spends the budget exactly
            if cost > remaining + 1e-9 {
                return Err(Error::BudgetExhausted {
                    needed: cost,
                    remaining,
                });
            }
        }
        Ok(())
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.signal.n() {
            return Err(Error::arg(format!(
                "node index {i} out of range 1..={}",
                self.signal.n()
            )));
        }
        Ok(())
    }

    /// Mean of `r` independent draws of `x_i + N(0, sigma2)`; distributed as
    /// `x_i + N(0, sigma2/r)`. Consumes `r` budget units, logs one record.
    pub fn direct_measure(&mut self, i: usize, r: u32) -> Result<f64> {
        self.check_index(i)?;
        if r == 0 {
            return Err(Error::arg("repeat count must be at least 1"));
        }
        let cost = f64::from(r);
        self.check_budget(cost)?;
        let x = self.signal.value(i);
        let std = self.sigma2.sqrt();
        let mut sum = 0.0;
        for _ in 0..r {
            let draw = x + std * self.rng.sample::<f64, _>(StandardNormal);
            if self.record_raw {
                self.raw_draws.push((i, draw));
            }
            sum += draw;
        }
        let obs = sum / cost;
        self.log.push(LogRecord {
            kind: MeasurementKind::Direct,
            index_or_row: i,
            cost,
            observation: obs,
        });
        Ok(obs)
    }

    /// Coordinate measurement at fractional sensing energy `e`, served as
    /// `x_i + N(0, sigma2/e)`. Consumes `e` budget units.
    pub fn energy_measure(&mut self, i: usize, energy: f64) -> Result<f64> {
        self.check_index(i)?;
        if !(energy > 0.0) || !energy.is_finite() {
            return Err(Error::arg("sensing energy must be positive"));
        }
        self.check_budget(energy)?;
        let std = (self.sigma2 / energy).sqrt();
        let obs = self.signal.value(i) + std * self.rng.sample::<f64, _>(StandardNormal);
        self.log.push(LogRecord {
            kind: MeasurementKind::Energy,
            index_or_row: i,
            cost: energy,
            observation: obs,
        });
        Ok(obs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{leftmost_support, Support, TreeShape};

    fn shape(n: usize) -> TreeShape {
        TreeShape::new(n).unwrap()
    }

    fn fig1_signal() -> SparseSignal {
        let s = Support::new(shape(7), [1, 2, 3, 5]).unwrap();
        SparseSignal::with_amplitudes(s, vec![5.0, 1.0, 1.0, 3.0], 1.0).unwrap()
    }

    #[test]
    fn direct_measure_noiseless_and_off_support() {
        let mut o = MeasurementOracle::new(fig1_signal(), 0.0, None, rng_stream(0, 0));
        assert_eq!(o.direct_measure(5, 1).unwrap(), 3.0);
        assert_eq!(o.direct_measure(4, 2).unwrap(), 0.0);
        assert_eq!(o.consumed(), 3.0);
        assert!(o.direct_measure(0, 1).is_err());
        assert!(o.direct_measure(8, 1).is_err());
        assert!(o.direct_measure(1, 0).is_err());
    }

    #[test]
    fn direct_measure_mean_and_variance() {
        // x_1 = 5, sigma2 = 1, r = 4: observations ~ N(5, 1/4)
        let mut o = MeasurementOracle::new(fig1_signal(), 1.0, None, rng_stream(11, 0));
        let n = 100_000;
        let obs: Vec<f64> = (0..n).map(|_| o.direct_measure(1, 4).unwrap()).collect();
        let mean = obs.iter().sum::<f64>() / n as f64;
        let var = obs.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 5.0).abs() < 0.01, "mean {mean}");
        assert!((var - 0.25).abs() < 0.01, "var {var}");
    }

    #[test]
    fn budget_accounting_and_exhaustion() {
        let mut o = MeasurementOracle::new(fig1_signal(), 1.0, Some(9.0), rng_stream(2, 0));
        o.direct_measure(1, 4).unwrap();
        o.direct_measure(2, 4).unwrap();
        assert_eq!(o.remaining(), Some(1.0));
        match o.direct_measure(3, 4) {
            Err(Error::BudgetExhausted { needed, remaining }) => {
                assert_eq!(needed, 4.0);
                assert_eq!(remaining, 1.0);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
        // failed request consumes nothing; a fitting one still works
        o.direct_measure(3, 1).unwrap();
        assert_eq!(o.remaining(), Some(0.0));
        let total: f64 = o.log().records().iter().map(|r| r.cost).sum();
        assert_eq!(total, o.consumed());
    }

    #[test]
    fn energy_measure_variance_and_budget() {
        let n = 40_000;
        let e = 0.25;
        // budget sized for exactly the draws below plus the failing request
        let mut o = MeasurementOracle::new(
            fig1_signal(),
            1.0,
            Some(n as f64 * e + 5.0),
            rng_stream(5, 0),
        );
        let obs: Vec<f64> = (0..n).map(|_| o.energy_measure(5, e).unwrap()).collect();
        let mean = obs.iter().sum::<f64>() / n as f64;
        let var = obs.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // x_5 = 3, variance sigma2/e = 4
        assert!((mean - 3.0).abs() < 0.05, "mean {mean}");
        assert!((var - 4.0).abs() < 0.15, "var {var}");
        assert!((o.consumed() - n as f64 * e).abs() < 1e-9);
        assert!(o.energy_measure(1, 10.0).is_err());
        assert!(o.energy_measure(1, 0.0).is_err());
    }

    #[test]
    fn raw_log_keeps_every_draw() {
        let mut o =
            MeasurementOracle::new(fig1_signal(), 1.0, None, rng_stream(3, 0)).with_raw_log();
        let y = o.direct_measure(1, 4).unwrap();
        assert_eq!(o.raw_draws().len(), 4);
        let mean = o.raw_draws().iter().map(|&(_, d)| d).sum::<f64>() / 4.0;
        assert!((mean - y).abs() < 1e-12);
        assert_eq!(o.log().records().len(), 1);
    }

    #[test]
    fn log_csv_format() {
        let mut o = MeasurementOracle::new(fig1_signal(), 0.0, None, rng_stream(0, 0));
        o.direct_measure(5, 2).unwrap();
        o.energy_measure(4, 0.5).unwrap();
        let mut log = o.log().clone();
        log.push(LogRecord {
            kind: MeasurementKind::Row,
            index_or_row: 0,
            cost: 1.0,
            observation: 1.25,
        });
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines,
            vec![
                "record_idx,kind,index_or_row,repeats_or_energy,observation",
                "0,direct,5,2,3",
                "1,energy,4,0.5,0",
                "2,row,0,1,1.25",
            ]
        );
        assert_eq!(log.consumed(), 3.5);
    }

    #[test]
    fn noise_autocorrelation_is_small() {
        let mut o = MeasurementOracle::new(fig1_signal(), 1.0, None, rng_stream(17, 0));
        let n = 10_000;
        let resid: Vec<f64> = (0..n)
            .map(|_| o.direct_measure(1, 1).unwrap() - o.signal().value(1))
            .collect();
        let mean = resid.iter().sum::<f64>() / n as f64;
        let var = resid.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / n as f64;
        for lag in 1..=5usize {
            let cov = (0..n - lag)
                .map(|t| (resid[t] - mean) * (resid[t + lag] - mean))
                .sum::<f64>()
                / (n - lag) as f64;
            assert!((cov / var).abs() < 0.05, "lag {lag}");
        }
    }

    #[test]
    fn ensemble_determinism_and_row_norms() {
        let sh = shape(1023);
        let a = gaussian_ensemble(sh, 132, &mut rng_stream(8, 0));
        let b = gaussian_ensemble(sh, 132, &mut rng_stream(8, 0));
        assert_eq!(a.rows(), b.rows());
        assert_eq!(a.m(), 132);
        assert_eq!(a.n(), 1023);
        let mean_sq: f64 = a
            .rows()
            .rows()
            .into_iter()
            .map(|r| r.dot(&r))
            .sum::<f64>()
            / 132.0;
        assert!((0.97..=1.03).contains(&mean_sq), "mean row norm^2 {mean_sq}");
    }

    #[test]
    fn ensemble_entries_are_centered() {
        let sh = shape(4);
        let mut sums = [0.0f64; 4];
        let reps = 100_000;
        for seed in 0..reps {
            let a = gaussian_ensemble(sh, 1, &mut rng_stream(21, seed));
            for j in 0..4 {
                sums[j] += a.rows()[(0, j)];
            }
        }
        for (j, s) in sums.iter().enumerate() {
            let mean = s / reps as f64;
            assert!(mean.abs() < 0.02, "component {j} mean {mean}");
        }
    }

    #[test]
    fn nonadaptive_observe_examples() {
        let sh = shape(7);
        let a = gaussian_ensemble(sh, 5, &mut rng_stream(4, 0));

        let zero = SparseSignal::zeros_on(leftmost_support(sh, 3).unwrap());
        let y0 = nonadaptive_observe(&zero, &a, 0.0, &mut rng_stream(4, 1)).unwrap();
        assert!(y0.iter().all(|&v| v == 0.0));

        let e1 = Support::new(sh, [1]).unwrap();
        let x = SparseSignal::with_amplitudes(e1, vec![2.5], 2.5).unwrap();
        let y1 = nonadaptive_observe(&x, &a, 0.0, &mut rng_stream(4, 2)).unwrap();
        for j in 0..5 {
            assert!((y1[j] - 2.5 * a.rows()[(j, 0)]).abs() < 1e-15);
        }

        let wrong = gaussian_ensemble(shape(15), 5, &mut rng_stream(4, 3));
        assert!(nonadaptive_observe(&x, &wrong, 0.0, &mut rng_stream(4, 4)).is_err());
    }

    #[test]
    fn nonadaptive_observe_noise_is_centered() {
        let sh = shape(7);
        let a = gaussian_ensemble(sh, 3, &mut rng_stream(6, 0));
        let s = Support::new(sh, [1, 2]).unwrap();
        let x = SparseSignal::with_amplitudes(s, vec![1.0, -2.0], 1.0).unwrap();
        let clean = nonadaptive_observe(&x, &a, 0.0, &mut rng_stream(6, 1)).unwrap();
        let reps = 10_000;
        let mut sums = [0.0f64; 3];
        for t in 0..reps {
            let y = nonadaptive_observe(&x, &a, 1.0, &mut rng_stream(7, t)).unwrap();
            for j in 0..3 {
                sums[j] += y[j];
            }
        }
        for j in 0..3 {
            let mean = sums[j] / reps as f64;
            assert!(
                (mean - clean[j]).abs() < 5.0 / (reps as f64).sqrt(),
                "entry {j}"
            );
        }
    }

    #[test]
    fn rng_streams_are_reproducible_and_distinct() {
        let draws = |mut rng: TrialRng| -> Vec<f64> {
            (0..10_000)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect()
        };
        let a = draws(rng_stream(99, 7));
        let b = draws(rng_stream(99, 7));
        assert_eq!(a, b);
        let c = draws(rng_stream(99, 8));
        assert_ne!(a, c);
        let corr = {
            let n = a.len() as f64;
            let (ma, mc) = (
                a.iter().sum::<f64>() / n,
                c.iter().sum::<f64>() / n,
            );
            let cov = a
                .iter()
                .zip(&c)
                .map(|(x, y)| (x - ma) * (y - mc))
                .sum::<f64>()
                / n;
            let (va, vc) = (
                a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / n,
                c.iter().map(|y| (y - mc).powi(2)).sum::<f64>() / n,
            );
            cov / (va * vc).sqrt()
        };
        assert!(corr.abs() < 0.05, "cross-stream correlation {corr}");
    }
}
