//! Experiment configuration: one JSON document, unknown keys rejected.
//!
//! Most fields are optional; each experiment fills in the defaults of the
//! setup it reproduces and validates the result. Paper-scale phase runs
//! (`--paper-scale` or `"paper_scale": true`) switch the *defaults* to the
//! full-size grid; explicitly configured fields always win.

use crate::bounds::BoundQuery;
use crate::error::{Error, Result};
use crate::recover::TraversalOrder;
use crate::tree::{AmplitudeMode, SignMode};
use serde::Deserialize;
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SweepMu,
    Phase,
    Compare,
    Bounds,
    Enumerate,
}

/// A support-recovery method exercised by the comparison experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Adaptive tree-sensing procedure.
    Tree,
    /// Sequential-thresholding adaptive stand-in.
    Acs,
    /// Hierarchical group Lasso.
    Glasso,
    /// Plain Lasso.
    Lasso,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Tree => "tree",
            Method::Acs => "acs",
            Method::Glasso => "glasso",
            Method::Lasso => "lasso",
        })
    }
}

fn default_sigma2() -> f64 {
    1.0
}
fn default_delta() -> f64 {
    0.01
}
fn default_beta() -> f64 {
    1.0
}
fn default_gamma() -> f64 {
    0.25
}
fn default_base_seed() -> u64 {
    1_234_567
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub k_prime: Option<usize>,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub m_max: Option<usize>,
    #[serde(default)]
    pub r: Option<u32>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub mu_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub k_grid: Option<Vec<usize>>,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_base_seed")]
    pub base_seed: u64,
    #[serde(default)]
    pub methods: Option<Vec<Method>>,
    #[serde(default)]
    pub sign_mode: Option<SignMode>,
    #[serde(default)]
    pub amplitude_mode: Option<AmplitudeMode>,
    #[serde(default)]
    pub order: Option<TraversalOrder>,
    #[serde(default)]
    pub output_path: Option<String>,
    #[serde(default)]
    pub paper_scale: bool,
    #[serde(default)]
    pub list_members: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn common_checks(&self) -> Result<()> {
        if !(self.sigma2 >= 0.0) || !self.sigma2.is_finite() {
            return Err(Error::Config("sigma2 must be finite and nonnegative".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config("delta must lie in (0,1)".into()));
        }
        if !(self.beta >= 1.0) {
            return Err(Error::Config("beta must be at least 1".into()));
        }
        Ok(())
    }

    /// Parameters for `compare` (all methods) and `sweep_mu` (tree only).
    pub fn compare_spec(&self) -> Result<CompareSpec> {
        self.common_checks()?;
        let n = self.n.unwrap_or(1023);
        let k = self.k.unwrap_or(16);
        if k == 0 || 2 * k > n + 1 {
            return Err(Error::Config(format!(
                "k={k} outside 1..=(n+1)/2 for n={n}"
            )));
        }
        let k_prime = self.k_prime.unwrap_or(k);
        let r = self.r.unwrap_or(4);
        if r == 0 {
            return Err(Error::Config("r must be at least 1".into()));
        }
        let m = self.m.unwrap_or(r as usize * (2 * k + 1));
        if m < r as usize {
            return Err(Error::Config("budget m is below one repeated test".into()));
        }
        let trials = self.trials.unwrap_or(100);
        if trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        let mu_grid = match &self.mu_grid {
            Some(g) => checked_grid(g)?,
            // logarithmic over [0.5, 16]; the amplitude axis of the
            // comparison figures is logarithmic
            None => (0..16)
                .map(|i| 0.5 * 32f64.powf(i as f64 / 15.0))
                .collect(),
        };
        let methods = self.methods.clone().unwrap_or_else(|| {
            vec![Method::Tree, Method::Acs, Method::Glasso, Method::Lasso]
        });
        if methods.is_empty() {
            return Err(Error::Config("methods must be nonempty".into()));
        }
        let label = match self.experiment {
            ExperimentKind::SweepMu => "sweep_mu",
            _ => "compare",
        };
        Ok(CompareSpec {
            label,
            n,
            k,
            k_prime,
            m,
            r,
            trials,
            mu_grid,
            sigma2: self.sigma2,
            delta: self.delta,
            methods: if self.experiment == ExperimentKind::SweepMu {
                vec![Method::Tree]
            } else {
                methods
            },
            sign_mode: self.sign_mode.unwrap_or(SignMode::Nonnegative),
            amplitude_mode: self.amplitude_mode.unwrap_or(AmplitudeMode::ConstantMu),
            order: self.order.unwrap_or_default(),
            base_seed: self.base_seed,
        })
    }

    /// Parameters for the phase-transition experiment. `paper_scale` widens
    /// the default grid to the full-size run.
    pub fn phase_spec(&self, paper_scale: bool) -> Result<PhaseSpec> {
        self.common_checks()?;
        let paper = paper_scale || self.paper_scale;
        let n = self.n.unwrap_or(if paper { 65_535 } else { 4_095 });
        let m_max = self.m_max.unwrap_or(1_000);
        if m_max == 0 {
            return Err(Error::Config("m_max must be at least 1".into()));
        }
        let trials = self.trials.unwrap_or(if paper { 100 } else { 50 });
        if trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        let k_grid = match &self.k_grid {
            Some(g) => {
                if g.is_empty() || g.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Config(
                        "k_grid must be nonempty and strictly increasing".into(),
                    ));
                }
                g.clone()
            }
            None if paper => (1..=400).collect(),
            None => vec![2, 4, 8, 16, 32, 64, 128],
        };
        if k_grid.iter().any(|&k| k == 0 || 2 * k > n + 1) {
            return Err(Error::Config(format!(
                "k_grid entries must lie in 1..=(n+1)/2 for n={n}"
            )));
        }
        let mu_grid = match &self.mu_grid {
            Some(g) => checked_grid(g)?,
            None => (0..=34).map(|i| i as f64 * 0.5).collect(),
        };
        Ok(PhaseSpec {
            n,
            m_max,
            k_grid,
            mu_grid,
            trials,
            sigma2: self.sigma2,
            delta: self.delta,
            order: self.order.unwrap_or_default(),
            sign_mode: self.sign_mode.unwrap_or(SignMode::Nonnegative),
            amplitude_mode: self.amplitude_mode.unwrap_or(AmplitudeMode::ConstantMu),
            base_seed: self.base_seed,
        })
    }

    pub fn bound_query(&self) -> Result<BoundQuery> {
        self.common_checks()?;
        let n = self.n.unwrap_or(1023);
        let k = self.k.unwrap_or(16);
        let r = self.r.unwrap_or(4);
        let m = self.m.unwrap_or(r as usize * (2 * k + 1));
        Ok(BoundQuery {
            n,
            m,
            k,
            gamma: self.gamma,
            delta: self.delta,
            beta: self.beta,
            sigma2: self.sigma2,
            r,
        })
    }

    pub fn enumerate_spec(&self) -> Result<(usize, usize, bool)> {
        let n = self.n.unwrap_or(7);
        let k = self
            .k
            .ok_or_else(|| Error::Config("enumerate requires k".into()))?;
        if k == 0 || k > n {
            return Err(Error::Config(format!("k={k} outside 1..={n}")));
        }
        Ok((n, k, self.list_members))
    }
}

fn checked_grid(g: &[f64]) -> Result<Vec<f64>> {
    if g.is_empty() {
        return Err(Error::Config("mu_grid must be nonempty".into()));
    }
    if g.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Config("mu_grid entries must be finite and >= 0".into()));
    }
    if g.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Config("mu_grid must be sorted ascending".into()));
    }
    Ok(g.to_vec())
}

/// Validated parameters of a comparison (or tree-only amplitude sweep) run.
#[derive(Debug, Clone)]
pub struct CompareSpec {
    pub label: &'static str,
    pub n: usize,
    pub k: usize,
    pub k_prime: usize,
    pub m: usize,
    pub r: u32,
    pub trials: usize,
    pub mu_grid: Vec<f64>,
    pub sigma2: f64,
    pub delta: f64,
    pub methods: Vec<Method>,
    pub sign_mode: SignMode,
    pub amplitude_mode: AmplitudeMode,
    pub order: TraversalOrder,
    pub base_seed: u64,
}

/// Validated parameters of a phase-transition run.
#[derive(Debug, Clone)]
pub struct PhaseSpec {
    pub n: usize,
    pub m_max: usize,
    pub k_grid: Vec<usize>,
    pub mu_grid: Vec<f64>,
    pub trials: usize,
    pub sigma2: f64,
    pub delta: f64,
    pub order: TraversalOrder,
    pub sign_mode: SignMode,
    pub amplitude_mode: AmplitudeMode,
    pub base_seed: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_compare_config_fills_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"experiment": "compare"}"#).unwrap();
        let spec = cfg.compare_spec().unwrap();
        assert_eq!(spec.n, 1023);
        assert_eq!(spec.k, 16);
        assert_eq!(spec.k_prime, 16);
        assert_eq!(spec.r, 4);
        assert_eq!(spec.m, 132);
        assert_eq!(spec.trials, 100);
        assert_eq!(spec.mu_grid.len(), 16);
        assert_eq!(spec.methods.len(), 4);
        assert!((spec.mu_grid[0] - 0.5).abs() < 1e-12);
        assert!((spec.mu_grid[15] - 16.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_json(r#"{"experiment": "compare", "bogus": 1}"#);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn sweep_mu_restricts_methods() {
        let cfg = ExperimentConfig::from_json(
            r#"{"experiment": "sweep_mu", "methods": ["lasso", "tree"]}"#,
        )
        .unwrap();
        let spec = cfg.compare_spec().unwrap();
        assert_eq!(spec.label, "sweep_mu");
        assert_eq!(spec.methods, vec![Method::Tree]);
    }

    #[test]
    fn grids_must_be_sorted() {
        let cfg = ExperimentConfig::from_json(
            r#"{"experiment": "compare", "mu_grid": [2.0, 1.0]}"#,
        )
        .unwrap();
        assert!(cfg.compare_spec().is_err());
        let cfg = ExperimentConfig::from_json(
            r#"{"experiment": "phase", "k_grid": [4, 2]}"#,
        )
        .unwrap();
        assert!(cfg.phase_spec(false).is_err());
    }

    #[test]
    fn phase_defaults_and_paper_scale() {
        let cfg = ExperimentConfig::from_json(r#"{"experiment": "phase"}"#).unwrap();
        let spec = cfg.phase_spec(false).unwrap();
        assert_eq!(spec.n, 4095);
        assert_eq!(spec.m_max, 1000);
        assert_eq!(spec.k_grid, vec![2, 4, 8, 16, 32, 64, 128]);
        assert_eq!(spec.mu_grid.len(), 35);
        assert_eq!(spec.trials, 50);

        let paper = cfg.phase_spec(true).unwrap();
        assert_eq!(paper.n, 65_535);
        assert_eq!(paper.k_grid.len(), 400);
        assert_eq!(paper.trials, 100);
    }

    #[test]
    fn parameter_range_validation() {
        for bad in [
            r#"{"experiment": "compare", "delta": 0.0}"#,
            r#"{"experiment": "compare", "delta": 1.0}"#,
            r#"{"experiment": "compare", "sigma2": -1.0}"#,
            r#"{"experiment": "compare", "k": 600, "n": 1023}"#,
            r#"{"experiment": "compare", "trials": 0}"#,
            r#"{"experiment": "compare", "r": 0}"#,
        ] {
            let cfg = ExperimentConfig::from_json(bad).unwrap();
            assert!(cfg.compare_spec().is_err(), "{bad}");
        }
    }

    #[test]
    fn enumerate_spec_requires_k() {
        let cfg = ExperimentConfig::from_json(r#"{"experiment": "enumerate", "n": 7}"#).unwrap();
        assert!(cfg.enumerate_spec().is_err());
        let cfg =
            ExperimentConfig::from_json(r#"{"experiment": "enumerate", "n": 7, "k": 3}"#).unwrap();
        assert_eq!(cfg.enumerate_spec().unwrap(), (7, 3, false));
    }
}
