//! JSON run configurations, one document per run. Everything is validated
//! before any computation starts; violations name the offending field.

use serde::{Deserialize, Serialize};

use torusns::solver::SolverConfig;
use torusns::{SpectralVectorField, TorusGrid};

use crate::Failure;

/// Initial-data presets shared by the simulate/smoothing/stability commands.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Preset {
    /// Taylor-Green vortex, optionally Galilean-boosted by a mean flow.
    TaylorGreen {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        drift: [f64; 2],
    },
    /// Seeded divergence-free field with spectrum |k|^-sigma, unit L2,
    /// scaled by `amplitude`.
    Random {
        seed: u64,
        #[serde(default = "two")]
        sigma: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

impl Default for Preset {
    fn default() -> Self {
        Preset::TaylorGreen {
            amplitude: 1.0,
            drift: [0.0, 0.0],
        }
    }
}

impl Preset {
    pub fn build(&self, grid: TorusGrid, seed_override: Option<u64>) -> Result<SpectralVectorField, Failure> {
        match *self {
            Preset::TaylorGreen { amplitude, drift } => {
                if !amplitude.is_finite() || !drift.iter().all(|d| d.is_finite()) {
                    return Err(Failure::config("preset: amplitude and drift must be finite"));
                }
                Ok(torusns::solver::taylor_green_with_drift(grid, amplitude, drift))
            }
            Preset::Random { seed, sigma, amplitude } => {
                let seed = seed_override.unwrap_or(seed);
                let v = torusns::solver::random_divfree(grid, seed, sigma)
                    .map_err(|e| Failure::config(&format!("preset.sigma: {e}")))?;
                Ok(v.scaled(amplitude))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelBoundsConfig {
    /// Explicit strictly-increasing positive times; overrides the range.
    pub t_values: Option<Vec<f64>>,
    pub t_min: f64,
    pub t_max: f64,
    pub t_count: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub tolerance: f64,
    /// The reported constant maximizes sqrt(t) l1 over converged entries
    /// with t <= c_hat_t_max.
    pub c_hat_t_max: f64,
}

impl Default for KernelBoundsConfig {
    fn default() -> Self {
        Self {
            t_values: None,
            t_min: 1e-3,
            t_max: 1e-1,
            t_count: 16,
            n_min: 64,
            n_max: 2048,
            tolerance: 1e-6,
            c_hat_t_max: 1e-2,
        }
    }
}

impl KernelBoundsConfig {
    pub fn times(&self) -> Result<Vec<f64>, Failure> {
        let ts = match &self.t_values {
            Some(ts) => ts.clone(),
            None => {
                if !(self.t_min > 0.0) {
                    return Err(Failure::config("t_min: must be > 0"));
                }
                if !(self.t_max >= self.t_min) {
                    return Err(Failure::config("t_max: must be >= t_min"));
                }
                if self.t_count == 0 {
                    return Err(Failure::config("t_count: must be >= 1"));
                }
                torusns::oseen::log_spaced(self.t_min, self.t_max, self.t_count)
            }
        };
        let mut prev = 0.0;
        for &t in &ts {
            if !(t > 0.0) {
                return Err(Failure::config(&format!("t_values: times must be > 0, got {t}")));
            }
            if t <= prev {
                return Err(Failure::config("t_values: times must be strictly increasing"));
            }
            prev = t;
        }
        if self.n_min < 4 || self.n_max < self.n_min {
            return Err(Failure::config("n_min/n_max: need 4 <= n_min <= n_max"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Failure::config("tolerance: must be > 0"));
        }
        Ok(ts)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LorentzConfig {
    pub n_list: Vec<usize>,
    pub q_list: Vec<f64>,
    /// Seeded corpus fields per resolution (embedding sweep).
    pub fields: usize,
    /// Seeded field pairs per resolution (product sweep).
    pub pairs: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub seed: u64,
}

impl Default for LorentzConfig {
    fn default() -> Self {
        Self {
            n_list: vec![64, 128, 256],
            q_list: vec![1.1, 1.5, 1.9],
            fields: 100,
            pairs: 200,
            sigma_min: 1.2,
            sigma_max: 2.5,
            seed: 1,
        }
    }
}

impl LorentzConfig {
    pub fn validate(&self) -> Result<(), Failure> {
        for &n in &self.n_list {
            TorusGrid::new(n).map_err(|e| Failure::config(&format!("n_list: {e}")))?;
        }
        for &q in &self.q_list {
            if !(q > 1.0 && q < 2.0) {
                return Err(Failure::config(&format!("q_list: q must lie in (1,2), got {q}")));
            }
        }
        if self.fields == 0 || self.pairs == 0 {
            return Err(Failure::config("fields/pairs: must be >= 1"));
        }
        if !(self.sigma_min > 1.0 && self.sigma_max >= self.sigma_min) {
            return Err(Failure::config("sigma_min/sigma_max: need 1 < sigma_min <= sigma_max"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub preset: Preset,
    pub solver: SolverConfig,
    pub t0: f64,
    pub t_end: f64,
    /// Sample times at which to write binary state dumps.
    pub dump_times: Vec<f64>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            preset: Preset::default(),
            solver: SolverConfig::default(),
            t0: 0.0,
            t_end: 0.1,
            dump_times: Vec::new(),
        }
    }
}

impl SimulateConfig {
    pub fn validate(&self) -> Result<(), Failure> {
        self.solver.validate().map_err(|e| Failure::config(&format!("solver: {e}")))?;
        if !(self.t_end > self.t0) {
            return Err(Failure::config("t_end: must be > t0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothingConfig {
    pub preset: Preset,
    pub solver: SolverConfig,
    /// Restart time at which the weighted sup-norm is measured.
    pub t0: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta_count: usize,
    /// When present, the fitted log-log slope must land in this interval.
    pub expected_slope: Option<[f64; 2]>,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self {
            preset: Preset::TaylorGreen {
                amplitude: 0.1,
                drift: [1.0, 0.5],
            },
            solver: SolverConfig {
                n: 32,
                dt: 1e-4,
                ..Default::default()
            },
            t0: 0.05,
            delta_min: 1e-3,
            delta_max: 1e-1,
            delta_count: 13,
            expected_slope: Some([0.45, 0.55]),
        }
    }
}

impl SmoothingConfig {
    pub fn validate(&self) -> Result<(), Failure> {
        self.solver.validate().map_err(|e| Failure::config(&format!("solver: {e}")))?;
        if !(self.t0 >= 0.0) {
            return Err(Failure::config("t0: must be >= 0"));
        }
        if !(self.delta_min > 0.0 && self.delta_max >= self.delta_min) {
            return Err(Failure::config("delta_min/delta_max: need 0 < delta_min <= delta_max"));
        }
        if self.delta_count < 2 {
            return Err(Failure::config("delta_count: must be >= 2"));
        }
        if self.delta_min < self.solver.dt {
            return Err(Failure::config("delta_min: window smaller than dt has no samples"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CHatPolicy {
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub tolerance: f64,
}

impl Default for CHatPolicy {
    fn default() -> Self {
        Self {
            t_min: 3e-3,
            t_max: 1e-1,
            samples: 8,
            n_min: 64,
            n_max: 1024,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityCliConfig {
    pub preset: Preset,
    pub solver: SolverConfig,
    /// Restart times to sweep; each trial uses one.
    pub t0_list: Vec<f64>,
    pub delta0: f64,
    pub eps: f64,
    pub trials: usize,
    pub seed0: u64,
    pub kappa_target: f64,
    pub perturbation_sigma: f64,
    /// Supplied kernel constant; when absent it is estimated from
    /// `c_hat_policy` and the provenance is recorded as estimated.
    pub c_hat: Option<f64>,
    pub c_hat_policy: CHatPolicy,
}

impl Default for StabilityCliConfig {
    fn default() -> Self {
        Self {
            preset: Preset::default(),
            solver: SolverConfig {
                n: 64,
                dt: 1e-4,
                ..Default::default()
            },
            t0_list: vec![0.05],
            delta0: 0.05,
            eps: 1e-3,
            trials: 100,
            seed0: 0,
            kappa_target: 0.5,
            perturbation_sigma: 2.0,
            c_hat: None,
            c_hat_policy: CHatPolicy::default(),
        }
    }
}

impl StabilityCliConfig {
    pub fn validate(&self) -> Result<(), Failure> {
        self.solver.validate().map_err(|e| Failure::config(&format!("solver: {e}")))?;
        if self.t0_list.is_empty() {
            return Err(Failure::config("t0_list: must not be empty"));
        }
        for &t0 in &self.t0_list {
            if !(t0 >= 0.0) {
                return Err(Failure::config("t0_list: restart times must be >= 0"));
            }
        }
        if !(self.delta0 > 0.0) {
            return Err(Failure::config("delta0: must be > 0"));
        }
        if !(self.eps >= 0.0) {
            return Err(Failure::config("eps: must be >= 0"));
        }
        if self.trials == 0 {
            return Err(Failure::config("trials: must be >= 1"));
        }
        if !(self.kappa_target > 0.0 && self.kappa_target < 1.0) {
            return Err(Failure::config("kappa_target: must lie in (0, 1)"));
        }
        if let Some(c) = self.c_hat {
            if !(c > 0.0) {
                return Err(Failure::config("c_hat: must be > 0 when supplied"));
            }
        }
        Ok(())
    }
}

pub fn load<T: serde::de::DeserializeOwned + Default>(
    path: Option<&std::path::Path>,
) -> Result<T, Failure> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Failure::config(&format!("--config {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Failure::config(&format!("--config {}: {e}", p.display())))
        }
    }
}
