//! Experiment plans and their configuration-file form.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{JcmError, Result};
use crate::estimators::{Backtracking, Method, PemAoOptions, PemGdOptions};
use crate::metrics::{CrlbSummation, EavesdropperModel, NullSpaceMode};
use crate::signal::{NoiseSource, ScenarioConfig};

/// Sweep axis of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    /// Jamming-to-noise ratio in dB.
    Jnr,
    /// Number of receive antennas at Bob.
    NB,
    /// Signal-to-noise ratio in dB at the scenario's JNR.
    Snr,
    /// JNR axis restricted to the parametric estimators; per-iteration
    /// objective traces are written alongside the records.
    Convergence,
    /// JNR axis with an extra CRLB row per trial.
    Crlb,
}

impl Sweep {
    pub const ALL: [Sweep; 5] = [Sweep::Jnr, Sweep::NB, Sweep::Snr, Sweep::Convergence, Sweep::Crlb];

    pub fn label(&self) -> &'static str {
        match self {
            Sweep::Jnr => "jnr",
            Sweep::NB => "n_b",
            Sweep::Snr => "snr",
            Sweep::Convergence => "convergence",
            Sweep::Crlb => "crlb",
        }
    }

    /// Default grid for the axis.
    pub fn default_values(&self) -> Vec<f64> {
        match self {
            Sweep::NB => vec![4.0, 6.0, 8.0, 10.0, 12.0],
            _ => (0..9).map(|i| -5.0 + 2.5 * i as f64).collect(),
        }
    }

    /// Apply one sweep value to a scenario.
    pub fn apply(&self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut config = base.clone();
        match self {
            Sweep::Jnr | Sweep::Convergence | Sweep::Crlb => config.jnr_db = value,
            Sweep::Snr => config.snr_db = value,
            Sweep::NB => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(JcmError::InvalidConfig(format!("n_b sweep value {value} is not a positive integer")));
                }
                config = config.with_bob_antennas(value as usize);
            }
        }
        Ok(config)
    }
}

impl fmt::Display for Sweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Sweep {
    type Err = JcmError;

    fn from_str(s: &str) -> Result<Self> {
        Sweep::ALL
            .into_iter()
            .find(|w| w.label().eq_ignore_ascii_case(s) || (s.eq_ignore_ascii_case("nb") && *w == Sweep::NB))
            .ok_or_else(|| JcmError::InvalidConfig(format!("unknown sweep '{s}' (expected jnr, n_b, snr, convergence or crlb)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = JcmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(JcmError::InvalidConfig(format!("unknown output format '{s}' (expected csv or json)"))),
        }
    }
}

/// How noise power and jammer power are calibrated across an `n_b` sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AntennaCalibration {
    /// Calibrate once at the scenario's own Bob array and keep the noise
    /// variance and jammer power fixed while the array grows.
    #[default]
    Anchored,
    /// Re-calibrate at every array size so per-antenna JNR and SNR stay on
    /// target.
    PerValue,
}

/// Estimator and metric settings shared by every trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSettings {
    pub evd_rank: usize,
    pub gd_max_iters: usize,
    pub gd_streams: Option<usize>,
    pub ao_max_outer: usize,
    pub ao_max_inner: usize,
    pub tol: f64,
    pub patience: usize,
    pub null_space: NullSpaceMode,
    pub eavesdropper: EavesdropperModel,
    pub crlb_summation: CrlbSummation,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        let gd = PemGdOptions::default();
        let ao = PemAoOptions::default();
        Self {
            evd_rank: 2,
            gd_max_iters: gd.max_iters,
            gd_streams: None,
            ao_max_outer: ao.max_outer,
            ao_max_inner: ao.max_inner,
            tol: gd.tol,
            patience: gd.patience,
            null_space: NullSpaceMode::default(),
            eavesdropper: EavesdropperModel::default(),
            crlb_summation: CrlbSummation::default(),
        }
    }
}

impl EstimatorSettings {
    pub fn gd_options(&self, seed: u64) -> PemGdOptions {
        PemGdOptions {
            max_iters: self.gd_max_iters,
            tol: self.tol,
            patience: self.patience,
            seed,
            streams: self.gd_streams,
            line_search: Backtracking::default(),
        }
    }

    pub fn ao_options(&self, seed: u64) -> PemAoOptions {
        PemAoOptions {
            max_outer: self.ao_max_outer,
            max_inner: self.ao_max_inner,
            tol: self.tol,
            patience: self.patience,
            seed,
            line_search: Backtracking::default(),
        }
    }
}

/// A complete Monte-Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub scenario: ScenarioConfig,
    pub sweep: Sweep,
    pub sweep_values: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub output_path: PathBuf,
    pub output_format: OutputFormat,
    pub parallel: bool,
    /// Record wall-clock runtimes; when off, `runtime_s` is written as 0 so
    /// output files are byte-reproducible.
    pub timing: bool,
    pub antenna_calibration: AntennaCalibration,
    pub estimators: EstimatorSettings,
}

impl ExperimentPlan {
    pub fn new(scenario: ScenarioConfig, sweep: Sweep) -> Self {
        Self {
            scenario,
            sweep,
            sweep_values: sweep.default_values(),
            trials: 100,
            methods: Method::ALL.to_vec(),
            output_path: PathBuf::from("results.csv"),
            output_format: OutputFormat::Csv,
            parallel: true,
            timing: true,
            antenna_calibration: AntennaCalibration::default(),
            estimators: EstimatorSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.trials == 0 {
            return Err(JcmError::InvalidConfig("trials must be at least 1".into()));
        }
        if self.sweep_values.is_empty() {
            return Err(JcmError::InvalidConfig("sweep_values must not be empty".into()));
        }
        if self.sweep_values.iter().any(|v| !v.is_finite()) {
            return Err(JcmError::InvalidConfig("sweep_values must be finite".into()));
        }
        if self.sweep_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(JcmError::InvalidConfig("sweep_values must be strictly increasing".into()));
        }
        if self.methods.is_empty() {
            return Err(JcmError::InvalidConfig("at least one method is required".into()));
        }
        if self.sweep == Sweep::Convergence && self.methods.iter().any(|m| !matches!(m, Method::PemGd | Method::PemAo)) {
            return Err(JcmError::InvalidConfig("convergence sweeps only accept PEM_GD and PEM_AO".into()));
        }
        let needs_noise_subspace =
            self.methods.contains(&Method::Evd) || self.scenario.noise_source == NoiseSource::Estimated;
        for &v in &self.sweep_values {
            let config = self.sweep.apply(&self.scenario, v)?;
            config.validate()?;
            let n_b = config.bob.num_antennas;
            if needs_noise_subspace && n_b <= self.estimators.evd_rank {
                return Err(JcmError::InsufficientDimension { dim: n_b, rank: self.estimators.evd_rank });
            }
        }
        Ok(())
    }
}

/// Optional `[experiment]` table of a configuration file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub sweep: Option<Sweep>,
    pub values: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub methods: Option<Vec<Method>>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub parallel: Option<bool>,
    pub timing: Option<bool>,
    pub antenna_calibration: Option<AntennaCalibration>,
    pub estimators: Option<EstimatorSettings>,
}

/// Parsed configuration file: scenario keys at the top level plus an
/// optional `[experiment]` table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub scenario: ScenarioConfig,
    pub experiment: ExperimentSection,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| JcmError::InvalidConfig(e.to_string()))?;
        let experiment = match table.remove("experiment") {
            Some(value) => value
                .try_into()
                .map_err(|e: toml::de::Error| JcmError::InvalidConfig(format!("[experiment]: {e}")))?,
            None => ExperimentSection::default(),
        };
        let scenario: ScenarioConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| JcmError::InvalidConfig(e.to_string()))?;
        Ok(Self { scenario, experiment })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| JcmError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// Build a plan; values absent from the file fall back to defaults.
    pub fn into_plan(self) -> ExperimentPlan {
        let ex = self.experiment;
        let sweep = ex.sweep.unwrap_or(Sweep::Jnr);
        let mut plan = ExperimentPlan::new(self.scenario, sweep);
        if let Some(v) = ex.values {
            plan.sweep_values = v;
        }
        if let Some(t) = ex.trials {
            plan.trials = t;
        }
        if let Some(m) = ex.methods {
            plan.methods = m;
        }
        if let Some(o) = ex.out {
            plan.output_path = o;
        }
        if let Some(f) = ex.format {
            plan.output_format = f;
        }
        if let Some(p) = ex.parallel {
            plan.parallel = p;
        }
        if let Some(t) = ex.timing {
            plan.timing = t;
        }
        if let Some(a) = ex.antenna_calibration {
            plan.antenna_calibration = a;
        }
        if let Some(e) = ex.estimators {
            plan.estimators = e;
        }
        plan
    }
}

/// Parse a comma-separated list of numbers or a `start:step:stop` range.
pub fn parse_values(s: &str) -> Result<Vec<f64>> {
    let bad = |p: &str| JcmError::InvalidConfig(format!("invalid sweep value '{p}'"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad(p)))
            .collect::<Result<_>>()?;
        let (start, step, stop) = (nums[0], nums[1], nums[2]);
        if step <= 0.0 || stop < start {
            return Err(JcmError::InvalidConfig(format!("invalid range '{s}'")));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| start + step * i as f64).collect());
    }
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad(p)))
        .collect()
}

/// Parse a comma-separated method list such as `SCM,PEM_AO`.
pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    let mut out: Vec<Method> = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<Method>().map_err(JcmError::InvalidConfig))
        .collect::<Result<_>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}
