//! Per-trial pipeline and the Monte-Carlo driver.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::plan::{AntennaCalibration, EstimatorSettings, ExperimentPlan, Sweep};
use crate::error::{JcmError, Result};
use crate::estimators::{evd_estimate, pem_ao, pem_gd, scm, JcmEstimate, Method};
use crate::linalg::{derive_seed, CMat};
use crate::metrics::{crlb_sum, nmse, nsp_max_wfrp, secrecy_rate};
use crate::scenario::{build_channels, ChannelSet};
use crate::signal::{
    calibrate, ideal_jcm, make_transmit_side, sample_observations, subtract_noise, Calibration, JcmTruth, NoiseSource,
    ObservationBatch, ScenarioConfig, TransmitSide,
};

const STREAM_CHANNELS: u64 = 0x4348;
const STREAM_SAMPLES: u64 = 0x5359;
const STREAM_GD: u64 = 0x4744;
const STREAM_AO: u64 = 0x414F;

/// Row label of a result record: one of the estimators or the CRLB
/// benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Series {
    Estimator(Method),
    Crlb,
}

impl Series {
    pub fn label(&self) -> &'static str {
        match self {
            Series::Estimator(m) => m.label(),
            Series::Crlb => "CRLB",
        }
    }
}

impl From<Method> for Series {
    fn from(m: Method) -> Self {
        Series::Estimator(m)
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Series {
    type Err = JcmError;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("CRLB") {
            return Ok(Series::Crlb);
        }
        s.parse::<Method>().map(Series::Estimator).map_err(JcmError::InvalidConfig)
    }
}

impl Serialize for Series {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Series {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One result row. Metrics that could not be computed are `NaN`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub sweep_name: String,
    pub sweep_value: f64,
    pub trial: usize,
    pub method: Series,
    pub nmse: f64,
    pub sr_bits: f64,
    pub sigma_hat2: f64,
    pub iterations: usize,
    pub runtime_s: f64,
    pub converged: bool,
}

impl TrialRecord {
    fn failed(sweep: Sweep, value: f64, trial: usize, method: Series) -> Self {
        Self {
            sweep_name: sweep.label().to_string(),
            sweep_value: value,
            trial,
            method,
            nmse: f64::NAN,
            sr_bits: f64::NAN,
            sigma_hat2: f64::NAN,
            iterations: 0,
            runtime_s: 0.0,
            converged: false,
        }
    }

    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.sweep_value
            .total_cmp(&other.sweep_value)
            .then(self.trial.cmp(&other.trial))
            .then(self.method.cmp(&other.method))
    }
}

/// Seed of one trial: a stable mix of the base seed, the sweep value's bit
/// pattern and the trial index, independent of execution order.
pub fn trial_seed(base: u64, value: f64, trial: usize) -> u64 {
    derive_seed(derive_seed(base, value.to_bits()), trial as u64)
}

/// Everything an estimator sees in one trial, plus the ground truth.
#[derive(Debug, Clone)]
pub struct TrialSetup {
    pub config: ScenarioConfig,
    pub seed: u64,
    pub channels: ChannelSet,
    pub tx: TransmitSide,
    pub truth: JcmTruth,
    pub calibration: Calibration,
    pub batch: ObservationBatch,
    /// Sample covariance `Y Y^H / K`.
    pub r_scm: CMat,
    /// Noise variance subtracted to form `s`.
    pub sigma_used: f64,
    /// `S = R_scm - sigma_used I`, the common target of every estimator.
    pub s: CMat,
}

impl TrialSetup {
    /// Build the trial for `value` on the plan's sweep axis.
    pub fn new(plan: &ExperimentPlan, value: f64, trial: usize) -> Result<Self> {
        let seed = trial_seed(plan.scenario.seed, value, trial);
        let mut base = plan.scenario.clone();
        base.seed = seed;
        let mut config = plan.sweep.apply(&base, value)?;
        config.seed = seed;
        let channel_seed = derive_seed(seed, STREAM_CHANNELS);
        let channels = build_channels(&config, channel_seed)?;
        let tx = make_transmit_side(&channels, &config)?;
        let anchored = plan.sweep == Sweep::NB && plan.antenna_calibration == AntennaCalibration::Anchored;
        let calibration = if anchored {
            let ref_channels = build_channels(&base, channel_seed)?;
            let ref_tx = make_transmit_side(&ref_channels, &base)?;
            calibrate(&ref_channels, &ref_tx, &base)?
        } else {
            calibrate(&channels, &tx, &config)?
        };
        let powered = ScenarioConfig { p_m: calibration.p_m, ..config.clone() };
        let truth = ideal_jcm(&channels, &tx, &powered).with_noise(calibration.sigma_b2);
        Self::from_truth(config, seed, channels, tx, truth, calibration, plan.estimators.evd_rank)
    }

    /// Draw observations for a given truth and form the common target.
    pub fn from_truth(
        config: ScenarioConfig,
        seed: u64,
        channels: ChannelSet,
        tx: TransmitSide,
        truth: JcmTruth,
        calibration: Calibration,
        evd_rank: usize,
    ) -> Result<Self> {
        let batch = sample_observations(&truth, config.k, derive_seed(seed, STREAM_SAMPLES));
        let r_scm = scm(&batch)?.r_hat;
        let sigma_used = match config.noise_source {
            NoiseSource::Truth => truth.sigma_b2,
            NoiseSource::Estimated => evd_estimate(&r_scm, evd_rank)?
                .sigma_hat2
                .expect("EVD always estimates the noise variance"),
        };
        let s = subtract_noise(&r_scm, sigma_used);
        Ok(Self { config, seed, channels, tx, truth, calibration, batch, r_scm, sigma_used, s })
    }

    /// Run one estimator on this trial's data.
    pub fn estimate(&self, method: Method, settings: &EstimatorSettings) -> Result<JcmEstimate> {
        let geom = self.channels.reflection_geometry();
        match method {
            Method::Scm => Ok(JcmEstimate::direct(self.s.clone(), Method::Scm, Some(self.sigma_used))),
            Method::Evd => evd_estimate(&self.r_scm, settings.evd_rank),
            Method::PemGd => pem_gd(&self.s, &geom, &settings.gd_options(derive_seed(self.seed, STREAM_GD))),
            Method::PemAo => pem_ao(&self.s, &geom, &settings.ao_options(derive_seed(self.seed, STREAM_AO))),
        }
    }

    /// Secrecy rate achieved by the null-space beamformer designed on `r_hat`.
    pub fn secrecy_rate(&self, r_hat: &CMat, settings: &EstimatorSettings) -> Result<f64> {
        let rbf = nsp_max_wfrp(r_hat, &self.channels.alice_equiv, &self.tx.beamformer, settings.null_space)?;
        Ok(secrecy_rate(&self.channels, &self.tx, &rbf.v_br, &self.truth, &self.config, settings.eavesdropper))
    }
}

/// Evaluate one method on a prepared trial.
pub fn evaluate(setup: &TrialSetup, method: Method, settings: &EstimatorSettings, timing: bool) -> MethodOutcome {
    let start = Instant::now();
    let est = setup.estimate(method, settings);
    let runtime = if timing { start.elapsed().as_secs_f64() } else { 0.0 };
    match est {
        Err(error) => MethodOutcome { estimate: None, nmse: f64::NAN, sr_bits: f64::NAN, runtime, error: Some(error) },
        Ok(est) => {
            let (nmse, mut error) = match nmse(&est.r_hat, &setup.truth.r_i) {
                Ok(v) => (v, None),
                Err(e) => (f64::NAN, Some(e)),
            };
            let sr_bits = match setup.secrecy_rate(&est.r_hat, settings) {
                Ok(v) => v,
                Err(e) => {
                    error.get_or_insert(e);
                    f64::NAN
                }
            };
            MethodOutcome { estimate: Some(est), nmse, sr_bits, runtime, error }
        }
    }
}

#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub estimate: Option<JcmEstimate>,
    pub nmse: f64,
    pub sr_bits: f64,
    pub runtime: f64,
    pub error: Option<JcmError>,
}

/// All records of one `(sweep_value, trial)` work item.
pub fn run_trial(plan: &ExperimentPlan, value: f64, trial: usize) -> Vec<TrialRecord> {
    let mut series: Vec<Series> = plan.methods.iter().map(|&m| Series::Estimator(m)).collect();
    if plan.sweep == Sweep::Crlb {
        series.push(Series::Crlb);
    }
    let setup = match TrialSetup::new(plan, value, trial) {
        Ok(s) => s,
        Err(_) => return series.into_iter().map(|m| TrialRecord::failed(plan.sweep, value, trial, m)).collect(),
    };
    let mut out = Vec::with_capacity(series.len());
    for &method in &plan.methods {
        let outcome = evaluate(&setup, method, &plan.estimators, plan.timing);
        let mut record = TrialRecord::failed(plan.sweep, value, trial, method.into());
        record.nmse = outcome.nmse;
        record.sr_bits = outcome.sr_bits;
        record.runtime_s = outcome.runtime;
        if let Some(est) = &outcome.estimate {
            record.sigma_hat2 = est.sigma_hat2.unwrap_or(setup.sigma_used);
            record.iterations = est.iterations;
            record.converged = est.converged && outcome.error.is_none();
        }
        out.push(record);
    }
    if plan.sweep == Sweep::Crlb {
        let mut record = TrialRecord::failed(plan.sweep, value, trial, Series::Crlb);
        if let Ok(c) = crlb_sum(&setup.truth, setup.config.k, plan.estimators.crlb_summation) {
            record.nmse = c.value;
            record.sigma_hat2 = setup.truth.sigma_b2;
            record.converged = !c.singular;
        }
        out.push(record);
    }
    out
}

/// Run every `(sweep_value, trial)` of the plan. Records come back in
/// canonical order whatever the execution mode.
pub fn run_plan(plan: &ExperimentPlan) -> Result<Vec<TrialRecord>> {
    plan.validate()?;
    let items: Vec<(f64, usize)> = plan
        .sweep_values
        .iter()
        .flat_map(|&v| (0..plan.trials).map(move |t| (v, t)))
        .collect();
    let mut records: Vec<TrialRecord> = if plan.parallel {
        items.par_iter().flat_map_iter(|&(v, t)| run_trial(plan, v, t)).collect()
    } else {
        items.iter().flat_map(|&(v, t)| run_trial(plan, v, t)).collect()
    };
    records.sort_by(TrialRecord::canonical_cmp);
    Ok(records)
}
