//! Transmit-side design, the ideal jamming covariance and finite-sample
//! observations at Bob while Alice is silent.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{JcmError, Result};
use crate::linalg::{c, complex_gaussian_mat, complex_gaussian_vec, derive_seed, frob_sq, vec_norm_sq, CMat, CVec};
use crate::scenario::{ArraySpec, ChannelSet, IrsMode, NodeLayout, PathLoss};

const STREAM_JAMMER: u64 = 0x004A_414D;

/// Where the noise variance subtracted from the sample covariance comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSource {
    /// Noise-subspace average from the rank-2 eigen-decomposition.
    #[default]
    Estimated,
    /// The calibrated ground-truth variance.
    Truth,
}

/// Full scenario description. Field names are also the keys of the
/// configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub alice: ArraySpec,
    pub bob: ArraySpec,
    pub mallory: ArraySpec,
    pub irs: ArraySpec,
    pub layout: NodeLayout,
    /// Alice's total transmit power (W).
    pub p_a: f64,
    /// Mallory's jamming power (W). Rescaled by calibration to hit `jnr_db`.
    pub p_m: f64,
    /// Fraction of Alice's power on the confidential message.
    pub beta: f64,
    /// Jamming streams.
    pub n_j: usize,
    /// Silent-period snapshots per estimate.
    pub k: usize,
    pub jnr_db: f64,
    pub snr_db: f64,
    pub seed: u64,
    pub path_loss: PathLoss,
    pub irs_mode: IrsMode,
    pub irs_phases: Option<Vec<f64>>,
    pub noise_source: NoiseSource,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            alice: ArraySpec::with_antennas(8),
            bob: ArraySpec::with_antennas(8),
            mallory: ArraySpec::with_antennas(8),
            irs: ArraySpec::with_antennas(16),
            layout: NodeLayout::default(),
            p_a: 1.0,
            p_m: 1.0,
            beta: 0.9,
            n_j: 4,
            k: 5,
            jnr_db: 5.0,
            snr_db: 10.0,
            seed: 0,
            path_loss: PathLoss::default(),
            irs_mode: IrsMode::Random,
            irs_phases: None,
            noise_source: NoiseSource::Estimated,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        for a in [&self.alice, &self.bob, &self.mallory, &self.irs] {
            a.validate()?;
        }
        self.layout.validate()?;
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(JcmError::InvalidConfig(format!("beta = {} outside [0, 1]", self.beta)));
        }
        if self.n_j < 1 || self.n_j + 1 > self.mallory.num_antennas {
            return Err(JcmError::InvalidConfig(format!(
                "n_j = {} must lie in [1, {}]",
                self.n_j,
                self.mallory.num_antennas.saturating_sub(1)
            )));
        }
        if self.k < 1 {
            return Err(JcmError::InvalidConfig("k must be at least 1".into()));
        }
        if !(self.p_a >= 0.0) || !(self.p_m >= 0.0) {
            return Err(JcmError::InvalidConfig("powers must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn with_bob_antennas(&self, n_b: usize) -> Self {
        let mut out = self.clone();
        out.bob.num_antennas = n_b;
        out
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Alice's beamformer and artificial-noise projection, and Mallory's
/// jamming projection.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitSide {
    /// Unit-norm confidential-message beamformer `v`.
    pub beamformer: CVec,
    /// AN projection `T_A,AN` (`N_A x N_A`), trace-normalized.
    pub an_projection: CMat,
    /// Jamming projection `T_M,AN` (`N_M x N_J`), trace-normalized.
    pub jam_projection: CMat,
}

/// Right singular vectors of `m` (as columns) with their singular values,
/// sorted by decreasing singular value.
fn right_singular(m: &CMat) -> (Vec<f64>, CMat) {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut v = CMat::zeros(m.ncols(), order.len());
    for (dst, &src) in order.iter().enumerate() {
        v.set_column(dst, &vt.row(src).adjoint());
    }
    (values, v)
}

pub fn make_transmit_side(channels: &ChannelSet, config: &ScenarioConfig) -> Result<TransmitSide> {
    let n_a = channels.alice_equiv.ncols();

    let (sv, v_right) = right_singular(&channels.alice_equiv);
    let beamformer = if sv.first().is_some_and(|&s| s > 0.0) {
        let v = v_right.column(0).into_owned();
        let n = v.norm();
        v / c(n, 0.0)
    } else {
        let mut e = CVec::zeros(n_a);
        e[0] = c(1.0, 0.0);
        e
    };

    // AN must vanish at both the IRS and Bob.
    let stacked = {
        let (ai, ab) = (&channels.alice_irs, &channels.alice_bob);
        let mut s = CMat::zeros(ai.nrows() + ab.nrows(), n_a);
        s.rows_mut(0, ai.nrows()).copy_from(ai);
        s.rows_mut(ai.nrows(), ab.nrows()).copy_from(ab);
        s
    };
    let (sv, basis) = right_singular(&stacked);
    let smax = sv.first().copied().unwrap_or(0.0);
    let rank = sv.iter().filter(|&&s| s > 1e-10 * smax).count();
    if rank >= n_a {
        return Err(JcmError::AnInfeasible);
    }
    let mut proj = CMat::identity(n_a, n_a);
    for i in 0..rank {
        let u = basis.column(i);
        proj -= &u * u.adjoint();
    }
    let an_projection = proj / c(((n_a - rank) as f64).sqrt(), 0.0);

    let n_m = config.mallory.num_antennas;
    let n_j = config.n_j;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, STREAM_JAMMER));
    let draw = complex_gaussian_mat(&mut rng, n_m, n_j, 1.0);
    let q = draw.qr().q();
    let jam_projection = q.columns(0, n_j).into_owned() / c((n_j as f64).sqrt(), 0.0);

    Ok(TransmitSide {
        beamformer,
        an_projection,
        jam_projection,
    })
}

/// Ground-truth jamming covariance `R_i = F F^H` and the noise variance it
/// was calibrated against.
#[derive(Debug, Clone, PartialEq)]
pub struct JcmTruth {
    pub r_i: CMat,
    /// `F = sqrt(P_M) H_M1 T_M,AN`, `N_B x N_J`.
    pub f: CMat,
    pub sigma_b2: f64,
}

impl JcmTruth {
    pub fn with_noise(mut self, sigma_b2: f64) -> Self {
        self.sigma_b2 = sigma_b2;
        self
    }

    pub fn num_rx(&self) -> usize {
        self.r_i.nrows()
    }

    /// `R_i + sigma^2 I`.
    pub fn received_covariance(&self) -> CMat {
        let n = self.num_rx();
        &self.r_i + CMat::identity(n, n) * c(self.sigma_b2, 0.0)
    }
}

/// Ideal JCM at the configured jamming power. The noise variance is left at
/// zero; see [`calibrated_truth`].
pub fn ideal_jcm(channels: &ChannelSet, tx: &TransmitSide, config: &ScenarioConfig) -> JcmTruth {
    jcm_at_power(channels, tx, config.p_m)
}

fn jcm_at_power(channels: &ChannelSet, tx: &TransmitSide, p_m: f64) -> JcmTruth {
    let f = &channels.mallory_equiv * &tx.jam_projection * c(p_m.sqrt(), 0.0);
    let r_i = &f * f.adjoint();
    JcmTruth { r_i, f, sigma_b2: 0.0 }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub sigma_b2: f64,
    pub p_m: f64,
}

/// Pick the noise variance that realizes `snr_db` and the jamming power that
/// realizes `jnr_db`, both as per-receive-antenna average power ratios.
pub fn calibrate(channels: &ChannelSet, tx: &TransmitSide, config: &ScenarioConfig) -> Result<Calibration> {
    let n_b = channels.num_bob() as f64;
    let signal = config.beta * config.p_a * vec_norm_sq(&(&channels.alice_equiv * &tx.beamformer));
    if !(signal > 0.0) {
        return Err(JcmError::CalibrationInfeasible("no signal power reaches Bob".into()));
    }
    let sigma_b2 = signal / (n_b * db_to_linear(config.snr_db));
    let unit = frob_sq(&(&channels.mallory_equiv * &tx.jam_projection));
    if !(unit > 0.0) {
        return Err(JcmError::CalibrationInfeasible("no jamming power reaches Bob".into()));
    }
    let p_m = db_to_linear(config.jnr_db) * n_b * sigma_b2 / unit;
    Ok(Calibration { sigma_b2, p_m })
}

/// Calibrate, then build the truth at the calibrated jamming power.
pub fn calibrated_truth(channels: &ChannelSet, tx: &TransmitSide, config: &ScenarioConfig) -> Result<(JcmTruth, Calibration)> {
    let cal = calibrate(channels, tx, config)?;
    Ok((jcm_at_power(channels, tx, cal.p_m).with_noise(cal.sigma_b2), cal))
}

/// Silent-period snapshots; column `k` is `y_B[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationBatch {
    pub samples: CMat,
    pub sigma_b2_true: f64,
}

impl ObservationBatch {
    pub fn len(&self) -> usize {
        self.samples.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.ncols() == 0
    }
}

/// Draw `k` snapshots `y = F z + n` with `z ~ CN(0, I)` and
/// `n ~ CN(0, sigma^2 I)`.
pub fn sample_observations(truth: &JcmTruth, k: usize, seed: u64) -> ObservationBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n_b, n_j) = truth.f.shape();
    let mut samples = CMat::zeros(n_b, k);
    for col in 0..k {
        let z = complex_gaussian_vec(&mut rng, n_j, 1.0);
        let n = complex_gaussian_vec(&mut rng, n_b, truth.sigma_b2);
        samples.set_column(col, &(&truth.f * z + n));
    }
    ObservationBatch {
        samples,
        sigma_b2_true: truth.sigma_b2,
    }
}

/// `S = R_hat - sigma^2 I`.
pub fn subtract_noise(r_scm: &CMat, sigma2: f64) -> CMat {
    let n = r_scm.nrows();
    r_scm - CMat::identity(n, n) * c(sigma2, 0.0)
}
