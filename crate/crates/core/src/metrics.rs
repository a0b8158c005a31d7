//! Null-space receive beamforming and the evaluation metrics: NMSE, secrecy
//! rate and the normalized Cramér-Rao bound sum.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{JcmError, Result};
use crate::linalg::{c, frob_sq, CMat, CVec, HermitianEigen};
use crate::scenario::ChannelSet;
use crate::signal::{JcmTruth, ScenarioConfig, TransmitSide};

/// How the null space of an estimated covariance is selected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullSpaceMode {
    /// Eigenvectors whose eigenvalue is below `tol * lambda_max`.
    Tolerance(f64),
    /// Everything except the `r` dominant eigenvectors.
    FixedRank(usize),
}

impl Default for NullSpaceMode {
    fn default() -> Self {
        NullSpaceMode::Tolerance(1e-6)
    }
}

/// Receive beamformer confined to the null space of a covariance estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfSolution {
    pub v_br: CVec,
    /// `v^H R v` against the matrix that was nulled.
    pub residual_jam_power: f64,
    /// `|v^H H_A1 v_A|^2` for the unit-power symbol stream.
    pub achieved_signal_power: f64,
    /// Dimension of the null space used.
    pub null_dim: usize,
}

/// Orthonormal basis (columns) of the numerical null space of `r`.
pub fn null_space_basis(r: &CMat, mode: NullSpaceMode) -> CMat {
    let eig = HermitianEigen::new(r);
    let n = eig.values.len();
    let keep: Vec<usize> = match mode {
        NullSpaceMode::Tolerance(tol) => {
            let lmax = eig.max_value().max(0.0);
            (0..n).filter(|&i| eig.values[i] <= tol * lmax).collect()
        }
        NullSpaceMode::FixedRank(rank) => (rank.min(n)..n).collect(),
    };
    let mut basis = CMat::zeros(n, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        basis.set_column(j, &eig.vectors.column(i));
    }
    basis
}

/// Maximize `|v^H H_A1 v_A|^2` over unit vectors with `v^H R = 0`.
///
/// Within the null space the objective is a rank-one quadratic form, so the
/// projected matched filter is the exact maximizer.
pub fn nsp_max_wfrp(r_est: &CMat, h_a1: &CMat, v: &CVec, mode: NullSpaceMode) -> Result<RbfSolution> {
    if r_est.nrows() != h_a1.nrows() || h_a1.ncols() != v.len() {
        return Err(JcmError::DimensionMismatch(format!(
            "covariance {}x{}, channel {}x{}, beamformer {}",
            r_est.nrows(),
            r_est.ncols(),
            h_a1.nrows(),
            h_a1.ncols(),
            v.len()
        )));
    }
    let w = h_a1 * v;
    let basis = null_space_basis(r_est, mode);
    if basis.ncols() == 0 {
        return Err(JcmError::NoNullSpace);
    }
    let proj = &basis * (basis.adjoint() * &w);
    let norm = proj.norm();
    if norm <= 1e-12 * w.norm() || norm == 0.0 {
        return Err(JcmError::SignalOrthogonal);
    }
    let v_br = proj / c(norm, 0.0);
    Ok(RbfSolution {
        residual_jam_power: v_br.dotc(&(r_est * &v_br)).re,
        achieved_signal_power: v_br.dotc(&w).norm_sqr(),
        v_br,
        null_dim: basis.ncols(),
    })
}

/// `||R_est - R_truth||_F^2 / ||R_truth||_F^2`.
pub fn nmse(r_est: &CMat, r_truth: &CMat) -> Result<f64> {
    if r_est.shape() != r_truth.shape() {
        return Err(JcmError::DimensionMismatch(format!(
            "estimate {:?} vs truth {:?}",
            r_est.shape(),
            r_truth.shape()
        )));
    }
    let denom = frob_sq(r_truth);
    if denom == 0.0 {
        return Err(JcmError::ZeroTruth);
    }
    Ok(frob_sq(&(r_est - r_truth)) / denom)
}

/// Eavesdropper rate subtracted from Bob's rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EavesdropperModel {
    /// Rate-only mode: the secrecy rate equals Bob's rate.
    None,
    /// Maximal-ratio combining at Mallory over the Alice-Mallory channel,
    /// with Alice's artificial noise received in full.
    #[default]
    Mrc,
}

/// Bob's achievable rate with receive beamformer `v_br`.
pub fn bob_rate(channels: &ChannelSet, tx: &TransmitSide, v_br: &CVec, truth: &JcmTruth, config: &ScenarioConfig) -> f64 {
    let signal = config.beta * config.p_a * v_br.dotc(&(&channels.alice_equiv * &tx.beamformer)).norm_sqr();
    let interference = v_br.dotc(&(&truth.r_i * v_br)).re + truth.sigma_b2 * v_br.norm_squared();
    rate(signal, interference)
}

/// Mallory's rate under maximal-ratio combining.
pub fn eavesdropper_rate(channels: &ChannelSet, tx: &TransmitSide, truth: &JcmTruth, config: &ScenarioConfig) -> f64 {
    let h = &channels.alice_mallory_equiv;
    let g = h * &tx.beamformer;
    let gain = g.norm_squared();
    if gain == 0.0 {
        return 0.0;
    }
    let w = &g / c(gain.sqrt(), 0.0);
    let signal = config.beta * config.p_a * gain;
    let an = h * &tx.an_projection;
    let an_power = (1.0 - config.beta) * config.p_a * (an.adjoint() * &w).norm_squared();
    rate(signal, an_power + truth.sigma_b2)
}

fn rate(signal: f64, interference: f64) -> f64 {
    if interference <= 0.0 {
        return if signal > 0.0 { f64::INFINITY } else { 0.0 };
    }
    (1.0 + signal / interference).log2()
}

/// `max(0, R_B - R_E)` in bits/s/Hz.
pub fn secrecy_rate(
    channels: &ChannelSet,
    tx: &TransmitSide,
    v_br: &CVec,
    truth: &JcmTruth,
    config: &ScenarioConfig,
    eav: EavesdropperModel,
) -> f64 {
    let r_b = bob_rate(channels, tx, v_br, truth, config);
    match eav {
        EavesdropperModel::None => r_b,
        EavesdropperModel::Mrc => (r_b - eavesdropper_rate(channels, tx, truth, config)).max(0.0),
    }
}

/// Which diagonal entries of the inverse Fisher matrix are summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CrlbSummation {
    /// All `N_B^2` real coordinates.
    #[default]
    All,
    /// Only the `N_B` diagonal coordinates.
    Diagonal,
    /// All coordinates weighted as they enter the squared Frobenius norm
    /// (off-diagonal parts count twice). Invariant under unitary change of
    /// basis and directly comparable with NMSE.
    Frobenius,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrlbResult {
    pub value: f64,
    /// The Fisher matrix was singular and a pseudo-inverse was used.
    pub singular: bool,
}

/// Real coordinates of a Hermitian matrix: the diagonal, then the real and
/// imaginary parts of the strict upper triangle. Each coordinate lists the
/// `(row, col, coefficient)` entries of its derivative matrix.
fn hermitian_coordinates(n: usize) -> Vec<Vec<(usize, usize, num_complex::Complex64)>> {
    let mut coords: Vec<Vec<_>> = (0..n).map(|p| vec![(p, p, c(1.0, 0.0))]).collect();
    for p in 0..n {
        for q in p + 1..n {
            coords.push(vec![(p, q, c(1.0, 0.0)), (q, p, c(1.0, 0.0))]);
        }
    }
    for p in 0..n {
        for q in p + 1..n {
            coords.push(vec![(p, q, c(0.0, 1.0)), (q, p, c(0.0, -1.0))]);
        }
    }
    coords
}

/// Fisher information of the unstructured covariance `C = R_i + sigma^2 I`
/// from `k` zero-mean circular Gaussian snapshots, in real coordinates.
pub fn fisher_information(c_mat: &CMat, k: usize) -> Result<DMatrix<f64>> {
    let n = c_mat.nrows();
    let w = c_mat.clone().try_inverse().ok_or_else(|| {
        JcmError::InvalidConfig("received covariance is singular; Fisher information undefined".into())
    })?;
    let coords = hermitian_coordinates(n);
    let p = coords.len();
    let mut fim = DMatrix::zeros(p, p);
    for (i, di) in coords.iter().enumerate() {
        for (j, dj) in coords.iter().enumerate().skip(i) {
            // tr(W E_ab W E_cd) = W_da W_bc
            let mut acc = c(0.0, 0.0);
            for &(a, b, x) in di {
                for &(cc, d, y) in dj {
                    acc += x * y * w[(d, a)] * w[(b, cc)];
                }
            }
            let v = k as f64 * acc.re;
            fim[(i, j)] = v;
            fim[(j, i)] = v;
        }
    }
    Ok(fim)
}

/// Normalized CRLB sum: `tr_S(I^{-1}) / ||R_i||_F^2`.
pub fn crlb_sum(truth: &JcmTruth, k: usize, summation: CrlbSummation) -> Result<CrlbResult> {
    if k == 0 {
        return Err(JcmError::EmptyBatch);
    }
    let denom = frob_sq(&truth.r_i);
    if denom == 0.0 {
        return Err(JcmError::ZeroTruth);
    }
    let n = truth.num_rx();
    let fim = fisher_information(&truth.received_covariance(), k)?;
    let (inv, singular) = match fim.clone().cholesky() {
        Some(ch) => (ch.inverse(), false),
        None => {
            let eps = 1e-12 * fim.amax();
            let pinv = fim
                .pseudo_inverse(eps)
                .map_err(|e| JcmError::InvalidConfig(e.to_string()))?;
            (pinv, true)
        }
    };
    let total: f64 = match summation {
        CrlbSummation::All => inv.diagonal().sum(),
        CrlbSummation::Diagonal => (0..n).map(|i| inv[(i, i)]).sum(),
        CrlbSummation::Frobenius => (0..inv.nrows()).map(|i| if i < n { inv[(i, i)] } else { 2.0 * inv[(i, i)] }).sum(),
    };
    Ok(CrlbResult { value: total / denom, singular })
}

/// Per-estimate evaluation summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub nmse: f64,
    pub sr_bits: f64,
    pub crlb_sum: Option<f64>,
    pub runtime: f64,
    pub iterations: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_gaussian_mat, complex_gaussian_vec, hermitize, outer};
    use crate::scenario::build_channels;
    use crate::signal::{calibrated_truth, make_transmit_side};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMat {
        complex_gaussian_mat(rng, n, n, 1.0).qr().q()
    }

    fn low_rank(rng: &mut ChaCha8Rng, n: usize, r: usize) -> CMat {
        let a = complex_gaussian_mat(rng, n, r, 1.0);
        &a * a.adjoint()
    }

    #[test]
    fn zero_covariance_gives_matched_filter() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = complex_gaussian_mat(&mut rng, 4, 3, 1.0);
        let v = complex_gaussian_vec(&mut rng, 3, 1.0);
        let sol = nsp_max_wfrp(&CMat::zeros(4, 4), &h, &v, NullSpaceMode::default()).unwrap();
        let w = &h * &v;
        let mf = &w / c(w.norm(), 0.0);
        assert!((sol.v_br - mf).norm() < 1e-12);
        assert_eq!(sol.null_dim, 4);
    }

    #[test]
    fn hand_projection_onto_e2() {
        let mut r = CMat::zeros(2, 2);
        r[(0, 0)] = c(1.0, 0.0);
        let h = CMat::identity(2, 2);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = CVec::from_vec(vec![c(s, 0.0), c(s, 0.0)]);
        let sol = nsp_max_wfrp(&r, &h, &v, NullSpaceMode::default()).unwrap();
        assert!(sol.v_br[0].norm() < 1e-12);
        assert!((sol.v_br[1].norm() - 1.0).abs() < 1e-12);
        assert!((sol.achieved_signal_power - 0.5).abs() < 1e-12);
    }

    #[test]
    fn full_rank_has_no_null_space() {
        let h = CMat::identity(3, 3);
        let v = CVec::from_element(3, c(1.0, 0.0));
        let err = nsp_max_wfrp(&CMat::identity(3, 3), &h, &v, NullSpaceMode::default()).unwrap_err();
        assert_eq!(err, JcmError::NoNullSpace);
        assert!(err.to_string().contains("jamming occupies full space"));
    }

    #[test]
    fn orthogonal_signal_is_reported() {
        let mut r = CMat::zeros(2, 2);
        r[(0, 0)] = c(1.0, 0.0);
        let h = CMat::identity(2, 2);
        let v = CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(nsp_max_wfrp(&r, &h, &v, NullSpaceMode::default()).unwrap_err(), JcmError::SignalOrthogonal);
    }

    #[test]
    fn fixed_rank_mode_drops_dominant_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = low_rank(&mut rng, 6, 4) + CMat::identity(6, 6) * c(1e-3, 0.0);
        let h = complex_gaussian_mat(&mut rng, 6, 2, 1.0);
        let v = complex_gaussian_vec(&mut rng, 2, 1.0);
        assert_eq!(nsp_max_wfrp(&r, &h, &v, NullSpaceMode::Tolerance(1e-6)).unwrap_err(), JcmError::NoNullSpace);
        let sol = nsp_max_wfrp(&r, &h, &v, NullSpaceMode::FixedRank(4)).unwrap();
        assert_eq!(sol.null_dim, 2);
        assert!((sol.v_br.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn true_jcm_is_nulled_exactly() {
        let config = ScenarioConfig::default();
        let ch = build_channels(&config, config.seed).unwrap();
        let tx = make_transmit_side(&ch, &config).unwrap();
        let (truth, _) = calibrated_truth(&ch, &tx, &config).unwrap();
        let sol = nsp_max_wfrp(&truth.r_i, &ch.alice_equiv, &tx.beamformer, NullSpaceMode::FixedRank(2)).unwrap();
        assert!(sol.residual_jam_power <= 1e-10 * truth.r_i.trace().re);
        assert!((sol.v_br.norm() - 1.0).abs() < 1e-12);
        // The tolerance mode only guarantees nulling down to its threshold.
        let sol = nsp_max_wfrp(&truth.r_i, &ch.alice_equiv, &tx.beamformer, NullSpaceMode::default()).unwrap();
        let lmax = HermitianEigen::new(&truth.r_i).max_value();
        assert!((sol.v_br.adjoint() * &truth.r_i).norm() <= 1e-6 * lmax);
    }

    #[test]
    fn projection_beats_random_null_space_vectors() {
        for seed in 0..4u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let n = 3 + (seed as usize % 6);
            let rank = 1 + seed as usize % (n - 1);
            let r = low_rank(&mut rng, n, rank);
            let h = complex_gaussian_mat(&mut rng, n, 3, 1.0);
            let v = complex_gaussian_vec(&mut rng, 3, 1.0);
            let sol = nsp_max_wfrp(&r, &h, &v, NullSpaceMode::default()).unwrap();
            let w = &h * &v;
            let basis = null_space_basis(&r, NullSpaceMode::default());
            let mut best: f64 = 0.0;
            for _ in 0..100_000 {
                let z = complex_gaussian_vec(&mut rng, basis.ncols(), 1.0);
                let u = &basis * &z;
                let u = &u / c(u.norm(), 0.0);
                best = best.max(u.dotc(&w).norm_sqr());
            }
            assert!(best <= sol.achieved_signal_power * (1.0 + 1e-6));
            assert!(best >= sol.achieved_signal_power * 0.5);
        }
    }

    #[test]
    fn nmse_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = low_rank(&mut rng, 4, 2);
        assert_eq!(nmse(&r, &r).unwrap(), 0.0);
        assert!((nmse(&(&r * c(2.0, 0.0)), &r).unwrap() - 1.0).abs() < 1e-12);
        assert!((nmse(&CMat::zeros(4, 4), &r).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(nmse(&r, &CMat::zeros(4, 4)).unwrap_err(), JcmError::ZeroTruth);
    }

    #[test]
    fn rate_only_unit_sinr_is_one_bit() {
        assert!((rate(2.0, 2.0) - 1.0).abs() < 1e-15);
    }

    fn scalar_truth(r: f64, sigma2: f64) -> JcmTruth {
        JcmTruth {
            r_i: CMat::from_element(1, 1, c(r, 0.0)),
            f: CMat::from_element(1, 1, c(r.sqrt(), 0.0)),
            sigma_b2: sigma2,
        }
    }

    #[test]
    fn scalar_crlb_matches_hand_value() {
        let (r, s2, k) = (2.0, 0.5, 7);
        let got = crlb_sum(&scalar_truth(r, s2), k, CrlbSummation::All).unwrap();
        let cc = r + s2;
        assert!((got.value - cc * cc / (k as f64 * r * r)).abs() < 1e-14);
        assert!(!got.singular);
    }

    #[test]
    fn crlb_matches_closed_form_variances() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 4;
        let f = complex_gaussian_mat(&mut rng, n, 2, 1.0);
        let truth = JcmTruth { r_i: &f * f.adjoint(), f, sigma_b2: 0.3 };
        let cm = truth.received_covariance();
        let k = 5.0;
        let diag: f64 = (0..n).map(|p| cm[(p, p)].re.powi(2) / k).sum();
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                // Re and Im variances add up to C_pp C_qq / K.
                off += cm[(p, p)].re * cm[(q, q)].re / k;
            }
        }
        let norm = frob_sq(&truth.r_i);
        let all = crlb_sum(&truth, 5, CrlbSummation::All).unwrap().value;
        let dg = crlb_sum(&truth, 5, CrlbSummation::Diagonal).unwrap().value;
        assert!((all - (diag + off) / norm).abs() < 1e-10 * all);
        assert!((dg - diag / norm).abs() < 1e-10 * dg);
    }

    #[test]
    fn crlb_halves_when_k_doubles() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = complex_gaussian_mat(&mut rng, 5, 2, 1.0);
        let truth = JcmTruth { r_i: &f * f.adjoint(), f, sigma_b2: 0.1 };
        let a = crlb_sum(&truth, 5, CrlbSummation::All).unwrap().value;
        let b = crlb_sum(&truth, 10, CrlbSummation::All).unwrap().value;
        assert!((a - 2.0 * b).abs() <= 1e-12 * a);
    }

    #[test]
    fn crlb_is_unitarily_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f = complex_gaussian_mat(&mut rng, 4, 2, 1.0);
        let u = random_unitary(&mut rng, 4);
        let t1 = JcmTruth { r_i: &f * f.adjoint(), f: f.clone(), sigma_b2: 0.2 };
        let uf = &u * &f;
        let t2 = JcmTruth { r_i: &uf * uf.adjoint(), f: uf, sigma_b2: 0.2 };
        let a = crlb_sum(&t1, 5, CrlbSummation::Frobenius).unwrap().value;
        let b = crlb_sum(&t2, 5, CrlbSummation::Frobenius).unwrap().value;
        assert!((a - b).abs() <= 1e-8 * a);
        // (tr C)^2 / K: the expected squared error of the sample covariance.
        let tr = t1.received_covariance().trace().re;
        assert!((a - tr * tr / (5.0 * frob_sq(&t1.r_i))).abs() <= 1e-10 * a);
    }

    #[test]
    fn equal_weight_sum_depends_on_basis() {
        // C = diag(2.5, 0.5) and its 45-degree rotation [[1.5, 1], [1, 1.5]]:
        // (6.25 + 0.25 + 1.25) / 4 versus (4.5 + 1.625 + 0.625) / 4.
        let f = CMat::from_row_slice(2, 1, &[c(2f64.sqrt(), 0.0), c(0.0, 0.0)]);
        let t1 = JcmTruth { r_i: &f * f.adjoint(), f: f.clone(), sigma_b2: 0.5 };
        let u = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]) * c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let uf = &u * &f;
        let t2 = JcmTruth { r_i: &uf * uf.adjoint(), f: uf, sigma_b2: 0.5 };
        let a = crlb_sum(&t1, 1, CrlbSummation::All).unwrap().value;
        let b = crlb_sum(&t2, 1, CrlbSummation::All).unwrap().value;
        assert!((a - 1.9375).abs() < 1e-12 && (b - 1.6875).abs() < 1e-12, "{a} {b}");
    }

    #[test]
    fn secrecy_rate_decreases_with_residual_jamming() {
        let config = ScenarioConfig::default();
        let ch = build_channels(&config, config.seed).unwrap();
        let tx = make_transmit_side(&ch, &config).unwrap();
        let (truth, _) = calibrated_truth(&ch, &tx, &config).unwrap();
        let sol = nsp_max_wfrp(&truth.r_i, &ch.alice_equiv, &tx.beamformer, NullSpaceMode::default()).unwrap();
        let mut last = f64::INFINITY;
        for scale in [0.0, 0.1, 1.0, 10.0, 100.0] {
            let extra = outer(&sol.v_br, &sol.v_br) * c(scale * truth.sigma_b2, 0.0);
            let t = JcmTruth { r_i: &truth.r_i + extra, ..truth.clone() };
            let sr = secrecy_rate(&ch, &tx, &sol.v_br, &t, &config, EavesdropperModel::None);
            assert!(sr <= last);
            last = sr;
        }
    }

    proptest! {
        #[test]
        fn nmse_unitary_invariance(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = hermitize(&complex_gaussian_mat(&mut rng, 4, 4, 1.0));
            let b = low_rank(&mut rng, 4, 2);
            let u = random_unitary(&mut rng, 4);
            let x = nmse(&a, &b).unwrap();
            let y = nmse(&(&u * &a * u.adjoint()), &(&u * &b * u.adjoint())).unwrap();
            prop_assert!((x - y).abs() <= 1e-10 * (1.0 + x));
        }

        #[test]
        fn beamformer_is_unit_norm_and_nulls(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = low_rank(&mut rng, 6, 2);
            let h = complex_gaussian_mat(&mut rng, 6, 2, 1.0);
            let v = complex_gaussian_vec(&mut rng, 2, 1.0);
            let sol = nsp_max_wfrp(&r, &h, &v, NullSpaceMode::default()).unwrap();
            prop_assert!((sol.v_br.norm() - 1.0).abs() < 1e-12);
            let lmax = HermitianEigen::new(&r).max_value();
            prop_assert!((sol.v_br.adjoint() * &r).norm() <= 1e-6 * lmax);
        }
    }
}
