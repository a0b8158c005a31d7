use super::{JcmEstimate, Method};
use crate::error::{JcmError, Result};
use crate::linalg::{CMat, HermitianEigen};

/// Rank-constrained eigen-decomposition estimate.
///
/// The noise variance is the mean of the `N_B - rank` smallest eigenvalues
/// of the sample covariance; the JCM keeps the leading `rank` eigenpairs with
/// the noise floor removed. Eigenvalues that fall below the floor are
/// clamped at zero so the estimate stays positive semidefinite.
pub fn evd_estimate(r_scm: &CMat, rank: usize) -> Result<JcmEstimate> {
    let n = r_scm.nrows();
    if n <= rank {
        return Err(JcmError::InsufficientDimension { dim: n, rank });
    }
    let eig = HermitianEigen::new(r_scm);
    let sigma2 = eig.values[rank..].iter().sum::<f64>() / (n - rank) as f64;
    let r_hat = eig.reconstruct(|i, l| if i < rank { (l - sigma2).max(0.0) } else { 0.0 });
    Ok(JcmEstimate::direct(r_hat, Method::Evd, Some(sigma2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, complex_gaussian_mat, frob, CVec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(v: &[f64]) -> CMat {
        CMat::from_diagonal(&CVec::from_iterator(v.len(), v.iter().map(|&x| c(x, 0.0))))
    }

    #[test]
    fn exact_rank_two_plus_unit_noise() {
        let est = evd_estimate(&diag(&[5.0, 3.0, 1.0, 1.0]), 2).unwrap();
        assert!((est.sigma_hat2.unwrap() - 1.0).abs() < 1e-14);
        assert!(frob(&(est.r_hat - diag(&[4.0, 2.0, 0.0, 0.0]))) < 1e-13);
    }

    #[test]
    fn pure_noise_gives_zero() {
        let est = evd_estimate(&CMat::identity(4, 4), 2).unwrap();
        assert!((est.sigma_hat2.unwrap() - 1.0).abs() < 1e-14);
        assert!(frob(&est.r_hat) < 1e-14);
    }

    #[test]
    fn analytic_covariance_recovers_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let f = complex_gaussian_mat(&mut rng, 6, 2, 1.0);
        let r = &f * f.adjoint();
        let sigma2 = 0.37;
        let est = evd_estimate(&(&r + CMat::identity(6, 6) * c(sigma2, 0.0)), 2).unwrap();
        assert!((est.sigma_hat2.unwrap() - sigma2).abs() < 1e-10);
        assert!(frob(&(est.r_hat - &r)) < 1e-10);
    }

    #[test]
    fn clamps_below_floor() {
        // Second eigenvalue sits below the noise mean and is dropped.
        let est = evd_estimate(&diag(&[5.0, 0.5, 1.0, 1.5]), 2).unwrap();
        let eig = HermitianEigen::new(&est.r_hat);
        assert!(eig.values.iter().all(|&l| l >= -1e-12));
    }

    #[test]
    fn rejects_insufficient_dimension() {
        assert!(matches!(
            evd_estimate(&CMat::identity(2, 2), 2),
            Err(JcmError::InsufficientDimension { dim: 2, rank: 2 })
        ));
    }

    #[test]
    fn unitary_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = complex_gaussian_mat(&mut rng, 5, 5, 1.0);
        let r = &a * a.adjoint();
        let u = complex_gaussian_mat(&mut rng, 5, 5, 1.0).qr().q();
        let lhs = evd_estimate(&(&u * &r * u.adjoint()), 2).unwrap().r_hat;
        let rhs = &u * evd_estimate(&r, 2).unwrap().r_hat * u.adjoint();
        assert!(frob(&(lhs - rhs)) < 1e-10 * frob(&r));
    }
}
