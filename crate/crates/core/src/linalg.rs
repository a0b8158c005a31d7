//! Small complex linear-algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Complex exponential `e^{j phase}`.
#[inline]
pub fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

/// Squared Frobenius norm.
pub fn frob_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn frob(m: &CMat) -> f64 {
    frob_sq(m).sqrt()
}

pub fn vec_norm_sq(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `x y^H`.
pub fn outer(x: &CVec, y: &CVec) -> CMat {
    x * y.adjoint()
}

/// `(A + A^H) / 2`.
pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Largest deviation from Hermitian symmetry, `max |A - A^H|`.
pub fn hermitian_defect(m: &CMat) -> f64 {
    let d = m - m.adjoint();
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order. Column `i` of `vectors` pairs with `values[i]`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermitianEigen {
    pub fn new(m: &CMat) -> Self {
        let n = m.nrows();
        let eig = SymmetricEigen::new(hermitize(m));
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = CMat::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Self { values, vectors }
    }

    pub fn max_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// `sum_i values[i] u_i u_i^H` over the selected indices.
    pub fn reconstruct<F: Fn(usize, f64) -> f64>(&self, weight: F) -> CMat {
        let n = self.vectors.nrows();
        let mut out = CMat::zeros(n, n);
        for (i, &lambda) in self.values.iter().enumerate() {
            let w = weight(i, lambda);
            if w != 0.0 {
                let u = self.vectors.column(i);
                out += (u * u.adjoint()) * c(w, 0.0);
            }
        }
        out
    }
}

/// Draw a vector of i.i.d. `CN(0, variance)` entries.
pub fn complex_gaussian_vec<R: Rng + ?Sized>(rng: &mut R, len: usize, variance: f64) -> CVec {
    let s = (variance / 2.0).sqrt();
    CVec::from_fn(len, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(s * re, s * im)
    })
}

pub fn complex_gaussian_mat<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    variance: f64,
) -> CMat {
    let s = (variance / 2.0).sqrt();
    // Column-major fill keeps the draw order independent of nalgebra internals.
    let mut m = CMat::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            m[(i, j)] = c(s * re, s * im);
        }
    }
    m
}

/// Stable 64-bit mixer (splitmix64 finalizer) for deriving independent
/// seed streams.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derive a child seed from a parent seed and a stream tag.
pub fn derive_seed(parent: u64, tag: u64) -> u64 {
    mix64(mix64(parent) ^ mix64(tag.wrapping_mul(0xD6E8_FEB8_6659_FD93)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eigen_sorted_descending_and_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = complex_gaussian_mat(&mut rng, 5, 5, 1.0);
        let h = &a * a.adjoint();
        let eig = HermitianEigen::new(&h);
        for w in eig.values.windows(2) {
            assert!(w[0] >= w[1]);
        }
        let back = eig.reconstruct(|_, l| l);
        assert!(frob(&(back - &h)) < 1e-10 * frob(&h));
    }

    #[test]
    fn derived_seeds_differ_by_tag() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_eq!(derive_seed(7, 9), derive_seed(7, 9));
    }

    #[test]
    fn complex_gaussian_has_requested_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let v = complex_gaussian_vec(&mut rng, 200_000, 2.0);
        let p = vec_norm_sq(&v) / 200_000.0;
        assert!((p - 2.0).abs() < 0.03, "{p}");
    }
}
