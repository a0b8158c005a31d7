use crate::linalg::{c, CVec};

/// Central-difference gradient of a real function of a complex vector.
///
/// Each coordinate is perturbed along its real and imaginary parts
/// separately and the result is packed as `df/dRe + j df/dIm`, which is twice
/// the Wirtinger derivative `df/dx*`. The analytic gradients of the PEM
/// estimators are half of `df/dx*`, so they equal a quarter of this value.
pub fn finite_difference_gradient<F: Fn(&CVec) -> f64>(f: F, x: &CVec, step: f64) -> CVec {
    assert!(step > 0.0, "finite-difference step must be positive");
    let mut probe = x.clone();
    CVec::from_fn(x.len(), |i, _| {
        let orig = probe[i];
        let mut partial = |dir: num_complex::Complex64| {
            probe[i] = orig + dir * step;
            let up = f(&probe);
            probe[i] = orig - dir * step;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * step)
        };
        let d_re = partial(c(1.0, 0.0));
        let d_im = partial(c(0.0, 1.0));
        c(d_re, d_im)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_gaussian_vec, vec_norm_sq};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn squared_norm_gradient_is_twice_x() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = complex_gaussian_vec(&mut rng, 6, 1.0);
        let g = finite_difference_gradient(vec_norm_sq, &x, 1e-5);
        assert!((g - &x * c(2.0, 0.0)).norm() < 1e-8);
    }
}
