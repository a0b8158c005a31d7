//! Parametric JCM estimation by blockwise gradient descent.
//!
//! The JCM is modelled as `R = A A^H` with `A = G alpha beta^H + omega nu^H`,
//! where `G = H_IB^H Theta` is the known reflected IRS-to-Bob response. The
//! four vectors are fitted to `S` by minimizing `||R - S||_F^2`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::line_search::Backtracking;
use super::{below_rounding, JcmEstimate, Method, Stagnation, EXACT_FIT};
use crate::error::{JcmError, Result};
use crate::linalg::{c, complex_gaussian_vec, frob, frob_sq, hermitize, vec_norm_sq, CMat, CVec};
use crate::scenario::ReflectionGeometry;

/// Factor vectors of the parametric model. `beta` and `nu` share the
/// surrogate jammer dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PemGdState {
    pub alpha: CVec,
    pub beta: CVec,
    pub omega: CVec,
    pub nu: CVec,
}

impl PemGdState {
    /// i.i.d. unit-variance complex Gaussian initialization.
    pub fn random(seed: u64, num_elements: usize, num_rx: usize, streams: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alpha = complex_gaussian_vec(&mut rng, num_elements, 1.0);
        let beta = complex_gaussian_vec(&mut rng, streams, 1.0);
        let omega = complex_gaussian_vec(&mut rng, num_rx, 1.0);
        let nu = complex_gaussian_vec(&mut rng, streams, 1.0);
        Self { alpha, beta, omega, nu }
    }

    /// `A = G alpha beta^H + omega nu^H`.
    pub fn factor(&self, geom: &ReflectionGeometry) -> CMat {
        &geom.reflect * &self.alpha * self.beta.adjoint() + &self.omega * self.nu.adjoint()
    }

    pub fn streams(&self) -> usize {
        self.beta.len()
    }

    fn scaled(&self, k: f64) -> Self {
        let k = c(k, 0.0);
        Self {
            alpha: &self.alpha * k,
            beta: &self.beta * k,
            omega: &self.omega * k,
            nu: &self.nu * k,
        }
    }
}

/// `R(alpha, beta, omega, nu) = A A^H`.
pub fn pem_gd_model(state: &PemGdState, geom: &ReflectionGeometry) -> CMat {
    let a = state.factor(geom);
    &a * a.adjoint()
}

pub fn pem_gd_objective(state: &PemGdState, s: &CMat, geom: &ReflectionGeometry) -> f64 {
    frob_sq(&(pem_gd_model(state, geom) - s))
}

/// Gradients with respect to the conjugated factor vectors.
///
/// These are half of the Wirtinger derivatives `df/dx*` (a quarter of the
/// real gradient); only their direction and relative size matter to the
/// descent.
#[derive(Debug, Clone, PartialEq)]
pub struct PemGdGradients {
    pub alpha: CVec,
    pub beta: CVec,
    pub omega: CVec,
    pub nu: CVec,
}

pub fn pem_gd_gradients(state: &PemGdState, s: &CMat, geom: &ReflectionGeometry) -> PemGdGradients {
    let g = &geom.reflect;
    let a = state.factor(geom);
    let resid_h = (&a * a.adjoint() - s).adjoint();
    PemGdGradients {
        alpha: g.adjoint() * &resid_h * &a * &state.beta,
        beta: a.adjoint() * &resid_h * g * &state.alpha,
        omega: &resid_h * &a * &state.nu,
        nu: a.adjoint() * &resid_h * &state.omega,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PemGdOptions {
    pub max_iters: usize,
    /// Relative objective decrease regarded as stagnation.
    pub tol: f64,
    /// Consecutive stagnant iterations before stopping.
    pub patience: usize,
    pub seed: u64,
    /// Surrogate jammer dimension; defaults to the receive dimension.
    pub streams: Option<usize>,
    pub line_search: Backtracking,
}

impl Default for PemGdOptions {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            tol: 1e-8,
            patience: 5,
            seed: 0,
            streams: None,
            line_search: Backtracking::default(),
        }
    }
}

/// Gram scalars of the `(beta, nu)` pair: `beta^H beta`, `beta^H nu`, `nu^H nu`.
#[derive(Debug, Clone, Copy)]
struct Grams {
    bb: f64,
    bn: Complex64,
    nn: f64,
}

impl Grams {
    fn of(beta: &CVec, nu: &CVec) -> Self {
        Self {
            bb: vec_norm_sq(beta),
            bn: beta.dotc(nu),
            nn: vec_norm_sq(nu),
        }
    }
}

/// `R = bb p p^H + bn p w^H + bn* w p^H + nn w w^H` with `p = G alpha`.
fn model_from(p: &CVec, w: &CVec, gr: Grams) -> CMat {
    let n = p.len();
    CMat::from_fn(n, n, |i, j| {
        let (pj, wj) = (p[j].conj(), w[j].conj());
        p[i] * pj * gr.bb + p[i] * wj * gr.bn + w[i] * pj * gr.bn.conj() + w[i] * wj * gr.nn
    })
}

fn misfit(p: &CVec, w: &CVec, gr: Grams, s: &CMat) -> f64 {
    let n = p.len();
    let mut acc = 0.0;
    for j in 0..n {
        let (pj, wj) = (p[j].conj(), w[j].conj());
        for i in 0..n {
            let r = p[i] * pj * gr.bb + p[i] * wj * gr.bn + w[i] * pj * gr.bn.conj() + w[i] * wj * gr.nn;
            acc += (r - s[(i, j)]).norm_sqr();
        }
    }
    acc
}

fn check_dims(s: &CMat, geom: &ReflectionGeometry) -> Result<()> {
    let n = geom.num_rx();
    if s.nrows() != n || s.ncols() != n || geom.reflect.nrows() != n {
        return Err(JcmError::DimensionMismatch(format!(
            "S is {}x{}, geometry expects {n}x{n}",
            s.nrows(),
            s.ncols()
        )));
    }
    Ok(())
}

/// Fit the parametric model to `S` from a seeded random start.
pub fn pem_gd(s: &CMat, geom: &ReflectionGeometry, opts: &PemGdOptions) -> Result<JcmEstimate> {
    check_dims(s, geom)?;
    let streams = opts.streams.unwrap_or(geom.num_rx()).max(1);
    // The random start is drawn for the normalized problem ||S||_F = 1.
    let init = PemGdState::random(opts.seed, geom.num_elements(), geom.num_rx(), streams).scaled(frob(s).powf(0.25));
    pem_gd_from(s, geom, init, opts).map(|(est, _)| est)
}

/// Fit starting from `init`, expressed in the units of `S`. Returns the
/// estimate and the final state (also in the units of `S`).
pub fn pem_gd_from(
    s: &CMat,
    geom: &ReflectionGeometry,
    init: PemGdState,
    opts: &PemGdOptions,
) -> Result<(JcmEstimate, PemGdState)> {
    check_dims(s, geom)?;
    let s = hermitize(s);
    let scale = frob(&s);
    if scale == 0.0 {
        let n = s.nrows();
        let est = JcmEstimate {
            r_hat: CMat::zeros(n, n),
            method: Method::PemGd,
            sigma_hat2: None,
            iterations: 0,
            objective_trace: vec![0.0],
            converged: true,
            fallback_steps: 0,
        };
        return Ok((est, init.scaled(0.0)));
    }
    // Work on S / ||S||_F so unit initial steps are well matched; the
    // factors scale back by ||S||_F^{1/4}.
    let s_n = &s / c(scale, 0.0);
    let mut st = init.scaled(scale.powf(-0.25));
    let ls = &opts.line_search;
    let g = &geom.reflect;

    let mut p = g * &st.alpha;
    let mut gr = Grams::of(&st.beta, &st.nu);
    let mut f = misfit(&p, &st.omega, gr, &s_n);
    let mut trace = vec![f];
    let mut stop = Stagnation::new(opts.tol, opts.patience);
    let mut converged = f <= EXACT_FIT;
    let mut iterations = 0;

    while !converged && iterations < opts.max_iters {
        let f_start = f;
        let mut stalls = 0;
        let mut stationary = 0;

        // alpha
        {
            let resid = model_from(&p, &st.omega, gr) - &s_n;
            let grad = g.adjoint() * (&resid * &p * c(gr.bb, 0.0) + &resid * &st.omega * gr.bn.conj());
            let q = g * &grad;
            let out = ls.search(f, vec_norm_sq(&grad), |t| misfit(&(&p - &q * c(t, 0.0)), &st.omega, gr, &s_n));
            if out.stalled {
                stalls += 1;
                stationary += usize::from(below_rounding(vec_norm_sq(&grad), f));
            } else {
                st.alpha -= &grad * c(out.step, 0.0);
                p -= &q * c(out.step, 0.0);
                f = out.value;
            }
        }
        // beta
        {
            let resid = model_from(&p, &st.omega, gr) - &s_n;
            let rp = &resid * &p;
            let grad = &st.beta * p.dotc(&rp) + &st.nu * st.omega.dotc(&rp);
            let out = ls.search(f, vec_norm_sq(&grad), |t| {
                let b = &st.beta - &grad * c(t, 0.0);
                misfit(&p, &st.omega, Grams::of(&b, &st.nu), &s_n)
            });
            if out.stalled {
                stalls += 1;
                stationary += usize::from(below_rounding(vec_norm_sq(&grad), f));
            } else {
                st.beta -= &grad * c(out.step, 0.0);
                gr = Grams::of(&st.beta, &st.nu);
                f = out.value;
            }
        }
        // omega
        {
            let resid = model_from(&p, &st.omega, gr) - &s_n;
            let grad = &resid * &p * gr.bn + &resid * &st.omega * c(gr.nn, 0.0);
            let out = ls.search(f, vec_norm_sq(&grad), |t| misfit(&p, &(&st.omega - &grad * c(t, 0.0)), gr, &s_n));
            if out.stalled {
                stalls += 1;
                stationary += usize::from(below_rounding(vec_norm_sq(&grad), f));
            } else {
                st.omega -= &grad * c(out.step, 0.0);
                f = out.value;
            }
        }
        // nu
        {
            let resid = model_from(&p, &st.omega, gr) - &s_n;
            let rw = &resid * &st.omega;
            let grad = &st.beta * p.dotc(&rw) + &st.nu * st.omega.dotc(&rw);
            let out = ls.search(f, vec_norm_sq(&grad), |t| {
                let v = &st.nu - &grad * c(t, 0.0);
                misfit(&p, &st.omega, Grams::of(&st.beta, &v), &s_n)
            });
            if out.stalled {
                stalls += 1;
                stationary += usize::from(below_rounding(vec_norm_sq(&grad), f));
            } else {
                st.nu -= &grad * c(out.step, 0.0);
                gr = Grams::of(&st.beta, &st.nu);
                f = out.value;
            }
        }

        iterations += 1;
        trace.push(f);
        if stalls == 4 {
            // Every block is stuck; that is convergence only when no
            // representable decrease was available in any of them.
            converged = stationary == 4;
            break;
        }
        if f <= EXACT_FIT || stop.update(f_start, f) {
            converged = true;
        }
    }

    let r_hat = hermitize(&model_from(&p, &st.omega, gr)) * c(scale, 0.0);
    let scale2 = scale * scale;
    let est = JcmEstimate {
        r_hat,
        method: Method::PemGd,
        sigma_hat2: None,
        iterations,
        objective_trace: trace.into_iter().map(|v| v * scale2).collect(),
        converged,
        fallback_steps: 0,
    };
    Ok((est, st.scaled(scale.powf(0.25))))
}
