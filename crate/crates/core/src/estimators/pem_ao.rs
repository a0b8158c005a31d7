//! Reduced parametric JCM estimation by alternating optimization.
//!
//! The model is `R = c1 h h^H + c2* h w^H + c2 w h^H + w w^H` with
//! `h = h(theta_IB^r)` and the feasibility constraint `c1 >= |c2|^2`, which
//! keeps `R` positive semidefinite. For fixed `w` the `(c1, c2)` subproblem
//! is a convex quadratic solved in closed form through its KKT conditions;
//! `w` is then refined by backtracking gradient descent.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::cubic::solve_cubic;
use super::line_search::Backtracking;
use super::{JcmEstimate, Method, Stagnation, EXACT_FIT};
use crate::error::{JcmError, Result};
use crate::linalg::{c, complex_gaussian_vec, frob, frob_sq, hermitize, vec_norm_sq, CMat, CVec};
use crate::scenario::ReflectionGeometry;

/// Inner products that fully describe the `(c1, c2)` subproblem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoScalars {
    /// `w^H h`
    pub a: Complex64,
    /// `w^H w`
    pub e: f64,
    /// `h^H S w`
    pub gamma: Complex64,
    /// `h^H S h`
    pub tau: f64,
}

impl AoScalars {
    pub fn compute(h: &CVec, omega: &CVec, s: &CMat) -> Self {
        let sw = s * omega;
        Self {
            a: omega.dotc(h),
            e: vec_norm_sq(omega),
            gamma: h.dotc(&sw),
            tau: h.dotc(&(s * h)).re,
        }
    }

    fn magnitude(&self) -> f64 {
        1.0f64
            .max(self.tau.abs())
            .max(self.e)
            .max(self.a.norm_sqr())
            .max(self.gamma.norm())
    }

    /// Coefficients of the multiplier cubic `v^3 + l1 v^2 + l2 v + l3`.
    pub fn cubic_coefficients(&self) -> (f64, f64, f64) {
        let aa = self.a.norm_sqr();
        let (e, tau) = (self.e, self.tau);
        let l1 = 4.0 * e + 2.0 * tau - 4.0 * aa;
        let l2 = 4.0 * aa * aa - 8.0 * aa * e - 8.0 * aa * tau + 4.0 * e * e + 8.0 * e * tau;
        let l3 = 8.0 * aa * aa * tau - 16.0 * aa * e * tau - 8.0 * aa * tau * tau
            + 16.0 * tau * (self.gamma * self.a).re
            + 8.0 * e * e * tau
            - 8.0 * self.gamma.norm_sqr();
        (l1, l2, l3)
    }
}

/// `||R(c1, c2, w) - S||_F^2` up to terms that do not depend on `(c1, c2)`.
pub fn subproblem_objective(c1: f64, c2: Complex64, sc: &AoScalars) -> f64 {
    let (a, e) = (sc.a, sc.e);
    let c2c = c2.conj();
    (c(c1 * c1, 0.0) + c2c * c2c * a * a * 2.0 + c2c * a * (4.0 * c1) + c(2.0 * c1 * a.norm_sqr(), 0.0)
        + c(2.0 * c2.norm_sqr() * e, 0.0)
        + c2c * a * (4.0 * e)
        - c(2.0 * c1 * sc.tau, 0.0)
        - c2 * sc.gamma * 4.0)
        .re
}

/// Solution of the `(c1, c2)` subproblem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CSolution {
    pub c1: f64,
    pub c2: Complex64,
    /// Lagrange multiplier of `c1 >= |c2|^2`.
    pub multiplier: f64,
    /// The closed form was singular and the numeric search was used.
    pub used_fallback: bool,
}

impl CSolution {
    pub fn objective(&self, sc: &AoScalars) -> f64 {
        subproblem_objective(self.c1, self.c2, sc)
    }
}

/// Stationary point for a given multiplier, or `None` when `m` vanishes.
fn kkt_point(sc: &AoScalars, v: f64) -> Option<(f64, Complex64)> {
    let aa = sc.a.norm_sqr();
    let m = aa - sc.e - v / 2.0;
    if m.abs() < 1e-12 * sc.magnitude() {
        return None;
    }
    let c2 = (sc.a * (sc.tau - m) - sc.gamma.conj()) / m;
    let c1 = sc.tau + v / 2.0 - aa - 2.0 * (c2.conj() * sc.a).re;
    // Rounding can leave an active constraint infinitesimally violated.
    Some((c1.max(c2.norm_sqr()), c2))
}

/// Minimize the subproblem subject to `c1 >= |c2|^2`.
pub fn solve_c_subproblem(sc: &AoScalars) -> CSolution {
    let (l1, l2, l3) = sc.cubic_coefficients();
    let multipliers: Vec<f64> = if l3 >= 0.0 {
        vec![0.0]
    } else {
        solve_cubic(l1, l2, l3).into_iter().filter(|&v| v > 0.0).collect()
    };
    let best = multipliers
        .iter()
        .filter_map(|&v| kkt_point(sc, v).map(|(c1, c2)| (v, c1, c2)))
        .map(|(v, c1, c2)| (subproblem_objective(c1, c2, sc), v, c1, c2))
        .min_by(|x, y| x.0.total_cmp(&y.0));
    match best {
        Some((_, multiplier, c1, c2)) => CSolution { c1, c2, multiplier, used_fallback: false },
        None => numeric_subproblem(sc),
    }
}

/// Numeric fallback for singular closed forms: coarse grid over
/// `(Re c2, Im c2, slack)` with `c1 = |c2|^2 + slack`, then a compass search.
fn numeric_subproblem(sc: &AoScalars) -> CSolution {
    if sc.e <= 1e-300 {
        // w = 0: only c1 matters.
        let c1 = sc.tau.max(0.0);
        return CSolution {
            c1,
            c2: c(0.0, 0.0),
            multiplier: (-2.0 * sc.tau).max(0.0),
            used_fallback: true,
        };
    }
    let mag = sc.magnitude();
    let f = |x: [f64; 3]| {
        let c2 = c(x[0], x[1]);
        subproblem_objective(c2.norm_sqr() + x[2].max(0.0), c2, sc)
    };
    let half = (4.0 * mag).sqrt();
    let n = 20;
    let mut best = ([0.0, 0.0, 0.0], f64::INFINITY);
    for i in 0..=n {
        for j in 0..=n {
            for k in 0..=n {
                let x = [
                    -half + 2.0 * half * i as f64 / n as f64,
                    -half + 2.0 * half * j as f64 / n as f64,
                    4.0 * mag * k as f64 / n as f64,
                ];
                let v = f(x);
                if v < best.1 {
                    best = (x, v);
                }
            }
        }
    }
    let (mut x, mut fx) = best;
    let mut step = half / n as f64;
    while step > 1e-13 * mag.sqrt() {
        let mut moved = false;
        for d in 0..3 {
            for sign in [1.0, -1.0] {
                let mut y = x;
                y[d] += sign * step;
                y[2] = y[2].max(0.0);
                let fy = f(y);
                if fy < fx {
                    x = y;
                    fx = fy;
                    moved = true;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    let c2 = c(x[0], x[1]);
    CSolution {
        c1: c2.norm_sqr() + x[2].max(0.0),
        c2,
        multiplier: 0.0,
        used_fallback: true,
    }
}

/// Variables of the reduced model plus the cached subproblem scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct PemAoState {
    pub c1: f64,
    pub c2: Complex64,
    pub omega: CVec,
    pub scalars: AoScalars,
    pub multiplier: f64,
}

impl PemAoState {
    pub fn new(c1: f64, c2: Complex64, omega: CVec, h: &CVec, s: &CMat) -> Self {
        let scalars = AoScalars::compute(h, &omega, s);
        Self { c1, c2, omega, scalars, multiplier: 0.0 }
    }

    pub fn is_feasible(&self) -> bool {
        self.c1 >= self.c2.norm_sqr()
    }
}

/// Closed-form `(c1, c2)` update for the current `w` of `state`.
pub fn pem_ao_c_subproblem(state: &PemAoState, h: &CVec, s: &CMat) -> CSolution {
    solve_c_subproblem(&AoScalars::compute(h, &state.omega, s))
}

/// `R(c1, c2, w) = c1 h h^H + c2* h w^H + c2 w h^H + w w^H`.
pub fn pem_ao_model(c1: f64, c2: Complex64, omega: &CVec, h: &CVec) -> CMat {
    let u = h * c2.conj() + omega;
    &u * u.adjoint() + h * h.adjoint() * c(c1 - c2.norm_sqr(), 0.0)
}

pub fn pem_ao_objective(c1: f64, c2: Complex64, omega: &CVec, h: &CVec, s: &CMat) -> f64 {
    frob_sq(&(pem_ao_model(c1, c2, omega, h) - s))
}

/// `(R - S)(c2* h + w)`: gradient with respect to `w*` in the same
/// convention as the blockwise GD gradients.
pub fn pem_ao_omega_gradient(c1: f64, c2: Complex64, omega: &CVec, h: &CVec, s: &CMat) -> CVec {
    let resid = pem_ao_model(c1, c2, omega, h) - s;
    resid * (h * c2.conj() + omega)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PemAoOptions {
    pub max_outer: usize,
    pub max_inner: usize,
    pub tol: f64,
    pub patience: usize,
    pub seed: u64,
    pub line_search: Backtracking,
}

impl Default for PemAoOptions {
    fn default() -> Self {
        Self {
            max_outer: 200,
            max_inner: 50,
            tol: 1e-8,
            patience: 5,
            seed: 0,
            line_search: Backtracking::default(),
        }
    }
}

/// Misfit of `R = u u^H + d h h^H` against `s`.
fn misfit(u: &CVec, d: f64, h: &CVec, s: &CMat) -> f64 {
    let n = u.len();
    let mut acc = 0.0;
    for j in 0..n {
        let (uj, hj) = (u[j].conj(), h[j].conj());
        for i in 0..n {
            let r = u[i] * uj + h[i] * hj * d;
            acc += (r - s[(i, j)]).norm_sqr();
        }
    }
    acc
}

/// Fit the reduced model to `S` from a seeded random `w`.
pub fn pem_ao(s: &CMat, geom: &ReflectionGeometry, opts: &PemAoOptions) -> Result<JcmEstimate> {
    let n = geom.num_rx();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    // The random start is drawn for the normalized problem ||S||_F = 1.
    let omega = complex_gaussian_vec(&mut rng, n, frob(s) / n as f64);
    pem_ao_from(s, geom, 0.0, c(0.0, 0.0), omega, opts).map(|(est, _)| est)
}

/// Fit starting from `(c1, c2, w)` expressed in the units of `S`.
pub fn pem_ao_from(
    s: &CMat,
    geom: &ReflectionGeometry,
    c1: f64,
    c2: Complex64,
    omega: CVec,
    opts: &PemAoOptions,
) -> Result<(JcmEstimate, PemAoState)> {
    let h = &geom.bob_steer;
    let n = h.len();
    if s.nrows() != n || s.ncols() != n || omega.len() != n {
        return Err(JcmError::DimensionMismatch(format!(
            "S is {}x{}, steering vector has {n} entries",
            s.nrows(),
            s.ncols()
        )));
    }
    let s = hermitize(s);
    let scale = frob(&s);
    if scale == 0.0 {
        let state = PemAoState::new(0.0, c(0.0, 0.0), CVec::zeros(n), h, &s);
        let est = JcmEstimate {
            r_hat: CMat::zeros(n, n),
            method: Method::PemAo,
            sigma_hat2: None,
            iterations: 0,
            objective_trace: vec![0.0],
            converged: true,
            fallback_steps: 0,
        };
        return Ok((est, state));
    }
    // Normalize as in the GD estimator; (c1, c2, w) scale as (k, sqrt k, sqrt k).
    let s_n = &s / c(scale, 0.0);
    let root = scale.sqrt();
    let mut c1 = c1 / scale;
    let mut c2 = c2 / root;
    let mut omega = omega / c(root, 0.0);
    let ls = &opts.line_search;

    let mut f = misfit(&(h * c2.conj() + &omega), c1 - c2.norm_sqr(), h, &s_n);
    let mut trace = vec![f];
    let mut stop = Stagnation::new(opts.tol, opts.patience);
    let mut converged = f <= EXACT_FIT;
    let mut iterations = 0;
    let mut fallbacks = 0;
    let mut multiplier = 0.0;

    while !converged && iterations < opts.max_outer {
        let f_start = f;

        let sc = AoScalars::compute(h, &omega, &s_n);
        let sol = solve_c_subproblem(&sc);
        fallbacks += usize::from(sol.used_fallback);
        let f_c = misfit(&(h * sol.c2.conj() + &omega), sol.c1 - sol.c2.norm_sqr(), h, &s_n);
        if f_c <= f {
            c1 = sol.c1;
            c2 = sol.c2;
            multiplier = sol.multiplier;
            f = f_c;
        }

        // w-descent: with u = c2* h + w, R = u u^H + (c1 - |c2|^2) h h^H.
        let d = c1 - c2.norm_sqr();
        let mut u = h * c2.conj() + &omega;
        for _ in 0..opts.max_inner {
            let resid = &u * u.adjoint() + h * h.adjoint() * c(d, 0.0) - &s_n;
            let grad = resid * &u;
            let before = f;
            let out = ls.search(f, vec_norm_sq(&grad), |t| misfit(&(&u - &grad * c(t, 0.0)), d, h, &s_n));
            if out.stalled {
                break;
            }
            u -= &grad * c(out.step, 0.0);
            f = out.value;
            if f <= EXACT_FIT || before - f < opts.tol * before {
                break;
            }
        }
        omega = &u - h * c2.conj();

        iterations += 1;
        trace.push(f);
        if f <= EXACT_FIT || stop.update(f_start, f) {
            converged = true;
        }
    }

    let r_hat = hermitize(&pem_ao_model(c1, c2, &omega, h)) * c(scale, 0.0);
    let scale2 = scale * scale;
    let est = JcmEstimate {
        r_hat,
        method: Method::PemAo,
        sigma_hat2: None,
        iterations,
        objective_trace: trace.into_iter().map(|v| v * scale2).collect(),
        converged,
        fallback_steps: fallbacks,
    };
    let mut state = PemAoState::new(c1 * scale, c2 * root, omega * c(root, 0.0), h, &s);
    state.multiplier = multiplier * scale;
    Ok((est, state))
}
