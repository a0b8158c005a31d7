//! Real roots of the monic cubic `v^3 + l1 v^2 + l2 v + l3`.

use std::f64::consts::PI;

fn eval(l1: f64, l2: f64, l3: f64, v: f64) -> f64 {
    ((v + l1) * v + l2) * v + l3
}

fn deriv(l1: f64, l2: f64, v: f64) -> f64 {
    (3.0 * v + 2.0 * l1) * v + l2
}

/// All real roots, ascending, each polished by one Newton step. Repeated
/// roots are reported once.
pub fn solve_cubic(l1: f64, l2: f64, l3: f64) -> Vec<f64> {
    let shift = l1 / 3.0;
    // Depressed form t^3 + p t + q with v = t - l1/3.
    let p = l2 - l1 * l1 / 3.0;
    let q = 2.0 * l1.powi(3) / 27.0 - l1 * l2 / 3.0 + l3;
    let scale = l1.abs().max(l2.abs().sqrt()).max(l3.abs().cbrt());
    if scale == 0.0 {
        return vec![0.0];
    }

    let half_q = q / 2.0;
    let third_p = p / 3.0;
    let disc = half_q * half_q + third_p.powi(3);
    let disc_tol = 1e-12 * (half_q * half_q + third_p.abs().powi(3));

    let ts: Vec<f64> = if p.abs() <= 1e-14 * scale * scale && q.abs() <= 1e-14 * scale.powi(3) {
        vec![0.0]
    } else if disc > disc_tol {
        // One real root (Cardano, cancellation-free branch).
        let a = -half_q.signum() * (half_q.abs() + disc.sqrt()).cbrt();
        let b = if a != 0.0 { -third_p / a } else { 0.0 };
        vec![a + b]
    } else if disc < -disc_tol {
        // Three distinct real roots (trigonometric form).
        let r = 2.0 * (-third_p).sqrt();
        let arg = (3.0 * q / (2.0 * p) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3).map(|k| r * (phi - 2.0 * PI * k as f64 / 3.0).cos()).collect()
    } else {
        // Simple root and a double root.
        vec![3.0 * q / p, -3.0 * q / (2.0 * p)]
    };

    let mut roots: Vec<f64> = ts
        .into_iter()
        .map(|t| {
            let v = t - shift;
            let d = deriv(l1, l2, v);
            if d != 0.0 {
                let polished = v - eval(l1, l2, l3, v) / d;
                if eval(l1, l2, l3, polished).abs() <= eval(l1, l2, l3, v).abs() {
                    return polished;
                }
            }
            v
        })
        .collect();
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs())));
    roots
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn three_distinct() {
        assert!(close(&solve_cubic(-6.0, 11.0, -6.0), &[1.0, 2.0, 3.0]));
    }

    #[test]
    fn triple_zero() {
        assert_eq!(solve_cubic(0.0, 0.0, 0.0), vec![0.0]);
    }

    #[test]
    fn symmetric_roots() {
        assert!(close(&solve_cubic(0.0, -1.0, 0.0), &[-1.0, 0.0, 1.0]));
    }

    #[test]
    fn double_root() {
        // (v - 1)^2 (v - 2) = v^3 - 4v^2 + 5v - 2
        let r = solve_cubic(-4.0, 5.0, -2.0);
        assert!(close(&r, &[1.0, 2.0]), "{r:?}");
    }

    #[test]
    fn single_real_root() {
        // (v - 2)(v^2 + 1) = v^3 - 2v^2 + v - 2
        assert!(close(&solve_cubic(-2.0, 1.0, -2.0), &[2.0]));
    }

    #[test]
    fn triple_shifted_root() {
        // (v + 3)^3
        let r = solve_cubic(9.0, 27.0, 27.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] + 3.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn roots_have_small_residual(l1 in -50.0..50.0f64, l2 in -50.0..50.0f64, l3 in -50.0..50.0f64) {
            let roots = solve_cubic(l1, l2, l3);
            prop_assert!(!roots.is_empty() && roots.len() <= 3);
            for v in &roots {
                let p = eval(l1, l2, l3, *v);
                prop_assert!(p.abs() <= 1e-8 * (1.0 + v.abs().powi(3)), "root {v} residual {p}");
            }
            for w in roots.windows(2) {
                prop_assert!(w[0] < w[1]);
            }
        }

        #[test]
        fn recovers_planted_roots(a in -5.0..5.0f64, b in -5.0..5.0f64, d in -5.0..5.0f64) {
            let l1 = -(a + b + d);
            let l2 = a * b + a * d + b * d;
            let l3 = -a * b * d;
            let roots = solve_cubic(l1, l2, l3);
            for planted in [a, b, d] {
                prop_assert!(roots.iter().any(|r| (r - planted).abs() < 1e-4 * (1.0 + planted.abs())),
                    "{planted} missing from {roots:?}");
            }
        }
    }
}
