use lattice_theta::{elliptic_ratio, elliptic_ratio_complement, jacobi_theta, JacobiKind};
use proptest::prelude::*;
use std::f64::consts::PI;

const RTOL: f64 = 1e-13;

fn th(kind: JacobiKind, x: f64, order: usize) -> f64 {
    jacobi_theta(kind, x, order, RTOL).unwrap().value
}

/// Plain series with |k| ≤ 60, no modular transformation; also returns Σ|terms|.
fn oracle(kind: JacobiKind, x: f64) -> (f64, f64) {
    let terms: Vec<f64> = (-60i64..=60)
        .map(|k| {
            let k = k as f64;
            match kind {
                JacobiKind::Two => (-PI * x * (k + 0.5).powi(2)).exp(),
                JacobiKind::Three => (-PI * x * k * k).exp(),
                JacobiKind::Four => (if k as i64 % 2 == 0 { 1.0 } else { -1.0 }) * (-PI * x * k * k).exp(),
            }
        })
        .collect();
    (terms.iter().sum(), terms.iter().map(|t| t.abs()).sum())
}

#[test]
fn frozen_values_at_one() {
    assert!((th(JacobiKind::Three, 1.0, 0) - 1.086_434_811_213_308).abs() < 1e-15);
    assert!((th(JacobiKind::Four, 1.0, 0) - 0.913_579_138_156_116_8).abs() < 1e-15);
    assert!((th(JacobiKind::Two, 1.0, 0) - th(JacobiKind::Four, 1.0, 0)).abs() <= 2.0 * f64::EPSILON);
    assert!((th(JacobiKind::Three, 50.0, 0) - 1.0).abs() < 1e-15);
}

#[test]
fn matches_direct_series() {
    for &x in &[0.05, 0.1, 0.19, 0.21, 0.5, 1.0, 3.0, 10.0] {
        for kind in [JacobiKind::Two, JacobiKind::Three, JacobiKind::Four] {
            let got = th(kind, x, 0);
            let (want, mass) = oracle(kind, x);
            assert!((got - want).abs() <= 1e-13 * mass, "{kind:?} {x}: {got} vs {want}");
        }
    }
}

#[test]
fn error_bounds_are_honest() {
    for &x in &[0.1, 0.7, 2.0] {
        for kind in [JacobiKind::Two, JacobiKind::Three, JacobiKind::Four] {
            let s = jacobi_theta(kind, x, 0, 1e-6).unwrap();
            assert!((s.value - oracle(kind, x).0).abs() <= s.abs_error + 1e-15);
            assert!(s.terms_used >= 1);
        }
    }
}

#[test]
fn rejects_bad_arguments() {
    assert!(jacobi_theta(JacobiKind::Three, 0.0, 0, RTOL).is_err());
    assert!(jacobi_theta(JacobiKind::Three, -1.0, 0, RTOL).is_err());
    assert!(jacobi_theta(JacobiKind::Three, 1.0, 0, 0.0).is_err());
    assert!(jacobi_theta(JacobiKind::Three, 1.0, 4, RTOL).is_err());
    assert!(JacobiKind::from_index(5).is_err());
    assert!(elliptic_ratio(0.0, RTOL).is_err());
}

#[test]
fn modular_identity_at_listed_points() {
    for &x in &[0.1f64, 0.5, 1.0, 2.0, 10.0] {
        let lhs = x.sqrt() * th(JacobiKind::Two, x, 0);
        let rhs = th(JacobiKind::Four, 1.0 / x, 0);
        assert!((lhs - rhs).abs() <= 1e-12, "x = {x}");
    }
}

#[test]
fn elliptic_ratio_values() {
    assert!((elliptic_ratio(1.0, RTOL).unwrap() - 2f64.powf(-0.25)).abs() < 1e-12);
    // θ₂(50)/θ₃(50) ≈ 2e^{-50π/4} ≈ 1.6e-17
    let r = elliptic_ratio(50.0, RTOL).unwrap();
    assert!(r > 0.0 && r < 1e-16);
    let c = elliptic_ratio_complement(1.0, RTOL).unwrap();
    assert!((c - (1.0 - 2f64.powf(-0.25))).abs() < 1e-13);
}

/// Five-point central difference; the wider step keeps roundoff in the O(1)
/// constant term of θ₃ and θ₄ below the tolerance at large x.
fn fd(kind: JacobiKind, x: f64, order: usize) -> f64 {
    let h = 1e-3 * x;
    let lower = |y: f64| th(kind, y, order - 1);
    (lower(x - 2.0 * h) - 8.0 * lower(x - h) + 8.0 * lower(x + h) - lower(x + 2.0 * h)) / (12.0 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quartic_identity(s in 0.05f64..8.0) {
        let (t2, t3, t4) = (th(JacobiKind::Two, s, 0), th(JacobiKind::Three, s, 0), th(JacobiKind::Four, s, 0));
        // each fourth power carries 4·RTOL relative error, and θ₃⁴ dominates
        prop_assert!((t3.powi(4) - t2.powi(4) - t4.powi(4)).abs() <= 12.0 * RTOL * t3.powi(4) + 1e-14);
    }

    #[test]
    fn half_argument_identities(s in 0.05f64..8.0) {
        let (t3, t4) = (th(JacobiKind::Three, s, 0), th(JacobiKind::Four, s, 0));
        let tol = 6.0 * RTOL * t3 * t3 + 1e-14;
        prop_assert!((th(JacobiKind::Four, 2.0 * s, 0).powi(2) - t3 * t4).abs() <= tol);
        prop_assert!((th(JacobiKind::Two, 2.0 * s, 0).powi(2) - (t3 * t3 - t4 * t4) / 2.0).abs() <= tol);
    }

    #[test]
    fn modular_identity(x in 0.05f64..20.0) {
        prop_assert!((x.sqrt() * th(JacobiKind::Two, x, 0) - th(JacobiKind::Four, 1.0 / x, 0)).abs() <= 1e-12);
        prop_assert!((x.sqrt() * th(JacobiKind::Three, x, 0) - th(JacobiKind::Three, 1.0 / x, 0)).abs() <= 1e-12);
    }

    #[test]
    fn derivative_signs(x in 0.05f64..6.0) {
        prop_assert!(th(JacobiKind::Three, x, 1) < 0.0);
        prop_assert!(th(JacobiKind::Three, x, 2) > 0.0);
        prop_assert!(th(JacobiKind::Two, x, 1) < 0.0);
        prop_assert!(th(JacobiKind::Two, x, 2) > 0.0);
    }

    #[test]
    fn derivatives_match_differences(x in 0.1f64..5.0, k in 2u32..=4, order in 1usize..=3) {
        let kind = JacobiKind::from_index(k).unwrap();
        let exact = th(kind, x, order);
        let approx = fd(kind, x, order);
        // θ₄ and its derivatives cross zero; compare against the scale of the series
        let scale = exact.abs().max(1e-3 * th(JacobiKind::Three, x, order).abs());
        prop_assert!((exact - approx).abs() <= 1e-6 * scale, "{kind:?} x={x} order={order}: {exact} vs {approx}");
    }

    #[test]
    fn elliptic_ratio_decreasing(a in 0.1f64..50.0, b in 0.1f64..50.0) {
        prop_assume!((a - b).abs() > 1e-6);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (rl, rh) = (elliptic_ratio(lo, RTOL).unwrap(), elliptic_ratio(hi, RTOL).unwrap());
        prop_assert!(rl > rh);
        prop_assert!(rh > 0.0 && rl < 1.0);
    }
}
