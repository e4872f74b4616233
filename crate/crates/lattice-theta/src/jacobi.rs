//! One-dimensional theta series
//!
//! θ₂(x) = Σ e^{-π(k+½)²x}, θ₃(x) = Σ e^{-πk²x}, θ₄(x) = Σ (-1)^k e^{-πk²x}
//!
//! and their derivatives in x, each returned with a certified error bound.

use crate::error::{domain, param, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JacobiKind {
    Two,
    Three,
    Four,
}

impl JacobiKind {
    pub fn from_index(tag: u32) -> Result<Self> {
        match tag {
            2 => Ok(Self::Two),
            3 => Ok(Self::Three),
            4 => Ok(Self::Four),
            _ => param(format!("theta kind must be 2, 3 or 4, got {tag}")),
        }
    }

    pub fn index(self) -> u32 {
        match self {
            Self::Two => 2,
            Self::Three => 3,
            Self::Four => 4,
        }
    }

    /// Kind on the other side of x ↦ 1/x.
    fn modular_partner(self) -> Self {
        match self {
            Self::Two => Self::Four,
            Self::Three => Self::Three,
            Self::Four => Self::Two,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue<T> {
    pub value: T,
    pub abs_error: T,
    pub terms_used: usize,
}

const MODULAR_SWITCH: f64 = 0.2;
pub const MAX_DERIV: usize = 3;

fn check_args<T: Scalar>(x: T, order: usize, rtol: T) -> Result<()> {
    if !(x > T::zero()) || !x.is_finite() {
        return domain(format!("theta argument must be positive and finite, got {x}"));
    }
    if !(rtol > T::zero()) {
        return param(format!("rtol must be positive, got {rtol}"));
    }
    if order > MAX_DERIV {
        return param(format!("derivative order must be at most {MAX_DERIV}, got {order}"));
    }
    Ok(())
}

/// θ_kind^{(deriv_order)}(x).
pub fn jacobi_theta<T: Scalar>(kind: JacobiKind, x: T, deriv_order: usize, rtol: T) -> Result<SeriesValue<T>> {
    let all = jacobi_theta_all(kind, x, deriv_order, rtol)?;
    Ok(all[deriv_order])
}

/// Derivatives of orders `0..=max_order` in one pass.
pub fn jacobi_theta_all<T: Scalar>(kind: JacobiKind, x: T, max_order: usize, rtol: T) -> Result<Vec<SeriesValue<T>>> {
    check_args(x, max_order, rtol)?;
    if x < T::lit(MODULAR_SWITCH) {
        Ok(modular(kind, x, max_order, rtol))
    } else {
        Ok(direct(kind, x, max_order, rtol))
    }
}

fn direct<T: Scalar>(kind: JacobiKind, x: T, max_order: usize, rtol: T) -> Vec<SeriesValue<T>> {
    let pi = T::PI();
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let orders = max_order + 1;
    let node = |k: usize| -> T {
        let k = T::from_usize_lossy(k);
        match kind {
            JacobiKind::Two => k + half,
            _ => k,
        }
    };
    let sign = |k: usize| -> T {
        if kind == JacobiKind::Four && k % 2 == 1 {
            -T::one()
        } else {
            T::one()
        }
    };
    // term of order n at index k, including the symmetric weight 2
    let term = |k: usize, n: usize| -> T {
        let m2 = node(k) * node(k);
        let e = (-pi * m2 * x).exp();
        two * sign(k) * (-pi * m2).powi(n as i32) * e
    };

    let first = match kind {
        JacobiKind::Two => 0,
        _ => 1,
    };
    let mut sums = vec![T::zero(); orders];
    let mut abs_sums = vec![T::zero(); orders];
    if kind != JacobiKind::Two {
        sums[0] = T::one();
        abs_sums[0] = T::one();
    }
    let mut tails = vec![T::zero(); orders];
    let mut k = first;
    let mut used = if kind == JacobiKind::Two { 0 } else { 1 };
    loop {
        for n in 0..orders {
            let t = term(k, n);
            sums[n] += t;
            abs_sums[n] += t.abs();
        }
        used += 1;
        let mut done = true;
        for n in 0..orders {
            let next = term(k + 1, n).abs();
            let after = term(k + 2, n).abs();
            let ratio = if next > T::zero() { after / next } else { T::zero() };
            if ratio >= T::one() {
                done = false;
                continue;
            }
            let tail = next / (T::one() - ratio);
            tails[n] = tail;
            if tail > rtol * half * sums[n].abs() {
                done = false;
            }
        }
        k += 1;
        if done || k > 100_000 {
            break;
        }
    }
    let eps = T::epsilon();
    (0..orders)
        .map(|n| SeriesValue {
            value: sums[n],
            abs_error: tails[n] + T::from_usize_lossy(used + 1) * eps * abs_sums[n],
            terms_used: used,
        })
        .collect()
}

fn binom(n: usize, k: usize) -> f64 {
    const TABLE: [[f64; 4]; 4] = [[1.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0], [1.0, 2.0, 1.0, 0.0], [1.0, 3.0, 3.0, 1.0]];
    TABLE[n][k]
}

fn modular<T: Scalar>(kind: JacobiKind, x: T, max_order: usize, rtol: T) -> Vec<SeriesValue<T>> {
    let big = T::one() / x;
    let inner = direct(kind.modular_partner(), big, max_order, rtol * T::lit(0.1));
    let g: Vec<T> = inner.iter().map(|s| s.value).collect();
    let ge: Vec<T> = inner.iter().map(|s| s.abs_error).collect();
    let used = inner[0].terms_used;

    // derivatives of a(x) = x^{-1/2}
    let coeff = [1.0, -0.5, 0.75, -1.875];
    let a: Vec<T> = (0..=max_order)
        .map(|j| T::lit(coeff[j]) * x.powf(T::lit(-0.5 - j as f64)))
        .collect();

    // derivatives of b(x) = G(1/x) as linear forms in G^{(k)}(X)
    let xx = big;
    let b_forms: [Vec<(usize, T)>; 4] = [
        vec![(0, T::one())],
        vec![(1, -xx * xx)],
        vec![(2, xx.powi(4)), (1, T::lit(2.0) * xx.powi(3))],
        vec![(3, -xx.powi(6)), (2, T::lit(-6.0) * xx.powi(5)), (1, T::lit(-6.0) * xx.powi(4))],
    ];

    let eps = T::epsilon();
    (0..=max_order)
        .map(|n| {
            let mut v = T::zero();
            let mut e = T::zero();
            let mut mag = T::zero();
            for j in 0..=n {
                let w = T::lit(binom(n, j)) * a[j];
                for &(k, cf) in &b_forms[n - j] {
                    let t = w * cf * g[k];
                    v += t;
                    mag += t.abs();
                    e += (w * cf).abs() * ge[k];
                }
            }
            SeriesValue { value: v, abs_error: e + T::lit(8.0) * eps * mag, terms_used: used }
        })
        .collect()
}

/// ρ(x) = θ₂(x)/θ₃(x).
pub fn elliptic_ratio<T: Scalar>(x: T, rtol: T) -> Result<T> {
    let t2 = jacobi_theta(JacobiKind::Two, x, 0, rtol)?;
    let t3 = jacobi_theta(JacobiKind::Three, x, 0, rtol)?;
    Ok(t2.value / t3.value)
}

/// 1 − θ₂(x)/θ₃(x), accurate when the ratio is close to 1.
pub fn elliptic_ratio_complement<T: Scalar>(x: T, rtol: T) -> Result<T> {
    check_args(x, 0, rtol)?;
    let t3 = jacobi_theta(JacobiKind::Three, x, 0, rtol)?.value;
    if x >= T::one() {
        let t2 = jacobi_theta(JacobiKind::Two, x, 0, rtol)?.value;
        return Ok((t3 - t2) / t3);
    }
    // θ₃(x) − θ₂(x) = x^{-1/2}(θ₃(1/x) − θ₄(1/x)) = 4 x^{-1/2} Σ_{k odd} e^{-πk²/x}
    let big = T::one() / x;
    let mut s = T::zero();
    let mut k = 1usize;
    loop {
        let kk = T::from_usize_lossy(k);
        let t = (-T::PI() * kk * kk * big).exp();
        s += t;
        if t <= rtol * T::lit(1e-3) * s || t == T::zero() {
            break;
        }
        k += 2;
    }
    Ok(T::lit(4.0) * s / x.sqrt() / t3)
}

#[cfg(test)]
mod tests {
    use super::*;

    const RT: f64 = 1e-13;

    fn th(kind: JacobiKind, x: f64, n: usize) -> f64 {
        jacobi_theta(kind, x, n, RT).unwrap().value
    }

    #[test]
    fn known_values_at_one() {
        assert!((th(JacobiKind::Three, 1.0, 0) - 1.086_434_811_213_308).abs() < 1e-15);
        assert!((th(JacobiKind::Four, 1.0, 0) - 0.913_579_138_156_116_8).abs() < 1e-15);
        assert!((th(JacobiKind::Two, 1.0, 0) - th(JacobiKind::Four, 1.0, 0)).abs() < 1e-15);
    }

    #[test]
    fn large_argument_tends_to_one() {
        assert!((th(JacobiKind::Three, 50.0, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn error_bound_is_honest_and_small() {
        for &x in &[0.05, 0.19, 0.2, 0.7, 3.0] {
            for kind in [JacobiKind::Two, JacobiKind::Three, JacobiKind::Four] {
                for n in 0..=3 {
                    let s = jacobi_theta(kind, x, n, RT).unwrap();
                    assert!(s.terms_used >= 1);
                    assert!(s.abs_error <= 1e-12 * s.value.abs().max(1e-300), "{kind:?} {x} {n}: {s:?}");
                }
            }
        }
    }

    #[test]
    fn branches_agree_at_switch() {
        for kind in [JacobiKind::Two, JacobiKind::Three, JacobiKind::Four] {
            for n in 0..=3 {
                let d: f64 = direct(kind, 0.2, n, 1e-15)[n].value;
                let m: f64 = modular(kind, 0.2, n, 1e-15)[n].value;
                assert!((d - m).abs() <= 1e-12 * d.abs(), "{kind:?} order {n}: {d} vs {m}");
            }
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(jacobi_theta(JacobiKind::Three, 0.0, 0, RT), Err(crate::ThetaError::Domain(_))));
        assert!(matches!(jacobi_theta(JacobiKind::Three, 1.0, 0, 0.0), Err(crate::ThetaError::Parameter(_))));
        assert!(jacobi_theta(JacobiKind::Three, 1.0, 4, RT).is_err());
        assert!(JacobiKind::from_index(5).is_err());
    }

    #[test]
    fn ratio_at_fixed_point() {
        let r: f64 = elliptic_ratio(1.0, RT).unwrap();
        assert!((r - 2f64.powf(-0.25)).abs() < 1e-14);
        let comp: f64 = elliptic_ratio_complement(0.05, RT).unwrap();
        // 1 − ρ ≈ 4e^{-π/x} for small x
        assert!((comp / (4.0 * (-std::f64::consts::PI / 0.05).exp()) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn works_in_single_precision() {
        let v = jacobi_theta(JacobiKind::Three, 1.0f32, 0, 1e-5).unwrap();
        assert!((v.value - 1.086_434_8).abs() < 1e-5);
    }
}
