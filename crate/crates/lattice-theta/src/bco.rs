//! Body-centred-orthorhombic lattices L_{y,t} and the monotonicity certificate.
//!
//! E_t(y, α) = θ₃(t²α)·Ẽ_t(y; α),  Ẽ_t(y; α) = f₃(y) + ρ_{t,α} f₂(y),
//! f_i(y) = θ_i(αy) θ_i(α/y),  ρ_{t,α} = θ₂(t²α)/θ₃(t²α).

use std::fmt;
use std::str::FromStr;

use crate::error::{param, Result, ThetaError};
use crate::jacobi::{elliptic_ratio, elliptic_ratio_complement, jacobi_theta, jacobi_theta_all, JacobiKind, SeriesValue};
use crate::optimize::{bisect, golden_section_min};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcoPoint<T> {
    pub y: T,
    pub t: T,
    pub alpha: T,
}

impl<T: Scalar> BcoPoint<T> {
    pub fn new(y: T, t: T, alpha: T) -> Result<Self> {
        if !(y >= T::one()) {
            return param(format!("y must be at least 1, got {y}"));
        }
        if !(t > T::zero()) || !(alpha > T::zero()) {
            return param("t and alpha must be positive");
        }
        Ok(Self { y, t, alpha })
    }
}

fn rtol<T: Scalar>() -> T {
    T::lit(T::DEFAULT_RTOL)
}

fn binom(n: usize, k: usize) -> f64 {
    [[1.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0], [1.0, 2.0, 1.0, 0.0], [1.0, 3.0, 3.0, 1.0]][n][k]
}

/// Derivatives of y ↦ θ_i(αy)θ_i(α/y) of orders 0..=max_order, with error bounds.
///
/// Below α = 1 the y-dependence is exponentially small against the size of the
/// individual terms, so the product is evaluated through θ_i(αy)θ_i(α/y) =
/// α⁻¹ θ_j(y/α)θ_j(1/(αy)) with (i, j) ∈ {(3,3), (2,4), (4,2)}.
fn f_all<T: Scalar>(kind: JacobiKind, alpha: T, y: T, max_order: usize) -> Result<Vec<SeriesValue<T>>> {
    if alpha < T::one() && alpha > T::zero() {
        let partner = match kind {
            JacobiKind::Two => JacobiKind::Four,
            JacobiKind::Three => JacobiKind::Three,
            JacobiKind::Four => JacobiKind::Two,
        };
        let inv = alpha.recip();
        return Ok(f_all_direct(partner, inv, y, max_order)?
            .into_iter()
            .map(|s| SeriesValue { value: s.value * inv, abs_error: s.abs_error * inv, terms_used: s.terms_used })
            .collect());
    }
    f_all_direct(kind, alpha, y, max_order)
}

fn f_all_direct<T: Scalar>(kind: JacobiKind, alpha: T, y: T, max_order: usize) -> Result<Vec<SeriesValue<T>>> {
    if !(y > T::zero()) || !(alpha > T::zero()) {
        return Err(ThetaError::Domain("y and alpha must be positive".into()));
    }
    if max_order > 3 {
        return param("derivative order must be at most 3");
    }
    let rt = rtol::<T>();
    let ta = jacobi_theta_all(kind, alpha * y, max_order, rt)?;
    let u = alpha / y;
    let tb = jacobi_theta_all(kind, u, max_order, rt)?;

    // A(y) = θ(αy): A^{(k)} = α^k θ^{(k)}(αy)
    let a: Vec<(T, T)> = (0..=max_order)
        .map(|k| {
            let s = alpha.powi(k as i32);
            (s * ta[k].value, s * ta[k].abs_error)
        })
        .collect();
    // B(y) = θ(u(y)), u = α/y
    let y2 = y * y;
    let u1 = -alpha / y2;
    let u2 = T::lit(2.0) * alpha / (y2 * y);
    let u3 = T::lit(-6.0) * alpha / (y2 * y2);
    let forms: [Vec<(usize, T)>; 4] = [
        vec![(0, T::one())],
        vec![(1, u1)],
        vec![(2, u1 * u1), (1, u2)],
        vec![(3, u1 * u1 * u1), (2, T::lit(3.0) * u1 * u2), (1, u3)],
    ];
    let b: Vec<(T, T)> = (0..=max_order)
        .map(|k| {
            forms[k].iter().fold((T::zero(), T::zero()), |(v, e), &(j, c)| {
                (v + c * tb[j].value, e + c.abs() * tb[j].abs_error)
            })
        })
        .collect();

    let eps = T::epsilon();
    Ok((0..=max_order)
        .map(|n| {
            let mut v = T::zero();
            let mut e = T::zero();
            let mut mag = T::zero();
            for j in 0..=n {
                let c = T::lit(binom(n, j));
                let (av, ae) = a[j];
                let (bv, be) = b[n - j];
                v += c * av * bv;
                mag += (c * av * bv).abs();
                e += c * (av.abs() * be + ae * bv.abs() + ae * be);
            }
            SeriesValue { value: v, abs_error: e + T::lit(8.0) * eps * mag, terms_used: ta[0].terms_used }
        })
        .collect())
}

fn check_kind(kind: JacobiKind) -> Result<()> {
    if kind == JacobiKind::Four {
        return param("f_i is defined for i ∈ {2, 3}");
    }
    Ok(())
}

/// f_{i,α}^{(n)}(y) for i ∈ {2,3}.
pub fn f_i<T: Scalar>(kind: JacobiKind, alpha: T, y: T, deriv_order: usize) -> Result<T> {
    check_kind(kind)?;
    Ok(f_all(kind, alpha, y, deriv_order)?[deriv_order].value)
}

pub fn rho_t<T: Scalar>(t: T, alpha: T) -> Result<T> {
    elliptic_ratio(t * t * alpha, rtol())
}

/// Ẽ_t^{(n)}(y; α) with an error bound, n ≤ 3.
pub fn e_tilde_with_error<T: Scalar>(p: &BcoPoint<T>, deriv_order: usize) -> Result<SeriesValue<T>> {
    let f3 = f_all(JacobiKind::Three, p.alpha, p.y, deriv_order)?[deriv_order];
    let f2 = f_all(JacobiKind::Two, p.alpha, p.y, deriv_order)?[deriv_order];
    let rho = rho_t(p.t, p.alpha)?;
    let v = f3.value + rho * f2.value;
    let e = f3.abs_error + rho * f2.abs_error + T::lit(4.0) * T::epsilon() * (f3.value.abs() + (rho * f2.value).abs());
    Ok(SeriesValue { value: v, abs_error: e, terms_used: f3.terms_used })
}

/// Ẽ_t^{(n)}(y; α) for n ≤ 3 (n = 3 is used to validate K_α).
pub fn e_tilde<T: Scalar>(p: &BcoPoint<T>, deriv_order: usize) -> Result<T> {
    Ok(e_tilde_with_error(p, deriv_order)?.value)
}

/// E_t(y, α) = θ_{L_{y,t}}(α).
pub fn e_full<T: Scalar>(p: &BcoPoint<T>) -> Result<T> {
    let t3 = jacobi_theta(JacobiKind::Three, p.t * p.t * p.alpha, 0, rtol())?.value;
    Ok(t3 * e_tilde(p, 0)?)
}

/// f″_{i,α}(1).
fn f_second_at_one<T: Scalar>(kind: JacobiKind, alpha: T) -> Result<T> {
    Ok(f_all(kind, alpha, T::one(), 2)?[2].value)
}

/// h_α(y) = (f₃(y) − f₃(1))/(f₂(1) − f₂(y)); at y = 1 pass `limit = true` for f₃″(1)/(−f₂″(1)).
pub fn h_alpha<T: Scalar>(y: T, alpha: T, limit: bool) -> Result<T> {
    if !(alpha > T::zero()) {
        return param("alpha must be positive");
    }
    if limit {
        if y != T::one() {
            return param("the limit form is only defined at y = 1");
        }
        return Ok(f_second_at_one(JacobiKind::Three, alpha)? / -f_second_at_one(JacobiKind::Two, alpha)?);
    }
    if !(y > T::one()) {
        return param(format!("h_alpha needs y > 1 (or the limit flag at y = 1), got {y}"));
    }
    let f3 = |y| f_i(JacobiKind::Three, alpha, y, 0);
    let f2 = |y| f_i(JacobiKind::Two, alpha, y, 0);
    Ok((f3(y)? - f3(T::one())?) / (f2(T::one())? - f2(y)?))
}

/// 1 − h_α(1) = g″(1)/f₂″(1), computed without cancellation against 1.
///
/// For α < 1, f₃ + f₂ at α equals (2/α)(f₃ + f₂) at 4/α and f₂ equals α⁻¹f₄ at
/// 1/α; both right-hand sides are free of cancellation.
fn one_minus_h<T: Scalar>(alpha: T) -> Result<T> {
    if alpha < T::one() {
        let big = T::lit(4.0) / alpha;
        let g2 = f_second_at_one(JacobiKind::Three, big)? + f_second_at_one(JacobiKind::Two, big)?;
        let f4 = f_all_direct(JacobiKind::Four, alpha.recip(), T::one(), 2)?[2].value;
        return Ok(T::lit(2.0) * g2 / f4);
    }
    let s3 = f_second_at_one(JacobiKind::Three, alpha)?;
    let s2 = f_second_at_one(JacobiKind::Two, alpha)?;
    Ok((s3 + s2) / s2)
}

/// The t at which ρ_{t,α} = h_α(1); ρ_{t,α} > h_α(1) below it.
pub fn t0<T: Scalar>(alpha: T, tol: T) -> Result<T> {
    if !(alpha > T::zero()) {
        return param("alpha must be positive");
    }
    let c = one_minus_h(alpha)?;
    // ρ − h = (1 − h) − (1 − ρ)
    bisect(|t: T| Ok(c - elliptic_ratio_complement(t * t * alpha, rtol())?), T::lit(1e-3), T::lit(10.0), tol)
}

/// Root of α ↦ h_α(1) − ρ_{1,α} on [1, 5].
pub fn alpha1<T: Scalar>(tol: T) -> Result<T> {
    bisect(
        |a: T| Ok(elliptic_ratio_complement(a, rtol())? - one_minus_h(a)?),
        T::one(),
        T::lit(5.0),
        tol,
    )
}

fn k_terms<T: Scalar>(alpha: T) -> Result<(T, T)> {
    let rt = rtol::<T>();
    let b = alpha / T::lit(3.0).sqrt();
    let a2 = alpha * alpha;
    let a3 = a2 * alpha;
    let mut k = T::zero();
    let mut err = T::zero();
    for kind in [JacobiKind::Two, JacobiKind::Three] {
        let x = jacobi_theta_all(kind, alpha, 3, rt)?;
        let z = jacobi_theta_all(kind, b, 3, rt)?;
        let (x0, x1, x2, x3) = (x[0].value, x[1].value.abs(), x[2].value, x[3].value.abs());
        let (z0, z1, z2, z3) = (z[0].value, z[1].value.abs(), z[2].value, z[3].value.abs());
        k += a3 * x3 * z0
            + a3 * x0 * z3
            + T::lit(3.0) * a3 * x2 * z1
            + T::lit(5.0) * a2 * x1 * z1
            + T::lit(3.0) * a2 * x1 * z2
            + T::lit(6.0) * alpha * x0 * z0
            + T::lit(2.0) * a2 * x1 * z0
            + T::lit(2.0) * a2 * x0 * z1
            + T::lit(4.0) * a2 * x0 * z2;
        let rel = x.iter().chain(z.iter()).fold(T::zero(), |m, s| m.max(s.abs_error / s.value.abs()));
        err = err.max(rel);
    }
    Ok((k, k * T::lit(3.0) * err))
}

/// The bound K_α > sup_{y∈[1,√3]} |Ẽ_t‴(y; α)|, valid for every t.
pub fn k_alpha<T: Scalar>(alpha: T) -> Result<T> {
    if !(alpha > T::zero()) {
        return param("alpha must be positive");
    }
    Ok(k_terms(alpha)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    CertifiedIncreasing,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::CertifiedIncreasing => "certified_increasing",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertStep<T> {
    pub y: T,
    pub a: T,
    pub b: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate<T> {
    pub alpha: T,
    pub t: T,
    pub steps: Vec<CertStep<T>>,
    /// The point reached after the last step.
    pub final_y: T,
    pub verdict: Verdict,
    pub k_alpha: T,
    /// Why the certificate is inconclusive.
    pub reason: Option<String>,
}

pub const STEP_UNDERFLOW: f64 = 1e-12;
pub const MAX_CERT_STEPS: usize = 1_000_000;

/// Runs the Taylor-step certificate that y ↦ Ẽ_t(y; α) increases on (1, √3].
///
/// Each step uses a_i = Ẽ′(y_i), b_i = Ẽ″(y_i), both lowered by ten times their
/// evaluation error, and an inflated K_α.
pub fn certify_increasing<T: Scalar>(alpha: T, t: T) -> Result<Certificate<T>> {
    if !(alpha > T::zero()) || !(t > T::zero()) {
        return param("alpha and t must be positive");
    }
    let (k, k_err) = k_terms(alpha)?;
    let k_up = k + T::lit(10.0) * k_err + T::lit(16.0) * T::epsilon() * k;
    let target = T::lit(3.0).sqrt();
    let ten = T::lit(10.0);
    let mut steps = Vec::new();
    let mut y = T::one();
    let cert = |steps: Vec<CertStep<T>>, y: T, verdict: Verdict, reason: Option<String>| Certificate {
        alpha,
        t,
        steps,
        final_y: y,
        verdict,
        k_alpha: k,
        reason,
    };
    while y < target {
        if steps.len() >= MAX_CERT_STEPS {
            return Ok(cert(steps, y, Verdict::Inconclusive, Some("step limit reached".into())));
        }
        let p = BcoPoint { y, t, alpha };
        let (a, a_lo) = if y == T::one() {
            // y = 1 is a critical point by the symmetry y ↔ 1/y
            (T::zero(), T::zero())
        } else {
            let s = e_tilde_with_error(&p, 1)?;
            (s.value, s.value - ten * s.abs_error)
        };
        let bs = e_tilde_with_error(&p, 2)?;
        let b = bs.value;
        let b_lo = b - ten * bs.abs_error;
        steps.push(CertStep { y, a, b });
        if a_lo < T::zero() {
            return Ok(cert(steps, y, Verdict::Inconclusive, Some(format!("first derivative not certified non-negative at y = {y}"))));
        }
        if !(b_lo > T::zero()) {
            return Ok(cert(steps, y, Verdict::Inconclusive, Some(format!("second derivative not certified positive at y = {y}"))));
        }
        let step = (b_lo + (b_lo * b_lo + T::lit(2.0) * k_up * a_lo).sqrt()) / k_up;
        if !(step >= T::lit(STEP_UNDERFLOW)) {
            return Ok(cert(steps, y, Verdict::Inconclusive, Some(format!("step underflow at y = {y}"))));
        }
        y += step;
    }
    Ok(cert(steps, y, Verdict::CertifiedIncreasing, None))
}

/// g_α(y) = f₃(y) + f₂(y).
pub fn g_alpha<T: Scalar>(alpha: T, y: T, deriv_order: usize) -> Result<T> {
    if alpha < T::one() && alpha > T::zero() {
        // f₃ + f₂ at α is (2/α)(f₃ + f₂) at 4/α
        return Ok(T::lit(2.0) / alpha * g_alpha(T::lit(4.0) / alpha, y, deriv_order)?);
    }
    Ok(f_i(JacobiKind::Three, alpha, y, deriv_order)? + f_i(JacobiKind::Two, alpha, y, deriv_order)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GArgmin<T> {
    pub argmin: T,
    pub g_second_at_one: T,
}

/// Minimizer of g_α on [1, ∞) and g_α″(1).
///
/// Golden section brackets the minimizer; the root of g_α′ is then polished by
/// bisection, since g_α is too flat near its minimum for value comparisons alone.
pub fn g_alpha_argmin<T: Scalar>(alpha: T, tol: T) -> Result<GArgmin<T>> {
    if !(alpha > T::zero()) {
        return param("alpha must be positive");
    }
    let rough = golden_section_min(|y| g_alpha(alpha, y, 0), T::one(), T::lit(4.0), T::lit(1e-4))?;
    let w = T::lit(0.05);
    let lo = (rough - w).max(T::one() + T::lit(1e-9));
    let hi = rough + w;
    let argmin = bisect(|y| g_alpha(alpha, y, 1), lo, hi, tol)?;
    Ok(GArgmin { argmin, g_second_at_one: g_alpha(alpha, T::one(), 2)? })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Thm14Family {
    U2,
    U3,
    U4,
    Q,
    P34,
    P23,
}

impl FromStr for Thm14Family {
    type Err = ThetaError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "U2" => Ok(Self::U2),
            "U3" => Ok(Self::U3),
            "U4" => Ok(Self::U4),
            "Q" => Ok(Self::Q),
            "P34" => Ok(Self::P34),
            "P23" => Ok(Self::P23),
            _ => param(format!("unknown family '{s}'")),
        }
    }
}

/// Products over i of θ_k(c_i^t α) for the families of diagonal deformations A_t = diag(c_i^t).
pub fn thm14_scan<T: Scalar>(c_list: &[T], alpha: T, which: Thm14Family, t_grid: &[T]) -> Result<Vec<(T, T)>> {
    if c_list.is_empty() || c_list.iter().any(|&c| !(c > T::zero())) {
        return param("c_list must be non-empty and positive");
    }
    let prod = c_list.iter().fold(T::one(), |p, &c| p * c);
    if (prod - T::one()).abs() > T::lit(1e-12) {
        return Err(ThetaError::Refused(format!("product of c_list is {prod}, not 1")));
    }
    if c_list.iter().all(|&c| c == T::one()) {
        return param("at least one c_i must differ from 1");
    }
    if !(alpha > T::zero()) {
        return param("alpha must be positive");
    }
    let rt = rtol::<T>();
    let th = |k: JacobiKind, x: T| -> Result<T> { Ok(jacobi_theta(k, x, 0, rt)?.value) };
    t_grid
        .iter()
        .map(|&t| {
            let mut v = T::one();
            for &c in c_list {
                let x = c.powf(t) * alpha;
                v *= match which {
                    Thm14Family::U2 => th(JacobiKind::Two, x)?,
                    Thm14Family::U3 => th(JacobiKind::Three, x)?,
                    Thm14Family::U4 => th(JacobiKind::Four, x)?,
                    Thm14Family::Q => th(JacobiKind::Two, x)? / th(JacobiKind::Three, x)?,
                    Thm14Family::P34 => th(JacobiKind::Three, x)? * th(JacobiKind::Four, x)?,
                    Thm14Family::P23 => th(JacobiKind::Two, x)? * th(JacobiKind::Three, x)?,
                };
            }
            Ok((t, v))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const T3_1: f64 = 1.086_434_811_213_308;

    #[test]
    fn f_at_one_and_symmetry() {
        assert!((f_i(JacobiKind::Three, 1.0, 1.0, 0).unwrap() - T3_1 * T3_1).abs() < 1e-14);
        assert!(f_i::<f64>(JacobiKind::Three, 1.3, 1.0, 1).unwrap().abs() < 1e-14);
        assert!(f_i::<f64>(JacobiKind::Two, 1.3, 1.0, 1).unwrap().abs() < 1e-14);
        let a: f64 = f_i(JacobiKind::Three, 0.7, 2.5, 0).unwrap();
        let b = f_i(JacobiKind::Three, 0.7, 0.4, 0).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn second_derivative_at_one_has_closed_form() {
        for kind in [JacobiKind::Two, JacobiKind::Three] {
            let a = 1.4f64;
            let th = |n| jacobi_theta(kind, a, n, 1e-14).unwrap().value;
            let closed = 2.0 * (a * a * th(2) * th(0) - a * a * th(1) * th(1) + a * th(0) * th(1));
            assert!((f_i(kind, a, 1.0, 2).unwrap() - closed).abs() < 1e-12);
        }
    }

    #[test]
    fn h_limit_below_one() {
        for a in [0.5, 1.0, 2.0, 5.0] {
            assert!(h_alpha(1.0f64, a, true).unwrap() < 1.0);
        }
        assert!(h_alpha(1.0f64, 1.0, false).is_err());
        assert!(h_alpha(0.9f64, 1.0, false).is_err());
    }

    #[test]
    fn alpha1_and_t0() {
        let a1: f64 = alpha1(1e-10).unwrap();
        assert!((a1 - 2.379_998_839_302_728).abs() < 1e-7);
        let t: f64 = t0(1.0, 1e-12).unwrap();
        assert!((t - 0.892_114_475).abs() < 1e-7);
    }

    #[test]
    fn k_alpha_at_one() {
        assert!((k_alpha(1.0f64).unwrap() - 96.789_915_57).abs() < 1e-6);
    }

    #[test]
    fn certificate_at_reference_point() {
        let c = certify_increasing(1.0f64, 0.9).unwrap();
        assert_eq!(c.verdict, Verdict::CertifiedIncreasing);
        assert_eq!(c.steps.len(), 111);
        // the safety margins shift the trajectory slightly from the unmargined one
        assert!((c.final_y - 1.755_228_458_764_279_2).abs() < 1e-6);
        assert_eq!(c.steps[0].a, 0.0);
        let c = certify_increasing(5.0f64, 0.5).unwrap();
        assert_eq!(c.verdict, Verdict::Inconclusive);
        assert!(c.reason.is_some());
    }

    #[test]
    fn g_argmin_is_sqrt3() {
        let r = g_alpha_argmin(1.0f64, 1e-10).unwrap();
        assert!((r.argmin - 3f64.sqrt()).abs() < 1e-6);
        assert!(r.g_second_at_one < 0.0);
    }

    #[test]
    fn thm14_examples() {
        let c = [2.0, 0.5];
        let v = thm14_scan(&c, 1.0, Thm14Family::U4, &[0.0, 0.5, -0.5, 1.0, -1.0]).unwrap();
        assert!(v[1..].iter().all(|&(_, x)| x < v[0].1));
        let v = thm14_scan(&c, 1.0, Thm14Family::U3, &[0.0, 1.0, -1.0]).unwrap();
        assert!(v[1].1 > v[0].1 && v[2].1 > v[0].1);
        let v = thm14_scan(&c, 1.0, Thm14Family::U2, &[0.0]).unwrap();
        assert!((v[0].1 - 0.913_579_138_156_116_8f64.powi(2)).abs() < 1e-14);
        assert!(thm14_scan(&[2.0, 0.4], 1.0, Thm14Family::U2, &[0.0]).is_err());
    }
}
