//! Lattice theta functions θ_{Λ+u}(α) = Σ_{p∈Λ} e^{-πα|p+u|²}.
//!
//! Both summation routes truncate to a ball and certify the remainder with the
//! Barvinok-type bound
//!
//!   Σ_{|p+u|√α > √(dγ)} e^{-πα|p+u|²} ≤ κ(γ)·θ_Λ(α),  κ(γ) = (2πγ)^{d/2} e^{-dπγ + d/2},
//!
//! valid for γ > 1/(2π). The unknown θ_Λ(α) is bounded by S/(1 − κ), where S is
//! the partial sum of the untranslated series over the same ball.

use crate::error::{param, Result, ThetaError};
use crate::jacobi::{jacobi_theta, JacobiKind};
use crate::lattice::{dual, iwasawa_qdt, BravaisLattice};
use crate::linalg::norm_sq;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Direct,
    Poisson,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Poisson => "poisson",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaResult<T> {
    pub value: T,
    pub abs_error: T,
    pub method: Method,
    pub points_summed: usize,
}

impl<T: Scalar> ThetaResult<T> {
    pub fn rel_error(&self) -> T {
        self.abs_error / self.value.abs()
    }
}

const MAX_ROUNDS: usize = 8;
/// Coordinate tolerance for deciding u − v ∈ Λ.
const LATTICE_TOL: f64 = 1e-9;

fn check(alpha: f64, rtol: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return param(format!("alpha must be positive and finite, got {alpha}"));
    }
    if !(rtol > 0.0) {
        return param(format!("rtol must be positive, got {rtol}"));
    }
    Ok(())
}

fn log_kappa(gamma: f64, d: f64) -> f64 {
    0.5 * d * (2.0 * std::f64::consts::PI * gamma).ln() - d * std::f64::consts::PI * gamma + 0.5 * d
}

/// Smallest γ > 1/(2π) with κ(γ) ≤ target (target < 1).
pub fn barvinok_gamma(target: f64, d: usize) -> f64 {
    let d = d as f64;
    let lt = target.max(1e-300).ln();
    let mut lo = 1.0 / (2.0 * std::f64::consts::PI);
    let mut hi = lo.max(1.0);
    while log_kappa(hi, d) > lt {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if log_kappa(mid, d) > lt {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

pub fn barvinok_kappa(gamma: f64, d: usize) -> f64 {
    log_kappa(gamma, d as f64).exp()
}

/// Representative of u modulo Λ near the origin, plus its lattice coordinates.
fn centered<T: Scalar>(l: &BravaisLattice<T>, u: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    let c = l.coords(u)?;
    let frac: Vec<T> = c.iter().map(|&x| x - x.round()).collect();
    Ok((l.from_coords(&frac), frac))
}

pub fn theta_direct<T: Scalar>(l: &BravaisLattice<T>, u: &[T], alpha: T, rtol: T) -> Result<ThetaResult<T>> {
    check(alpha.to_f64_lossy(), rtol.to_f64_lossy())?;
    let (uc, frac) = centered(l, u)?;
    let on_lattice = frac.iter().all(|&x| x == T::zero());
    let d = l.dim();
    let pi = T::PI();
    let neg_u: Vec<T> = uc.iter().map(|&x| -x).collect();
    let origin = vec![T::zero(); d];
    let eps = T::epsilon();

    let mut target = 0.25 * rtol.to_f64_lossy();
    let mut best: Option<ThetaResult<T>> = None;
    for _ in 0..MAX_ROUNDS {
        let gamma = barvinok_gamma(target, d);
        let kappa = T::lit(barvinok_kappa(gamma, d));
        let r2 = T::lit(d as f64 * gamma) / alpha;
        let shifted = l.ball_points(&neg_u, r2)?;
        let s: T = shifted.iter().fold(T::zero(), |acc, (_, n2)| acc + (-pi * alpha * *n2).exp());
        let (s0, n0) = if on_lattice {
            (s, 0)
        } else {
            let pts = l.ball_points(&origin, r2)?;
            (pts.iter().fold(T::zero(), |acc, (_, n2)| acc + (-pi * alpha * *n2).exp()), pts.len())
        };
        let theta_upper = s0 / (T::one() - kappa);
        let n = shifted.len();
        let err = kappa * theta_upper + T::from_usize_lossy(n + 1) * eps * s;
        let res = ThetaResult { value: s, abs_error: err, method: Method::Direct, points_summed: n + n0 };
        let ok = err <= rtol * s;
        best = Some(res);
        if ok {
            break;
        }
        let want = if s > T::zero() { (rtol * s / theta_upper).to_f64_lossy() * 0.25 } else { target * 1e-20 };
        target = want.min(target * 1e-2).max(1e-300);
        if target <= 1e-300 {
            break;
        }
    }
    let res = best.expect("at least one round");
    if !(res.value > T::zero()) {
        return Err(ThetaError::Refused(format!("theta value underflows at alpha = {alpha}")));
    }
    Ok(res)
}

pub fn theta_poisson<T: Scalar>(l: &BravaisLattice<T>, u: &[T], alpha: T, rtol: T) -> Result<ThetaResult<T>> {
    check(alpha.to_f64_lossy(), rtol.to_f64_lossy())?;
    let (_, frac) = centered(l, u)?;
    let ld = dual(l);
    let d = l.dim();
    let pi = T::PI();
    let two_pi = pi + pi;
    let beta = T::one() / alpha;
    let pref = alpha.powf(-T::lit(d as f64 * 0.5)) / l.covolume();
    let origin = vec![T::zero(); d];
    let eps = T::epsilon();

    let mut target = 0.25 * rtol.to_f64_lossy();
    let mut best: Option<ThetaResult<T>> = None;
    for _ in 0..MAX_ROUNDS {
        let gamma = barvinok_gamma(target, d);
        let kappa = T::lit(barvinok_kappa(gamma, d));
        let r2 = T::lit(d as f64 * gamma) / beta;
        let pts = ld.ball_points(&origin, r2)?;
        let mut s = T::zero();
        let mut s0 = T::zero();
        for (k, n2) in &pts {
            let w = (-pi * beta * *n2).exp();
            // s·u = k·c exactly, since the dual basis is the inverse transpose
            let phase = k.iter().zip(&frac).fold(T::zero(), |a, (&ki, &ci)| a + T::from_i64_lossy(ki) * ci);
            let phase = phase - phase.round();
            s += w * (two_pi * phase).cos();
            s0 += w;
        }
        let theta_upper = s0 / (T::one() - kappa);
        let n = pts.len();
        let err = kappa * theta_upper + T::from_usize_lossy(n + 1) * T::lit(4.0) * eps * s0;
        let res = ThetaResult { value: pref * s, abs_error: pref * err, method: Method::Poisson, points_summed: n };
        let ok = err <= rtol * s;
        best = Some(res);
        if ok {
            break;
        }
        let roundoff = T::from_usize_lossy(n + 1) * T::lit(4.0) * eps * s0;
        if roundoff > rtol * s.abs() {
            break;
        }
        let want = (rtol * s.abs() / theta_upper).to_f64_lossy() * 0.25;
        target = want.min(target * 1e-2).max(1e-300);
    }
    let res = best.expect("at least one round");
    if !(res.value > res.abs_error) {
        return Err(ThetaError::Refused(format!(
            "dual cosine sum cancels below its error bound at alpha = {alpha}"
        )));
    }
    Ok(res)
}

/// θ_{Λ+u}(α) − θ_{Λ+v}(α) with an error bound relative to the difference.
///
/// In the dual regime the k = 0 terms cancel exactly and the remaining cosine
/// differences are summed as −2 sin(π(a+b)) sin(π(a−b)), so a difference far
/// below the rounding level of either value is still resolved.
pub fn theta_shift_difference<T: Scalar>(
    l: &BravaisLattice<T>,
    u: &[T],
    v: &[T],
    alpha: T,
    rtol: T,
) -> Result<ThetaResult<T>> {
    check(alpha.to_f64_lossy(), rtol.to_f64_lossy())?;
    if alpha * l.lambda_min() >= T::one() {
        let a = theta(l, u, alpha, rtol)?;
        let b = theta(l, v, alpha, rtol)?;
        let value = a.value - b.value;
        return Ok(ThetaResult {
            value,
            abs_error: a.abs_error + b.abs_error + T::epsilon() * value.abs(),
            method: a.method,
            points_summed: a.points_summed + b.points_summed,
        });
    }
    let (_, fu) = centered(l, u)?;
    let (_, fv) = centered(l, v)?;
    if fu.iter().zip(&fv).all(|(&a, &b)| {
        let d = a - b;
        (d - d.round()).abs() <= T::lit(LATTICE_TOL)
    }) {
        return Ok(ThetaResult { value: T::zero(), abs_error: T::zero(), method: Method::Poisson, points_summed: 0 });
    }
    let ld = dual(l);
    let d = l.dim();
    let pi = T::PI();
    let beta = T::one() / alpha;
    let pref = alpha.powf(-T::lit(d as f64 * 0.5)) / l.covolume();
    let origin = vec![T::zero(); d];
    let eps = T::epsilon();
    let phase = |k: &[i64], c: &[T]| {
        let p = k.iter().zip(c).fold(T::zero(), |a, (&ki, &ci)| a + T::from_i64_lossy(ki) * ci);
        p - p.round()
    };

    let mut target = 0.25 * rtol.to_f64_lossy();
    let mut best: Option<ThetaResult<T>> = None;
    for _ in 0..MAX_ROUNDS {
        let gamma = barvinok_gamma(target, d);
        let kappa = T::lit(barvinok_kappa(gamma, d));
        let r2 = T::lit(d as f64 * gamma) / beta;
        let pts = ld.ball_points(&origin, r2)?;
        let mut s = T::zero();
        let mut s0 = T::zero();
        let mut s_abs = T::zero();
        for (k, n2) in &pts {
            let w = (-pi * beta * *n2).exp();
            s0 += w;
            if k.iter().all(|&x| x == 0) {
                continue;
            }
            let (a, b) = (phase(k, &fu), phase(k, &fv));
            let term = -T::lit(2.0) * w * (pi * (a + b)).sin() * (pi * (a - b)).sin();
            s += term;
            s_abs += term.abs();
        }
        let theta_upper = s0 / (T::one() - kappa);
        let n = pts.len();
        let roundoff = T::from_usize_lossy(n + 1) * T::lit(8.0) * eps * s_abs;
        let err = T::lit(2.0) * kappa * theta_upper + roundoff;
        best = Some(ThetaResult { value: pref * s, abs_error: pref * err, method: Method::Poisson, points_summed: n });
        if s != T::zero() && (err <= rtol * s.abs() || roundoff > rtol * s.abs()) {
            break;
        }
        // with no nonzero dual point in the ball yet, widen it
        let want = if s == T::zero() { 0.0 } else { (rtol * s.abs() / theta_upper).to_f64_lossy() * 0.125 };
        target = want.min(target * 1e-2).max(1e-300);
    }
    Ok(best.expect("at least one round"))
}

type Summer<T> = fn(&BravaisLattice<T>, &[T], T, T) -> Result<ThetaResult<T>>;

/// Chooses the summation route by α·λ_min(Gram), falling back to the other
/// route when the preferred one cannot certify `rtol`.
pub fn theta<T: Scalar>(l: &BravaisLattice<T>, u: &[T], alpha: T, rtol: T) -> Result<ThetaResult<T>> {
    check(alpha.to_f64_lossy(), rtol.to_f64_lossy())?;
    let prefer_direct = alpha * l.lambda_min() >= T::one();
    let (first, second): (Summer<T>, Summer<T>) = if prefer_direct {
        (theta_direct::<T>, theta_poisson::<T>)
    } else {
        (theta_poisson::<T>, theta_direct::<T>)
    };
    let a = first(l, u, alpha, rtol);
    if let Ok(r) = &a {
        if r.abs_error <= rtol * r.value {
            return a;
        }
    }
    let b = second(l, u, alpha, rtol);
    match (a, b) {
        (Ok(x), Ok(y)) => Ok(if y.rel_error() < x.rel_error() { y } else { x }),
        (Ok(x), Err(_)) => Ok(x),
        (Err(_), Ok(y)) => Ok(y),
        (Err(e), Err(_)) => Err(e),
    }
}

/// ρ_{Λ,u}(α) = θ_{Λ+u}(α)/θ_Λ(α). Exactly 1 on Λ; values that round above 1 are clamped.
pub fn rho<T: Scalar>(l: &BravaisLattice<T>, u: &[T], alpha: T, rtol: T) -> Result<T> {
    check(alpha.to_f64_lossy(), rtol.to_f64_lossy())?;
    if l.contains(u, T::lit(1e-9))? {
        return Ok(T::one());
    }
    let num = theta(l, u, alpha, rtol)?;
    let den = theta(l, &vec![T::zero(); l.dim()], alpha, rtol)?;
    Ok((num.value / den.value).min(T::one()))
}

/// Pair interaction f(r) of the squared distance r, with declared decay f(r) = O(r^{-s}).
pub struct RadialInteraction<T> {
    evaluator: Box<dyn Fn(T) -> T + Send + Sync>,
    decay_exponent: T,
}

impl<T: Scalar> RadialInteraction<T> {
    pub fn new(evaluator: impl Fn(T) -> T + Send + Sync + 'static, decay_exponent: T) -> Self {
        Self { evaluator: Box::new(evaluator), decay_exponent }
    }

    pub fn gaussian(alpha: T) -> Self {
        // any finite exponent is a valid declaration for a Gaussian
        Self::new(move |r: T| (-T::PI() * alpha * r).exp(), T::lit(64.0))
    }

    pub fn eval(&self, r: T) -> T {
        (self.evaluator)(r)
    }

    pub fn decay_exponent(&self) -> T {
        self.decay_exponent
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialEnergy<T> {
    /// Partial sum over |p+u| ≤ radius.
    pub partial: T,
    /// Integral-comparison estimate of the remainder.
    pub tail_estimate: T,
    pub points_summed: usize,
}

impl<T: Scalar> RadialEnergy<T> {
    pub fn total(&self) -> T {
        self.partial + self.tail_estimate
    }
}

fn sphere_area(d: usize) -> f64 {
    // S_{d-1} = 2π^{d/2}/Γ(d/2)
    let pi = std::f64::consts::PI;
    match d {
        1 => 2.0,
        2 => 2.0 * pi,
        _ => sphere_area(d - 2) * 2.0 * pi / (d as f64 - 2.0),
    }
}

pub fn radial_energy<T: Scalar>(
    l: &BravaisLattice<T>,
    u: &[T],
    f: &RadialInteraction<T>,
    radius: T,
    rtol: T,
) -> Result<RadialEnergy<T>> {
    let d = l.dim();
    let half_d = T::lit(d as f64 * 0.5);
    if !(f.decay_exponent > half_d) {
        return Err(ThetaError::Refused(format!(
            "decay exponent {} does not exceed d/2 = {}; the sum may diverge",
            f.decay_exponent, half_d
        )));
    }
    if !(radius > T::zero()) {
        return param("radius must be positive");
    }
    let (uc, _) = centered(l, u)?;
    let neg_u: Vec<T> = uc.iter().map(|&x| -x).collect();
    let r2 = radius * radius;
    let pts = l.ball_points(&neg_u, r2)?;
    let mut partial = T::zero();
    for (_, n2) in &pts {
        let v = f.eval(*n2);
        if v < T::zero() {
            return param("radial interaction must be non-negative");
        }
        partial += v;
    }
    let s = f.decay_exponent;
    let two = T::lit(2.0);
    let tail = T::lit(sphere_area(d)) * f.eval(r2) * radius.powi(d as i32) / ((two * s - two * half_d) * l.covolume());
    if tail > rtol * partial {
        return Err(ThetaError::Refused(format!(
            "radius {radius} too small: tail estimate {tail} exceeds rtol times the partial sum {partial}"
        )));
    }
    Ok(RadialEnergy { partial, tail_estimate: tail, points_summed: pts.len() })
}

/// E_δ(Λ,u) = θ_Λ(α) + δ·θ_{Λ+u}(α).
pub fn ho_mueller_energy<T: Scalar>(l: &BravaisLattice<T>, u: &[T], delta: T, alpha: T, rtol: T) -> Result<ThetaResult<T>> {
    if !(delta.abs() <= T::one()) {
        return param(format!("delta must lie in [-1, 1], got {delta}"));
    }
    let a = theta(l, &vec![T::zero(); l.dim()], alpha, rtol)?;
    if delta == T::zero() {
        return Ok(a);
    }
    let b = theta(l, u, alpha, rtol)?;
    Ok(ThetaResult {
        value: a.value + delta * b.value,
        abs_error: a.abs_error + delta.abs() * b.abs_error,
        method: a.method,
        points_summed: a.points_summed + b.points_summed,
    })
}

/// θ of the perturbed configuration {p + u(p)} divided by θ_{Λ₀}(α).
pub fn degeneracy_ratio<T: Scalar>(
    l0: &BravaisLattice<T>,
    perturbation: &dyn Fn(&[T]) -> Vec<T>,
    bound: T,
    alpha: T,
    rtol: T,
) -> Result<T> {
    check(alpha.to_f64_lossy(), rtol.to_f64_lossy())?;
    if !(bound >= T::zero()) || !bound.is_finite() {
        return Err(ThetaError::Refused("perturbation bound must be finite".into()));
    }
    let d = l0.dim();
    let pi = T::PI();
    // beyond |p| ≥ 2·bound we have |p + u(p)| ≥ |p|/2, so the remainder is
    // dominated by the Barvinok tail of θ_{Λ₀}(α/4)
    let quarter = alpha * T::lit(0.25);
    let gamma = barvinok_gamma(0.1 * rtol.to_f64_lossy(), d);
    let kappa = T::lit(barvinok_kappa(gamma, d));
    let r2 = (T::lit(d as f64 * gamma) / quarter).max(T::lit(4.0) * bound * bound);
    let pts = l0.ball_points(&vec![T::zero(); d], r2)?;
    let mut s = T::zero();
    let mut s_quarter = T::zero();
    for (z, n2) in &pts {
        let p = l0.point(z);
        let du = perturbation(&p);
        if du.len() != d {
            return param("perturbation returned a vector of the wrong dimension");
        }
        if norm_sq(&du).sqrt() > bound * (T::one() + T::lit(1e-12)) {
            return Err(ThetaError::Refused("perturbation exceeds its declared bound".into()));
        }
        let q: Vec<T> = p.iter().zip(&du).map(|(&a, &b)| a + b).collect();
        s += (-pi * alpha * norm_sq(&q)).exp();
        s_quarter += (-pi * quarter * *n2).exp();
    }
    let tail = kappa * s_quarter / (T::one() - kappa);
    let base = theta(l0, &vec![T::zero(); d], alpha, rtol)?;
    if tail > rtol * s {
        return Err(ThetaError::Refused("perturbed sum could not be certified".into()));
    }
    Ok(s / base.value)
}

/// Lower bound θ_{Λ+u}(α) ≥ Π θ₂(α c_i²), with c_i from the Iwasawa factor of the basis.
pub fn iwasawa_lower_bound<T: Scalar>(l: &BravaisLattice<T>, alpha: T, rtol: T) -> Result<T> {
    let f = iwasawa_qdt(l.basis())?;
    let mut prod = T::one();
    for &c in &f.d_diag {
        let c = c * f.scale;
        prod *= jacobi_theta(JacobiKind::Two, alpha * c * c, 0, rtol)?.value;
    }
    Ok(prod)
}
