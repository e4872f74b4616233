//! One-dimensional root finding and minimization.

use crate::error::{Result, ThetaError};
use crate::scalar::Scalar;

/// Root of a continuous `f` with a sign change on [lo, hi], to absolute width `tol`.
pub fn bisect<T: Scalar>(mut f: impl FnMut(T) -> Result<T>, mut lo: T, mut hi: T, tol: T) -> Result<T> {
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == T::zero() {
        return Ok(lo);
    }
    if fhi == T::zero() {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(ThetaError::Bracket(format!(
            "no sign change on [{lo}, {hi}]: f = {flo} and {fhi}"
        )));
    }
    let half = T::lit(0.5);
    for _ in 0..400 {
        let mid = half * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if fm == T::zero() {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(half * (lo + hi))
}

/// Minimizer of a unimodal `f` on [lo, hi] by golden-section search.
pub fn golden_section_min<T: Scalar>(mut f: impl FnMut(T) -> Result<T>, mut lo: T, mut hi: T, tol: T) -> Result<T> {
    let invphi = (T::lit(5.0).sqrt() - T::one()) * T::lit(0.5);
    let mut x1 = hi - invphi * (hi - lo);
    let mut x2 = lo + invphi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..400 {
        if hi - lo <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - invphi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + invphi * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(T::lit(0.5) * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x: f64| Ok(x * x - 2.0), 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        assert!(bisect(|x: f64| Ok(x * x + 1.0), 0.0, 2.0, 1e-14).is_err());
    }

    #[test]
    fn golden_finds_parabola_min() {
        let r = golden_section_min(|x: f64| Ok((x - 0.3) * (x - 0.3)), -1.0, 2.0, 1e-9).unwrap();
        assert!((r - 0.3).abs() < 1e-8);
    }
}
