//! Bracketed scalar root refinement.

use crate::error::{Error, Result};

/// Brent's method on a sign-changing bracket `[a, b]`.
///
/// `fa` and `fb` are the function values at the ends; they must have opposite
/// signs (or one of them must be zero). Iterates until the bracket shrinks to a
/// few ulps of the root, so the returned abscissa is accurate to full double
/// precision.
pub fn brent<F>(mut f: F, a: f64, b: f64, fa: f64, fb: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::Bracketing { lo: a, hi: b, what: format!("f(a) = {fa}, f(b) = {fb}") });
    }

    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + f64::MIN_POSITIVE;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cosine_root() {
        let r = brent(|t| t.cos() - 0.2, 0.0, 3.0, 0.8, 3f64.cos() - 0.2).unwrap();
        assert!((r - 0.2f64.acos()).abs() < 1e-15);
    }

    #[test]
    fn rejects_same_sign() {
        assert!(brent(|t| t * t + 1.0, -1.0, 1.0, 2.0, 2.0).is_err());
    }

    #[test]
    fn endpoint_roots() {
        assert_eq!(brent(|t| t, 0.0, 1.0, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(brent(|t| t - 1.0, 0.0, 1.0, -1.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn flat_cubic() {
        let r = brent(|t| (t - 0.3).powi(3), 0.0, 1.0, -0.027, 0.343).unwrap();
        assert!((r - 0.3).abs() < 1e-5);
    }
}
