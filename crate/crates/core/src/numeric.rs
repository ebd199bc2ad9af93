//! Scalar numeric plumbing: adaptive Gauss-Kronrod quadrature and
//! Brent root bracketing. Both are deterministic and allocation-free.

use crate::error::{Error, Result};

// 15-point Kronrod nodes on [0, 1] side (symmetric), with the embedded
// 7-point Gauss rule. Standard QUADPACK abscissae.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss-Kronrod 15(7) panel: returns (estimate, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center);
    let mut res_gauss = WG[3] * fc;
    let mut res_kronrod = WGK[7] * fc;

    for (j, &x) in XGK.iter().enumerate().take(7) {
        let dx = half * x;
        let fsum = f(center - dx) + f(center + dx);
        res_kronrod += WGK[j] * fsum;
        if j % 2 == 1 {
            res_gauss += WG[j / 2] * fsum;
        }
    }

    let value = res_kronrod * half;
    let err = ((res_kronrod - res_gauss) * half).abs();
    // The classical (200*err)^1.5 sharpening; keeps the estimate honest
    // without being wildly pessimistic on smooth integrands.
    let err = if err != 0.0 {
        let scale = (200.0 * err / value.abs().max(f64::MIN_POSITIVE)).powf(1.5);
        if scale < 1.0 {
            err * scale.max(f64::EPSILON)
        } else {
            err
        }
    } else {
        0.0
    };
    (value, err.max(f64::EPSILON * value.abs()))
}

const MAX_DEPTH: u32 = 52;

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> (f64, f64) {
    let (value, err) = gk15(f, a, b);
    if err <= tol || depth >= MAX_DEPTH || (b - a).abs() < f64::EPSILON * a.abs().max(b.abs()) {
        return (value, err);
    }
    let mid = 0.5 * (a + b);
    let (vl, el) = adapt(f, a, mid, 0.5 * tol, depth + 1);
    let (vr, er) = adapt(f, mid, b, 0.5 * tol, depth + 1);
    (vl + vr, el + er)
}

/// Adaptive estimate of the integral of `f` over the finite interval
/// `[lo, hi]` with absolute-error target `tol`. Callers map infinite
/// endpoints to finite ones via quantile-based truncation.
pub fn quadrature<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::invalid_input(format!(
            "integration bounds must satisfy lo < hi, got [{lo}, {hi}]"
        )));
    }
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid_input("integration bounds must be finite"));
    }
    let (value, err) = adapt(&f, lo, hi, tol.max(f64::MIN_POSITIVE), 0);
    if err > tol.max(1e-14 * value.abs()) * 50.0 {
        return Err(Error::numeric(
            format!("quadrature error estimate {err:.3e} above tolerance {tol:.3e}"),
            Some(value),
        ));
    }
    Ok(value)
}

/// Brent's method on `[lo, hi]`; needs `g(lo)` and `g(hi)` of opposite
/// sign. Converges to a bracket of width `tol` (plus machine slack).
pub fn find_root<F: Fn(f64) -> f64>(g: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (g(a), g(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoBracket { lo, hi });
    }

    let (mut c, mut fc) = (a, fa);
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
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // inverse quadratic interpolation / secant
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * xm * s, 1.0 - s)
            } else {
                let q = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0)),
                    (q - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1 * xm.signum() };
        fb = g(b);
    }
    Err(Error::numeric("root finder exceeded iteration budget", Some(b)))
}

/// Expands `[lo, hi]` geometrically around itself until `g` changes sign,
/// then hands off to [`find_root`]. `g` must be monotone for the result
/// to be the unique root.
pub fn find_root_expanding<F: Fn(f64) -> f64>(
    g: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<f64> {
    let mut flo = g(lo);
    let mut fhi = g(hi);
    for _ in 0..128 {
        if flo == 0.0 {
            return Ok(lo);
        }
        if fhi == 0.0 {
            return Ok(hi);
        }
        if flo.signum() != fhi.signum() {
            return find_root(g, lo, hi, tol);
        }
        let width = (hi - lo).max(1.0);
        if flo.abs() < fhi.abs() {
            lo -= width;
            flo = g(lo);
        } else {
            hi += width;
            fhi = g(hi);
        }
    }
    Err(Error::NoBracket { lo, hi })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_integral() {
        assert!((quadrature(|_| 1.0, 0.0, 1.0, 1e-12).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_density_normalizes() {
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        // Truncation at the 1e-14 quantiles leaves ~2e-14 of mass outside.
        let v = quadrature(phi, -7.65, 7.65, 1e-12).unwrap();
        assert!((v - 1.0).abs() < 1e-10, "got {v}");
    }

    #[test]
    fn exponential_tail() {
        let v = quadrature(|x: f64| (-x).exp(), 0.0, 40.0, 1e-10).unwrap();
        assert!((v - 1.0).abs() < 1e-8);
    }

    #[test]
    fn spiky_integrand() {
        // narrow bump: adaptive refinement must find it
        let f = |x: f64| (-(x - 3.0) * (x - 3.0) * 1e4).exp();
        let exact = (std::f64::consts::PI / 1e4).sqrt();
        let v = quadrature(f, 0.0, 100.0, 1e-12).unwrap();
        assert!((v - exact).abs() < 1e-10);
    }

    #[test]
    fn invalid_bounds_rejected() {
        assert!(quadrature(|_| 1.0, 1.0, 0.0, 1e-8).is_err());
        assert!(quadrature(|_| 1.0, 0.0, f64::INFINITY, 1e-8).is_err());
    }

    #[test]
    fn root_linear() {
        let r = find_root(|x| x - 0.3, 0.0, 1.0, 1e-12).unwrap();
        assert!((r - 0.3).abs() < 1e-12);
    }

    #[test]
    fn root_sqrt2() {
        let r = find_root(|x| x * x - 2.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((r - 1.4142135623730951).abs() < 1e-10);
    }

    #[test]
    fn root_needs_bracket() {
        assert!(matches!(
            find_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12),
            Err(Error::NoBracket { .. })
        ));
    }

    #[test]
    fn expanding_bracket_finds_far_root() {
        let r = find_root_expanding(|x| x - 523.25, 0.0, 1.0, 1e-10).unwrap();
        assert!((r - 523.25).abs() < 1e-8);
    }
}
