//! Scalar special functions backing the kernel catalog.
//!
//! `e1`, `si` and `e2` hold ~1e-13 relative accuracy. The Bessel K
//! evaluations use the classic rational fits and stop near 1e-7, which is
//! plenty for kernels that only enter second-order-accurate convolutions.

use rustfft::num_complex::Complex;

pub(crate) const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub(crate) fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, fa, m, fm, b, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    m: f64,
    fm: f64,
    b: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // the second bound stops refinement once delta sits at the roundoff
    // level of the local sums, where subdividing can no longer help
    let noise = f64::EPSILON * (left.abs() + right.abs() + whole.abs());
    if depth == 0 || delta.abs() <= 15.0 * tol || delta.abs() <= 30.0 * noise {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1)
}

/// Exponential integral E1(x) for x > 0.
pub(crate) fn e1(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x <= 1.0 {
        // power series; terms alternate without cancellation trouble here
        let mut sum = 0.0;
        let mut term = 1.0;
        for n in 1..40 {
            term *= x / n as f64;
            let c = if n % 2 == 1 { term / n as f64 } else { -term / n as f64 };
            sum += c;
            if c.abs() < 1e-18 * sum.abs().max(1e-30) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() + sum
    } else {
        // Lentz continued fraction
        let mut b = x + 1.0;
        let mut c = 1e308;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..300 {
            let a = -(i as f64) * (i as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// E2(x) = x * integral_x^inf e^{-t}/t^2 dt, via E2 = e^{-x} - x E1(x).
/// The subtraction loses about log10(x) digits relative, which the tiny
/// absolute magnitude out there makes irrelevant.
pub(crate) fn e2(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x == 0.0 {
        return 1.0;
    }
    let scale = (-x).exp();
    if scale == 0.0 {
        return 0.0;
    }
    scale - x * e1(x)
}

/// Sine integral Si(x) = integral_0^x sin t / t dt, x >= 0.
pub(crate) fn si(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    if x <= 4.0 {
        let mut sum = x;
        let mut term = x;
        for n in 1..40 {
            let k = 2 * n;
            term *= -x * x / ((k * (k + 1)) as f64);
            let c = term / (k + 1) as f64;
            sum += c;
            if c.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        return sum;
    }
    // Si(x) = pi/2 + Im E1(ix), continued fraction in complex arithmetic
    let z = Complex::new(0.0, x);
    let mut b = z + 1.0;
    let mut c = Complex::new(1e308, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 1..300 {
        let a = -(i as f64) * (i as f64);
        b += 2.0;
        d = (d * a + b).inv();
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - Complex::new(1.0, 0.0)).norm() < 1e-16 {
            break;
        }
    }
    let e1_ix = h * Complex::new(0.0, -x).exp();
    std::f64::consts::FRAC_PI_2 + e1_ix.im
}

fn i0(x: f64) -> f64 {
    debug_assert!(x.abs() < 3.75);
    let y = (x / 3.75) * (x / 3.75);
    1.0 + y
        * (3.5156229
            + y * (3.0899424 + y * (1.2067492 + y * (0.2659732 + y * (0.360768e-1 + y * 0.45813e-2)))))
}

fn i1(x: f64) -> f64 {
    debug_assert!(x.abs() < 3.75);
    let y = (x / 3.75) * (x / 3.75);
    x * (0.5
        + y * (0.87890594
            + y * (0.51498869 + y * (0.15084934 + y * (0.2658733e-1 + y * (0.301532e-2 + y * 0.32411e-3))))))
}

/// Modified Bessel K0(x) for x > 0.
pub(crate) fn k0(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x <= 2.0 {
        let y = x * x / 4.0;
        -(x / 2.0).ln() * i0(x)
            + (-0.57721566
                + y * (0.42278420
                    + y * (0.23069756
                        + y * (0.3488590e-1 + y * (0.262698e-2 + y * (0.10750e-3 + y * 0.74e-5))))))
    } else {
        let y = 2.0 / x;
        (-x).exp() / x.sqrt()
            * (1.25331414
                + y * (-0.7832358e-1
                    + y * (0.2189568e-1
                        + y * (-0.1062446e-1
                            + y * (0.587872e-2 + y * (-0.251540e-2 + y * 0.53208e-3))))))
    }
}

/// Modified Bessel K1(x) for x > 0.
/// 1 - x K1(x), the disc integral of x K0. Assembling it from `k1` directly
/// cancels catastrophically for small x; here the leading 1 drops in algebra.
pub(crate) fn one_minus_x_k1(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x <= 2.0 {
        let y = x * x / 4.0;
        let tail = y
            * (0.15443144
                + y * (-0.67278579
                    + y * (-0.18156897
                        + y * (-0.1919402e-1 + y * (-0.110404e-2 + y * (-0.4686e-4))))));
        -(x * (x / 2.0).ln() * i1(x) + tail)
    } else {
        1.0 - x * k1(x)
    }
}

pub(crate) fn k1(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x <= 2.0 {
        let y = x * x / 4.0;
        (x / 2.0).ln() * i1(x)
            + (1.0 / x)
                * (1.0
                    + y * (0.15443144
                        + y * (-0.67278579
                            + y * (-0.18156897
                                + y * (-0.1919402e-1 + y * (-0.110404e-2 + y * (-0.4686e-4)))))))
    } else {
        let y = 2.0 / x;
        (-x).exp() / x.sqrt()
            * (1.25331414
                + y * (0.23498619
                    + y * (-0.3655620e-1
                        + y * (0.1504268e-1
                            + y * (-0.780353e-2 + y * (0.325614e-2 + y * (-0.68245e-3)))))))
    }
}
