use std::f64::consts::{FRAC_1_SQRT_2, PI};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_677_939_946_059_934_4;

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function.
///
/// Evaluated as `erfc(-x / sqrt 2) / 2`, which keeps full relative precision
/// in the left tail (down to the underflow threshold near `x = -38`) instead
/// of losing it to the cancellation in `1 - Phi(-x)`.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Mills ratio `Phi(-a) / phi(a)`.
///
/// Uses the Laplace continued fraction for `a >= 5`, where both numerator and
/// denominator are small, and the direct quotient below that.
pub fn mills_ratio(a: f64) -> f64 {
    if a < 5.0 {
        return std_normal_cdf(-a) / std_normal_pdf(a);
    }
    // R(a) = 1 / (a + 1 / (a + 2 / (a + 3 / (a + ...)))), modified Lentz.
    let tiny = 1e-300;
    let mut f = a;
    let mut c = a;
    let mut d = 0.0;
    for k in 1..500 {
        let coef = k as f64;
        d = a + coef * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = a + coef / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

/// `ln Phi(-a)`, finite for every finite `a` (no underflow in the deep tail).
pub fn ln_std_normal_tail(a: f64) -> f64 {
    if a < 5.0 {
        std_normal_cdf(-a).ln()
    } else {
        -0.5 * a * a - 0.5 * (2.0 * PI).ln() + mills_ratio(a).ln()
    }
}
