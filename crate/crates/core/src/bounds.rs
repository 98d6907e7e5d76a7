//! Closed-form tail quantities for an exactly normal estimator: the
//! probability that the clamp is active, the upper bound on the clamped MSE,
//! and the exact clamped MSE.

use std::f64::consts::{FRAC_2_PI, PI};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numeric::{integrate, mills_ratio, std_normal_cdf, std_normal_pdf, QuadratureSettings};

/// Relative tolerance of the quadrature route in [`exact_clamp_mse`].
pub const EXACT_MSE_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub n: u64,
    pub mismatch_prob: f64,
    pub mse_bound: f64,
    pub n_times_bound: f64,
    pub exact_mse: f64,
}

/// Standardized distance `a = c sqrt(n) / sigma` from the mean to the band edge.
#[inline]
fn edge(c: f64, sigma: f64, n: u64) -> f64 {
    c * (n as f64).sqrt() / sigma
}

/// `2 Phi(-c sqrt(n) / sigma)`: probability that an exactly normal estimator
/// with sd `sigma / sqrt(n)` lands outside the band of half-width `c`.
pub fn mismatch_probability(c: f64, sigma: f64, n: u64) -> f64 {
    2.0 * std_normal_cdf(-edge(c, sigma, n))
}

/// `B(n) = c sigma sqrt(2/pi) exp(-c^2 n / (2 sigma^2)) / sqrt(n) + 2 sigma^2 Phi(-c sqrt(n)/sigma) / n`.
pub fn mse_upper_bound(c: f64, sigma: f64, n: u64) -> f64 {
    let nf = n as f64;
    let a = edge(c, sigma, n);
    let first = c * sigma * FRAC_2_PI.sqrt() * (-0.5 * c * c * nf / (sigma * sigma)).exp() / nf.sqrt();
    let second = 2.0 * sigma * sigma * std_normal_cdf(-a) / nf;
    first + second
}

/// `ln B(n)`, finite far past the point where `B(n)` itself underflows.
///
/// Both terms of `B` share the factor `exp(-a^2/2)`; the remainder is
/// `c sigma sqrt(2/pi) / sqrt(n) + 2 sigma^2 R(a) / (n sqrt(2 pi))` with `R`
/// the Mills ratio.
pub fn ln_mse_upper_bound(c: f64, sigma: f64, n: u64) -> f64 {
    let nf = n as f64;
    let a = edge(c, sigma, n);
    let scale = c * sigma * FRAC_2_PI.sqrt() / nf.sqrt() + 2.0 * sigma * sigma * mills_ratio(a) / (nf * (2.0 * PI).sqrt());
    -0.5 * a * a + scale.ln()
}

/// `E[(theta - clamp(theta))^2]` for `theta ~ N(mu, sigma^2 / n)` by
/// quadrature.
///
/// With `s = sigma / sqrt(n)`, `a = c / s` and the shift `z = a + u`, the
/// integral `2 int_c^inf (x - c)^2 phi_s(x) dx` becomes
/// `2 s^2 phi(a) int_0^inf u^2 exp(-a u - u^2 / 2) du`, which has no
/// cancellation and no underflow inside the integral.
pub fn exact_clamp_mse(c: f64, sigma: f64, n: u64) -> Result<f64> {
    let s = sigma / (n as f64).sqrt();
    let a = c / s;
    let scale = 2.0 * s * s * std_normal_pdf(a);
    if scale == 0.0 {
        return Ok(0.0);
    }
    // integrand below exp(-800) past this point
    let upper = -a + (a * a + 1600.0).sqrt();
    let q = integrate(
        |u| u * u * (-a * u - 0.5 * u * u).exp(),
        0.0,
        upper,
        &[],
        QuadratureSettings::relative(EXACT_MSE_REL_TOL),
    )?;
    Ok(scale * q.value)
}

/// The same quantity through truncated-normal moments:
/// `2 s^2 [(1 + a^2) Phi(-a) - a phi(a)]`.
pub fn exact_clamp_mse_closed_form(c: f64, sigma: f64, n: u64) -> f64 {
    let s = sigma / (n as f64).sqrt();
    let a = c / s;
    2.0 * s * s * ((1.0 + a * a) * std_normal_cdf(-a) - a * std_normal_pdf(a))
}

pub fn bound_row(c: f64, sigma: f64, n: u64) -> Result<BoundRow> {
    let mse_bound = mse_upper_bound(c, sigma, n);
    Ok(BoundRow {
        n,
        mismatch_prob: mismatch_probability(c, sigma, n),
        mse_bound,
        n_times_bound: n as f64 * mse_bound,
        exact_mse: exact_clamp_mse(c, sigma, n)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mismatch_values() {
        // 2 Phi(-2), 2 Phi(-3) from a 40-digit evaluation
        assert!((mismatch_probability(1.0, 1.0, 4) - 0.0455002638963584).abs() < 1e-15);
        assert!((mismatch_probability(1.0, 1.0, 9) - 0.00269979606326019).abs() < 1e-16);
        assert!((mismatch_probability(1e-12, 1.0, 4) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn bound_at_sixteen() {
        // 6.69151128824427e-5 + 3.95890522913999e-6 (40-digit evaluation)
        let b = mse_upper_bound(1.0, 1.0, 16);
        assert!((b - 7.08740181115826660e-5).abs() / 7.0874018e-5 < 1e-13, "B(16) = {b}");
    }

    #[test]
    fn n_times_bound_tiny_at_hundred() {
        let nb = 100.0 * mse_upper_bound(1.0, 1.0, 100);
        assert!(nb < 1e-18);
        assert!((nb - 1.5541594313896049214e-21).abs() / 1.55e-21 < 1e-12);
    }

    #[test]
    fn log_bound_matches_direct() {
        for n in [1, 4, 16, 100, 400] {
            let direct = mse_upper_bound(1.0, 1.0, n).ln();
            let via_log = ln_mse_upper_bound(1.0, 1.0, n);
            assert!((direct - via_log).abs() < 1e-12, "n = {n}");
        }
        assert!(ln_mse_upper_bound(1.0, 1.0, 10_000).is_finite());
    }

    #[test]
    fn exact_mse_reference_values() {
        // 40-digit evaluation of 2 int_c^inf (x - c)^2 phi_s(x) dx
        let reference = [
            (1, 0.15067956668754150606),
            (2, 0.028395061865130344318),
            (4, 0.0028843633572599660501),
            (8, 0.000095705515155160603405),
            (9, 0.000045207795663760831047),
        ];
        for (n, want) in reference {
            let got = exact_clamp_mse(1.0, 1.0, n).unwrap();
            assert!(((got - want) / want).abs() < 1e-10, "n = {n}: {got} vs {want}");
        }
    }

    #[test]
    fn two_routes_agree() {
        let q = exact_clamp_mse(1.0, 1.0, 4).unwrap();
        let cf = exact_clamp_mse_closed_form(1.0, 1.0, 4);
        assert!(((q - cf) / cf).abs() < 1e-8);
    }

    #[test]
    fn exact_below_bound_on_grid() {
        for c in [0.5, 1.0, 2.0] {
            for sigma in [0.5, 1.0, 2.0] {
                for n in [1, 4, 16, 64] {
                    let exact = exact_clamp_mse(c, sigma, n).unwrap();
                    let bound = mse_upper_bound(c, sigma, n);
                    assert!(exact > 0.0 && exact <= bound, "c={c} sigma={sigma} n={n}");
                }
            }
        }
        let e1 = exact_clamp_mse(1.0, 1.0, 1).unwrap();
        assert!(e1 > 0.0 && e1 < 2.0 * std_normal_cdf(-1.0));
    }

    #[test]
    fn far_tail_underflows_to_zero_cleanly() {
        assert_eq!(exact_clamp_mse(1.0, 1.0, 10_000).unwrap(), 0.0);
        assert_eq!(mse_upper_bound(1.0, 1.0, 10_000), 0.0);
    }
}
