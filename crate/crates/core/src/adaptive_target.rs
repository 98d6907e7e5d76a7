//! The heterogeneity margin, the clamped data-adaptive target, and an explicit
//! nonnegative weighting that realizes any clamped target as a weighted mean
//! of the effect law.

use serde::{Deserialize, Serialize};

use crate::distributions::{asymptotic_sd, EffectDistribution, PopulationSpec, Tail};
use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::numeric::bisect;

/// Residual tolerance for weightings of atomic laws.
pub const ATOMIC_WEIGHT_TOL: f64 = 1e-12;
/// Residual tolerance for weightings of continuous (quadrature-backed) laws.
pub const CONTINUOUS_WEIGHT_TOL: f64 = 1e-9;
const MAX_BISECTIONS: usize = 200;
/// Interior targets are solved to this accuracy for every law; the continuous
/// tolerance is left for the quadrature used when verifying.
const SOLVE_TOL: f64 = 1e-12;

/// Population mean of the effect, heterogeneity margin, and the asymptotic sd
/// of the estimator in play.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetContext {
    pub mu: f64,
    pub c: f64,
    pub sigma: f64,
}

impl TargetContext {
    pub fn new(mu: f64, c: f64, sigma: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite() && mu.is_finite()) {
            return Err(Error::InvalidConfig {
                path: "target".into(),
                reason: format!("need finite mu and c >= 0, got mu = {mu}, c = {c}"),
            });
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::DegenerateVariance);
        }
        Ok(Self { mu, c, sigma })
    }

    /// Oracle context for `estimator` run on `pop`. `c` may be zero here;
    /// operations that need Assumption 1 check it themselves.
    pub fn for_population(pop: &PopulationSpec, estimator: &EstimatorKind) -> Result<Self> {
        Self::new(pop.effect.mean(), pop.effect.margin(), asymptotic_sd(pop, estimator)?)
    }

    pub fn band(&self) -> (f64, f64) {
        (self.mu - self.c, self.mu + self.c)
    }
}

/// `c = min(sup - mean, mean - inf)` from the exact support and mean.
pub fn heterogeneity_margin(dist: &EffectDistribution) -> Result<f64> {
    let c = dist.margin();
    if c > 0.0 {
        Ok(c)
    } else {
        Err(Error::DegenerateEffects)
    }
}

/// Three-case clamp with no margin check; `c = 0` collapses the band to `mu`.
#[inline]
pub fn band_target(theta_hat: f64, mu: f64, c: f64) -> f64 {
    let d = theta_hat - mu;
    if d.abs() <= c {
        theta_hat
    } else if d > c {
        mu + c
    } else {
        mu - c
    }
}

/// `sign(d) * max(0, |d| - c)` for `d = theta_hat - mu`: the error of
/// `theta_hat` against the clamped target, written in terms of the error
/// against `mu`.
#[inline]
pub fn signed_gap(err_pop: f64, c: f64) -> f64 {
    let excess = (err_pop.abs() - c).max(0.0);
    if err_pop < 0.0 {
        -excess
    } else {
        excess
    }
}

/// The data-adaptive target: `theta_hat` itself within `c` of `mu`, else the
/// nearer band edge.
pub fn clamp_target(theta_hat: f64, ctx: &TargetContext) -> Result<f64> {
    if ctx.c <= 0.0 {
        return Err(Error::DegenerateEffects);
    }
    Ok(band_target(theta_hat, ctx.mu, ctx.c))
}

/// `|theta_hat - clamp_target(theta_hat)|`, computed as `max(0, |theta_hat - mu| - c)`.
pub fn clamp_gap(theta_hat: f64, ctx: &TargetContext) -> Result<f64> {
    if ctx.c <= 0.0 {
        return Err(Error::DegenerateEffects);
    }
    Ok(((theta_hat - ctx.mu).abs() - ctx.c).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiltDirection {
    Up,
    Down,
    Flat,
}

/// Indicator tilt `w(t) = (1 - lambda) + lambda * 1{t >= threshold}` (up),
/// `(1 - lambda) + lambda * 1{t <= threshold}` (down), or `w = 1` (flat).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightingFunction {
    pub direction: TiltDirection,
    pub lambda: f64,
    pub threshold: f64,
}

impl WeightingFunction {
    pub fn flat(threshold: f64) -> Self {
        Self {
            direction: TiltDirection::Flat,
            lambda: 0.0,
            threshold,
        }
    }

    pub fn weight(&self, t: f64) -> f64 {
        let inside = match self.direction {
            TiltDirection::Up => t >= self.threshold,
            TiltDirection::Down => t <= self.threshold,
            TiltDirection::Flat => return 1.0,
        };
        (1.0 - self.lambda) + if inside { self.lambda } else { 0.0 }
    }

    /// Smallest weight the function takes anywhere.
    pub fn min_weight(&self) -> f64 {
        match self.direction {
            TiltDirection::Flat => 1.0,
            _ => (1.0 - self.lambda).min(1.0),
        }
    }
}

fn tolerance_for(dist: &EffectDistribution) -> f64 {
    if dist.is_atomic() {
        ATOMIC_WEIGHT_TOL
    } else {
        CONTINUOUS_WEIGHT_TOL
    }
}

/// Builds a nonnegative weighting `w` with `E[w t] / E[w] = m` for any `m` in
/// `[mean - c, mean + c]`.
///
/// For `m` above the mean the tilt points up with threshold `m` and `lambda`
/// solves the monotone map `g(lambda) = E[w t] / E[w]` by bisection; below the
/// mean it points down. When `m` is a support endpoint without mass (only
/// possible for continuous laws) no weighting hits it exactly, so the pure
/// indicator `lambda = 1` is used with its threshold pulled inside the support
/// until the weighted mean is within tolerance of `m`.
pub fn construct_weights(dist: &EffectDistribution, m: f64) -> Result<WeightingFunction> {
    let mean = dist.mean();
    if m == mean {
        return Ok(WeightingFunction::flat(m));
    }
    let c = dist.margin();
    let (lo, hi) = (mean - c, mean + c);
    if !(m >= lo && m <= hi) || c <= 0.0 {
        return Err(Error::TargetOutOfRange { target: m, lo, hi });
    }

    let tol = tolerance_for(dist);
    let (direction, tail) = if m > mean {
        (TiltDirection::Up, Tail::Upper)
    } else {
        (TiltDirection::Down, Tail::Lower)
    };
    // orientation so that the residual is nondecreasing in the search variable
    let orient = if direction == TiltDirection::Up { 1.0 } else { -1.0 };

    let tm = dist.tail_moments(m, tail);
    if tm.prob <= 0.0 {
        return boundary_weights(dist, m, direction, tail, tol);
    }

    let g = |lambda: f64| ((1.0 - lambda) * mean + lambda * tm.first_moment) / ((1.0 - lambda) + lambda * tm.prob);
    if (g(1.0) - m).abs() <= SOLVE_TOL {
        return Ok(WeightingFunction {
            direction,
            lambda: 1.0,
            threshold: m,
        });
    }
    let root = bisect(|lambda| orient * (g(lambda) - m), 0.0, 1.0, SOLVE_TOL, MAX_BISECTIONS);
    if !root.converged {
        return Err(Error::UnattainableBoundary { target: m });
    }
    Ok(WeightingFunction {
        direction,
        lambda: root.x,
        threshold: m,
    })
}

fn boundary_weights(
    dist: &EffectDistribution,
    m: f64,
    direction: TiltDirection,
    tail: Tail,
    tol: f64,
) -> Result<WeightingFunction> {
    let mean = dist.mean();
    // Conditional mean beyond threshold t; tends to m as t approaches m.
    let conditional = |t: f64| {
        let tm = dist.tail_moments(t, tail);
        if tm.prob > 0.0 {
            tm.first_moment / tm.prob
        } else {
            m
        }
    };
    let root = match direction {
        TiltDirection::Up => bisect(|t| conditional(t) - (m - 0.5 * tol), mean, m, 0.4 * tol, MAX_BISECTIONS),
        _ => bisect(|t| conditional(t) - (m + 0.5 * tol), m, mean, 0.4 * tol, MAX_BISECTIONS),
    };
    if !root.converged || root.x == m {
        return Err(Error::UnattainableBoundary { target: m });
    }
    Ok(WeightingFunction {
        direction,
        lambda: 1.0,
        threshold: root.x,
    })
}

/// `E[w t] / E[w] - m`, with both expectations taken by the distribution's
/// expectation functional.
pub fn verify_weighting(dist: &EffectDistribution, w: &WeightingFunction, m: f64) -> Result<f64> {
    let breaks = [w.threshold];
    let total = dist.expect_with_breaks(|t| w.weight(t), &breaks)?;
    let moment = dist.expect_with_breaks(|t| w.weight(t) * t, &breaks)?;
    if !(total > 0.0) {
        return Err(Error::InvalidConfig {
            path: "weighting".into(),
            reason: format!("weights have nonpositive mass {total}"),
        });
    }
    Ok(moment / total - m)
}
