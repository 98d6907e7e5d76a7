//! Effect laws with exactly known mean and support, and the potential-outcomes
//! population that generates observable samples.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, ln_beta};

use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::numeric::{bisect, integrate, QuadratureSettings};

/// Absolute tolerance of [`EffectDistribution::expect`] for continuous laws.
pub const EXPECT_ABS_TOL: f64 = 1e-10;

/// A bounded-support law for the unit-level effect (also reused for the
/// baseline outcome `Y(0)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EffectDistribution {
    /// `a` with probability `1 - p`, `b` with probability `p`.
    TwoPoint { a: f64, b: f64, p: f64 },
    Uniform { lo: f64, hi: f64 },
    /// `lo + (hi - lo) * Beta(alpha, beta)`.
    ScaledBeta { alpha: f64, beta: f64, lo: f64, hi: f64 },
    Degenerate { value: f64 },
}

/// Which side of a threshold a tail event covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// `{t >= threshold}`
    Upper,
    /// `{t <= threshold}`
    Lower,
}

/// Probability and first partial moment of a tail event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailMoments {
    pub prob: f64,
    pub first_moment: f64,
}

impl EffectDistribution {
    pub fn two_point(a: f64, b: f64, p: f64) -> Result<Self> {
        Self::TwoPoint { a, b, p }.validated()
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::Uniform { lo, hi }.validated()
    }

    pub fn scaled_beta(alpha: f64, beta: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::ScaledBeta { alpha, beta, lo, hi }.validated()
    }

    pub fn degenerate(value: f64) -> Result<Self> {
        Self::Degenerate { value }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// Checks parameter constraints. Every admitted law has bounded support.
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidDistribution(format!(
                    "{name} must be finite (unbounded support is not admitted), got {v}"
                )))
            }
        };
        match *self {
            Self::TwoPoint { a, b, p } => {
                finite("a", a)?;
                finite("b", b)?;
                if a >= b {
                    return Err(Error::InvalidDistribution(format!("two_point needs a < b, got a = {a}, b = {b}")));
                }
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::InvalidDistribution(format!("two_point needs 0 < p < 1, got {p}")));
                }
            }
            Self::Uniform { lo, hi } => {
                finite("lo", lo)?;
                finite("hi", hi)?;
                if lo >= hi {
                    return Err(Error::InvalidDistribution(format!("uniform needs lo < hi, got [{lo}, {hi}]")));
                }
            }
            Self::ScaledBeta { alpha, beta, lo, hi } => {
                finite("alpha", alpha)?;
                finite("beta", beta)?;
                finite("lo", lo)?;
                finite("hi", hi)?;
                if !(alpha > 0.0 && beta > 0.0) {
                    return Err(Error::InvalidDistribution(format!(
                        "scaled_beta shapes must be positive, got alpha = {alpha}, beta = {beta}"
                    )));
                }
                if lo >= hi {
                    return Err(Error::InvalidDistribution(format!("scaled_beta needs lo < hi, got [{lo}, {hi}]")));
                }
            }
            Self::Degenerate { value } => finite("value", value)?,
        }
        Ok(())
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::TwoPoint { .. } => "two_point",
            Self::Uniform { .. } => "uniform",
            Self::ScaledBeta { .. } => "scaled_beta",
            Self::Degenerate { .. } => "degenerate",
        }
    }

    /// True for laws whose expectations are finite sums.
    pub fn is_atomic(&self) -> bool {
        matches!(self, Self::TwoPoint { .. } | Self::Degenerate { .. })
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::TwoPoint { a, b, p } => (1.0 - p) * a + p * b,
            Self::Uniform { lo, hi } => 0.5 * (lo + hi),
            Self::ScaledBeta { alpha, beta, lo, hi } => lo + (hi - lo) * alpha / (alpha + beta),
            Self::Degenerate { value } => value,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Self::TwoPoint { a, b, p } => p * (1.0 - p) * (b - a) * (b - a),
            Self::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
            Self::ScaledBeta { alpha, beta, lo, hi } => {
                let s = alpha + beta;
                (hi - lo) * (hi - lo) * alpha * beta / (s * s * (s + 1.0))
            }
            Self::Degenerate { .. } => 0.0,
        }
    }

    /// Exact `(inf, sup)` of the support.
    pub fn support_bounds(&self) -> (f64, f64) {
        match *self {
            Self::TwoPoint { a, b, .. } => (a, b),
            Self::Uniform { lo, hi } | Self::ScaledBeta { lo, hi, .. } => (lo, hi),
            Self::Degenerate { value } => (value, value),
        }
    }

    /// `min(sup - mean, mean - inf)`; zero for degenerate laws.
    pub fn margin(&self) -> f64 {
        let (inf, sup) = self.support_bounds();
        let mean = self.mean();
        (sup - mean).min(mean - inf).max(0.0)
    }

    fn beta_density(alpha: f64, beta: f64, lo: f64, hi: f64) -> impl Fn(f64) -> f64 {
        let width = hi - lo;
        let log_norm = ln_beta(alpha, beta) + width.ln();
        move |x: f64| {
            let u = (x - lo) / width;
            if u <= 0.0 || u >= 1.0 {
                return 0.0;
            }
            ((alpha - 1.0) * u.ln() + (beta - 1.0) * (1.0 - u).ln() - log_norm).exp()
        }
    }

    /// Distribution function `P(t <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::TwoPoint { a, b, p } => {
                if x < a {
                    0.0
                } else if x < b {
                    1.0 - p
                } else {
                    1.0
                }
            }
            Self::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Self::ScaledBeta { alpha, beta, lo, hi } => {
                let u = (x - lo) / (hi - lo);
                if u <= 0.0 {
                    0.0
                } else if u >= 1.0 {
                    1.0
                } else {
                    beta_reg(alpha, beta, u)
                }
            }
            Self::Degenerate { value } => {
                if x < value {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    /// Draws one value; the result always lies in `support_bounds()`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::TwoPoint { a, b, p } => {
                if rng.random::<f64>() < p {
                    b
                } else {
                    a
                }
            }
            Self::Uniform { lo, hi } => (lo + (hi - lo) * rng.random::<f64>()).min(hi),
            Self::ScaledBeta { alpha, beta, lo, hi } => {
                // inverse CDF; the bracket [0, 1] always holds the root
                let target: f64 = rng.random();
                let root = bisect(|u| beta_reg(alpha, beta, u) - target, 0.0, 1.0, 0.0, 64);
                (lo + (hi - lo) * root.x).clamp(lo, hi)
            }
            Self::Degenerate { value } => value,
        }
    }

    /// `E[f(t)]`. Exact sums for atomic laws; adaptive quadrature to absolute
    /// tolerance [`EXPECT_ABS_TOL`] otherwise.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        self.expect_with_breaks(f, &[])
    }

    /// As [`expect`](Self::expect), with known discontinuities of `f` passed
    /// to the quadrature as split points.
    pub fn expect_with_breaks<F: Fn(f64) -> f64>(&self, f: F, breaks: &[f64]) -> Result<f64> {
        let settings = QuadratureSettings::absolute(EXPECT_ABS_TOL);
        match *self {
            Self::TwoPoint { a, b, p } => Ok((1.0 - p) * f(a) + p * f(b)),
            Self::Degenerate { value } => Ok(f(value)),
            Self::Uniform { lo, hi } => {
                let width = hi - lo;
                Ok(integrate(|x| f(x) / width, lo, hi, breaks, settings)?.value)
            }
            Self::ScaledBeta { alpha, beta, lo, hi } => {
                if alpha >= 1.0 && beta >= 1.0 {
                    let density = Self::beta_density(alpha, beta, lo, hi);
                    return Ok(integrate(|x| f(x) * density(x), lo, hi, breaks, settings)?.value);
                }
                scaled_beta_expect(&f, alpha, beta, lo, hi, breaks, settings)
            }
        }
    }

    /// `P(event)` and `E[t; event]` for the tail event at `threshold`, in
    /// closed form (incomplete beta functions for the scaled beta law).
    pub fn tail_moments(&self, threshold: f64, tail: Tail) -> TailMoments {
        match *self {
            Self::TwoPoint { a, b, p } => {
                let mut tm = TailMoments {
                    prob: 0.0,
                    first_moment: 0.0,
                };
                for (x, w) in [(a, 1.0 - p), (b, p)] {
                    let inside = match tail {
                        Tail::Upper => x >= threshold,
                        Tail::Lower => x <= threshold,
                    };
                    if inside {
                        tm.prob += w;
                        tm.first_moment += w * x;
                    }
                }
                tm
            }
            Self::Degenerate { value } => {
                let inside = match tail {
                    Tail::Upper => value >= threshold,
                    Tail::Lower => value <= threshold,
                };
                if inside {
                    TailMoments {
                        prob: 1.0,
                        first_moment: value,
                    }
                } else {
                    TailMoments {
                        prob: 0.0,
                        first_moment: 0.0,
                    }
                }
            }
            Self::Uniform { lo, hi } => {
                let t = threshold.clamp(lo, hi);
                let (from, to) = match tail {
                    Tail::Upper => (t, hi),
                    Tail::Lower => (lo, t),
                };
                let prob = (to - from) / (hi - lo);
                TailMoments {
                    prob,
                    first_moment: prob * 0.5 * (from + to),
                }
            }
            Self::ScaledBeta { alpha, beta, lo, hi } => {
                let width = hi - lo;
                let u = ((threshold - lo) / width).clamp(0.0, 1.0);
                let frac = alpha / (alpha + beta);
                // E[B; B <= u] = frac * I_u(alpha + 1, beta); the upper tail uses
                // the reflection I_u(a, b) = 1 - I_{1-u}(b, a) to avoid cancellation.
                let reg = |a: f64, b: f64, x: f64| {
                    if x <= 0.0 {
                        0.0
                    } else if x >= 1.0 {
                        1.0
                    } else {
                        beta_reg(a, b, x)
                    }
                };
                let (prob, beta_moment) = match tail {
                    Tail::Lower => (reg(alpha, beta, u), frac * reg(alpha + 1.0, beta, u)),
                    Tail::Upper => (reg(beta, alpha, 1.0 - u), frac * reg(beta, alpha + 1.0, 1.0 - u)),
                };
                TailMoments {
                    prob,
                    first_moment: lo * prob + width * beta_moment,
                }
            }
        }
    }
}

/// Expectation under a scaled beta law with a singular density at one or both
/// ends. On `[0, 1/2]` with `alpha < 1` the substitution `u = v^(1/alpha)`
/// absorbs `u^(alpha - 1) du` into `dv / alpha`; the upper half mirrors this
/// with `1 - u = w^(1/beta)`. Both transformed integrands are bounded.
fn scaled_beta_expect<F: Fn(f64) -> f64>(
    f: &F,
    alpha: f64,
    beta: f64,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    settings: QuadratureSettings,
) -> Result<f64> {
    let width = hi - lo;
    let ln_norm = ln_beta(alpha, beta);
    let to_x = |u: f64| lo + width * u;
    let u_breaks: Vec<f64> = breaks.iter().map(|&b| (b - lo) / width).collect();
    let half_tol = QuadratureSettings {
        abs_tol: 0.5 * settings.abs_tol,
        ..settings
    };

    let lower = if alpha < 1.0 {
        let v_breaks: Vec<f64> = u_breaks.iter().filter(|&&u| u > 0.0).map(|&u| u.powf(alpha)).collect();
        let scale = (-ln_norm).exp() / alpha;
        integrate(
            |v| {
                let u = v.powf(1.0 / alpha);
                scale * f(to_x(u)) * (1.0 - u).powf(beta - 1.0)
            },
            0.0,
            0.5f64.powf(alpha),
            &v_breaks,
            half_tol,
        )?
        .value
    } else {
        integrate(
            |u| f(to_x(u)) * ((alpha - 1.0) * u.ln() + (beta - 1.0) * (1.0 - u).ln() - ln_norm).exp(),
            0.0,
            0.5,
            &u_breaks,
            half_tol,
        )?
        .value
    };

    let upper = if beta < 1.0 {
        let w_breaks: Vec<f64> = u_breaks.iter().filter(|&&u| u < 1.0).map(|&u| (1.0 - u).powf(beta)).collect();
        let scale = (-ln_norm).exp() / beta;
        integrate(
            |w| {
                let one_minus_u = w.powf(1.0 / beta);
                scale * f(to_x(1.0 - one_minus_u)) * (1.0 - one_minus_u).powf(alpha - 1.0)
            },
            0.0,
            0.5f64.powf(beta),
            &w_breaks,
            half_tol,
        )?
        .value
    } else {
        integrate(
            |u| f(to_x(u)) * ((alpha - 1.0) * u.ln() + (beta - 1.0) * (1.0 - u).ln() - ln_norm).exp(),
            0.5,
            1.0,
            &u_breaks,
            half_tol,
        )?
        .value
    };
    Ok(lower + upper)
}

impl fmt::Display for EffectDistribution {
    /// Compact `kind:p1,p2,...` form, the inverse of [`FromStr`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::TwoPoint { a, b, p } => write!(f, "two_point:{a},{b},{p}"),
            Self::Uniform { lo, hi } => write!(f, "uniform:{lo},{hi}"),
            Self::ScaledBeta { alpha, beta, lo, hi } => write!(f, "scaled_beta:{alpha},{beta},{lo},{hi}"),
            Self::Degenerate { value } => write!(f, "degenerate:{value}"),
        }
    }
}

impl FromStr for EffectDistribution {
    type Err = Error;

    /// Parses `two_point:a,b,p`, `uniform:lo,hi`, `scaled_beta:alpha,beta,lo,hi`
    /// or `degenerate:v`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidDistribution(format!("expected `kind:params`, got `{s}`")))?;
        let params = rest
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidDistribution(format!("bad number `{}` in `{s}`", p.trim())))
            })
            .collect::<Result<Vec<f64>>>()?;
        let arity = |want: usize| {
            if params.len() == want {
                Ok(())
            } else {
                Err(Error::InvalidDistribution(format!(
                    "{kind} takes {want} parameters, got {}",
                    params.len()
                )))
            }
        };
        match kind.trim() {
            "two_point" => {
                arity(3)?;
                Self::two_point(params[0], params[1], params[2])
            }
            "uniform" => {
                arity(2)?;
                Self::uniform(params[0], params[1])
            }
            "scaled_beta" => {
                arity(4)?;
                Self::scaled_beta(params[0], params[1], params[2], params[3])
            }
            "degenerate" => {
                arity(1)?;
                Self::degenerate(params[0])
            }
            other => Err(Error::InvalidDistribution(format!("unknown kind `{other}`"))),
        }
    }
}

/// The full-data law: baseline outcome, independent effect, Bernoulli assignment.
/// `Y(1) = Y(0) + tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSpec {
    pub baseline: EffectDistribution,
    pub effect: EffectDistribution,
    pub assignment_prob: f64,
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<()> {
        self.baseline.validate()?;
        self.effect.validate()?;
        if !(self.assignment_prob > 0.0 && self.assignment_prob < 1.0) {
            return Err(Error::InvalidConfig {
                path: "population.assignment_prob".into(),
                reason: format!("must lie in (0, 1), got {}", self.assignment_prob),
            });
        }
        Ok(())
    }
}

/// Observed data plus the latent effects (kept for the oracle estimator).
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub n: usize,
    pub y_obs: Vec<f64>,
    pub z: Vec<bool>,
    pub tau_latent: Vec<f64>,
}

/// Draws `n` iid units. Per unit the stream is consumed in the order
/// baseline, effect, assignment.
pub fn draw_sample<R: Rng + ?Sized>(pop: &PopulationSpec, n: usize, rng: &mut R) -> Result<Sample> {
    if n < 2 {
        return Err(Error::InvalidSampleSize {
            n: n as u64,
            reason: "a sample needs at least 2 units",
        });
    }
    let mut sample = Sample {
        n,
        y_obs: Vec::with_capacity(n),
        z: Vec::with_capacity(n),
        tau_latent: Vec::with_capacity(n),
    };
    for _ in 0..n {
        let y0 = pop.baseline.sample(rng);
        let tau = pop.effect.sample(rng);
        let treated = rng.random_bool(pop.assignment_prob);
        sample.y_obs.push(if treated { y0 + tau } else { y0 });
        sample.z.push(treated);
        sample.tau_latent.push(tau);
    }
    Ok(sample)
}

/// The `sigma` in `sqrt(n) (theta_hat - mu) -> N(0, sigma^2)` for each estimator.
pub fn asymptotic_sd(pop: &PopulationSpec, estimator: &EstimatorKind) -> Result<f64> {
    let sd = match *estimator {
        EstimatorKind::OracleTauMean => pop.effect.variance().sqrt(),
        EstimatorKind::DifferenceInMeans => {
            let p = pop.assignment_prob;
            let var0 = pop.baseline.variance();
            let var1 = var0 + pop.effect.variance();
            (var1 / p + var0 / (1.0 - p)).sqrt()
        }
        EstimatorKind::SyntheticNormal { sigma } => sigma,
    };
    if sd > 0.0 && sd.is_finite() {
        Ok(sd)
    } else {
        Err(Error::DegenerateVariance)
    }
}
