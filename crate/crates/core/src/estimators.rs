//! Root-n consistent, asymptotically normal estimators of the average effect.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::distributions::Sample;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorKind {
    /// Mean of the latent unit effects (infeasible, but exactly root-n).
    OracleTauMean,
    /// Treated-arm mean minus control-arm mean.
    DifferenceInMeans,
    /// `mu + sigma * Z / sqrt(n)` with `Z ~ N(0, 1)`: normal at every `n`,
    /// with no remainder term.
    SyntheticNormal { sigma: f64 },
}

impl EstimatorKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::SyntheticNormal { sigma } if !(sigma > 0.0 && sigma.is_finite()) => Err(Error::InvalidConfig {
                path: "estimator.sigma".into(),
                reason: format!("synthetic_normal needs a positive finite sigma, got {sigma}"),
            }),
            _ => Ok(()),
        }
    }

    /// Whether the estimator consumes a drawn [`Sample`].
    pub fn needs_sample(&self) -> bool {
        !matches!(self, Self::SyntheticNormal { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::OracleTauMean => "oracle_tau_mean",
            Self::DifferenceInMeans => "difference_in_means",
            Self::SyntheticNormal { .. } => "synthetic_normal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub theta_hat: f64,
    /// Plug-in sd of the `sqrt(n)`-scaled limit.
    pub sigma_hat: f64,
}

fn mean_and_var(values: impl Iterator<Item = f64> + Clone) -> (usize, f64, f64) {
    let (count, sum) = values.clone().fold((0usize, 0.0), |(k, s), v| (k + 1, s + v));
    if count == 0 {
        return (0, f64::NAN, f64::NAN);
    }
    let mean = sum / count as f64;
    let var = if count > 1 {
        values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1) as f64
    } else {
        0.0
    };
    (count, mean, var)
}

/// Runs `kind` on `sample`. `mu` and `rng` are only consulted by the
/// synthetic estimator.
pub fn estimate<R: Rng + ?Sized>(kind: &EstimatorKind, sample: &Sample, mu: f64, rng: &mut R) -> Result<Estimate> {
    match *kind {
        EstimatorKind::OracleTauMean => {
            let (count, mean, var) = mean_and_var(sample.tau_latent.iter().copied());
            if count == 0 {
                return Err(Error::InvalidSampleSize {
                    n: 0,
                    reason: "empty sample",
                });
            }
            Ok(Estimate {
                theta_hat: mean,
                sigma_hat: var.sqrt(),
            })
        }
        EstimatorKind::DifferenceInMeans => difference_in_means(sample),
        EstimatorKind::SyntheticNormal { sigma } => Ok(synthetic_normal(sigma, mu, sample.n, rng.sample(StandardNormal))),
    }
}

pub fn difference_in_means(sample: &Sample) -> Result<Estimate> {
    let arm = |treated: bool| {
        sample
            .y_obs
            .iter()
            .zip(&sample.z)
            .filter(move |(_, &z)| z == treated)
            .map(|(&y, _)| y)
    };
    let (n1, mean1, var1) = mean_and_var(arm(true));
    let (n0, mean0, var0) = mean_and_var(arm(false));
    if n1 == 0 || n0 == 0 {
        return Err(Error::EmptyArm {
            treated: n1,
            control: n0,
        });
    }
    let n = sample.n as f64;
    Ok(Estimate {
        theta_hat: mean1 - mean0,
        sigma_hat: (n * (var1 / n1 as f64 + var0 / n0 as f64)).sqrt(),
    })
}

/// The synthetic estimator for a given standard-normal draw `z`.
#[inline]
pub fn synthetic_normal(sigma: f64, mu: f64, n: usize, z: f64) -> Estimate {
    Estimate {
        theta_hat: mu + sigma * z / (n as f64).sqrt(),
        sigma_hat: sigma,
    }
}
