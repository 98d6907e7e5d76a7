use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One `(n, value)` observation of a quantity expected to decay like `n^slope`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: u64,
    pub value: f64,
}

impl RatePoint {
    pub fn new(n: u64, value: f64) -> Self {
        Self { n, value }
    }
}

/// Least-squares fit of `ln(value) = intercept + slope * ln(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub n_points_used: usize,
    pub residual_rms: f64,
}

/// Fits a power law on log-log axes. Points with `value <= 0` (or `n == 0`)
/// carry no rate information and are dropped before fitting.
pub fn log_log_ols(points: &[RatePoint]) -> Result<RateFit> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.n >= 1 && p.value > 0.0 && p.value.is_finite())
        .map(|p| ((p.n as f64).ln(), p.value.ln()))
        .collect();
    let usable = logs.len();
    if usable < 2 {
        return Err(Error::InsufficientPoints { usable });
    }

    let k = usable as f64;
    let mean_x = logs.iter().map(|&(x, _)| x).sum::<f64>() / k;
    let mean_y = logs.iter().map(|&(_, y)| y).sum::<f64>() / k;
    let (sxx, sxy) = logs.iter().fold((0.0, 0.0), |(sxx, sxy), &(x, y)| {
        let dx = x - mean_x;
        (sxx + dx * dx, sxy + dx * (y - mean_y))
    });
    if sxx == 0.0 {
        // all retained points share one n
        return Err(Error::InsufficientPoints { usable: 1 });
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = logs
        .iter()
        .map(|&(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();

    Ok(RateFit {
        slope,
        intercept,
        n_points_used: usable,
        residual_rms: (ss_res / k).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(raw: &[(u64, f64)]) -> Vec<RatePoint> {
        raw.iter().map(|&(n, v)| RatePoint::new(n, v)).collect()
    }

    #[test]
    fn inverse_n_law() {
        let fit = log_log_ols(&pts(&[(10, 0.1), (100, 0.01), (1000, 0.001)])).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!(fit.residual_rms < 1e-12);
        assert_eq!(fit.n_points_used, 3);
    }

    #[test]
    fn two_point_fit() {
        let fit = log_log_ols(&pts(&[(10, 0.04), (1000, 0.0004)])).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!((fit.intercept - 0.4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn inverse_square_law() {
        let raw: Vec<_> = [10u64, 20, 40, 80]
            .iter()
            .map(|&n| (n, 4.0 / (n as f64 * n as f64)))
            .collect();
        let fit = log_log_ols(&pts(&raw)).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-12);
        assert!((fit.intercept - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn zeros_are_dropped_and_counted() {
        let fit = log_log_ols(&pts(&[(1, 0.0), (10, 0.1), (100, 0.01), (1000, 0.0)])).unwrap();
        assert_eq!(fit.n_points_used, 2);
        assert_eq!(
            log_log_ols(&pts(&[(10, 0.0), (100, 0.01)])),
            Err(Error::InsufficientPoints { usable: 1 })
        );
        assert_eq!(log_log_ols(&[]), Err(Error::InsufficientPoints { usable: 0 }));
    }

    #[test]
    fn repeated_n_is_insufficient() {
        assert!(log_log_ols(&pts(&[(10, 0.1), (10, 0.2)])).is_err());
    }
}
