//! Next-slot predictors for per-block occupancy counts.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::spectrum::{OccupancyHistory, WidebandModel};
use crate::{Error, Result};

const AR1_VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictorKind {
    MovingAverage { window: usize },
    LinearRegression { window: usize },
    Ar1,
}

impl PredictorKind {
    /// Shortest series the predictor accepts.
    pub fn min_history(&self) -> usize {
        match self {
            Self::MovingAverage { .. } => 1,
            Self::LinearRegression { .. } => 2,
            Self::Ar1 => 3,
        }
    }

    /// Unclamped one-step prediction.
    pub fn predict_raw(&self, series: &[f64]) -> Result<f64> {
        match *self {
            Self::MovingAverage { window } => predict_ma(series, window),
            Self::LinearRegression { window } => predict_linreg(series, window),
            Self::Ar1 => predict_ar1(series),
        }
    }

    /// Prediction clamped to `[0, band_count]`.
    pub fn predict(&self, series: &[f64], band_count: usize) -> Result<f64> {
        Ok(self.predict_raw(series)?.clamp(0.0, band_count as f64))
    }
}

impl fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MovingAverage { window } => write!(f, "ma:{window}"),
            Self::LinearRegression { window } => write!(f, "linreg:{window}"),
            Self::Ar1 => f.write_str("ar1"),
        }
    }
}

impl FromStr for PredictorKind {
    type Err = Error;

    /// `ar1`, `ma:<window>` or `linreg:<window>`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let window = || -> Result<usize> {
            let w: usize = arg
                .ok_or(Error::InvalidConfig("predictor window missing"))?
                .parse()
                .map_err(|_| Error::InvalidConfig("predictor window must be an integer"))?;
            if w == 0 {
                return Err(Error::InvalidConfig("predictor window must be >= 1"));
            }
            Ok(w)
        };
        match name {
            "ar1" if arg.is_none() => Ok(Self::Ar1),
            "ma" => Ok(Self::MovingAverage { window: window()? }),
            "linreg" => Ok(Self::LinearRegression { window: window()? }),
            _ => Err(Error::InvalidConfig("unknown predictor (expected ar1, ma:<w> or linreg:<w>)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionResult {
    /// `k̂ᵢ`, clamped to `[0, band_countᵢ]`.
    pub k_hat: Vec<f64>,
    /// Variance of the in-sample one-step residuals per block.
    pub residual_variance: Vec<f64>,
}

/// Mean of the last `min(window, T)` values.
pub fn predict_ma(series: &[f64], window: usize) -> Result<f64> {
    if series.is_empty() || window == 0 {
        return Err(Error::InsufficientHistory { needed: 1, available: series.len() });
    }
    let tail = &series[series.len() - window.min(series.len())..];
    Ok(tail.iter().sum::<f64>() / tail.len() as f64)
}

/// Least-squares line through the last `min(window, T)` points, evaluated one
/// slot ahead.
pub fn predict_linreg(series: &[f64], window: usize) -> Result<f64> {
    let w = window.min(series.len());
    if w < 2 {
        return Err(Error::InsufficientHistory { needed: 2, available: w });
    }
    let tail = &series[series.len() - w..];
    let wf = w as f64;
    let x_mean = (wf - 1.0) / 2.0;
    let y_mean = tail.iter().sum::<f64>() / wf;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in tail.iter().enumerate() {
        let dx = i as f64 - x_mean;
        sxy += dx * (y - y_mean);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    Ok(y_mean + slope * (wf - x_mean))
}

/// Lag-1 autoregressive estimate `φ` with the biased (divide-by-T)
/// autocovariance; zero when the sample variance is below `1e-12`.
pub fn ar1_coefficient(series: &[f64]) -> Result<(f64, f64)> {
    let t = series.len();
    if t < 3 {
        return Err(Error::InsufficientHistory { needed: 3, available: t });
    }
    let tf = t as f64;
    let mean = series.iter().sum::<f64>() / tf;
    let var = series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / tf;
    if var < AR1_VARIANCE_FLOOR {
        return Ok((mean, 0.0));
    }
    let cov = series.windows(2).map(|p| (p[1] - mean) * (p[0] - mean)).sum::<f64>() / tf;
    Ok((mean, cov / var))
}

/// `μ + φ(last − μ)`, unclamped.
pub fn predict_ar1(series: &[f64]) -> Result<f64> {
    let (mean, phi) = ar1_coefficient(series)?;
    Ok(mean + phi * (series[series.len() - 1] - mean))
}

/// Per-block `k̂ᵢ` for the slot after `history`.
pub fn predict_blocks(kind: PredictorKind, history: &OccupancyHistory, model: &WidebandModel) -> Result<PredictionResult> {
    let needed = kind.min_history();
    if history.len() < needed {
        return Err(Error::InsufficientHistory { needed, available: history.len() });
    }
    let mut k_hat = Vec::with_capacity(model.blocks().len());
    let mut residual_variance = Vec::with_capacity(model.blocks().len());
    for (i, block) in model.blocks().iter().enumerate() {
        let series = history.block_series_f64(i);
        k_hat.push(kind.predict(&series, block.band_count)?);

        let mut sum_sq = 0.0;
        let mut count = 0usize;
        for t in needed..series.len() {
            let p = kind.predict(&series[..t], block.band_count)?;
            sum_sq += (series[t] - p) * (series[t] - p);
            count += 1;
        }
        residual_variance.push(if count == 0 { 0.0 } else { sum_sq / count as f64 });
    }
    Ok(PredictionResult { k_hat, residual_variance })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moving_average() {
        assert_eq!(predict_ma(&[3.0, 3.0, 3.0], 2).unwrap(), 3.0);
        assert_eq!(predict_ma(&[1.0, 9.0, 4.0], 1).unwrap(), 4.0);
        assert_eq!(predict_ma(&[2.0, 4.0, 6.0], 3).unwrap(), 4.0);
        assert_eq!(predict_ma(&[2.0, 4.0, 6.0], 10).unwrap(), 4.0);
        assert!(matches!(predict_ma(&[], 3), Err(Error::InsufficientHistory { .. })));
    }

    #[test]
    fn linear_regression() {
        assert!((predict_linreg(&[5.0; 6], 4).unwrap() - 5.0).abs() < 1e-12);
        assert!((predict_linreg(&[1.0, 2.0, 3.0], 3).unwrap() - 4.0).abs() < 1e-12);
        assert!(matches!(predict_linreg(&[1.0], 5), Err(Error::InsufficientHistory { .. })));
        assert!(matches!(predict_linreg(&[1.0, 2.0, 3.0], 1), Err(Error::InsufficientHistory { .. })));
    }

    #[test]
    fn ar1_alternating_series() {
        let s = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let (_, phi) = ar1_coefficient(&s).unwrap();
        assert!((phi + 5.0 / 6.0).abs() < 1e-12);
        assert!((predict_ar1(&s).unwrap() - 5.0 / 6.0).abs() < 1e-12);
        assert_eq!(predict_ar1(&[2.0, 2.0, 2.0, 2.0]).unwrap(), 2.0);
        assert!(matches!(predict_ar1(&[1.0, 2.0]), Err(Error::InsufficientHistory { needed: 3, .. })));
    }

    #[test]
    fn clamping() {
        let rising = [1.0, 3.0, 5.0, 7.0];
        assert_eq!(PredictorKind::LinearRegression { window: 4 }.predict(&rising, 8).unwrap(), 8.0);
        let falling = [7.0, 5.0, 3.0, 1.0];
        assert_eq!(PredictorKind::LinearRegression { window: 4 }.predict(&falling, 8).unwrap(), 0.0);
    }

    #[test]
    fn parse_round_trip() {
        for s in ["ar1", "ma:3", "linreg:12"] {
            let k: PredictorKind = s.parse().unwrap();
            assert_eq!(alloc::format!("{k}"), s);
        }
        for bad in ["ma", "ma:0", "linreg:x", "ar2", "ar1:3"] {
            assert!(bad.parse::<PredictorKind>().is_err(), "{bad}");
        }
    }

    #[test]
    fn block_predictions_are_clamped() {
        let m = WidebandModel::contiguous(&[(4, 0.5, 0.8), (6, 0.2, 0.8)], (1.0, 2.0)).unwrap();
        let h = crate::spectrum::evolve_history(&m, 50, 3).unwrap();
        for kind in [PredictorKind::Ar1, PredictorKind::MovingAverage { window: 5 }, PredictorKind::LinearRegression { window: 3 }] {
            let r = predict_blocks(kind, &h, &m).unwrap();
            assert!(r.k_hat[0] >= 0.0 && r.k_hat[0] <= 4.0);
            assert!(r.k_hat[1] >= 0.0 && r.k_hat[1] <= 6.0);
            assert!(r.residual_variance.iter().all(|v| *v >= 0.0));
        }
        let short = crate::spectrum::evolve_history(&m, 2, 3).unwrap();
        assert!(predict_blocks(PredictorKind::Ar1, &short, &m).is_err());
    }
}
