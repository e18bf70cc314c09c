use nalgebra::DMatrix;
use statrs::distribution::{Continuous, ContinuousCDF, StudentsT};
use statrs::function::beta::ln_beta;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::ingest::HOURS;

/// Delivery hours 8..=20 (1-based) forming the peak aggregate.
pub const PEAK_HOURS: std::ops::RangeInclusive<usize> = 8..=20;

pub(crate) fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Root mean squared error of each column of a T×H error matrix.
pub fn rmse_hourly(errors: &DMatrix<f64>) -> Result<Vec<f64>> {
    let t = errors.nrows();
    if t == 0 {
        return Err(Error::EmptyErrors);
    }
    Ok(errors.column_iter().map(|c| (c.iter().map(|e| e * e).sum::<f64>() / t as f64).sqrt()).collect())
}

/// (mean of all 24 hours, mean of the peak hours 8..=20).
pub fn rmse_aggregates(per_hour: &[f64; HOURS]) -> (f64, f64) {
    let avg = per_hour.iter().sum::<f64>() / HOURS as f64;
    let peak = PEAK_HOURS.map(|h| per_hour[h - 1]).sum::<f64>() / PEAK_HOURS.count() as f64;
    (avg, peak)
}

/// Per-hour score vector with its two aggregates.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTable {
    pub per_hour: [f64; HOURS],
    pub avg: f64,
    pub avg_peak: f64,
}

impl ScoreTable {
    pub fn new(per_hour: [f64; HOURS]) -> Self {
        let (avg, avg_peak) = rmse_aggregates(&per_hour);
        Self { per_hour, avg, avg_peak }
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let per_hour: [f64; HOURS] =
            values.try_into().map_err(|_| Error::DimensionMismatch { expected: HOURS, got: values.len() })?;
        Ok(Self::new(per_hour))
    }
}

/// Closed-form CRPS of N(mean, sd²) at `y`.
pub fn crps_gaussian(mean: f64, sd: f64, y: f64) -> Result<f64> {
    if sd < 0.0 || sd.is_nan() {
        return Err(Error::NegativeSd(sd));
    }
    if sd == 0.0 {
        return Ok((mean - y).abs());
    }
    let z = (y - mean) / sd;
    Ok(sd * (z * (2.0 * std_normal_cdf(z) - 1.0) + 2.0 * std_normal_pdf(z) - 1.0 / std::f64::consts::PI.sqrt()))
}

/// Closed-form CRPS of a location-scale Student t with `dof > 1`.
pub fn crps_student_t(location: f64, scale: f64, dof: f64, y: f64) -> Result<f64> {
    if scale < 0.0 || scale.is_nan() {
        return Err(Error::NegativeSd(scale));
    }
    if !(dof > 1.0) {
        return Err(Error::DofTooSmall { nu: dof, q: 1 });
    }
    if scale == 0.0 {
        return Ok((location - y).abs());
    }
    let t = StudentsT::new(0.0, 1.0, dof).map_err(|_| Error::DofTooSmall { nu: dof, q: 1 })?;
    let z = (y - location) / scale;
    let spread = 2.0 * dof.sqrt() * (ln_beta(0.5, dof - 0.5) - 2.0 * ln_beta(0.5, 0.5 * dof)).exp() / (dof - 1.0);
    Ok(scale * (z * (2.0 * t.cdf(z) - 1.0) + 2.0 * t.pdf(z) * (dof + z * z) / (dof - 1.0) - spread))
}

/// Energy-form CRPS of an ensemble: mean |Yᵢ − y| − ½ mean |Yᵢ − Yⱼ|,
/// with the pairwise term from the sorted sample in O(d log d).
pub fn crps_sample(draws: &[f64], y: f64) -> Result<f64> {
    let d = draws.len();
    if d < 2 {
        return Err(Error::TooFewDraws(d));
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let df = d as f64;
    let abs_err = sorted.iter().map(|x| (x - y).abs()).sum::<f64>() / df;
    // Σᵢ Σⱼ |xᵢ − xⱼ| = 2 Σᵢ (2i − d − 1) x₍ᵢ₎ for 1-based ranks i
    let pairwise: f64 = sorted.iter().enumerate().map(|(i, x)| (2.0 * (i + 1) as f64 - df - 1.0) * x).sum();
    Ok(abs_err - pairwise / (df * df))
}

/// `***` at 1%, `**` at 5%, `*` at 10%, blank otherwise.
pub fn significance_stars(p: f64) -> &'static str {
    if p <= 0.01 {
        "***"
    } else if p <= 0.05 {
        "**"
    } else if p <= 0.10 {
        "*"
    } else {
        ""
    }
}
