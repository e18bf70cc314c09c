use serde::{Deserialize, Serialize};

use super::scores::std_normal_cdf;
use crate::error::{Error, Result};

/// Smallest sample accepted by [`dm_test`].
pub const DM_MIN_T: usize = 10;

/// Long-run variance settings: AR(1) pre-whitening, quadratic-spectral
/// kernel and Andrews' AR(1) plug-in bandwidth unless one is fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HacConfig {
    pub prewhiten: bool,
    /// Pre-whitening coefficients are clipped to ±this value.
    pub max_ar: f64,
    /// Fixed QS bandwidth; automatic when absent.
    pub bandwidth: Option<f64>,
}

impl Default for HacConfig {
    fn default() -> Self {
        Self { prewhiten: true, max_ar: 0.97, bandwidth: None }
    }
}

/// Quadratic-spectral kernel.
pub fn qs_kernel(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        return 1.0;
    }
    let z = 6.0 * std::f64::consts::PI * x / 5.0;
    25.0 / (12.0 * std::f64::consts::PI.powi(2) * x * x) * (z.sin() / z - z.cos())
}

fn autocov(u: &[f64], lag: usize) -> f64 {
    let t = u.len();
    u[lag..].iter().zip(u).map(|(a, b)| a * b).sum::<f64>() / t as f64
}

fn ar1_coef(u: &[f64]) -> f64 {
    let den: f64 = u[..u.len() - 1].iter().map(|v| v * v).sum();
    if den <= 0.0 {
        return 0.0;
    }
    u[1..].iter().zip(u).map(|(a, b)| a * b).sum::<f64>() / den
}

/// Andrews' QS bandwidth 1.3221 (α(2) T)^{1/5} with α(2) from an AR(1) fit.
pub fn qs_bandwidth(u: &[f64]) -> f64 {
    let rho = ar1_coef(u).clamp(-0.99, 0.99);
    let alpha2 = 4.0 * rho * rho / (1.0 - rho).powi(4);
    1.3221 * (alpha2 * u.len() as f64).powf(0.2)
}

fn qs_sum(u: &[f64], bandwidth: f64) -> f64 {
    let mut s = autocov(u, 0);
    if bandwidth > 1e-8 {
        for j in 1..u.len() {
            let w = qs_kernel(j as f64 / bandwidth);
            s += 2.0 * w * autocov(u, j);
        }
    }
    s
}

/// Long-run variance of a series (mean removed internally). Returns the
/// estimate and the bandwidth used.
pub fn long_run_variance(x: &[f64], cfg: &HacConfig) -> Result<(f64, f64)> {
    if x.len() < 3 {
        return Err(Error::InsufficientSample { n: x.len(), m: 3 });
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let u: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let (v, rho) = if cfg.prewhiten {
        let rho = ar1_coef(&u).clamp(-cfg.max_ar, cfg.max_ar);
        (u.windows(2).map(|w| w[1] - rho * w[0]).collect::<Vec<_>>(), rho)
    } else {
        (u, 0.0)
    };
    let bw = cfg.bandwidth.unwrap_or_else(|| qs_bandwidth(&v));
    let lrv = qs_sum(&v, bw) / (1.0 - rho).powi(2);
    Ok((lrv.max(0.0), bw))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DmResult {
    pub statistic: f64,
    pub p_value: f64,
    pub one_sided: bool,
    pub lrv: f64,
    /// Set when the differential has zero variance; statistic 0, p 0.5.
    pub degenerate: bool,
}

/// Diebold-Mariano test on `d_t = loss_a − loss_b`. The one-sided p-value is
/// the upper normal tail: small values mean `b` is more accurate than `a`.
pub fn dm_test(loss_a: &[f64], loss_b: &[f64], one_sided: bool) -> Result<DmResult> {
    dm_test_with(loss_a, loss_b, one_sided, &HacConfig::default())
}

pub fn dm_test_with(loss_a: &[f64], loss_b: &[f64], one_sided: bool, cfg: &HacConfig) -> Result<DmResult> {
    if loss_a.len() != loss_b.len() {
        return Err(Error::LengthMismatch(loss_a.len(), loss_b.len()));
    }
    let t = loss_a.len();
    if t < DM_MIN_T {
        return Err(Error::InsufficientSample { n: t, m: DM_MIN_T });
    }
    if loss_a.iter().chain(loss_b).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateLosses("non-finite loss".into()));
    }
    let d: Vec<f64> = loss_a.iter().zip(loss_b).map(|(a, b)| a - b).collect();
    let mean = d.iter().sum::<f64>() / t as f64;
    let scale = d.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let spread = d.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    let degenerate = |lrv| DmResult { statistic: 0.0, p_value: 0.5, one_sided, lrv, degenerate: true };
    if spread <= 1e-14 * scale.max(f64::MIN_POSITIVE) || scale == 0.0 {
        return Ok(degenerate(0.0));
    }
    let (lrv, _) = long_run_variance(&d, cfg)?;
    if !(lrv > 0.0) || !lrv.is_finite() {
        return Ok(degenerate(lrv));
    }
    let statistic = mean / (lrv / t as f64).sqrt();
    let upper = 1.0 - std_normal_cdf(statistic);
    let p_value = if one_sided { upper } else { 2.0 * upper.min(1.0 - upper) };
    Ok(DmResult { statistic, p_value: p_value.clamp(0.0, 1.0), one_sided, lrv, degenerate: false })
}
