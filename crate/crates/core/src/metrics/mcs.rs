use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub const MCS_MIN_T: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McsConfig {
    pub alpha: f64,
    pub bootstrap: usize,
    /// Circular block length; ⌈T^{1/3}⌉ when absent.
    pub block_len: Option<usize>,
}

impl Default for McsConfig {
    fn default() -> Self {
        Self { alpha: 0.10, bootstrap: 5000, block_len: None }
    }
}

impl McsConfig {
    pub fn block_len_for(&self, t: usize) -> usize {
        self.block_len.unwrap_or_else(|| (t as f64).cbrt().ceil() as usize).clamp(1, t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McsResult {
    /// Column indices of the surviving models, ascending.
    pub included: Vec<usize>,
    /// MCS p-value per column of the loss matrix.
    pub p_values: Vec<f64>,
    /// Columns in the order they were eliminated; the last survivor is last.
    pub elimination_order: Vec<usize>,
    pub alpha: f64,
}

impl McsResult {
    pub fn contains(&self, model: usize) -> bool {
        self.included.binary_search(&model).is_ok()
    }

    /// Membership at another level on the same p-values.
    pub fn included_at(&self, alpha: f64) -> Vec<usize> {
        (0..self.p_values.len()).filter(|&i| self.p_values[i] > alpha).collect()
    }
}

/// Column means of B circular block-bootstrap resamples of `losses`.
fn bootstrap_means(losses: &DMatrix<f64>, b: usize, block: usize, seed: u64) -> Vec<Vec<f64>> {
    let (t, m) = losses.shape();
    // prefix sums over the series concatenated with itself, for wrap-around blocks
    let prefix: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            let mut p = Vec::with_capacity(2 * t + 1);
            p.push(0.0);
            let mut acc = 0.0;
            for k in 0..2 * t {
                acc += losses[(k % t, j)];
                p.push(acc);
            }
            p
        })
        .collect();
    (0..b)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, rep as u64));
            let mut sums = vec![0.0; m];
            let mut filled = 0;
            while filled < t {
                let start = rng.random_range(0..t);
                let len = block.min(t - filled);
                for (j, p) in prefix.iter().enumerate() {
                    sums[j] += p[start + len] - p[start];
                }
                filled += len;
            }
            sums.iter().map(|s| s / t as f64).collect()
        })
        .collect()
}

/// Model Confidence Set with the T_max statistic on a T×M loss matrix.
pub fn mcs(losses: &DMatrix<f64>, cfg: &McsConfig, seed: u64) -> Result<McsResult> {
    let (t, m) = losses.shape();
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::Config(format!("MCS alpha must lie in (0,1), got {}", cfg.alpha)));
    }
    if m == 0 {
        return Err(Error::DegenerateLosses("no models".into()));
    }
    if m == 1 {
        return Ok(McsResult { included: vec![0], p_values: vec![1.0], elimination_order: vec![0], alpha: cfg.alpha });
    }
    if t < MCS_MIN_T {
        return Err(Error::DegenerateLosses(format!("{t} observations, need at least {MCS_MIN_T}")));
    }
    if losses.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateLosses("non-finite loss".into()));
    }
    if cfg.bootstrap == 0 {
        return Err(Error::Config("MCS needs at least one bootstrap replication".into()));
    }
    let b = cfg.bootstrap;
    let lbar: Vec<f64> = losses.column_iter().map(|c| c.sum() / t as f64).collect();
    let boot = bootstrap_means(losses, b, cfg.block_len_for(t), seed);
    let scale = lbar.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);

    let mut alive: Vec<usize> = (0..m).collect();
    let mut p_values = vec![1.0; m];
    let mut order = Vec::with_capacity(m);
    let mut running = 0.0f64;
    while alive.len() > 1 {
        let k = alive.len() as f64;
        let centre = alive.iter().map(|&i| lbar[i]).sum::<f64>() / k;
        let dbar: Vec<f64> = alive.iter().map(|&i| lbar[i] - centre).collect();
        // bootstrap deviations of each model's relative loss
        let dev: Vec<Vec<f64>> = boot
            .iter()
            .map(|row| {
                let c = alive.iter().map(|&i| row[i]).sum::<f64>() / k;
                alive.iter().zip(&dbar).map(|(&i, d)| row[i] - c - d).collect()
            })
            .collect();
        let var: Vec<f64> =
            (0..alive.len()).map(|a| dev.iter().map(|r| r[a] * r[a]).sum::<f64>() / b as f64).collect();
        let tiny = (1e-12 * scale).powi(2);
        if var.iter().all(|&v| v <= tiny) {
            if dbar.iter().all(|d| d.abs() <= 1e-12 * scale) {
                // remaining models have identical losses
                break;
            }
            return Err(Error::DegenerateLosses("loss differentials with zero variance".into()));
        }
        let sd: Vec<f64> = var.iter().map(|v| v.max(tiny).sqrt()).collect();
        let stats: Vec<f64> = dbar.iter().zip(&sd).map(|(d, s)| if d.abs() <= 1e-12 * scale { 0.0 } else { d / s }).collect();
        let (worst, tmax) = stats
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (a, s)| if s > acc.1 { (a, s) } else { acc });
        let exceed = dev
            .iter()
            .filter(|r| r.iter().zip(&sd).map(|(x, s)| x / s).fold(f64::NEG_INFINITY, f64::max) > tmax)
            .count();
        let p = exceed as f64 / b as f64;
        running = running.max(p);
        let model = alive.remove(worst);
        p_values[model] = running;
        order.push(model);
    }
    order.extend(alive.iter().copied());
    let mut included: Vec<usize> = (0..m).filter(|&i| p_values[i] > cfg.alpha).collect();
    included.sort_unstable();
    Ok(McsResult { included, p_values, elimination_order: order, alpha: cfg.alpha })
}
