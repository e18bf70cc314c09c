//! Run configuration and on-disk run directories.

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::backtest::{BacktestPlan, BacktestResult, ForecastRecord, ModelEntry, ModelForecasts, DEFAULT_DRAWS};
use crate::error::{Error, Result};
use crate::estimate::{DensityKind, ForecastDensity, PriorConfig, SolverConfig};
use crate::ingest::{hour_column, MarketDataset, HOURS};
use crate::metrics::{HacConfig, McsConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub hac: HacConfig,
    pub mcs: McsConfig,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self { hac: HacConfig::default(), mcs: McsConfig::default() }
    }
}

fn default_draws() -> usize {
    DEFAULT_DRAWS
}

fn default_out() -> PathBuf {
    PathBuf::from("run")
}

/// Everything a backtest run needs; stored verbatim in the run directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Market manifest, relative to the config file.
    pub market: PathBuf,
    /// Output directory, relative to the config file; not part of the stored config.
    #[serde(default = "default_out", skip_serializing)]
    pub out: PathBuf,
    #[serde(default)]
    pub seed: u64,
    pub window_days: usize,
    #[serde(with = "crate::tomldate")]
    pub eval_start: NaiveDate,
    #[serde(with = "crate::tomldate")]
    pub eval_end: NaiveDate,
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default)]
    pub keep_draws: bool,
    #[serde(default)]
    pub prior: PriorConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    pub models: Vec<ModelEntry>,
}

impl RunConfig {
    pub fn from_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical TOML serialization.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_toml()?.as_bytes())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::Config("no models configured".into()));
        }
        let mut ids = std::collections::HashSet::new();
        for m in &self.models {
            if m.id.is_empty() || m.id.contains(['/', '\\']) {
                return Err(Error::Config(format!("invalid model id {:?}", m.id)));
            }
            if !ids.insert(&m.id) {
                return Err(Error::Config(format!("duplicate model id {:?}", m.id)));
            }
            if m.spec.family.is_univariate() && m.spec.hour.is_some() {
                return Err(Error::Config(format!("model {}: univariate models cover all 24 hours, drop `hour`", m.id)));
            }
        }
        for (class, uni) in [("univariate", true), ("multivariate", false)] {
            let members: Vec<&ModelEntry> = self.models.iter().filter(|m| m.spec.family.is_univariate() == uni).collect();
            let benches = members.iter().filter(|m| m.benchmark).count();
            if !members.is_empty() && benches != 1 {
                return Err(Error::Config(format!("need exactly one {class} benchmark, found {benches}")));
            }
        }
        if !(self.metrics.mcs.alpha > 0.0 && self.metrics.mcs.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0,1), got {}", self.metrics.mcs.alpha)));
        }
        if self.draws == 1 {
            return Err(Error::Config("draws must be 0 or at least 2".into()));
        }
        Ok(())
    }

    pub fn plan(&self) -> BacktestPlan {
        BacktestPlan {
            models: self.models.clone(),
            window_days: self.window_days,
            eval_start: self.eval_start,
            eval_end: self.eval_end,
            draws: self.draws,
            keep_draws: self.keep_draws,
            seed: self.seed,
            prior: self.prior,
            solver: self.solver,
        }
    }
}

pub const CONFIG_FILE: &str = "config.toml";
pub const MANIFEST_FILE: &str = "run_manifest.json";
pub const FORECAST_DIR: &str = "forecasts";
pub const DRAWS_DIR: &str = "draws";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunModel {
    pub id: String,
    pub records: usize,
    pub sha256: String,
}

/// Self-description of a run directory. Contains no timestamps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub market: String,
    pub market_manifest: PathBuf,
    pub data_start: NaiveDate,
    pub data_end: NaiveDate,
    pub eval_start: NaiveDate,
    pub eval_end: NaiveDate,
    pub models: Vec<RunModel>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `target_date,hour,point,realized,scale_hh,dof,crps`.
pub fn forecast_csv(records: &[ForecastRecord]) -> String {
    let mut out = String::from("target_date,hour,point,realized,scale_hh,dof,crps\n");
    for r in records {
        for h in 0..HOURS {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.target_date,
                h + 1,
                r.point[h],
                r.realized[h],
                r.density.scale[(h, h)],
                fmt_opt(r.density.dof()),
                r.crps[h]
            ));
        }
    }
    out
}

/// `target_date,draw,h01..h24`.
pub fn draws_csv(records: &[ForecastRecord]) -> Option<String> {
    if records.iter().all(|r| r.density.draws.is_none()) {
        return None;
    }
    let mut out = String::from("target_date,draw");
    for h in 1..=HOURS {
        out.push(',');
        out.push_str(&hour_column(h));
    }
    out.push('\n');
    for r in records {
        if let Some(d) = &r.density.draws {
            for (i, row) in d.row_iter().enumerate() {
                out.push_str(&format!("{},{}", r.target_date, i + 1));
                for v in row.iter() {
                    out.push_str(&format!(",{v}"));
                }
                out.push('\n');
            }
        }
    }
    Some(out)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes config, forecasts and manifest into `dir`.
pub fn write_run(
    dir: &Path,
    cfg: &RunConfig,
    market_manifest: &Path,
    data: &MarketDataset,
    result: &BacktestResult,
) -> Result<RunManifest> {
    let fdir = dir.join(FORECAST_DIR);
    std::fs::create_dir_all(&fdir).map_err(|e| Error::io(&fdir, e))?;
    write(&dir.join(CONFIG_FILE), &cfg.to_toml()?)?;
    let mut models = Vec::new();
    for m in &result.models {
        let text = forecast_csv(&m.records);
        write(&fdir.join(format!("{}.csv", m.entry.id)), &text)?;
        if let Some(draws) = draws_csv(&m.records) {
            let ddir = dir.join(DRAWS_DIR);
            std::fs::create_dir_all(&ddir).map_err(|e| Error::io(&ddir, e))?;
            write(&ddir.join(format!("{}.csv", m.entry.id)), &draws)?;
        }
        models.push(RunModel {
            id: m.entry.id.clone(),
            records: m.records.len(),
            sha256: hex::encode(Sha256::digest(text.as_bytes())),
        });
    }
    let manifest = RunManifest {
        config_hash: cfg.hash()?,
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        market: data.market.clone(),
        market_manifest: market_manifest.to_path_buf(),
        data_start: data.start(),
        data_end: data.end(),
        eval_start: cfg.eval_start,
        eval_end: cfg.eval_end,
        models,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    write(&dir.join(MANIFEST_FILE), &(json + "\n"))?;
    Ok(manifest)
}

#[derive(Debug, Deserialize)]
struct ForecastRow {
    target_date: NaiveDate,
    hour: usize,
    point: f64,
    realized: f64,
    scale_hh: f64,
    dof: Option<f64>,
    crps: f64,
}

/// Reads a forecast CSV back into records (marginal scales only).
pub fn read_forecasts(path: &Path, model_id: &str) -> Result<Vec<ForecastRecord>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut by_date: BTreeMap<NaiveDate, Vec<ForecastRow>> = BTreeMap::new();
    for row in rdr.deserialize::<ForecastRow>() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        by_date.entry(row.target_date).or_default().push(row);
    }
    by_date
        .into_iter()
        .map(|(date, mut rows)| {
            rows.sort_by_key(|r| r.hour);
            if rows.len() != HOURS || rows.iter().enumerate().any(|(i, r)| r.hour != i + 1) {
                return Err(Error::MisalignedRecords(format!("{}: {date} lacks a full set of 24 hours", path.display())));
            }
            let kind = match rows[0].dof {
                Some(dof) => DensityKind::StudentT { dof },
                None => DensityKind::Gaussian,
            };
            let point = std::array::from_fn(|h| rows[h].point);
            let density = ForecastDensity {
                kind,
                mean: DVector::from_row_slice(&point),
                scale: DMatrix::from_diagonal(&DVector::from_iterator(HOURS, rows.iter().map(|r| r.scale_hh))),
                draws: None,
                target_date: Some(date),
                independent_margins: true,
            };
            Ok(ForecastRecord {
                model_id: model_id.to_string(),
                target_date: date,
                density,
                point,
                realized: std::array::from_fn(|h| rows[h].realized),
                crps: std::array::from_fn(|h| rows[h].crps),
            })
        })
        .collect()
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Loads the stored config and every model's forecasts from a run directory.
pub fn read_run(dir: &Path) -> Result<(RunConfig, Vec<ModelForecasts>)> {
    let cfg = RunConfig::from_path(&dir.join(CONFIG_FILE))?;
    let models = cfg
        .models
        .iter()
        .map(|entry| {
            let path = dir.join(FORECAST_DIR).join(format!("{}.csv", entry.id));
            if !path.exists() {
                return Err(Error::MisalignedRecords(format!("missing forecast file {}", path.display())));
            }
            Ok(ModelForecasts { entry: entry.clone(), records: read_forecasts(&path, &entry.id)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((cfg, models))
}
