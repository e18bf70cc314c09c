//! Evaluation tables and plotting aggregates.

use chrono::Datelike;
use nalgebra::DMatrix;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::backtest::{check_alignment, loss_series, Loss, ModelForecasts, Target};
use crate::error::{Error, Result};
use crate::ingest::{MarketDataset, HOURS};
use crate::metrics::{dm_test_with, mcs, rmse_aggregates, significance_stars, DmResult, McsResult};
use crate::run::MetricsConfig;
use crate::seed;

/// Hours shown in the summary tables.
pub const SUMMARY_HOURS: [usize; 8] = [1, 4, 7, 10, 13, 16, 19, 22];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Rmse,
    Crps,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Rmse => "rmse",
            Metric::Crps => "crps",
        }
    }

    fn loss(self) -> Loss {
        match self {
            Metric::Rmse => Loss::SquaredError,
            Metric::Crps => Loss::Crps,
        }
    }
}

/// Every hour followed by the two aggregates.
pub fn all_targets() -> Vec<Target> {
    (1..=HOURS).map(Target::Hour).chain([Target::Avg, Target::AvgPeak]).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub value: f64,
    /// value / benchmark value; 1 for the benchmark itself.
    pub ratio: f64,
    /// Benchmark (a) against this model (b); absent for benchmark rows.
    pub dm: Option<DmResult>,
    pub mcs_p: f64,
    pub in_mcs: bool,
}

impl Cell {
    pub fn stars(&self) -> &'static str {
        self.dm.as_ref().map(|d| significance_stars(d.p_value)).unwrap_or("")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricTable {
    pub metric: Metric,
    pub models: Vec<String>,
    pub is_benchmark: Vec<bool>,
    pub targets: Vec<Target>,
    /// cells[model][target]
    pub cells: Vec<Vec<Cell>>,
    pub mcs: Vec<McsResult>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationReport {
    pub observations: usize,
    pub alpha: f64,
    pub tables: Vec<MetricTable>,
}

fn point_values(metric: Metric, m: &ModelForecasts) -> Vec<f64> {
    let t = m.records.len() as f64;
    let per_hour: [f64; HOURS] = std::array::from_fn(|h| {
        let s: f64 = m
            .records
            .iter()
            .map(|r| match metric {
                Metric::Rmse => (r.point[h] - r.realized[h]).powi(2),
                Metric::Crps => r.crps[h],
            })
            .sum::<f64>()
            / t;
        if metric == Metric::Rmse {
            s.sqrt()
        } else {
            s
        }
    });
    let (avg, peak) = rmse_aggregates(&per_hour);
    per_hour.iter().copied().chain([avg, peak]).collect()
}

/// Index of the benchmark for each model (same family class).
fn benchmarks(models: &[ModelForecasts]) -> Result<Vec<usize>> {
    models
        .iter()
        .map(|m| {
            let uni = m.entry.spec.family.is_univariate();
            let found: Vec<usize> = (0..models.len())
                .filter(|&j| models[j].entry.benchmark && models[j].entry.spec.family.is_univariate() == uni)
                .collect();
            match found.as_slice() {
                [j] => Ok(*j),
                _ => Err(Error::Config(format!(
                    "model {} needs exactly one {} benchmark, found {}",
                    m.entry.id,
                    if uni { "univariate" } else { "multivariate" },
                    found.len()
                ))),
            }
        })
        .collect()
}

/// Scores, DM tests against benchmarks and MCS membership for all models.
pub fn evaluate(models: &[ModelForecasts], cfg: &MetricsConfig, seed: u64) -> Result<EvaluationReport> {
    if models.is_empty() {
        return Err(Error::EmptyErrors);
    }
    let sets: Vec<&[_]> = models.iter().map(|m| m.records.as_slice()).collect();
    check_alignment(&sets)?;
    let bench = benchmarks(models)?;
    let targets = all_targets();
    let t = models[0].records.len();
    let mut tables = Vec::new();
    for (mi, metric) in [Metric::Rmse, Metric::Crps].into_iter().enumerate() {
        let values: Vec<Vec<f64>> = models.iter().map(|m| point_values(metric, m)).collect();
        let mut mcs_results = Vec::new();
        let mut cells: Vec<Vec<Cell>> = vec![Vec::new(); models.len()];
        for (ti, &target) in targets.iter().enumerate() {
            let losses: Vec<Vec<f64>> = models.iter().map(|m| loss_series(&m.records, metric.loss(), target)).collect();
            let loss_matrix = DMatrix::from_fn(t, models.len(), |r, c| losses[c][r]);
            let res = mcs(&loss_matrix, &cfg.mcs, seed::derive_path(seed, &[mi as u64, ti as u64]))?;
            for (j, m) in models.iter().enumerate() {
                let b = bench[j];
                let dm = if m.entry.benchmark { None } else { Some(dm_test_with(&losses[b], &losses[j], true, &cfg.hac)?) };
                let base = values[b][ti];
                cells[j].push(Cell {
                    value: values[j][ti],
                    ratio: if j == b { 1.0 } else { values[j][ti] / base },
                    dm,
                    mcs_p: res.p_values[j],
                    in_mcs: res.contains(j),
                });
            }
            mcs_results.push(res);
        }
        tables.push(MetricTable {
            metric,
            models: models.iter().map(|m| m.entry.id.clone()).collect(),
            is_benchmark: models.iter().map(|m| m.entry.benchmark).collect(),
            targets: targets.clone(),
            cells,
            mcs: mcs_results,
        });
    }
    Ok(EvaluationReport { observations: t, alpha: cfg.mcs.alpha, tables })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Encoding {
    Raw,
    Ratio,
}

impl MetricTable {
    pub fn target_index(&self, target: Target) -> Option<usize> {
        self.targets.iter().position(|&t| t == target)
    }

    pub fn cell(&self, model: &str, target: Target) -> Option<&Cell> {
        let i = self.models.iter().position(|m| m == model)?;
        Some(&self.cells[i][self.target_index(target)?])
    }

    /// Wide table: one row per model, one column per target, stars appended.
    pub fn to_csv(&self, targets: &[Target], encoding: Encoding) -> String {
        let mut out = String::from("model,benchmark,encoding");
        for t in targets {
            out.push(',');
            out.push_str(&t.label());
        }
        out.push('\n');
        for (i, model) in self.models.iter().enumerate() {
            let raw = encoding == Encoding::Raw || self.is_benchmark[i];
            let _ = write!(out, "{model},{},{}", self.is_benchmark[i], if raw { "raw" } else { "ratio" });
            for t in targets {
                let c = &self.cells[i][self.target_index(*t).expect("known target")];
                if raw {
                    let _ = write!(out, ",{:.4}{}", c.value, c.stars());
                } else {
                    let _ = write!(out, ",{:.3}{}", c.ratio, c.stars());
                }
            }
            out.push('\n');
        }
        out
    }

    /// MCS membership flags, same shape as [`MetricTable::to_csv`].
    pub fn mcs_csv(&self, targets: &[Target]) -> String {
        let mut out = String::from("model");
        for t in targets {
            out.push(',');
            out.push_str(&t.label());
        }
        out.push('\n');
        for (i, model) in self.models.iter().enumerate() {
            out.push_str(model);
            for t in targets {
                let _ = write!(out, ",{}", self.cells[i][self.target_index(*t).expect("known target")].in_mcs);
            }
            out.push('\n');
        }
        out
    }
}

pub fn summary_targets() -> Vec<Target> {
    SUMMARY_HOURS.iter().map(|&h| Target::Hour(h)).chain([Target::Avg, Target::AvgPeak]).collect()
}

impl EvaluationReport {
    pub fn table(&self, metric: Metric) -> &MetricTable {
        self.tables.iter().find(|t| t.metric == metric).expect("both metrics are always present")
    }

    /// Tidy long table with full precision.
    pub fn long_csv(&self) -> String {
        let mut out = String::from("metric,model,benchmark,target,value,ratio,dm_stat,dm_p,dm_degenerate,stars,mcs_p,in_mcs\n");
        for table in &self.tables {
            for (i, model) in table.models.iter().enumerate() {
                for (ti, t) in table.targets.iter().enumerate() {
                    let c = &table.cells[i][ti];
                    let (stat, p, deg) = match &c.dm {
                        Some(d) => (d.statistic.to_string(), d.p_value.to_string(), d.degenerate.to_string()),
                        None => (String::new(), String::new(), String::new()),
                    };
                    let _ = writeln!(
                        out,
                        "{},{model},{},{},{},{},{stat},{p},{deg},{},{},{}",
                        table.metric.name(),
                        table.is_benchmark[i],
                        t.label(),
                        c.value,
                        c.ratio,
                        c.stars(),
                        c.mcs_p,
                        c.in_mcs
                    );
                }
            }
        }
        out
    }

    /// Writes every table into `dir`; returns the file names.
    pub fn write(&self, dir: &Path) -> Result<Vec<String>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut files = Vec::new();
        let mut put = |name: String, text: String| -> Result<()> {
            let path = dir.join(&name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            files.push(name);
            Ok(())
        };
        let summary = summary_targets();
        let full = all_targets();
        for table in &self.tables {
            let n = table.metric.name();
            put(format!("{n}_summary_raw.csv"), table.to_csv(&summary, Encoding::Raw))?;
            put(format!("{n}_summary_ratio.csv"), table.to_csv(&summary, Encoding::Ratio))?;
            put(format!("{n}_full_raw.csv"), table.to_csv(&full, Encoding::Raw))?;
            put(format!("{n}_full_ratio.csv"), table.to_csv(&full, Encoding::Ratio))?;
            put(format!("{n}_mcs.csv"), table.mcs_csv(&full))?;
        }
        put("scores_long.csv".into(), self.long_csv())?;
        Ok(files)
    }
}

/// Grouping used by [`profile_csv`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    Monthly,
    DayOfWeek,
    Yearly,
}

impl Profile {
    pub const ALL: [Profile; 3] = [Profile::Monthly, Profile::DayOfWeek, Profile::Yearly];

    pub fn name(self) -> &'static str {
        match self {
            Profile::Monthly => "monthly",
            Profile::DayOfWeek => "day_of_week",
            Profile::Yearly => "yearly",
        }
    }

    fn key(self, d: chrono::NaiveDate) -> i32 {
        match self {
            Profile::Monthly => d.month() as i32,
            Profile::DayOfWeek => d.weekday().number_from_monday() as i32,
            Profile::Yearly => d.year(),
        }
    }

    fn column(self) -> &'static str {
        match self {
            Profile::Monthly => "month",
            Profile::DayOfWeek => "weekday",
            Profile::Yearly => "year",
        }
    }
}

/// Mean of every hourly panel per (group, hour): one row per group and hour.
pub fn profile_csv(data: &MarketDataset, profile: Profile) -> String {
    let mut panels = vec![("price", &data.price), ("demand", &data.demand), ("wind", &data.wind)];
    if let Some(s) = &data.solar {
        panels.push(("solar", s));
    }
    let mut groups: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (i, d) in data.dates().iter().enumerate() {
        groups.entry(profile.key(*d)).or_default().push(i);
    }
    let mut out = format!("{},hour,days", profile.column());
    for (name, _) in &panels {
        let _ = write!(out, ",{name}");
    }
    out.push('\n');
    for (key, idx) in &groups {
        for h in 0..HOURS {
            let _ = write!(out, "{key},{},{}", h + 1, idx.len());
            for (_, p) in &panels {
                let mean = idx.iter().map(|&i| p.rows()[i][h]).sum::<f64>() / idx.len() as f64;
                let _ = write!(out, ",{mean}");
            }
            out.push('\n');
        }
    }
    out
}

/// Writes the three profile files into `dir`.
pub fn write_profiles(data: &MarketDataset, dir: &Path) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Profile::ALL
        .iter()
        .map(|p| {
            let name = format!("profile_{}.csv", p.name());
            let path = dir.join(&name);
            std::fs::write(&path, profile_csv(data, *p)).map_err(|e| Error::io(&path, e))?;
            Ok(name)
        })
        .collect()
}
