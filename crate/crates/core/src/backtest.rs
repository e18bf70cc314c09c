//! Rolling-window one-day-ahead forecasting.

use chrono::{Datelike, NaiveDate};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use crate::design::{build_design, regressor_row, DateWindow, ModelSpec};
use crate::error::{Error, Result};
use crate::estimate::{sample_density, DensityKind, FittedModel, ForecastDensity, PriorConfig, SolverConfig};
use crate::ingest::{DayRow, MarketDataset, HOURS};
use crate::metrics::{crps_gaussian, crps_sample, crps_student_t, PEAK_HOURS};
use crate::seed;

pub const DEFAULT_DRAWS: usize = 2000;

/// A model taking part in a backtest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub id: String,
    #[serde(flatten)]
    pub spec: ModelSpec,
    /// Reference model for ratios and DM tests within its family class.
    #[serde(default)]
    pub benchmark: bool,
}

impl ModelEntry {
    pub fn new(id: impl Into<String>, spec: ModelSpec) -> Self {
        Self { id: id.into(), spec, benchmark: false }
    }

    pub fn benchmark(mut self) -> Self {
        self.benchmark = true;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BacktestPlan {
    pub models: Vec<ModelEntry>,
    /// Rolling window length R in days.
    pub window_days: usize,
    pub eval_start: NaiveDate,
    pub eval_end: NaiveDate,
    /// Predictive draws per Bayesian density; 0 scores the closed form.
    pub draws: usize,
    /// Keep draws on the records (memory heavy).
    pub keep_draws: bool,
    pub seed: u64,
    pub prior: PriorConfig,
    pub solver: SolverConfig,
}

impl BacktestPlan {
    pub fn new(models: Vec<ModelEntry>, window_days: usize, eval_start: NaiveDate, eval_end: NaiveDate) -> Self {
        Self {
            models,
            window_days,
            eval_start,
            eval_end,
            draws: DEFAULT_DRAWS,
            keep_draws: false,
            seed: 0,
            prior: PriorConfig::default(),
            solver: SolverConfig::default(),
        }
    }

    /// Evaluation dates, inclusive.
    pub fn eval_dates(&self) -> Vec<NaiveDate> {
        self.eval_start.iter_days().take_while(|d| *d <= self.eval_end).collect()
    }

    pub fn validate(&self, data: &MarketDataset) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::PlanOutOfRange("no models".into()));
        }
        let mut seen = HashSet::new();
        for m in &self.models {
            if !seen.insert(m.id.as_str()) {
                return Err(Error::Config(format!("duplicate model id {:?}", m.id)));
            }
            if m.spec.lags.max() >= self.window_days {
                return Err(Error::PlanOutOfRange(format!(
                    "window of {} days cannot cover lag {} of model {}",
                    self.window_days,
                    m.spec.lags.max(),
                    m.id
                )));
            }
            if m.spec.exog.solar && !data.has_solar() {
                return Err(Error::SolarUnavailable);
            }
        }
        if self.eval_start > self.eval_end {
            return Err(Error::PlanOutOfRange(format!("eval_start {} after eval_end {}", self.eval_start, self.eval_end)));
        }
        let first = data.index_of(self.eval_start).ok_or_else(|| {
            Error::PlanOutOfRange(format!("eval_start {} outside data {}..{}", self.eval_start, data.start(), data.end()))
        })?;
        if data.index_of(self.eval_end).is_none() {
            return Err(Error::PlanOutOfRange(format!(
                "eval_end {} outside data {}..{}",
                self.eval_end,
                data.start(),
                data.end()
            )));
        }
        if first < self.window_days {
            return Err(Error::PlanOutOfRange(format!(
                "eval_start {} leaves {} days before it, window needs {}",
                self.eval_start, first, self.window_days
            )));
        }
        if self.draws == 1 {
            return Err(Error::TooFewDraws(1));
        }
        Ok(())
    }
}

/// One model's forecast for one delivery day.
#[derive(Clone, Debug, PartialEq)]
pub struct ForecastRecord {
    pub model_id: String,
    pub target_date: NaiveDate,
    pub density: ForecastDensity,
    pub point: DayRow,
    pub realized: DayRow,
    /// CRPS per hour: from the draws when present, otherwise closed form.
    pub crps: DayRow,
}

impl ForecastRecord {
    pub fn errors(&self) -> DayRow {
        std::array::from_fn(|h| self.point[h] - self.realized[h])
    }
}

/// Per-hour CRPS of `density` against `realized`.
pub fn density_crps(density: &ForecastDensity, realized: &DayRow) -> Result<DayRow> {
    let mut out = [0.0; HOURS];
    for (h, slot) in out.iter_mut().enumerate() {
        *slot = match (&density.draws, density.kind) {
            (Some(d), _) => crps_sample(d.column(h).as_slice(), realized[h])?,
            (None, DensityKind::Gaussian) => crps_gaussian(density.mean[h], density.scale[(h, h)].sqrt(), realized[h])?,
            (None, DensityKind::StudentT { dof }) => {
                crps_student_t(density.mean[h], density.scale[(h, h)].sqrt(), dof, realized[h])?
            }
            (None, DensityKind::Empirical) => return Err(Error::EmptyDensity(0)),
        };
    }
    Ok(out)
}

fn fit_and_predict(data: &MarketDataset, spec: &ModelSpec, window: DateWindow, target: NaiveDate, plan: &BacktestPlan) -> Result<ForecastDensity> {
    let ds = build_design(data, spec, window)?;
    let model = FittedModel::fit(&ds, spec, &plan.prior, &plan.solver)?;
    model.predict(&regressor_row(data, spec, target)?)
}

/// Density for `target` fitted on the `window_days` days ending the day before.
pub fn forecast_density(data: &MarketDataset, entry: &ModelEntry, target: NaiveDate, plan: &BacktestPlan) -> Result<ForecastDensity> {
    let window = DateWindow::ending(target.pred_opt().ok_or(Error::PlanOutOfRange(target.to_string()))?, plan.window_days);
    let wrap = |e: Error| Error::FitFailure { model: entry.id.clone(), date: target, source: Box::new(e) };
    let mut density = if entry.spec.family.is_univariate() {
        let parts = (1..=HOURS)
            .map(|h| fit_and_predict(data, &entry.spec.for_hour(h), window, target, plan))
            .collect::<Result<Vec<_>>>()
            .map_err(wrap)?;
        ForecastDensity::stack(&parts).map_err(wrap)?
    } else {
        fit_and_predict(data, &entry.spec, window, target, plan).map_err(wrap)?
    };
    density.target_date = Some(target);
    Ok(density)
}

/// RNG stream for the draws of `model` on `target`.
pub fn draw_seed(base: u64, model: &str, target: NaiveDate) -> u64 {
    seed::derive_path(base, &[seed::label_stream(model), target.num_days_from_ce() as u64])
}

/// Full record for one (model, date) task.
pub fn forecast_one(data: &MarketDataset, entry: &ModelEntry, target: NaiveDate, plan: &BacktestPlan) -> Result<ForecastRecord> {
    let mut density = forecast_density(data, entry, target, plan)?;
    let realized = *data.price.row_at(target).ok_or(Error::PlanOutOfRange(target.to_string()))?;
    if plan.draws >= 2 && matches!(density.kind, DensityKind::StudentT { .. }) {
        density = sample_density(&density, plan.draws, draw_seed(plan.seed, &entry.id, target))?;
    }
    let crps = density_crps(&density, &realized)?;
    if !plan.keep_draws {
        density.draws = None;
    }
    let point = std::array::from_fn(|h| density.mean[h]);
    Ok(ForecastRecord { model_id: entry.id.clone(), target_date: target, density, point, realized, crps })
}

/// All records of one model, ordered by date.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelForecasts {
    pub entry: ModelEntry,
    pub records: Vec<ForecastRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BacktestResult {
    pub models: Vec<ModelForecasts>,
}

impl BacktestResult {
    pub fn get(&self, id: &str) -> Option<&ModelForecasts> {
        self.models.iter().find(|m| m.entry.id == id)
    }
}

/// Runs every (model, evaluation date) task on the current rayon pool.
/// Results are ordered by model then date, independent of scheduling.
pub fn run_backtest(data: &MarketDataset, plan: &BacktestPlan) -> Result<BacktestResult> {
    plan.validate(data)?;
    let dates = plan.eval_dates();
    let tasks: Vec<(usize, NaiveDate)> =
        (0..plan.models.len()).flat_map(|m| dates.iter().map(move |&d| (m, d))).collect();
    let records = tasks
        .par_iter()
        .map(|&(m, d)| forecast_one(data, &plan.models[m], d, plan))
        .collect::<Result<Vec<_>>>()?;
    let mut it = records.into_iter();
    let models = plan
        .models
        .iter()
        .map(|entry| ModelForecasts { entry: entry.clone(), records: it.by_ref().take(dates.len()).collect() })
        .collect();
    Ok(BacktestResult { models })
}

/// [`run_backtest`] on a dedicated pool of `jobs` threads (the global pool when `None`).
pub fn run_backtest_jobs(data: &MarketDataset, plan: &BacktestPlan, jobs: Option<usize>) -> Result<BacktestResult> {
    match jobs {
        None => run_backtest(data, plan),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| run_backtest(data, plan)),
    }
}

fn check_records(records: &[ForecastRecord]) -> Result<()> {
    let first = records.first().ok_or(Error::EmptyErrors)?;
    for w in records.windows(2) {
        if w[1].model_id != first.model_id {
            return Err(Error::MisalignedRecords(format!("mixed models {} and {}", first.model_id, w[1].model_id)));
        }
        if w[1].target_date <= w[0].target_date {
            return Err(Error::MisalignedRecords(format!("dates not increasing at {}", w[1].target_date)));
        }
    }
    Ok(())
}

/// T×24 matrix of point − realized.
pub fn forecast_errors(records: &[ForecastRecord]) -> Result<DMatrix<f64>> {
    check_records(records)?;
    Ok(DMatrix::from_fn(records.len(), HOURS, |t, h| records[t].point[h] - records[t].realized[h]))
}

/// T×24 matrix of per-hour CRPS.
pub fn crps_matrix(records: &[ForecastRecord]) -> Result<DMatrix<f64>> {
    check_records(records)?;
    Ok(DMatrix::from_fn(records.len(), HOURS, |t, h| records[t].crps[h]))
}

/// Fails unless all record sets cover the same dates and realizations.
pub fn check_alignment(sets: &[&[ForecastRecord]]) -> Result<()> {
    let Some(first) = sets.first() else { return Ok(()) };
    for s in sets {
        check_records(s)?;
        if s.len() != first.len() {
            return Err(Error::MisalignedRecords(format!(
                "{} has {} records, {} has {}",
                s[0].model_id,
                s.len(),
                first[0].model_id,
                first.len()
            )));
        }
        for (a, b) in s.iter().zip(first.iter()) {
            if a.target_date != b.target_date {
                return Err(Error::MisalignedRecords(format!("{} vs {}", a.target_date, b.target_date)));
            }
            if a.realized.iter().zip(&b.realized).any(|(x, y)| x.to_bits() != y.to_bits()) {
                return Err(Error::MisalignedRecords(format!("realized prices differ on {}", a.target_date)));
            }
        }
    }
    Ok(())
}

/// Loss used for comparisons.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Loss {
    SquaredError,
    Crps,
}

impl Loss {
    pub fn name(self) -> &'static str {
        match self {
            Loss::SquaredError => "se",
            Loss::Crps => "crps",
        }
    }
}

/// Hour (1-based) or daily aggregate a loss series refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Target {
    Hour(usize),
    Avg,
    AvgPeak,
}

impl Target {
    pub fn label(self) -> String {
        match self {
            Target::Hour(h) => format!("h{h:02}"),
            Target::Avg => "Avg".into(),
            Target::AvgPeak => "Avg_8_20".into(),
        }
    }
}

/// Daily loss series; aggregates average the hourly losses of each day.
pub fn loss_series(records: &[ForecastRecord], loss: Loss, target: Target) -> Vec<f64> {
    let hourly = |r: &ForecastRecord, h: usize| match loss {
        Loss::SquaredError => (r.point[h] - r.realized[h]).powi(2),
        Loss::Crps => r.crps[h],
    };
    records
        .iter()
        .map(|r| match target {
            Target::Hour(h) => hourly(r, h - 1),
            Target::Avg => (0..HOURS).map(|h| hourly(r, h)).sum::<f64>() / HOURS as f64,
            Target::AvgPeak => PEAK_HOURS.map(|h| hourly(r, h - 1)).sum::<f64>() / PEAK_HOURS.count() as f64,
        })
        .collect()
}

/// Weekday of `d` as 1 = Monday .. 7 = Sunday.
pub fn weekday_number(d: NaiveDate) -> u32 {
    d.weekday().number_from_monday()
}
