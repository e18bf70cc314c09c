//! Synthetic markets with known VARX dynamics.
//!
//! Prices follow the full multivariate design (all exogenous regressors) with
//! a coefficient matrix scaled to a target companion spectral radius. Demand
//! carries an annual sinusoid, wind is a persistent log-normal process, solar
//! is a diurnal block that is exactly zero outside daylight hours and fuels are
//! log random walks.

use chrono::{Datelike, NaiveDate};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use crate::design::{regressor_row, ColumnKind, ColumnMap, Estimator, ExogSpec, LagSet, ModelSpec};
use crate::error::{Error, Result};
use crate::estimate::{coefficient_table, DensityKind, ForecastDensity};
use crate::ingest::{
    dummy_row, export_dataset, jitter_solar, DayRow, Fuel, FuelSeries, HourlyPanel, MarketDataset, SeriesRole, HOURS,
};
use crate::linalg::psd_factor;
use crate::seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DgpConfig {
    pub market: String,
    #[serde(with = "crate::tomldate")]
    pub start: NaiveDate,
    pub days: usize,
    pub seed: u64,
    pub lags: LagSet,
    /// Target companion-form spectral radius of the price lags.
    pub spectral_radius: f64,
    /// Innovation standard deviation per hour.
    pub noise_sd: f64,
    /// Innovation correlation between hours i and j is noise_corr^|i-j|.
    pub noise_corr: f64,
    /// First and last daylight hour (1-based, inclusive).
    pub daylight: [usize; 2],
    pub solar: bool,
    /// Solar zeros are jittered before prices are simulated; 0 keeps exact zeros.
    pub jitter_epsilon: f64,
    pub burn_in: usize,
    pub price_level: f64,
    /// Price shift on Saturdays and Sundays.
    pub weekend_shift: [f64; 2],
    /// Amplitude of the annual cycle in the monthly dummy effects.
    pub seasonal_amplitude: f64,
    /// Own-hour coefficients.
    pub demand_coef: f64,
    pub wind_coef: f64,
    pub solar_coef: f64,
    /// CO2, gas and coal coefficients on every hour.
    pub fuel_coef: [f64; 3],
    pub demand_noise: f64,
    pub wind_persistence: f64,
    pub wind_level: f64,
    pub solar_peak: f64,
}

impl Default for DgpConfig {
    fn default() -> Self {
        Self {
            market: "synthetic".into(),
            start: NaiveDate::from_ymd_opt(2011, 1, 1).expect("valid date"),
            days: 2192,
            seed: 0,
            lags: LagSet::default(),
            spectral_radius: 0.8,
            noise_sd: 3.0,
            noise_corr: 0.6,
            daylight: [7, 19],
            solar: true,
            jitter_epsilon: 1e-3,
            burn_in: 200,
            price_level: 40.0,
            weekend_shift: [-3.0, -6.0],
            seasonal_amplitude: 3.0,
            demand_coef: 0.6,
            wind_coef: -0.9,
            solar_coef: -0.7,
            fuel_coef: [0.3, 0.4, 0.05],
            demand_noise: 2.0,
            wind_persistence: 0.5,
            wind_level: 12.0,
            solar_peak: 20.0,
        }
    }
}

impl DgpConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn validate(&self) -> Result<()> {
        let [a, b] = self.daylight;
        if !(1 <= a && a <= b && b <= HOURS) {
            return Err(Error::Config(format!("daylight hours {a}..{b} outside 1..=24")));
        }
        if !(self.noise_sd >= 0.0) || !(self.noise_corr.abs() < 1.0) {
            return Err(Error::Config("noise_sd must be >= 0 and |noise_corr| < 1".into()));
        }
        if !(0.0..1.0).contains(&self.wind_persistence.abs()) {
            return Err(Error::Config("|wind_persistence| must be < 1".into()));
        }
        if !(self.spectral_radius >= 0.0) {
            return Err(Error::Config("spectral_radius must be non-negative".into()));
        }
        if self.spectral_radius >= 1.0 {
            return Err(Error::ExplosiveDgp(self.spectral_radius));
        }
        Ok(())
    }

    pub fn is_daylight(&self, hour: usize) -> bool {
        (self.daylight[0]..=self.daylight[1]).contains(&hour)
    }

    /// The multivariate spec whose design the true coefficients conform to.
    pub fn full_spec(&self) -> ModelSpec {
        let mut exog = ExogSpec::all();
        exog.solar = self.solar;
        ModelSpec { lags: self.lags.clone(), ..ModelSpec::multivariate(Estimator::LeastSquares, exog) }
    }
}

/// A fully specified data-generating process.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticDgp {
    pub config: DgpConfig,
    pub spec: ModelSpec,
    /// m×24 coefficients in the column order of `spec`.
    pub phi: DMatrix<f64>,
    /// 24×24 innovation covariance.
    pub sigma: DMatrix<f64>,
}

fn fuel_index(f: Fuel) -> usize {
    match f {
        Fuel::Co2 => 0,
        Fuel::Gas => 1,
        Fuel::Coal => 2,
    }
}

/// Companion matrix of the price-lag block of `phi` laid out as `map`.
fn companion(map: &ColumnMap, phi: &DMatrix<f64>, max_lag: usize) -> DMatrix<f64> {
    let k = HOURS * max_lag;
    let mut c = DMatrix::zeros(k, k);
    for (row, kind) in map.kinds.iter().enumerate() {
        if let ColumnKind::PriceLag { hour, lag } = *kind {
            for (e, &h) in map.equation_hours.iter().enumerate() {
                c[(h - 1, (lag - 1) * HOURS + hour - 1)] = phi[(row, e)];
            }
        }
    }
    for i in HOURS..k {
        c[(i, i - HOURS)] = 1.0;
    }
    c
}

/// Spectral radius of the autoregressive part of a multivariate `phi`.
pub fn spectral_radius(spec: &ModelSpec, phi: &DMatrix<f64>) -> f64 {
    let map = ColumnMap::for_spec(spec);
    let c = companion(&map, phi, spec.lags.max());
    match nalgebra::linalg::Schur::try_new(c.clone(), 1e-14, 100_000) {
        Some(schur) => schur.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max),
        None => gelfand_radius(&c),
    }
}

/// ‖Cᵏ‖^{1/k} for a large power k, by repeated squaring with renormalisation.
fn gelfand_radius(c: &DMatrix<f64>) -> f64 {
    let mut p = c.clone();
    let mut log_scale = 0.0;
    let mut k = 1.0;
    for _ in 0..20 {
        let norm = p.norm();
        if norm == 0.0 {
            return 0.0;
        }
        p /= norm;
        log_scale = 2.0 * (log_scale + norm.ln());
        p = &p * &p;
        k *= 2.0;
    }
    ((log_scale + p.norm().ln()) / k).exp()
}

impl SyntheticDgp {
    pub fn from_config(config: &DgpConfig) -> Result<Self> {
        config.validate()?;
        let spec = config.full_spec();
        let map = ColumnMap::for_spec(&spec);
        let m = map.kinds.len();
        let mut lag_part = DMatrix::zeros(m, HOURS);
        let mut rest = DMatrix::zeros(m, HOURS);
        for (row, kind) in map.kinds.iter().enumerate() {
            for h in 1..=HOURS {
                let e = h - 1;
                match *kind {
                    ColumnKind::PriceLag { hour, lag } => {
                        let dist = hour.abs_diff(h);
                        lag_part[(row, e)] = match (lag, dist) {
                            (1, 0) => 0.5,
                            (1, 1) => 0.1,
                            (1, _) => 0.01,
                            (2, 0) => 0.1,
                            (7, 0) => 0.2,
                            (_, 0) => 0.05,
                            _ => 0.0,
                        };
                    }
                    ColumnKind::Dummy(k) if k < 12 => {
                        let month_phase = 2.0 * PI * k as f64 / 12.0;
                        let diurnal = 5.0 * (2.0 * PI * (h as f64 - 4.0) / 24.0).sin();
                        rest[(row, e)] = config.seasonal_amplitude * month_phase.cos() + diurnal;
                    }
                    ColumnKind::Dummy(k) => rest[(row, e)] = config.weekend_shift[k - 12],
                    ColumnKind::Demand { hour } if hour == h => rest[(row, e)] = config.demand_coef,
                    ColumnKind::Wind { hour } if hour == h => rest[(row, e)] = config.wind_coef,
                    ColumnKind::Solar { hour } if hour == h => rest[(row, e)] = config.solar_coef,
                    ColumnKind::Fuel(f) => rest[(row, e)] = config.fuel_coef[fuel_index(f)],
                    _ => {}
                }
            }
        }
        let target = config.spectral_radius;
        let radius_at = |c: f64| spectral_radius(&spec, &(&lag_part * c));
        let scale = if target == 0.0 {
            0.0
        } else {
            let mut hi = 1.0;
            while radius_at(hi) < target {
                hi *= 2.0;
            }
            let mut lo = 0.0;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if radius_at(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let lags_scaled = &lag_part * scale;
        // shift the monthly dummies so the unconditional price mean sits near price_level
        let persistence: Vec<f64> = (0..HOURS).map(|e| lags_scaled.column(e).sum()).collect();
        let mut phi = lags_scaled + rest;
        for (row, kind) in map.kinds.iter().enumerate() {
            if let ColumnKind::Dummy(k) = kind {
                if *k < 12 {
                    for e in 0..HOURS {
                        let exog_mean = config.demand_coef * 55.0
                            + config.wind_coef * config.wind_level
                            + if config.solar { config.solar_coef * 0.3 * config.solar_peak } else { 0.0 };
                        phi[(row, e)] += config.price_level * (1.0 - persistence[e]) - exog_mean;
                    }
                }
            }
        }
        let sigma = DMatrix::from_fn(HOURS, HOURS, |i, j| {
            config.noise_sd * config.noise_sd * config.noise_corr.powi(i.abs_diff(j) as i32)
        });
        Self::new(config.clone(), phi, sigma)
    }

    /// A process with explicit coefficients; `phi` must follow `config.full_spec()`.
    pub fn new(config: DgpConfig, phi: DMatrix<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        config.validate()?;
        let spec = config.full_spec();
        let m = spec.column_count();
        if phi.shape() != (m, HOURS) {
            return Err(Error::DimensionMismatch { expected: m, got: phi.nrows() });
        }
        if sigma.shape() != (HOURS, HOURS) {
            return Err(Error::DimensionMismatch { expected: HOURS, got: sigma.nrows() });
        }
        let asym = (&sigma - sigma.transpose()).abs().max();
        if asym > 1e-10 * sigma.abs().max().max(1.0) || sigma.clone().symmetric_eigenvalues().min() < -1e-10 {
            return Err(Error::NonPdPrior("innovation covariance must be symmetric PSD".into()));
        }
        let radius = spectral_radius(&spec, &phi);
        if radius >= 1.0 {
            return Err(Error::ExplosiveDgp(radius));
        }
        Ok(Self { config, spec, phi, sigma })
    }

    pub fn radius(&self) -> f64 {
        spectral_radius(&self.spec, &self.phi)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut out = self.clone();
        out.config.seed = seed;
        out
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn day_of_year_phase(date: NaiveDate) -> f64 {
    2.0 * PI * date.ordinal0() as f64 / 365.25
}

fn demand_panel(cfg: &DgpConfig, dates: &[NaiveDate], rng: &mut ChaCha8Rng) -> Vec<DayRow> {
    dates
        .iter()
        .map(|d| {
            let weekend = if d.weekday().number_from_monday() >= 6 { -4.0 } else { 0.0 };
            let level = 55.0 + 8.0 * day_of_year_phase(*d).cos() + weekend + cfg.demand_noise * normal(rng);
            std::array::from_fn(|h| {
                let diurnal = 6.0 * (2.0 * PI * (h as f64 - 8.0) / 24.0).sin();
                level + diurnal + 0.75 * cfg.demand_noise * normal(rng)
            })
        })
        .collect()
}

fn wind_panel(cfg: &DgpConfig, dates: &[NaiveDate], rng: &mut ChaCha8Rng) -> Vec<DayRow> {
    let rho = cfg.wind_persistence;
    let innov = (1.0 - rho * rho).sqrt();
    let mut z = normal(rng);
    dates
        .iter()
        .map(|d| {
            z = rho * z + innov * normal(rng);
            let season = 0.2 * day_of_year_phase(*d).cos();
            let mut u = 0.0;
            std::array::from_fn(|_| {
                u = 0.7 * u + 0.3 * normal(rng);
                cfg.wind_level * (0.6 * z + season + u - 0.2).exp()
            })
        })
        .collect()
}

fn solar_panel(cfg: &DgpConfig, dates: &[NaiveDate], rng: &mut ChaCha8Rng) -> Vec<DayRow> {
    let [a, b] = cfg.daylight;
    let span = (b - a + 1) as f64;
    dates
        .iter()
        .map(|d| {
            let season = 1.0 - 0.4 * day_of_year_phase(*d).cos();
            let cloud = 0.3 + 0.7 * rng.random::<f64>();
            std::array::from_fn(|i| {
                let h = i + 1;
                if !cfg.is_daylight(h) {
                    return 0.0;
                }
                let shape = (PI * (h - a) as f64 / span + PI / (2.0 * span)).sin();
                cfg.solar_peak * shape * season * cloud * (1.0 + 0.05 * normal(rng)).max(0.05)
            })
        })
        .collect()
}

fn fuel_paths(dates: &[NaiveDate], rng: &mut ChaCha8Rng) -> [Vec<f64>; 3] {
    let start = [7.0, 20.0, 60.0];
    let vol = [0.02, 0.015, 0.01];
    std::array::from_fn(|k| {
        let mut log = 0.0f64;
        dates
            .iter()
            .map(|_| {
                log += vol[k] * normal(rng);
                // mild pull towards the starting level keeps long runs bounded
                log *= 0.998;
                start[k] * log.exp()
            })
            .collect()
    })
}

/// Simulates `days` days of the process starting at `config.start`.
pub fn generate(dgp: &SyntheticDgp, days: usize) -> Result<MarketDataset> {
    let cfg = &dgp.config;
    let max_lag = dgp.spec.lags.max();
    if days <= 2 * max_lag {
        return Err(Error::WindowTooShort { days, max_lag });
    }
    let total = days + cfg.burn_in + max_lag;
    let first = cfg.start - chrono::Days::new((cfg.burn_in + max_lag) as u64);
    let dates: Vec<NaiveDate> = (0..total).map(|i| first + chrono::Days::new(i as u64)).collect();
    let stream = |k: u64| ChaCha8Rng::seed_from_u64(seed::derive(cfg.seed, k));

    let demand = demand_panel(cfg, &dates, &mut stream(1));
    let wind = wind_panel(cfg, &dates, &mut stream(2));
    let solar = if cfg.solar {
        let raw = HourlyPanel::new(dates.clone(), solar_panel(cfg, &dates, &mut stream(3)), SeriesRole::Solar)?;
        Some(if cfg.jitter_epsilon > 0.0 { jitter_solar(&raw, cfg.jitter_epsilon, seed::derive(cfg.seed, 4))?.0 } else { raw })
    } else {
        None
    };
    let [co2, gas, coal] = fuel_paths(&dates, &mut stream(5));

    let factor = psd_factor(&dgp.sigma);
    let mut noise_rng = stream(6);
    let map = ColumnMap::for_spec(&dgp.spec);
    let fuels = [&co2, &gas, &coal];
    let mut prices: Vec<DayRow> = Vec::with_capacity(total);
    let mut x = DVector::zeros(map.kinds.len());
    for (idx, date) in dates.iter().enumerate() {
        let eps = &factor * DVector::from_iterator(HOURS, (0..HOURS).map(|_| normal(&mut noise_rng)));
        if idx < max_lag {
            prices.push(std::array::from_fn(|h| cfg.price_level + eps[h]));
            continue;
        }
        let dummies = dummy_row(*date);
        for (slot, kind) in x.iter_mut().zip(&map.kinds) {
            *slot = match *kind {
                ColumnKind::PriceLag { hour, lag } => prices[idx - lag][hour - 1],
                ColumnKind::Dummy(k) => dummies[k],
                ColumnKind::Demand { hour } => demand[idx][hour - 1],
                ColumnKind::Wind { hour } => wind[idx][hour - 1],
                ColumnKind::Solar { hour } => solar.as_ref().expect("solar design").rows()[idx][hour - 1],
                ColumnKind::Fuel(f) => fuels[fuel_index(f)][idx - 1],
            };
        }
        let mean = dgp.phi.tr_mul(&x);
        let row: DayRow = std::array::from_fn(|h| mean[h] + eps[h]);
        if row.iter().any(|v| !v.is_finite() || v.abs() > 1e12) {
            return Err(Error::ExplosiveDgp(dgp.radius()));
        }
        prices.push(row);
    }

    let fuel_series = FuelSeries::new(dates.clone(), co2, gas, coal)?;
    let data = MarketDataset::new(
        cfg.market.clone(),
        HourlyPanel::new(dates.clone(), prices, SeriesRole::Price)?,
        HourlyPanel::new(dates.clone(), demand, SeriesRole::Demand)?,
        HourlyPanel::new(dates.clone(), wind, SeriesRole::Wind)?,
        solar,
        fuel_series,
    )?;
    data.slice(cfg.start, *dates.last().expect("non-empty"))
}

/// Conditional-mean forecasts of the true process.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleForecasts {
    pub dates: Vec<NaiveDate>,
    pub means: Vec<DayRow>,
    pub sigma: DMatrix<f64>,
}

impl OracleForecasts {
    pub fn mean_at(&self, date: NaiveDate) -> Option<&DayRow> {
        let first = *self.dates.first()?;
        let i = usize::try_from((date - first).num_days()).ok()?;
        self.means.get(i)
    }

    /// Gaussian predictive density of the true process for `date`.
    pub fn density_at(&self, date: NaiveDate) -> Option<ForecastDensity> {
        let mean = self.mean_at(date)?;
        Some(ForecastDensity {
            kind: DensityKind::Gaussian,
            mean: DVector::from_row_slice(mean),
            scale: self.sigma.clone(),
            draws: None,
            target_date: Some(date),
            independent_margins: false,
        })
    }
}

/// Oracle means for every date of `data` that has a full lag history.
pub fn oracle_forecasts(dgp: &SyntheticDgp, data: &MarketDataset) -> Result<OracleForecasts> {
    let skip = dgp.spec.lags.max();
    let dates = data.dates()[skip..].to_vec();
    let means = dates
        .iter()
        .map(|&d| {
            let x = DVector::from_vec(regressor_row(data, &dgp.spec, d)?);
            let m = dgp.phi.tr_mul(&x);
            Ok(std::array::from_fn(|h| m[h]))
        })
        .collect::<Result<Vec<DayRow>>>()?;
    Ok(OracleForecasts { dates, means, sigma: dgp.sigma.clone() })
}

/// A dataset drawn with `seed` together with the true conditional means.
pub fn known_best_pair(dgp: &SyntheticDgp, days: usize, seed: u64) -> Result<(MarketDataset, OracleForecasts)> {
    let dgp = dgp.with_seed(seed);
    let data = generate(&dgp, days)?;
    let oracle = oracle_forecasts(&dgp, &data)?;
    Ok((data, oracle))
}

/// Writes the dataset in the ingest schemas plus the true coefficients and
/// the generating config. Returns the manifest path.
pub fn export(dgp: &SyntheticDgp, data: &MarketDataset, dir: &Path) -> Result<PathBuf> {
    let manifest = export_dataset(data, dir)?;
    let columns = ColumnMap::for_spec(&dgp.spec).labels();
    let hours: Vec<usize> = (1..=HOURS).collect();
    let table = coefficient_table(&columns, &hours, &dgp.phi);
    let path = dir.join("dgp_phi.csv");
    std::fs::write(&path, table).map_err(|e| Error::io(&path, e))?;
    let path = dir.join("dgp.toml");
    let text = toml::to_string(&dgp.config).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
