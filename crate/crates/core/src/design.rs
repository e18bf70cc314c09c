//! Regressand/regressor matrices for every model family.
//!
//! Column order is fixed: price lags, calendar dummies, demand, solar, wind,
//! then the day-before fuel prices (co2, gas, coal). Multivariate designs carry
//! 24 columns per hourly block; univariate designs one (the modelled hour), and
//! the cross-hour augmented variant appends the first lag of the other 23 hours.

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::ingest::{dummy_row, Fuel, MarketDataset, DUMMY_COUNT, DUMMY_LABELS, HOURS};

/// Positive day offsets of the autoregressive terms.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct LagSet(Vec<usize>);

impl LagSet {
    pub fn new(lags: Vec<usize>) -> Result<Self> {
        if lags.is_empty() {
            return Err(Error::InvalidSpec("lag set is empty".into()));
        }
        if lags.contains(&0) {
            return Err(Error::InvalidSpec("lags must be positive".into()));
        }
        let mut sorted = lags.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != lags.len() {
            return Err(Error::InvalidSpec(format!("duplicate lags in {lags:?}")));
        }
        Ok(Self(lags))
    }

    pub fn max(&self) -> usize {
        *self.0.iter().max().expect("non-empty")
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }
}

impl Default for LagSet {
    fn default() -> Self {
        Self(vec![1, 2, 7])
    }
}

impl TryFrom<Vec<usize>> for LagSet {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<LagSet> for Vec<usize> {
    fn from(l: LagSet) -> Self {
        l.0
    }
}

/// Which exogenous regressors enter the design.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct ExogSpec {
    pub demand: bool,
    pub wind: bool,
    pub solar: bool,
    pub co2: bool,
    pub gas: bool,
    pub coal: bool,
}

impl ExogSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn all() -> Self {
        Self { demand: true, wind: true, solar: true, co2: true, gas: true, coal: true }
    }

    /// Everything the dataset offers: `all()` minus solar when it is absent.
    pub fn all_available(data: &MarketDataset) -> Self {
        Self { solar: data.has_solar(), ..Self::all() }
    }

    pub fn is_none(&self) -> bool {
        *self == Self::none()
    }

    pub fn hourly_count(&self) -> usize {
        [self.demand, self.solar, self.wind].iter().filter(|&&b| b).count()
    }

    pub fn fuels(&self) -> Vec<Fuel> {
        Fuel::ALL.into_iter().filter(|f| self.has_fuel(*f)).collect()
    }

    pub fn has_fuel(&self, fuel: Fuel) -> bool {
        match fuel {
            Fuel::Co2 => self.co2,
            Fuel::Gas => self.gas,
            Fuel::Coal => self.coal,
        }
    }

    pub fn names(&self) -> Vec<String> {
        let flags = [
            ("demand", self.demand),
            ("wind", self.wind),
            ("solar", self.solar),
            ("co2", self.co2),
            ("gas", self.gas),
            ("coal", self.coal),
        ];
        flags.iter().filter(|f| f.1).map(|f| f.0.to_string()).collect()
    }
}

impl TryFrom<Vec<String>> for ExogSpec {
    type Error = Error;
    fn try_from(names: Vec<String>) -> Result<Self> {
        let mut spec = ExogSpec::none();
        for n in names {
            let flag = match n.to_ascii_lowercase().as_str() {
                "demand" => &mut spec.demand,
                "wind" => &mut spec.wind,
                "solar" => &mut spec.solar,
                "co2" => &mut spec.co2,
                "gas" => &mut spec.gas,
                "coal" => &mut spec.coal,
                "fuels" => {
                    spec.co2 = true;
                    spec.gas = true;
                    spec.coal = true;
                    continue;
                }
                _ => return Err(Error::InvalidSpec(format!("unknown exogenous variable `{n}`"))),
            };
            *flag = true;
        }
        Ok(spec)
    }
}

impl From<ExogSpec> for Vec<String> {
    fn from(e: ExogSpec) -> Self {
        e.names()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Univariate,
    UnivariateAugmented,
    Multivariate,
}

impl Family {
    pub fn is_univariate(self) -> bool {
        !matches!(self, Family::Multivariate)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    LeastSquares,
    Bayesian,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub estimator: Estimator,
    #[serde(default)]
    pub exog: ExogSpec,
    #[serde(default)]
    pub lags: LagSet,
    /// Modelled hour (1..=24) for univariate families.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hour: Option<usize>,
}

impl ModelSpec {
    pub fn multivariate(estimator: Estimator, exog: ExogSpec) -> Self {
        Self { family: Family::Multivariate, estimator, exog, lags: LagSet::default(), hour: None }
    }

    pub fn univariate(estimator: Estimator, exog: ExogSpec, hour: usize) -> Self {
        Self { family: Family::Univariate, estimator, exog, lags: LagSet::default(), hour: Some(hour) }
    }

    pub fn augmented(estimator: Estimator, exog: ExogSpec, hour: usize) -> Self {
        Self { family: Family::UnivariateAugmented, estimator, exog, lags: LagSet::default(), hour: Some(hour) }
    }

    pub fn for_hour(&self, hour: usize) -> Self {
        Self { hour: Some(hour), ..self.clone() }
    }

    /// Number of equations.
    pub fn equations(&self) -> usize {
        if self.family.is_univariate() {
            1
        } else {
            HOURS
        }
    }

    /// Regressor count per equation.
    pub fn column_count(&self) -> usize {
        let q = self.equations();
        let cross = if self.family == Family::UnivariateAugmented { HOURS - 1 } else { 0 };
        q * self.lags.len() + DUMMY_COUNT + self.exog.hourly_count() * q + self.exog.fuels().len() + cross
    }

    fn check(&self, data: &MarketDataset) -> Result<()> {
        if self.exog.solar && !data.has_solar() {
            return Err(Error::SolarUnavailable);
        }
        if self.family.is_univariate() {
            match self.hour {
                Some(h) if (1..=HOURS).contains(&h) => {}
                other => return Err(Error::InvalidSpec(format!("univariate hour must be in 1..=24, got {other:?}"))),
            }
        }
        Ok(())
    }
}

/// Inclusive calendar-date window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Self {
        Self { start, end }
    }

    /// The `days`-long window ending at `end`.
    pub fn ending(end: NaiveDate, days: usize) -> Self {
        Self { start: end - chrono::Days::new(days as u64 - 1), end }
    }

    pub fn days(&self) -> usize {
        ((self.end - self.start).num_days() + 1).max(0) as usize
    }
}

/// What a regressor column holds; hours are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ColumnKind {
    PriceLag { hour: usize, lag: usize },
    Dummy(usize),
    Demand { hour: usize },
    Solar { hour: usize },
    Wind { hour: usize },
    Fuel(Fuel),
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ColumnKind::PriceLag { hour, lag } => write!(f, "y{hour:02}_l{lag}"),
            ColumnKind::Dummy(k) => f.write_str(DUMMY_LABELS[k]),
            ColumnKind::Demand { hour } => write!(f, "demand_h{hour:02}"),
            ColumnKind::Solar { hour } => write!(f, "solar_h{hour:02}"),
            ColumnKind::Wind { hour } => write!(f, "wind_h{hour:02}"),
            ColumnKind::Fuel(fuel) => write!(f, "{}_l1", fuel.name()),
        }
    }
}

/// Column layout of one design; shared by estimation rows and forecast rows.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnMap {
    pub kinds: Vec<ColumnKind>,
    /// Modelled hour of each equation.
    pub equation_hours: Vec<usize>,
}

impl ColumnMap {
    pub fn for_spec(spec: &ModelSpec) -> Self {
        let hours: Vec<usize> = match spec.family {
            Family::Multivariate => (1..=HOURS).collect(),
            _ => vec![spec.hour.unwrap_or(1)],
        };
        let mut kinds = Vec::with_capacity(spec.column_count());
        for lag in spec.lags.iter() {
            kinds.extend(hours.iter().map(|&hour| ColumnKind::PriceLag { hour, lag }));
        }
        kinds.extend((0..DUMMY_COUNT).map(ColumnKind::Dummy));
        if spec.exog.demand {
            kinds.extend(hours.iter().map(|&hour| ColumnKind::Demand { hour }));
        }
        if spec.exog.solar {
            kinds.extend(hours.iter().map(|&hour| ColumnKind::Solar { hour }));
        }
        if spec.exog.wind {
            kinds.extend(hours.iter().map(|&hour| ColumnKind::Wind { hour }));
        }
        kinds.extend(spec.exog.fuels().into_iter().map(ColumnKind::Fuel));
        if spec.family == Family::UnivariateAugmented {
            let own = hours[0];
            kinds.extend((1..=HOURS).filter(|&j| j != own).map(|hour| ColumnKind::PriceLag { hour, lag: 1 }));
        }
        Self { kinds, equation_hours: hours }
    }

    pub fn labels(&self) -> Vec<String> {
        self.kinds.iter().map(ToString::to_string).collect()
    }

    /// Row of the own-hour first-lag coefficient for each equation.
    pub fn own_first_lag(&self) -> Vec<Option<usize>> {
        self.equation_hours
            .iter()
            .map(|&h| self.kinds.iter().position(|k| *k == ColumnKind::PriceLag { hour: h, lag: 1 }))
            .collect()
    }

    /// Fills `out` with the regressors for the day at dataset index `idx`.
    /// Lags read `idx - lag`, fuels read `idx - 1`; nothing at or after `idx`
    /// is read from the price panel.
    fn fill(&self, data: &MarketDataset, idx: usize, out: &mut [f64]) {
        let date = data.dates()[idx];
        let dummies = dummy_row(date);
        for (slot, kind) in out.iter_mut().zip(&self.kinds) {
            *slot = match *kind {
                ColumnKind::PriceLag { hour, lag } => data.price.rows()[idx - lag][hour - 1],
                ColumnKind::Dummy(k) => dummies[k],
                ColumnKind::Demand { hour } => data.demand.rows()[idx][hour - 1],
                ColumnKind::Solar { hour } => data.solar.as_ref().expect("checked").rows()[idx][hour - 1],
                ColumnKind::Wind { hour } => data.wind.rows()[idx][hour - 1],
                ColumnKind::Fuel(fuel) => data.fuels.series(fuel)[idx - 1],
            };
        }
    }
}

/// `Y` (n×q) and `X` (n×m) for one spec and window.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignSystem {
    pub y: DMatrix<f64>,
    pub x: DMatrix<f64>,
    pub columns: Vec<String>,
    pub map: ColumnMap,
    /// Target date of each row.
    pub dates: Vec<NaiveDate>,
}

impl DesignSystem {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn m(&self) -> usize {
        self.x.ncols()
    }

    pub fn q(&self) -> usize {
        self.y.ncols()
    }

    /// Builds a system from raw matrices (labels default to `x1..xm`).
    pub fn from_matrices(y: DMatrix<f64>, x: DMatrix<f64>) -> Result<Self> {
        if y.nrows() != x.nrows() {
            return Err(Error::DimensionMismatch { expected: x.nrows(), got: y.nrows() });
        }
        let columns = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
        Ok(Self {
            map: ColumnMap { kinds: Vec::new(), equation_hours: (1..=y.ncols()).collect() },
            y,
            x,
            columns,
            dates: Vec::new(),
        })
    }
}

fn window_indices(data: &MarketDataset, spec: &ModelSpec, window: DateWindow) -> Result<(usize, usize)> {
    spec.check(data)?;
    let (a, b) = match (data.index_of(window.start), data.index_of(window.end)) {
        (Some(a), Some(b)) if a <= b => (a, b),
        _ => return Err(Error::WindowOutOfRange { start: window.start, end: window.end }),
    };
    let days = b - a + 1;
    if days <= spec.lags.max() {
        return Err(Error::WindowTooShort { days, max_lag: spec.lags.max() });
    }
    Ok((a, b))
}

fn assemble(data: &MarketDataset, spec: &ModelSpec, window: DateWindow) -> Result<DesignSystem> {
    let (a, b) = window_indices(data, spec, window)?;
    let map = ColumnMap::for_spec(spec);
    let first = a + spec.lags.max();
    let n = b + 1 - first;
    let m = map.kinds.len();
    let q = map.equation_hours.len();
    let mut x = DMatrix::zeros(n, m);
    let mut y = DMatrix::zeros(n, q);
    let mut buf = vec![0.0; m];
    for (r, idx) in (first..=b).enumerate() {
        map.fill(data, idx, &mut buf);
        for (c, v) in buf.iter().enumerate() {
            x[(r, c)] = *v;
        }
        let prices = &data.price.rows()[idx];
        for (e, &h) in map.equation_hours.iter().enumerate() {
            y[(r, e)] = prices[h - 1];
        }
    }
    Ok(DesignSystem { y, x, columns: map.labels(), dates: data.dates()[first..=b].to_vec(), map })
}

pub fn build_multivariate(data: &MarketDataset, spec: &ModelSpec, window: DateWindow) -> Result<DesignSystem> {
    if spec.family != Family::Multivariate {
        return Err(Error::InvalidSpec("build_multivariate needs a multivariate spec".into()));
    }
    assemble(data, spec, window)
}

pub fn build_univariate(data: &MarketDataset, spec: &ModelSpec, window: DateWindow) -> Result<DesignSystem> {
    if spec.family != Family::Univariate {
        return Err(Error::InvalidSpec("build_univariate needs a univariate spec".into()));
    }
    assemble(data, spec, window)
}

pub fn build_univariate_augmented(data: &MarketDataset, spec: &ModelSpec, window: DateWindow) -> Result<DesignSystem> {
    if spec.family != Family::UnivariateAugmented {
        return Err(Error::InvalidSpec("build_univariate_augmented needs an augmented spec".into()));
    }
    assemble(data, spec, window)
}

/// Dispatches on `spec.family`.
pub fn build_design(data: &MarketDataset, spec: &ModelSpec, window: DateWindow) -> Result<DesignSystem> {
    assemble(data, spec, window)
}

/// Regressor vector for forecasting the day `target`.
pub fn regressor_row(data: &MarketDataset, spec: &ModelSpec, target: NaiveDate) -> Result<Vec<f64>> {
    spec.check(data)?;
    let idx = data
        .index_of(target)
        .filter(|&i| i >= spec.lags.max())
        .ok_or(Error::WindowOutOfRange { start: target, end: target })?;
    let map = ColumnMap::for_spec(spec);
    let mut out = vec![0.0; map.kinds.len()];
    map.fill(data, idx, &mut out);
    Ok(out)
}

/// Correlation matrix of the columns of `residuals` (n×k).
pub fn residual_correlation(residuals: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, k) = residuals.shape();
    if n < 2 {
        return Err(Error::InsufficientSample { n, m: 2 });
    }
    let means: Vec<f64> = (0..k).map(|j| residuals.column(j).mean()).collect();
    let mut centered = residuals.clone();
    for (j, mu) in means.iter().enumerate() {
        centered.column_mut(j).add_scalar_mut(-mu);
    }
    let cov = centered.transpose() * &centered;
    let sd: Vec<f64> = (0..k).map(|j| cov[(j, j)].sqrt()).collect();
    if let Some(j) = sd.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::DegenerateSeries { index: j });
    }
    Ok(DMatrix::from_fn(k, k, |i, j| if i == j { 1.0 } else { (cov[(i, j)] / (sd[i] * sd[j])).clamp(-1.0, 1.0) }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{FuelSeries, HourlyPanel, SeriesRole};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    /// Panels whose cell values encode (day, hour, series) so lookups can be checked exactly.
    fn coded_dataset(days: usize, solar: bool) -> MarketDataset {
        let start = NaiveDate::from_ymd_opt(2015, 1, 1).unwrap();
        let dates: Vec<_> = (0..days).map(|i| start + chrono::Days::new(i as u64)).collect();
        let panel = |code: f64, role| {
            let rows = (0..days).map(|d| std::array::from_fn(|h| code * 1e6 + d as f64 * 100.0 + (h + 1) as f64)).collect();
            HourlyPanel::new(dates.clone(), rows, role).unwrap()
        };
        let fuel = |code: f64| (0..days).map(|d| code * 1e6 + d as f64).collect::<Vec<_>>();
        MarketDataset::new(
            "T",
            panel(1.0, SeriesRole::Price),
            panel(2.0, SeriesRole::Demand),
            panel(3.0, SeriesRole::Wind),
            solar.then(|| panel(4.0, SeriesRole::Solar)),
            FuelSeries::new(dates.clone(), fuel(5.0), fuel(6.0), fuel(7.0)).unwrap(),
        )
        .unwrap()
    }

    fn whole(data: &MarketDataset) -> DateWindow {
        DateWindow::new(data.start(), data.end())
    }

    #[test]
    fn multivariate_column_counts() {
        let data = coded_dataset(30, true);
        let full = build_multivariate(&data, &ModelSpec::multivariate(Estimator::LeastSquares, ExogSpec::all()), whole(&data)).unwrap();
        assert_eq!(full.m(), 161);
        assert_eq!(full.columns.len(), 161);
        assert_eq!(full.q(), 24);
        let bare = build_multivariate(&data, &ModelSpec::multivariate(Estimator::LeastSquares, ExogSpec::none()), whole(&data)).unwrap();
        assert_eq!(bare.m(), 86);
    }

    #[test]
    fn univariate_column_counts() {
        let data = coded_dataset(30, true);
        let w = whole(&data);
        assert_eq!(build_univariate(&data, &ModelSpec::univariate(Estimator::LeastSquares, ExogSpec::all(), 5), w).unwrap().m(), 23);
        assert_eq!(build_univariate(&data, &ModelSpec::univariate(Estimator::LeastSquares, ExogSpec::none(), 5), w).unwrap().m(), 17);
        let err = build_univariate(&data, &ModelSpec::univariate(Estimator::LeastSquares, ExogSpec::none(), 25), w).unwrap_err();
        assert!(matches!(err, Error::InvalidSpec(_)));
    }

    #[test]
    fn augmented_cross_hour_block() {
        let data = coded_dataset(30, true);
        let ds = build_univariate_augmented(&data, &ModelSpec::augmented(Estimator::LeastSquares, ExogSpec::all(), 1), whole(&data)).unwrap();
        assert_eq!(ds.m(), 46);
        let cross: Vec<_> = ds.columns[23..].to_vec();
        let expected: Vec<_> = (2..=24).map(|h| format!("y{h:02}_l1")).collect();
        assert_eq!(cross, expected);
        for h in 1..=24 {
            let ds = build_univariate_augmented(&data, &ModelSpec::augmented(Estimator::LeastSquares, ExogSpec::all(), h), whole(&data)).unwrap();
            let own = format!("y{h:02}_l1");
            assert_eq!(ds.columns[23..].iter().filter(|c| **c == own).count(), 0);
            assert_eq!(ds.columns.iter().filter(|c| **c == own).count(), 1);
        }
    }

    #[test]
    fn intermediate_exog_counts_follow_formula() {
        let data = coded_dataset(20, true);
        for bits in 0u32..64 {
            let exog = ExogSpec {
                demand: bits & 1 != 0,
                wind: bits & 2 != 0,
                solar: bits & 4 != 0,
                co2: bits & 8 != 0,
                gas: bits & 16 != 0,
                coal: bits & 32 != 0,
            };
            let hourly = exog.hourly_count();
            let fuels = exog.fuels().len();
            let mv = build_design(&data, &ModelSpec::multivariate(Estimator::Bayesian, exog), whole(&data)).unwrap();
            assert_eq!(mv.m(), 24 * 3 + 14 + hourly * 24 + fuels);
            let uv = build_design(&data, &ModelSpec::univariate(Estimator::Bayesian, exog, 3), whole(&data)).unwrap();
            assert_eq!(uv.m(), 3 + 14 + hourly + fuels);
        }
    }

    #[test]
    fn rows_equal_window_minus_max_lag() {
        let data = coded_dataset(420, false);
        let w = DateWindow::ending(data.dates()[409], 400);
        let ds = build_design(&data, &ModelSpec::multivariate(Estimator::LeastSquares, ExogSpec::none()), w).unwrap();
        assert_eq!(ds.n(), 393);
    }

    #[test]
    fn window_errors() {
        let data = coded_dataset(30, false);
        let spec = ModelSpec::multivariate(Estimator::LeastSquares, ExogSpec::none());
        let short = DateWindow::new(data.dates()[0], data.dates()[6]);
        assert!(matches!(build_design(&data, &spec, short), Err(Error::WindowTooShort { days: 7, .. })));
        let solar = ModelSpec::multivariate(Estimator::LeastSquares, ExogSpec::all());
        assert!(matches!(build_design(&data, &solar, whole(&data)), Err(Error::SolarUnavailable)));
        let outside = DateWindow::new(data.dates()[0] - chrono::Days::new(1), data.end());
        assert!(matches!(build_design(&data, &spec, outside), Err(Error::WindowOutOfRange { .. })));
    }

    #[test]
    fn rows_read_only_the_past() {
        let data = coded_dataset(40, true);
        let spec = ModelSpec::multivariate(Estimator::LeastSquares, ExogSpec::all());
        let ds = build_design(&data, &spec, whole(&data)).unwrap();
        for (r, date) in ds.dates.iter().enumerate() {
            let d = data.index_of(*date).unwrap() as f64;
            for (c, kind) in ds.map.kinds.iter().enumerate() {
                let expected = match *kind {
                    ColumnKind::PriceLag { hour, lag } => 1e6 + (d - lag as f64) * 100.0 + hour as f64,
                    ColumnKind::Dummy(k) => dummy_row(*date)[k],
                    ColumnKind::Demand { hour } => 2e6 + d * 100.0 + hour as f64,
                    ColumnKind::Wind { hour } => 3e6 + d * 100.0 + hour as f64,
                    ColumnKind::Solar { hour } => 4e6 + d * 100.0 + hour as f64,
                    ColumnKind::Fuel(Fuel::Co2) => 5e6 + d - 1.0,
                    ColumnKind::Fuel(Fuel::Gas) => 6e6 + d - 1.0,
                    ColumnKind::Fuel(Fuel::Coal) => 7e6 + d - 1.0,
                };
                assert_eq!(ds.x[(r, c)], expected, "row {r} column {}", ds.columns[c]);
            }
            for h in 0..24 {
                assert_eq!(ds.y[(r, h)], 1e6 + d * 100.0 + (h + 1) as f64);
            }
        }
        // the forecast row uses the same layout
        let target = data.dates()[39];
        let row = regressor_row(&data, &spec, target).unwrap();
        assert_eq!(row.as_slice(), ds.x.row(ds.n() - 1).iter().copied().collect::<Vec<_>>().as_slice());
    }

    #[test]
    fn sliding_window_shifts_rows() {
        let data = coded_dataset(60, true);
        let spec = ModelSpec::univariate(Estimator::LeastSquares, ExogSpec::all(), 9);
        let a = build_design(&data, &spec, DateWindow::ending(data.dates()[40], 30)).unwrap();
        let b = build_design(&data, &spec, DateWindow::ending(data.dates()[41], 30)).unwrap();
        assert_eq!(a.n(), b.n());
        assert_eq!(a.x.rows(1, a.n() - 1), b.x.rows(0, b.n() - 1));
        assert_eq!(a.y.rows(1, a.n() - 1), b.y.rows(0, b.n() - 1));
    }

    #[test]
    fn lag_set_validation() {
        assert!(LagSet::new(vec![]).is_err());
        assert!(LagSet::new(vec![1, 1]).is_err());
        assert!(LagSet::new(vec![0, 2]).is_err());
        assert_eq!(LagSet::default().max(), 7);
        let parsed: ExogSpec = vec!["demand".to_string(), "fuels".to_string()].try_into().unwrap();
        assert_eq!(parsed.fuels().len(), 3);
        assert!(ExogSpec::try_from(vec!["temperature".to_string()]).is_err());
    }

    #[test]
    fn correlation_of_identical_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let col: Vec<f64> = (0..50).map(|_| rng.sample(StandardNormal)).collect();
        let m = DMatrix::from_fn(50, 3, |i, _| col[i]);
        let c = residual_correlation(&m).unwrap();
        for v in c.iter() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn correlation_of_independent_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = DMatrix::from_fn(10_000, 2, |_, _| rng.sample::<f64, _>(StandardNormal));
        let c = residual_correlation(&m).unwrap();
        assert!(c[(0, 1)].abs() < 0.05);
        assert_eq!(c[(0, 0)], 1.0);
        assert_eq!(c[(0, 1)], c[(1, 0)]);
    }

    #[test]
    fn correlation_with_common_shock() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let shock: Vec<f64> = (0..500).map(|_| rng.sample(StandardNormal)).collect();
        let m = DMatrix::from_fn(500, 24, |i, j| 10.0 * shock[i] + 0.01 * (j as f64) * rng.sample::<f64, _>(StandardNormal));
        let c = residual_correlation(&m).unwrap();
        assert!(c.iter().all(|&v| v > 0.999 && v <= 1.0));
    }

    #[test]
    fn correlation_degenerate() {
        let m = DMatrix::from_fn(10, 2, |i, j| if j == 0 { i as f64 } else { 4.0 });
        assert!(matches!(residual_correlation(&m), Err(Error::DegenerateSeries { index: 1 })));
    }
}
