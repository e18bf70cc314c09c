use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Hours per delivery day.
pub const HOURS: usize = 24;

/// One delivery day of hourly values, index 0 is hour 1.
pub type DayRow = [f64; HOURS];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesRole {
    Price,
    Demand,
    Wind,
    Solar,
}

impl fmt::Display for SeriesRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeriesRole::Price => "price",
            SeriesRole::Demand => "demand",
            SeriesRole::Wind => "wind",
            SeriesRole::Solar => "solar",
        })
    }
}

/// Checks that `dates` is a strictly increasing run of consecutive days.
pub(crate) fn check_contiguous(context: &str, dates: &[NaiveDate]) -> Result<()> {
    for pair in dates.windows(2) {
        let gap = (pair[1] - pair[0]).num_days();
        if gap != 1 {
            let reason = if gap <= 0 {
                "dates are not strictly increasing".to_string()
            } else {
                format!("{} missing day(s) after {}", gap - 1, pair[0])
            };
            return Err(Error::NonContiguousDates {
                context: context.to_string(),
                date: pair[1],
                reason,
            });
        }
    }
    Ok(())
}

/// A T×24 panel of one hourly series over consecutive calendar days.
#[derive(Clone, Debug, PartialEq)]
pub struct HourlyPanel {
    dates: Vec<NaiveDate>,
    values: Vec<DayRow>,
    label: SeriesRole,
}

impl HourlyPanel {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<DayRow>, label: SeriesRole) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::MisalignedPanels(format!(
                "{label}: {} dates for {} rows",
                dates.len(),
                values.len()
            )));
        }
        check_contiguous(&label.to_string(), &dates)?;
        for (date, row) in dates.iter().zip(&values) {
            if let Some(h) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonNumericValue {
                    context: format!("{label} {date}"),
                    line: h + 1,
                    value: row[h].to_string(),
                });
            }
        }
        Ok(Self { dates, values, label })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn rows(&self) -> &[DayRow] {
        &self.values
    }

    pub fn label(&self) -> SeriesRole {
        self.label
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn start(&self) -> Option<NaiveDate> {
        self.dates.first().copied()
    }

    pub fn end(&self) -> Option<NaiveDate> {
        self.dates.last().copied()
    }

    /// Row index of `date`; O(1) because dates are contiguous.
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let offset = (date - self.start()?).num_days();
        (offset >= 0 && (offset as usize) < self.len()).then_some(offset as usize)
    }

    pub fn row_at(&self, date: NaiveDate) -> Option<&DayRow> {
        self.index_of(date).map(|i| &self.values[i])
    }

    /// Value at `date` and 1-based `hour`.
    pub fn value(&self, date: NaiveDate, hour: usize) -> Option<f64> {
        self.row_at(date).and_then(|r| r.get(hour.checked_sub(1)?).copied())
    }

    /// Sub-panel covering `start..=end`.
    pub fn slice(&self, start: NaiveDate, end: NaiveDate) -> Result<Self> {
        let (a, b) = match (self.index_of(start), self.index_of(end)) {
            (Some(a), Some(b)) if a <= b => (a, b),
            _ => return Err(Error::WindowOutOfRange { start, end }),
        };
        Ok(Self {
            dates: self.dates[a..=b].to_vec(),
            values: self.values[a..=b].to_vec(),
            label: self.label,
        })
    }

    /// Rebuilds the panel with every cell passed through `f(date, hour, value)`.
    pub fn map_values(&self, mut f: impl FnMut(NaiveDate, usize, f64) -> f64) -> Result<Self> {
        let values = self
            .dates
            .iter()
            .zip(&self.values)
            .map(|(&d, row)| {
                let mut out = *row;
                for (h, v) in out.iter_mut().enumerate() {
                    *v = f(d, h + 1, *v);
                }
                out
            })
            .collect();
        Self::new(self.dates.clone(), values, self.label)
    }

    #[cfg(test)]
    pub(crate) fn with_label(mut self, label: SeriesRole) -> Self {
        self.label = label;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fuel {
    Co2,
    Gas,
    Coal,
}

impl Fuel {
    pub const ALL: [Fuel; 3] = [Fuel::Co2, Fuel::Gas, Fuel::Coal];

    pub fn name(self) -> &'static str {
        match self {
            Fuel::Co2 => "co2",
            Fuel::Gas => "gas",
            Fuel::Coal => "coal",
        }
    }
}

/// Daily fuel settlement prices, constant across the 24 hours of a day.
#[derive(Clone, Debug, PartialEq)]
pub struct FuelSeries {
    dates: Vec<NaiveDate>,
    co2: Vec<f64>,
    gas: Vec<f64>,
    coal: Vec<f64>,
}

impl FuelSeries {
    pub fn new(dates: Vec<NaiveDate>, co2: Vec<f64>, gas: Vec<f64>, coal: Vec<f64>) -> Result<Self> {
        let n = dates.len();
        if co2.len() != n || gas.len() != n || coal.len() != n {
            return Err(Error::MisalignedPanels("fuel columns differ in length".into()));
        }
        check_contiguous("fuels", &dates)?;
        for (name, col) in [("co2", &co2), ("gas", &gas), ("coal", &coal)] {
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonNumericValue {
                    context: format!("fuels {name} {}", dates[i]),
                    line: i + 1,
                    value: col[i].to_string(),
                });
            }
        }
        Ok(Self { dates, co2, gas, coal })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn series(&self, fuel: Fuel) -> &[f64] {
        match fuel {
            Fuel::Co2 => &self.co2,
            Fuel::Gas => &self.gas,
            Fuel::Coal => &self.coal,
        }
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let offset = (date - *self.dates.first()?).num_days();
        (offset >= 0 && (offset as usize) < self.len()).then_some(offset as usize)
    }

    pub fn value(&self, fuel: Fuel, date: NaiveDate) -> Option<f64> {
        self.index_of(date).map(|i| self.series(fuel)[i])
    }

    pub fn slice(&self, start: NaiveDate, end: NaiveDate) -> Result<Self> {
        let (a, b) = match (self.index_of(start), self.index_of(end)) {
            (Some(a), Some(b)) if a <= b => (a, b),
            _ => return Err(Error::WindowOutOfRange { start, end }),
        };
        Ok(Self {
            dates: self.dates[a..=b].to_vec(),
            co2: self.co2[a..=b].to_vec(),
            gas: self.gas[a..=b].to_vec(),
            coal: self.coal[a..=b].to_vec(),
        })
    }

    pub fn map_values(&self, mut f: impl FnMut(Fuel, NaiveDate, f64) -> f64) -> Result<Self> {
        let mut cols = Fuel::ALL.iter().map(|&fuel| {
            self.series(fuel).iter().zip(&self.dates).map(|(&v, &d)| f(fuel, d, v)).collect::<Vec<_>>()
        });
        let (co2, gas, coal) = (cols.next().unwrap(), cols.next().unwrap(), cols.next().unwrap());
        Self::new(self.dates.clone(), co2, gas, coal)
    }
}

/// All aligned inputs for one market.
#[derive(Clone, Debug, PartialEq)]
pub struct MarketDataset {
    pub market: String,
    pub price: HourlyPanel,
    pub demand: HourlyPanel,
    pub wind: HourlyPanel,
    pub solar: Option<HourlyPanel>,
    pub fuels: FuelSeries,
}

impl MarketDataset {
    pub fn new(
        market: impl Into<String>,
        price: HourlyPanel,
        demand: HourlyPanel,
        wind: HourlyPanel,
        solar: Option<HourlyPanel>,
        fuels: FuelSeries,
    ) -> Result<Self> {
        let expected = [
            (SeriesRole::Price, &price),
            (SeriesRole::Demand, &demand),
            (SeriesRole::Wind, &wind),
        ];
        for (role, panel) in expected {
            if panel.label() != role {
                return Err(Error::MisalignedPanels(format!(
                    "expected a {role} panel, got {}",
                    panel.label()
                )));
            }
        }
        if let Some(s) = &solar {
            if s.label() != SeriesRole::Solar {
                return Err(Error::MisalignedPanels(format!("expected a solar panel, got {}", s.label())));
            }
        }
        let dates = price.dates();
        if dates.is_empty() {
            return Err(Error::MisalignedPanels("dataset is empty".into()));
        }
        let mut others: Vec<(&str, &[NaiveDate])> = vec![
            ("demand", demand.dates()),
            ("wind", wind.dates()),
            ("fuels", fuels.dates()),
        ];
        if let Some(s) = &solar {
            others.push(("solar", s.dates()));
        }
        for (name, d) in others {
            if d != dates {
                return Err(Error::MisalignedPanels(format!(
                    "{name} covers {:?}..{:?}, price covers {}..{}",
                    d.first(),
                    d.last(),
                    dates[0],
                    dates[dates.len() - 1]
                )));
            }
        }
        Ok(Self { market: market.into(), price, demand, wind, solar, fuels })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        self.price.dates()
    }

    pub fn len(&self) -> usize {
        self.price.len()
    }

    pub fn is_empty(&self) -> bool {
        self.price.is_empty()
    }

    pub fn start(&self) -> NaiveDate {
        self.dates()[0]
    }

    pub fn end(&self) -> NaiveDate {
        self.dates()[self.len() - 1]
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        self.price.index_of(date)
    }

    pub fn has_solar(&self) -> bool {
        self.solar.is_some()
    }

    pub fn slice(&self, start: NaiveDate, end: NaiveDate) -> Result<Self> {
        Self::new(
            self.market.clone(),
            self.price.slice(start, end)?,
            self.demand.slice(start, end)?,
            self.wind.slice(start, end)?,
            self.solar.as_ref().map(|s| s.slice(start, end)).transpose()?,
            self.fuels.slice(start, end)?,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn rejects_gap_in_dates() {
        let err = HourlyPanel::new(vec![d(2020, 1, 1), d(2020, 1, 3)], vec![[0.0; 24]; 2], SeriesRole::Price)
            .unwrap_err();
        assert!(matches!(err, Error::NonContiguousDates { .. }));
    }

    #[test]
    fn rejects_nan() {
        let mut row = [1.0; 24];
        row[3] = f64::NAN;
        let err = HourlyPanel::new(vec![d(2020, 1, 1)], vec![row], SeriesRole::Price).unwrap_err();
        assert!(matches!(err, Error::NonNumericValue { .. }));
    }

    #[test]
    fn index_and_slice() {
        let dates: Vec<_> = (0..10).map(|i| d(2020, 2, 25) + chrono::Days::new(i)).collect();
        let rows: Vec<DayRow> = (0..10).map(|i| [i as f64; 24]).collect();
        let p = HourlyPanel::new(dates, rows, SeriesRole::Demand).unwrap();
        assert_eq!(p.index_of(d(2020, 2, 29)), Some(4));
        assert_eq!(p.value(d(2020, 3, 1), 24), Some(5.0));
        assert_eq!(p.index_of(d(2020, 2, 24)), None);
        let s = p.slice(d(2020, 2, 27), d(2020, 3, 2)).unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(s.rows()[0][0], 2.0);
        assert!(p.slice(d(2020, 3, 2), d(2020, 2, 27)).is_err());
    }
}
