use chrono::{Days, NaiveDate};
use serde::Serialize;

use super::panel::{Fuel, FuelSeries};
use crate::error::{Error, Result};

/// One row of the daily fuel file; `None` marks a missing settlement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FuelRecord {
    pub date: NaiveDate,
    pub co2: Option<f64>,
    pub gas: Option<f64>,
    pub coal: Option<f64>,
}

impl FuelRecord {
    fn get(&self, fuel: Fuel) -> Option<f64> {
        match fuel {
            Fuel::Co2 => self.co2,
            Fuel::Gas => self.gas,
            Fuel::Coal => self.coal,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FuelFillReport {
    pub co2: usize,
    pub gas: usize,
    pub coal: usize,
}

/// Fills every calendar day in `start..=end`, interpolating linearly in
/// calendar time between the nearest observed settlements of each fuel.
pub fn interpolate_fuels(records: &[FuelRecord], start: NaiveDate, end: NaiveDate) -> Result<(FuelSeries, FuelFillReport)> {
    if end < start {
        return Err(Error::Config(format!("fuel range {start}..{end} is empty")));
    }
    let days = (end - start).num_days() as usize + 1;
    let dates: Vec<NaiveDate> = (0..days).map(|i| start + Days::new(i as u64)).collect();
    let mut report = FuelFillReport::default();
    let mut cols = Vec::with_capacity(3);
    for fuel in Fuel::ALL {
        let mut obs: Vec<(NaiveDate, f64)> =
            records.iter().filter_map(|r| r.get(fuel).map(|v| (r.date, v))).collect();
        obs.sort_by_key(|o| o.0);
        obs.dedup_by_key(|o| o.0);
        let (col, filled) = fill(fuel, &obs, &dates)?;
        match fuel {
            Fuel::Co2 => report.co2 = filled,
            Fuel::Gas => report.gas = filled,
            Fuel::Coal => report.coal = filled,
        }
        cols.push(col);
    }
    let coal = cols.pop().unwrap();
    let gas = cols.pop().unwrap();
    let co2 = cols.pop().unwrap();
    Ok((FuelSeries::new(dates, co2, gas, coal)?, report))
}

fn fill(fuel: Fuel, obs: &[(NaiveDate, f64)], dates: &[NaiveDate]) -> Result<(Vec<f64>, usize)> {
    let mut out = Vec::with_capacity(dates.len());
    let mut filled = 0;
    // index of the first observation strictly after the current date
    let mut next = 0;
    for &d in dates {
        while next < obs.len() && obs[next].0 <= d {
            next += 1;
        }
        let prev = next.checked_sub(1).map(|i| obs[i]).ok_or(Error::LeadingGap { fuel: fuel.name(), date: d })?;
        if prev.0 == d {
            out.push(prev.1);
            continue;
        }
        let after = obs.get(next).copied().ok_or(Error::TrailingGap { fuel: fuel.name(), date: d })?;
        let span = (after.0 - prev.0).num_days() as f64;
        let w = (d - prev.0).num_days() as f64 / span;
        out.push(prev.1 + w * (after.1 - prev.1));
        filled += 1;
    }
    Ok((out, filled))
}
