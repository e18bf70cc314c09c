//! Clock-change repair: 25-hour autumn days lose their extra hour, 23-hour
//! spring days get a 24th hour interpolated from the neighbouring hours.

use chrono::NaiveDate;
use serde::Serialize;
use std::collections::BTreeMap;

use super::panel::{check_contiguous, DayRow, HourlyPanel, SeriesRole, HOURS};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RawRecord {
    pub date: NaiveDate,
    pub hour: u32,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DstReport {
    pub dropped: Vec<NaiveDate>,
    pub interpolated: Vec<NaiveDate>,
}

/// Flattens a panel back to raw records (hours 1..=24).
pub fn panel_records(panel: &HourlyPanel) -> Vec<RawRecord> {
    panel
        .dates()
        .iter()
        .zip(panel.rows())
        .flat_map(|(&date, row)| {
            row.iter().enumerate().map(move |(h, &value)| RawRecord { date, hour: h as u32 + 1, value })
        })
        .collect()
}

pub fn dst_adjust(records: &[RawRecord], label: SeriesRole) -> Result<(HourlyPanel, DstReport)> {
    let mut days: BTreeMap<NaiveDate, BTreeMap<u32, f64>> = BTreeMap::new();
    for r in records {
        if days.entry(r.date).or_default().insert(r.hour, r.value).is_some() {
            return Err(Error::DuplicateCell { context: format!("{label} raw records"), date: r.date, hour: r.hour });
        }
    }
    let dates: Vec<NaiveDate> = days.keys().copied().collect();
    check_contiguous(&format!("{label} raw records"), &dates)?;

    let hourly: Vec<Vec<f64>> = days.into_values().map(|h| h.into_values().collect()).collect();
    let mut report = DstReport::default();
    let mut rows: Vec<DayRow> = Vec::with_capacity(hourly.len());
    for (i, values) in hourly.iter().enumerate() {
        let mut row = [0.0; HOURS];
        match values.len() {
            24 => row.copy_from_slice(values),
            25 => {
                row.copy_from_slice(&values[..HOURS]);
                report.dropped.push(dates[i]);
            }
            23 => {
                row[..23].copy_from_slice(values);
                // Average of the last observed hour and the next day's first hour;
                // the final day of the sample repeats its last hour.
                row[23] = match hourly.get(i + 1).and_then(|next| next.first()) {
                    Some(&next_first) => 0.5 * (values[22] + next_first),
                    None => values[22],
                };
                report.interpolated.push(dates[i]);
            }
            n => return Err(Error::MalformedDay { date: dates[i], hours: n }),
        }
        rows.push(row);
    }
    Ok((HourlyPanel::new(dates, rows, label)?, report))
}
