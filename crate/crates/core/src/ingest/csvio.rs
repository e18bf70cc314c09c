//! CSV readers and writers for the ingest schemas.
//!
//! * wide:  `date,h01,...,h24`
//! * long:  `date,hour,value` with `hour` in 1..=24 (1..=25 for raw DST-bearing files)
//! * fuels: `date,co2,gas,coal`, empty cells allowed

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use super::dst::RawRecord;
use super::fuels::FuelRecord;
use super::panel::{DayRow, FuelSeries, HourlyPanel, SeriesRole, HOURS};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    #[default]
    Wide,
    Long,
    /// Long layout that may contain 23- and 25-hour clock-change days.
    LongDst,
}

pub fn hour_column(h: usize) -> String {
    format!("h{h:02}")
}

fn open(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))
}

fn column_index(path: &Path, headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers.iter().position(|h| h.eq_ignore_ascii_case(name)).ok_or_else(|| Error::MissingColumn {
        path: path.display().to_string(),
        column: name.to_string(),
    })
}

fn parse_date(ctx: &Path, line: usize, s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| Error::NonNumericValue {
        context: ctx.display().to_string(),
        line,
        value: s.to_string(),
    })
}

fn parse_f64(ctx: &Path, line: usize, s: &str) -> Result<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::NonNumericValue {
        context: ctx.display().to_string(),
        line,
        value: s.to_string(),
    })
}

fn line_of(rec: &csv::StringRecord) -> usize {
    rec.position().map(|p| p.line() as usize).unwrap_or(0)
}

/// Loads a wide or long (strict 24-hour) CSV into a panel.
pub fn load_panel(path: &Path, layout: Layout, label: SeriesRole) -> Result<HourlyPanel> {
    match layout {
        Layout::Wide => load_wide(path, label),
        Layout::Long => load_long(path, label),
        Layout::LongDst => {
            let raw = load_raw_long(path)?;
            super::dst::dst_adjust(&raw, label).map(|(p, _)| p)
        }
    }
}

fn load_wide(path: &Path, label: SeriesRole) -> Result<HourlyPanel> {
    let mut rdr = open(path)?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let date_col = column_index(path, &headers, "date")?;
    let hour_cols: Vec<usize> =
        (1..=HOURS).map(|h| column_index(path, &headers, &hour_column(h))).collect::<Result<_>>()?;

    let mut rows: BTreeMap<NaiveDate, DayRow> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = line_of(&rec);
        let date = parse_date(path, line, rec.get(date_col).unwrap_or(""))?;
        let mut row = [0.0; HOURS];
        for (slot, &c) in row.iter_mut().zip(&hour_cols) {
            *slot = parse_f64(path, line, rec.get(c).unwrap_or(""))?;
        }
        if rows.insert(date, row).is_some() {
            return Err(Error::DuplicateCell { context: path.display().to_string(), date, hour: 1 });
        }
    }
    let (dates, values): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    HourlyPanel::new(dates, values, label).map_err(|e| with_context(e, path))
}

fn with_context(e: Error, path: &Path) -> Error {
    match e {
        Error::NonContiguousDates { date, reason, .. } => {
            Error::NonContiguousDates { context: path.display().to_string(), date, reason }
        }
        other => other,
    }
}

fn load_long(path: &Path, label: SeriesRole) -> Result<HourlyPanel> {
    let records = read_long(path, HOURS as u32)?;
    let ctx = path.display().to_string();
    let mut days: BTreeMap<NaiveDate, [Option<f64>; HOURS]> = BTreeMap::new();
    for r in records {
        let slot = &mut days.entry(r.date).or_insert([None; HOURS])[r.hour as usize - 1];
        if slot.replace(r.value).is_some() {
            return Err(Error::DuplicateCell { context: ctx, date: r.date, hour: r.hour });
        }
    }
    let mut dates = Vec::with_capacity(days.len());
    let mut values = Vec::with_capacity(days.len());
    for (date, cells) in days {
        let mut row = [0.0; HOURS];
        for (h, c) in cells.iter().enumerate() {
            row[h] = c.ok_or_else(|| Error::NonContiguousDates {
                context: ctx.clone(),
                date,
                reason: format!("missing hour {}", h + 1),
            })?;
        }
        dates.push(date);
        values.push(row);
    }
    HourlyPanel::new(dates, values, label).map_err(|e| with_context(e, path))
}

/// Reads `date,hour,value` records allowing hours up to 25.
pub fn load_raw_long(path: &Path) -> Result<Vec<RawRecord>> {
    read_long(path, 25)
}

fn read_long(path: &Path, max_hour: u32) -> Result<Vec<RawRecord>> {
    let mut rdr = open(path)?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let date_col = column_index(path, &headers, "date")?;
    let hour_col = column_index(path, &headers, "hour")?;
    let value_col = column_index(path, &headers, "value")?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = line_of(&rec);
        let date = parse_date(path, line, rec.get(date_col).unwrap_or(""))?;
        let hour_txt = rec.get(hour_col).unwrap_or("");
        let hour: i64 = hour_txt.parse().map_err(|_| Error::NonNumericValue {
            context: path.display().to_string(),
            line,
            value: hour_txt.to_string(),
        })?;
        if !(1..=max_hour as i64).contains(&hour) {
            return Err(Error::InvalidHour { context: path.display().to_string(), line, hour, max: max_hour });
        }
        let value = parse_f64(path, line, rec.get(value_col).unwrap_or(""))?;
        out.push(RawRecord { date, hour: hour as u32, value });
    }
    Ok(out)
}

/// Reads the fuel CSV; empty cells become `None`.
pub fn load_fuel_records(path: &Path) -> Result<Vec<FuelRecord>> {
    let mut rdr = open(path)?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let cols = ["date", "co2", "gas", "coal"]
        .iter()
        .map(|c| column_index(path, &headers, c))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = line_of(&rec);
        let date = parse_date(path, line, rec.get(cols[0]).unwrap_or(""))?;
        let cell = |i: usize| -> Result<Option<f64>> {
            match rec.get(cols[i]).unwrap_or("") {
                "" => Ok(None),
                s => parse_f64(path, line, s).map(Some),
            }
        };
        out.push(FuelRecord { date, co2: cell(1)?, gas: cell(2)?, coal: cell(3)? });
    }
    Ok(out)
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::File::create(path).map(std::io::BufWriter::new).map_err(|e| Error::io(path, e))
}

pub fn write_wide(panel: &HourlyPanel, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    let header: Vec<String> = std::iter::once("date".to_string()).chain((1..=HOURS).map(hour_column)).collect();
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for (d, row) in panel.dates().iter().zip(panel.rows()) {
        write!(w, "{d}").map_err(io)?;
        for v in row {
            write!(w, ",{v}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_fuels(fuels: &FuelSeries, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "date,co2,gas,coal").map_err(io)?;
    for (i, d) in fuels.dates().iter().enumerate() {
        writeln!(
            w,
            "{d},{},{},{}",
            fuels.series(super::Fuel::Co2)[i],
            fuels.series(super::Fuel::Gas)[i],
            fuels.series(super::Fuel::Coal)[i]
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}
