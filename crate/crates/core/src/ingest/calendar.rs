use chrono::{Datelike, NaiveDate, Weekday};
use nalgebra::DMatrix;

/// Twelve month indicators followed by Saturday and Sunday.
pub const DUMMY_COUNT: usize = 14;

pub const DUMMY_LABELS: [&str; DUMMY_COUNT] = [
    "d_jan", "d_feb", "d_mar", "d_apr", "d_may", "d_jun", "d_jul", "d_aug", "d_sep", "d_oct", "d_nov", "d_dec",
    "d_sat", "d_sun",
];

pub fn dummy_row(date: NaiveDate) -> [f64; DUMMY_COUNT] {
    let mut row = [0.0; DUMMY_COUNT];
    row[date.month0() as usize] = 1.0;
    match date.weekday() {
        Weekday::Sat => row[12] = 1.0,
        Weekday::Sun => row[13] = 1.0,
        _ => {}
    }
    row
}

/// T×14 calendar dummy matrix.
pub fn calendar_dummies(dates: &[NaiveDate]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dates.len(), DUMMY_COUNT);
    for (i, &d) in dates.iter().enumerate() {
        for (j, v) in dummy_row(d).into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    m
}
