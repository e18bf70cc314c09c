//! Loading and pre-processing of hourly market panels and daily fuel prices.

mod calendar;
mod csvio;
mod dst;
mod fuels;
mod panel;

pub use calendar::{calendar_dummies, dummy_row, DUMMY_COUNT, DUMMY_LABELS};
pub use csvio::{hour_column, load_fuel_records, load_panel, load_raw_long, write_fuels, write_wide, Layout};
pub use dst::{dst_adjust, panel_records, DstReport, RawRecord};
pub use fuels::{interpolate_fuels, FuelFillReport, FuelRecord};
pub use panel::{DayRow, Fuel, FuelSeries, HourlyPanel, MarketDataset, SeriesRole, HOURS};

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const DEFAULT_JITTER_EPSILON: f64 = 1e-3;

/// Replaces every exact zero of a solar panel by an independent draw from
/// Uniform(0, epsilon). Returns the new panel and the number of replaced cells.
pub fn jitter_solar(panel: &HourlyPanel, epsilon: f64, seed: u64) -> Result<(HourlyPanel, usize)> {
    if panel.label() != SeriesRole::Solar {
        return Err(Error::NonSolarPanel(panel.label().to_string()));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Config(format!("jitter epsilon must be positive, got {epsilon}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut count = 0;
    let out = panel.map_values(|_, _, v| {
        if v != 0.0 {
            return v;
        }
        count += 1;
        loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                return u * epsilon;
            }
        }
    })?;
    Ok((out, count))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PanelSource {
    pub path: PathBuf,
    #[serde(default)]
    pub layout: Layout,
}

/// Key-value description of one market's input files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketManifest {
    pub market: String,
    pub price: PanelSource,
    pub demand: PanelSource,
    pub wind: PanelSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solar: Option<PanelSource>,
    #[serde(default = "default_true")]
    pub solar_present: bool,
    pub fuels: PathBuf,
    #[serde(default = "default_epsilon")]
    pub jitter_epsilon: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_true() -> bool {
    true
}

fn default_epsilon() -> f64 {
    DEFAULT_JITTER_EPSILON
}

impl MarketManifest {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PanelRepairs {
    pub panel: String,
    pub dst_dropped: usize,
    pub dst_interpolated: usize,
}

/// Summary of what ingest loaded and repaired.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IngestReport {
    pub market: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub days: usize,
    pub panels: Vec<String>,
    pub repairs: Vec<PanelRepairs>,
    pub fuel_fills: FuelFillReport,
    pub solar_jittered: usize,
}

fn load_source(base: &Path, src: &PanelSource, role: SeriesRole) -> Result<(HourlyPanel, PanelRepairs)> {
    let path = base.join(&src.path);
    let mut repairs = PanelRepairs { panel: role.to_string(), ..Default::default() };
    let panel = match src.layout {
        Layout::LongDst => {
            let (p, rep) = dst_adjust(&load_raw_long(&path)?, role)?;
            repairs.dst_dropped = rep.dropped.len();
            repairs.dst_interpolated = rep.interpolated.len();
            p
        }
        layout => load_panel(&path, layout, role)?,
    };
    Ok((panel, repairs))
}

/// Loads, repairs and aligns every file named in the manifest at `path`.
pub fn load_market(path: &Path) -> Result<(MarketDataset, IngestReport)> {
    let manifest = MarketManifest::from_path(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    load_market_from(&manifest, base)
}

pub fn load_market_from(manifest: &MarketManifest, base: &Path) -> Result<(MarketDataset, IngestReport)> {
    let (price, r_price) = load_source(base, &manifest.price, SeriesRole::Price)?;
    let (demand, r_demand) = load_source(base, &manifest.demand, SeriesRole::Demand)?;
    let (wind, r_wind) = load_source(base, &manifest.wind, SeriesRole::Wind)?;
    let mut repairs = vec![r_price, r_demand, r_wind];
    let mut panels = vec!["price".to_string(), "demand".into(), "wind".into()];

    let mut solar_jittered = 0;
    let solar = match (&manifest.solar, manifest.solar_present) {
        (_, false) => None,
        (Some(src), true) => {
            let (raw, rep) = load_source(base, src, SeriesRole::Solar)?;
            repairs.push(rep);
            let (jittered, n) = jitter_solar(&raw, manifest.jitter_epsilon, manifest.seed)?;
            solar_jittered = n;
            panels.push("solar".into());
            Some(jittered)
        }
        (None, true) => return Err(Error::Config("solar_present = true but no [solar] source given".into())),
    };

    let (start, end) = match (price.start(), price.end()) {
        (Some(s), Some(e)) => (s, e),
        _ => return Err(Error::MisalignedPanels("price panel is empty".into())),
    };
    let fuel_path = base.join(&manifest.fuels);
    let (fuels, fuel_fills) = interpolate_fuels(&load_fuel_records(&fuel_path)?, start, end)?;
    panels.push("fuels".into());

    let data = MarketDataset::new(manifest.market.clone(), price, demand, wind, solar, fuels)?;
    let report = IngestReport {
        market: manifest.market.clone(),
        start,
        end,
        days: data.len(),
        panels,
        repairs,
        fuel_fills,
        solar_jittered,
    };
    Ok((data, report))
}

/// Writes the dataset as wide CSVs plus a manifest that reloads it unchanged.
pub fn export_dataset(data: &MarketDataset, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let wide = |name: &str| PanelSource { path: PathBuf::from(format!("{name}.csv")), layout: Layout::Wide };
    write_wide(&data.price, &dir.join("price.csv"))?;
    write_wide(&data.demand, &dir.join("demand.csv"))?;
    write_wide(&data.wind, &dir.join("wind.csv"))?;
    if let Some(s) = &data.solar {
        write_wide(s, &dir.join("solar.csv"))?;
    }
    write_fuels(&data.fuels, &dir.join("fuels.csv"))?;
    let manifest = MarketManifest {
        market: data.market.clone(),
        price: wide("price"),
        demand: wide("demand"),
        wind: wide("wind"),
        solar: data.solar.as_ref().map(|_| wide("solar")),
        solar_present: data.has_solar(),
        fuels: PathBuf::from("fuels.csv"),
        jitter_epsilon: DEFAULT_JITTER_EPSILON,
        seed: 0,
    };
    let path = dir.join("manifest.toml");
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `ingest_report.json` and the normalized dataset under `dir/dataset`.
/// Returns the path of the normalized manifest.
pub fn write_ingest_bundle(data: &MarketDataset, report: &IngestReport, dir: &Path) -> Result<PathBuf> {
    let manifest = export_dataset(data, &dir.join("dataset"))?;
    let path = dir.join("ingest_report.json");
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
