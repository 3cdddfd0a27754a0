//! Run configuration: a flat `key = value` file whose entries can be
//! overridden one by one from the command line.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::activity::FilterCriteria;
use crate::calendar::HolidayCalendar;
use crate::error::{Error, Result};
use crate::indicators::IndicatorParams;
use crate::pca::BinSpec;

pub const QUANTILE_RULE: &str = "type7";

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub cdr: PathBuf,
    pub cells: PathBuf,
    pub listings: PathBuf,
    pub admin: PathBuf,
    pub boundary: PathBuf,
    pub census_district: Option<PathBuf>,
    pub census_age: Option<PathBuf>,
    pub outdir: PathBuf,
    pub holidays: Vec<NaiveDate>,
    pub utc_offset_secs: i64,
    pub filter: FilterCriteria,
    pub merge_eps_m: f64,
    pub min_listings: u32,
    pub indicators: IndicatorParams,
    pub strata: usize,
    pub bins: BinSpec,
    pub quantile_rule: String,
    /// Worker threads for parallel stages; `None` uses all cores.
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mut cfg = RunConfig {
            cdr: PathBuf::new(),
            cells: PathBuf::new(),
            listings: PathBuf::new(),
            admin: PathBuf::new(),
            boundary: PathBuf::new(),
            census_district: None,
            census_age: None,
            outdir: PathBuf::from("out"),
            holidays: HolidayCalendar::default().holidays().collect(),
            utc_offset_secs: 2 * 3600,
            filter: FilterCriteria::default(),
            merge_eps_m: 100.0,
            min_listings: 1,
            indicators: IndicatorParams::default(),
            strata: 10,
            bins: BinSpec::default(),
            quantile_rule: QUANTILE_RULE.into(),
            threads: None,
        };
        cfg.set_input_dir(Path::new("."));
        cfg
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean {value:?} for {key}"))),
    }
}

impl RunConfig {
    pub const KEYS: [&'static str; 27] = [
        "input_dir",
        "cdr",
        "cells",
        "listings",
        "admin",
        "boundary",
        "census_district",
        "census_age",
        "outdir",
        "holidays",
        "utc_offset_hours",
        "min_days",
        "min_weekday_mean",
        "min_weekend_mean",
        "max_daily_mean",
        "merge_eps_m",
        "min_listings",
        "rg_k",
        "travel_k",
        "travel_directed",
        "strata",
        "rg_bins",
        "rg_start_km",
        "rg_width_km",
        "entropy_bins",
        "quantile_rule",
        "threads",
    ];

    /// Points all five inputs at the conventional file names in `dir`.
    pub fn set_input_dir(&mut self, dir: &Path) {
        self.cdr = dir.join("cdr.csv");
        self.cells = dir.join("cells.csv");
        self.listings = dir.join("listings.csv");
        self.admin = dir.join("admin.geojson");
        self.boundary = dir.join("boundary.geojson");
    }

    pub fn calendar(&self) -> HolidayCalendar {
        HolidayCalendar::new(self.holidays.iter().copied(), self.utc_offset_secs)
    }

    /// Applies one setting. Relative paths are resolved against `base`.
    pub fn set_relative(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let path = || base.join(value);
        match key {
            "input_dir" => self.set_input_dir(&path()),
            "cdr" => self.cdr = path(),
            "cells" => self.cells = path(),
            "listings" => self.listings = path(),
            "admin" => self.admin = path(),
            "boundary" => self.boundary = path(),
            "census_district" => self.census_district = (!value.is_empty()).then(path),
            "census_age" => self.census_age = (!value.is_empty()).then(path),
            "outdir" => self.outdir = path(),
            "holidays" => self.holidays = HolidayCalendar::parse_dates(value)?,
            "utc_offset_hours" => {
                let h: f64 = parse(key, value)?;
                if !(-14.0..=14.0).contains(&h) {
                    return Err(Error::Config(format!("utc_offset_hours out of range: {h}")));
                }
                self.utc_offset_secs = (h * 3600.0).round() as i64;
            }
            "min_days" => self.filter.min_days = parse(key, value)?,
            "min_weekday_mean" => self.filter.min_weekday_mean = parse(key, value)?,
            "min_weekend_mean" => self.filter.min_weekend_mean = parse(key, value)?,
            "max_daily_mean" => self.filter.max_daily_mean = parse(key, value)?,
            "merge_eps_m" => self.merge_eps_m = parse(key, value)?,
            "min_listings" => self.min_listings = parse(key, value)?,
            "rg_k" => self.indicators.k = parse(key, value)?,
            "travel_k" => self.indicators.travel_k = parse(key, value)?,
            "travel_directed" => self.indicators.directed = parse_bool(key, value)?,
            "strata" => self.strata = parse(key, value)?,
            "rg_bins" => self.bins.rg_bins = parse(key, value)?,
            "rg_start_km" => self.bins.rg_start_km = parse(key, value)?,
            "rg_width_km" => self.bins.rg_width_km = parse(key, value)?,
            "entropy_bins" => self.bins.entropy_bins = parse(key, value)?,
            "quantile_rule" => self.quantile_rule = value.to_string(),
            "threads" => self.threads = Some(parse(key, value)?),
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        self.set_relative(key, value, Path::new(""))
    }

    /// Parses `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str, base: &Path) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set_relative(k.trim(), v.trim(), base)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    /// Loads a configuration file on top of the defaults; relative paths in
    /// the file are taken relative to the file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Open {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text, path.parent().unwrap_or(Path::new("")))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.merge_eps_m > 0.0) {
            return bad("merge_eps_m must be positive");
        }
        if self.indicators.k == 0 || self.indicators.travel_k == 0 {
            return bad("rg_k and travel_k must be at least 1");
        }
        if self.strata == 0 {
            return bad("strata must be at least 1");
        }
        if self.bins.rg_bins == 0 || self.bins.entropy_bins == 0 || !(self.bins.rg_width_km > 0.0) {
            return bad("bin counts and widths must be positive");
        }
        if !(self.filter.max_daily_mean > 0.0) {
            return bad("max_daily_mean must be positive");
        }
        if self.quantile_rule != QUANTILE_RULE {
            return Err(Error::Config(format!(
                "unsupported quantile_rule {:?}; only {QUANTILE_RULE} is implemented",
                self.quantile_rule
            )));
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1");
        }
        Ok(())
    }

    /// The effective settings as a config file.
    pub fn to_text(&self) -> String {
        let p = |p: &Path| p.display().to_string();
        let opt = |p: &Option<PathBuf>| p.as_deref().map(|x| x.display().to_string()).unwrap_or_default();
        let holidays: Vec<String> = self.holidays.iter().map(|d| d.to_string()).collect();
        let mut lines = vec![
            format!("cdr = {}", p(&self.cdr)),
            format!("cells = {}", p(&self.cells)),
            format!("listings = {}", p(&self.listings)),
            format!("admin = {}", p(&self.admin)),
            format!("boundary = {}", p(&self.boundary)),
            format!("census_district = {}", opt(&self.census_district)),
            format!("census_age = {}", opt(&self.census_age)),
            format!("outdir = {}", p(&self.outdir)),
            format!("holidays = {}", holidays.join(",")),
            format!("utc_offset_hours = {}", self.utc_offset_secs as f64 / 3600.0),
            format!("min_days = {}", self.filter.min_days),
            format!("min_weekday_mean = {}", self.filter.min_weekday_mean),
            format!("min_weekend_mean = {}", self.filter.min_weekend_mean),
            format!("max_daily_mean = {}", self.filter.max_daily_mean),
            format!("merge_eps_m = {}", self.merge_eps_m),
            format!("min_listings = {}", self.min_listings),
            format!("rg_k = {}", self.indicators.k),
            format!("travel_k = {}", self.indicators.travel_k),
            format!("travel_directed = {}", self.indicators.directed),
            format!("strata = {}", self.strata),
            format!("rg_bins = {}", self.bins.rg_bins),
            format!("rg_start_km = {}", self.bins.rg_start_km),
            format!("rg_width_km = {}", self.bins.rg_width_km),
            format!("entropy_bins = {}", self.bins.entropy_bins),
            format!("quantile_rule = {}", self.quantile_rule),
        ];
        if let Some(t) = self.threads {
            lines.push(format!("threads = {t}"));
        }
        lines.join("\n") + "\n"
    }
}
