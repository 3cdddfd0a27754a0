//! Reading and writing the per-stage CSV artifacts.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::activity::SimActivityStats;
use crate::anchors::AnchorEstimate;
use crate::calendar::DayType;
use crate::error::{Error, Result};
use crate::indicators::{MobilityClass, MobilityIndicators};
use crate::ingest::SimKey;
use crate::ses::{QuartileGroup, SesAssignment};
use crate::spatial::MergedId;

pub(crate) struct CsvOut {
    path: PathBuf,
    w: csv::Writer<File>,
}

impl CsvOut {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        w.write_record(header).map_err(|e| Error::csv(path, e))?;
        Ok(CsvOut {
            path: path.to_path_buf(),
            w,
        })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w.write_record(fields).map_err(|e| Error::csv(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.w.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub(crate) fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// A fully read artifact with a verified header.
pub(crate) struct Table {
    pub path: PathBuf,
    pub rows: Vec<csv::StringRecord>,
}

pub(crate) fn read_table(path: &Path, header: &[&str]) -> Result<Table> {
    if !path.exists() {
        return Err(Error::MissingArtifact {
            path: path.to_path_buf(),
        });
    }
    let mut rdr = crate::ingest::open_csv(path)?;
    let found = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    crate::ingest::check_header(path, &found, header)?;
    let rows = rdr
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::csv(path, e))?;
    Ok(Table {
        path: path.to_path_buf(),
        rows,
    })
}

impl Table {
    pub fn get<T: FromStr>(&self, rec: &csv::StringRecord, i: usize) -> Result<T> {
        let s = rec.get(i).unwrap_or("");
        s.parse().map_err(|_| self.bad(rec, i))
    }

    pub fn get_opt<T: FromStr>(&self, rec: &csv::StringRecord, i: usize) -> Result<Option<T>> {
        match rec.get(i).unwrap_or("") {
            "" => Ok(None),
            s => s.parse().map(Some).map_err(|_| self.bad(rec, i)),
        }
    }

    fn bad(&self, rec: &csv::StringRecord, i: usize) -> Error {
        Error::InvalidArgument(format!(
            "{}: cannot parse column {} of row {:?}",
            self.path.display(),
            i + 1,
            rec
        ))
    }
}

/// Sorted SIM names with dense keys in name order, for stages that work
/// from artifacts rather than the raw CDR.
#[derive(Clone, Debug, Default)]
pub(crate) struct SimNames {
    names: Vec<String>,
    index: BTreeMap<String, SimKey>,
}

impl SimNames {
    pub fn new(names: impl IntoIterator<Item = String>) -> Self {
        let mut names: Vec<String> = names.into_iter().collect();
        names.sort();
        names.dedup();
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), SimKey(i as u32)))
            .collect();
        SimNames { names, index }
    }

    pub fn key(&self, name: &str) -> Option<SimKey> {
        self.index.get(name).copied()
    }

    pub fn name(&self, key: SimKey) -> &str {
        &self.names[key.0 as usize]
    }
}

pub(crate) const SIM_STATS_HEADER: [&str; 8] = [
    "sim_id",
    "total_records",
    "active_days",
    "active_workdays",
    "active_holidays",
    "weekday_daily_mean",
    "weekend_daily_mean",
    "records_per_day_mean",
];

pub(crate) fn write_sim_stats(path: &Path, rows: &[(&str, SimActivityStats)]) -> Result<()> {
    let mut out = CsvOut::create(path, &SIM_STATS_HEADER)?;
    for (name, s) in rows {
        out.row([
            name.to_string(),
            s.total_records.to_string(),
            s.active_days.to_string(),
            s.active_workdays.to_string(),
            s.active_holidays.to_string(),
            s.weekday_daily_mean.to_string(),
            s.weekend_daily_mean.to_string(),
            s.records_per_day_mean.to_string(),
        ])?;
    }
    out.finish()
}

pub(crate) fn read_sim_stats(path: &Path) -> Result<Vec<(String, SimActivityStats)>> {
    let t = read_table(path, &SIM_STATS_HEADER)?;
    t.rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            Ok((
                r[0].to_string(),
                SimActivityStats {
                    sim: SimKey(i as u32),
                    total_records: t.get(r, 1)?,
                    active_days: t.get(r, 2)?,
                    active_workdays: t.get(r, 3)?,
                    active_holidays: t.get(r, 4)?,
                    weekday_daily_mean: t.get(r, 5)?,
                    weekend_daily_mean: t.get(r, 6)?,
                    records_per_day_mean: t.get(r, 7)?,
                },
            ))
        })
        .collect()
}

pub(crate) fn write_sim_list(path: &Path, names: &[&str]) -> Result<()> {
    let mut out = CsvOut::create(path, &["sim_id"])?;
    for n in names {
        out.row([n])?;
    }
    out.finish()
}

pub(crate) fn read_sim_list(path: &Path) -> Result<Vec<String>> {
    Ok(read_table(path, &["sim_id"])?
        .rows
        .iter()
        .map(|r| r[0].to_string())
        .collect())
}

pub(crate) const ANCHORS_HEADER: [&str; 6] =
    ["sim_id", "home_merged_id", "work_merged_id", "home_count", "work_count", "home_work_km"];

pub(crate) fn write_anchors(path: &Path, rows: &[(&str, AnchorEstimate)]) -> Result<()> {
    let mut out = CsvOut::create(path, &ANCHORS_HEADER)?;
    for (name, a) in rows {
        out.row([
            name.to_string(),
            opt(a.home),
            opt(a.work),
            a.home_count.to_string(),
            a.work_count.to_string(),
            opt(a.home_work_km),
        ])?;
    }
    out.finish()
}

pub(crate) fn read_anchors(path: &Path) -> Result<Vec<(String, AnchorEstimate)>> {
    let t = read_table(path, &ANCHORS_HEADER)?;
    t.rows
        .iter()
        .map(|r| {
            Ok((
                r[0].to_string(),
                AnchorEstimate {
                    sim: SimKey(0),
                    home: t.get_opt::<MergedId>(r, 1)?,
                    work: t.get_opt::<MergedId>(r, 2)?,
                    home_count: t.get(r, 3)?,
                    work_count: t.get(r, 4)?,
                    home_work_km: t.get_opt(r, 5)?,
                },
            ))
        })
        .collect()
}

pub(crate) const INDICATORS_HEADER: [&str; 8] = [
    "sim_id",
    "day_type",
    "rg_km",
    "rg2_km",
    "entropy",
    "mobility_class",
    "location_count",
    "travel_diversity",
];

pub(crate) fn write_indicators(path: &Path, rows: &[(&str, MobilityIndicators)]) -> Result<()> {
    let mut out = CsvOut::create(path, &INDICATORS_HEADER)?;
    for (name, m) in rows {
        out.row([
            name.to_string(),
            m.day_type.to_string(),
            m.rg_km.to_string(),
            m.rg_k_km.to_string(),
            m.entropy.to_string(),
            m.class.to_string(),
            m.location_count.to_string(),
            m.travel_diversity.to_string(),
        ])?;
    }
    out.finish()
}

pub(crate) fn read_indicators(path: &Path) -> Result<Vec<(String, MobilityIndicators)>> {
    let t = read_table(path, &INDICATORS_HEADER)?;
    t.rows
        .iter()
        .map(|r| {
            let day_type = DayType::parse(&r[1]).ok_or_else(|| t.bad(r, 1))?;
            let class = MobilityClass::parse(&r[5]).ok_or_else(|| t.bad(r, 5))?;
            Ok((
                r[0].to_string(),
                MobilityIndicators {
                    sim: SimKey(0),
                    day_type,
                    rg_km: t.get(r, 2)?,
                    rg_k_km: t.get(r, 3)?,
                    entropy: t.get(r, 4)?,
                    class,
                    location_count: t.get(r, 6)?,
                    travel_diversity: t.get(r, 7)?,
                },
            ))
        })
        .collect()
}

pub(crate) const SES_HEADER: [&str; 8] = [
    "sim_id",
    "home_cell",
    "v_ses",
    "home_price_category",
    "stratum",
    "work_cell",
    "work_price",
    "quartile_group",
];

pub(crate) fn write_ses(
    path: &Path,
    rows: &[(&str, Option<MergedId>, Option<MergedId>, SesAssignment)],
) -> Result<()> {
    let mut out = CsvOut::create(path, &SES_HEADER)?;
    for (name, home, work, a) in rows {
        out.row([
            name.to_string(),
            opt(*home),
            a.v_ses.to_string(),
            opt(a.home_price_category),
            a.stratum.to_string(),
            opt(*work),
            opt(a.work_price),
            opt(a.quartile_group),
        ])?;
    }
    out.finish()
}

pub(crate) fn read_ses(path: &Path) -> Result<Vec<(String, SesAssignment)>> {
    let t = read_table(path, &SES_HEADER)?;
    t.rows
        .iter()
        .map(|r| {
            let group = match &r[7] {
                "" => None,
                s => Some(QuartileGroup::parse(s).ok_or_else(|| t.bad(r, 7))?),
            };
            Ok((
                r[0].to_string(),
                SesAssignment {
                    sim: SimKey(0),
                    v_ses: t.get(r, 2)?,
                    home_price_category: t.get_opt(r, 3)?,
                    stratum: t.get(r, 4)?,
                    work_price: t.get_opt(r, 6)?,
                    quartile_group: group,
                },
            ))
        })
        .collect()
}

pub(crate) const REMOVED_HEADER: [&str; 3] = ["sim_id", "rg_km", "home_work_km"];

pub(crate) const CATEGORY_SUMMARY_HEADER: [&str; 10] = [
    "home_price_category",
    "day_type",
    "indicator",
    "n",
    "mean",
    "q1",
    "median",
    "q3",
    "min",
    "max",
];
