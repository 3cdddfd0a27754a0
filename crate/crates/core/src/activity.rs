//! Per-SIM activity statistics, exploratory distributions, and selection of
//! SIMs active enough for mobility analysis.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::calendar::{DayType, HolidayCalendar};
use crate::ingest::{CdrRecord, SimKey};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimActivityStats {
    pub sim: SimKey,
    pub total_records: u64,
    /// Local calendar days with at least one record.
    pub active_days: u32,
    pub active_workdays: u32,
    pub active_holidays: u32,
    /// Records per active workday.
    pub weekday_daily_mean: f64,
    /// Records per active weekend or holiday day.
    pub weekend_daily_mean: f64,
    /// Records per active day of either kind.
    pub records_per_day_mean: f64,
}

impl SimActivityStats {
    /// Builds the statistics from a per-day record count.
    pub fn from_day_counts(sim: SimKey, days: &BTreeMap<i64, u64>, cal: &HolidayCalendar) -> Self {
        let (mut work_days, mut work_records, mut off_days, mut off_records) = (0u32, 0u64, 0u32, 0u64);
        for (&day, &n) in days {
            if n == 0 {
                continue;
            }
            match cal.day_type(day) {
                DayType::Workday => {
                    work_days += 1;
                    work_records += n;
                }
                DayType::Holiday => {
                    off_days += 1;
                    off_records += n;
                }
            }
        }
        let mean = |records: u64, days: u32| if days == 0 { 0.0 } else { records as f64 / f64::from(days) };
        let total = work_records + off_records;
        SimActivityStats {
            sim,
            total_records: total,
            active_days: work_days + off_days,
            active_workdays: work_days,
            active_holidays: off_days,
            weekday_daily_mean: mean(work_records, work_days),
            weekend_daily_mean: mean(off_records, off_days),
            records_per_day_mean: mean(total, work_days + off_days),
        }
    }

    /// Statistics for the records of a single SIM, in any order.
    pub fn for_sim(sim: SimKey, records: &[CdrRecord], cal: &HolidayCalendar) -> Self {
        let mut days = BTreeMap::new();
        for r in records {
            *days.entry(cal.day_index(r.timestamp)).or_insert(0u64) += 1;
        }
        SimActivityStats::from_day_counts(sim, &days, cal)
    }
}

/// Order-insensitive single pass over an arbitrary record stream.
pub fn compute_stats<'a>(
    records: impl IntoIterator<Item = &'a CdrRecord>,
    cal: &HolidayCalendar,
) -> BTreeMap<SimKey, SimActivityStats> {
    let mut per_sim: HashMap<SimKey, BTreeMap<i64, u64>> = HashMap::new();
    for r in records {
        *per_sim
            .entry(r.sim)
            .or_default()
            .entry(cal.day_index(r.timestamp))
            .or_insert(0) += 1;
    }
    per_sim
        .into_iter()
        .map(|(sim, days)| (sim, SimActivityStats::from_day_counts(sim, &days, cal)))
        .collect()
}

/// Buckets of total record count per SIM.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ActivityBucket {
    One,
    UpTo10,
    UpTo100,
    UpTo1000,
    Over1000,
}

impl ActivityBucket {
    pub const ALL: [ActivityBucket; 5] = [
        ActivityBucket::One,
        ActivityBucket::UpTo10,
        ActivityBucket::UpTo100,
        ActivityBucket::UpTo1000,
        ActivityBucket::Over1000,
    ];

    pub fn of(total: u64) -> Self {
        match total {
            0 | 1 => ActivityBucket::One,
            2..=10 => ActivityBucket::UpTo10,
            11..=100 => ActivityBucket::UpTo100,
            101..=1000 => ActivityBucket::UpTo1000,
            _ => ActivityBucket::Over1000,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ActivityBucket::One => "=1",
            ActivityBucket::UpTo10 => "(1,10]",
            ActivityBucket::UpTo100 => "(10,100]",
            ActivityBucket::UpTo1000 => "(100,1000]",
            ActivityBucket::Over1000 => ">1000",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryShare {
    pub bucket: ActivityBucket,
    pub sims: u64,
    pub records: u64,
    /// Percent of SIMs.
    pub sim_share: f64,
    /// Percent of all records.
    pub activity_share: f64,
}

pub fn activity_categories<'a>(stats: impl IntoIterator<Item = &'a SimActivityStats>) -> Vec<CategoryShare> {
    let mut sims = [0u64; 5];
    let mut records = [0u64; 5];
    for s in stats {
        let b = ActivityBucket::of(s.total_records) as usize;
        sims[b] += 1;
        records[b] += s.total_records;
    }
    let (ns, nr) = (sims.iter().sum::<u64>(), records.iter().sum::<u64>());
    let pct = |x: u64, n: u64| if n == 0 { 0.0 } else { 100.0 * x as f64 / n as f64 };
    ActivityBucket::ALL
        .iter()
        .map(|&b| CategoryShare {
            bucket: b,
            sims: sims[b as usize],
            records: records[b as usize],
            sim_share: pct(sims[b as usize], ns),
            activity_share: pct(records[b as usize], nr),
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterCriteria {
    pub min_days: u32,
    pub min_weekday_mean: f64,
    pub min_weekend_mean: f64,
    pub max_daily_mean: f64,
}

impl Default for FilterCriteria {
    fn default() -> Self {
        FilterCriteria {
            min_days: 20,
            min_weekday_mean: 40.0,
            min_weekend_mean: 20.0,
            max_daily_mean: 1000.0,
        }
    }
}

impl FilterCriteria {
    pub fn accepts(&self, s: &SimActivityStats) -> bool {
        s.active_days >= self.min_days
            && s.weekday_daily_mean >= self.min_weekday_mean
            && s.weekend_daily_mean >= self.min_weekend_mean
            && s.records_per_day_mean <= self.max_daily_mean
    }
}

pub fn select_active<'a>(
    stats: impl IntoIterator<Item = &'a SimActivityStats>,
    criteria: &FilterCriteria,
) -> BTreeSet<SimKey> {
    stats.into_iter().filter(|s| criteria.accepts(s)).map(|s| s.sim).collect()
}

/// Record counts by local day of week (Monday first) and hour.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayHourMatrix {
    pub counts: [[u64; 24]; 7],
}

impl DayHourMatrix {
    pub fn add(&mut self, ts: i64, cal: &HolidayCalendar) {
        let dow = cal.weekday_index(cal.day_index(ts)) as usize;
        self.counts[dow][cal.hour(ts) as usize] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

pub fn day_hour_matrix<'a>(records: impl IntoIterator<Item = &'a CdrRecord>, cal: &HolidayCalendar) -> DayHourMatrix {
    let mut m = DayHourMatrix::default();
    for r in records {
        m.add(r.timestamp, cal);
    }
    m
}

/// Number of SIMs per active-day count.
pub fn active_days_histogram<'a>(stats: impl IntoIterator<Item = &'a SimActivityStats>) -> BTreeMap<u32, u64> {
    let mut h = BTreeMap::new();
    for s in stats {
        *h.entry(s.active_days).or_insert(0) += 1;
    }
    h
}
