//! Socioeconomic status from home-cell housing prices: price categories,
//! the equal-sum stratum model, work-price quartile groups, descriptive
//! statistics per category, and commuting tables against census references.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::anchors::AnchorEstimate;
use crate::calendar::DayType;
use crate::error::{Error, Result};
use crate::indicators::MobilityIndicators;
use crate::ingest::SimKey;
use crate::spatial::{AdminLabel, MergedCells};

pub const PRICE_MIN: f64 = 200_000.0;
pub const PRICE_MAX: f64 = 1_200_000.0;
pub const PRICE_STEP: f64 = 100_000.0;
pub const PRICE_CATEGORIES: u8 = 10;

/// Ten bins of 0.1M HUF/m² over [0.2M, 1.2M]; bins are closed below and open
/// above except the last, which also includes 1.2M.
pub fn price_category(v: f64) -> Option<u8> {
    if !(PRICE_MIN..=PRICE_MAX).contains(&v) {
        return None;
    }
    let bin = ((v - PRICE_MIN) / PRICE_STEP).floor() as u8 + 1;
    Some(bin.min(PRICE_CATEGORIES))
}

/// Splits values into `q` contiguous strata of (approximately) equal sum.
///
/// Values are sorted ascending (ties by key). Stratum `k` closes at the
/// first value where the cumulative sum reaches `k · total / q`, but never so
/// late that a later stratum would be left empty. Every stratum sum is then
/// within one value of `total / q`. Strata are numbered from 1 (lowest
/// values).
pub fn stratify_equal_sum<K: Ord + Clone>(values: &[(K, f64)], q: usize) -> Result<BTreeMap<K, u32>> {
    if q == 0 {
        return Err(Error::InvalidArgument("number of strata must be at least 1".into()));
    }
    if q > values.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot form {q} strata from {} subscribers",
            values.len()
        )));
    }
    if let Some((_, v)) = values.iter().find(|(_, v)| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("stratum values must be positive, got {v}")));
    }
    let mut sorted: Vec<&(K, f64)> = values.iter().collect();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));

    let n = sorted.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for (_, v) in &sorted {
        prefix.push(prefix[prefix.len() - 1] + v);
    }
    let total = prefix[n];

    let mut out = BTreeMap::new();
    let mut start = 0;
    for k in 1..=q {
        let end = if k == q {
            n
        } else {
            let target = k as f64 * total / q as f64;
            let last_allowed = n - (q - k);
            let mut c = start + 1;
            while c < last_allowed && prefix[c] < target {
                c += 1;
            }
            c
        };
        for (key, _) in &sorted[start..end] {
            out.insert(key.clone(), k as u32);
        }
        start = end;
    }
    Ok(out)
}

/// Quantile by linear interpolation between order statistics (R type 7).
/// `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QuartileGroup {
    MinQ1,
    Q1Q3,
    Q3Max,
}

impl QuartileGroup {
    pub const ALL: [QuartileGroup; 3] = [QuartileGroup::MinQ1, QuartileGroup::Q1Q3, QuartileGroup::Q3Max];

    pub fn as_str(self) -> &'static str {
        match self {
            QuartileGroup::MinQ1 => "minQ1",
            QuartileGroup::Q1Q3 => "Q1Q3",
            QuartileGroup::Q3Max => "Q3max",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        QuartileGroup::ALL.into_iter().find(|g| g.as_str() == s)
    }
}

impl fmt::Display for QuartileGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Groups SIMs of one home-price category by their work-cell price:
/// below Q1, within [Q1, Q3], above Q3. Fewer than four SIMs put everyone in
/// the interquartile group.
pub fn quartile_groups<K: Ord + Clone>(work_price: &[(K, f64)]) -> BTreeMap<K, QuartileGroup> {
    if work_price.len() < 4 {
        return work_price.iter().map(|(k, _)| (k.clone(), QuartileGroup::Q1Q3)).collect();
    }
    let mut sorted: Vec<f64> = work_price.iter().map(|(_, v)| *v).collect();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    work_price
        .iter()
        .map(|(k, v)| {
            let g = if *v < q1 {
                QuartileGroup::MinQ1
            } else if *v > q3 {
                QuartileGroup::Q3Max
            } else {
                QuartileGroup::Q1Q3
            };
            (k.clone(), g)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(Summary {
        n: sorted.len(),
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q3: quantile_sorted(&sorted, 0.75),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
    })
}

/// Everything known about one active SIM after anchors and indicators.
#[derive(Clone, Debug, PartialEq)]
pub struct SubscriberProfile {
    pub sim: SimKey,
    pub anchors: AnchorEstimate,
    pub workday: Option<MobilityIndicators>,
    pub holiday: Option<MobilityIndicators>,
}

impl SubscriberProfile {
    pub fn indicators(&self, day_type: DayType) -> Option<&MobilityIndicators> {
        match day_type {
            DayType::Workday => self.workday.as_ref(),
            DayType::Holiday => self.holiday.as_ref(),
        }
    }

    /// Workday radius of gyration, falling back to the holiday one.
    pub fn rg_km(&self) -> Option<f64> {
        self.workday.or(self.holiday).map(|i| i.rg_km)
    }
}

pub const STATIONARY_KM: f64 = 1.0;

/// Splits off likely stationary devices: radius of gyration or home–work
/// distance strictly below 1 km. A missing value never removes a SIM.
pub fn stationary_filter(profiles: Vec<SubscriberProfile>) -> (Vec<SubscriberProfile>, Vec<SubscriberProfile>) {
    profiles.into_iter().partition(|p| {
        let rg_small = p.rg_km().is_some_and(|v| v < STATIONARY_KM);
        let hw_small = p.anchors.home_work_km.is_some_and(|v| v < STATIONARY_KM);
        !(rg_small || hw_small)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SesAssignment {
    pub sim: SimKey,
    pub v_ses: f64,
    pub home_price_category: Option<u8>,
    pub stratum: u32,
    pub work_price: Option<f64>,
    /// Set when the work cell is priced and the home category is assigned.
    pub quartile_group: Option<QuartileGroup>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SesReport {
    pub profiles: u64,
    pub assigned: u64,
    pub excluded_no_home_price: u64,
    pub uncategorized: u64,
}

/// Attaches home-cell prices, price categories, equal-sum strata and
/// work-price quartile groups. SIMs whose home cell has no price are
/// excluded and counted.
pub fn assign_ses(
    profiles: &[SubscriberProfile],
    merged: &MergedCells,
    strata: usize,
) -> Result<(Vec<SesAssignment>, SesReport)> {
    let mut report = SesReport {
        profiles: profiles.len() as u64,
        ..Default::default()
    };
    let price = |id: Option<crate::spatial::MergedId>| id.and_then(|m| merged.get(m).mean_price_per_m2);
    let mut priced = Vec::new();
    for p in profiles {
        match price(p.anchors.home) {
            Some(v) if v > 0.0 => priced.push((p.sim, v, price(p.anchors.work))),
            _ => report.excluded_no_home_price += 1,
        }
    }
    if priced.is_empty() {
        return Ok((Vec::new(), report));
    }
    let values: Vec<(SimKey, f64)> = priced.iter().map(|&(s, v, _)| (s, v)).collect();
    let strata_of = stratify_equal_sum(&values, strata.min(values.len()))?;

    let mut by_category: BTreeMap<u8, Vec<(SimKey, f64)>> = BTreeMap::new();
    for &(sim, v, work) in &priced {
        if let (Some(c), Some(w)) = (price_category(v), work) {
            by_category.entry(c).or_default().push((sim, w));
        }
    }
    let mut groups: BTreeMap<SimKey, QuartileGroup> = BTreeMap::new();
    for sims in by_category.values() {
        groups.extend(quartile_groups(sims));
    }

    let out: Vec<SesAssignment> = priced
        .iter()
        .map(|&(sim, v, work)| {
            let category = price_category(v);
            if category.is_none() {
                report.uncategorized += 1;
            }
            SesAssignment {
                sim,
                v_ses: v,
                home_price_category: category,
                stratum: strata_of[&sim],
                work_price: work,
                quartile_group: groups.get(&sim).copied(),
            }
        })
        .collect();
    report.assigned = out.len() as u64;
    Ok((out, report))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IndicatorKind {
    Rg,
    RgK,
    Entropy,
    HomeWork,
}

impl IndicatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            IndicatorKind::Rg => "rg_km",
            IndicatorKind::RgK => "rg2_km",
            IndicatorKind::Entropy => "entropy",
            IndicatorKind::HomeWork => "home_work_km",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategorySummary {
    pub category: u8,
    /// `None` for day-independent indicators (home–work distance).
    pub day_type: Option<DayType>,
    pub indicator: IndicatorKind,
    pub summary: Summary,
}

/// Descriptive statistics of each indicator within each home-price
/// category. Empty groups produce no row.
pub fn aggregate_by_category(profiles: &[SubscriberProfile], assignments: &[SesAssignment]) -> Vec<CategorySummary> {
    let category: BTreeMap<SimKey, u8> = assignments
        .iter()
        .filter_map(|a| a.home_price_category.map(|c| (a.sim, c)))
        .collect();
    let mut groups: BTreeMap<(u8, Option<DayType>, IndicatorKind), Vec<f64>> = BTreeMap::new();
    for p in profiles {
        let Some(&c) = category.get(&p.sim) else { continue };
        for dt in DayType::ALL {
            if let Some(ind) = p.indicators(dt) {
                groups.entry((c, Some(dt), IndicatorKind::Rg)).or_default().push(ind.rg_km);
                groups.entry((c, Some(dt), IndicatorKind::RgK)).or_default().push(ind.rg_k_km);
                groups.entry((c, Some(dt), IndicatorKind::Entropy)).or_default().push(ind.entropy);
            }
        }
        if let Some(hw) = p.anchors.home_work_km {
            groups.entry((c, None, IndicatorKind::HomeWork)).or_default().push(hw);
        }
    }
    groups
        .into_iter()
        .filter_map(|((category, day_type, indicator), values)| {
            summarize(&values).map(|summary| CategorySummary {
                category,
                day_type,
                indicator,
                summary,
            })
        })
        .collect()
}

/// A table of row percentages keyed by a small integer (district or sector).
#[derive(Clone, Debug, PartialEq)]
pub struct PercentTable {
    pub key: &'static str,
    pub columns: &'static [&'static str],
    pub rows: BTreeMap<u8, Vec<f64>>,
    /// Number of SIMs behind each row.
    pub counts: BTreeMap<u8, u64>,
}

pub const ORIGIN_COLUMNS: &[&str] = &["same", "other_bp", "agglo", "outside"];
pub const AGE_COLUMNS: &[&str] = &["a20_29", "a30_39", "a40_49", "a50_59", "a60p"];

impl PercentTable {
    fn from_counts(key: &'static str, columns: &'static [&'static str], counts: BTreeMap<u8, Vec<u64>>) -> Self {
        let mut rows = BTreeMap::new();
        let mut totals = BTreeMap::new();
        for (k, c) in counts {
            let n: u64 = c.iter().sum();
            if n == 0 {
                continue;
            }
            rows.insert(k, c.iter().map(|&x| 100.0 * x as f64 / n as f64).collect());
            totals.insert(k, n);
        }
        PercentTable {
            key,
            columns,
            rows,
            counts: totals,
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        let mut header = vec![self.key.to_string()];
        header.extend(self.columns.iter().map(|c| c.to_string()));
        header.push("n".into());
        w.write_record(&header).map_err(|e| Error::csv(path, e))?;
        for (k, row) in &self.rows {
            let mut rec = vec![k.to_string()];
            rec.extend(row.iter().map(|v| format!("{v:.6}")));
            rec.push(self.counts.get(k).copied().unwrap_or(0).to_string());
            w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a reference table with header `key,col1,...,colN` (an extra
    /// trailing `n` column is ignored).
    pub fn read_csv(path: &Path, key: &'static str, columns: &'static [&'static str]) -> Result<Self> {
        let mut rdr = crate::ingest::open_csv(path)?;
        let header = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
        let mut expected = vec![key];
        expected.extend_from_slice(columns);
        let ok = header.len() >= expected.len() && expected.iter().zip(header.iter()).all(|(e, h)| *e == h);
        if !ok {
            return Err(Error::Header {
                path: path.to_path_buf(),
                expected: expected.join(","),
            });
        }
        let mut rows = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            let bad = || Error::InvalidArgument(format!("{}: malformed row {rec:?}", path.display()));
            let k: u8 = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let vals: Vec<f64> = (1..=columns.len())
                .map(|i| rec.get(i).and_then(|s| s.parse().ok()))
                .collect::<Option<_>>()
                .ok_or_else(bad)?;
            rows.insert(k, vals);
        }
        Ok(PercentTable {
            key,
            columns,
            rows,
            counts: BTreeMap::new(),
        })
    }
}

/// Commuting shares for SIMs working in a Budapest district.
#[derive(Clone, Debug, PartialEq)]
pub struct CommuteTable {
    /// Work district → home origin split.
    pub by_district: PercentTable,
    /// Home agglomeration sector → age category split.
    pub by_sector_age: PercentTable,
}

/// Age category index: 20–29, 30–39, 40–49, 50–59, 60+ (below 100).
pub fn age_bucket(age: u8) -> Option<usize> {
    match age {
        20..=59 => Some(usize::from((age - 20) / 10)),
        60..=99 => Some(4),
        _ => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Commuter {
    pub home: AdminLabel,
    pub work: AdminLabel,
    pub age: Option<u8>,
}

pub fn commuting_tables(commuters: impl IntoIterator<Item = Commuter>) -> CommuteTable {
    let mut origin: BTreeMap<u8, Vec<u64>> = BTreeMap::new();
    let mut ages: BTreeMap<u8, Vec<u64>> = BTreeMap::new();
    for c in commuters {
        let AdminLabel::District(work) = c.work else { continue };
        let col = match c.home {
            AdminLabel::District(h) if h == work => 0,
            AdminLabel::District(_) => 1,
            AdminLabel::Sector(_) => 2,
            AdminLabel::Outside => 3,
        };
        origin.entry(work).or_insert_with(|| vec![0; 4])[col] += 1;
        if let (AdminLabel::Sector(s), Some(b)) = (c.home, c.age.and_then(age_bucket)) {
            ages.entry(s).or_insert_with(|| vec![0; 5])[b] += 1;
        }
    }
    CommuteTable {
        by_district: PercentTable::from_counts("district", ORIGIN_COLUMNS, origin),
        by_sector_age: PercentTable::from_counts("sector", AGE_COLUMNS, ages),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffRow {
    pub key: u8,
    pub column: String,
    pub cdr: f64,
    pub census: f64,
    pub abs_diff: f64,
    /// `(cdr - census) / census`; absent when the census value is zero.
    pub rel_diff: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensusComparison {
    pub rows: Vec<DiffRow>,
    pub mean_abs_diff: f64,
}

impl CensusComparison {
    pub fn write_csv(&self, path: &Path, key: &str) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        w.write_record([key, "column", "cdr", "census", "abs_diff", "rel_diff"])
            .map_err(|e| Error::csv(path, e))?;
        for r in &self.rows {
            w.write_record([
                r.key.to_string(),
                r.column.clone(),
                format!("{:.6}", r.cdr),
                format!("{:.6}", r.census),
                format!("{:.6}", r.abs_diff),
                r.rel_diff.map(|v| format!("{v:.6}")).unwrap_or_default(),
            ])
            .map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Cell-by-cell differences between a CDR-derived table and a census
/// reference with the same keys and columns.
pub fn compare_to_census(cdr: &PercentTable, census: &PercentTable) -> Result<CensusComparison> {
    if cdr.columns != census.columns {
        return Err(Error::KeyMismatch(format!(
            "columns differ: {:?} vs {:?}",
            cdr.columns, census.columns
        )));
    }
    let a: BTreeSet<u8> = cdr.rows.keys().copied().collect();
    let b: BTreeSet<u8> = census.rows.keys().copied().collect();
    if a != b {
        let only_cdr: Vec<u8> = a.difference(&b).copied().collect();
        let only_census: Vec<u8> = b.difference(&a).copied().collect();
        return Err(Error::KeyMismatch(format!(
            "{} keys only in CDR table: {only_cdr:?}; only in census: {only_census:?}",
            cdr.key
        )));
    }
    let mut rows = Vec::new();
    for (k, vals) in &cdr.rows {
        for (i, col) in cdr.columns.iter().enumerate() {
            let (x, y) = (vals[i], census.rows[k][i]);
            rows.push(DiffRow {
                key: *k,
                column: col.to_string(),
                cdr: x,
                census: y,
                abs_diff: (x - y).abs(),
                rel_diff: (y != 0.0).then(|| (x - y) / y),
            });
        }
    }
    let mean_abs_diff = if rows.is_empty() {
        0.0
    } else {
        rows.iter().map(|r| r.abs_diff).sum::<f64>() / rows.len() as f64
    };
    Ok(CensusComparison { rows, mean_abs_diff })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::indicators::MobilityClass;

    #[test]
    fn price_category_edges() {
        assert_eq!(price_category(250_000.0), Some(1));
        assert_eq!(price_category(200_000.0), Some(1));
        assert_eq!(price_category(299_999.0), Some(1));
        assert_eq!(price_category(300_000.0), Some(2));
        assert_eq!(price_category(1_199_999.0), Some(10));
        assert_eq!(price_category(1_200_000.0), Some(10));
        assert_eq!(price_category(1_200_001.0), None);
        assert_eq!(price_category(150_000.0), None);
    }

    #[test]
    fn equal_sum_fixture() {
        let vals: Vec<(usize, f64)> = [1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 4.0].into_iter().enumerate().collect();
        let s = stratify_equal_sum(&vals, 3).unwrap();
        let strata: Vec<u32> = (0..7).map(|i| s[&i]).collect();
        assert_eq!(strata, [1, 1, 1, 1, 2, 2, 3]);
    }

    #[test]
    fn equal_sum_trivial_cases() {
        let vals: Vec<(usize, f64)> = (0..5).map(|i| (i, 1.0 + i as f64)).collect();
        assert!(stratify_equal_sum(&vals, 1).unwrap().values().all(|&s| s == 1));
        let equal: Vec<(usize, f64)> = (0..6).map(|i| (i, 3.0)).collect();
        let s = stratify_equal_sum(&equal, 2).unwrap();
        assert_eq!(s.values().filter(|&&v| v == 1).count(), 3);
        assert!(stratify_equal_sum(&equal, 7).is_err());
        assert!(stratify_equal_sum(&[(0, -1.0)], 1).is_err());
    }

    #[test]
    fn quartiles_fixture() {
        let sorted: Vec<f64> = (1..=8).map(f64::from).collect();
        assert_eq!(quantile_sorted(&sorted, 0.25), 2.75);
        assert_eq!(quantile_sorted(&sorted, 0.75), 6.25);
        let vals: Vec<(u32, f64)> = (1..=8).map(|i| (i, f64::from(i))).collect();
        let g = quartile_groups(&vals);
        assert_eq!(g[&1], QuartileGroup::MinQ1);
        assert_eq!(g[&2], QuartileGroup::MinQ1);
        for i in 3..=6 {
            assert_eq!(g[&i], QuartileGroup::Q1Q3);
        }
        assert_eq!(g[&7], QuartileGroup::Q3Max);
        assert_eq!(g[&8], QuartileGroup::Q3Max);
    }

    #[test]
    fn quartile_edge_and_degenerate_cases() {
        let equal: Vec<(u32, f64)> = (0..6).map(|i| (i, 5.0)).collect();
        assert!(quartile_groups(&equal).values().all(|&g| g == QuartileGroup::Q1Q3));
        // Q1 of {1,2,2,3,4} is exactly 2
        let vals: Vec<(u32, f64)> = [1.0, 2.0, 2.0, 3.0, 4.0].into_iter().enumerate().map(|(i, v)| (i as u32, v)).collect();
        let g = quartile_groups(&vals);
        assert_eq!(g[&1], QuartileGroup::Q1Q3);
        assert_eq!(g[&0], QuartileGroup::MinQ1);
        let few: Vec<(u32, f64)> = vec![(0, 1.0), (1, 100.0), (2, 1000.0)];
        assert!(quartile_groups(&few).values().all(|&g| g == QuartileGroup::Q1Q3));
    }

    fn profile(sim: u32, rg: Option<f64>, hw: Option<f64>) -> SubscriberProfile {
        SubscriberProfile {
            sim: SimKey(sim),
            anchors: AnchorEstimate {
                sim: SimKey(sim),
                home: None,
                work: None,
                home_count: 0,
                work_count: 0,
                home_work_km: hw,
            },
            workday: rg.map(|rg| MobilityIndicators {
                sim: SimKey(sim),
                day_type: DayType::Workday,
                rg_km: rg,
                rg_k_km: rg,
                entropy: 0.5,
                class: MobilityClass::Returner,
                location_count: 3,
                travel_diversity: 0.0,
            }),
            holiday: None,
        }
    }

    #[test]
    fn stationary_rules() {
        let ps = vec![
            profile(0, Some(0.5), Some(5.0)),
            profile(1, Some(1.0), Some(5.0)),
            profile(2, Some(3.0), None),
            profile(3, Some(3.0), Some(0.2)),
        ];
        let (kept, removed) = stationary_filter(ps);
        let kept_ids: Vec<u32> = kept.iter().map(|p| p.sim.0).collect();
        assert_eq!(kept_ids, [1, 2]);
        assert_eq!(removed.len(), 2);
        let (again, none) = stationary_filter(kept.clone());
        assert_eq!(again, kept);
        assert!(none.is_empty());
    }

    #[test]
    fn summary_basics() {
        let s = summarize(&[7.0]).unwrap();
        assert_eq!((s.mean, s.min, s.max), (7.0, 7.0, 7.0));
        assert_eq!(summarize(&[4.0, 6.0]).unwrap().mean, 5.0);
        assert!(summarize(&[]).is_none());
    }

    #[test]
    fn aggregate_single_sim() {
        let p = profile(4, Some(2.5), Some(8.0));
        let a = SesAssignment {
            sim: SimKey(4),
            v_ses: 450_000.0,
            home_price_category: Some(3),
            stratum: 1,
            work_price: None,
            quartile_group: None,
        };
        let rows = aggregate_by_category(&[p], &[a]);
        let rg = rows.iter().find(|r| r.indicator == IndicatorKind::Rg).unwrap();
        assert_eq!(rg.category, 3);
        assert_eq!((rg.summary.mean, rg.summary.min, rg.summary.max), (2.5, 2.5, 2.5));
        let hw = rows.iter().find(|r| r.indicator == IndicatorKind::HomeWork).unwrap();
        assert_eq!(hw.day_type, None);
    }

    fn commuter(home: AdminLabel, work: AdminLabel, age: Option<u8>) -> Commuter {
        Commuter { home, work, age }
    }

    #[test]
    fn commute_fixtures() {
        let t = commuting_tables(vec![
            commuter(AdminLabel::District(5), AdminLabel::District(5), Some(30)),
            commuter(AdminLabel::District(5), AdminLabel::District(5), None),
        ]);
        assert_eq!(t.by_district.rows[&5], vec![100.0, 0.0, 0.0, 0.0]);

        let t = commuting_tables(vec![
            commuter(AdminLabel::District(1), AdminLabel::District(1), Some(30)),
            commuter(AdminLabel::Sector(3), AdminLabel::District(1), Some(65)),
            commuter(AdminLabel::Sector(3), AdminLabel::Sector(2), Some(40)),
        ]);
        assert_eq!(t.by_district.rows[&1], vec![50.0, 0.0, 50.0, 0.0]);
        assert_eq!(t.by_district.rows.len(), 1);
        assert_eq!(t.by_sector_age.rows[&3], vec![0.0, 0.0, 0.0, 0.0, 100.0]);
    }

    #[test]
    fn age_buckets() {
        assert_eq!(age_bucket(65), Some(4));
        assert_eq!(age_bucket(60), Some(4));
        assert_eq!(age_bucket(59), Some(3));
        assert_eq!(age_bucket(20), Some(0));
        assert_eq!(age_bucket(19), None);
        assert_eq!(age_bucket(99), Some(4));
    }

    fn table(rows: &[(u8, [f64; 4])]) -> PercentTable {
        PercentTable {
            key: "district",
            columns: ORIGIN_COLUMNS,
            rows: rows.iter().map(|(k, v)| (*k, v.to_vec())).collect(),
            counts: BTreeMap::new(),
        }
    }

    #[test]
    fn census_comparison() {
        let a = table(&[(1, [40.0, 30.0, 20.0, 10.0]), (2, [25.0, 25.0, 25.0, 25.0])]);
        let same = compare_to_census(&a, &a).unwrap();
        assert!(same.rows.iter().all(|r| r.abs_diff == 0.0));
        assert_eq!(same.mean_abs_diff, 0.0);

        let b = table(&[(1, [50.0, 20.0, 20.0, 10.0]), (2, [25.0, 25.0, 25.0, 25.0])]);
        let d = compare_to_census(&a, &b).unwrap();
        assert_eq!(d.rows[0].abs_diff, 10.0);

        let c = table(&[(1, [40.0, 30.0, 20.0, 10.0]), (3, [25.0, 25.0, 25.0, 25.0])]);
        let err = compare_to_census(&a, &c).unwrap_err().to_string();
        assert!(err.contains("[2]") && err.contains("[3]"), "{err}");
    }

    #[test]
    fn census_noise_level_is_recovered() {
        let eps = 0.7;
        let a = table(&[(1, [40.0, 30.0, 20.0, 10.0]), (2, [25.0, 25.0, 25.0, 25.0]), (3, [70.0, 10.0, 10.0, 10.0])]);
        let mut b = a.clone();
        for (i, v) in b.rows.values_mut().flatten().enumerate() {
            *v += if i % 2 == 0 { eps } else { -eps };
        }
        let d = compare_to_census(&a, &b).unwrap();
        assert!((d.mean_abs_diff - eps).abs() < 1e-12);
    }

    #[test]
    fn census_csv_round_trip() {
        let a = table(&[(1, [40.0, 30.0, 20.0, 10.0])]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        a.write_csv(&p).unwrap();
        let back = PercentTable::read_csv(&p, "district", ORIGIN_COLUMNS).unwrap();
        assert_eq!(back.rows, a.rows);
        assert!(PercentTable::read_csv(&p, "sector", AGE_COLUMNS).is_err());
    }

    proptest! {
        #[test]
        fn equal_sum_bound_and_contiguity(
            vals in prop::collection::vec(0.01f64..100.0, 1..120),
            q in 1usize..15,
        ) {
            let q = q.min(vals.len());
            let keyed: Vec<(usize, f64)> = vals.iter().copied().enumerate().collect();
            let s = stratify_equal_sum(&keyed, q).unwrap();
            let total: f64 = vals.iter().sum();
            let vmax = vals.iter().copied().fold(0.0, f64::max);
            let mut sums = vec![0.0; q];
            for (k, v) in &keyed {
                sums[(s[k] - 1) as usize] += v;
            }
            for sum in &sums {
                prop_assert!((sum - total / q as f64).abs() <= vmax + 1e-9);
            }
            let mut order = keyed.clone();
            order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            let labels: Vec<u32> = order.iter().map(|(k, _)| s[k]).collect();
            prop_assert!(labels.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1));
            prop_assert_eq!(*labels.last().unwrap(), q as u32);

            let mut rev = keyed.clone();
            rev.reverse();
            prop_assert_eq!(stratify_equal_sum(&rev, q).unwrap(), s);
        }
    }
}
