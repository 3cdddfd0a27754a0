//! Mobility indicators: radius of gyration, k-radius of gyration, location
//! entropy and travel diversity, per day type and per calendar day.
//!
//! Visit weights are record counts. All sums run in merged-id order so that
//! results are reproducible bit for bit.

use std::collections::BTreeMap;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::calendar::{DayType, HolidayCalendar};
use crate::ingest::SimKey;
use crate::spatial::{MergedId, Point};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub id: MergedId,
    pub pos: Point,
    pub count: u64,
}

/// Per-location visit counts, sorted by merged id, every count ≥ 1.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VisitHistogram {
    visits: Vec<Visit>,
}

impl VisitHistogram {
    /// Accepts visits in any order; duplicate ids are summed and zero
    /// counts discarded.
    pub fn new(visits: impl IntoIterator<Item = Visit>) -> Self {
        let mut by_id: BTreeMap<MergedId, Visit> = BTreeMap::new();
        for v in visits {
            by_id
                .entry(v.id)
                .and_modify(|e| e.count += v.count)
                .or_insert(v);
        }
        VisitHistogram {
            visits: by_id.into_values().filter(|v| v.count > 0).collect(),
        }
    }

    pub fn from_cells(cells: impl IntoIterator<Item = MergedId>, position: impl Fn(MergedId) -> Point) -> Self {
        let mut counts: BTreeMap<MergedId, u64> = BTreeMap::new();
        for c in cells {
            *counts.entry(c).or_insert(0) += 1;
        }
        VisitHistogram {
            visits: counts
                .into_iter()
                .map(|(id, count)| Visit {
                    id,
                    pos: position(id),
                    count,
                })
                .collect(),
        }
    }

    pub fn visits(&self) -> &[Visit] {
        &self.visits
    }

    /// Number of distinct locations.
    pub fn len(&self) -> usize {
        self.visits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.visits.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.visits.iter().map(|v| v.count).sum()
    }
}

/// Weighted RMS distance from the weighted center of mass, meters in, km out.
fn gyration<'a>(visits: impl Iterator<Item = &'a Visit> + Clone) -> f64 {
    let mut n = 0u64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for v in visits.clone() {
        n += v.count;
        sx += v.count as f64 * v.pos.x;
        sy += v.count as f64 * v.pos.y;
    }
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let (cx, cy) = (sx / nf, sy / nf);
    let mut s = 0.0;
    for v in visits {
        let (dx, dy) = (v.pos.x - cx, v.pos.y - cy);
        s += v.count as f64 * (dx * dx + dy * dy);
    }
    (s / nf).sqrt() / 1000.0
}

pub fn radius_of_gyration(h: &VisitHistogram) -> f64 {
    gyration(h.visits.iter())
}

/// Radius of gyration over the `k` most visited locations (ties broken by
/// smaller merged id).
pub fn k_radius_of_gyration(h: &VisitHistogram, k: usize) -> f64 {
    assert!(k >= 1, "k must be at least 1");
    if k >= h.visits.len() {
        return gyration(h.visits.iter());
    }
    let mut order: Vec<usize> = (0..h.visits.len()).collect();
    order.sort_by(|&a, &b| {
        h.visits[b]
            .count
            .cmp(&h.visits[a].count)
            .then(h.visits[a].id.cmp(&h.visits[b].id))
    });
    let mut keep = vec![false; h.visits.len()];
    for &i in &order[..k] {
        keep[i] = true;
    }
    gyration(h.visits.iter().enumerate().filter(|(i, _)| keep[*i]).map(|(_, v)| v))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MobilityClass {
    Returner,
    Explorer,
    Undefined,
}

impl MobilityClass {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "returner" => Some(MobilityClass::Returner),
            "explorer" => Some(MobilityClass::Explorer),
            "undefined" => Some(MobilityClass::Undefined),
            _ => None,
        }
    }
}

impl fmt::Display for MobilityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MobilityClass::Returner => "returner",
            MobilityClass::Explorer => "explorer",
            MobilityClass::Undefined => "undefined",
        })
    }
}

/// Returner when `rg_k > rg / 2`, explorer when `rg_k < rg / 2`; equality and
/// `rg = 0` are undefined.
pub fn classify_mobility(rg: f64, rg_k: f64) -> MobilityClass {
    let half = rg / 2.0;
    if rg <= 0.0 || rg_k == half {
        MobilityClass::Undefined
    } else if rg_k > half {
        MobilityClass::Returner
    } else {
        MobilityClass::Explorer
    }
}

/// `-Σ p ln p / ln N` with `N = Σ counts`; zero when `N ≤ 1` or only one
/// class is present.
fn normalized_entropy(counts: impl Iterator<Item = u64> + Clone) -> f64 {
    let n: u64 = counts.clone().sum();
    let classes = counts.clone().filter(|&c| c > 0).count();
    if n <= 1 || classes <= 1 {
        return 0.0;
    }
    let nf = n as f64;
    let mut h = 0.0;
    for c in counts.filter(|&c| c > 0) {
        let p = c as f64 / nf;
        h -= p * p.ln();
    }
    h / nf.ln()
}

pub fn entropy(h: &VisitHistogram) -> f64 {
    normalized_entropy(h.visits.iter().map(|v| v.count))
}

/// Entropy of consecutive `k`-location transitions. Repeated consecutive
/// locations are collapsed first, so transitions are actual moves. In
/// undirected mode each tuple is sorted before counting.
pub fn travel_diversity(seq: &[MergedId], k: usize, directed: bool) -> f64 {
    assert!(k >= 1, "k must be at least 1");
    let mut collapsed: Vec<MergedId> = seq.to_vec();
    collapsed.dedup();
    if collapsed.len() < k {
        return 0.0;
    }
    let mut counts: BTreeMap<Vec<MergedId>, u64> = BTreeMap::new();
    for w in collapsed.windows(k) {
        let mut key = w.to_vec();
        if !directed {
            key.sort_unstable();
        }
        *counts.entry(key).or_insert(0) += 1;
    }
    normalized_entropy(counts.values().copied())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndicatorParams {
    /// Number of top locations for the k-radius.
    pub k: usize,
    /// Tuple length for travel diversity.
    pub travel_k: usize,
    pub directed: bool,
}

impl Default for IndicatorParams {
    fn default() -> Self {
        IndicatorParams {
            k: 2,
            travel_k: 2,
            directed: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MobilityIndicators {
    pub sim: SimKey,
    pub day_type: DayType,
    pub rg_km: f64,
    pub rg_k_km: f64,
    pub entropy: f64,
    pub class: MobilityClass,
    pub location_count: usize,
    pub travel_diversity: f64,
}

/// Indicators of one SIM for each day type it has records on. `visits` must
/// be time ordered (travel diversity depends on the sequence).
pub fn compute_indicators(
    sim: SimKey,
    visits: &[(i64, MergedId)],
    cal: &HolidayCalendar,
    position: impl Fn(MergedId) -> Point,
    params: &IndicatorParams,
) -> Vec<MobilityIndicators> {
    DayType::ALL
        .iter()
        .filter_map(|&day_type| {
            let seq: Vec<MergedId> = visits
                .iter()
                .filter(|(ts, _)| cal.day_type_at(*ts) == day_type)
                .map(|&(_, c)| c)
                .collect();
            if seq.is_empty() {
                return None;
            }
            let h = VisitHistogram::from_cells(seq.iter().copied(), &position);
            let rg = radius_of_gyration(&h);
            let rg_k = k_radius_of_gyration(&h, params.k);
            Some(MobilityIndicators {
                sim,
                day_type,
                rg_km: rg,
                rg_k_km: rg_k,
                entropy: entropy(&h),
                class: classify_mobility(rg, rg_k),
                location_count: h.len(),
                travel_diversity: travel_diversity(&seq, params.travel_k, params.directed),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DailyIndicators {
    pub sim: SimKey,
    pub date: NaiveDate,
    pub day_type: DayType,
    pub rg_km: f64,
    pub entropy: f64,
    pub location_count: usize,
}

/// One row per local calendar day with activity, from that day's records.
pub fn daily_series(
    sim: SimKey,
    visits: &[(i64, MergedId)],
    cal: &HolidayCalendar,
    position: impl Fn(MergedId) -> Point,
) -> Vec<DailyIndicators> {
    let mut by_day: BTreeMap<i64, Vec<MergedId>> = BTreeMap::new();
    for &(ts, c) in visits {
        by_day.entry(cal.day_index(ts)).or_default().push(c);
    }
    by_day
        .into_iter()
        .map(|(day, cells)| {
            let h = VisitHistogram::from_cells(cells, &position);
            DailyIndicators {
                sim,
                date: cal.date(day),
                day_type: cal.day_type(day),
                rg_km: radius_of_gyration(&h),
                entropy: entropy(&h),
                location_count: h.len(),
            }
        })
        .collect()
}
