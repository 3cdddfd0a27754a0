//! Home and work location estimation from time-windowed activity counts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::calendar::{DayType, HolidayCalendar};
use crate::ingest::SimKey;
use crate::spatial::{MergedCells, MergedId, Point};

const WORK_START: u32 = 9 * 3600;
const WORK_END: u32 = 16 * 3600;
const NIGHT_START: u32 = 22 * 3600;
const NIGHT_END: u32 = 6 * 3600;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    Work,
    Home,
    Neither,
}

/// Workdays: [09:00, 16:00) is work time, [22:00, 24:00) and [00:00, 06:00)
/// are home time. Weekends and holidays are home time all day. Each record is
/// judged by its own local clock time and day.
pub fn classify_slot(ts: i64, cal: &HolidayCalendar) -> Slot {
    if cal.day_type_at(ts) == DayType::Holiday {
        return Slot::Home;
    }
    let sod = cal.seconds_of_day(ts);
    if (WORK_START..WORK_END).contains(&sod) {
        Slot::Work
    } else if sod >= NIGHT_START || sod < NIGHT_END {
        Slot::Home
    } else {
        Slot::Neither
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnchorEstimate {
    pub sim: SimKey,
    pub home: Option<MergedId>,
    pub work: Option<MergedId>,
    pub home_count: u64,
    pub work_count: u64,
    pub home_work_km: Option<f64>,
}

/// Most frequent key; ties go to the smallest key.
fn argmax(counts: &BTreeMap<MergedId, u64>) -> Option<(MergedId, u64)> {
    let mut best: Option<(MergedId, u64)> = None;
    for (&id, &n) in counts {
        if best.is_none_or(|(_, b)| n > b) {
            best = Some((id, n));
        }
    }
    best
}

/// Estimates one SIM's anchors from its `(timestamp, merged cell)` visits,
/// given in any order.
pub fn estimate_anchors_with(
    sim: SimKey,
    visits: impl IntoIterator<Item = (i64, MergedId)>,
    cal: &HolidayCalendar,
    position: impl Fn(MergedId) -> Point,
) -> AnchorEstimate {
    let mut home: BTreeMap<MergedId, u64> = BTreeMap::new();
    let mut work: BTreeMap<MergedId, u64> = BTreeMap::new();
    for (ts, cell) in visits {
        match classify_slot(ts, cal) {
            Slot::Home => *home.entry(cell).or_insert(0) += 1,
            Slot::Work => *work.entry(cell).or_insert(0) += 1,
            Slot::Neither => {}
        }
    }
    let home = argmax(&home);
    let work = argmax(&work);
    let home_work_km = match (home, work) {
        (Some((h, _)), Some((w, _))) => Some(position(h).dist(position(w)) / 1000.0),
        _ => None,
    };
    AnchorEstimate {
        sim,
        home: home.map(|(id, _)| id),
        work: work.map(|(id, _)| id),
        home_count: home.map_or(0, |(_, n)| n),
        work_count: work.map_or(0, |(_, n)| n),
        home_work_km,
    }
}

pub fn estimate_anchors(
    sim: SimKey,
    visits: impl IntoIterator<Item = (i64, MergedId)>,
    cal: &HolidayCalendar,
    merged: &MergedCells,
) -> AnchorEstimate {
    estimate_anchors_with(sim, visits, cal, |id| merged.get(id).position)
}

#[cfg(test)]
mod tests {
    use chrono::NaiveDate;

    use super::*;

    fn cal() -> HolidayCalendar {
        HolidayCalendar::default()
    }

    fn at(y: i32, m: u32, d: u32, h: u32, min: u32, s: u32) -> i64 {
        cal().midnight(NaiveDate::from_ymd_opt(y, m, d).unwrap()) + i64::from(h * 3600 + min * 60 + s)
    }

    #[test]
    fn slot_examples() {
        let c = cal();
        assert_eq!(classify_slot(at(2017, 4, 11, 10, 30, 0), &c), Slot::Work);
        assert_eq!(classify_slot(at(2017, 4, 11, 23, 10, 0), &c), Slot::Home);
        assert_eq!(classify_slot(at(2017, 4, 14, 11, 0, 0), &c), Slot::Home, "Good Friday");
        assert_eq!(classify_slot(at(2017, 4, 15, 11, 0, 0), &c), Slot::Home, "Saturday");
        assert_eq!(classify_slot(at(2017, 4, 11, 18, 0, 0), &c), Slot::Neither);
    }

    #[test]
    fn window_edges() {
        let c = cal();
        assert_eq!(classify_slot(at(2017, 4, 11, 9, 0, 0), &c), Slot::Work);
        assert_eq!(classify_slot(at(2017, 4, 11, 8, 59, 50), &c), Slot::Neither);
        assert_eq!(classify_slot(at(2017, 4, 11, 15, 59, 50), &c), Slot::Work);
        assert_eq!(classify_slot(at(2017, 4, 11, 16, 0, 0), &c), Slot::Neither);
        assert_eq!(classify_slot(at(2017, 4, 11, 22, 0, 0), &c), Slot::Home);
        assert_eq!(classify_slot(at(2017, 4, 11, 21, 59, 50), &c), Slot::Neither);
        assert_eq!(classify_slot(at(2017, 4, 11, 5, 59, 50), &c), Slot::Home);
        assert_eq!(classify_slot(at(2017, 4, 11, 6, 0, 0), &c), Slot::Neither);
        assert_eq!(classify_slot(at(2017, 4, 11, 1, 0, 0), &c), Slot::Home);
    }

    fn pos(id: MergedId) -> Point {
        Point::new(f64::from(id.0) * 1000.0, 0.0)
    }

    #[test]
    fn home_and_work_by_construction() {
        let (a, b) = (MergedId(1), MergedId(4));
        let mut visits = Vec::new();
        for d in 3..13 {
            for k in 0..3 {
                visits.push((at(2017, 4, d, 23, k * 5, 0), a));
            }
            for k in 0..5 {
                visits.push((at(2017, 4, d, 10, k * 5, 0), b));
            }
        }
        let e = estimate_anchors_with(SimKey(0), visits.clone(), &cal(), pos);
        assert_eq!(e.home, Some(a));
        assert_eq!(e.work, Some(b));
        // 10 days minus the weekend of the 8th-9th; weekend work-hour records count as home
        assert_eq!(e.work_count, 8 * 5);
        assert!((e.home_work_km.unwrap() - 3.0).abs() < 1e-12);

        visits.reverse();
        assert_eq!(estimate_anchors_with(SimKey(0), visits, &cal(), pos), e);
    }

    #[test]
    fn ties_go_to_smallest_id() {
        let visits = vec![
            (at(2017, 4, 11, 23, 0, 0), MergedId(12)),
            (at(2017, 4, 11, 23, 5, 0), MergedId(7)),
        ];
        let e = estimate_anchors_with(SimKey(0), visits, &cal(), pos);
        assert_eq!(e.home, Some(MergedId(7)));
        assert_eq!(e.home.unwrap().to_string(), "m000007");
    }

    #[test]
    fn no_work_records() {
        let visits = vec![(at(2017, 4, 11, 23, 0, 0), MergedId(2))];
        let e = estimate_anchors_with(SimKey(0), visits, &cal(), pos);
        assert_eq!(e.work, None);
        assert_eq!(e.home_work_km, None);
        assert_eq!(e.home_count, 1);
    }
}
