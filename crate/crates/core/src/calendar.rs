//! Local-time calendar: day boundaries in a fixed UTC offset, weekends and
//! public holidays.

use std::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DAY: i64 = 86_400;
/// Days from 0001-01-01 (CE day 1) to 1970-01-01.
const EPOCH_CE_DAYS: i64 = 719_163;

/// Whether a day is a working day or a weekend/holiday.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DayType {
    Workday,
    Holiday,
}

impl DayType {
    pub const ALL: [DayType; 2] = [DayType::Workday, DayType::Holiday];

    pub fn as_str(self) -> &'static str {
        match self {
            DayType::Workday => "workday",
            DayType::Holiday => "holiday",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "workday" => Some(DayType::Workday),
            "holiday" => Some(DayType::Holiday),
            _ => None,
        }
    }
}

impl fmt::Display for DayType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Holiday dates plus a fixed offset from UTC. Saturdays and Sundays are
/// always holiday-type days.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HolidayCalendar {
    /// Holidays as local day numbers since 1970-01-01, sorted.
    holidays: Vec<i64>,
    utc_offset_secs: i64,
}

impl Default for HolidayCalendar {
    /// Hungary, April 2017: Good Friday and Easter Monday, UTC+2.
    fn default() -> Self {
        HolidayCalendar::new(
            [
                NaiveDate::from_ymd_opt(2017, 4, 14).unwrap(),
                NaiveDate::from_ymd_opt(2017, 4, 17).unwrap(),
            ],
            2 * 3600,
        )
    }
}

impl HolidayCalendar {
    pub fn new(holidays: impl IntoIterator<Item = NaiveDate>, utc_offset_secs: i64) -> Self {
        let mut days: Vec<i64> = holidays.into_iter().map(date_to_day).collect();
        days.sort_unstable();
        days.dedup();
        HolidayCalendar {
            holidays: days,
            utc_offset_secs,
        }
    }

    /// Parses a comma-separated list of ISO dates.
    pub fn parse_dates(list: &str) -> Result<Vec<NaiveDate>> {
        list.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                NaiveDate::parse_from_str(s, "%Y-%m-%d")
                    .map_err(|_| Error::Config(format!("bad holiday date {s:?}")))
            })
            .collect()
    }

    pub fn holidays(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.holidays.iter().map(|&d| day_to_date(d))
    }

    pub fn utc_offset_secs(&self) -> i64 {
        self.utc_offset_secs
    }

    /// Local day number (days since 1970-01-01 in local time).
    pub fn day_index(&self, ts: i64) -> i64 {
        (ts + self.utc_offset_secs).div_euclid(DAY)
    }

    pub fn seconds_of_day(&self, ts: i64) -> u32 {
        (ts + self.utc_offset_secs).rem_euclid(DAY) as u32
    }

    pub fn hour(&self, ts: i64) -> u32 {
        self.seconds_of_day(ts) / 3600
    }

    /// Monday = 0 … Sunday = 6.
    pub fn weekday_index(&self, day: i64) -> u32 {
        // 1970-01-01 was a Thursday
        (day + 3).rem_euclid(7) as u32
    }

    pub fn date(&self, day: i64) -> NaiveDate {
        day_to_date(day)
    }

    pub fn day_of(&self, date: NaiveDate) -> i64 {
        date_to_day(date)
    }

    /// UTC timestamp of local midnight starting `date`.
    pub fn midnight(&self, date: NaiveDate) -> i64 {
        date_to_day(date) * DAY - self.utc_offset_secs
    }

    pub fn day_type(&self, day: i64) -> DayType {
        if self.weekday_index(day) >= 5 || self.holidays.binary_search(&day).is_ok() {
            DayType::Holiday
        } else {
            DayType::Workday
        }
    }

    pub fn day_type_at(&self, ts: i64) -> DayType {
        self.day_type(self.day_index(ts))
    }
}

fn date_to_day(d: NaiveDate) -> i64 {
    i64::from(d.num_days_from_ce()) - EPOCH_CE_DAYS
}

fn day_to_date(day: i64) -> NaiveDate {
    NaiveDate::from_num_days_from_ce_opt((day + EPOCH_CE_DAYS) as i32).expect("date in range")
}

pub(crate) fn weekday_name(i: u32) -> &'static str {
    ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"][i as usize % 7]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn day_numbers_and_weekdays() {
        let cal = HolidayCalendar::default();
        let day = cal.day_of(d(2017, 4, 11));
        assert_eq!(cal.date(day), d(2017, 4, 11));
        assert_eq!(cal.weekday_index(day), 1, "2017-04-11 was a Tuesday");
        assert_eq!(cal.weekday_index(0), 3);
    }

    #[test]
    fn local_offset_moves_midnight() {
        let cal = HolidayCalendar::default();
        let midnight = cal.midnight(d(2017, 4, 11));
        assert_eq!(cal.seconds_of_day(midnight), 0);
        assert_eq!(cal.date(cal.day_index(midnight)), d(2017, 4, 11));
        assert_eq!(cal.date(cal.day_index(midnight - 1)), d(2017, 4, 10));
        // 22:30 UTC on the 10th is 00:30 local on the 11th
        assert_eq!(cal.hour(midnight + 1800), 0);
    }

    #[test]
    fn day_types() {
        let cal = HolidayCalendar::default();
        assert_eq!(cal.day_type(cal.day_of(d(2017, 4, 11))), DayType::Workday);
        assert_eq!(cal.day_type(cal.day_of(d(2017, 4, 14))), DayType::Holiday);
        assert_eq!(cal.day_type(cal.day_of(d(2017, 4, 15))), DayType::Holiday);
        assert_eq!(cal.day_type(cal.day_of(d(2017, 4, 17))), DayType::Holiday);
        assert_eq!(cal.day_type(cal.day_of(d(2017, 4, 18))), DayType::Workday);
    }

    #[test]
    fn parse_date_list() {
        let v = HolidayCalendar::parse_dates("2017-04-14, 2017-04-17").unwrap();
        assert_eq!(v, vec![d(2017, 4, 14), d(2017, 4, 17)]);
        assert!(HolidayCalendar::parse_dates("2017-13-01").is_err());
        assert!(HolidayCalendar::parse_dates("").unwrap().is_empty());
    }
}
