//! Driver-defined day boundaries.
//!
//! A day-start offset of `h` hours means a "day" runs from `h:00` to `h:00`
//! the following calendar day. Trips before `h:00` belong to the previous
//! service day (a 03:30 Saturday trip with offset 4 is Friday night work).

use std::fmt;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct DayStartOffset(u8);

impl DayStartOffset {
    pub const MIDNIGHT: DayStartOffset = DayStartOffset(0);

    pub fn new(hours: u8) -> Result<Self> {
        if hours < 24 {
            Ok(Self(hours))
        } else {
            Err(Error::Config(format!(
                "day start offset must be 0-23 hours, got {hours}"
            )))
        }
    }

    pub fn hours(self) -> u8 {
        self.0
    }

    /// Calendar date of the service day containing `ts`.
    pub fn service_date(self, ts: NaiveDateTime) -> NaiveDate {
        (ts - Duration::hours(i64::from(self.0))).date()
    }

    pub fn weekday(self, ts: NaiveDateTime) -> Day {
        Day::from(self.service_date(ts).weekday())
    }

    /// Wall-clock hours in service-day order, starting at the offset hour.
    pub fn hour_order(self) -> impl Iterator<Item = u8> {
        let start = self.0;
        (0..24u8).map(move |i| (start + i) % 24)
    }

    /// Position of a wall-clock hour within the service day.
    pub fn slot(self, ts: NaiveDateTime) -> usize {
        (ts.hour() as usize + 24 - self.0 as usize) % 24
    }

    /// `[start, end)` bounds of the service day labelled `date`.
    pub fn bounds(self, date: NaiveDate) -> (NaiveDateTime, NaiveDateTime) {
        let start = date
            .and_hms_opt(u32::from(self.0), 0, 0)
            .expect("valid hour");
        (start, start + Duration::days(1))
    }
}

impl TryFrom<u8> for DayStartOffset {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        DayStartOffset::new(value)
    }
}

impl From<DayStartOffset> for u8 {
    fn from(value: DayStartOffset) -> Self {
        value.0
    }
}

/// Weekday in canonical Monday-first order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Day {
    Mon,
    Tue,
    Wed,
    Thu,
    Fri,
    Sat,
    Sun,
}

impl Day {
    pub const ALL: [Day; 7] = [
        Day::Mon,
        Day::Tue,
        Day::Wed,
        Day::Thu,
        Day::Fri,
        Day::Sat,
        Day::Sun,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Day::Mon => "mon",
            Day::Tue => "tue",
            Day::Wed => "wed",
            Day::Thu => "thu",
            Day::Fri => "fri",
            Day::Sat => "sat",
            Day::Sun => "sun",
        }
    }

    pub fn parse(s: &str) -> Option<Day> {
        let s = s.trim().to_ascii_lowercase();
        Day::ALL
            .into_iter()
            .find(|d| s == d.as_str() || (s.len() > 3 && full_name(*d).starts_with(&s)))
    }
}

fn full_name(d: Day) -> &'static str {
    match d {
        Day::Mon => "monday",
        Day::Tue => "tuesday",
        Day::Wed => "wednesday",
        Day::Thu => "thursday",
        Day::Fri => "friday",
        Day::Sat => "saturday",
        Day::Sun => "sunday",
    }
}

impl From<chrono::Weekday> for Day {
    fn from(w: chrono::Weekday) -> Self {
        Day::ALL[w.num_days_from_monday() as usize]
    }
}

impl fmt::Display for Day {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Inclusive calendar date interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if end < start {
            return Err(Error::Precondition(format!(
                "date range is empty: {start} > {end}"
            )));
        }
        Ok(Self { start, end })
    }

    /// The whole calendar month containing `year`/`month`.
    pub fn month(year: i32, month: u32) -> Result<Self> {
        let start = NaiveDate::from_ymd_opt(year, month, 1)
            .ok_or_else(|| Error::Config(format!("invalid month {year}-{month:02}")))?;
        let next = if month == 12 {
            NaiveDate::from_ymd_opt(year + 1, 1, 1)
        } else {
            NaiveDate::from_ymd_opt(year, month + 1, 1)
        }
        .expect("valid next month");
        Ok(Self {
            start,
            end: next.pred_opt().expect("valid date"),
        })
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    pub fn days(&self) -> impl Iterator<Item = NaiveDate> {
        let end = self.end;
        self.start.iter_days().take_while(move |d| *d <= end)
    }

    pub fn len_days(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }
}

/// A `YYYY-MM` month selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::Config(format!("invalid month {year}-{month:02}")));
        }
        Ok(Self { year, month })
    }

    pub fn contains(&self, ts: NaiveDateTime) -> bool {
        ts.year() == self.year && ts.month() == self.month
    }

    pub fn range(&self) -> DateRange {
        DateRange::month(self.year, self.month).expect("validated month")
    }
}

impl std::str::FromStr for YearMonth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("expected YYYY-MM, got `{s}`"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        YearMonth::new(y.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?)
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl Serialize for YearMonth {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for YearMonth {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> NaiveDateTime {
        NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M").unwrap()
    }

    #[test]
    fn offset_moves_early_hours_to_previous_day() {
        let off = DayStartOffset::new(4).unwrap();
        // 2022-06-04 is a Saturday
        assert_eq!(off.weekday(ts("2022-06-04 03:30")), Day::Fri);
        assert_eq!(off.weekday(ts("2022-06-04 04:00")), Day::Sat);
        assert_eq!(
            DayStartOffset::MIDNIGHT.weekday(ts("2022-06-04 03:30")),
            Day::Sat
        );
        assert_eq!(off.slot(ts("2022-06-04 03:30")), 23);
        assert_eq!(off.slot(ts("2022-06-04 04:10")), 0);
    }

    #[test]
    fn offset_rejects_24() {
        assert!(DayStartOffset::new(24).is_err());
    }

    #[test]
    fn june_has_thirty_days() {
        let r = DateRange::month(2022, 6).unwrap();
        assert_eq!(r.len_days(), 30);
        assert_eq!(r.days().count(), 30);
    }

    #[test]
    fn day_parsing() {
        assert_eq!(Day::parse("Mon"), Some(Day::Mon));
        assert_eq!(Day::parse("thursday"), Some(Day::Thu));
        assert_eq!(Day::parse("xyz"), None);
    }

    #[test]
    fn year_month_roundtrip() {
        let ym: YearMonth = "2022-06".parse().unwrap();
        assert_eq!(ym.to_string(), "2022-06");
        assert!("2022-13".parse::<YearMonth>().is_err());
    }
}
