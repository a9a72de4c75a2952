//! Descriptive probe statistics over trip collections.
//!
//! All aggregates are built from [`TripAgg`], an associative accumulator, so
//! disjoint partitions can be aggregated independently and merged.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::truncate_to_hour;
use crate::model::{Trip, WeatherObs, WeatherSeries};
use crate::time::{DateRange, Day, DayStartOffset};

pub const DEFAULT_SHADES: u8 = 5;

/// How "fare per minute" is derived from a bucket of trips.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMethod {
    /// Σ fare / Σ minutes over trips with positive duration.
    #[default]
    RatioOfSums,
    /// Mean of per-trip fare/minute over trips with positive duration.
    MeanOfRatios,
}

/// What counts as a day's earnings on the calendar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EarningsBasis {
    #[default]
    FarePlusTip,
    TripTotal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricOptions {
    pub day_start_offset: DayStartOffset,
    pub rate: RateMethod,
    pub earnings: EarningsBasis,
}

impl MetricOptions {
    pub fn with_offset(day_start_offset: DayStartOffset) -> Self {
        Self {
            day_start_offset,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TripAgg {
    pub count: usize,
    pub fare_sum: f64,
    pub tip_sum: f64,
    pub total_sum: f64,
    pub miles_sum: f64,
    pub minutes_sum: f64,
    /// Trips with positive duration, the only ones entering per-minute rates.
    pub timed_count: usize,
    pub timed_fare_sum: f64,
    pub timed_minutes_sum: f64,
    pub ratio_sum: f64,
}

impl TripAgg {
    pub fn add(&mut self, trip: &Trip) {
        let minutes = trip.duration_min();
        self.count += 1;
        self.fare_sum += trip.fare;
        self.tip_sum += trip.tip;
        self.total_sum += trip.total;
        self.miles_sum += trip.miles;
        self.minutes_sum += minutes;
        if trip.duration_s > 0.0 {
            self.timed_count += 1;
            self.timed_fare_sum += trip.fare;
            self.timed_minutes_sum += minutes;
            self.ratio_sum += trip.fare / minutes;
        }
    }

    pub fn merge(&mut self, other: &TripAgg) {
        self.count += other.count;
        self.fare_sum += other.fare_sum;
        self.tip_sum += other.tip_sum;
        self.total_sum += other.total_sum;
        self.miles_sum += other.miles_sum;
        self.minutes_sum += other.minutes_sum;
        self.timed_count += other.timed_count;
        self.timed_fare_sum += other.timed_fare_sum;
        self.timed_minutes_sum += other.timed_minutes_sum;
        self.ratio_sum += other.ratio_sum;
    }

    pub fn of<'a>(trips: impl IntoIterator<Item = &'a Trip>) -> Self {
        let mut agg = TripAgg::default();
        for t in trips {
            agg.add(t);
        }
        agg
    }

    fn mean(&self, sum: f64) -> Option<f64> {
        (self.count > 0).then(|| sum / self.count as f64)
    }

    pub fn avg_fare(&self) -> Option<f64> {
        self.mean(self.fare_sum)
    }

    pub fn avg_duration_min(&self) -> Option<f64> {
        self.mean(self.minutes_sum)
    }

    pub fn avg_miles(&self) -> Option<f64> {
        self.mean(self.miles_sum)
    }

    pub fn fare_per_minute(&self, method: RateMethod) -> Option<f64> {
        if self.timed_count == 0 {
            return None;
        }
        Some(match method {
            RateMethod::RatioOfSums => self.timed_fare_sum / self.timed_minutes_sum,
            RateMethod::MeanOfRatios => self.ratio_sum / self.timed_count as f64,
        })
    }

    pub fn earnings(&self, basis: EarningsBasis) -> f64 {
        match basis {
            EarningsBasis::FarePlusTip => self.fare_sum + self.tip_sum,
            EarningsBasis::TripTotal => self.total_sum,
        }
    }
}

/// Linear binning of `values` into `0..n_shades`. Constant inputs map to the
/// top shade; the maximum always gets `n_shades - 1`.
pub fn shade_scale(values: &[f64], n_shades: u8) -> Result<Vec<u8>> {
    if n_shades < 2 {
        return Err(Error::Precondition(format!(
            "n_shades must be at least 2, got {n_shades}"
        )));
    }
    if values.is_empty() {
        return Err(Error::Precondition(
            "shade_scale needs at least one value".into(),
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition(
            "shade_scale values must be finite".into(),
        ));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let top = n_shades - 1;
    if max == min {
        return Ok(vec![top; values.len()]);
    }
    let span = max - min;
    Ok(values
        .iter()
        .map(|v| {
            let bin = ((v - min) / span * f64::from(n_shades)).floor();
            (bin as u8).min(top)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WeatherAttachment {
    pub matched: usize,
    pub unmatched: usize,
}

/// Attach the weather record for each trip's start hour.
pub fn attach_weather(trips: &mut [Trip], weather: &WeatherSeries) -> WeatherAttachment {
    let mut tally = WeatherAttachment::default();
    for trip in trips.iter_mut() {
        match weather.lookup(truncate_to_hour(trip.start_ts)) {
            Some(rec) => {
                trip.weather = Some(WeatherObs {
                    temp_f: rec.temp_f,
                    precip_in: rec.precip_in,
                });
                tally.matched += 1;
            }
            None => {
                trip.weather = None;
                tally.unmatched += 1;
            }
        }
    }
    if tally.unmatched > 0 {
        log::warn!(
            "{} trips have no weather record for their start hour",
            tally.unmatched
        );
    }
    tally
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlyStat {
    pub hour: u8,
    pub trip_count: usize,
    pub fare_per_minute: Option<f64>,
    pub avg_fare: Option<f64>,
    pub avg_duration_min: Option<f64>,
}

fn hourly_aggs(trips: &[Trip], offset: DayStartOffset) -> [TripAgg; 24] {
    let mut aggs = [TripAgg::default(); 24];
    for trip in trips {
        aggs[offset.slot(trip.start_ts)].add(trip);
    }
    aggs
}

/// 24 buckets in service-day order (the first is the day-start hour), each
/// labelled with its wall-clock hour.
pub fn hourly_stats(trips: &[Trip], opts: &MetricOptions) -> Vec<HourlyStat> {
    let offset = opts.day_start_offset;
    let aggs = hourly_aggs(trips, offset);
    offset
        .hour_order()
        .zip(aggs.iter())
        .map(|(hour, agg)| HourlyStat {
            hour,
            trip_count: agg.count,
            fare_per_minute: agg.fare_per_minute(opts.rate),
            avg_fare: agg.avg_fare(),
            avg_duration_min: agg.avg_duration_min(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayStat {
    pub date: NaiveDate,
    pub trip_count: usize,
    pub total_earnings: f64,
    pub fare_per_minute: Option<f64>,
    pub avg_fare: Option<f64>,
    pub shade: u8,
}

/// One entry per service day in `range` with at least one trip.
pub fn daily_stats(
    trips: &[Trip],
    range: DateRange,
    n_shades: u8,
    opts: &MetricOptions,
) -> Result<BTreeMap<NaiveDate, DayStat>> {
    let mut by_day: BTreeMap<NaiveDate, TripAgg> = BTreeMap::new();
    for trip in trips {
        let date = opts.day_start_offset.service_date(trip.start_ts);
        if range.contains(date) {
            by_day.entry(date).or_default().add(trip);
        }
    }
    if by_day.is_empty() {
        return Ok(BTreeMap::new());
    }
    let earnings: Vec<f64> = by_day.values().map(|a| a.earnings(opts.earnings)).collect();
    let shades = shade_scale(&earnings, n_shades)?;
    Ok(by_day
        .into_iter()
        .zip(earnings.into_iter().zip(shades))
        .map(|((date, agg), (total_earnings, shade))| {
            (
                date,
                DayStat {
                    date,
                    trip_count: agg.count,
                    total_earnings,
                    fare_per_minute: agg.fare_per_minute(opts.rate),
                    avg_fare: agg.avg_fare(),
                    shade,
                },
            )
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeekdayStat {
    pub weekday: Day,
    pub total_trips: usize,
    pub avg_fare: Option<f64>,
    pub avg_duration_min: Option<f64>,
    pub fare_per_minute: Option<f64>,
}

/// Exactly seven entries, Monday first.
pub fn weekday_stats(trips: &[Trip], opts: &MetricOptions) -> Vec<WeekdayStat> {
    let mut aggs = [TripAgg::default(); 7];
    for trip in trips {
        aggs[opts.day_start_offset.weekday(trip.start_ts).index()].add(trip);
    }
    Day::ALL
        .iter()
        .zip(aggs.iter())
        .map(|(&weekday, agg)| WeekdayStat {
            weekday,
            total_trips: agg.count,
            avg_fare: agg.avg_fare(),
            avg_duration_min: agg.avg_duration_min(),
            fare_per_minute: agg.fare_per_minute(opts.rate),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TripEnd {
    Pickup,
    Dropoff,
}

impl TripEnd {
    pub fn area(self, trip: &Trip) -> Option<&str> {
        match self {
            TripEnd::Pickup => trip.pickup_area.as_deref(),
            TripEnd::Dropoff => trip.dropoff_area.as_deref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodStat {
    pub id: String,
    pub trip_count: usize,
    pub fare_per_minute: Option<f64>,
    pub avg_fare: f64,
    pub avg_miles_per_trip: f64,
    /// Absent when no trip in the neighborhood has a positive duration.
    pub shade: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NeighborhoodMap {
    pub entries: BTreeMap<String, NeighborhoodStat>,
    /// Input trips without an area label at the chosen end.
    pub unclassified: usize,
}

impl NeighborhoodMap {
    pub fn total_trips(&self) -> usize {
        self.entries.values().map(|e| e.trip_count).sum()
    }
}

pub fn neighborhood_stats<'a>(
    trips: impl IntoIterator<Item = &'a Trip>,
    end: TripEnd,
    n_shades: u8,
    opts: &MetricOptions,
) -> Result<NeighborhoodMap> {
    let mut aggs: BTreeMap<&str, TripAgg> = BTreeMap::new();
    let mut unclassified = 0;
    for trip in trips {
        match end.area(trip) {
            Some(id) => aggs.entry(id).or_default().add(trip),
            None => unclassified += 1,
        }
    }
    let rates: Vec<Option<f64>> = aggs
        .values()
        .map(|a| a.fare_per_minute(opts.rate))
        .collect();
    let present: Vec<f64> = rates.iter().flatten().copied().collect();
    let mut shades = if present.is_empty() {
        Vec::new()
    } else {
        shade_scale(&present, n_shades)?
    }
    .into_iter();

    let entries = aggs
        .into_iter()
        .zip(rates)
        .map(|((id, agg), rate)| {
            let stat = NeighborhoodStat {
                id: id.to_string(),
                trip_count: agg.count,
                fare_per_minute: rate,
                avg_fare: agg.avg_fare().expect("entry has trips"),
                avg_miles_per_trip: agg.avg_miles().expect("entry has trips"),
                shade: rate.and_then(|_| shades.next()),
            };
            (stat.id.clone(), stat)
        })
        .collect();
    Ok(NeighborhoodMap {
        entries,
        unclassified,
    })
}

/// Drop-off statistics restricted to trips that started in `pickup_id`.
/// An id with no trips yields an empty map.
pub fn linked_dropoff_stats(
    trips: &[Trip],
    pickup_id: &str,
    n_shades: u8,
    opts: &MetricOptions,
) -> Result<NeighborhoodMap> {
    neighborhood_stats(
        trips
            .iter()
            .filter(|t| t.pickup_area.as_deref() == Some(pickup_id)),
        TripEnd::Dropoff,
        n_shades,
        opts,
    )
}

/// Linked drop-off maps for every pickup id present, in one grouping pass.
pub fn all_linked_dropoff_stats(
    trips: &[Trip],
    n_shades: u8,
    opts: &MetricOptions,
) -> Result<BTreeMap<String, NeighborhoodMap>> {
    let mut groups: BTreeMap<&str, Vec<&Trip>> = BTreeMap::new();
    for trip in trips {
        if let Some(p) = trip.pickup_area.as_deref() {
            groups.entry(p).or_default().push(trip);
        }
    }
    groups
        .into_iter()
        .map(|(id, group)| {
            Ok((
                id.to_string(),
                neighborhood_stats(group, TripEnd::Dropoff, n_shades, opts)?,
            ))
        })
        .collect()
}
