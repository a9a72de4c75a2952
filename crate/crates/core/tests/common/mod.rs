#![allow(dead_code)]

use chrono::{Duration, NaiveDate, NaiveDateTime};
use proptest::prelude::*;
use rideprobe_core::{Source, Trip, WeatherObs};

pub const AREAS: [&str; 5] = ["austin", "hyde_park", "loop", "pilsen", "uptown"];

pub fn base() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2022, 6, 1)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap()
}

fn area() -> impl Strategy<Value = Option<String>> {
    prop_oneof![
        1 => Just(None),
        4 => prop::sample::select(&AREAS[..]).prop_map(|s| Some(s.to_string())),
    ]
}

prop_compose! {
    pub fn trip()(
        minute in 0i64..(30 * 24 * 60),
        // one in ten trips has zero duration
        duration_s in prop_oneof![1 => Just(0.0), 9 => 30.0f64..5400.0],
        fare in 0.0f64..90.0,
        tip in prop_oneof![Just(0.0), 0.0f64..20.0],
        miles in 0.0f64..40.0,
        pickup_area in area(),
        dropoff_area in area(),
        weather in prop::option::of((0.0f64..100.0, prop_oneof![Just(0.0), 0.0f64..0.5])),
    ) -> Trip {
        let start_ts = base() + Duration::minutes(minute);
        Trip {
            trip_id: format!("t{minute}"),
            start_ts,
            end_ts: start_ts + Duration::seconds(duration_s as i64),
            duration_s,
            miles,
            fare,
            tip,
            additional_charges: 0.0,
            total: fare + tip,
            pickup_point: None,
            dropoff_point: None,
            pickup_area,
            dropoff_area,
            source: Source::City,
            shared: false,
            weather: weather.map(|(temp_f, precip_in)| WeatherObs { temp_f, precip_in }),
        }
    }
}

pub fn trips(max: usize) -> impl Strategy<Value = Vec<Trip>> {
    prop::collection::vec(trip(), 0..max)
}

pub fn rel_eq(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300) || a == b
}

use rideprobe_core::planner::{PlannerInput, Precip, RecurringExpense};
use rideprobe_core::time::Day;

prop_compose! {
    pub fn planner_input()(
        hpw in 1.0f64..80.0,
        days in prop::sample::subsequence(Day::ALL.to_vec(), 1..=7),
        hours in prop::sample::subsequence((0u8..24).collect::<Vec<_>>(), 1..=24),
        hoods in prop::sample::subsequence(AREAS.to_vec(), 0..=3),
        temp in prop::option::of((0.0f64..60.0, 0.0f64..60.0)),
        precip in prop::sample::select(vec![Precip::Any, Precip::Dry, Precip::Wet]),
        gas_price in 0.0f64..7.0,
        mpg in 10.0f64..60.0,
        insurance_weekly in 0.0f64..150.0,
        misc_weekly in 0.0f64..50.0,
        recurring in prop::collection::vec((0.0f64..500.0, 1.0f64..52.0), 0..3),
        platform_cut in 0.0f64..0.6,
        tpc in 0.05f64..=1.0,
    ) -> PlannerInput {
        PlannerInput {
            hpw,
            days: days.into_iter().collect(),
            hours: hours.into_iter().collect(),
            pickup_neighborhoods: hoods.into_iter().map(String::from).collect(),
            temp_range_f: temp.map(|(lo, w)| [lo, lo + w]),
            precip,
            gas_price,
            mpg,
            insurance_weekly,
            misc_weekly,
            recurring_expenses: recurring
                .into_iter()
                .map(|(amount, every_weeks)| RecurringExpense { amount, every_weeks })
                .collect(),
            platform_cut,
            tpc,
        }
    }
}
