mod common;

use common::{planner_input, rel_eq, trips};
use proptest::prelude::*;
use rideprobe_core::planner::{
    filter_trips, simulate, PlannerInput, PlannerOptions, PlannerOutput, DEFAULT_PLATFORM_CUT,
    DEFAULT_TPC,
};
use rideprobe_core::time::DayStartOffset;
use rideprobe_core::{Error, Trip};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 256,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn run(trips: &[Trip], input: &PlannerInput) -> Option<PlannerOutput> {
    match simulate(trips, input, &PlannerOptions::default()) {
        Ok(out) => Some(out),
        Err(Error::NoMatchingTrips { .. } | Error::InvalidStats(_)) => None,
        Err(e) => panic!("unexpected error {e}"),
    }
}

#[test]
fn defaults() {
    let input = PlannerInput::default();
    assert_eq!(input.platform_cut, 0.25);
    assert_eq!(input.tpc, 0.55);
    assert_eq!(DEFAULT_PLATFORM_CUT, 0.25);
    assert_eq!(DEFAULT_TPC, 0.55);
    let parsed: PlannerInput = serde_json::from_str(r#"{"hpw": 20}"#).unwrap();
    assert_eq!(parsed.platform_cut, 0.25);
    assert_eq!(parsed.tpc, 0.55);
}

#[test]
fn unknown_fields_are_rejected() {
    assert!(serde_json::from_str::<PlannerInput>(r#"{"hwp": 20}"#).is_err());
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn projection_is_linear_in_hours(trips in trips(300), input in planner_input(), k in 0.1f64..4.0) {
        let Some(a) = run(&trips, &input) else { return Ok(()) };
        let scaled = PlannerInput { hpw: input.hpw * k, ..input.clone() };
        let b = run(&trips, &scaled).unwrap();
        prop_assert!(rel_eq(b.pt, a.pt * k, 1e-9));
        prop_assert!(rel_eq(b.gross_fares, a.gross_fares * k, 1e-9));
        prop_assert!(rel_eq(b.gas_cost, a.gas_cost * k, 1e-9));
        prop_assert!(rel_eq(b.net + b.fixed_cost, (a.net + a.fixed_cost) * k, 1e-9));
    }

    #[test]
    fn widening_filters_never_drops_trips(
        trips in trips(300),
        narrow in planner_input(),
        wide in planner_input(),
    ) {
        let mut wide = wide;
        wide.days.extend(narrow.days.iter().copied());
        wide.hours.extend(narrow.hours.iter().copied());
        wide.pickup_neighborhoods = if narrow.pickup_neighborhoods.is_empty() {
            Default::default()
        } else {
            wide.pickup_neighborhoods.union(&narrow.pickup_neighborhoods).cloned().collect()
        };
        wide.temp_range_f = None;
        wide.precip = Default::default();
        let off = DayStartOffset::MIDNIGHT;
        let n = filter_trips(&trips, &narrow, off).trips;
        let w = filter_trips(&trips, &wide, off).trips;
        prop_assert!(n.len() <= w.len());
        for t in n {
            prop_assert!(w.iter().any(|u| std::ptr::eq(*u, t)));
        }
    }

    #[test]
    fn costs_only_lower_net(
        trips in trips(300),
        input in planner_input(),
        extra_gas in 0.0f64..3.0,
        extra_cut in 0.0f64..0.3,
        extra_fixed in 0.0f64..100.0,
    ) {
        let Some(base) = run(&trips, &input) else { return Ok(()) };
        let dearer = PlannerInput {
            gas_price: input.gas_price + extra_gas,
            platform_cut: input.platform_cut + extra_cut,
            insurance_weekly: input.insurance_weekly + extra_fixed,
            ..input.clone()
        };
        let out = run(&trips, &dearer).unwrap();
        prop_assert!(out.net <= base.net + 1e-9 * base.net.abs().max(1.0));
        prop_assert_eq!(out.pt, base.pt);
    }

    #[test]
    fn without_expenses_net_is_fares_plus_tips(trips in trips(300), input in planner_input()) {
        let free = PlannerInput {
            gas_price: 0.0,
            insurance_weekly: 0.0,
            misc_weekly: 0.0,
            recurring_expenses: vec![],
            platform_cut: 0.0,
            ..input
        };
        let Some(out) = run(&trips, &free) else { return Ok(()) };
        prop_assert_eq!(out.driver_fares, out.gross_fares);
        prop_assert!(rel_eq(out.net, out.gross_fares + out.tips, 1e-12));
        prop_assert_eq!(out.gas_cost, 0.0);
        prop_assert_eq!(out.fixed_cost, 0.0);
    }

    #[test]
    fn outputs_are_finite_and_consistent(trips in trips(300), input in planner_input()) {
        let Some(out) = run(&trips, &input) else { return Ok(()) };
        for v in [out.pt, out.gross_fares, out.driver_fares, out.tips, out.paid_miles, out.total_miles, out.gas_cost, out.net] {
            prop_assert!(v.is_finite());
        }
        prop_assert!(rel_eq(out.pt, 60.0 / out.subset.atd * input.tpc * input.hpw, 1e-12));
        prop_assert!(rel_eq(out.gross_fares, out.subset.af * out.pt, 1e-12));
        prop_assert!(out.total_miles >= out.paid_miles);
        let headline = format!("{} trips", out.pt.round() as i64);
        prop_assert!(out.summary.contains(&headline));
    }
}

#[test]
fn empty_subset_echoes_filters() {
    let input = PlannerInput {
        pickup_neighborhoods: ["nowhere".to_string()].into(),
        ..PlannerInput::default()
    };
    match simulate(&[], &input, &PlannerOptions::default()) {
        Err(Error::NoMatchingTrips { filters }) => {
            assert!(filters.pickup_neighborhoods.contains("nowhere"));
            assert!(filters.to_string().contains("neighborhoods=nowhere"));
        }
        other => panic!("expected no matching trips, got {other:?}"),
    }
}

#[test]
fn invalid_input_lists_fields() {
    let input = PlannerInput {
        tpc: 0.0,
        hpw: -1.0,
        ..PlannerInput::default()
    };
    match simulate(&[], &input, &PlannerOptions::default()) {
        Err(Error::InvalidInput(errs)) => {
            let fields: Vec<&str> = errs.iter().map(|e| e.field.as_str()).collect();
            assert_eq!(fields, vec!["hpw", "tpc"]);
        }
        other => panic!("expected invalid input, got {other:?}"),
    }
}
