//! Weekly earnings simulation from a hypothetical work schedule.
//!
//! The city corpus is filtered down to trips matching the schedule, the
//! subset's average fare and trip duration drive the projected trip count
//! `PT = 60 / ATD · TPC · HPW` and weekly fares `WE = AF · PT`, and an
//! expense model turns that into net profit.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Trip;
use crate::time::{Day, DayStartOffset};

pub const DEFAULT_PLATFORM_CUT: f64 = 0.25;
pub const DEFAULT_TPC: f64 = 0.55;
/// Hourly precipitation at or above this many inches counts as wet.
pub const WET_THRESHOLD_IN: f64 = 0.01;
/// Subsets smaller than this get a low-confidence note in the summary.
pub const LOW_CONFIDENCE_N: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precip {
    #[default]
    Any,
    Dry,
    Wet,
}

impl Precip {
    pub fn matches(self, precip_in: f64) -> bool {
        match self {
            Precip::Any => true,
            Precip::Dry => precip_in < WET_THRESHOLD_IN,
            Precip::Wet => precip_in >= WET_THRESHOLD_IN,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Precip::Any => "any",
            Precip::Dry => "dry",
            Precip::Wet => "wet",
        }
    }
}

impl std::str::FromStr for Precip {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "any" => Ok(Precip::Any),
            "dry" => Ok(Precip::Dry),
            "wet" => Ok(Precip::Wet),
            other => Err(Error::Config(format!(
                "precipitation must be any, dry or wet, got `{other}`"
            ))),
        }
    }
}

/// An expense paid every `every_weeks` weeks, amortized into the weekly cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecurringExpense {
    pub amount: f64,
    pub every_weeks: f64,
}

impl RecurringExpense {
    pub fn weekly(&self) -> f64 {
        self.amount / self.every_weeks
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerInput {
    /// Hours per week.
    pub hpw: f64,
    pub days: BTreeSet<Day>,
    pub hours: BTreeSet<u8>,
    /// Empty means every neighborhood.
    pub pickup_neighborhoods: BTreeSet<String>,
    /// Inclusive `[min, max]` in °F.
    pub temp_range_f: Option<[f64; 2]>,
    pub precip: Precip,
    pub gas_price: f64,
    pub mpg: f64,
    pub insurance_weekly: f64,
    pub misc_weekly: f64,
    pub recurring_expenses: Vec<RecurringExpense>,
    pub platform_cut: f64,
    /// Fraction of working time with a passenger in the car.
    pub tpc: f64,
}

impl Default for PlannerInput {
    fn default() -> Self {
        Self {
            hpw: 40.0,
            days: Day::ALL.into_iter().collect(),
            hours: (0..24).collect(),
            pickup_neighborhoods: BTreeSet::new(),
            temp_range_f: None,
            precip: Precip::Any,
            gas_price: 0.0,
            mpg: 25.0,
            insurance_weekly: 0.0,
            misc_weekly: 0.0,
            recurring_expenses: Vec::new(),
            platform_cut: DEFAULT_PLATFORM_CUT,
            tpc: DEFAULT_TPC,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl PlannerInput {
    pub fn field_errors(&self) -> Vec<FieldError> {
        let mut errs = Vec::new();
        let mut check = |ok: bool, field: &str, msg: &str| {
            if !ok {
                errs.push(FieldError::new(field, msg));
            }
        };
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;

        check(
            self.hpw.is_finite() && self.hpw > 0.0,
            "hpw",
            "must be greater than 0",
        );
        check(!self.days.is_empty(), "days", "select at least one day");
        check(!self.hours.is_empty(), "hours", "select at least one hour");
        check(
            self.hours.iter().all(|h| *h < 24),
            "hours",
            "hours must be between 0 and 23",
        );
        if let Some([lo, hi]) = self.temp_range_f {
            check(
                lo.is_finite() && hi.is_finite(),
                "temp_range_f",
                "must be finite",
            );
            check(lo <= hi, "temp_range_f", "minimum must not exceed maximum");
        }
        check(
            finite_nonneg(self.gas_price),
            "gas_price",
            "must be 0 or more",
        );
        check(
            self.mpg.is_finite() && self.mpg > 0.0,
            "mpg",
            "must be greater than 0",
        );
        check(
            finite_nonneg(self.insurance_weekly),
            "insurance_weekly",
            "must be 0 or more",
        );
        check(
            finite_nonneg(self.misc_weekly),
            "misc_weekly",
            "must be 0 or more",
        );
        for (i, e) in self.recurring_expenses.iter().enumerate() {
            check(
                finite_nonneg(e.amount),
                &format!("recurring_expenses[{i}].amount"),
                "must be 0 or more",
            );
            check(
                e.every_weeks.is_finite() && e.every_weeks > 0.0,
                &format!("recurring_expenses[{i}].every_weeks"),
                "must be greater than 0",
            );
        }
        check(
            self.platform_cut.is_finite() && (0.0..1.0).contains(&self.platform_cut),
            "platform_cut",
            "must be at least 0 and below 1",
        );
        check(
            self.tpc.is_finite() && self.tpc > 0.0 && self.tpc <= 1.0,
            "tpc",
            "must be above 0 and at most 1",
        );
        errs
    }

    pub fn validate(&self) -> Result<()> {
        let errs = self.field_errors();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInput(errs))
        }
    }

    pub fn filters(&self) -> FilterEcho {
        FilterEcho {
            days: self.days.clone(),
            hours: self.hours.clone(),
            pickup_neighborhoods: self.pickup_neighborhoods.clone(),
            temp_range_f: self.temp_range_f,
            precip: self.precip,
        }
    }

    pub fn weekly_fixed_cost(&self) -> f64 {
        self.insurance_weekly
            + self.misc_weekly
            + self
                .recurring_expenses
                .iter()
                .map(RecurringExpense::weekly)
                .sum::<f64>()
    }
}

/// The filter part of a [`PlannerInput`], echoed back when nothing matches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterEcho {
    pub days: BTreeSet<Day>,
    pub hours: BTreeSet<u8>,
    pub pickup_neighborhoods: BTreeSet<String>,
    pub temp_range_f: Option<[f64; 2]>,
    pub precip: Precip,
}

impl fmt::Display for FilterEcho {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let days: Vec<&str> = self.days.iter().map(|d| d.as_str()).collect();
        let hours: Vec<String> = self.hours.iter().map(u8::to_string).collect();
        write!(f, "days={} hours={}", days.join(","), hours.join(","))?;
        if self.pickup_neighborhoods.is_empty() {
            f.write_str(" neighborhoods=all")?;
        } else {
            let n: Vec<&str> = self
                .pickup_neighborhoods
                .iter()
                .map(String::as_str)
                .collect();
            write!(f, " neighborhoods={}", n.join(","))?;
        }
        match self.temp_range_f {
            Some([lo, hi]) => write!(f, " temp={lo}..{hi}F")?,
            None => f.write_str(" temp=any")?,
        }
        write!(f, " precip={}", self.precip.as_str())
    }
}

/// Switches for modelling choices the planner formulas leave open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerOptions {
    pub day_start_offset: DayStartOffset,
    /// Apply the platform cut to tips as well as fares.
    pub tips_subject_to_cut: bool,
    /// Count unpaid (between-trip) miles when costing gas: total miles are
    /// paid miles divided by TPC. When off, only paid miles are costed.
    pub include_deadhead: bool,
}

impl Default for PlannerOptions {
    fn default() -> Self {
        Self {
            day_start_offset: DayStartOffset::MIDNIGHT,
            tips_subject_to_cut: false,
            include_deadhead: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FilteredTrips<'a> {
    pub trips: Vec<&'a Trip>,
    /// Weather bands were requested but no trip carries weather.
    pub weather_filter_ignored: bool,
}

pub fn filter_trips<'a>(
    trips: &'a [Trip],
    input: &PlannerInput,
    offset: DayStartOffset,
) -> FilteredTrips<'a> {
    let wants_weather = input.temp_range_f.is_some() || input.precip != Precip::Any;
    let weather_filter_ignored = wants_weather && !trips.iter().any(|t| t.weather.is_some());
    if weather_filter_ignored {
        log::warn!(
            "corpus has no weather attached; ignoring temperature and precipitation filters"
        );
    }
    let use_weather = wants_weather && !weather_filter_ignored;

    let selected = trips
        .iter()
        .filter(|t| {
            if !input.days.contains(&offset.weekday(t.start_ts)) {
                return false;
            }
            if !input
                .hours
                .contains(&(chrono::Timelike::hour(&t.start_ts) as u8))
            {
                return false;
            }
            if !input.pickup_neighborhoods.is_empty() {
                match &t.pickup_area {
                    Some(a) if input.pickup_neighborhoods.contains(a) => {}
                    _ => return false,
                }
            }
            if use_weather {
                let Some(w) = t.weather else {
                    return false;
                };
                if let Some([lo, hi]) = input.temp_range_f {
                    if w.temp_f < lo || w.temp_f > hi {
                        return false;
                    }
                }
                if !input.precip.matches(w.precip_in) {
                    return false;
                }
            }
            true
        })
        .collect();
    FilteredTrips {
        trips: selected,
        weather_filter_ignored,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsetStats {
    pub n: usize,
    /// Average fare, dollars.
    pub af: f64,
    /// Average trip duration in minutes over trips with positive duration.
    pub atd: f64,
    pub avg_tip: f64,
    pub avg_miles: f64,
}

pub fn subset_stats(subset: &[&Trip], filters: &FilterEcho) -> Result<SubsetStats> {
    if subset.is_empty() {
        return Err(Error::NoMatchingTrips {
            filters: filters.clone(),
        });
    }
    let n = subset.len() as f64;
    let (mut fare, mut tip, mut miles) = (0.0, 0.0, 0.0);
    let (mut minutes, mut timed) = (0.0, 0usize);
    for t in subset {
        fare += t.fare;
        tip += t.tip;
        miles += t.miles;
        if t.duration_s > 0.0 {
            minutes += t.duration_min();
            timed += 1;
        }
    }
    if timed == 0 {
        return Err(Error::InvalidStats(
            "every matching trip has zero duration; average trip duration is undefined".into(),
        ));
    }
    Ok(SubsetStats {
        n: subset.len(),
        af: fare / n,
        atd: minutes / timed as f64,
        avg_tip: tip / n,
        avg_miles: miles / n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub pt: f64,
    pub gross_fares: f64,
    pub tips: f64,
    pub paid_miles: f64,
    pub total_miles: f64,
}

pub fn project(
    stats: &SubsetStats,
    input: &PlannerInput,
    opts: &PlannerOptions,
) -> Result<Projection> {
    if !(stats.atd.is_finite() && stats.atd > 0.0) {
        return Err(Error::InvalidStats(format!(
            "average trip duration must be positive, got {}",
            stats.atd
        )));
    }
    let pt = 60.0 / stats.atd * input.tpc * input.hpw;
    let paid_miles = stats.avg_miles * pt;
    Ok(Projection {
        pt,
        gross_fares: stats.af * pt,
        tips: stats.avg_tip * pt,
        paid_miles,
        total_miles: if opts.include_deadhead {
            paid_miles / input.tpc
        } else {
            paid_miles
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expenses {
    pub gas_cost: f64,
    pub fixed_cost: f64,
    pub driver_fares: f64,
    /// Tips the driver keeps.
    pub tips: f64,
    pub net: f64,
}

pub fn expenses(projection: &Projection, input: &PlannerInput, opts: &PlannerOptions) -> Expenses {
    let keep = 1.0 - input.platform_cut;
    let gas_cost = projection.total_miles / input.mpg * input.gas_price;
    let fixed_cost = input.weekly_fixed_cost();
    let driver_fares = projection.gross_fares * keep;
    let tips = if opts.tips_subject_to_cut {
        projection.tips * keep
    } else {
        projection.tips
    };
    Expenses {
        gas_cost,
        fixed_cost,
        driver_fares,
        tips,
        net: driver_fares + tips - gas_cost - fixed_cost,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerOutput {
    /// Projected trips per week, unrounded.
    pub pt: f64,
    pub gross_fares: f64,
    pub driver_fares: f64,
    pub tips: f64,
    pub paid_miles: f64,
    pub total_miles: f64,
    pub gas_cost: f64,
    pub fixed_cost: f64,
    pub net: f64,
    pub subset: SubsetStats,
    pub weather_filter_ignored: bool,
    pub summary: String,
}

pub fn simulate(
    trips: &[Trip],
    input: &PlannerInput,
    opts: &PlannerOptions,
) -> Result<PlannerOutput> {
    input.validate()?;
    let filtered = filter_trips(trips, input, opts.day_start_offset);
    let stats = subset_stats(&filtered.trips, &input.filters())?;
    let proj = project(&stats, input, opts)?;
    let exp = expenses(&proj, input, opts);
    let mut out = PlannerOutput {
        pt: proj.pt,
        gross_fares: proj.gross_fares,
        driver_fares: exp.driver_fares,
        tips: exp.tips,
        paid_miles: proj.paid_miles,
        total_miles: proj.total_miles,
        gas_cost: exp.gas_cost,
        fixed_cost: exp.fixed_cost,
        net: exp.net,
        subset: stats,
        weather_filter_ignored: filtered.weather_filter_ignored,
        summary: String::new(),
    };
    out.summary = render_summary(&out, input);
    Ok(out)
}

/// Dollars with thousands separators, rounded to cents.
pub fn format_money(v: f64) -> String {
    let cents = (v * 100.0).round() as i64;
    let sign = if cents < 0 { "-" } else { "" };
    let cents = cents.unsigned_abs();
    let dollars = (cents / 100).to_string();
    let mut grouped = String::with_capacity(dollars.len() + dollars.len() / 3);
    for (i, c) in dollars.chars().enumerate() {
        if i > 0 && (dollars.len() - i).is_multiple_of(3) {
            grouped.push(',');
        }
        grouped.push(c);
    }
    format!("{sign}${grouped}.{:02}", cents % 100)
}

fn percent(fraction: f64) -> String {
    format!("{}%", (fraction * 1000.0).round() / 10.0)
}

pub fn render_summary(out: &PlannerOutput, input: &PlannerInput) -> String {
    let s = &out.subset;
    let mut text = format!(
        "Based on {n} matching city trips (average fare {af}, average trip {atd:.1} minutes), \
         driving {hpw} hours a week with a passenger in the car {tpc} of the time projects about \
         {pt} trips. That is {gross} in fares, or {driver} after a {cut} platform cut, plus {tips} \
         in tips. You would drive about {total:.0} miles ({paid:.0} with passengers), costing {gas} \
         in gas; with {fixed} in fixed weekly expenses, projected net profit is {net} per week.",
        n = s.n,
        af = format_money(s.af),
        atd = s.atd,
        hpw = input.hpw,
        tpc = percent(input.tpc),
        pt = out.pt.round() as i64,
        gross = format_money(out.gross_fares),
        driver = format_money(out.driver_fares),
        cut = percent(input.platform_cut),
        tips = format_money(out.tips),
        total = out.total_miles,
        paid = out.paid_miles,
        gas = format_money(out.gas_cost),
        fixed = format_money(out.fixed_cost),
        net = format_money(out.net),
    );
    if s.n < LOW_CONFIDENCE_N {
        text.push_str(&format!(
            " Low confidence: only {} trips match this plan (fewer than {LOW_CONFIDENCE_N}), so treat these figures as rough.",
            s.n
        ));
    }
    if out.weather_filter_ignored {
        text.push_str(" Weather filters were ignored because no weather data is attached.");
    }
    text
}
