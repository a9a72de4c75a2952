//! The batch subcommands: ingest, probes and plan.

use std::fs;
use std::path::PathBuf;

use chrono::Datelike;
use clap::Args;

use rideprobe_core::planner::{
    format_money, simulate, PlannerInput, PlannerOutput, Precip, RecurringExpense,
};
use rideprobe_core::probes::{
    build_animation_probe, build_calendar_probe, build_hourly_probe, build_map_probe,
    build_planner_defaults_probe, export_probe, latest_ping_date, ProbeArtifact, ProbeKind,
};
use rideprobe_core::store::{self, read_planner_trips, read_store, write_store};
use rideprobe_core::time::{DateRange, Day, YearMonth};
use rideprobe_core::Trip;

use crate::config::AppConfig;
use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport {
    pub store_dir: PathBuf,
    pub manifest_hash: String,
    pub city_trips: usize,
    pub personal_trips: usize,
}

pub fn cmd_ingest(cfg: &AppConfig) -> AppResult<IngestReport> {
    cfg.check_sources()?;
    let store = rideprobe_core::pipeline::build_store(&cfg.ingest_plan())?;
    for s in &store.manifest.sources {
        let d = &s.diagnostics;
        log::info!(
            "{}: {} of {} rows loaded ({} unparseable, {} without location, {} outside month, {} not completed)",
            s.role,
            d.loaded,
            d.raw_rows,
            d.skipped_parse,
            d.skipped_no_location,
            d.excluded_by_month,
            d.excluded_by_status
        );
    }
    let hash = write_store(&cfg.store_dir, &store)?;
    log::info!(
        "store written to {} (manifest {hash})",
        cfg.store_dir.display()
    );
    Ok(IngestReport {
        store_dir: cfg.store_dir.clone(),
        manifest_hash: hash,
        city_trips: store.city_trips.len(),
        personal_trips: store.personal_trips.len(),
    })
}

/// The configured month, else the month of the driver's latest trip.
fn calendar_range(cfg: &AppConfig, personal: &[Trip], city: &[Trip]) -> AppResult<DateRange> {
    if let Some(m) = cfg.month {
        return Ok(m.range());
    }
    let offset = cfg.day_start_offset;
    let latest = personal
        .iter()
        .chain(city)
        .map(|t| offset.service_date(t.start_ts))
        .max()
        .ok_or_else(|| AppError::Usage("store has no trips to place on a calendar".into()))?;
    Ok(YearMonth::new(latest.year(), latest.month())?.range())
}

pub fn build_probes(cfg: &AppConfig, store: &store::Store) -> AppResult<Vec<ProbeArtifact>> {
    let opts = cfg.metric_options();
    let (personal, city) = (&store.personal_trips, &store.city_trips);
    let range = calendar_range(cfg, personal, city)?;
    let mut out = vec![
        build_hourly_probe(personal, city, &opts),
        build_calendar_probe(personal, city, range, cfg.n_shades, &opts)?,
        build_map_probe(personal, city, &store.neighborhoods, cfg.n_shades, &opts)?,
    ];
    match store
        .pings
        .as_ref()
        .and_then(|p| Some((p, latest_ping_date(p, opts.day_start_offset)?)))
    {
        Some((pings, date)) => out.push(build_animation_probe(
            pings,
            personal,
            date,
            cfg.frame_step_s,
            opts.day_start_offset,
        )?),
        None => log::warn!("no location pings in the store; skipping the animation probe"),
    }
    out.push(build_planner_defaults_probe(
        city,
        &store.neighborhoods,
        cfg.planner.clone(),
        cfg.planner_options(),
    ));
    Ok(out)
}

/// Writes one file per probe kind and returns their paths.
pub fn cmd_probes(cfg: &AppConfig) -> AppResult<Vec<PathBuf>> {
    let store = read_store(&cfg.store_dir)?;
    let hash = store::manifest_hash(&cfg.store_dir)?;
    let artifacts = build_probes(cfg, &store)?;
    let dir = &cfg.probe_dir;
    fs::create_dir_all(dir).map_err(|e| AppError::Internal(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for artifact in artifacts {
        let artifact = artifact.with_store_hash(hash.clone());
        let path = dir.join(artifact.kind.file_name());
        export_probe(&artifact, &path)?;
        written.push(path);
    }
    // drop artifacts of kinds not rebuilt, so the listing reflects this run
    for kind in ProbeKind::ALL {
        let path = dir.join(kind.file_name());
        if !written.contains(&path) && path.exists() {
            fs::remove_file(&path)
                .map_err(|e| AppError::Internal(format!("{}: {e}", path.display())))?;
        }
    }
    Ok(written)
}

pub fn cmd_plan(cfg: &AppConfig, input: &PlannerInput) -> AppResult<PlannerOutput> {
    let trips = read_planner_trips(&cfg.store_dir)?;
    Ok(simulate(&trips, input, &cfg.planner_options())?)
}

/// Planner flags. Anything omitted falls back to the config's planner section.
#[derive(Debug, Clone, Default, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub hours_per_week: Option<f64>,
    /// Comma-separated weekdays, e.g. `mon,tue`.
    #[arg(long)]
    pub days: Option<String>,
    /// Comma-separated hours or inclusive ranges, e.g. `8-11,17-19`.
    #[arg(long)]
    pub hours: Option<String>,
    /// Comma-separated pickup neighborhood ids.
    #[arg(long)]
    pub neighborhoods: Option<String>,
    #[arg(long, requires = "temp_max", allow_negative_numbers = true)]
    pub temp_min: Option<f64>,
    #[arg(long, requires = "temp_min", allow_negative_numbers = true)]
    pub temp_max: Option<f64>,
    /// any, dry or wet.
    #[arg(long)]
    pub precip: Option<Precip>,
    #[arg(long)]
    pub gas_price: Option<f64>,
    #[arg(long)]
    pub mpg: Option<f64>,
    /// Weekly insurance cost.
    #[arg(long)]
    pub insurance: Option<f64>,
    /// Other weekly costs.
    #[arg(long)]
    pub misc: Option<f64>,
    /// A recurring cost as `AMOUNT/WEEKS`, e.g. `120/4`. Repeatable.
    #[arg(long)]
    pub maintenance: Vec<String>,
    #[arg(long)]
    pub platform_cut: Option<f64>,
    #[arg(long)]
    pub tpc: Option<f64>,
    /// Print the output document as JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

fn split(list: &str) -> impl Iterator<Item = &str> {
    list.split(',').map(str::trim).filter(|s| !s.is_empty())
}

pub fn parse_days(list: &str) -> AppResult<Vec<Day>> {
    split(list)
        .map(|d| Day::parse(d).ok_or_else(|| AppError::Usage(format!("unknown day `{d}`"))))
        .collect()
}

pub fn parse_hours(list: &str) -> AppResult<Vec<u8>> {
    let hour = |s: &str| -> AppResult<u8> {
        match s.trim().parse::<u8>() {
            Ok(h) if h < 24 => Ok(h),
            _ => Err(AppError::Usage(format!("hour `{s}` is not in 0-23"))),
        }
    };
    let mut hours = Vec::new();
    for part in split(list) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (hour(a)?, hour(b)?);
                if a > b {
                    return Err(AppError::Usage(format!(
                        "hour range `{part}` runs backwards"
                    )));
                }
                hours.extend(a..=b);
            }
            None => hours.push(hour(part)?),
        }
    }
    Ok(hours)
}

fn parse_recurring(s: &str) -> AppResult<RecurringExpense> {
    let bad = || AppError::Usage(format!("maintenance `{s}` is not AMOUNT/WEEKS"));
    let (amount, weeks) = s.split_once('/').ok_or_else(bad)?;
    Ok(RecurringExpense {
        amount: amount.trim().parse().map_err(|_| bad())?,
        every_weeks: weeks.trim().parse().map_err(|_| bad())?,
    })
}

impl PlanArgs {
    pub fn apply(&self, base: &PlannerInput) -> AppResult<PlannerInput> {
        let mut input = base.clone();
        if let Some(v) = self.hours_per_week {
            input.hpw = v;
        }
        if let Some(d) = &self.days {
            input.days = parse_days(d)?.into_iter().collect();
        }
        if let Some(h) = &self.hours {
            input.hours = parse_hours(h)?.into_iter().collect();
        }
        if let Some(n) = &self.neighborhoods {
            input.pickup_neighborhoods = split(n).map(String::from).collect();
        }
        if let (Some(lo), Some(hi)) = (self.temp_min, self.temp_max) {
            input.temp_range_f = Some([lo, hi]);
        }
        if let Some(p) = self.precip {
            input.precip = p;
        }
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut input.gas_price, self.gas_price);
        set(&mut input.mpg, self.mpg);
        set(&mut input.insurance_weekly, self.insurance);
        set(&mut input.misc_weekly, self.misc);
        set(&mut input.platform_cut, self.platform_cut);
        set(&mut input.tpc, self.tpc);
        if !self.maintenance.is_empty() {
            input.recurring_expenses = self
                .maintenance
                .iter()
                .map(|s| parse_recurring(s))
                .collect::<AppResult<_>>()?;
        }
        Ok(input)
    }
}

fn percent(f: f64) -> String {
    format!("{}%", (f * 1000.0).round() / 10.0)
}

pub fn render_table(out: &PlannerOutput, input: &PlannerInput) -> String {
    let neg = |v: f64| format_money(-v);
    let rows = [
        ("Matching trips", out.subset.n.to_string()),
        ("Average fare", format_money(out.subset.af)),
        ("Average trip (min)", format!("{:.1}", out.subset.atd)),
        ("Projected trips", format!("{:.1}", out.pt)),
        ("Gross fares", format_money(out.gross_fares)),
        (
            "Platform cut",
            format!(
                "{} ({})",
                neg(out.gross_fares - out.driver_fares),
                percent(input.platform_cut)
            ),
        ),
        ("Driver fares", format_money(out.driver_fares)),
        ("Tips", format_money(out.tips)),
        ("Paid miles", format!("{:.1}", out.paid_miles)),
        ("Total miles", format!("{:.1}", out.total_miles)),
        ("Gas", neg(out.gas_cost)),
        ("Fixed expenses", neg(out.fixed_cost)),
        ("Net profit", format_money(out.net)),
    ];
    let label_w = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
    let value_w = rows.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    let mut text = String::new();
    for (label, value) in rows {
        text.push_str(&format!("{label:<label_w$}  {value:>value_w$}\n"));
    }
    text
}
