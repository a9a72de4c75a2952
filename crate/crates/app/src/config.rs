//! The TOML configuration file shared by every subcommand.

use std::fs;
use std::net::{IpAddr, Ipv4Addr};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rideprobe_core::ingest::{validate_timezone, BoundaryOptions, ColumnMap, WeatherColumns};
use rideprobe_core::metrics::{EarningsBasis, MetricOptions, RateMethod};
use rideprobe_core::pipeline::{IngestPlan, SourcePaths};
use rideprobe_core::planner::{PlannerInput, PlannerOptions};
use rideprobe_core::time::{DayStartOffset, YearMonth};

use crate::error::{AppError, AppResult};

pub const DEFAULT_PORT: u16 = 8787;

/// Column maps per source. A section given in the file replaces the preset
/// for that source entirely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Columns {
    pub city: ColumnMap,
    pub personal: ColumnMap,
    pub pings: ColumnMap,
    pub weather: WeatherColumns,
}

impl Default for Columns {
    fn default() -> Self {
        Self {
            city: ColumnMap::chicago_tnp(),
            personal: ColumnMap::personal_export(),
            pings: ColumnMap::personal_pings(),
            weather: WeatherColumns::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerSwitches {
    pub tips_subject_to_cut: bool,
    pub include_deadhead: bool,
}

impl Default for PlannerSwitches {
    fn default() -> Self {
        let d = PlannerOptions::default();
        Self {
            tips_subject_to_cut: d.tips_subject_to_cut,
            include_deadhead: d.include_deadhead,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub port: u16,
    pub bind: IpAddr,
    /// Must be set to listen on anything other than loopback.
    pub allow_remote: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            port: DEFAULT_PORT,
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            allow_remote: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppConfig {
    pub paths: SourcePaths,
    #[serde(default)]
    pub columns: Columns,
    #[serde(default)]
    pub boundaries: BoundaryOptions,
    /// IANA zone applied to every source.
    #[serde(default = "default_timezone")]
    pub timezone: String,
    /// Keep only city trips starting in this month, and show it on the calendar.
    #[serde(default)]
    pub month: Option<YearMonth>,
    #[serde(default)]
    pub day_start_offset: DayStartOffset,
    #[serde(default = "default_shades")]
    pub n_shades: u8,
    #[serde(default = "default_frame_step")]
    pub frame_step_s: u32,
    #[serde(default)]
    pub rate: RateMethod,
    #[serde(default)]
    pub earnings: EarningsBasis,
    #[serde(default)]
    pub planner: PlannerInput,
    #[serde(default)]
    pub planner_options: PlannerSwitches,
    #[serde(default = "default_store_dir")]
    pub store_dir: PathBuf,
    #[serde(default = "default_probe_dir")]
    pub probe_dir: PathBuf,
    #[serde(default)]
    pub service: ServiceConfig,
}

fn default_timezone() -> String {
    "America/Chicago".into()
}

fn default_shades() -> u8 {
    rideprobe_core::metrics::DEFAULT_SHADES
}

fn default_frame_step() -> u32 {
    rideprobe_core::probes::DEFAULT_FRAME_STEP_S
}

fn default_store_dir() -> PathBuf {
    "store".into()
}

fn default_probe_dir() -> PathBuf {
    "probes".into()
}

impl AppConfig {
    /// Parse, resolve relative paths against the file's directory, and
    /// check every setting.
    pub fn load(path: &Path) -> AppResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| AppError::config(path, format!("cannot read: {e}")))?;
        let mut cfg: AppConfig =
            toml::from_str(&text).map_err(|e| AppError::config(path, e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base);
        cfg.check().map_err(|msg| AppError::config(path, msg))?;
        Ok(cfg)
    }

    pub fn resolve(&mut self, base: &Path) {
        let abs = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        abs(&mut self.paths.city_trips);
        abs(&mut self.paths.personal_trips);
        abs(&mut self.paths.boundaries);
        abs(&mut self.paths.weather);
        if let Some(p) = self.paths.pings.as_mut() {
            abs(p);
        }
        abs(&mut self.store_dir);
        abs(&mut self.probe_dir);
    }

    fn check(&self) -> Result<(), String> {
        validate_timezone(&self.timezone).map_err(|e| e.to_string())?;
        if self.n_shades < 2 {
            return Err(format!(
                "n_shades must be at least 2, got {}",
                self.n_shades
            ));
        }
        if self.frame_step_s == 0 {
            return Err("frame_step_s must be positive".into());
        }
        let errs = self.planner.field_errors();
        if !errs.is_empty() {
            let msgs: Vec<String> = errs
                .iter()
                .map(|e| format!("planner.{}: {}", e.field, e.message))
                .collect();
            return Err(msgs.join("; "));
        }
        if !self.service.bind.is_loopback() && !self.service.allow_remote {
            return Err(format!(
                "service.bind = {} is not a loopback address; set service.allow_remote to expose personal data",
                self.service.bind
            ));
        }
        Ok(())
    }

    /// Every configured source file must exist before ingest starts.
    pub fn check_sources(&self) -> AppResult<()> {
        let p = &self.paths;
        let mut all = vec![
            ("city_trips", &p.city_trips),
            ("personal_trips", &p.personal_trips),
            ("boundaries", &p.boundaries),
            ("weather", &p.weather),
        ];
        if let Some(pings) = &p.pings {
            all.push(("pings", pings));
        }
        for (role, path) in all {
            if !path.is_file() {
                return Err(AppError::MissingSource {
                    role: role.into(),
                    path: path.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn ingest_plan(&self) -> IngestPlan {
        let tz = |mut m: ColumnMap| {
            m.timezone = self.timezone.clone();
            m
        };
        IngestPlan {
            paths: self.paths.clone(),
            city_columns: tz(self.columns.city.clone()),
            personal_columns: tz(self.columns.personal.clone()),
            ping_columns: tz(self.columns.pings.clone()),
            weather_columns: WeatherColumns {
                timezone: self.timezone.clone(),
                ..self.columns.weather.clone()
            },
            boundary_options: self.boundaries.clone(),
            timezone: self.timezone.clone(),
            month: self.month,
        }
    }

    pub fn metric_options(&self) -> MetricOptions {
        MetricOptions {
            day_start_offset: self.day_start_offset,
            rate: self.rate,
            earnings: self.earnings,
        }
    }

    pub fn planner_options(&self) -> PlannerOptions {
        PlannerOptions {
            day_start_offset: self.day_start_offset,
            tips_subject_to_cut: self.planner_options.tips_subject_to_cut,
            include_deadhead: self.planner_options.include_deadhead,
        }
    }
}
