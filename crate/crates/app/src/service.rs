//! Read-only HTTP service over a built store and probe directory.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderName, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{middleware, Json, Router};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use rideprobe_core::planner::{simulate, FieldError, PlannerInput, PlannerOptions};
use rideprobe_core::probes::{
    build_animation_probe, import_probe, latest_ping_date, ping_dates, probe_bytes, ProbeKind,
    PROBE_SCHEMA,
};
use rideprobe_core::store::{self, Manifest, STORE_SCHEMA};
use rideprobe_core::time::DayStartOffset;
use rideprobe_core::{Error, PingSeries, Trip};

use crate::config::AppConfig;
use crate::error::{AppError, AppResult};

pub const SCHEMA_HEADER: &str = "x-probe-schema";

/// Everything the handlers read. Built once at startup, never mutated.
#[derive(Debug)]
pub struct AppState {
    pub city_trips: Vec<Trip>,
    pub personal_trips: Vec<Trip>,
    pub pings: Option<PingSeries>,
    pub manifest: Manifest,
    pub store_hash: String,
    /// Serialized probe files by kind, as found in the probe directory.
    pub probes: BTreeMap<ProbeKind, Vec<u8>>,
    pub planner_options: PlannerOptions,
    pub day_start_offset: DayStartOffset,
    pub frame_step_s: u32,
}

impl AppState {
    pub fn load(cfg: &AppConfig) -> AppResult<Self> {
        let store = store::read_store(&cfg.store_dir)?;
        let store_hash = store::manifest_hash(&cfg.store_dir)?;
        let mut probes = BTreeMap::new();
        for kind in ProbeKind::ALL {
            let path = cfg.probe_dir.join(kind.file_name());
            if !path.exists() {
                log::warn!(
                    "{} not found; /api/probes/{} will answer 404",
                    path.display(),
                    kind.as_str()
                );
                continue;
            }
            let artifact = import_probe(&path)?;
            if artifact.meta.store_hash.as_deref() != Some(store_hash.as_str()) {
                log::warn!(
                    "{} was built from a different store; rerun `probes`",
                    path.display()
                );
            }
            probes.insert(kind, probe_bytes(&artifact)?);
        }
        Ok(Self {
            city_trips: store.city_trips,
            personal_trips: store.personal_trips,
            pings: store.pings,
            manifest: store.manifest,
            store_hash,
            probes,
            planner_options: cfg.planner_options(),
            day_start_offset: cfg.day_start_offset,
            frame_step_s: cfg.frame_step_s,
        })
    }
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    fields: Vec<FieldError>,
    #[serde(skip_serializing_if = "Option::is_none")]
    filters: Option<Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    available: Vec<NaiveDate>,
}

impl ErrorBody {
    fn new(error: impl Into<String>) -> Self {
        Self {
            error: error.into(),
            fields: Vec::new(),
            filters: None,
            available: Vec::new(),
        }
    }
}

fn error(status: StatusCode, body: ErrorBody) -> Response {
    (status, Json(body)).into_response()
}

fn json_bytes(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], bytes).into_response()
}

fn core_error(e: Error) -> Response {
    match e {
        Error::InvalidInput(fields) => error(
            StatusCode::BAD_REQUEST,
            ErrorBody {
                fields,
                ..ErrorBody::new("invalid planner input")
            },
        ),
        Error::NoMatchingTrips { filters } => error(
            StatusCode::UNPROCESSABLE_ENTITY,
            ErrorBody {
                filters: serde_json::to_value(&filters).ok(),
                ..ErrorBody::new(format!("no trips match this plan ({filters})"))
            },
        ),
        Error::InvalidStats(msg) => error(StatusCode::UNPROCESSABLE_ENTITY, ErrorBody::new(msg)),
        Error::EmptyDay { date, available } => error(
            StatusCode::NOT_FOUND,
            ErrorBody {
                available,
                ..ErrorBody::new(format!("no pings on {date}"))
            },
        ),
        other => {
            log::error!("{other}");
            error(
                StatusCode::INTERNAL_SERVER_ERROR,
                ErrorBody::new(other.to_string()),
            )
        }
    }
}

async fn probe(State(state): State<Arc<AppState>>, Path(kind): Path<String>) -> Response {
    let found = ProbeKind::parse(&kind)
        .filter(|k| *k != ProbeKind::Animation)
        .and_then(|k| state.probes.get(&k));
    match found {
        Some(bytes) => json_bytes(bytes.clone()),
        None => error(
            StatusCode::NOT_FOUND,
            ErrorBody::new(format!("no `{kind}` probe available")),
        ),
    }
}

#[derive(Debug, Deserialize)]
struct AnimationQuery {
    date: Option<String>,
}

async fn animation(
    State(state): State<Arc<AppState>>,
    Query(q): Query<AnimationQuery>,
) -> Response {
    let Some(pings) = &state.pings else {
        return error(
            StatusCode::NOT_FOUND,
            ErrorBody::new("the store has no location pings"),
        );
    };
    let offset = state.day_start_offset;
    let date = match q.date.as_deref() {
        Some(s) => match NaiveDate::parse_from_str(s, "%Y-%m-%d") {
            Ok(d) => d,
            Err(_) => {
                return error(
                    StatusCode::BAD_REQUEST,
                    ErrorBody {
                        fields: vec![FieldError::new("date", "expected YYYY-MM-DD")],
                        ..ErrorBody::new(format!("bad date `{s}`"))
                    },
                )
            }
        },
        None => match latest_ping_date(pings, offset) {
            Some(d) => d,
            None => {
                return error(
                    StatusCode::NOT_FOUND,
                    ErrorBody::new("the store has no location pings"),
                )
            }
        },
    };
    let state2 = Arc::clone(&state);
    let built = tokio::task::spawn_blocking(move || {
        let pings = state2.pings.as_ref().expect("checked above");
        build_animation_probe(
            pings,
            &state2.personal_trips,
            date,
            state2.frame_step_s,
            offset,
        )
        .map(|a| a.with_store_hash(state2.store_hash.clone()))
        .and_then(|a| probe_bytes(&a))
    })
    .await;
    match built {
        Ok(Ok(bytes)) => json_bytes(bytes),
        Ok(Err(e)) => core_error(e),
        Err(e) => error(
            StatusCode::INTERNAL_SERVER_ERROR,
            ErrorBody::new(e.to_string()),
        ),
    }
}

async fn meta(State(state): State<Arc<AppState>>) -> Response {
    let m = &state.manifest;
    let dates = state
        .pings
        .as_ref()
        .map(|p| ping_dates(p, state.day_start_offset))
        .unwrap_or_default();
    Json(json!({
        "schema": PROBE_SCHEMA,
        "store_schema": STORE_SCHEMA,
        "store_hash": state.store_hash,
        "timezone": m.timezone,
        "month": m.month,
        "day_start_offset": state.day_start_offset,
        "sources": m.sources,
        "entities": m.entities,
        "enrichment": m.enrichment,
        "probes": state.probes.keys().map(|k| k.as_str()).collect::<Vec<_>>(),
        "ping_dates": dates,
    }))
    .into_response()
}

/// Parse a simulate request body, naming the offending field on failure.
pub fn parse_planner_input(body: &[u8]) -> Result<PlannerInput, FieldError> {
    let mut de = serde_json::Deserializer::from_slice(body);
    let parsed: Result<PlannerInput, _> = serde_path_to_error::deserialize(&mut de);
    let input = parsed.map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." {
            "body".to_string()
        } else {
            path
        };
        FieldError::new(field, e.into_inner().to_string())
    })?;
    de.end()
        .map_err(|e| FieldError::new("body", e.to_string()))?;
    Ok(input)
}

async fn simulate_handler(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let input = match parse_planner_input(&body) {
        Ok(i) => i,
        Err(field) => {
            return error(
                StatusCode::BAD_REQUEST,
                ErrorBody {
                    fields: vec![field],
                    ..ErrorBody::new("malformed planner input")
                },
            )
        }
    };
    let run = tokio::task::spawn_blocking(move || {
        simulate(&state.city_trips, &input, &state.planner_options)
    })
    .await;
    match run {
        Ok(Ok(out)) => Json(out).into_response(),
        Ok(Err(e)) => core_error(e),
        Err(e) => error(
            StatusCode::INTERNAL_SERVER_ERROR,
            ErrorBody::new(e.to_string()),
        ),
    }
}

async fn not_found() -> Response {
    error(StatusCode::NOT_FOUND, ErrorBody::new("no such endpoint"))
}

async fn schema_header(mut res: Response) -> Response {
    res.headers_mut().insert(
        HeaderName::from_static(SCHEMA_HEADER),
        HeaderValue::from_static(PROBE_SCHEMA),
    );
    res
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/meta", get(meta))
        .route("/api/probes/animation", get(animation))
        .route("/api/probes/{kind}", get(probe))
        .route("/api/planner/simulate", post(simulate_handler))
        .fallback(not_found)
        .layer(middleware::map_response(schema_header))
        .with_state(state)
}

pub async fn serve(state: AppState, addr: SocketAddr) -> AppResult<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| AppError::Internal(format!("cannot bind {addr}: {e}")))?;
    log::info!("serving on http://{addr}");
    axum::serve(listener, router(Arc::new(state)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| AppError::Internal(e.to_string()))
}
