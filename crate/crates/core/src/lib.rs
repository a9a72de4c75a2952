//! Rideshare trip analytics: ingest city and personal trip data, classify
//! trips into neighborhoods, compute probe statistics, and project weekly
//! net earnings for a hypothetical work schedule.

pub mod error;
pub mod geo;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod planner;
pub mod probes;
pub mod store;
pub mod time;

pub use error::{Error, Result};
pub use model::{
    LatLon, Neighborhood, NeighborhoodSet, Ping, PingSeries, Source, Trip, WeatherObs,
    WeatherSeries,
};
