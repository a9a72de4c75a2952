//! Command-line pipeline and local HTTP service for the rideshare probes.

pub mod commands;
pub mod config;
pub mod error;
pub mod service;

pub use config::AppConfig;
pub use error::{AppError, AppResult};
