use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rideprobe_app::commands::{cmd_ingest, cmd_plan, cmd_probes, render_table, PlanArgs};
use rideprobe_app::service::{serve, AppState};
use rideprobe_app::{AppConfig, AppError, AppResult};
use rideprobe_core::planner::render_summary;

#[derive(Debug, Parser)]
#[command(
    name = "rideprobe",
    version,
    about = "Rideshare data probes and weekly earnings planner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load every source, classify and enrich trips, and write the store.
    Ingest {
        #[arg(long)]
        config: PathBuf,
    },
    /// Build the probe artifacts from the store.
    Probes {
        #[arg(long)]
        config: PathBuf,
    },
    /// Project weekly earnings for a schedule.
    Plan {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        args: Box<PlanArgs>,
    },
    /// Serve probes and planner simulation over HTTP.
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        bind: Option<IpAddr>,
        /// Required to listen on a non-loopback address.
        #[arg(long)]
        allow_remote: bool,
    },
}

fn run(cli: Cli) -> AppResult<()> {
    match cli.command {
        Command::Ingest { config } => {
            let cfg = AppConfig::load(&config)?;
            let report = cmd_ingest(&cfg)?;
            println!(
                "{} city trips, {} personal trips -> {} (manifest {})",
                report.city_trips,
                report.personal_trips,
                report.store_dir.display(),
                report.manifest_hash
            );
        }
        Command::Probes { config } => {
            let cfg = AppConfig::load(&config)?;
            for path in cmd_probes(&cfg)? {
                println!("{}", path.display());
            }
        }
        Command::Plan { config, args } => {
            let cfg = AppConfig::load(&config)?;
            let input = args.apply(&cfg.planner)?;
            let out = cmd_plan(&cfg, &input)?;
            if args.json {
                let text = serde_json::to_string_pretty(&out)
                    .map_err(|e| AppError::Internal(e.to_string()))?;
                println!("{text}");
            } else {
                print!("{}", render_table(&out, &input));
                println!();
                println!("{}", render_summary(&out, &input));
            }
        }
        Command::Serve {
            config,
            port,
            bind,
            allow_remote,
        } => {
            let cfg = AppConfig::load(&config)?;
            let ip = bind.unwrap_or(cfg.service.bind);
            if !ip.is_loopback() && !(allow_remote || cfg.service.allow_remote) {
                return Err(AppError::Usage(format!(
                    "refusing to bind {ip}: pass --allow-remote to expose personal data beyond this machine"
                )));
            }
            let addr = SocketAddr::new(ip, port.unwrap_or(cfg.service.port));
            let state = AppState::load(&cfg)?;
            let rt =
                tokio::runtime::Runtime::new().map_err(|e| AppError::Internal(e.to_string()))?;
            rt.block_on(serve(state, addr))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
