use std::fs;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use powwow::agents::PolicyKind;
use powwow::engine::GameConfig;
use powwow::playserver::{serve, ServerConfig, SessionConfig};
use powwow::Result;

#[derive(Parser)]
#[command(name = "playserver", about = "Two humans with chat against scripted agents, over WebSocket at /ws")]
struct Cli {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Game config as JSON; missing fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Policy for the opposing team.
    #[arg(long, default_value = "simple")]
    ai: String,
    /// One transcript per finished or aborted session.
    #[arg(long)]
    record_dir: Option<PathBuf>,
    /// Served at `/` (the browser client build).
    #[arg(long)]
    static_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    no_shared_vision: bool,
    /// Seconds a disconnected player may take to rejoin.
    #[arg(long, default_value_t = 120)]
    grace: u64,
}

#[tokio::main]
async fn run(cli: Cli) -> Result<()> {
    let game: GameConfig = match &cli.config {
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?)?,
        None => GameConfig::default(),
    };
    game.validate()?;
    cli.ai.parse::<PolicyKind>()?;
    if let Some(dir) = &cli.record_dir {
        fs::create_dir_all(dir)?;
    }
    let cfg = ServerConfig {
        session: SessionConfig {
            game,
            ai: cli.ai,
            shared_vision: !cli.no_shared_vision,
            disconnect_grace: std::time::Duration::from_secs(cli.grace),
        },
        record_dir: cli.record_dir,
        static_dir: cli.static_dir,
        seed: cli.seed,
    };
    serve(SocketAddr::from(([0, 0, 0, 0], cli.port)), cfg).await
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
