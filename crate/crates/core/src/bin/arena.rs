use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use powwow::agents::{PolicyKind, PolicySpec};
use powwow::arena::run_series;
use powwow::engine::GameConfig;
use powwow::learning::{save_checkpoint, train_curriculum, TrainConfig};
use powwow::replay::{verify, Replay};
use powwow::{Error, Result};

#[derive(Parser)]
#[command(name = "arena", about = "Run seeded match series, verify replays, train agents")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl Switch {
    fn on(self) -> bool {
        matches!(self, Switch::On)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Play `n` matches with seeds seed, seed+1, ...
    Run {
        /// One policy for both seats, or two separated by a comma.
        #[arg(long)]
        team_a: String,
        #[arg(long)]
        team_b: String,
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value = "off")]
        comm_a: Switch,
        #[arg(long, value_enum, default_value = "off")]
        comm_b: Switch,
        /// Game config as JSON; missing fields take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Writes results.json plus one replay per match.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-simulate replays and check every state hash.
    Verify { replays: Vec<PathBuf> },
    /// Run the three-phase curriculum.
    Train {
        /// Training config as JSON; missing fields take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated step budgets for the three phases.
        #[arg(long)]
        phase_steps: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_json<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => Ok(serde_json::from_str(&fs::read_to_string(p)?)?),
        None => Ok(T::default()),
    }
}

fn team(arg: &str, seed_offset: u64) -> Result<[PolicySpec; 2]> {
    let parts: Vec<&str> = arg.split(',').collect();
    let kinds: Vec<PolicyKind> = match parts.as_slice() {
        [one] => vec![one.parse()?, one.parse()?],
        [a, b] => vec![a.parse()?, b.parse()?],
        _ => return Err(Error::Config(format!("team spec `{arg}` needs one or two policies"))),
    };
    Ok([PolicySpec::new(kinds[0].clone(), seed_offset), PolicySpec::new(kinds[1].clone(), seed_offset + 1)])
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Run { team_a, team_b, n, seed, comm_a, comm_b, config, out } => {
            if n == 0 {
                return Err(Error::Config("--n must be at least 1".into()));
            }
            let cfg: GameConfig = read_json(config.as_deref())?;
            cfg.validate()?;
            let (a, b) = (team(&team_a, 0)?, team(&team_b, 2)?);
            let (summary, results) = run_series(&a, &b, &cfg, seed, n, [comm_a.on(), comm_b.on()])?;
            println!("{:<40} {:>5} {:>5} {:>5}", "team_a vs team_b", "win", "tie", "lose");
            println!("{:<40} {:>5} {:>5} {:>5}", format!("{team_a} vs {team_b}"), summary.wins, summary.ties, summary.losses);
            if let Some(dir) = out {
                fs::create_dir_all(dir.join("replays"))?;
                let per_match: Vec<_> = results
                    .iter()
                    .map(|r| serde_json::json!({"seed": r.seed, "outcome": r.outcome, "steps": r.steps}))
                    .collect();
                let doc = serde_json::json!({
                    "team_a": team_a, "team_b": team_b,
                    "comm_a": comm_a.on(), "comm_b": comm_b.on(),
                    "wins": summary.wins, "ties": summary.ties, "losses": summary.losses,
                    "mean_steps": summary.mean_steps, "matches": per_match,
                });
                fs::write(dir.join("results.json"), serde_json::to_string_pretty(&doc)?)?;
                for r in &results {
                    r.replay.save(&dir.join("replays").join(format!("match-{}.jsonl", r.seed)))?;
                }
            }
            Ok(())
        }
        Cmd::Verify { replays } => {
            let mut failed = 0;
            for path in &replays {
                match Replay::load(path).and_then(|r| verify(&r)) {
                    Ok(rep) => println!("ok   {} ({} steps, {:?})", path.display(), rep.steps, rep.outcome),
                    Err(e) => {
                        failed += 1;
                        println!("FAIL {}: {e}", path.display());
                    }
                }
            }
            if failed > 0 {
                return Err(Error::State(format!("{failed} of {} replays failed", replays.len())));
            }
            Ok(())
        }
        Cmd::Train { config, seed, phase_steps, out } => {
            let mut cfg: TrainConfig = read_json(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(list) = phase_steps {
                let v: Vec<u64> = list
                    .split(',')
                    .map(|x| x.trim().parse().map_err(|_| Error::Config(format!("bad step budget `{x}`"))))
                    .collect::<Result<_>>()?;
                cfg.phase_steps = v.try_into().map_err(|_| Error::Config("--phase-steps needs three values".into()))?;
            }
            cfg.game.validate()?;
            fs::create_dir_all(&out)?;
            let mut log = fs::File::create(out.join("metrics.jsonl"))?;
            let mut write_err = None;
            let result = train_curriculum(&cfg, Some(&out), &mut |m| {
                eprintln!("[{} phase {}] step {:>7}  W/T/L {}/{}/{}  return {:.3}", m.arm, m.phase, m.step, m.win, m.tie, m.lose, m.mean_return);
                let line = serde_json::to_string(m).expect("metric serialises");
                if let Err(e) = writeln!(log, "{line}") {
                    write_err.get_or_insert(e);
                }
            })?;
            if let Some(e) = write_err {
                return Err(e.into());
            }
            save_checkpoint(&out.join("vs-random.pwck"), &result.base)?;
            save_checkpoint(&out.join("comm.pwck"), &result.comm)?;
            save_checkpoint(&out.join("no-comm.pwck"), &result.no_comm)?;
            println!("checkpoints written to {}", out.display());
            Ok(())
        }
    }
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
