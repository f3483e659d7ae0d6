use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use powwow::replay::Replay;
use powwow::transcripts::{
    check_annotations, corpus_stats, freq_over_time, krippendorff_alpha, load_corpus, outcome_stats, read_annotations,
    segment_dialogues, AnnotationSet, Distance, Taxonomy,
};
use powwow::{Error, Result};

#[derive(Parser)]
#[command(name = "transcripts", about = "Dialogue statistics and annotation agreement over game transcripts")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistanceArg {
    Nominal,
    Masi,
}

#[derive(Subcommand)]
enum Cmd {
    /// Game, dialogue and message counts plus the outcome split.
    Stats { corpus: PathBuf },
    /// Print the dialogues of one transcript as JSON lines.
    Segment { transcript: PathBuf },
    /// Inter-annotator agreement.
    Alpha {
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        /// Checks that every annotated dialogue exists.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "masi")]
        distance: DistanceArg,
    },
    /// Category frequencies over normalised game time, by outcome, as TSV.
    Freq {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        /// Defaults to the first annotator in the file.
        #[arg(long)]
        annotator: Option<String>,
        #[arg(long, default_value_t = 10)]
        bins: usize,
        #[arg(long)]
        normalized: bool,
    },
}

fn taxonomy(path: Option<&Path>) -> Result<Option<Taxonomy>> {
    path.map(|p| Taxonomy::read_jsonl(BufReader::new(File::open(p)?))).transpose()
}

fn annotations(path: &Path, tax: Option<&Taxonomy>) -> Result<Vec<AnnotationSet>> {
    read_annotations(BufReader::new(File::open(path)?), tax)
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Stats { corpus } => {
            let corpus = load_corpus(&corpus)?;
            let c = corpus_stats(&corpus);
            let o = outcome_stats(&corpus);
            println!("games {}  dialogues {}  messages {}", c.games, c.dialogues, c.messages);
            println!("{:<6} {:>6} {:>8}", "", "count", "rate");
            println!("{:<6} {:>6} {:>7.2}%", "win", o.wins, o.win_pct());
            println!("{:<6} {:>6} {:>7.2}%", "tie", o.ties, o.tie_pct());
            println!("{:<6} {:>6} {:>7.2}%", "lose", o.losses, o.lose_pct());
            if o.skipped > 0 {
                println!("({} incomplete games skipped)", o.skipped);
            }
            if !o.defined {
                println!("(no finished games: rates undefined)");
            }
        }
        Cmd::Segment { transcript } => {
            let tr = Replay::load(&transcript)?;
            for d in segment_dialogues(&tr) {
                println!("{}", serde_json::to_string(&d)?);
            }
        }
        Cmd::Alpha { annotations: path, taxonomy: tax, corpus, distance } => {
            let tax = taxonomy(tax.as_deref())?;
            let sets = annotations(&path, tax.as_ref())?;
            if let Some(dir) = corpus {
                check_annotations(&load_corpus(&dir)?, &sets)?;
            }
            let d = match distance {
                DistanceArg::Nominal => Distance::NominalSingle,
                DistanceArg::Masi => Distance::SetMasi,
            };
            println!("alpha {:.4} ({} annotators)", krippendorff_alpha(&sets, d)?, sets.len());
        }
        Cmd::Freq { corpus, annotations: path, taxonomy: tax, annotator, bins, normalized } => {
            let tax = taxonomy(tax.as_deref())?;
            let corpus = load_corpus(&corpus)?;
            let sets = annotations(&path, tax.as_ref())?;
            check_annotations(&corpus, &sets)?;
            let set = match &annotator {
                Some(name) => sets
                    .iter()
                    .find(|s| &s.annotator == name)
                    .ok_or_else(|| Error::Config(format!("no annotator `{name}`")))?,
                None => sets.first().ok_or_else(|| Error::Config("annotation file is empty".into()))?,
            };
            print!("{}", freq_over_time(&corpus, set, bins, tax.as_ref())?.to_tsv(normalized));
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
            ExitCode::FAILURE
        }
    }
}
