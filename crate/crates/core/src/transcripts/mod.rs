//! Human-game transcripts: dialogue segmentation, ontology annotations,
//! inter-annotator agreement and corpus analytics.
//!
//! A dialogue is every message teammates exchange during one step.

mod alpha;
mod annotation;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use alpha::{krippendorff_alpha, masi_distance, Distance};
pub use annotation::{read_annotations, AnnotationSet, Category, DialogueKey, Taxonomy};

use crate::engine::{HumanOutcome, Outcome};
use crate::error::{Error, Result};
use crate::replay::{ChatLine, Replay, ReplayHeader, Transcript};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dialogue {
    pub game_id: String,
    pub t: u32,
    pub messages: Vec<ChatLine>,
}

impl Dialogue {
    pub fn key(&self) -> DialogueKey {
        (self.game_id.clone(), self.t)
    }
}

/// One dialogue per step that carries messages, in step order; messages
/// keep their recorded order.
pub fn segment_dialogues(transcript: &Transcript) -> Vec<Dialogue> {
    transcript
        .steps
        .iter()
        .filter(|s| !s.chat.is_empty())
        .map(|s| {
            let mut messages = s.chat.clone();
            messages.sort_by_key(|m| m.order);
            Dialogue { game_id: transcript.header.game_id.clone(), t: s.t, messages }
        })
        .collect()
}

/// Result from the human team's side; humans always play team A.
pub fn game_result(header: &ReplayHeader) -> Option<HumanOutcome> {
    if !header.complete {
        return None;
    }
    match header.outcome {
        Outcome::Human(h) => Some(h),
        Outcome::WinA => Some(HumanOutcome::Win),
        Outcome::WinB => Some(HumanOutcome::Lose),
        Outcome::Tie => Some(HumanOutcome::Tie),
        Outcome::Ongoing => None,
    }
}

pub const OUTCOMES: [HumanOutcome; 3] = [HumanOutcome::Win, HumanOutcome::Tie, HumanOutcome::Lose];

fn outcome_index(o: HumanOutcome) -> usize {
    match o {
        HumanOutcome::Win => 0,
        HumanOutcome::Tie => 1,
        HumanOutcome::Lose => 2,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutcomeStats {
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
    /// Aborted or undecided games, excluded from the rates.
    pub skipped: usize,
    /// False when no game was counted; rates are then reported as 0.
    pub defined: bool,
}

impl OutcomeStats {
    pub fn total(&self) -> usize {
        self.wins + self.ties + self.losses
    }

    fn pct(&self, k: usize) -> f64 {
        if self.defined {
            (k * 100) as f64 / self.total() as f64
        } else {
            0.0
        }
    }

    pub fn win_pct(&self) -> f64 {
        self.pct(self.wins)
    }

    pub fn tie_pct(&self) -> f64 {
        self.pct(self.ties)
    }

    pub fn lose_pct(&self) -> f64 {
        self.pct(self.losses)
    }
}

pub fn outcome_stats(corpus: &[Transcript]) -> OutcomeStats {
    let mut s = OutcomeStats::default();
    for tr in corpus {
        match game_result(&tr.header) {
            Some(HumanOutcome::Win) => s.wins += 1,
            Some(HumanOutcome::Tie) => s.ties += 1,
            Some(HumanOutcome::Lose) => s.losses += 1,
            None => s.skipped += 1,
        }
    }
    s.defined = s.total() > 0;
    s
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub games: usize,
    pub dialogues: usize,
    pub messages: usize,
}

pub fn corpus_stats(corpus: &[Transcript]) -> CorpusStats {
    let mut s = CorpusStats { games: corpus.len(), ..Default::default() };
    for tr in corpus {
        let d = segment_dialogues(tr);
        s.dialogues += d.len();
        s.messages += d.iter().map(|d| d.messages.len()).sum::<usize>();
    }
    s
}

/// Errors if an annotation names a dialogue the corpus does not contain.
pub fn check_annotations(corpus: &[Transcript], sets: &[AnnotationSet]) -> Result<()> {
    let known: BTreeSet<DialogueKey> = corpus.iter().flat_map(segment_dialogues).map(|d| d.key()).collect();
    for set in sets {
        if let Some((g, t)) = set.labels.keys().find(|k| !known.contains(*k)) {
            return Err(Error::Contract(format!("annotator {} labels {g}@{t}, which has no messages", set.annotator)));
        }
    }
    Ok(())
}

pub fn time_bin(t: u32, length: u32, bins: usize) -> usize {
    if length == 0 {
        return 0;
    }
    ((bins as u64 * t as u64 / length as u64) as usize).min(bins - 1)
}

/// Category x time-bin x outcome frequencies. A dialogue with `k` labels
/// adds `1/k` to each, so every (bin, outcome) column sums to its number
/// of labelled dialogues; `counts` keeps the raw label tallies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreqTable {
    pub bins: usize,
    pub categories: Vec<String>,
    /// `mass[category][bin][outcome]`
    pub mass: Vec<Vec<[f64; 3]>>,
    pub counts: Vec<Vec<[u64; 3]>>,
    /// `dialogues[bin][outcome]`
    pub dialogues: Vec<[u64; 3]>,
}

impl FreqTable {
    pub fn column_sum(&self, bin: usize, outcome: HumanOutcome) -> f64 {
        let o = outcome_index(outcome);
        self.mass.iter().map(|c| c[bin][o]).sum()
    }

    pub fn category(&self, id: &str) -> Option<&Vec<[f64; 3]>> {
        self.categories.iter().position(|c| c == id).map(|i| &self.mass[i])
    }

    /// Each (bin, outcome) column rescaled to sum to 1 (empty columns stay 0).
    pub fn normalized(&self) -> Vec<Vec<[f64; 3]>> {
        let mut out = self.mass.clone();
        for b in 0..self.bins {
            for o in 0..3 {
                let n = self.dialogues[b][o] as f64;
                if n > 0.0 {
                    out.iter_mut().for_each(|c| c[b][o] /= n);
                }
            }
        }
        out
    }

    /// Tab-separated: category, outcome, then one column per bin.
    pub fn to_tsv(&self, normalized: bool) -> String {
        let data = if normalized { self.normalized() } else { self.mass.clone() };
        let mut s = String::from("category\toutcome");
        for b in 0..self.bins {
            let _ = write!(s, "\tbin{b}");
        }
        s.push('\n');
        for (ci, cat) in self.categories.iter().enumerate() {
            for (oi, o) in OUTCOMES.iter().enumerate() {
                let _ = write!(s, "{cat}\t{o:?}");
                for b in 0..self.bins {
                    let _ = write!(s, "\t{:.6}", data[ci][b][oi]);
                }
                s.push('\n');
            }
        }
        s
    }
}

/// Frequencies of `labels`' categories over normalised game time. Games
/// without a result and unlabelled dialogues are skipped. With a taxonomy
/// every category gets a row, even if unused.
pub fn freq_over_time(corpus: &[Transcript], labels: &AnnotationSet, bins: usize, taxonomy: Option<&Taxonomy>) -> Result<FreqTable> {
    if bins == 0 {
        return Err(Error::Config("bins must be at least 1".into()));
    }
    let mut cats: BTreeSet<String> = labels.labels.values().flatten().cloned().collect();
    if let Some(tax) = taxonomy {
        cats.extend(tax.categories.iter().map(|c| c.id.clone()));
    }
    let categories: Vec<String> = cats.into_iter().collect();
    let index: BTreeMap<String, usize> = categories.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
    let mut table = FreqTable {
        bins,
        mass: vec![vec![[0.0; 3]; bins]; categories.len()],
        counts: vec![vec![[0; 3]; bins]; categories.len()],
        dialogues: vec![[0; 3]; bins],
        categories,
    };
    for tr in corpus {
        let Some(result) = game_result(&tr.header) else { continue };
        let o = outcome_index(result);
        let length = tr.steps.len() as u32;
        for d in segment_dialogues(tr) {
            let Some(set) = labels.labels.get(&d.key()).filter(|s| !s.is_empty()) else { continue };
            let b = time_bin(d.t, length, bins);
            table.dialogues[b][o] += 1;
            let w = 1.0 / set.len() as f64;
            for l in set {
                let ci = index[l];
                table.mass[ci][b][o] += w;
                table.counts[ci][b][o] += 1;
            }
        }
    }
    Ok(table)
}

/// Loads every `*.jsonl` transcript in `dir`, sorted by file name.
pub fn load_corpus(dir: &Path) -> Result<Vec<Transcript>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    paths.iter().map(|p| Replay::load(p)).collect()
}
