//! JSON-lines replays. The first line is a header; each further line is one
//! step with the joint action, any chat sent during it, and the state hash
//! after it. Human games use the same format and double as transcripts.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{new_game, outcome, step, Action, AgentId, GameConfig, GameState, Outcome, OutcomeMode, NUM_AGENTS};
use crate::error::{Error, Result};

pub const REPLAY_VERSION: u32 = 1;

pub fn hash_hex(h: u64) -> String {
    format!("{h:016x}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatLine {
    pub sender: AgentId,
    pub text: String,
    /// Position of the utterance within the whole dialogue.
    pub order: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayHeader {
    pub version: u32,
    pub game_id: String,
    pub config: GameConfig,
    pub seed: u64,
    pub agent_specs: [String; NUM_AGENTS],
    pub mode: OutcomeMode,
    #[serde(default)]
    pub participants: Vec<String>,
    /// Communication on for team A, team B.
    #[serde(default)]
    pub comm: [bool; 2],
    pub outcome: Outcome,
    /// False when a game was aborted before it finished.
    #[serde(default = "yes")]
    pub complete: bool,
    pub initial_hash: String,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Clock before the step.
    pub t: u32,
    pub actions: [Action; NUM_AGENTS],
    #[serde(default)]
    pub chat: Vec<ChatLine>,
    pub state_hash: String,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Header(ReplayHeader),
    Step(StepRecord),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub header: ReplayHeader,
    pub steps: Vec<StepRecord>,
}

/// A human-game replay read for its dialogue.
pub type Transcript = Replay;

impl Replay {
    pub fn chat(&self) -> impl Iterator<Item = (u32, &ChatLine)> {
        self.steps.iter().flat_map(|s| s.chat.iter().map(move |c| (s.t, c)))
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(&mut w, &Line::Header(self.header.clone()))?;
        w.write_all(b"\n")?;
        for s in &self.steps {
            serde_json::to_writer(&mut w, &Line::Step(s.clone()))?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Replay> {
        let mut header = None;
        let mut steps = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line =
                serde_json::from_str(&line).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
            match parsed {
                Line::Header(h) if header.is_none() && steps.is_empty() => header = Some(h),
                Line::Header(_) => {
                    return Err(Error::Parse { line: i + 1, message: "unexpected second header".into() })
                }
                Line::Step(_) if header.is_none() => {
                    return Err(Error::Parse { line: i + 1, message: "step before header".into() })
                }
                Line::Step(s) => steps.push(s),
            }
        }
        let header = header.ok_or(Error::Parse { line: 1, message: "missing header".into() })?;
        if header.version != REPLAY_VERSION {
            return Err(Error::Parse { line: 1, message: format!("unsupported replay version {}", header.version) });
        }
        Ok(Replay { header, steps })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_jsonl(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Replay> {
        let f = std::fs::File::open(path)?;
        Replay::read_jsonl(std::io::BufReader::new(f))
    }

    fn initial_state(&self) -> Result<GameState> {
        new_game(&self.header.config.clone().with_seed(self.header.seed))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub steps: usize,
    pub outcome: Outcome,
    pub final_state: GameState,
}

/// Re-simulates the replay from its seed and checks every recorded hash
/// and the final outcome.
pub fn verify(replay: &Replay) -> Result<VerifyReport> {
    let mut state = replay.initial_state()?;
    let h0 = hash_hex(state.state_hash());
    if h0 != replay.header.initial_hash {
        return Err(Error::ReplayMismatch { t: 0, expected: replay.header.initial_hash.clone(), actual: h0 });
    }
    for rec in &replay.steps {
        if rec.t != state.t {
            return Err(Error::ReplayMismatch { t: state.t, expected: format!("t = {}", rec.t), actual: format!("t = {}", state.t) });
        }
        let (next, _) = step(&state, rec.actions)?;
        let h = hash_hex(next.state_hash());
        if h != rec.state_hash {
            return Err(Error::ReplayMismatch { t: rec.t, expected: rec.state_hash.clone(), actual: h });
        }
        state = next;
    }
    let got = outcome(&state, &replay.header.mode);
    let recorded = replay.header.outcome;
    let ok = if replay.header.complete { got == recorded } else { true };
    if !ok {
        return Err(Error::ReplayMismatch { t: state.t, expected: format!("{recorded:?}"), actual: format!("{got:?}") });
    }
    Ok(VerifyReport { steps: replay.steps.len(), outcome: got, final_state: state })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Replay {
        let cfg = GameConfig::default();
        let s0 = new_game(&cfg.clone().with_seed(5)).unwrap();
        let actions = [Action::Stop, Action::Down, Action::Stop, Action::Up];
        let (s1, _) = step(&s0, actions).unwrap();
        Replay {
            header: ReplayHeader {
                version: REPLAY_VERSION,
                game_id: "g".into(),
                config: cfg,
                seed: 5,
                agent_specs: std::array::from_fn(|_| "static".into()),
                mode: OutcomeMode::AgentMatch,
                participants: vec![],
                comm: [false, false],
                outcome: Outcome::Ongoing,
                complete: false,
                initial_hash: hash_hex(s0.state_hash()),
            },
            steps: vec![StepRecord {
                t: 0,
                actions,
                chat: vec![ChatLine { sender: 0, text: "go left".into(), order: 0 }],
                state_hash: hash_hex(s1.state_hash()),
            }],
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let r = tiny();
        let mut buf = Vec::new();
        r.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("{\"kind\":\"header\""));
        assert_eq!(Replay::read_jsonl(&buf[..]).unwrap(), r);
        assert_eq!(verify(&r).unwrap().steps, 1);
    }

    #[test]
    fn tampered_hash_is_caught() {
        let mut r = tiny();
        r.steps[0].actions[0] = Action::Right;
        assert!(matches!(verify(&r), Err(Error::ReplayMismatch { t: 0, .. })));
    }

    #[test]
    fn malformed_lines_report_position() {
        let input = b"{\"kind\":\"step\",\"t\":0}\n";
        assert!(matches!(Replay::read_jsonl(&input[..]), Err(Error::Parse { line: 1, .. })));
        let mut buf = Vec::new();
        tiny().write_jsonl(&mut buf).unwrap();
        buf.extend_from_slice(b"not json\n");
        assert!(matches!(Replay::read_jsonl(&buf[..]), Err(Error::Parse { line: 3, .. })));
    }
}
