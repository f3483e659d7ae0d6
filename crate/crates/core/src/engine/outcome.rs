use serde::{Deserialize, Serialize};

use super::types::{GameState, Team, NUM_AGENTS};

/// Result of a human-vs-AI session, judged from the human team's side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HumanOutcome {
    Win,
    Tie,
    Lose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Ongoing,
    WinA,
    WinB,
    Tie,
    Human(HumanOutcome),
}

impl Outcome {
    pub fn is_terminal(self) -> bool {
        self != Outcome::Ongoing
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutcomeMode {
    /// Ordinary 2v2: a team wins once every opponent is dead.
    AgentMatch,
    /// Human data-collection rules; `humans[i]` marks agent `i` as human.
    Human { humans: [bool; NUM_AGENTS] },
}

pub fn outcome(state: &GameState, mode: &OutcomeMode) -> Outcome {
    let alive = |team: Team| team.members().iter().filter(|&&i| state.agents[i].alive).count();
    match mode {
        OutcomeMode::AgentMatch => {
            let (a, b) = (alive(Team::A), alive(Team::B));
            match (a, b) {
                (0, 0) => Outcome::Tie,
                (0, _) => Outcome::WinB,
                (_, 0) => Outcome::WinA,
                _ if state.t >= state.config.max_steps => Outcome::Tie,
                _ => Outcome::Ongoing,
            }
        }
        OutcomeMode::Human { humans } => {
            let (mut humans_alive, mut humans_total, mut ai_alive, mut ai_total) = (0, 0, 0, 0);
            for (i, &is_human) in humans.iter().enumerate() {
                let up = state.agents[i].alive as usize;
                if is_human {
                    humans_total += 1;
                    humans_alive += up;
                } else {
                    ai_total += 1;
                    ai_alive += up;
                }
            }
            let terminated = humans_alive < humans_total || ai_alive == 0 || state.t >= state.config.max_steps;
            if !terminated {
                return Outcome::Ongoing;
            }
            let result = if humans_alive == 0 && ai_alive == 0 {
                HumanOutcome::Tie
            } else if ai_alive == 0 {
                HumanOutcome::Win
            } else if ai_alive < ai_total {
                HumanOutcome::Tie
            } else {
                HumanOutcome::Lose
            };
            Outcome::Human(result)
        }
    }
}
