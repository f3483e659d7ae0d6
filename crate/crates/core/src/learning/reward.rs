//! Per-phase shaped rewards.

use serde::{Deserialize, Serialize};

use crate::engine::{are_enemies, AgentId, DeathCause, Event, Outcome, Team};

/// Curriculum phase: 1 = vs static, 2 = vs random movers, 3 = vs simple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Phase(pub u8);

impl Phase {
    pub const STATIC: Phase = Phase(1);
    pub const RANDOM: Phase = Phase(2);
    pub const SIMPLE: Phase = Phase(3);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardSpec {
    pub wood: f64,
    pub item: f64,
    pub death: f64,
    pub sight: f64,
    pub proximity_per_cell: f64,
    pub kill: f64,
    pub win: f64,
    pub lose: f64,
    pub tie: f64,
}

impl Default for RewardSpec {
    fn default() -> Self {
        RewardSpec {
            wood: 0.1,
            item: 0.2,
            death: -1.0,
            sight: 0.005,
            proximity_per_cell: 0.002,
            kill: 0.5,
            win: 1.0,
            lose: -1.0,
            tie: 0.0,
        }
    }
}

/// Reward for `agent` from one step's events. `outcome` is the match result
/// after the step; terminal rewards apply from phase 2 on.
pub fn shaped_reward(events: &[Event], agent: AgentId, outcome: Outcome, phase: Phase, spec: &RewardSpec) -> f64 {
    let mut r = 0.0;
    let mut sighted = false;
    for ev in events {
        match *ev {
            Event::AgentDied { agent: a, .. } if a == agent => r += spec.death,
            Event::WoodDestroyed { ref by, .. } if phase == Phase::STATIC && by.contains(&agent) => r += spec.wood,
            Event::ItemPicked { agent: a, .. } if phase == Phase::STATIC && a == agent => r += spec.item,
            Event::EnemyInSight { agent: a, .. } if phase != Phase::STATIC && a == agent => sighted = true,
            Event::EnemyCloser { agent: a, cells } if phase != Phase::STATIC && a == agent => {
                r += spec.proximity_per_cell * cells as f64;
            }
            Event::AgentDied { agent: a, cause: DeathCause::Flame } if phase != Phase::STATIC && are_enemies(a, agent) => {
                r += spec.kill;
            }
            _ => {}
        }
    }
    if sighted {
        r += spec.sight;
    }
    if phase != Phase::STATIC {
        r += terminal_reward(outcome, agent, spec);
    }
    r
}

pub fn terminal_reward(outcome: Outcome, agent: AgentId, spec: &RewardSpec) -> f64 {
    match (outcome, Team::of(agent)) {
        (Outcome::WinA, Team::A) | (Outcome::WinB, Team::B) => spec.win,
        (Outcome::WinA, Team::B) | (Outcome::WinB, Team::A) => spec.lose,
        (Outcome::Tie, _) => spec.tie,
        _ => 0.0,
    }
}
