//! Match runner: builds the four controllers, wires up per-team
//! communication, plays to the end and records a replay.

use serde::{Deserialize, Serialize};

use crate::agents::{Policy, PolicySpec};
use crate::comm::{inject, make_packet, update_target, TargetTracker};
use crate::engine::{
    new_game, outcome, step, teammate, Action, EventList, GameConfig, GameState, Outcome, OutcomeMode, Team,
    NUM_AGENTS,
};
use crate::error::{Error, Result};
use crate::observation::{observe, suggest_actions, ActionMask, AgentView};
use crate::replay::{hash_hex, Replay, ReplayHeader, StepRecord, REPLAY_VERSION};

/// Per-team communication state for one game.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamComms {
    pub enabled: [bool; 2],
    pub trackers: [TargetTracker; 2],
}

impl TeamComms {
    pub fn new(comm_a: bool, comm_b: bool) -> Self {
        TeamComms { enabled: [comm_a, comm_b], trackers: Default::default() }
    }

    /// Every agent's view for this step, with teammate packets attached
    /// where the team communicates. Updates the target trackers.
    pub fn views(&mut self, state: &GameState) -> Result<[AgentView; NUM_AGENTS]> {
        let mut views: [AgentView; NUM_AGENTS] = std::array::from_fn(|i| observe(state, i, None));
        for (slot, team) in [Team::A, Team::B].into_iter().enumerate() {
            if !self.enabled[slot] {
                continue;
            }
            let [a, b] = team.members();
            self.trackers[slot] = update_target(self.trackers[slot], [&views[a], &views[b]], state.t);
            for me in [a, b] {
                if let Some(pkt) = make_packet(state, teammate(me), &self.trackers[slot]) {
                    let v = std::mem::replace(&mut views[me], observe(state, me, None));
                    views[me] = inject(v, pkt)?;
                }
            }
        }
        Ok(views)
    }
}

/// Mixes a match seed, a spec seed and the agent slot into a policy seed.
pub fn policy_seed(match_seed: u64, spec_seed: u64, agent: usize) -> u64 {
    let mut z = match_seed ^ spec_seed.rotate_left(17) ^ ((agent as u64 + 1) << 56);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub struct StepInfo<'a> {
    pub before: &'a GameState,
    pub views: &'a [AgentView; NUM_AGENTS],
    pub actions: [Action; NUM_AGENTS],
    pub events: &'a EventList,
    pub after: &'a GameState,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub seed: u64,
    pub outcome: Outcome,
    pub steps: u32,
    pub final_hash: u64,
    pub replay: Replay,
}

/// Agent slots 0 and 2 are team A; 1 and 3 are team B.
pub fn seat(team_a: &[PolicySpec; 2], team_b: &[PolicySpec; 2]) -> [PolicySpec; NUM_AGENTS] {
    [team_a[0].clone(), team_b[0].clone(), team_a[1].clone(), team_b[1].clone()]
}

pub fn run_match(
    team_a: &[PolicySpec; 2],
    team_b: &[PolicySpec; 2],
    config: &GameConfig,
    seed: u64,
    comm_a: bool,
    comm_b: bool,
) -> Result<MatchResult> {
    run_match_traced(team_a, team_b, config, seed, comm_a, comm_b, &mut |_| {})
}

pub fn run_match_traced(
    team_a: &[PolicySpec; 2],
    team_b: &[PolicySpec; 2],
    config: &GameConfig,
    seed: u64,
    comm_a: bool,
    comm_b: bool,
    observer: &mut dyn FnMut(&StepInfo),
) -> Result<MatchResult> {
    let wrap = |e: Error| Error::Match { seed, source: Box::new(e) };
    let specs = seat(team_a, team_b);
    let mut policies: Vec<Box<dyn Policy>> = specs
        .iter()
        .enumerate()
        .map(|(i, s)| PolicySpec::new(s.kind.clone(), policy_seed(seed, s.seed, i)).build())
        .collect::<Result<_>>()
        .map_err(wrap)?;
    let mut state = new_game(&config.clone().with_seed(seed)).map_err(wrap)?;
    let initial_hash = state.state_hash();
    let mut comms = TeamComms::new(comm_a, comm_b);
    let mut records = Vec::new();
    let mut result = Outcome::Ongoing;

    while result == Outcome::Ongoing {
        let views = comms.views(&state).map_err(wrap)?;
        let mut actions = [Action::Stop; NUM_AGENTS];
        for i in 0..NUM_AGENTS {
            if state.agents[i].alive {
                let mask = suggest_actions(&state, i);
                actions[i] = policies[i].act(&views[i], &mask);
            }
        }
        let (next, events) = step(&state, actions).map_err(wrap)?;
        result = outcome(&next, &OutcomeMode::AgentMatch);
        observer(&StepInfo { before: &state, views: &views, actions, events: &events, after: &next, outcome: result });
        records.push(StepRecord { t: state.t, actions, chat: Vec::new(), state_hash: hash_hex(next.state_hash()) });
        state = next;
    }

    let header = ReplayHeader {
        version: REPLAY_VERSION,
        game_id: format!("match-{seed:016x}"),
        config: config.clone(),
        seed,
        agent_specs: std::array::from_fn(|i| specs[i].kind.to_string()),
        mode: OutcomeMode::AgentMatch,
        participants: Vec::new(),
        comm: [comm_a, comm_b],
        outcome: result,
        complete: true,
        initial_hash: hash_hex(initial_hash),
    };
    Ok(MatchResult {
        seed,
        outcome: result,
        steps: state.t,
        final_hash: state.state_hash(),
        replay: Replay { header, steps: records },
    })
}

/// Win/tie/loss counts from team A's side.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub matches: usize,
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
    pub mean_steps: f64,
}

impl SeriesSummary {
    pub fn add(&mut self, m: &MatchResult) {
        let n = self.matches as f64;
        self.mean_steps = (self.mean_steps * n + m.steps as f64) / (n + 1.0);
        self.matches += 1;
        match m.outcome {
            Outcome::WinA => self.wins += 1,
            Outcome::WinB => self.losses += 1,
            _ => self.ties += 1,
        }
    }

    fn rate(&self, k: usize) -> f64 {
        if self.matches == 0 {
            0.0
        } else {
            k as f64 / self.matches as f64
        }
    }

    pub fn win_rate(&self) -> f64 {
        self.rate(self.wins)
    }

    pub fn tie_rate(&self) -> f64 {
        self.rate(self.ties)
    }

    pub fn loss_rate(&self) -> f64 {
        self.rate(self.losses)
    }
}

/// Plays `matches` games with seeds `base_seed, base_seed + 1, ...`.
pub fn run_series(
    team_a: &[PolicySpec; 2],
    team_b: &[PolicySpec; 2],
    config: &GameConfig,
    base_seed: u64,
    matches: usize,
    comm: [bool; 2],
) -> Result<(SeriesSummary, Vec<MatchResult>)> {
    let mut summary = SeriesSummary::default();
    let mut results = Vec::with_capacity(matches);
    for k in 0..matches as u64 {
        let r = run_match(team_a, team_b, config, base_seed.wrapping_add(k), comm[0], comm[1])?;
        summary.add(&r);
        results.push(r);
    }
    Ok((summary, results))
}

/// Masks for every living agent.
pub fn all_masks(state: &GameState) -> [ActionMask; NUM_AGENTS] {
    std::array::from_fn(|i| suggest_actions(state, i))
}
