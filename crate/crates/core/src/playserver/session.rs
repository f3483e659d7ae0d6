//! Transport-independent session logic. Humans play team A (agents 0 and
//! 2) against two scripted agents. A step runs once every living human has
//! latched an action; chat is accepted until the sender latches.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::protocol::{BombInfo, ClientView, ServerMsg, PROTOCOL_VERSION};
use crate::agents::{Policy, PolicyKind, PolicySpec};
use crate::arena::policy_seed;
use crate::engine::{
    blast_cells, new_game, outcome, step, teammate, Action, AgentId, GameConfig, GameState, Outcome, OutcomeMode,
    Team, NUM_AGENTS,
};
use crate::error::{Error, Result};
use crate::observation::{observe, suggest_actions};
use crate::replay::{hash_hex, ChatLine, Replay, ReplayHeader, StepRecord, REPLAY_VERSION};

pub type ClientId = u64;

pub const HUMAN_SEATS: [AgentId; 2] = [0, 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub game: GameConfig,
    pub ai: String,
    /// Show each human the union of both teammates' views.
    pub shared_vision: bool,
    #[serde(with = "secs")]
    pub disconnect_grace: Duration,
}

mod secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_secs())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_secs)
    }
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            game: GameConfig::default(),
            ai: "simple".into(),
            shared_vision: true,
            disconnect_grace: Duration::from_secs(120),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionPhase {
    Waiting,
    Playing,
    Finished,
    Aborted,
}

#[derive(Debug, Clone)]
struct Seat {
    client: ClientId,
    name: String,
    disconnected_at: Option<Instant>,
}

pub type Outbox = Vec<(ClientId, ServerMsg)>;

pub struct Session {
    pub id: String,
    cfg: SessionConfig,
    seed: u64,
    state: GameState,
    initial_hash: u64,
    seats: [Option<Seat>; 2],
    ai: Vec<(AgentId, Box<dyn Policy>)>,
    ai_kind: PolicyKind,
    latched: [Option<Action>; NUM_AGENTS],
    step_chat: Vec<ChatLine>,
    next_order: u32,
    records: Vec<StepRecord>,
    phase: SessionPhase,
    result: Outcome,
}

fn mode() -> OutcomeMode {
    OutcomeMode::Human { humans: [true, false, true, false] }
}

impl Session {
    pub fn new(id: impl Into<String>, cfg: SessionConfig, seed: u64) -> Result<Session> {
        let ai_kind: PolicyKind = cfg.ai.parse()?;
        let state = new_game(&cfg.game.clone().with_seed(seed))?;
        let ai = Team::B
            .members()
            .into_iter()
            .map(|i| Ok((i, PolicySpec::new(ai_kind.clone(), policy_seed(seed, 0, i)).build()?)))
            .collect::<Result<_>>()?;
        Ok(Session {
            id: id.into(),
            cfg,
            seed,
            initial_hash: state.state_hash(),
            state,
            seats: [None, None],
            ai,
            ai_kind,
            latched: [None; NUM_AGENTS],
            step_chat: Vec::new(),
            next_order: 0,
            records: Vec::new(),
            phase: SessionPhase::Waiting,
            result: Outcome::Ongoing,
        })
    }

    pub fn phase(&self) -> SessionPhase {
        self.phase
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn clients(&self) -> impl Iterator<Item = ClientId> + '_ {
        self.seats.iter().flatten().map(|s| s.client)
    }

    fn seat_of(&self, client: ClientId) -> Option<(usize, &Seat)> {
        self.seats.iter().enumerate().find_map(|(i, s)| s.as_ref().filter(|s| s.client == client).map(|s| (i, s)))
    }

    fn agent_of(&self, client: ClientId) -> Result<AgentId> {
        self.seat_of(client)
            .map(|(i, _)| HUMAN_SEATS[i])
            .ok_or_else(|| Error::Protocol(format!("client {client} has not joined session {}", self.id)))
    }

    /// Takes a free seat, or reclaims a disconnected seat with the same name.
    pub fn join(&mut self, client: ClientId, name: &str) -> Result<Outbox> {
        if matches!(self.phase, SessionPhase::Finished | SessionPhase::Aborted) {
            return Err(Error::Protocol("session is over".into()));
        }
        if name.trim().is_empty() {
            return Err(Error::Protocol("name must not be empty".into()));
        }
        if self.seat_of(client).is_some() {
            return Err(Error::Protocol("already joined".into()));
        }
        let slot = match self.seats.iter().position(|s| s.as_ref().is_some_and(|s| s.disconnected_at.is_some() && s.name == name)) {
            Some(i) => i,
            None => self
                .seats
                .iter()
                .position(Option::is_none)
                .ok_or_else(|| Error::Protocol("session already has two players".into()))?,
        };
        self.seats[slot] = Some(Seat { client, name: name.to_string(), disconnected_at: None });
        let agent = HUMAN_SEATS[slot];
        let mut out = vec![(
            client,
            ServerMsg::Joined { v: PROTOCOL_VERSION, session: self.id.clone(), agent, teammate: teammate(agent) },
        )];
        if self.phase == SessionPhase::Waiting && self.seats.iter().all(Option::is_some) {
            self.phase = SessionPhase::Playing;
            out.extend(self.broadcast_states());
        } else if self.phase == SessionPhase::Playing {
            out.push((client, self.state_msg(agent)));
        }
        Ok(out)
    }

    fn bombs(&self) -> Vec<BombInfo> {
        self.state
            .bombs
            .iter()
            .map(|b| BombInfo { pos: b.pos, life: b.life, blast: b.blast, reach: blast_cells(&self.state, b).into_iter().collect() })
            .collect()
    }

    pub fn client_view(&self, agent: AgentId) -> ClientView {
        let own = observe(&self.state, agent, None);
        let mate = self.cfg.shared_vision.then(|| observe(&self.state, teammate(agent), None));
        ClientView::from_views(&own, mate.as_ref(), self.bombs())
    }

    fn state_msg(&self, agent: AgentId) -> ServerMsg {
        ServerMsg::State { v: PROTOCOL_VERSION, t: self.state.t, view: Box::new(self.client_view(agent)) }
    }

    fn broadcast_states(&self) -> Outbox {
        self.seats
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_ref().map(|s| (s.client, self.state_msg(HUMAN_SEATS[i]))))
            .collect()
    }

    fn to_all(&self, msg: ServerMsg) -> Outbox {
        self.clients().map(|c| (c, msg.clone())).collect()
    }

    fn require_playing(&self) -> Result<()> {
        if self.phase != SessionPhase::Playing {
            return Err(Error::Protocol(format!("session is {:?}", self.phase).to_lowercase()));
        }
        Ok(())
    }

    fn require_connected(&self, client: ClientId) -> Result<()> {
        match self.seat_of(client) {
            Some((_, s)) if s.disconnected_at.is_none() => Ok(()),
            Some(_) => Err(Error::Protocol("client is disconnected".into())),
            None => Err(Error::Protocol(format!("client {client} has not joined"))),
        }
    }

    pub fn chat(&mut self, client: ClientId, text: &str) -> Result<Outbox> {
        self.require_playing()?;
        self.require_connected(client)?;
        let agent = self.agent_of(client)?;
        if text.trim().is_empty() {
            return Err(Error::Protocol("empty message".into()));
        }
        if self.latched[agent].is_some() {
            return Err(Error::Protocol("chat closed: action already submitted this step".into()));
        }
        let order = self.next_order;
        self.next_order += 1;
        self.step_chat.push(ChatLine { sender: agent, text: text.to_string(), order });
        Ok(self.to_all(ServerMsg::Chat { v: PROTOCOL_VERSION, t: self.state.t, sender: agent, text: text.to_string(), order }))
    }

    pub fn action(&mut self, client: ClientId, action: usize) -> Result<Outbox> {
        self.require_playing()?;
        self.require_connected(client)?;
        let agent = self.agent_of(client)?;
        let action = Action::from_index(action).ok_or_else(|| Error::Protocol(format!("unknown action {action}")))?;
        if !self.state.agents[agent].alive {
            return Err(Error::Protocol("dead agents cannot act".into()));
        }
        if self.latched[agent].is_some() {
            return Err(Error::Protocol("action already submitted this step".into()));
        }
        self.latched[agent] = Some(action);
        let waiting = HUMAN_SEATS.iter().any(|&h| self.state.agents[h].alive && self.latched[h].is_none());
        if waiting {
            return Ok(Vec::new());
        }
        self.advance()
    }

    fn advance(&mut self) -> Result<Outbox> {
        let mut actions = [Action::Stop; NUM_AGENTS];
        for h in HUMAN_SEATS {
            actions[h] = self.latched[h].unwrap_or(Action::Stop);
        }
        for (i, p) in self.ai.iter_mut() {
            if self.state.agents[*i].alive {
                let view = observe(&self.state, *i, None);
                actions[*i] = p.act(&view, &suggest_actions(&self.state, *i));
            }
        }
        let (next, _) = step(&self.state, actions)?;
        let hash = hash_hex(next.state_hash());
        self.records.push(StepRecord {
            t: self.state.t,
            actions,
            chat: std::mem::take(&mut self.step_chat),
            state_hash: hash.clone(),
        });
        self.state = next;
        self.latched = [None; NUM_AGENTS];

        let mut out = self.to_all(ServerMsg::StepAdvanced { v: PROTOCOL_VERSION, t: self.state.t, state_hash: hash });
        out.extend(self.broadcast_states());
        let result = outcome(&self.state, &mode());
        if let Outcome::Human(h) = result {
            self.phase = SessionPhase::Finished;
            self.result = result;
            out.extend(self.to_all(ServerMsg::GameOver { v: PROTOCOL_VERSION, outcome: Some(h), complete: true }));
        }
        Ok(out)
    }

    pub fn disconnect(&mut self, client: ClientId, now: Instant) {
        let waiting = self.phase == SessionPhase::Waiting;
        if let Some(i) = self.seats.iter().position(|s| s.as_ref().is_some_and(|s| s.client == client)) {
            if waiting {
                self.seats[i] = None;
            } else if let Some(s) = self.seats[i].as_mut() {
                s.disconnected_at = Some(now);
            }
        }
    }

    /// Aborts once a player has been gone longer than the grace period.
    pub fn tick(&mut self, now: Instant) -> Outbox {
        if self.phase != SessionPhase::Playing {
            return Vec::new();
        }
        let expired = self
            .seats
            .iter()
            .flatten()
            .any(|s| s.disconnected_at.is_some_and(|at| now.duration_since(at) >= self.cfg.disconnect_grace));
        if !expired {
            return Vec::new();
        }
        self.phase = SessionPhase::Aborted;
        self.seats
            .iter()
            .flatten()
            .filter(|s| s.disconnected_at.is_none())
            .map(|s| (s.client, ServerMsg::GameOver { v: PROTOCOL_VERSION, outcome: None, complete: false }))
            .collect()
    }

    pub fn is_over(&self) -> bool {
        matches!(self.phase, SessionPhase::Finished | SessionPhase::Aborted)
    }

    /// The game so far in replay format; chat not yet attached to a step
    /// is dropped.
    pub fn transcript(&self) -> Replay {
        let ai = self.ai_kind.to_string();
        let agent_specs = std::array::from_fn(|i| if Team::of(i) == Team::A { "human".to_string() } else { ai.clone() });
        let participants = self
            .seats
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_ref().map(|s| format!("{}:{}", HUMAN_SEATS[i], s.name)))
            .collect();
        Replay {
            header: ReplayHeader {
                version: REPLAY_VERSION,
                game_id: self.id.clone(),
                config: self.cfg.game.clone(),
                seed: self.seed,
                agent_specs,
                mode: mode(),
                participants,
                comm: [false, false],
                outcome: self.result,
                complete: self.phase == SessionPhase::Finished,
                initial_hash: hash_hex(self.initial_hash),
            },
            steps: self.records.clone(),
        }
    }
}
