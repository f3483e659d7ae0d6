//! Wire messages. Every frame is one JSON text message carrying the
//! protocol version in `v`.

use serde::{Deserialize, Serialize};

use crate::engine::{AgentId, Cell, HumanOutcome, Pos, BOARD_SIZE};
use crate::observation::AgentView;

pub const PROTOCOL_VERSION: u32 = 1;

fn v() -> u32 {
    PROTOCOL_VERSION
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMsg {
    /// Opens a new session; the reply is `created`.
    Create {
        #[serde(default = "v")]
        v: u32,
        #[serde(default)]
        ai: Option<String>,
    },
    Join {
        #[serde(default = "v")]
        v: u32,
        session: String,
        name: String,
    },
    Chat {
        #[serde(default = "v")]
        v: u32,
        text: String,
    },
    /// Action index in network order: stop, up, down, left, right, bomb.
    Action {
        #[serde(default = "v")]
        v: u32,
        action: usize,
    },
}

impl ClientMsg {
    pub fn version(&self) -> u32 {
        match self {
            ClientMsg::Create { v, .. } | ClientMsg::Join { v, .. } | ClientMsg::Chat { v, .. } | ClientMsg::Action { v, .. } => *v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BombInfo {
    pub pos: Pos,
    pub life: u32,
    pub blast: u32,
    /// Cells the blast would reach if it went off now.
    pub reach: Vec<Pos>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentInfo {
    pub id: AgentId,
    pub pos: Pos,
}

/// What one human sees: their own fogged view, merged with the
/// teammate's when shared vision is on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClientView {
    pub agent: AgentId,
    pub alive: bool,
    pub pos: Pos,
    pub ammo: u32,
    pub blast: u32,
    pub can_kick: bool,
    /// Row-major cells; `null` outside the visible region.
    pub board: Vec<Vec<Option<Cell>>>,
    /// Cells the agent sees itself.
    pub own_visible: Vec<Vec<bool>>,
    pub bombs: Vec<BombInfo>,
    pub flames: Vec<Pos>,
    pub agents: Vec<AgentInfo>,
    pub alive_flags: [bool; 4],
}

impl ClientView {
    pub fn from_views(own: &AgentView, mate: Option<&AgentView>, bombs: Vec<BombInfo>) -> ClientView {
        let see = |p: Pos| own.is_visible(p) || mate.is_some_and(|m| m.is_visible(p));
        let cell = |p: Pos| own.cell(p).or_else(|| mate.and_then(|m| m.cell(p)));
        let board = (0..BOARD_SIZE as i32)
            .map(|r| (0..BOARD_SIZE as i32).map(|c| cell(Pos::new(r, c))).collect())
            .collect();
        let own_visible = (0..BOARD_SIZE as i32)
            .map(|r| (0..BOARD_SIZE as i32).map(|c| own.is_visible(Pos::new(r, c))).collect())
            .collect();
        let mut agents: Vec<AgentInfo> = own.agents.iter().map(|&(id, pos)| AgentInfo { id, pos }).collect();
        if let Some(m) = mate {
            for &(id, pos) in &m.agents {
                if !agents.iter().any(|a| a.id == id) {
                    agents.push(AgentInfo { id, pos });
                }
            }
        }
        agents.sort_by_key(|a| a.id);
        let mut flames: Vec<Pos> = own.flames.iter().map(|f| f.pos).collect();
        if let Some(m) = mate {
            flames.extend(m.flames.iter().map(|f| f.pos));
        }
        flames.sort();
        flames.dedup();
        ClientView {
            agent: own.self_id,
            alive: own.alive,
            pos: own.pos,
            ammo: own.ammo,
            blast: own.blast,
            can_kick: own.can_kick,
            board,
            own_visible,
            bombs: bombs.into_iter().filter(|b| see(b.pos)).collect(),
            flames,
            agents,
            alive_flags: own.alive_flags,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMsg {
    Created {
        v: u32,
        session: String,
    },
    Joined {
        v: u32,
        session: String,
        agent: AgentId,
        teammate: AgentId,
    },
    State {
        v: u32,
        t: u32,
        view: Box<ClientView>,
    },
    Chat {
        v: u32,
        t: u32,
        sender: AgentId,
        text: String,
        order: u32,
    },
    StepAdvanced {
        v: u32,
        t: u32,
        state_hash: String,
    },
    GameOver {
        v: u32,
        /// `None` when the game was aborted.
        outcome: Option<HumanOutcome>,
        complete: bool,
    },
    Error {
        v: u32,
        reason: String,
    },
}

impl ServerMsg {
    pub fn error(reason: impl Into<String>) -> ServerMsg {
        ServerMsg::Error { v: PROTOCOL_VERSION, reason: reason.into() }
    }
}
