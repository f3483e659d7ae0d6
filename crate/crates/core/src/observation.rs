//! Fogged per-agent views, their fixed numeric encoding, and the
//! action-suggestion mask.
//!
//! Plane layout (each 11x11, values in [0, 1], zero outside the view):
//!
//! | plane | content                                                        |
//! |-------|----------------------------------------------------------------|
//! | 0     | rigid 1.0, wood 0.5                                            |
//! | 1     | items: ammo 1/3, range 2/3, kick 1                             |
//! | 2     | bomb life / bomb_life                                          |
//! | 3     | bomb blast / 10 (clamped)                                      |
//! | 4     | flame life / flame_life                                        |
//! | 5     | self 1.0, teammate 0.75, enemy 0.5, hallucinated target 0.25   |
//!
//! Feature vector slots:
//! `[0,1]` own position / 10, `[2]` ammo / 5 (clamped), `[3]` blast / 10,
//! `[4]` can kick, `[5..9]` alive flags, `[9]` t / max_steps,
//! `[10,11]` teammate position / 10, `[12]` teammate position valid,
//! `[13,14]` target position / 10, `[15]` target known,
//! `[16]` steps until collapse / max_steps.

use serde::{Deserialize, Serialize};

use crate::comm::CommPacket;
use crate::engine::{
    are_enemies, teammate, Action, AgentId, Cell, Flame, GameState, Grid, ItemKind, Pos, BOARD_SIZE,
    NUM_ACTIONS, NUM_AGENTS,
};

pub const NUM_PLANES: usize = 6;
pub const PLANE_LEN: usize = BOARD_SIZE * BOARD_SIZE;
pub const PLANES_LEN: usize = NUM_PLANES * PLANE_LEN;
pub const FEATURE_LEN: usize = 17;

pub const VALUE_SELF: f64 = 1.0;
pub const VALUE_TEAMMATE: f64 = 0.75;
pub const VALUE_ENEMY: f64 = 0.5;
pub const VALUE_TARGET: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BombView {
    pub pos: Pos,
    pub life: u32,
    pub blast: u32,
}

/// Normalisation constants carried alongside a view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewLimits {
    pub max_steps: u32,
    pub collapse_start: u32,
    pub bomb_life: u32,
    pub flame_life: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentView {
    pub self_id: AgentId,
    pub alive: bool,
    pub pos: Pos,
    pub visible: Grid<bool>,
    pub grid: Grid<Option<Cell>>,
    pub bombs: Vec<BombView>,
    pub flames: Vec<Flame>,
    /// Visible living agents, including self.
    pub agents: Vec<(AgentId, Pos)>,
    pub ammo: u32,
    pub blast: u32,
    pub can_kick: bool,
    pub alive_flags: [bool; NUM_AGENTS],
    pub t: u32,
    pub limits: ViewLimits,
    pub comm: Option<CommPacket>,
}

impl AgentView {
    pub fn is_visible(&self, p: Pos) -> bool {
        p.in_bounds() && self.visible[p.row as usize][p.col as usize]
    }

    pub fn cell(&self, p: Pos) -> Option<Cell> {
        if p.in_bounds() {
            self.grid[p.row as usize][p.col as usize]
        } else {
            None
        }
    }

    pub fn visible_enemies(&self) -> impl Iterator<Item = (AgentId, Pos)> + '_ {
        self.agents.iter().copied().filter(move |(id, _)| are_enemies(self.self_id, *id))
    }
}

/// Cells within Chebyshev distance `radius` of `center`, clipped to the board.
pub fn visibility_mask(center: Pos, radius: i32) -> Grid<bool> {
    let mut mask = [[false; BOARD_SIZE]; BOARD_SIZE];
    for p in Pos::all() {
        if p.chebyshev(center) <= radius {
            mask[p.row as usize][p.col as usize] = true;
        }
    }
    mask
}

pub fn observe(state: &GameState, agent_id: AgentId, packet: Option<CommPacket>) -> AgentView {
    let me = &state.agents[agent_id];
    let cfg = &state.config;
    let limits = ViewLimits {
        max_steps: cfg.max_steps,
        collapse_start: cfg.collapse_start,
        bomb_life: cfg.bomb_life,
        flame_life: cfg.flame_life,
    };
    let visible = if me.alive {
        visibility_mask(me.pos, cfg.view_radius)
    } else {
        [[false; BOARD_SIZE]; BOARD_SIZE]
    };
    let seen = |p: Pos| visible[p.row as usize][p.col as usize];

    let mut grid = [[None; BOARD_SIZE]; BOARD_SIZE];
    for p in Pos::all().filter(|p| seen(*p)) {
        grid[p.row as usize][p.col as usize] = Some(state.cell(p));
    }
    let bombs = state
        .bombs
        .iter()
        .filter(|b| seen(b.pos))
        .map(|b| BombView { pos: b.pos, life: b.life, blast: b.blast })
        .collect();
    let flames = state.flames.iter().copied().filter(|f| seen(f.pos)).collect();
    let agents = state
        .agents
        .iter()
        .filter(|a| a.alive && seen(a.pos))
        .map(|a| (a.id, a.pos))
        .collect();

    AgentView {
        self_id: agent_id,
        alive: me.alive,
        pos: me.pos,
        visible,
        grid,
        bombs,
        flames,
        agents,
        ammo: me.ammo,
        blast: me.blast,
        can_kick: me.can_kick,
        alive_flags: state.alive_flags(),
        t: state.t,
        limits,
        comm: packet,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneStack(pub Box<[f64; PLANES_LEN]>);

impl PlaneStack {
    pub fn zeros() -> Self {
        PlaneStack(Box::new([0.0; PLANES_LEN]))
    }

    pub fn get(&self, plane: usize, p: Pos) -> f64 {
        self.0[plane * PLANE_LEN + p.row as usize * BOARD_SIZE + p.col as usize]
    }

    fn set(&mut self, plane: usize, p: Pos, v: f64) {
        self.0[plane * PLANE_LEN + p.row as usize * BOARD_SIZE + p.col as usize] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0[..]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_LEN]);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ActionMask(pub [bool; NUM_ACTIONS]);

impl ActionMask {
    pub fn allows(&self, a: Action) -> bool {
        self.0[a.index()]
    }

    pub fn any(&self) -> bool {
        self.0.iter().any(|&b| b)
    }

    pub fn allowed(&self) -> impl Iterator<Item = Action> + '_ {
        Action::ALL.into_iter().filter(|a| self.allows(*a))
    }

    pub fn as_f64(&self) -> [f64; NUM_ACTIONS] {
        self.0.map(|b| if b { 1.0 } else { 0.0 })
    }
}

fn item_value(kind: ItemKind) -> f64 {
    match kind {
        ItemKind::Ammo => 1.0 / 3.0,
        ItemKind::Range => 2.0 / 3.0,
        ItemKind::Kick => 1.0,
    }
}

pub fn encode(view: &AgentView) -> (PlaneStack, FeatureVector) {
    let mut planes = PlaneStack::zeros();
    let lim = &view.limits;

    for p in Pos::all() {
        match view.cell(p) {
            Some(Cell::Rigid) => planes.set(0, p, 1.0),
            Some(Cell::Wood) => planes.set(0, p, 0.5),
            Some(c) => {
                if let Some(kind) = c.as_item() {
                    planes.set(1, p, item_value(kind));
                }
            }
            None => {}
        }
    }
    for b in &view.bombs {
        planes.set(2, b.pos, (b.life as f64 / lim.bomb_life as f64).min(1.0));
        planes.set(3, b.pos, (b.blast as f64 / 10.0).min(1.0));
    }
    for f in &view.flames {
        planes.set(4, f.pos, (f.life as f64 / lim.flame_life as f64).min(1.0));
    }
    if let Some(target) = view.comm.as_ref().and_then(|c| c.target_pos) {
        planes.set(5, target, VALUE_TARGET);
    }
    for &(id, p) in &view.agents {
        let v = if id == view.self_id {
            VALUE_SELF
        } else if id == teammate(view.self_id) {
            VALUE_TEAMMATE
        } else {
            VALUE_ENEMY
        };
        planes.set(5, p, v);
    }

    let mut v = [0.0; FEATURE_LEN];
    if view.alive {
        v[0] = view.pos.row as f64 / 10.0;
        v[1] = view.pos.col as f64 / 10.0;
    }
    v[2] = (view.ammo as f64 / 5.0).min(1.0);
    v[3] = (view.blast as f64 / 10.0).min(1.0);
    v[4] = view.can_kick as u8 as f64;
    for i in 0..NUM_AGENTS {
        v[5 + i] = view.alive_flags[i] as u8 as f64;
    }
    v[9] = (view.t as f64 / lim.max_steps as f64).min(1.0);
    if let Some(packet) = &view.comm {
        v[10] = packet.sender_pos.row as f64 / 10.0;
        v[11] = packet.sender_pos.col as f64 / 10.0;
        v[12] = 1.0;
        if let Some(target) = packet.target_pos {
            v[13] = target.row as f64 / 10.0;
            v[14] = target.col as f64 / 10.0;
            v[15] = 1.0;
        }
    }
    v[16] = (lim.collapse_start.saturating_sub(view.t) as f64 / lim.max_steps as f64).min(1.0);

    (planes, FeatureVector(v))
}

/// Marks each action the agent survives for two steps, assuming it takes
/// that action first and then everyone (itself included) stops.
pub fn suggest_actions(state: &GameState, agent_id: AgentId) -> ActionMask {
    let mut mask = ActionMask::default();
    if !state.agents[agent_id].alive {
        return mask;
    }
    let stop = [Action::Stop; NUM_AGENTS];
    for action in Action::ALL {
        let mut actions = stop;
        actions[agent_id] = action;
        let mut sim = state.clone();
        sim.advance(actions, false);
        if !sim.agents[agent_id].alive {
            continue;
        }
        sim.advance(stop, false);
        mask.0[action.index()] = sim.agents[agent_id].alive;
    }
    mask
}
