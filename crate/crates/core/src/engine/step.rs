use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::blast::blast_cells_on;
use super::collapse::collapse_cell;
use super::outcome::{outcome, Outcome, OutcomeMode};
use super::types::*;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeathCause {
    Flame,
    Collapse,
}

/// Things that happened during one step, consumed by reward shaping and logs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Event {
    BombExploded { owner: AgentId, pos: Pos },
    /// `by` lists the owners of every bomb whose blast reached the wood.
    WoodDestroyed { pos: Pos, by: Vec<AgentId> },
    ItemPicked { agent: AgentId, item: ItemKind },
    AgentDied { agent: AgentId, cause: DeathCause },
    CellCollapsed { pos: Pos },
    /// Emitted after the step for every enemy inside the agent's view.
    EnemyInSight { agent: AgentId, enemy: AgentId },
    /// Shortest-path distance to the nearest enemy shrank by `cells`.
    EnemyCloser { agent: AgentId, cells: u32 },
}

pub type EventList = Vec<Event>;

/// Advance the game by one step. Dead agents' actions are ignored.
pub fn step(state: &GameState, actions: [Action; NUM_AGENTS]) -> Result<(GameState, EventList)> {
    if state.t >= state.config.max_steps || outcome(state, &OutcomeMode::AgentMatch) != Outcome::Ongoing {
        return Err(Error::State(format!("step called on a finished game (t = {})", state.t)));
    }
    let mut next = state.clone();
    let events = next.advance(actions, true);
    Ok((next, events))
}

/// The same transition as [`step`] without the terminal-state check, so
/// lookahead can run past the end of a game.
pub fn simulate(state: &GameState, actions: [Action; NUM_AGENTS]) -> (GameState, EventList) {
    let mut next = state.clone();
    let events = next.advance(actions, true);
    (next, events)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Entity {
    Agent(usize),
    Bomb(usize),
}

impl GameState {
    /// The raw transition, without the terminal-state check. `shaping`
    /// toggles the sight/proximity events, which only reward shaping needs.
    pub(crate) fn advance(&mut self, actions: [Action; NUM_AGENTS], shaping: bool) -> EventList {
        let mut events = Vec::new();
        let before = shaping.then(|| self.enemy_distances());

        // 1. bomb timers
        for b in &mut self.bombs {
            b.life = b.life.saturating_sub(1);
        }

        // 2. simultaneous movement
        self.resolve_movement(&actions);

        // 3. bomb placement
        for id in 0..NUM_AGENTS {
            let a = &self.agents[id];
            if a.alive && actions[id] == Action::PlaceBomb && a.ammo > 0 && self.bomb_at(a.pos).is_none() {
                let bomb = Bomb {
                    owner: id,
                    pos: a.pos,
                    life: self.config.bomb_life,
                    blast: a.blast,
                    velocity: None,
                };
                self.agents[id].ammo -= 1;
                self.bombs.push(bomb);
            }
        }

        // 4. explosions and chains
        let burning: BTreeSet<Pos> = self.flames.iter().map(|f| f.pos).collect();
        let cover = self.explode(&burning, &mut events);

        // 5. flames and wood
        let flame_life = self.config.flame_life;
        self.flames.retain_mut(|f| {
            f.life -= 1;
            f.life > 0
        });
        for (&p, owners) in &cover {
            match self.flames.iter_mut().find(|f| f.pos == p) {
                Some(f) => f.life = flame_life,
                None => self.flames.push(Flame { pos: p, life: flame_life }),
            }
            if self.cell(p) == Cell::Wood {
                let (r, c) = p.idx();
                let revealed = self.hidden[r][c].take();
                self.set_cell(p, revealed.map_or(Cell::Passage, Cell::item));
                events.push(Event::WoodDestroyed { pos: p, by: owners.iter().copied().collect() });
            }
        }

        // 6. deaths and pickups
        let burning: BTreeSet<Pos> = self.flames.iter().map(|f| f.pos).collect();
        for id in 0..NUM_AGENTS {
            let a = &mut self.agents[id];
            if a.alive && burning.contains(&a.pos) {
                a.alive = false;
                events.push(Event::AgentDied { agent: id, cause: DeathCause::Flame });
            }
        }
        for id in 0..NUM_AGENTS {
            let pos = self.agents[id].pos;
            if !self.agents[id].alive {
                continue;
            }
            if let Some(item) = self.cell(pos).as_item() {
                let a = &mut self.agents[id];
                match item {
                    ItemKind::Ammo => a.ammo += 1,
                    ItemKind::Range => a.blast += 1,
                    ItemKind::Kick => a.can_kick = true,
                }
                self.set_cell(pos, Cell::Passage);
                events.push(Event::ItemPicked { agent: id, item });
            }
        }

        // 7. wall collapse
        if let Some(p) = collapse_cell(&self.config, self.t + 1) {
            self.collapse(p, &mut events);
        }

        // 8. clock
        self.t += 1;
        self.normalize();

        if let Some(before) = before {
            self.shaping_events(&before, &mut events);
        }
        events
    }

    fn resolve_movement(&mut self, actions: &[Action; NUM_AGENTS]) {
        let n_bombs = self.bombs.len();
        let mut agent_cur = [Pos::new(0, 0); NUM_AGENTS];
        let mut agent_des = [Pos::new(0, 0); NUM_AGENTS];
        let mut kickers: Vec<Vec<usize>> = vec![Vec::new(); n_bombs];
        let mut kick_dir: Vec<Option<Direction>> = vec![None; n_bombs];

        for id in 0..NUM_AGENTS {
            let a = &self.agents[id];
            agent_cur[id] = a.pos;
            agent_des[id] = a.pos;
            if !a.alive {
                continue;
            }
            let Some(dir) = actions[id].direction() else { continue };
            let Some(target) = a.pos.step(dir) else { continue };
            if !self.cell(target).is_walkable() {
                continue;
            }
            match self.bombs.iter().position(|b| b.pos == target) {
                Some(j) => {
                    if a.can_kick && self.bombs[j].velocity.is_none() {
                        agent_des[id] = target;
                        kickers[j].push(id);
                        kick_dir[j] = Some(dir);
                    }
                }
                None => agent_des[id] = target,
            }
        }

        let bomb_cur: Vec<Pos> = self.bombs.iter().map(|b| b.pos).collect();
        let mut bomb_des = bomb_cur.clone();
        let bomb_dir: Vec<Option<Direction>> =
            (0..n_bombs).map(|j| kick_dir[j].or(self.bombs[j].velocity)).collect();
        for j in 0..n_bombs {
            if let Some(target) = bomb_dir[j].and_then(|d| bomb_cur[j].step(d)) {
                if self.cell(target).is_walkable() {
                    bomb_des[j] = target;
                }
            }
        }

        let entities: Vec<Entity> = (0..NUM_AGENTS)
            .filter(|&i| self.agents[i].alive)
            .map(Entity::Agent)
            .chain((0..n_bombs).map(Entity::Bomb))
            .collect();

        loop {
            let cur = |e: Entity| match e {
                Entity::Agent(i) => agent_cur[i],
                Entity::Bomb(j) => bomb_cur[j],
            };
            let des = |e: Entity| match e {
                Entity::Agent(i) => agent_des[i],
                Entity::Bomb(j) => bomb_des[j],
            };
            let mut revert: Vec<Entity> = Vec::new();

            let mut claims: BTreeMap<Pos, Vec<Entity>> = BTreeMap::new();
            for &e in &entities {
                claims.entry(des(e)).or_default().push(e);
            }
            for group in claims.values().filter(|g| g.len() > 1) {
                revert.extend(group.iter().copied().filter(|&e| des(e) != cur(e)));
            }
            for (x, &e) in entities.iter().enumerate() {
                for &f in &entities[x + 1..] {
                    let moving = des(e) != cur(e) && des(f) != cur(f);
                    if moving && des(e) == cur(f) && des(f) == cur(e) {
                        revert.push(e);
                        revert.push(f);
                    }
                }
            }
            for j in 0..n_bombs {
                if bomb_des[j] != bomb_cur[j]
                    && kickers[j].iter().any(|&i| agent_des[i] == agent_cur[i])
                {
                    revert.push(Entity::Bomb(j));
                }
            }

            if revert.is_empty() {
                break;
            }
            for e in revert {
                match e {
                    Entity::Agent(i) => agent_des[i] = agent_cur[i],
                    Entity::Bomb(j) => bomb_des[j] = bomb_cur[j],
                }
            }
        }

        for id in 0..NUM_AGENTS {
            self.agents[id].pos = agent_des[id];
        }
        for (j, b) in self.bombs.iter_mut().enumerate() {
            if bomb_des[j] != bomb_cur[j] {
                b.pos = bomb_des[j];
                b.velocity = bomb_dir[j];
            } else {
                b.velocity = None;
            }
        }
    }

    /// Detonates every due bomb plus everything its blast reaches,
    /// returning the covered cells with the owners responsible for each.
    fn explode(
        &mut self,
        burning: &BTreeSet<Pos>,
        events: &mut EventList,
    ) -> BTreeMap<Pos, BTreeSet<AgentId>> {
        let mut exploded = vec![false; self.bombs.len()];
        let mut queue = VecDeque::new();
        for (j, b) in self.bombs.iter().enumerate() {
            if b.life == 0 || burning.contains(&b.pos) {
                exploded[j] = true;
                queue.push_back(j);
            }
        }
        let mut cover: BTreeMap<Pos, BTreeSet<AgentId>> = BTreeMap::new();
        while let Some(j) = queue.pop_front() {
            let (owner, origin, blast) = (self.bombs[j].owner, self.bombs[j].pos, self.bombs[j].blast);
            for p in blast_cells_on(&self.grid, origin, blast) {
                cover.entry(p).or_default().insert(owner);
                for (k, other) in self.bombs.iter().enumerate() {
                    if !exploded[k] && other.pos == p {
                        exploded[k] = true;
                        queue.push_back(k);
                    }
                }
            }
        }
        let mut j = 0;
        let mut refunds = Vec::new();
        self.bombs.retain(|b| {
            let gone = exploded[j];
            j += 1;
            if gone {
                refunds.push(b.owner);
                events.push(Event::BombExploded { owner: b.owner, pos: b.pos });
            }
            !gone
        });
        for owner in refunds {
            self.agents[owner].ammo += 1;
        }
        cover
    }

    fn collapse(&mut self, p: Pos, events: &mut EventList) {
        let (r, c) = p.idx();
        if self.hidden[r][c].take().is_some() || self.cell(p).as_item().is_some() {
            self.items_lost += 1;
        }
        self.set_cell(p, Cell::Rigid);
        if let Some(j) = self.bombs.iter().position(|b| b.pos == p) {
            let b = self.bombs.remove(j);
            self.agents[b.owner].ammo += 1;
        }
        self.flames.retain(|f| f.pos != p);
        for a in self.agents.iter_mut().filter(|a| a.alive && a.pos == p) {
            a.alive = false;
            events.push(Event::AgentDied { agent: a.id, cause: DeathCause::Collapse });
        }
        events.push(Event::CellCollapsed { pos: p });
    }

    /// Shortest-path distance from each living agent to its nearest living
    /// enemy, walking through passable cells (bombs and flames ignored).
    pub fn enemy_distances(&self) -> [Option<u32>; NUM_AGENTS] {
        std::array::from_fn(|id| {
            let me = &self.agents[id];
            if !me.alive {
                return None;
            }
            let targets: Vec<Pos> = self
                .agents
                .iter()
                .filter(|o| o.alive && are_enemies(id, o.id))
                .map(|o| o.pos)
                .collect();
            if targets.is_empty() {
                return None;
            }
            let mut dist = [[u32::MAX; BOARD_SIZE]; BOARD_SIZE];
            let mut queue = VecDeque::from([me.pos]);
            dist[me.pos.row as usize][me.pos.col as usize] = 0;
            while let Some(p) = queue.pop_front() {
                let d = dist[p.row as usize][p.col as usize];
                if targets.contains(&p) {
                    return Some(d);
                }
                for dir in Direction::ALL {
                    if let Some(q) = p.step(dir) {
                        let (r, c) = q.idx();
                        if self.grid[r][c].is_walkable() && dist[r][c] == u32::MAX {
                            dist[r][c] = d + 1;
                            queue.push_back(q);
                        }
                    }
                }
            }
            None
        })
    }

    fn shaping_events(&self, before: &[Option<u32>; NUM_AGENTS], events: &mut EventList) {
        let radius = self.config.view_radius;
        for me in self.agents.iter().filter(|a| a.alive) {
            for other in self.agents.iter().filter(|o| o.alive && are_enemies(me.id, o.id)) {
                if me.pos.chebyshev(other.pos) <= radius {
                    events.push(Event::EnemyInSight { agent: me.id, enemy: other.id });
                }
            }
        }
        let after = self.enemy_distances();
        for id in 0..NUM_AGENTS {
            if let (Some(b), Some(a)) = (before[id], after[id]) {
                if a < b {
                    events.push(Event::EnemyCloser { agent: id, cells: b - a });
                }
            }
        }
    }
}
