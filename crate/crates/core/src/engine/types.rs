use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Side length of the (square) board.
pub const BOARD_SIZE: usize = 11;
pub const NUM_AGENTS: usize = 4;
pub const NUM_ACTIONS: usize = 6;

pub type AgentId = usize;
pub type Grid<T> = [[T; BOARD_SIZE]; BOARD_SIZE];

/// Spawn corners, indexed by agent id.
pub const START_CORNERS: [Pos; NUM_AGENTS] = [
    Pos::new(1, 1),
    Pos::new(9, 1),
    Pos::new(9, 9),
    Pos::new(1, 9),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub row: i32,
    pub col: i32,
}

impl Pos {
    pub const fn new(row: i32, col: i32) -> Self {
        Pos { row, col }
    }

    pub fn in_bounds(self) -> bool {
        (0..BOARD_SIZE as i32).contains(&self.row) && (0..BOARD_SIZE as i32).contains(&self.col)
    }

    pub fn offset(self, dir: Direction) -> Pos {
        let (dr, dc) = dir.delta();
        Pos::new(self.row + dr, self.col + dc)
    }

    /// Neighbor in `dir`, or `None` when it falls off the board.
    pub fn step(self, dir: Direction) -> Option<Pos> {
        let p = self.offset(dir);
        p.in_bounds().then_some(p)
    }

    pub fn chebyshev(self, other: Pos) -> i32 {
        (self.row - other.row).abs().max((self.col - other.col).abs())
    }

    pub fn manhattan(self, other: Pos) -> i32 {
        (self.row - other.row).abs() + (self.col - other.col).abs()
    }

    pub(crate) fn idx(self) -> (usize, usize) {
        (self.row as usize, self.col as usize)
    }

    pub fn all() -> impl Iterator<Item = Pos> {
        (0..BOARD_SIZE as i32).flat_map(|r| (0..BOARD_SIZE as i32).map(move |c| Pos::new(r, c)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Left, Direction::Right];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::Up => (-1, 0),
            Direction::Down => (1, 0),
            Direction::Left => (0, -1),
            Direction::Right => (0, 1),
        }
    }

    pub fn action(self) -> Action {
        match self {
            Direction::Up => Action::Up,
            Direction::Down => Action::Down,
            Direction::Left => Action::Left,
            Direction::Right => Action::Right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ItemKind {
    Ammo,
    Range,
    Kick,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Cell {
    #[default]
    Passage,
    Rigid,
    Wood,
    ItemAmmo,
    ItemRange,
    ItemKick,
}

impl Cell {
    pub fn item(kind: ItemKind) -> Cell {
        match kind {
            ItemKind::Ammo => Cell::ItemAmmo,
            ItemKind::Range => Cell::ItemRange,
            ItemKind::Kick => Cell::ItemKick,
        }
    }

    pub fn as_item(self) -> Option<ItemKind> {
        match self {
            Cell::ItemAmmo => Some(ItemKind::Ammo),
            Cell::ItemRange => Some(ItemKind::Range),
            Cell::ItemKick => Some(ItemKind::Kick),
            _ => None,
        }
    }

    /// Agents may stand here (passages and power-ups).
    pub fn is_walkable(self) -> bool {
        !matches!(self, Cell::Rigid | Cell::Wood)
    }

    pub(crate) fn code(self) -> u8 {
        self as u8
    }
}

/// The six actions, in network output order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Action {
    #[default]
    Stop,
    Up,
    Down,
    Left,
    Right,
    PlaceBomb,
}

impl Action {
    pub const ALL: [Action; NUM_ACTIONS] = [
        Action::Stop,
        Action::Up,
        Action::Down,
        Action::Left,
        Action::Right,
        Action::PlaceBomb,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    pub fn direction(self) -> Option<Direction> {
        match self {
            Action::Up => Some(Direction::Up),
            Action::Down => Some(Direction::Down),
            Action::Left => Some(Direction::Left),
            Action::Right => Some(Direction::Right),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Team {
    A,
    B,
}

impl Team {
    pub fn of(agent: AgentId) -> Team {
        if agent % 2 == 0 {
            Team::A
        } else {
            Team::B
        }
    }

    pub fn members(self) -> [AgentId; 2] {
        match self {
            Team::A => [0, 2],
            Team::B => [1, 3],
        }
    }

    pub fn opponent(self) -> Team {
        match self {
            Team::A => Team::B,
            Team::B => Team::A,
        }
    }
}

pub fn teammate(agent: AgentId) -> AgentId {
    (agent + 2) % NUM_AGENTS
}

pub fn are_enemies(a: AgentId, b: AgentId) -> bool {
    Team::of(a) != Team::of(b)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: AgentId,
    pub team: Team,
    pub pos: Pos,
    pub alive: bool,
    pub ammo: u32,
    pub blast: u32,
    pub can_kick: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bomb {
    pub owner: AgentId,
    pub pos: Pos,
    pub life: u32,
    pub blast: u32,
    pub velocity: Option<Direction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flame {
    pub pos: Pos,
    pub life: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameConfig {
    pub board_size: usize,
    pub max_steps: u32,
    pub collapse_start: u32,
    pub bomb_life: u32,
    pub flame_life: u32,
    pub initial_ammo: u32,
    pub initial_blast: u32,
    pub wood_count: usize,
    pub item_count: usize,
    /// Chebyshev radius of each agent's view.
    pub view_radius: i32,
    pub rng_seed: u64,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            board_size: BOARD_SIZE,
            max_steps: 800,
            collapse_start: 100,
            bomb_life: 10,
            flame_life: 2,
            initial_ammo: 1,
            initial_blast: 2,
            wood_count: 36,
            item_count: 20,
            view_radius: 4,
            rng_seed: 0,
        }
    }
}

impl GameConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.board_size != BOARD_SIZE {
            return fail(format!("board_size must be {BOARD_SIZE}, got {}", self.board_size));
        }
        if self.collapse_start >= self.max_steps {
            return fail(format!(
                "collapse_start ({}) must be below max_steps ({})",
                self.collapse_start, self.max_steps
            ));
        }
        if self.item_count > self.wood_count {
            return fail(format!(
                "item_count ({}) exceeds wood_count ({})",
                self.item_count, self.wood_count
            ));
        }
        if self.bomb_life == 0 || self.flame_life == 0 || self.initial_blast == 0 {
            return fail("bomb_life, flame_life and initial_blast must be positive".into());
        }
        if self.view_radius < 0 {
            return fail("view_radius must be non-negative".into());
        }
        Ok(())
    }
}

/// Authoritative game state. Bombs and flames are kept sorted by position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub config: GameConfig,
    pub t: u32,
    pub grid: Grid<Cell>,
    /// Power-ups still buried under wood.
    pub hidden: Grid<Option<ItemKind>>,
    pub agents: [AgentState; NUM_AGENTS],
    pub bombs: Vec<Bomb>,
    pub flames: Vec<Flame>,
    /// Power-ups buried by wall collapse (never recoverable).
    pub items_lost: u32,
    pub rng: ChaCha8Rng,
}

impl GameState {
    pub fn cell(&self, p: Pos) -> Cell {
        let (r, c) = p.idx();
        self.grid[r][c]
    }

    pub(crate) fn set_cell(&mut self, p: Pos, cell: Cell) {
        let (r, c) = p.idx();
        self.grid[r][c] = cell;
    }

    pub fn bomb_at(&self, p: Pos) -> Option<&Bomb> {
        self.bombs.iter().find(|b| b.pos == p)
    }

    pub fn flame_at(&self, p: Pos) -> Option<&Flame> {
        self.flames.iter().find(|f| f.pos == p)
    }

    pub fn agent_at(&self, p: Pos) -> Option<&AgentState> {
        self.agents.iter().find(|a| a.alive && a.pos == p)
    }

    pub fn alive_flags(&self) -> [bool; NUM_AGENTS] {
        std::array::from_fn(|i| self.agents[i].alive)
    }

    pub fn rigid_count(&self) -> usize {
        self.grid.iter().flatten().filter(|c| **c == Cell::Rigid).count()
    }

    pub fn items_on_board(&self) -> usize {
        self.grid.iter().flatten().filter(|c| c.as_item().is_some()).count()
    }

    pub fn items_hidden(&self) -> usize {
        self.hidden.iter().flatten().filter(|c| c.is_some()).count()
    }

    pub(crate) fn normalize(&mut self) {
        self.bombs.sort_by_key(|b| b.pos);
        self.flames.sort_by_key(|f| f.pos);
    }
}
