use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::collapse::is_fixed_rigid;
use super::types::*;
use crate::error::{Error, Result};

/// Cells that may receive wood: interior, non-rigid, and neither a spawn
/// corner nor orthogonally adjacent to one.
pub(crate) fn wood_candidates() -> Vec<Pos> {
    Pos::all()
        .filter(|p| !is_fixed_rigid(*p))
        .filter(|p| START_CORNERS.iter().all(|c| c.manhattan(*p) > 1))
        .collect()
}

pub fn new_game(config: &GameConfig) -> Result<GameState> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);

    let mut grid: Grid<Cell> = [[Cell::Passage; BOARD_SIZE]; BOARD_SIZE];
    for p in Pos::all().filter(|p| is_fixed_rigid(*p)) {
        let (r, c) = p.idx();
        grid[r][c] = Cell::Rigid;
    }

    let mut candidates = wood_candidates();
    if config.wood_count > candidates.len() {
        return Err(Error::Config(format!(
            "wood_count ({}) exceeds the {} placeable cells",
            config.wood_count,
            candidates.len()
        )));
    }
    candidates.shuffle(&mut rng);
    let mut woods = candidates[..config.wood_count].to_vec();
    for p in &woods {
        let (r, c) = p.idx();
        grid[r][c] = Cell::Wood;
    }

    let mut hidden: Grid<Option<ItemKind>> = [[None; BOARD_SIZE]; BOARD_SIZE];
    woods.shuffle(&mut rng);
    for p in &woods[..config.item_count] {
        let kind = match rng.random_range(0..3) {
            0 => ItemKind::Ammo,
            1 => ItemKind::Range,
            _ => ItemKind::Kick,
        };
        let (r, c) = p.idx();
        hidden[r][c] = Some(kind);
    }

    let agents = std::array::from_fn(|id| AgentState {
        id,
        team: Team::of(id),
        pos: START_CORNERS[id],
        alive: true,
        ammo: config.initial_ammo,
        blast: config.initial_blast,
        can_kick: false,
    });

    Ok(GameState {
        config: config.clone(),
        t: 0,
        grid,
        hidden,
        agents,
        bombs: Vec::new(),
        flames: Vec::new(),
        items_lost: 0,
        rng,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rigid_layout_and_spawns() {
        let s = new_game(&GameConfig::default().with_seed(3)).unwrap();
        for p in Pos::all() {
            if p.row % 2 == 0 && p.col % 2 == 0 {
                assert_eq!(s.cell(p), Cell::Rigid, "{p:?}");
            }
        }
        assert_eq!(s.cell(Pos::new(0, 0)), Cell::Rigid);
        assert_eq!(s.cell(Pos::new(2, 2)), Cell::Rigid);
        assert_eq!(s.cell(Pos::new(10, 10)), Cell::Rigid);
        assert_ne!(s.cell(Pos::new(1, 2)), Cell::Rigid);
        assert_eq!(s.agents[0].pos, Pos::new(1, 1));
        assert_eq!(s.t, 0);
        assert!(s.bombs.is_empty() && s.flames.is_empty());
    }

    #[test]
    fn counts_follow_config() {
        let cfg = GameConfig::default().with_seed(11);
        let s = new_game(&cfg).unwrap();
        let woods = s.grid.iter().flatten().filter(|c| **c == Cell::Wood).count();
        assert_eq!(woods, cfg.wood_count);
        assert_eq!(s.items_hidden(), cfg.item_count);
        for p in Pos::all() {
            if s.hidden[p.row as usize][p.col as usize].is_some() {
                assert_eq!(s.cell(p), Cell::Wood);
            }
        }
        for c in START_CORNERS {
            assert_eq!(s.cell(c), Cell::Passage);
        }
    }

    #[test]
    fn same_seed_same_state() {
        let cfg = GameConfig::default().with_seed(7);
        assert_eq!(new_game(&cfg).unwrap(), new_game(&cfg).unwrap());
        let other = new_game(&GameConfig::default().with_seed(8)).unwrap();
        assert_ne!(new_game(&cfg).unwrap().grid, other.grid);
    }

    #[test]
    fn bad_configs_are_rejected() {
        let bad = [
            GameConfig { board_size: 13, ..GameConfig::default() },
            GameConfig { collapse_start: 800, ..GameConfig::default() },
            GameConfig { item_count: 40, ..GameConfig::default() },
            GameConfig { wood_count: 60, item_count: 0, ..GameConfig::default() },
        ];
        for cfg in bad {
            assert!(matches!(new_game(&cfg), Err(Error::Config(_))), "{cfg:?}");
        }
    }
}
