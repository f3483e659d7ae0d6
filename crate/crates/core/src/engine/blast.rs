use std::collections::BTreeSet;

use super::types::{Bomb, Cell, Direction, GameState, Grid, Pos};

/// Cells touched by a blast of range `blast` centred on `origin`.
///
/// Each ray stops before a rigid block and stops after the first wood block.
pub fn blast_cells_on(grid: &Grid<Cell>, origin: Pos, blast: u32) -> Vec<Pos> {
    let mut cells = vec![origin];
    for dir in Direction::ALL {
        let mut p = origin;
        for _ in 0..blast {
            p = p.offset(dir);
            if !p.in_bounds() {
                break;
            }
            let (r, c) = p.idx();
            match grid[r][c] {
                Cell::Rigid => break,
                Cell::Wood => {
                    cells.push(p);
                    break;
                }
                _ => cells.push(p),
            }
        }
    }
    cells
}

/// The cells `bomb` alone would touch if it exploded in `state`.
pub fn blast_cells(state: &GameState, bomb: &Bomb) -> BTreeSet<Pos> {
    blast_cells_on(&state.grid, bomb.pos, bomb.blast).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::new_game;
    use crate::engine::types::GameConfig;

    fn bomb(pos: Pos, blast: u32) -> Bomb {
        Bomb { owner: 0, pos, life: 5, blast, velocity: None }
    }

    fn open_state() -> GameState {
        let cfg = GameConfig { wood_count: 0, item_count: 0, ..GameConfig::default() };
        new_game(&cfg).unwrap()
    }

    #[test]
    fn corner_bomb_on_initial_layout() {
        // (1,1): up/left hit the border, down/right run along the corridors.
        let s = open_state();
        let got = blast_cells(&s, &bomb(Pos::new(1, 1), 2));
        let want: BTreeSet<Pos> =
            [(1, 1), (1, 2), (1, 3), (2, 1), (3, 1)].iter().map(|&(r, c)| Pos::new(r, c)).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn rigid_pillars_block_the_cross() {
        // (1,2) has the border above and a pillar at (2,2): only the row ray extends.
        let s = open_state();
        let got = blast_cells(&s, &bomb(Pos::new(1, 2), 2));
        let want: BTreeSet<Pos> =
            [(1, 2), (1, 1), (1, 3), (1, 4)].iter().map(|&(r, c)| Pos::new(r, c)).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn range_one_is_self_plus_neighbors() {
        let s = open_state();
        for p in Pos::all().filter(|p| s.cell(*p).is_walkable()) {
            let cells = blast_cells(&s, &bomb(p, 1));
            assert!(cells.contains(&p));
            assert!(cells.len() <= 5);
            assert!(cells.iter().all(|c| c.manhattan(p) <= 1));
        }
    }

    #[test]
    fn wood_is_hit_but_shields_beyond() {
        let mut s = open_state();
        s.set_cell(Pos::new(1, 3), Cell::Wood);
        let cells = blast_cells(&s, &bomb(Pos::new(1, 1), 4));
        assert!(cells.contains(&Pos::new(1, 3)));
        assert!(!cells.contains(&Pos::new(1, 4)));
        assert!(cells.contains(&Pos::new(3, 1)));
        assert!(cells.contains(&Pos::new(5, 1)));
    }
}
