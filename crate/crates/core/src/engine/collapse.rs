//! Wall collapse: once the game passes `collapse_start`, one playable cell per
//! step turns rigid, walking a clockwise spiral inward from (1,1).

use std::sync::LazyLock;

use super::types::{GameConfig, Pos, BOARD_SIZE};

pub(crate) fn is_fixed_rigid(p: Pos) -> bool {
    let last = BOARD_SIZE as i32 - 1;
    let border = p.row == 0 || p.col == 0 || p.row == last || p.col == last;
    border || (p.row % 2 == 0 && p.col % 2 == 0)
}

static SPIRAL: LazyLock<Vec<Pos>> = LazyLock::new(|| {
    let n = BOARD_SIZE as i32;
    let mut order = Vec::new();
    let mut ring = 1;
    while ring <= n - 1 - ring {
        let (lo, hi) = (ring, n - 1 - ring);
        let mut cells = Vec::new();
        if lo == hi {
            cells.push(Pos::new(lo, lo));
        } else {
            cells.extend((lo..=hi).map(|c| Pos::new(lo, c)));
            cells.extend((lo + 1..=hi).map(|r| Pos::new(r, hi)));
            cells.extend((lo..hi).rev().map(|c| Pos::new(hi, c)));
            cells.extend((lo + 1..hi).rev().map(|r| Pos::new(r, lo)));
        }
        order.extend(cells.into_iter().filter(|p| !is_fixed_rigid(*p)));
        ring += 1;
    }
    order
});

/// Every non-rigid cell in the order in which collapse fills it.
pub fn collapse_order() -> &'static [Pos] {
    &SPIRAL
}

/// The cell that turns rigid when the clock reaches `t`, if any.
pub fn collapse_cell(config: &GameConfig, t: u32) -> Option<Pos> {
    if t <= config.collapse_start {
        return None;
    }
    let k = (t - config.collapse_start - 1) as usize;
    SPIRAL.get(k).copied()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent enumeration: walk the ring perimeter with a turtle.
    fn ring_by_turtle(ring: i32) -> Vec<Pos> {
        let n = BOARD_SIZE as i32;
        let side = n - 1 - 2 * ring;
        if side == 0 {
            return vec![Pos::new(ring, ring)];
        }
        let mut out = Vec::new();
        let mut p = Pos::new(ring, ring);
        for (dr, dc) in [(0, 1), (1, 0), (0, -1), (-1, 0)] {
            for _ in 0..side {
                out.push(p);
                p = Pos::new(p.row + dr, p.col + dc);
            }
        }
        out
    }

    #[test]
    fn nothing_collapses_until_after_start() {
        let cfg = GameConfig::default();
        assert_eq!(collapse_cell(&cfg, 0), None);
        assert_eq!(collapse_cell(&cfg, 100), None);
        assert_eq!(collapse_cell(&cfg, 101), Some(Pos::new(1, 1)));
    }

    #[test]
    fn spiral_matches_turtle_enumeration() {
        let cfg = GameConfig::default();
        let expected: Vec<Pos> = (1..=5)
            .flat_map(ring_by_turtle)
            .filter(|p| !is_fixed_rigid(*p))
            .collect();
        for (k, p) in expected.iter().enumerate() {
            assert_eq!(collapse_cell(&cfg, 101 + k as u32), Some(*p), "k = {k}");
        }
        assert_eq!(collapse_cell(&cfg, 101 + expected.len() as u32), None);
    }

    #[test]
    fn ring_one_is_consumed_after_its_perimeter() {
        let cfg = GameConfig::default();
        // Ring 1 has no pillars: its 32 cells go first, then ring 2 begins at (2,3).
        let ring1 = ring_by_turtle(1);
        assert_eq!(ring1.len(), 32);
        assert_eq!(collapse_cell(&cfg, 101 + 31), Some(Pos::new(2, 1)));
        assert_eq!(collapse_cell(&cfg, 101 + 32), Some(Pos::new(2, 3)));
    }

    #[test]
    fn every_playable_cell_collapses_exactly_once() {
        let order = collapse_order();
        let mut seen = std::collections::HashSet::new();
        for p in order {
            assert!(seen.insert(*p));
        }
        let playable = Pos::all().filter(|p| !is_fixed_rigid(*p)).count();
        assert_eq!(order.len(), playable);
        assert_eq!(playable, 65);
    }
}
