use super::types::{GameState, NUM_AGENTS};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

impl GameState {
    /// Stable byte encoding of everything that affects future play.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(512);
        out.extend_from_slice(&self.t.to_le_bytes());
        for cell in self.grid.iter().flatten() {
            out.push(cell.code());
        }
        for hidden in self.hidden.iter().flatten() {
            out.push(hidden.map_or(0, |k| k as u8 + 1));
        }
        for a in &self.agents {
            out.extend_from_slice(&[a.id as u8, a.pos.row as u8, a.pos.col as u8, a.alive as u8, a.can_kick as u8]);
            out.extend_from_slice(&a.ammo.to_le_bytes());
            out.extend_from_slice(&a.blast.to_le_bytes());
        }
        out.extend_from_slice(&(self.bombs.len() as u32).to_le_bytes());
        for b in &self.bombs {
            out.extend_from_slice(&[b.owner as u8, b.pos.row as u8, b.pos.col as u8]);
            out.extend_from_slice(&b.life.to_le_bytes());
            out.extend_from_slice(&b.blast.to_le_bytes());
            out.push(b.velocity.map_or(0, |d| d as u8 + 1));
        }
        out.extend_from_slice(&(self.flames.len() as u32).to_le_bytes());
        for f in &self.flames {
            out.extend_from_slice(&[f.pos.row as u8, f.pos.col as u8]);
            out.extend_from_slice(&f.life.to_le_bytes());
        }
        out.extend_from_slice(&self.items_lost.to_le_bytes());
        out.extend_from_slice(&self.rng.get_word_pos().to_le_bytes());
        debug_assert_eq!(self.agents.len(), NUM_AGENTS);
        out
    }

    pub fn state_hash(&self) -> u64 {
        fnv1a64(&self.canonical_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }
}
