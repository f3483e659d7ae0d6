//! Deterministic 2v2 Pommerman variant on a fixed 11x11 pillar layout.
//!
//! A step resolves in a fixed order: bomb timers, simultaneous movement
//! (with cancellation of contested moves and kicks), bomb placement,
//! chained explosions, flames and wood, deaths and pickups, wall collapse,
//! then the clock.

mod blast;
mod collapse;
mod hash;
mod outcome;
mod setup;
mod step;
mod types;

pub use blast::{blast_cells, blast_cells_on};
pub use collapse::{collapse_cell, collapse_order};
pub use hash::fnv1a64;
pub use outcome::{outcome, HumanOutcome, Outcome, OutcomeMode};
pub use setup::new_game;
pub use step::{simulate, step, DeathCause, Event, EventList};
pub use types::*;
