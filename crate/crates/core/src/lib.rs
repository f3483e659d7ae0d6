//! Team Pommerman with teammate communication: a deterministic engine,
//! fogged observations, scripted and learned agents, curriculum training,
//! replays, and analytics for annotated human dialogue.

pub mod agents;
pub mod arena;
pub mod comm;
pub mod engine;
pub mod error;
pub mod learning;
pub mod observation;
pub mod replay;
#[cfg(feature = "server")]
pub mod playserver;
pub mod transcripts;

pub use error::{Error, Result};
