//! Human data-collection server: two humans against scripted opponents,
//! with chat, over a versioned JSON WebSocket protocol.

pub mod protocol;
mod server;
pub mod session;

pub use protocol::{ClientMsg, ClientView, ServerMsg, PROTOCOL_VERSION};
pub use server::{router, serve, ServerConfig};
pub use session::{Session, SessionConfig, SessionPhase, HUMAN_SEATS};
