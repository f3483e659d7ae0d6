//! Teammate communication: every step each agent shares its own position,
//! and when it can see the team's target enemy it also shares that enemy's
//! position, which the receiver encodes as if it had seen the enemy itself.

use serde::{Deserialize, Serialize};

use crate::engine::{are_enemies, teammate, AgentId, GameState, Pos};
use crate::error::{Error, Result};
use crate::observation::AgentView;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommPacket {
    pub sender_id: AgentId,
    pub sender_pos: Pos,
    pub target_pos: Option<Pos>,
    pub target_id: Option<AgentId>,
}

/// The first enemy either teammate sights becomes the team's target for
/// the rest of the game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TargetTracker {
    pub target_id: Option<AgentId>,
    pub first_seen_t: Option<u32>,
}

impl TargetTracker {
    pub fn update(self, views: [&AgentView; 2], t: u32) -> TargetTracker {
        update_target(self, views, t)
    }
}

pub fn update_target(tracker: TargetTracker, views: [&AgentView; 2], t: u32) -> TargetTracker {
    if tracker.target_id.is_some() {
        return tracker;
    }
    let sighted = views
        .iter()
        .filter(|v| v.alive)
        .flat_map(|v| v.visible_enemies().map(|(id, _)| id))
        .min();
    match sighted {
        Some(id) => TargetTracker { target_id: Some(id), first_seen_t: Some(t) },
        None => tracker,
    }
}

/// Builds `sender`'s packet for this step; `None` when the sender is dead.
pub fn make_packet(state: &GameState, sender_id: AgentId, tracker: &TargetTracker) -> Option<CommPacket> {
    let sender = &state.agents[sender_id];
    if !sender.alive {
        return None;
    }
    let radius = state.config.view_radius;
    let target = tracker.target_id.map(|id| &state.agents[id]);
    let target_pos = target
        .filter(|a| a.alive && a.pos.chebyshev(sender.pos) <= radius)
        .map(|a| a.pos);
    Some(CommPacket {
        sender_id,
        sender_pos: sender.pos,
        target_pos,
        target_id: tracker.target_id,
    })
}

/// Attaches a teammate's packet to `view`. Hallucinated positions never
/// overwrite what the receiver observes itself; encoding applies them
/// beneath direct sightings.
pub fn inject(mut view: AgentView, packet: CommPacket) -> Result<AgentView> {
    if packet.sender_id != teammate(view.self_id) {
        return Err(Error::Protocol(format!(
            "agent {} cannot receive a packet from non-teammate {}",
            view.self_id, packet.sender_id
        )));
    }
    if let Some(target) = packet.target_id {
        if !are_enemies(view.self_id, target) {
            return Err(Error::Protocol(format!("target {target} is not an enemy of {}", view.self_id)));
        }
    }
    view.comm = Some(packet);
    Ok(view)
}
