//! Actor-critic network, A3C updates, shaped rewards, checkpoints and the
//! three-phase curriculum.

mod a3c;
mod checkpoint;
mod model;
mod policy;
mod reward;
mod train;

pub use a3c::{
    a3c_update, head_gradients, trajectory_gradients, ActorCritic, Hyper, LossStats, OptimizerKind,
    OptimizerState, ParameterServer, ServerState, Trajectory, Transition, UpdateStats,
};
pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint, CheckpointMeta,
    LineageEntry, FORMAT_VERSION,
};
pub use model::{num_params, softmax, EncodedObs, ForwardCache, Model, TensorSpec, CONV_CHANNELS, HIDDEN, LAYOUT};
pub use policy::{encode_obs, sample_action, LearnedPolicy};
pub use reward::{shaped_reward, terminal_reward, Phase, RewardSpec};
pub use train::*;
