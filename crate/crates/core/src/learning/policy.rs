use std::sync::Arc;

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{EncodedObs, Model};
use crate::agents::Policy;
use crate::engine::Action;
use crate::observation::{encode, ActionMask, AgentView};

pub fn encode_obs(view: &AgentView, mask: &ActionMask) -> EncodedObs {
    let (planes, features) = encode(view);
    EncodedObs { planes, features, mask: *mask }
}

/// Samples an action index from `probs` (assumed normalised).
pub fn sample_action(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    match WeightedIndex::new(probs) {
        Ok(d) => d.sample(rng),
        Err(_) => 0,
    }
}

/// Runs a trained network; samples from its policy unless `greedy`.
pub struct LearnedPolicy {
    model: Arc<Model>,
    rng: ChaCha8Rng,
    pub greedy: bool,
}

impl LearnedPolicy {
    pub fn new(model: Arc<Model>, seed: u64) -> Self {
        LearnedPolicy { model, rng: ChaCha8Rng::seed_from_u64(seed), greedy: false }
    }
}

impl Policy for LearnedPolicy {
    fn act(&mut self, view: &AgentView, mask: &ActionMask) -> Action {
        if !view.alive {
            return Action::Stop;
        }
        let (probs, _) = self.model.forward(&encode_obs(view, mask));
        let idx = if self.greedy {
            probs
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map_or(0, |(i, _)| i)
        } else {
            sample_action(&probs, &mut self.rng)
        };
        Action::from_index(idx).unwrap_or(Action::Stop)
    }
}
