//! Scripted policies used as curriculum opponents and evaluation baselines,
//! plus the [`Policy`] trait every controller implements.

mod simple;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::engine::Action;
use crate::error::{Error, Result};
use crate::learning::{load_checkpoint, LearnedPolicy, Model};
use crate::observation::{ActionMask, AgentView};

pub use simple::SimplePolicy;

pub trait Policy: Send {
    fn act(&mut self, view: &AgentView, mask: &ActionMask) -> Action;
}

/// Where a learned policy's parameters come from.
#[derive(Clone)]
pub enum LearnedSource {
    Checkpoint(PathBuf),
    Shared { name: String, model: Arc<Model> },
}

impl fmt::Debug for LearnedSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearnedSource::Checkpoint(p) => write!(f, "Checkpoint({})", p.display()),
            LearnedSource::Shared { name, .. } => write!(f, "Shared({name})"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum PolicyKind {
    Static,
    RandomNoBomb,
    Random,
    Simple,
    Learned(LearnedSource),
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::Static => f.write_str("static"),
            PolicyKind::RandomNoBomb => f.write_str("random-no-bomb"),
            PolicyKind::Random => f.write_str("random"),
            PolicyKind::Simple => f.write_str("simple"),
            PolicyKind::Learned(LearnedSource::Checkpoint(p)) => write!(f, "learned:{}", p.display()),
            PolicyKind::Learned(LearnedSource::Shared { name, .. }) => write!(f, "learned-mem:{name}"),
        }
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "static" => PolicyKind::Static,
            "random-no-bomb" | "random_no_bomb" => PolicyKind::RandomNoBomb,
            "random" => PolicyKind::Random,
            "simple" => PolicyKind::Simple,
            _ => match s.strip_prefix("learned:") {
                Some(path) if !path.is_empty() => PolicyKind::Learned(LearnedSource::Checkpoint(path.into())),
                _ => return Err(Error::Config(format!("unknown policy kind `{s}`"))),
            },
        })
    }
}

#[derive(Debug, Clone)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    pub seed: u64,
}

impl PolicySpec {
    pub fn new(kind: PolicyKind, seed: u64) -> Self {
        PolicySpec { kind, seed }
    }

    pub fn build(&self) -> Result<Box<dyn Policy>> {
        Ok(match &self.kind {
            PolicyKind::Static => Box::new(StaticPolicy),
            PolicyKind::RandomNoBomb => Box::new(RandomPolicy::new(self.seed, false)),
            PolicyKind::Random => Box::new(RandomPolicy::new(self.seed, true)),
            PolicyKind::Simple => Box::new(SimplePolicy::new(self.seed)),
            PolicyKind::Learned(LearnedSource::Checkpoint(path)) => {
                let ckpt = load_checkpoint(path)?;
                Box::new(LearnedPolicy::new(Arc::new(ckpt.model), self.seed))
            }
            PolicyKind::Learned(LearnedSource::Shared { model, .. }) => {
                Box::new(LearnedPolicy::new(Arc::clone(model), self.seed))
            }
        })
    }
}

/// Never moves, never bombs.
pub struct StaticPolicy;

impl Policy for StaticPolicy {
    fn act(&mut self, _view: &AgentView, _mask: &ActionMask) -> Action {
        Action::Stop
    }
}

/// Uniform over all six actions, or over the five non-bomb actions.
pub struct RandomPolicy {
    rng: ChaCha8Rng,
    bombs: bool,
}

impl RandomPolicy {
    pub fn new(seed: u64, bombs: bool) -> Self {
        RandomPolicy { rng: ChaCha8Rng::seed_from_u64(seed), bombs }
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, _view: &AgentView, _mask: &ActionMask) -> Action {
        let choices = if self.bombs { &Action::ALL[..] } else { &Action::ALL[..5] };
        *choices.choose(&mut self.rng).expect("non-empty action set")
    }
}
