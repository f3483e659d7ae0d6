//! Advantage actor-critic updates against a shared parameter store.
//!
//! Workers roll out with a (possibly stale) local copy, compute n-step
//! gradients with it and hand them to the [`ParameterServer`], which clips,
//! validates and applies them atomically.

use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::model::{softmax, EncodedObs, ForwardCache, Model};
use crate::engine::NUM_ACTIONS;
use crate::error::{Error, Result};

/// Anything with a softmax policy head and a scalar value head.
pub trait ActorCritic: Clone + Send + Sync {
    type Obs: Clone + Send + Sync;
    type Cache;

    fn num_actions(&self) -> usize;
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];
    /// Returns the cache plus `[batch][num_actions]` logits and `[batch]` values.
    fn forward_train(&self, obs: &[&Self::Obs]) -> (Self::Cache, Vec<f64>, Vec<f64>);
    fn backward(&self, cache: &Self::Cache, d_logits: &[f64], d_values: &[f64]) -> Vec<f64>;
}

impl ActorCritic for Model {
    type Obs = EncodedObs;
    type Cache = ForwardCache;

    fn num_actions(&self) -> usize {
        NUM_ACTIONS
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn forward_train(&self, obs: &[&EncodedObs]) -> (ForwardCache, Vec<f64>, Vec<f64>) {
        let cache = self.forward_batch(obs);
        let (logits, values) = (cache.logits.clone(), cache.values.clone());
        (cache, logits, values)
    }

    fn backward(&self, cache: &ForwardCache, d_logits: &[f64], d_values: &[f64]) -> Vec<f64> {
        Model::backward(self, cache, d_logits, d_values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd { lr: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn adam(lr: f64) -> Self {
        OptimizerKind::Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyper {
    pub n_step: usize,
    pub gamma: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    /// Global L2 norm limit; `None` disables clipping.
    pub grad_clip: Option<f64>,
    pub optimizer: OptimizerKind,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            n_step: 20,
            gamma: 0.99,
            entropy_coef: 0.01,
            value_coef: 0.5,
            grad_clip: Some(40.0),
            optimizer: OptimizerKind::adam(1e-3),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition<O> {
    pub obs: O,
    pub action: usize,
    pub reward: f64,
}

/// Up to `n_step` consecutive transitions. `bootstrap` is the value
/// estimate after the last one, or 0 when the episode ended there.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<O> {
    pub steps: Vec<Transition<O>>,
    pub bootstrap: f64,
}

impl<O> Trajectory<O> {
    pub fn returns(&self, gamma: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.steps.len()];
        let mut acc = self.bootstrap;
        for (i, s) in self.steps.iter().enumerate().rev() {
            acc = s.reward + gamma * acc;
            out[i] = acc;
        }
        out
    }
}

/// Loss gradient w.r.t. one step's logits and value for
/// `L = -A log p_a + c_v (R - V)^2 / 2 - beta H(p)`, with the advantage
/// `A = R - V` held constant.
pub fn head_gradients(probs: &[f64], value: f64, action: usize, ret: f64, hyper: &Hyper) -> (Vec<f64>, f64) {
    let adv = ret - value;
    let plogp = |p: f64| if p > 0.0 { p * p.ln() } else { 0.0 };
    let entropy: f64 = -probs.iter().map(|&p| plogp(p)).sum::<f64>();
    let d_logits = probs
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let onehot = if j == action { 1.0 } else { 0.0 };
            let log_p = if p > 0.0 { p.ln() } else { 0.0 };
            -adv * (onehot - p) + hyper.entropy_coef * p * (log_p + entropy)
        })
        .collect();
    (d_logits, -hyper.value_coef * adv)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub grad_norm: f64,
}

pub fn trajectory_gradients<M: ActorCritic>(model: &M, traj: &Trajectory<M::Obs>, hyper: &Hyper) -> (Vec<f64>, LossStats) {
    let n = traj.steps.len();
    let k = model.num_actions();
    if n == 0 {
        return (vec![0.0; model.params().len()], LossStats::default());
    }
    let obs: Vec<&M::Obs> = traj.steps.iter().map(|s| &s.obs).collect();
    let (cache, logits, values) = model.forward_train(&obs);
    let returns = traj.returns(hyper.gamma);
    let mut d_logits = Vec::with_capacity(n * k);
    let mut d_values = Vec::with_capacity(n);
    let mut stats = LossStats::default();
    for (i, step) in traj.steps.iter().enumerate() {
        let probs = softmax(&logits[i * k..(i + 1) * k]);
        let (dl, dv) = head_gradients(&probs, values[i], step.action, returns[i], hyper);
        let adv = returns[i] - values[i];
        stats.policy_loss -= adv * probs[step.action].max(1e-300).ln();
        stats.value_loss += 0.5 * adv * adv;
        stats.entropy -= probs.iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>();
        d_logits.extend(dl);
        d_values.push(dv);
    }
    let grad = model.backward(&cache, &d_logits, &d_values);
    stats.grad_norm = l2(&grad);
    (grad, stats)
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, n: usize) -> Self {
        let (m, v) = match kind {
            OptimizerKind::Sgd { .. } => (Vec::new(), Vec::new()),
            OptimizerKind::Adam { .. } => (vec![0.0; n], vec![0.0; n]),
        };
        OptimizerState { kind, t: 0, m, v }
    }

    fn apply(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        match self.kind {
            OptimizerKind::Sgd { lr } => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= lr * g;
                }
            }
            OptimizerKind::Adam { lr, beta1, beta2, eps } => {
                let t = self.t as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                for i in 0..params.len() {
                    self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * grad[i];
                    self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * grad[i] * grad[i];
                    params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + eps);
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ServerState<M> {
    pub model: M,
    pub optimizer: OptimizerState,
    pub updates: u64,
    pub rejected: u64,
}

/// Shared parameters. Every update is applied under one lock, so readers
/// never observe a half-written parameter vector.
#[derive(Debug)]
pub struct ParameterServer<M> {
    state: Mutex<ServerState<M>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateStats {
    pub applied: bool,
    pub loss: LossStats,
    pub update_index: u64,
}

impl<M: ActorCritic> ParameterServer<M> {
    pub fn new(model: M, kind: OptimizerKind) -> Self {
        let n = model.params().len();
        ParameterServer::from_state(ServerState { model, optimizer: OptimizerState::new(kind, n), updates: 0, rejected: 0 })
    }

    pub fn from_state(state: ServerState<M>) -> Self {
        ParameterServer { state: Mutex::new(state) }
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, ServerState<M>> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn snapshot(&self) -> M {
        self.lock().model.clone()
    }

    pub fn state(&self) -> ServerState<M> {
        self.lock().clone()
    }

    /// Clips and applies a gradient. Non-finite gradients are dropped.
    pub fn apply(&self, mut grad: Vec<f64>, clip: Option<f64>) -> Result<bool> {
        let mut st = self.lock();
        if grad.len() != st.model.params().len() {
            return Err(Error::Contract(format!(
                "gradient has {} entries, model has {}",
                grad.len(),
                st.model.params().len()
            )));
        }
        let norm = l2(&grad);
        if !norm.is_finite() {
            st.rejected += 1;
            log::warn!("rejected non-finite gradient (update {})", st.updates);
            return Ok(false);
        }
        if let Some(max) = clip {
            if norm > max {
                let scale = max / norm;
                grad.iter_mut().for_each(|g| *g *= scale);
            }
        }
        let ServerState { model, optimizer, updates, .. } = &mut *st;
        optimizer.apply(model.params_mut(), &grad);
        *updates += 1;
        Ok(true)
    }
}

/// One asynchronous update: gradients from `local` (the parameters the
/// trajectory was collected with) applied to the shared store.
pub fn a3c_update<M: ActorCritic>(
    shared: &ParameterServer<M>,
    local: &M,
    traj: &Trajectory<M::Obs>,
    hyper: &Hyper,
) -> Result<UpdateStats> {
    let (grad, loss) = trajectory_gradients(local, traj, hyper);
    let applied = shared.apply(grad, hyper.grad_clip)?;
    let update_index = shared.lock().updates;
    Ok(UpdateStats { applied, loss, update_index })
}
