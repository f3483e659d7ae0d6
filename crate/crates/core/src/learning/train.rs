//! Curriculum training: phase 1 against static opponents, phase 2 against
//! random movers that never bomb, phase 3 against the heuristic agent,
//! where training forks into a communicating and a silent arm.

use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::a3c::{a3c_update, Hyper, ParameterServer, Trajectory, Transition, UpdateStats};
use super::checkpoint::{save_checkpoint, Checkpoint, CheckpointMeta, LineageEntry};
use super::model::{EncodedObs, Model};
use super::policy::{encode_obs, sample_action};
use super::reward::{shaped_reward, Phase, RewardSpec};
use crate::agents::{LearnedSource, Policy, PolicyKind, PolicySpec};
use crate::arena::{policy_seed, run_match_traced, SeriesSummary, TeamComms};
use crate::engine::{
    are_enemies, new_game, outcome, step, teammate, Action, AgentId, Event, GameConfig, GameState, Outcome,
    OutcomeMode, Team, NUM_AGENTS,
};
use crate::error::{Error, Result};
use crate::observation::suggest_actions;

pub fn phase_opponent(phase: Phase) -> PolicyKind {
    match phase.0 {
        1 => PolicyKind::Static,
        2 => PolicyKind::RandomNoBomb,
        _ => PolicyKind::Simple,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// Workers take turns on one thread; fully deterministic.
    RoundRobin,
    /// One OS thread per worker. With `lockstep` the threads still take
    /// turns in worker order, which reproduces `RoundRobin` exactly.
    Threads { lockstep: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub game: GameConfig,
    pub hyper: Hyper,
    pub rewards: RewardSpec,
    pub workers: usize,
    /// Environment steps per phase.
    pub phase_steps: [u64; 3],
    pub eval_every: u64,
    pub eval_matches: usize,
    pub seed: u64,
    pub schedule: Schedule,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            game: GameConfig::default(),
            hyper: Hyper::default(),
            rewards: RewardSpec::default(),
            workers: 8,
            phase_steps: [200_000, 200_000, 200_000],
            eval_every: 25_000,
            eval_matches: 20,
            seed: 0,
            schedule: Schedule::RoundRobin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub arm: String,
    pub phase: u8,
    pub comm: bool,
    /// Steps within this phase when the record was taken.
    pub step: u64,
    pub updates: u64,
    pub matches: usize,
    pub win: usize,
    pub tie: usize,
    pub lose: usize,
    pub mean_return: f64,
    pub wood_per_episode: f64,
    pub train_episodes: u64,
    pub train_mean_return: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub series: SeriesSummary,
    pub mean_return: f64,
    pub wood_per_episode: f64,
}

/// Plays `matches` games with `model` on both team-A seats against the
/// phase opponent, scoring team A's shaped return under `phase` rewards.
pub fn evaluate(
    model: &Arc<Model>,
    opponent: PolicyKind,
    phase: Phase,
    comm: bool,
    game: &GameConfig,
    rewards: &RewardSpec,
    base_seed: u64,
    matches: usize,
) -> Result<EvalSummary> {
    let learned = PolicyKind::Learned(LearnedSource::Shared { name: "eval".into(), model: Arc::clone(model) });
    let team_a = [PolicySpec::new(learned.clone(), 1), PolicySpec::new(learned, 2)];
    let team_b = [PolicySpec::new(opponent.clone(), 3), PolicySpec::new(opponent, 4)];
    let mut out = EvalSummary::default();
    let (mut ret, mut wood) = (0.0, 0.0);
    for k in 0..matches as u64 {
        let mut done = [false; NUM_AGENTS];
        let m = run_match_traced(&team_a, &team_b, game, base_seed.wrapping_add(k), comm, false, &mut |info| {
            for a in Team::A.members() {
                if !done[a] {
                    ret += shaped_reward(info.events, a, info.outcome, phase, rewards) / 2.0;
                    done[a] = !info.after.agents[a].alive;
                }
            }
            wood += info
                .events
                .iter()
                .filter(|e| matches!(e, Event::WoodDestroyed { by, .. } if by.iter().any(|&o| Team::of(o) == Team::A)))
                .count() as f64;
        })?;
        out.series.add(&m);
    }
    if matches > 0 {
        out.mean_return = ret / matches as f64;
        out.wood_per_episode = wood / matches as f64;
    }
    Ok(out)
}

struct Episode {
    state: GameState,
    learner: AgentId,
    opponents: Vec<(AgentId, Box<dyn Policy>)>,
    comms: TeamComms,
    ret: f64,
}

pub struct Worker {
    rng: ChaCha8Rng,
    phase: Phase,
    comm: bool,
    episode: Option<Episode>,
    pub episodes: u64,
    pub return_sum: f64,
}

impl Worker {
    pub fn new(seed: u64, phase: Phase, comm: bool) -> Self {
        Worker { rng: ChaCha8Rng::seed_from_u64(seed), phase, comm, episode: None, episodes: 0, return_sum: 0.0 }
    }

    fn start(&mut self, game: &GameConfig) -> Result<Episode> {
        let seed: u64 = self.rng.random();
        let learner: AgentId = self.rng.random_range(0..NUM_AGENTS);
        let state = new_game(&game.clone().with_seed(seed))?;
        let kind = phase_opponent(self.phase);
        let opponents = (0..NUM_AGENTS)
            .filter(|&i| are_enemies(i, learner))
            .map(|i| Ok((i, PolicySpec::new(kind.clone(), policy_seed(seed, 0, i)).build()?)))
            .collect::<Result<_>>()?;
        let slot = Team::of(learner) as usize;
        let mut enabled = [false; 2];
        enabled[slot] = self.comm;
        Ok(Episode { state, learner, opponents, comms: TeamComms { enabled, trackers: Default::default() }, ret: 0.0 })
    }

    fn learner_obs(ep: &mut Episode) -> Result<(EncodedObs, [crate::observation::AgentView; NUM_AGENTS])> {
        let views = ep.comms.views(&ep.state)?;
        let mask = suggest_actions(&ep.state, ep.learner);
        Ok((encode_obs(&views[ep.learner], &mask), views))
    }

    /// Collects up to `n_step` learner transitions with `local`.
    pub fn rollout(
        &mut self,
        local: &Model,
        game: &GameConfig,
        rewards: &RewardSpec,
        n_step: usize,
    ) -> Result<Trajectory<EncodedObs>> {
        let mut steps = Vec::with_capacity(n_step);
        while steps.len() < n_step {
            let mut ep = match self.episode.take() {
                Some(ep) => ep,
                None => self.start(game)?,
            };
            let (obs, views) = Self::learner_obs(&mut ep)?;
            let mut actions = [Action::Stop; NUM_AGENTS];
            let (probs, _) = local.forward(&obs);
            let a = sample_action(&probs, &mut self.rng);
            actions[ep.learner] = Action::from_index(a).unwrap_or(Action::Stop);

            let mate = teammate(ep.learner);
            if ep.state.agents[mate].alive && self.phase != Phase::STATIC {
                let mask = suggest_actions(&ep.state, mate);
                let (p, _) = local.forward(&encode_obs(&views[mate], &mask));
                actions[mate] = Action::from_index(sample_action(&p, &mut self.rng)).unwrap_or(Action::Stop);
            }
            let needs_mask = self.phase == Phase::SIMPLE;
            for (i, pol) in ep.opponents.iter_mut() {
                if ep.state.agents[*i].alive {
                    let mask = if needs_mask { suggest_actions(&ep.state, *i) } else { Default::default() };
                    actions[*i] = pol.act(&views[*i], &mask);
                }
            }

            let (next, events) = step(&ep.state, actions)?;
            let result = outcome(&next, &OutcomeMode::AgentMatch);
            let reward = shaped_reward(&events, ep.learner, result, self.phase, rewards);
            ep.ret += reward;
            steps.push(Transition { obs, action: a, reward });
            let done = result != Outcome::Ongoing || !next.agents[ep.learner].alive;
            ep.state = next;
            if done {
                self.episodes += 1;
                self.return_sum += ep.ret;
                return Ok(Trajectory { steps, bootstrap: 0.0 });
            }
            self.episode = Some(ep);
        }
        let ep = self.episode.as_mut().expect("episode in progress");
        let (obs, _) = Self::learner_obs(ep)?;
        let (_, value) = local.forward(&obs);
        Ok(Trajectory { steps, bootstrap: value })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhaseReport {
    pub steps: u64,
    pub updates: u64,
    pub rejected: u64,
    pub episodes: u64,
    pub metrics: Vec<MetricRecord>,
}

struct PhaseCtx<'a> {
    server: &'a ParameterServer<Model>,
    cfg: &'a TrainConfig,
    phase: Phase,
    comm: bool,
    arm: &'a str,
}

impl PhaseCtx<'_> {
    fn worker_seed(&self, w: usize) -> u64 {
        policy_seed(self.cfg.seed, ((self.phase.0 as u64) << 8) | self.comm as u64, w)
    }

    fn one_update(&self, worker: &mut Worker) -> Result<(u64, UpdateStats)> {
        let local = self.server.snapshot();
        let traj = worker.rollout(&local, &self.cfg.game, &self.cfg.rewards, self.cfg.hyper.n_step)?;
        let stats = a3c_update(self.server, &local, &traj, &self.cfg.hyper)?;
        Ok((traj.steps.len() as u64, stats))
    }

    fn metric(&self, steps: u64, workers_eps: u64, workers_ret: f64, last: &UpdateStats, eval_idx: u64) -> Result<MetricRecord> {
        let model = Arc::new(self.server.snapshot());
        let base = policy_seed(self.cfg.seed ^ 0xE7A1, eval_idx, self.phase.0 as usize);
        let ev = evaluate(
            &model,
            phase_opponent(self.phase),
            self.phase,
            self.comm,
            &self.cfg.game,
            &self.cfg.rewards,
            base,
            self.cfg.eval_matches,
        )?;
        Ok(MetricRecord {
            arm: self.arm.to_string(),
            phase: self.phase.0,
            comm: self.comm,
            step: steps,
            updates: self.server.state().updates,
            matches: ev.series.matches,
            win: ev.series.wins,
            tie: ev.series.ties,
            lose: ev.series.losses,
            mean_return: ev.mean_return,
            wood_per_episode: ev.wood_per_episode,
            train_episodes: workers_eps,
            train_mean_return: if workers_eps > 0 { workers_ret / workers_eps as f64 } else { 0.0 },
            entropy: last.loss.entropy,
        })
    }
}

const MAX_CONSECUTIVE_REJECTS: u64 = 50;

/// Trains on `server` for `cfg.phase_steps[phase - 1]` environment steps.
pub fn train_phase(
    server: &ParameterServer<Model>,
    cfg: &TrainConfig,
    phase: Phase,
    comm: bool,
    arm: &str,
    on_metric: &mut dyn FnMut(&MetricRecord),
) -> Result<PhaseReport> {
    if cfg.workers == 0 || cfg.hyper.n_step == 0 {
        return Err(Error::Config("workers and n_step must be positive".into()));
    }
    let budget = cfg.phase_steps[(phase.0.clamp(1, 3) - 1) as usize];
    let ctx = PhaseCtx { server, cfg, phase, comm, arm };
    let start = server.state();
    match cfg.schedule {
        Schedule::RoundRobin => round_robin(&ctx, budget, start.rejected, on_metric),
        Schedule::Threads { lockstep } => {
            let report = threaded(&ctx, budget, lockstep, start.rejected)?;
            report.metrics.iter().for_each(&mut *on_metric);
            Ok(report)
        }
    }
}

fn round_robin(ctx: &PhaseCtx, budget: u64, rejected0: u64, on_metric: &mut dyn FnMut(&MetricRecord)) -> Result<PhaseReport> {
    let mut workers: Vec<Worker> = (0..ctx.cfg.workers).map(|w| Worker::new(ctx.worker_seed(w), ctx.phase, ctx.comm)).collect();
    let mut report = PhaseReport::default();
    let every = ctx.cfg.eval_every.max(1);
    let mut next_eval = every;
    let mut streak = 0;
    let mut turn = 0;
    while report.steps < budget {
        let k = turn % workers.len();
        let (n, stats) = ctx.one_update(&mut workers[k])?;
        turn += 1;
        report.steps += n;
        report.updates += 1;
        streak = if stats.applied { 0 } else { streak + 1 };
        if streak >= MAX_CONSECUTIVE_REJECTS {
            return Err(Error::Diverged { step: report.steps, reason: "gradients stayed non-finite".into() });
        }
        if ctx.cfg.eval_matches > 0 && report.steps >= next_eval && report.steps < budget {
            let (eps, ret) = totals(&workers);
            let rec = ctx.metric(report.steps, eps, ret, &stats, next_eval)?;
            next_eval += every;
            on_metric(&rec);
            report.metrics.push(rec);
        }
    }
    finish(ctx, &mut report, &workers, rejected0, on_metric)?;
    Ok(report)
}

fn totals(workers: &[Worker]) -> (u64, f64) {
    workers.iter().fold((0, 0.0), |(e, r), w| (e + w.episodes, r + w.return_sum))
}

fn finish(
    ctx: &PhaseCtx,
    report: &mut PhaseReport,
    workers: &[Worker],
    rejected0: u64,
    on_metric: &mut dyn FnMut(&MetricRecord),
) -> Result<()> {
    let (eps, ret) = totals(workers);
    report.episodes = eps;
    report.rejected = ctx.server.state().rejected - rejected0;
    if ctx.cfg.eval_matches > 0 {
        let stats = UpdateStats { applied: true, loss: Default::default(), update_index: 0 };
        let mut rec = ctx.metric(report.steps, eps, ret, &stats, u64::MAX)?;
        rec.entropy = report.metrics.last().map_or(0.0, |m| m.entropy);
        on_metric(&rec);
        report.metrics.push(rec);
    }
    Ok(())
}

fn threaded(ctx: &PhaseCtx, budget: u64, lockstep: bool, rejected0: u64) -> Result<PhaseReport> {
    let n = ctx.cfg.workers;
    let steps = AtomicU64::new(0);
    let updates = AtomicU64::new(0);
    let turn = (Mutex::new(0usize), Condvar::new());
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let done_workers: Mutex<Vec<Worker>> = Mutex::new(Vec::new());

    std::thread::scope(|s| {
        for w in 0..n {
            let (steps, updates, turn, failure, done_workers) = (&steps, &updates, &turn, &failure, &done_workers);
            s.spawn(move || {
                let mut worker = Worker::new(ctx.worker_seed(w), ctx.phase, ctx.comm);
                loop {
                    let mut slot = None;
                    if lockstep {
                        let mut g = turn.0.lock().unwrap_or_else(|e| e.into_inner());
                        while *g % n != w {
                            g = turn.1.wait(g).unwrap_or_else(|e| e.into_inner());
                        }
                        slot = Some(g);
                    }
                    let stop = steps.load(Ordering::SeqCst) >= budget
                        || failure.lock().unwrap_or_else(|e| e.into_inner()).is_some();
                    if !stop {
                        match ctx.one_update(&mut worker) {
                            Ok((k, _)) => {
                                steps.fetch_add(k, Ordering::SeqCst);
                                updates.fetch_add(1, Ordering::SeqCst);
                            }
                            Err(e) => *failure.lock().unwrap_or_else(|e| e.into_inner()) = Some(e),
                        }
                    }
                    if let Some(mut g) = slot {
                        *g += 1;
                        turn.1.notify_all();
                    }
                    if stop {
                        break;
                    }
                }
                done_workers.lock().unwrap_or_else(|e| e.into_inner()).push(worker);
            });
        }
    });

    if let Some(e) = failure.into_inner().unwrap_or_else(|e| e.into_inner()) {
        return Err(e);
    }
    let workers = done_workers.into_inner().unwrap_or_else(|e| e.into_inner());
    let mut report = PhaseReport { steps: steps.into_inner(), updates: updates.into_inner(), ..Default::default() };
    finish(ctx, &mut report, &workers, rejected0, &mut |_| {})?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct CurriculumOutput {
    /// After phases 1 and 2 (the random-opponent model).
    pub base: Checkpoint,
    pub comm: Checkpoint,
    pub no_comm: Checkpoint,
    pub metrics: Vec<MetricRecord>,
}

fn lineage(phase: Phase, steps: u64, comm: bool) -> LineageEntry {
    LineageEntry { phase: phase.0, steps, comm, opponent: phase_opponent(phase).to_string() }
}

fn checkpoint(server: &ParameterServer<Model>, name: &str, seed: u64, comm: bool, lineage: Vec<LineageEntry>) -> Checkpoint {
    let total_steps = lineage.iter().map(|l| l.steps).sum();
    Checkpoint { model: server.snapshot(), meta: CheckpointMeta { name: name.into(), seed, comm, total_steps, lineage } }
}

/// Phases 1 and 2 without communication, then phase 3 twice from the same
/// parameters and optimiser state: once with communication, once without.
/// On divergence the last parameters are written to
/// `diverged-<arm>.pwck` in `out_dir` before the error is returned.
pub fn train_curriculum(
    cfg: &TrainConfig,
    out_dir: Option<&Path>,
    on_metric: &mut dyn FnMut(&MetricRecord),
) -> Result<CurriculumOutput> {
    let server = ParameterServer::new(Model::init(cfg.seed), cfg.hyper.optimizer);
    let mut metrics = Vec::new();
    let mut history = Vec::new();
    let guard = |server: &ParameterServer<Model>, arm: &str, r: Result<PhaseReport>| -> Result<PhaseReport> {
        if let (Err(Error::Diverged { .. }), Some(dir)) = (&r, out_dir) {
            let ck = checkpoint(server, arm, cfg.seed, false, Vec::new());
            if let Err(e) = save_checkpoint(&dir.join(format!("diverged-{arm}.pwck")), &ck) {
                log::error!("could not save divergence checkpoint: {e}");
            }
        }
        r
    };
    for phase in [Phase::STATIC, Phase::RANDOM] {
        let r = guard(&server, "base", train_phase(&server, cfg, phase, false, "base", on_metric))?;
        log::info!("phase {} done: {} steps, {} episodes", phase.0, r.steps, r.episodes);
        history.push(lineage(phase, r.steps, false));
        metrics.extend(r.metrics);
    }
    let base = checkpoint(&server, "vs-random", cfg.seed, false, history.clone());

    let mut arms = Vec::new();
    for (comm, arm) in [(true, "comm"), (false, "no-comm")] {
        let fork = ParameterServer::from_state(server.state());
        let r = guard(&fork, arm, train_phase(&fork, cfg, Phase::SIMPLE, comm, arm, on_metric))?;
        log::info!("phase 3 ({arm}) done: {} steps, {} episodes", r.steps, r.episodes);
        let mut h = history.clone();
        h.push(lineage(Phase::SIMPLE, r.steps, comm));
        metrics.extend(r.metrics);
        arms.push(checkpoint(&fork, arm, cfg.seed, comm, h));
    }
    let no_comm = arms.pop().expect("two arms");
    let comm = arms.pop().expect("two arms");
    Ok(CurriculumOutput { base, comm, no_comm, metrics })
}
