mod common;

use common::*;
use powwow::agents::{LearnedSource, PolicyKind, PolicySpec};
use powwow::arena::run_match_traced;
use powwow::engine::{are_enemies, outcome, Bomb, Cell, GameConfig, GameState, Outcome, OutcomeMode, Pos, Team, NUM_AGENTS};
use powwow::learning::{
    load_checkpoint, save_checkpoint, shaped_reward, train_curriculum, Phase, RewardSpec, TrainConfig,
};

fn survival_only() -> RewardSpec {
    RewardSpec { wood: 0.0, item: 0.0, sight: 0.0, proximity_per_cell: 0.0, ..RewardSpec::default() }
}

/// Reward from the before/after states alone: deaths, flame kills, result.
fn state_diff_reward(before: &GameState, after: &GameState, agent: usize, phase: Phase, spec: &RewardSpec) -> f64 {
    let died = |i: usize| before.agents[i].alive && !after.agents[i].alive;
    let mut r = 0.0;
    if died(agent) {
        r += spec.death;
    }
    if phase != Phase::STATIC {
        for e in (0..NUM_AGENTS).filter(|&e| are_enemies(e, agent) && died(e)) {
            let p = after.agents[e].pos;
            if after.grid[p.row as usize][p.col as usize] != Cell::Rigid {
                r += spec.kill;
            }
        }
        let mine = Team::of(agent);
        r += match outcome(after, &OutcomeMode::AgentMatch) {
            Outcome::WinA if mine == Team::A => spec.win,
            Outcome::WinB if mine == Team::B => spec.win,
            Outcome::WinA | Outcome::WinB => spec.lose,
            Outcome::Tie => spec.tie,
            _ => 0.0,
        };
    }
    r
}

#[test]
fn shaped_rewards_agree_with_state_diffs() {
    let spec = survival_only();
    let mut checked = 0;
    for seed in 0..30u64 {
        let kind: PolicyKind = if seed % 2 == 0 { PolicyKind::Simple } else { PolicyKind::Random };
        let a = [PolicySpec::new(kind.clone(), 1), PolicySpec::new(kind.clone(), 2)];
        let b = [PolicySpec::new(PolicyKind::Simple, 3), PolicySpec::new(kind, 4)];
        let phase = Phase(1 + (seed % 3) as u8);
        run_match_traced(&a, &b, &GameConfig::default(), seed, false, false, &mut |info| {
            for i in 0..NUM_AGENTS {
                let got = shaped_reward(info.events, i, info.outcome, phase, &spec);
                let want = state_diff_reward(info.before, info.after, i, phase, &spec);
                assert!((got - want).abs() < 1e-12, "seed {seed} t {} agent {i}: {got} vs {want}", info.before.t);
                checked += 1;
            }
        })
        .unwrap();
    }
    assert!(checked > 1000);
}

#[test]
fn own_bomb_pays_for_each_wood_burned() {
    let mut s = open_board();
    place(&mut s, &[(0, (1, 1)), (1, (9, 9)), (2, (9, 1)), (3, (1, 9))]);
    for (r, c) in [(1, 4), (3, 3), (1, 2)] {
        s.grid[r][c] = Cell::Wood;
    }
    // owner 0 at (1,3), blast 3: (1,2) and (1,4) are hit and stop the ray, (3,3) too
    s.bombs.push(Bomb { owner: 0, pos: Pos::new(1, 3), life: 1, blast: 3, velocity: None });
    let (next, ev) = powwow::engine::step(&s, [powwow::engine::Action::Stop; NUM_AGENTS]).unwrap();
    assert!([(1, 4), (3, 3), (1, 2)].iter().all(|&(r, c)| next.grid[r][c] != Cell::Wood));
    let spec = RewardSpec::default();
    let r = shaped_reward(&ev, 0, Outcome::Ongoing, Phase::STATIC, &spec);
    assert!((r - 3.0 * spec.wood).abs() < 1e-12, "{r}");
    assert_eq!(shaped_reward(&ev, 1, Outcome::Ongoing, Phase::STATIC, &spec), 0.0);
    // wood stops counting after phase one
    let quiet = RewardSpec { sight: 0.0, proximity_per_cell: 0.0, ..spec };
    assert_eq!(shaped_reward(&ev, 0, Outcome::Ongoing, Phase::RANDOM, &quiet), 0.0);
}

fn tiny(seed: u64) -> TrainConfig {
    TrainConfig { workers: 2, phase_steps: [300, 300, 300], eval_every: 150, eval_matches: 2, seed, ..TrainConfig::default() }
}

#[test]
fn curriculum_is_reproducible_and_checkpoints_play() {
    let dir = tempfile::tempdir().unwrap();
    let a = train_curriculum(&tiny(9), Some(dir.path()), &mut |_| {}).unwrap();
    let b = train_curriculum(&tiny(9), None, &mut |_| {}).unwrap();
    for (x, y) in [(&a.base, &b.base), (&a.comm, &b.comm), (&a.no_comm, &b.no_comm)] {
        assert!(x.model.params.iter().zip(&y.model.params).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
    assert_eq!(a.metrics, b.metrics);
    let c = train_curriculum(&tiny(10), None, &mut |_| {}).unwrap();
    assert_ne!(a.comm.model, c.comm.model);

    let path = dir.path().join("comm.pwck");
    save_checkpoint(&path, &a.comm).unwrap();
    let back = load_checkpoint(&path).unwrap();
    assert_eq!(back.model, a.comm.model);
    assert_eq!(back.meta, a.comm.meta);
    assert!(a.comm.meta.total_steps >= 900);

    let learned = PolicyKind::Learned(LearnedSource::Checkpoint(path));
    let team_a = [PolicySpec::new(learned.clone(), 1), PolicySpec::new(learned, 2)];
    let team_b = [PolicySpec::new(PolicyKind::Simple, 3), PolicySpec::new(PolicyKind::Simple, 4)];
    let m = run_match_traced(&team_a, &team_b, &GameConfig::default(), 3, true, false, &mut |_| {}).unwrap();
    assert!(m.outcome.is_terminal());
}

/// Median over ten seeds of (wood after a short phase-1 run - wood
/// before). `POWWOW_WOOD_STEPS` sets the per-seed budget.
#[test]
fn phase_one_training_burns_more_wood() {
    use std::sync::Arc;
    use powwow::learning::{evaluate, train_phase, Model, ParameterServer};
    let steps: u64 = std::env::var("POWWOW_WOOD_STEPS").ok().and_then(|v| v.parse().ok()).unwrap_or(3_000);
    let mut deltas = Vec::new();
    for seed in 0..10u64 {
        let cfg = TrainConfig { phase_steps: [steps, 0, 0], eval_matches: 0, seed, ..TrainConfig::default() };
        let wood = |m: &Model| {
            evaluate(&Arc::new(m.clone()), PolicyKind::Static, Phase::STATIC, false, &cfg.game, &cfg.rewards, 500 + seed, 40)
                .unwrap()
                .wood_per_episode
        };
        let server = ParameterServer::new(Model::init(seed), cfg.hyper.optimizer);
        let before = wood(&server.snapshot());
        train_phase(&server, &cfg, Phase::STATIC, false, "wood", &mut |_| {}).unwrap();
        let after = wood(&server.snapshot());
        eprintln!("seed {seed}: wood {before:.2} -> {after:.2}");
        deltas.push(after - before);
    }
    deltas.sort_by(f64::total_cmp);
    let median = (deltas[4] + deltas[5]) / 2.0;
    assert!(median > 0.0, "median change {median:.3}");
}
