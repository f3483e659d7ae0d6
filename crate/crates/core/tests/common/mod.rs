//! Oracles and state generators shared by the integration tests. Nothing
//! here calls the engine's own blast or mask code.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use powwow::engine::{
    new_game, simulate, step, Action, Bomb, Cell, Event, Flame, GameConfig, GameState, Outcome, OutcomeMode, Pos,
    BOARD_SIZE, NUM_ACTIONS, NUM_AGENTS,
};
use powwow::learning::{EncodedObs, Model, LAYOUT};
use powwow::observation::{encode, observe, suggest_actions};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn all_cells() -> impl Iterator<Item = Pos> {
    (0..BOARD_SIZE as i32).flat_map(|r| (0..BOARD_SIZE as i32).map(move |c| Pos::new(r, c)))
}

pub fn walkable(s: &GameState, p: Pos) -> bool {
    matches!(s.grid[p.row as usize][p.col as usize], Cell::Passage | Cell::ItemAmmo | Cell::ItemRange | Cell::ItemKick)
}

/// A fresh board with a random scatter of bombs (some due) and flames.
pub fn bomb_state(r: &mut ChaCha8Rng) -> GameState {
    let cfg = GameConfig { wood_count: r.random_range(0..=36), item_count: 0, ..GameConfig::default() };
    let cfg = GameConfig { item_count: r.random_range(0..=cfg.wood_count.min(20)), ..cfg };
    let mut s = new_game(&cfg.with_seed(r.random())).unwrap();
    let open: Vec<Pos> = all_cells().filter(|&p| walkable(&s, p)).collect();
    let n_bombs = r.random_range(1..=12);
    let mut used = BTreeSet::new();
    for _ in 0..n_bombs {
        let p = *open.choose(r).unwrap();
        if used.insert(p) {
            s.bombs.push(Bomb {
                owner: r.random_range(0..NUM_AGENTS),
                pos: p,
                life: r.random_range(1..=4),
                blast: r.random_range(1..=4),
                velocity: None,
            });
        }
    }
    for _ in 0..r.random_range(0..=3) {
        let p = *open.choose(r).unwrap();
        if !s.flames.iter().any(|f| f.pos == p) {
            s.flames.push(Flame { pos: p, life: r.random_range(1..=2) });
        }
    }
    s.bombs.sort_by_key(|b| b.pos);
    s.flames.sort_by_key(|f| f.pos);
    s
}

/// One ray-walk per direction, written out longhand.
fn rays(s: &GameState, origin: Pos, blast: u32) -> BTreeSet<Pos> {
    let mut out = BTreeSet::from([origin]);
    for (dr, dc) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
        for k in 1..=blast as i32 {
            let (r, c) = (origin.row + dr * k, origin.col + dc * k);
            if r < 0 || c < 0 || r >= BOARD_SIZE as i32 || c >= BOARD_SIZE as i32 {
                break;
            }
            match s.grid[r as usize][c as usize] {
                Cell::Rigid => break,
                Cell::Wood => {
                    out.insert(Pos::new(r, c));
                    break;
                }
                _ => {
                    out.insert(Pos::new(r, c));
                }
            }
        }
    }
    out
}

/// Brute-force chain closure for a state where nothing moves: iterate
/// "a bomb explodes if it is due, sits on a flame, or lies in the blast of
/// an exploded bomb" to a fixed point. Returns (exploded bomb cells,
/// covered cells).
pub fn chain_oracle(s: &GameState) -> (BTreeSet<Pos>, BTreeSet<Pos>) {
    let flames: BTreeSet<Pos> = s.flames.iter().map(|f| f.pos).collect();
    let mut exploded: BTreeSet<Pos> =
        s.bombs.iter().filter(|b| b.life <= 1 || flames.contains(&b.pos)).map(|b| b.pos).collect();
    loop {
        let covered: BTreeSet<Pos> = s
            .bombs
            .iter()
            .filter(|b| exploded.contains(&b.pos))
            .flat_map(|b| rays(s, b.pos, b.blast))
            .collect();
        let next: BTreeSet<Pos> =
            s.bombs.iter().filter(|b| exploded.contains(&b.pos) || covered.contains(&b.pos)).map(|b| b.pos).collect();
        if next == exploded {
            return (exploded, covered);
        }
        exploded = next;
    }
}

/// One all-Stop step of `s` against the closure oracle: surviving bombs,
/// flame cells and lives, burnt wood and ammo refunds.
pub fn check_chain(s: &GameState) -> Result<(), String> {
    let (exploded, covered) = chain_oracle(s);
    let (next, _) = step(s, [Action::Stop; NUM_AGENTS]).map_err(|e| e.to_string())?;

    let left: BTreeSet<Pos> = next.bombs.iter().map(|b| b.pos).collect();
    let want_left: BTreeSet<Pos> = s.bombs.iter().map(|b| b.pos).filter(|p| !exploded.contains(p)).collect();
    if left != want_left {
        return Err(format!("bombs left {left:?}, want {want_left:?}"));
    }
    let flames: BTreeSet<Pos> = next.flames.iter().map(|f| f.pos).collect();
    let mut want_flames = covered.clone();
    want_flames.extend(s.flames.iter().filter(|f| f.life > 1).map(|f| f.pos));
    if flames != want_flames {
        return Err(format!("flames {flames:?}, want {want_flames:?}"));
    }
    for f in &next.flames {
        let ok = if covered.contains(&f.pos) { f.life == s.config.flame_life } else { f.life < s.config.flame_life };
        if !ok {
            return Err(format!("flame at {:?} has life {}", f.pos, f.life));
        }
    }
    for p in all_cells() {
        let (r, c) = (p.row as usize, p.col as usize);
        if s.grid[r][c] == Cell::Wood && (next.grid[r][c] == Cell::Wood) == covered.contains(&p) {
            return Err(format!("wood at {p:?}"));
        }
    }
    for i in 0..NUM_AGENTS {
        let refunds = s.bombs.iter().filter(|b| b.owner == i && exploded.contains(&b.pos)).count() as u32;
        if next.agents[i].ammo != s.agents[i].ammo + refunds {
            return Err(format!("agent {i} ammo {}", next.agents[i].ammo));
        }
    }
    Ok(())
}

/// Same-cell, swap, three- and four-way conflicts: every mover stays put.
pub fn cancellation_scenarios() -> Result<(), String> {
    use Action::{Down, Left, Right, Stop, Up};
    let cases: [(&[(usize, (i32, i32))], [Action; NUM_AGENTS]); 4] = [
        (&[(0, (1, 2)), (1, (1, 4))], [Right, Left, Stop, Stop]),
        (&[(0, (1, 2)), (1, (1, 3))], [Right, Left, Stop, Stop]),
        (&[(0, (2, 3)), (1, (3, 2)), (2, (3, 4))], [Down, Right, Left, Stop]),
        (&[(0, (2, 3)), (1, (3, 2)), (2, (3, 4)), (3, (4, 3))], [Down, Right, Left, Up]),
    ];
    for (k, (at, acts)) in cases.iter().enumerate() {
        let mut s = open_board();
        place(&mut s, at);
        let before: Vec<Pos> = s.agents.iter().map(|a| a.pos).collect();
        let (n, _) = step(&s, *acts).map_err(|e| e.to_string())?;
        let after: Vec<Pos> = n.agents.iter().map(|a| a.pos).collect();
        if before != after {
            return Err(format!("scenario {k}: {before:?} became {after:?}"));
        }
    }
    Ok(())
}

/// Mask by exhaustive two-ply lookahead: take `a`, then everyone stops;
/// an action is safe iff no death event names the agent in either ply.
pub fn mask_oracle(s: &GameState, agent: usize) -> [bool; NUM_ACTIONS] {
    let mut mask = [false; NUM_ACTIONS];
    if !s.agents[agent].alive {
        return mask;
    }
    let died = |ev: &[Event]| ev.iter().any(|e| matches!(e, Event::AgentDied { agent: a, .. } if *a == agent));
    for (i, slot) in mask.iter_mut().enumerate() {
        let mut acts = [Action::Stop; NUM_AGENTS];
        acts[agent] = Action::from_index(i).unwrap();
        let (s1, e1) = simulate(s, acts);
        if died(&e1) {
            continue;
        }
        let (_, e2) = simulate(&s1, [Action::Stop; NUM_AGENTS]);
        *slot = !died(&e2);
    }
    mask
}

/// A pre-collapse state reached by random play, then salted with extra
/// bombs and flames around the agents.
pub fn played_state(r: &mut ChaCha8Rng) -> GameState {
    let mut s = new_game(&GameConfig::default().with_seed(r.random())).unwrap();
    let steps = r.random_range(0..90);
    for _ in 0..steps {
        let acts = std::array::from_fn(|_| Action::from_index(r.random_range(0..NUM_ACTIONS)).unwrap());
        match step(&s, acts) {
            Ok((n, _)) if powwow::engine::outcome(&n, &OutcomeMode::AgentMatch) == Outcome::Ongoing => s = n,
            _ => break,
        }
    }
    for _ in 0..r.random_range(0..=4) {
        let a = &s.agents[r.random_range(0..NUM_AGENTS)];
        let p = Pos::new(a.pos.row + r.random_range(-2..=2), a.pos.col + r.random_range(-2..=2));
        if p.in_bounds() && walkable(&s, p) && s.bomb_at(p).is_none() {
            s.bombs.push(Bomb { owner: a.id, pos: p, life: r.random_range(1..=3), blast: r.random_range(1..=3), velocity: None });
        }
    }
    if r.random_bool(0.3) {
        let a = &s.agents[r.random_range(0..NUM_AGENTS)];
        let p = Pos::new(a.pos.row + r.random_range(-1..=1), a.pos.col + r.random_range(-1..=1));
        if p.in_bounds() && walkable(&s, p) && s.flame_at(p).is_none() {
            s.flames.push(Flame { pos: p, life: r.random_range(1..=2) });
        }
    }
    if r.random_bool(0.3) {
        let i = r.random_range(0..NUM_AGENTS);
        s.agents[i].can_kick = true;
    }
    s.bombs.sort_by_key(|b| b.pos);
    s.flames.sort_by_key(|f| f.pos);
    s
}

pub fn mask_agrees(s: &GameState) -> bool {
    (0..NUM_AGENTS).all(|i| suggest_actions(s, i).0 == mask_oracle(s, i))
}

/// Board with no wood: every corridor is open.
pub fn open_board() -> GameState {
    new_game(&GameConfig { wood_count: 0, item_count: 0, ..GameConfig::default() }).unwrap()
}

/// Parks agents on the given cells (the rest keep their corners).
pub fn place(s: &mut GameState, at: &[(usize, (i32, i32))]) {
    for &(i, (r, c)) in at {
        s.agents[i].pos = Pos::new(r, c);
    }
}

pub fn encoded(s: &GameState, agent: usize) -> EncodedObs {
    let (planes, features) = encode(&observe(s, agent, None));
    EncodedObs { planes, features, mask: suggest_actions(s, agent) }
}

/// Worst relative error between backprop and central differences over
/// `samples` coordinates spread round-robin over the tensors, for the loss sum(c * logits) + value.
pub fn gradient_check(seed: u64, samples: usize) -> f64 {
    let mut r = rng(seed);
    let mut model = Model::init(seed);
    for p in model.params.iter_mut() {
        *p += r.random_range(-0.05..0.05);
    }
    let states: Vec<GameState> = (0..2).map(|_| played_state(&mut r)).collect();
    let obs: Vec<EncodedObs> = states.iter().enumerate().map(|(i, s)| encoded(s, i)).collect();
    let refs: Vec<&EncodedObs> = obs.iter().collect();
    let c: Vec<f64> = (0..refs.len() * NUM_ACTIONS).map(|_| r.random_range(-1.0..1.0)).collect();
    let loss = |m: &Model| {
        let f = m.forward_batch(&refs);
        f.logits.iter().zip(&c).map(|(z, c)| z * c).sum::<f64>() + f.values.iter().sum::<f64>()
    };
    let cache = model.forward_batch(&refs);
    let grad = model.backward(&cache, &c, &vec![1.0; refs.len()]);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for k in 0..samples {
        let spec = &LAYOUT[k % LAYOUT.len()];
        let i = spec.offset + r.random_range(0..spec.len());
        let orig = model.params[i];
        model.params[i] = orig + h;
        let up = loss(&model);
        model.params[i] = orig - h;
        let down = loss(&model);
        model.params[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        let err = (numeric - grad[i]).abs() / numeric.abs().max(grad[i].abs()).max(1e-3);
        worst = worst.max(err);
    }
    worst
}

/// Independent bookkeeping of a team's target: the first enemy within
/// either living teammate's view radius, lowest id on ties.
#[derive(Debug, Default, Clone, Copy)]
pub struct TargetOracle {
    pub target: Option<usize>,
}

impl TargetOracle {
    pub fn update(&mut self, s: &GameState, team: [usize; 2]) {
        if self.target.is_some() {
            return;
        }
        let r = s.config.view_radius;
        self.target = (0..NUM_AGENTS)
            .filter(|&e| !team.contains(&e) && s.agents[e].alive)
            .find(|&e| team.iter().any(|&m| s.agents[m].alive && s.agents[m].pos.chebyshev(s.agents[e].pos) <= r));
    }
}

/// Checks one step of a comm-on team: whenever a teammate sees the
/// target, the other's encoding carries it at its true position. Returns
/// the number of hallucination checks made.
pub fn check_comm_step(s: &GameState, views: &[powwow::observation::AgentView; NUM_AGENTS], team: [usize; 2], oracle: &mut TargetOracle) -> Result<usize, String> {
    oracle.update(s, team);
    let Some(target) = oracle.target else { return Ok(0) };
    let r = s.config.view_radius;
    let tpos = s.agents[target].pos;
    let mut checks = 0;
    for (me, mate) in [(team[0], team[1]), (team[1], team[0])] {
        if !s.agents[me].alive || !s.agents[mate].alive || !s.agents[target].alive {
            continue;
        }
        if s.agents[mate].pos.chebyshev(tpos) > r {
            continue;
        }
        let (planes, f) = encode(&views[me]);
        let own = s.agents[me].pos.chebyshev(tpos) <= r;
        let want = if own { 0.5 } else { 0.25 };
        let got = planes.get(5, tpos);
        if got != want {
            return Err(format!("t={} agent {me}: plane 5 at {tpos:?} is {got}, want {want}", s.t));
        }
        let slots = [f.0[13], f.0[14], f.0[15]];
        let want_slots = [tpos.row as f64 / 10.0, tpos.col as f64 / 10.0, 1.0];
        if slots != want_slots {
            return Err(format!("t={} agent {me}: target slots {slots:?}, want {want_slots:?}", s.t));
        }
        checks += 1;
    }
    Ok(checks)
}

/// Comm-off agents must encode exactly as a plain observation would.
pub fn check_plain(s: &GameState, views: &[powwow::observation::AgentView; NUM_AGENTS], agents: [usize; 2]) -> Result<(), String> {
    for i in agents {
        let a = encode(&views[i]);
        let b = encode(&observe(s, i, None));
        if a.0.as_slice() != b.0.as_slice() || a.1 .0 != b.1 .0 {
            return Err(format!("t={} agent {i}: comm-off encoding differs from the plain pipeline", s.t));
        }
    }
    Ok(())
}

// ---- dialogue analytics ----

use powwow::engine::HumanOutcome;
use powwow::replay::{ChatLine, Replay, ReplayHeader, StepRecord, REPLAY_VERSION};
use powwow::transcripts::AnnotationSet;

/// A chat-only transcript of `len` steps with one message at each `chat_at`.
pub fn transcript(id: &str, result: Option<HumanOutcome>, len: u32, chat_at: &[u32]) -> Replay {
    let steps = (0..len)
        .map(|t| {
            let chat = if chat_at.contains(&t) {
                vec![ChatLine { sender: 0, text: format!("at {t}"), order: 0 }]
            } else {
                vec![]
            };
            StepRecord { t, actions: [Action::Stop; NUM_AGENTS], chat, state_hash: String::new() }
        })
        .collect();
    Replay {
        header: ReplayHeader {
            version: REPLAY_VERSION,
            game_id: id.into(),
            config: GameConfig::default(),
            seed: 0,
            agent_specs: std::array::from_fn(|_| String::new()),
            mode: OutcomeMode::Human { humans: [true, false, true, false] },
            participants: vec![],
            comm: [true, false],
            outcome: result.map_or(Outcome::Ongoing, Outcome::Human),
            complete: result.is_some(),
            initial_hash: String::new(),
        },
        steps,
    }
}

/// 15 wins, 17 ties, 48 losses, plus three aborted games.
pub fn planted_corpus() -> Vec<Replay> {
    let mut out = Vec::new();
    for (k, (o, n)) in [(HumanOutcome::Win, 15), (HumanOutcome::Tie, 17), (HumanOutcome::Lose, 48)].into_iter().enumerate() {
        for i in 0..n {
            out.push(transcript(&format!("g{k}-{i}"), Some(o), 40 + i, &[1, 20 + i / 2]));
        }
    }
    for i in 0..3 {
        out.push(transcript(&format!("aborted{i}"), None, 10, &[2]));
    }
    out
}

pub fn set_of(xs: &[&str]) -> BTreeSet<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

/// Coincidence-matrix alpha, written out independently of the library.
/// `d(a, b)` is the distance between two coded values.
pub fn alpha_oracle(units: &[Vec<BTreeSet<String>>], d: impl Fn(&BTreeSet<String>, &BTreeSet<String>) -> f64) -> f64 {
    let pairable: Vec<&Vec<BTreeSet<String>>> = units.iter().filter(|u| u.len() >= 2).collect();
    let mut vals: Vec<BTreeSet<String>> = pairable.iter().flat_map(|u| u.iter().cloned()).collect();
    vals.sort();
    vals.dedup();
    let k = vals.len();
    let idx = |v: &BTreeSet<String>| vals.iter().position(|x| x == v).unwrap();
    let mut o = vec![vec![0.0; k]; k];
    for u in &pairable {
        let m = u.len() as f64;
        for i in 0..u.len() {
            for j in 0..u.len() {
                if i != j {
                    o[idx(&u[i])][idx(&u[j])] += 1.0 / (m - 1.0);
                }
            }
        }
    }
    let marg: Vec<f64> = o.iter().map(|row| row.iter().sum()).collect();
    let n: f64 = marg.iter().sum();
    let (mut num, mut den) = (0.0, 0.0);
    for c in 0..k {
        for kk in 0..k {
            let dist = d(&vals[c], &vals[kk]);
            num += o[c][kk] * dist;
            den += marg[c] * marg[kk] * dist;
        }
    }
    if den == 0.0 {
        return 1.0;
    }
    1.0 - (n - 1.0) * num / den
}

/// The four-item worked example: coder A = [a,a,b,b], coder B = [a,b,b,b].
pub fn four_item_sets() -> Vec<AnnotationSet> {
    let mut a = AnnotationSet::new("A");
    let mut b = AnnotationSet::new("B");
    for (t, (x, y)) in [("a", "a"), ("a", "b"), ("b", "b"), ("b", "b")].into_iter().enumerate() {
        a.insert("g", t as u32, [x]);
        b.insert("g", t as u32, [y]);
    }
    vec![a, b]
}

pub fn nominal(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    (a != b) as u8 as f64
}

/// Jaccard distance scaled by the monotonicity weight, computed longhand.
pub fn masi_oracle(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let inter = a.iter().filter(|x| b.contains(*x)).count() as f64;
    let union = (a.len() + b.len()) as f64 - inter;
    let m = if a == b {
        1.0
    } else if a.iter().all(|x| b.contains(x)) || b.iter().all(|x| a.contains(x)) {
        2.0 / 3.0
    } else if inter > 0.0 {
        1.0 / 3.0
    } else {
        0.0
    };
    1.0 - m * inter / union
}

pub fn units_of(sets: &[AnnotationSet]) -> Vec<Vec<BTreeSet<String>>> {
    let mut keys: Vec<_> = sets.iter().flat_map(|s| s.labels.keys().cloned()).collect();
    keys.sort();
    keys.dedup();
    keys.iter().map(|k| sets.iter().filter_map(|s| s.labels.get(k).cloned()).collect()).collect()
}
