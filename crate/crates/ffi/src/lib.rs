//! C ABI for the powwow engine.
//!
//! Every fallible call returns a `PwStatus`; on failure a message for the
//! calling thread is available from `pw_last_error`. Handles are opaque
//! and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use powwow::agents::{PolicyKind, PolicySpec};
use powwow::arena::run_match;
use powwow::engine::{new_game, outcome, step, Action, GameConfig, GameState, Outcome, OutcomeMode, NUM_ACTIONS, NUM_AGENTS};
use powwow::observation::{observe, suggest_actions};
use powwow::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    State = 4,
    Io = 5,
    Parse = 6,
    BufferTooSmall = 7,
    Panic = 8,
    Other = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PwOutcome {
    Ongoing = 0,
    WinA = 1,
    WinB = 2,
    Tie = 3,
}

/// A running 2v2 game.
pub struct PwGame {
    state: GameState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Fail(PwStatus, String);

fn code(e: &Error) -> PwStatus {
    match e {
        Error::Config(_) => PwStatus::Config,
        Error::State(_) | Error::ReplayMismatch { .. } => PwStatus::State,
        Error::Parse { .. } | Error::Json(_) => PwStatus::Parse,
        Error::Io(_) => PwStatus::Io,
        Error::Match { source, .. } => code(source),
        _ => PwStatus::Other,
    }
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(code(&e), e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(PwStatus::InvalidArgument, msg.into())
}

fn null(what: &str) -> Fail {
    Fail(PwStatus::NullPointer, format!("`{what}` is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PwStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            PwStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("`{what}` is not UTF-8")))
}

unsafe fn config_arg(p: *const c_char) -> Result<GameConfig, Fail> {
    let cfg: GameConfig = if p.is_null() {
        GameConfig::default()
    } else {
        serde_json::from_str(str_arg(p, "config_json")?).map_err(|e| Fail::from(Error::from(e)))?
    };
    cfg.validate()?;
    Ok(cfg)
}

unsafe fn game_ref<'a>(g: *const PwGame) -> Result<&'a PwGame, Fail> {
    g.as_ref().ok_or_else(|| null("game"))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

fn agent_arg(agent: u32) -> Result<usize, Fail> {
    let a = agent as usize;
    if a >= NUM_AGENTS {
        return Err(invalid(format!("agent {agent} out of range 0..{NUM_AGENTS}")));
    }
    Ok(a)
}

fn map_outcome(o: Outcome) -> PwOutcome {
    match o {
        Outcome::Ongoing => PwOutcome::Ongoing,
        Outcome::WinA => PwOutcome::WinA,
        Outcome::WinB => PwOutcome::WinB,
        Outcome::Tie | Outcome::Human(_) => PwOutcome::Tie,
    }
}

// copies `s` plus a NUL into buf; reports the needed size either way
unsafe fn write_str(s: &str, buf: *mut c_char, cap: usize, needed: *mut usize) -> Result<(), Fail> {
    let n = s.len() + 1;
    if let Some(needed) = needed.as_mut() {
        *needed = n;
    }
    if buf.is_null() || cap < n {
        return Err(Fail(PwStatus::BufferTooSmall, format!("buffer needs {n} bytes, got {cap}")));
    }
    ptr::copy_nonoverlapping(s.as_ptr(), buf.cast::<u8>(), s.len());
    *buf.add(s.len()) = 0;
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn pw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Starts a game. `config_json` may be NULL for the default config.
///
/// # Safety
/// `config_json` must be NULL or a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pw_game_new(config_json: *const c_char, seed: u64, out_game: *mut *mut PwGame) -> PwStatus {
    guard(|| {
        let slot = out(out_game, "out_game")?;
        *slot = ptr::null_mut();
        let cfg = config_arg(config_json)?;
        let state = new_game(&cfg.with_seed(seed))?;
        *slot = Box::into_raw(Box::new(PwGame { state }));
        Ok(())
    })
}

/// # Safety
/// `game` must be NULL or a handle from `pw_game_new`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pw_game_free(game: *mut PwGame) {
    if !game.is_null() {
        drop(Box::from_raw(game));
    }
}

/// Advances one step. `actions` holds `n` = 4 action indices
/// (0 stop, 1 up, 2 down, 3 left, 4 right, 5 bomb).
///
/// # Safety
/// `game` must be a live handle and `actions` must point to `n` values.
#[no_mangle]
pub unsafe extern "C" fn pw_game_step(game: *mut PwGame, actions: *const u32, n: usize) -> PwStatus {
    guard(|| {
        let g = game.as_mut().ok_or_else(|| null("game"))?;
        if actions.is_null() {
            return Err(null("actions"));
        }
        if n != NUM_AGENTS {
            return Err(invalid(format!("expected {NUM_AGENTS} actions, got {n}")));
        }
        let raw = std::slice::from_raw_parts(actions, n);
        let mut acts = [Action::Stop; NUM_AGENTS];
        for (slot, &a) in acts.iter_mut().zip(raw) {
            *slot = Action::from_index(a as usize).ok_or_else(|| invalid(format!("unknown action {a}")))?;
        }
        if outcome(&g.state, &OutcomeMode::AgentMatch).is_terminal() {
            return Err(Fail(PwStatus::State, "game is over".into()));
        }
        g.state = step(&g.state, acts)?.0;
        Ok(())
    })
}

/// # Safety
/// `game` must be a live handle; `out_t` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pw_game_time(game: *const PwGame, out_t: *mut u32) -> PwStatus {
    guard(|| {
        *out(out_t, "out_t")? = game_ref(game)?.state.t;
        Ok(())
    })
}

/// Canonical state hash, equal to the hashes recorded in replays.
///
/// # Safety
/// `game` must be a live handle; `out_hash` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pw_game_hash(game: *const PwGame, out_hash: *mut u64) -> PwStatus {
    guard(|| {
        *out(out_hash, "out_hash")? = game_ref(game)?.state.state_hash();
        Ok(())
    })
}

/// # Safety
/// `game` must be a live handle; `out_outcome` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pw_game_outcome(game: *const PwGame, out_outcome: *mut PwOutcome) -> PwStatus {
    guard(|| {
        *out(out_outcome, "out_outcome")? = map_outcome(outcome(&game_ref(game)?.state, &OutcomeMode::AgentMatch));
        Ok(())
    })
}

/// # Safety
/// `game` must be a live handle; `out_alive` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pw_game_alive(game: *const PwGame, agent: u32, out_alive: *mut bool) -> PwStatus {
    guard(|| {
        *out(out_alive, "out_alive")? = game_ref(game)?.state.agents[agent_arg(agent)?].alive;
        Ok(())
    })
}

/// Fills `mask[0..6]` with the actions that do not walk into immediate
/// danger for `agent`.
///
/// # Safety
/// `game` must be a live handle; `mask` must point to `n` = 6 bools.
#[no_mangle]
pub unsafe extern "C" fn pw_game_action_mask(game: *const PwGame, agent: u32, mask: *mut bool, n: usize) -> PwStatus {
    guard(|| {
        let g = game_ref(game)?;
        if mask.is_null() {
            return Err(null("mask"));
        }
        if n != NUM_ACTIONS {
            return Err(invalid(format!("mask needs {NUM_ACTIONS} slots, got {n}")));
        }
        let m = suggest_actions(&g.state, agent_arg(agent)?);
        std::slice::from_raw_parts_mut(mask, n).copy_from_slice(&m.0);
        Ok(())
    })
}

/// Writes `agent`'s fogged observation as JSON. Pass a NULL buffer to
/// learn the size via `needed` (status `PW_STATUS_BUFFER_TOO_SMALL`).
///
/// # Safety
/// `game` must be a live handle; `buf` must be NULL or hold `cap` bytes;
/// `needed` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn pw_game_observation_json(
    game: *const PwGame,
    agent: u32,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> PwStatus {
    guard(|| {
        let g = game_ref(game)?;
        let view = observe(&g.state, agent_arg(agent)?, None);
        let json = serde_json::to_string(&view).map_err(|e| Fail::from(Error::from(e)))?;
        write_str(&json, buf, cap, needed)
    })
}

/// Full authoritative state as JSON; same buffer protocol as
/// `pw_game_observation_json`.
///
/// # Safety
/// As for `pw_game_observation_json`.
#[no_mangle]
pub unsafe extern "C" fn pw_game_state_json(game: *const PwGame, buf: *mut c_char, cap: usize, needed: *mut usize) -> PwStatus {
    guard(|| {
        let json = serde_json::to_string(&game_ref(game)?.state).map_err(|e| Fail::from(Error::from(e)))?;
        write_str(&json, buf, cap, needed)
    })
}

/// Plays one full match. Team specs are policy kinds such as `simple`,
/// `random-no-bomb` or `learned:<checkpoint>`, one for both seats or two
/// separated by a comma.
///
/// # Safety
/// String arguments must be valid C strings (`config_json` may be NULL);
/// the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn pw_run_match(
    team_a: *const c_char,
    team_b: *const c_char,
    config_json: *const c_char,
    seed: u64,
    comm_a: bool,
    comm_b: bool,
    out_outcome: *mut PwOutcome,
    out_steps: *mut u32,
) -> PwStatus {
    guard(|| {
        let a = team(str_arg(team_a, "team_a")?, 0)?;
        let b = team(str_arg(team_b, "team_b")?, 2)?;
        let cfg = config_arg(config_json)?;
        let o = out(out_outcome, "out_outcome")?;
        let s = out(out_steps, "out_steps")?;
        let r = run_match(&a, &b, &cfg, seed, comm_a, comm_b)?;
        *o = map_outcome(r.outcome);
        *s = r.steps;
        Ok(())
    })
}

fn team(spec: &str, seed_offset: u64) -> Result<[PolicySpec; 2], Fail> {
    let kinds: Vec<PolicyKind> = spec.split(',').map(str::parse).collect::<Result<_, _>>()?;
    match kinds.as_slice() {
        [k] => Ok([PolicySpec::new(k.clone(), seed_offset), PolicySpec::new(k.clone(), seed_offset + 1)]),
        [a, b] => Ok([PolicySpec::new(a.clone(), seed_offset), PolicySpec::new(b.clone(), seed_offset + 1)]),
        _ => Err(invalid(format!("team spec `{spec}` needs one or two policies"))),
    }
}
