use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use powwow::arena::run_match;
use powwow::agents::{PolicyKind, PolicySpec};
use powwow::engine::GameConfig;
use powwow::replay::hash_hex;
use powwow_ffi::*;

fn last_error() -> String {
    let p = pw_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn new_game(seed: u64) -> *mut PwGame {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { pw_game_new(ptr::null(), seed, &mut g) }, PwStatus::Ok);
    assert!(!g.is_null());
    g
}

#[test]
fn game_lifecycle() {
    let g = new_game(3);
    let mut t = 99;
    unsafe {
        assert_eq!(pw_game_time(g, &mut t), PwStatus::Ok);
        assert_eq!(t, 0);
        for _ in 0..10 {
            assert_eq!(pw_game_step(g, [0u32; 4].as_ptr(), 4), PwStatus::Ok);
        }
        pw_game_time(g, &mut t);
        assert_eq!(t, 10);
        let mut alive = false;
        assert_eq!(pw_game_alive(g, 2, &mut alive), PwStatus::Ok);
        assert!(alive);
        let mut o = PwOutcome::Tie;
        assert_eq!(pw_game_outcome(g, &mut o), PwStatus::Ok);
        assert_eq!(o, PwOutcome::Ongoing);
        let mut mask = [false; 6];
        assert_eq!(pw_game_action_mask(g, 0, mask.as_mut_ptr(), 6), PwStatus::Ok);
        assert!(mask.iter().any(|&m| m));
        pw_game_free(g);
    }
}

#[test]
fn error_codes_and_messages() {
    unsafe {
        let mut g = ptr::null_mut();
        let bad = CString::new(r#"{"board_size": 9}"#).unwrap();
        assert_eq!(pw_game_new(bad.as_ptr(), 1, &mut g), PwStatus::Config);
        assert!(g.is_null());
        assert!(last_error().contains("board_size"));

        let junk = CString::new("{not json").unwrap();
        assert_eq!(pw_game_new(junk.as_ptr(), 1, &mut g), PwStatus::Parse);
        assert_eq!(pw_game_new(ptr::null(), 1, ptr::null_mut()), PwStatus::NullPointer);

        let g = new_game(1);
        assert_eq!(pw_game_step(g, [0u32, 0, 9, 0].as_ptr(), 4), PwStatus::InvalidArgument);
        assert!(last_error().contains("unknown action 9"));
        assert_eq!(pw_game_step(g, [0u32; 3].as_ptr(), 3), PwStatus::InvalidArgument);
        let mut alive = false;
        assert_eq!(pw_game_alive(g, 4, &mut alive), PwStatus::InvalidArgument);
        // success clears the message
        assert_eq!(pw_game_alive(g, 0, &mut alive), PwStatus::Ok);
        assert!(pw_last_error().is_null());
        assert_eq!(pw_game_time(ptr::null(), &mut 0), PwStatus::NullPointer);
        pw_game_free(g);
        pw_game_free(ptr::null_mut());
    }
}

#[test]
fn json_buffers() {
    let g = new_game(5);
    unsafe {
        let mut needed = 0usize;
        assert_eq!(pw_game_observation_json(g, 1, ptr::null_mut(), 0, &mut needed), PwStatus::BufferTooSmall);
        assert!(needed > 1);
        let mut buf = vec![0 as std::ffi::c_char; needed];
        assert_eq!(pw_game_observation_json(g, 1, buf.as_mut_ptr(), needed, &mut needed), PwStatus::Ok);
        let text = CStr::from_ptr(buf.as_ptr()).to_str().unwrap();
        let v: serde_json::Value = serde_json::from_str(text).unwrap();
        assert_eq!(v["self_id"], 1);

        pw_game_state_json(g, ptr::null_mut(), 0, &mut needed);
        let mut buf = vec![0 as std::ffi::c_char; needed];
        assert_eq!(pw_game_state_json(g, buf.as_mut_ptr(), needed, ptr::null_mut()), PwStatus::Ok);
        pw_game_free(g);
    }
}

#[test]
fn hash_matches_native_replay() {
    let spec = [PolicySpec::new(PolicyKind::Static, 0), PolicySpec::new(PolicyKind::Static, 1)];
    let native = run_match(&spec, &spec, &GameConfig::default(), 11, false, false).unwrap();
    let g = new_game(11);
    unsafe {
        for rec in &native.replay.steps {
            let acts: Vec<u32> = rec.actions.iter().map(|a| a.index() as u32).collect();
            assert_eq!(pw_game_step(g, acts.as_ptr(), 4), PwStatus::Ok);
            let mut h = 0;
            pw_game_hash(g, &mut h);
            assert_eq!(hash_hex(h), rec.state_hash);
        }
        assert_eq!(pw_game_step(g, [0u32; 4].as_ptr(), 4), PwStatus::State);
        pw_game_free(g);
    }
}

#[test]
fn run_match_via_ffi() {
    let a = CString::new("simple").unwrap();
    let b = CString::new("static,random-no-bomb").unwrap();
    let (mut o, mut steps) = (PwOutcome::Ongoing, 0);
    unsafe {
        assert_eq!(pw_run_match(a.as_ptr(), b.as_ptr(), ptr::null(), 4, false, false, &mut o, &mut steps), PwStatus::Ok);
        assert_ne!(o, PwOutcome::Ongoing);
        assert!(steps > 0);
        let bad = CString::new("wizard").unwrap();
        assert_eq!(pw_run_match(bad.as_ptr(), b.as_ptr(), ptr::null(), 4, false, false, &mut o, &mut steps), PwStatus::Config);
    }
    let v = unsafe { CStr::from_ptr(pw_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        r#"#include "powwow.h"
int main(void) {
    PwGame *g = NULL;
    uint32_t acts[4] = {0, 0, 0, 0};
    if (pw_game_new(NULL, 1, &g) != PW_STATUS_OK) return 1;
    pw_game_step(g, acts, 4);
    pw_game_free(g);
    return 0;
}
"#,
    )
    .unwrap();
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let status = match Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", include]).arg(&src).status() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("no C compiler available ({e}); skipping");
            return;
        }
    };
    assert!(status.success());
}
