mod common;

use common::*;
use powwow::agents::{PolicyKind, PolicySpec};
use powwow::arena::run_match_traced;
use powwow::engine::GameConfig;

fn simple() -> [PolicySpec; 2] {
    [PolicySpec::new(PolicyKind::Simple, 0), PolicySpec::new(PolicyKind::Simple, 1)]
}

#[test]
fn hallucinated_target_tracks_truth_over_fifty_matches() {
    let cfg = GameConfig::default();
    let mut checks = 0;
    for seed in 0..50u64 {
        // team A talks in even matches, team B in odd ones
        let comm_a = seed % 2 == 0;
        let mut oracle = TargetOracle::default();
        let mut failure = None;
        run_match_traced(&simple(), &simple(), &cfg, seed, comm_a, !comm_a, &mut |info| {
            if failure.is_some() {
                return;
            }
            let (talking, quiet) = if comm_a { ([0, 2], [1, 3]) } else { ([1, 3], [0, 2]) };
            match check_comm_step(info.before, info.views, talking, &mut oracle) {
                Ok(n) => checks += n,
                Err(e) => failure = Some(e),
            }
            if let Err(e) = check_plain(info.before, info.views, quiet) {
                failure = Some(e);
            }
        })
        .unwrap();
        assert!(failure.is_none(), "seed {seed}: {}", failure.unwrap());
    }
    assert!(checks > 100, "only {checks} sightings were checked");
}

#[test]
fn comm_off_matches_are_identical_to_plain_runs() {
    let cfg = GameConfig::default();
    for seed in 0..10u64 {
        let mut bad = None;
        run_match_traced(&simple(), &simple(), &cfg, seed, false, false, &mut |info| {
            for team in [[0, 2], [1, 3]] {
                if let Err(e) = check_plain(info.before, info.views, team) {
                    bad.get_or_insert(e);
                }
            }
        })
        .unwrap();
        assert!(bad.is_none(), "{}", bad.unwrap());
    }
}
