mod common;

use altpaths::envelope::construct_envelope;
use altpaths::io::{summarize, DatabaseFile};
use altpaths::oracle::{brute_force_envelope, verify_coverage, PlacementMode, DEFAULT_EXHAUSTIVE_CAP};
use altpaths::preprocess::preprocess_all;
use altpaths::scenario::ScenarioContext;
use common::*;

fn built(
    name: &str,
    n: usize,
) -> (
    ScenarioContext,
    altpaths::database::PlannerDatabase,
    altpaths::preprocess::PreprocessReport,
) {
    let ctx = ScenarioContext::new(reference(name, n)).unwrap();
    let (db, report) = preprocess_all(&ctx, 1);
    (ctx, db, report)
}

#[test]
fn single_obstacle_coverage_is_exhaustive_on_every_scenario() {
    for name in ALL_SCENARIOS {
        let (ctx, db, _) = built(name, 1);
        for g in &ctx.scenario().goals {
            let r = verify_coverage(&db, &ctx, g, PlacementMode::Exhaustive, DEFAULT_EXHAUSTIVE_CAP).unwrap();
            assert!(r.passed() && r.expected_uncovered_hits == 0, "{name} {g}: {r:?}");
            assert_eq!(r.placements_checked, ctx.admissible_positions(g).len());
        }
    }
}

#[test]
fn stored_envelopes_match_brute_force_for_both_models() {
    for name in ALL_SCENARIOS {
        for n in 1..=3 {
            let (ctx, db, _) = built(name, n);
            for gdb in db.goals() {
                for e in &gdb.entries {
                    let brute = brute_force_envelope(ctx.scenario(), &e.path, &gdb.goal);
                    assert_eq!(e.envelope, brute, "{name} n={n}");
                    assert_eq!(construct_envelope(&ctx, &e.path, &gdb.goal).unwrap(), brute);
                }
            }
        }
    }
}

#[test]
fn bisection_depth_stays_within_balanced_bound() {
    for name in ALL_SCENARIOS {
        for n in 1..=3 {
            let (_, _, report) = built(name, n);
            for outcome in &report.goals {
                let r = outcome.result.as_ref().unwrap();
                for stat in &r.recursions {
                    assert!(stat.max_depth <= stat.balanced_bound(), "{name} n={n}: {stat:?}");
                }
                assert!(r.uncovered.is_empty(), "{name} n={n}");
            }
        }
    }
}

#[test]
fn unbisected_goals_keep_at_most_n_plus_one_disjoint_paths() {
    for name in ALL_SCENARIOS {
        for n in 1..=3 {
            let (_, db, report) = built(name, n);
            for (gdb, outcome) in db.goals().iter().zip(&report.goals) {
                if outcome.result.as_ref().unwrap().bisections > 0 {
                    continue;
                }
                assert!(gdb.entries.len() <= n + 1);
                for (i, a) in gdb.entries.iter().enumerate() {
                    for b in &gdb.entries[i + 1..] {
                        assert!(a.envelope.is_disjoint(&b.envelope));
                    }
                }
            }
        }
    }
    let (_, db, _) = built(CORRIDOR, 1);
    assert_eq!(db.goals()[0].entries.len(), 2);
}

#[test]
fn database_files_round_trip_exactly() {
    for name in ALL_SCENARIOS {
        let (ctx, db, report) = built(name, 3);
        let file = DatabaseFile::new(ctx.scenario(), &db, summarize(&report));
        let bytes = file.to_bytes();
        let loaded = DatabaseFile::from_bytes(&bytes).unwrap().load().unwrap();
        assert_eq!(loaded.database.digest(), db.digest());
        for (a, b) in loaded.database.goals().iter().zip(db.goals()) {
            assert_eq!(a.entries.len(), b.entries.len());
            for (x, y) in a.entries.iter().zip(&b.entries) {
                assert_eq!(x.path, y.path, "{name}");
                assert_eq!(x.envelope, y.envelope);
            }
        }
        let again = DatabaseFile::new(&loaded.scenario, &loaded.database, loaded.summary).to_bytes();
        assert_eq!(again, bytes, "{name}");
    }
}
