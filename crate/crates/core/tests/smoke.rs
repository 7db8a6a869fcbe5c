mod common;

use dynapsp::engine::Mode;
use dynapsp::trace::Trace;

#[test]
fn small_traces_match_oracle() {
    for mode in [Mode::Final, Mode::Basic, Mode::OracleTest] {
        for seed in 0..3 {
            let t = Trace::generate(12, 0.3, 10, 20, seed).unwrap();
            let (n, bad) = common::replay(&t, common::cfg(mode, seed));
            assert_eq!(bad, 0, "{mode:?} seed {seed}: {bad}/{n} mismatches");
        }
    }
}

#[test]
fn minimal_long_paths_match_oracle() {
    use dynapsp::engine::LongPaths;
    for mode in [Mode::Final, Mode::Basic, Mode::OracleTest] {
        for seed in 0..3 {
            let t = Trace::generate(20, 0.2, 10, 30, seed).unwrap();
            let mut c = common::cfg(mode, seed);
            c.long_paths = LongPaths::Minimal;
            let (n, bad) = common::replay(&t, c);
            assert_eq!(bad, 0, "{mode:?} seed {seed}: {bad}/{n} mismatches");
        }
    }
}

#[test]
fn uncongested_minimal_match_oracle() {
    use dynapsp::engine::LongPaths;
    for mode in [Mode::Final, Mode::Basic, Mode::OracleTest] {
        for seed in 0..4 {
            let t = Trace::generate(24, 0.15, 10, 40, seed).unwrap();
            let mut c = common::cfg(mode, seed);
            c.long_paths = LongPaths::Minimal;
            c.c_tau = 100.0;
            let (n, bad) = common::replay(&t, c);
            assert_eq!(bad, 0, "{mode:?} seed {seed}: {bad}/{n} mismatches");
        }
    }
}
