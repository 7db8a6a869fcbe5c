mod common;

use proptest::prelude::*;

use dynapsp::engine::{floyd_insert, Config, Engine, LongPaths, Mode};
use dynapsp::graph::{Graph, Snapshot};
use dynapsp::hop::HopLevels;
use dynapsp::layer::concat_tables;
use dynapsp::long_paths::rand_get_shortest_paths;
use dynapsp::oracle::{exact_apsp, floyd_warshall, HopAndLength};
use dynapsp::path::PathStore;
use dynapsp::sssp::ssshdp;
use dynapsp::trace::{random_graph, Trace};
use dynapsp::INF;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn few(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(few(256))]

    #[test]
    fn grid_cap_is_below_one_and_a_half_root_n(n in 2usize..=10_000) {
        let lv = HopLevels::new(n);
        let cap = lv.cap() as f64;
        prop_assert!(cap * cap >= n as f64);
        prop_assert!(cap < 1.5 * (n as f64).sqrt() + 1.0);
    }

    #[test]
    fn grid_reciprocal_sum_and_growth(n in 1usize..=10_000) {
        let lv = HopLevels::new(n);
        let g = lv.grid();
        let sum: f64 = g[..lv.levels()].iter().map(|&h| 1.0 / h as f64).sum();
        prop_assert!(sum <= 3.0);
        for j in 0..g.len().saturating_sub(4) {
            prop_assert!(g[j + 4] > 4 * g[j]);
        }
    }

    #[test]
    fn level_of_inverts_grid(n in 1usize..=5_000, x in 1u64..=500) {
        let lv = HopLevels::new(n);
        let j = lv.level_of(x);
        prop_assert!(x <= lv.h(j));
        prop_assert!(j == 0 || x > lv.h(j - 1));
    }
}

proptest! {
    #![proptest_config(few(48))]

    #[test]
    fn perturbation_recovers_raw_distance_and_hops(n in 2usize..=14, dens in 0.1f64..0.6, seed: u64) {
        let raw = random_graph(n, dens, 9, seed);
        let mut g = raw.clone();
        g.perturb_all(seed ^ 1).unwrap();
        let pert = g.perturbation().unwrap().clone();
        let d_raw = exact_apsp(&raw).unwrap();
        let d = exact_apsp(&g).unwrap();
        let hl = HopAndLength::new(&g).unwrap();
        for i in 0..n * n {
            prop_assert_eq!(pert.raw_of(d[i]), d_raw[i]);
            if d[i] != INF {
                prop_assert_eq!(pert.hops_of(d[i]) as usize, hl.hop[i]);
            }
        }
    }

    #[test]
    fn floyd_insert_matches_floyd_warshall(n in 2usize..=14, dens in 0.1f64..0.7, seed: u64, split in 0usize..14) {
        let mut g = random_graph(n, dens, 9, seed);
        g.perturb_all(seed).unwrap();
        let k = split.min(n);
        let mut sub = g.clone();
        for v in k..n {
            sub.delete_vertex(v).unwrap();
        }
        let mut a = exact_apsp(&sub).unwrap();
        let mut present: Vec<bool> = (0..n).map(|v| v < k).collect();
        let new: Vec<usize> = (k..n).collect();
        floyd_insert(&mut a, &mut present, &new, |u, v| g.weight(u, v));
        prop_assert_eq!(a, floyd_warshall(&g).unwrap());
    }

    #[test]
    fn long_path_matrix_never_undercuts(n in 2usize..=24, dens in 0.05f64..0.4, seed: u64, h in 1u64..=8) {
        let mut g = random_graph(n, dens, 9, seed);
        g.perturb_all(seed).unwrap();
        let snap = Snapshot::from_graph_unreduced(&g);
        let blocked = vec![false; n];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, _) = rand_get_shortest_paths(&snap, &blocked, h, 1.0, &mut rng);
        let d = exact_apsp(&g).unwrap();
        for i in 0..n * n {
            prop_assert!(a[i] >= d[i]);
        }
        for s in 0..n {
            prop_assert_eq!(a[s * n + s], 0);
        }
        if h == 1 {
            prop_assert_eq!(a, d);
        }
    }

    #[test]
    fn concat_entries_are_paths_through_center(n in 3usize..=10, seed: u64, c in 0usize..10) {
        let c = c % n;
        let mut g = random_graph(n, 0.35, 9, seed);
        g.perturb_all(seed).unwrap();
        let snap = Snapshot::from_graph_unreduced(&g);
        let blocked = vec![false; n];
        let mut st = PathStore::new();
        let mut fam = Vec::new();
        for s in 0..n {
            fam.extend(ssshdp(&snap, &blocked, s, 2, false, &mut st).into_iter().filter(|&p| st.hop(p) > 0));
        }
        let h = fam.iter().map(|&p| st.hop(p)).max().unwrap_or(0);
        let (pi, pi_bar) = concat_tables(&mut st, n, &fam, c).unwrap();
        for table in [&pi, &pi_bar] {
            for s in 0..n {
                for t in 0..n {
                    let p = table[s * n + t];
                    if p.is_bottom() {
                        continue;
                    }
                    prop_assert!(s != t);
                    let vs = st.vertices(p).unwrap();
                    prop_assert_eq!(vs[0], s);
                    prop_assert_eq!(*vs.last().unwrap(), t);
                    prop_assert!(vs.contains(&c));
                    prop_assert!(st.hop(p) <= 3 * h);
                    let w = st.recompute_weight(p, |u, v| g.weight(u, v));
                    prop_assert_eq!(w, st.weight(p));
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(few(12))]

    #[test]
    fn engine_matches_oracle(n in 4usize..=16, seed: u64, mode in 0usize..3, minimal: bool) {
        let mode = [Mode::Final, Mode::Basic, Mode::OracleTest][mode];
        let trace = Trace::generate(n, 0.25, 10, 2 * n, seed).unwrap();
        let long_paths = if minimal { LongPaths::Minimal } else { LongPaths::Sampled };
        let (_, bad) = common::replay(&trace, Config { seed, mode, long_paths, ..Config::default() });
        prop_assert_eq!(bad, 0);
    }

    #[test]
    fn rebuild_cadence_and_congestion(n in 4usize..=24, seed: u64) {
        let trace = Trace::generate(n, 0.25, 10, 2 * n, seed).unwrap();
        let mut e = Engine::build(trace.initial_graph(), Config { seed, ..Config::default() }).unwrap();
        let mut major_at = 0;
        let mut majors = e.stats().major_rebuilds;
        for op in &trace.ops {
            e.apply_update(op).unwrap();
            let k = e.update_count();
            if e.stats().major_rebuilds != majors {
                majors = e.stats().major_rebuilds;
                major_at = k;
            }
            for l in e.layers() {
                let period = 1u64 << l.i;
                prop_assert!(l.rebuilt_at % period == 0 || l.rebuilt_at == major_at);
                prop_assert!(l.rebuilt_at >= major_at);
                prop_assert!(k - l.rebuilt_at < period);
            }
        }
        prop_assert_eq!(e.stats().congestion_violations, 0);
        prop_assert_eq!(e.stats().hop_violations, 0);
        prop_assert_eq!(e.stats().duplicate_extensions, 0);
    }

    #[test]
    fn same_seed_same_state(n in 4usize..=20, seed: u64) {
        let trace = Trace::generate(n, 0.25, 10, n, seed).unwrap();
        let run = || {
            let mut e = Engine::build(trace.initial_graph(), Config { seed, ..Config::default() }).unwrap();
            let mut mats = vec![e.perturbed_matrix().to_vec()];
            for op in &trace.ops {
                e.apply_update(op).unwrap();
                mats.push(e.perturbed_matrix().to_vec());
            }
            let sets: Vec<_> = e.layers().iter().map(|l| (l.centers.clone(), l.o.clone(), l.o_bar.clone())).collect();
            (mats, sets, e.stats().extractions)
        };
        prop_assert_eq!(run(), run());
    }
}

#[test]
fn fresh_graph_has_empty_distances() {
    let g = Graph::new(3);
    let d = exact_apsp(&g).unwrap();
    assert_eq!(d[1], INF);
    assert_eq!(d[4], 0);
}
