#![allow(dead_code)]

use dynapsp::engine::{Config, Engine, Mode};
use dynapsp::oracle::exact_apsp;
use dynapsp::trace::Trace;
use dynapsp::Weight;

/// Raw-scale exact matrix of the engine's current graph.
pub fn exact_raw(e: &Engine) -> Vec<Weight> {
    let g = e.graph();
    let pert = g.perturbation().unwrap();
    exact_apsp(g).unwrap().into_iter().map(|d| pert.raw_of(d)).collect()
}

/// Replays `trace`, returning `(updates checked, mismatching updates)`.
pub fn replay(trace: &Trace, cfg: Config) -> (usize, usize) {
    let mut e = Engine::build(trace.initial_graph(), cfg).unwrap();
    let mut bad = usize::from(e.distance_matrix() != exact_raw(&e));
    for op in &trace.ops {
        e.apply_update(op).unwrap();
        if e.distance_matrix() != exact_raw(&e) {
            bad += 1;
        }
    }
    (trace.ops.len() + 1, bad)
}

pub fn cfg(mode: Mode, seed: u64) -> Config {
    Config { mode, seed, ..Config::default() }
}
