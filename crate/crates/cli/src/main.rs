use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use dynapsp::engine::{Config, Engine, Mode};
use dynapsp::graph::Graph;
use dynapsp::oracle::exact_apsp;
use dynapsp::trace::Trace;
use dynapsp::{Update, Weight, INF};

const RUN_SCHEMA: &str = "# apsp-bench run v1";
const BENCH_SCHEMA: &str = "# apsp-bench bench v1";

#[derive(Parser)]
#[command(name = "apsp-bench", version, about = "Generate, replay and benchmark dynamic APSP workloads")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a random trace.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.2)]
        density: f64,
        #[arg(long, default_value_t = 10)]
        w_max: Weight,
        #[arg(long, default_value_t = 100)]
        ops: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout if omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Replay a trace against one engine.
    Run {
        trace: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
        /// Compare every matrix with a from-scratch recompute.
        #[arg(long)]
        verify: bool,
        /// Per-op CSV report.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Median per-update time of an engine against full recompute.
    Bench {
        /// Comma-separated vertex counts, ascending.
        #[arg(long, value_delimiter = ',', default_value = "128,256,512,1024")]
        n: Vec<usize>,
        /// Timed updates per size.
        #[arg(long, default_value_t = 8)]
        reps: usize,
        #[arg(long, default_value_t = 1.0)]
        density: f64,
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum EngineKind {
    Final,
    Basic,
    OracleTest,
    Bruteforce,
}

#[derive(clap::Args)]
struct EngineArgs {
    #[arg(long, value_enum, default_value = "final")]
    engine: EngineKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    #[arg(long = "c-tau", default_value_t = 1.0)]
    c_tau: f64,
}

/// Either the dynamic engine or a graph recomputed after every update.
enum Runner {
    Engine(Box<Engine>),
    Brute { graph: Graph, dist: Vec<Weight> },
}

impl Runner {
    fn new(args: &EngineArgs, g: Graph) -> Result<Self> {
        let mode = match args.engine {
            EngineKind::Final => Mode::Final,
            EngineKind::Basic => Mode::Basic,
            EngineKind::OracleTest => Mode::OracleTest,
            EngineKind::Bruteforce => {
                let dist = exact_apsp(&g)?;
                return Ok(Runner::Brute { graph: g, dist });
            }
        };
        let cfg = Config { seed: args.seed, kappa: args.kappa, c_tau: args.c_tau, mode, ..Config::default() };
        Ok(Runner::Engine(Box::new(Engine::build(g, cfg)?)))
    }

    fn apply(&mut self, op: &Update) -> Result<()> {
        match self {
            Runner::Engine(e) => e.apply_update(op)?,
            Runner::Brute { graph, dist } => {
                apply_to_graph(graph, op)?;
                *dist = exact_apsp(graph)?;
            }
        }
        Ok(())
    }

    fn matrix(&self) -> Vec<Weight> {
        match self {
            Runner::Engine(e) => e.distance_matrix(),
            Runner::Brute { dist, .. } => dist.clone(),
        }
    }

    fn counters(&self) -> (u64, u64) {
        match self {
            Runner::Engine(e) => {
                let s = &e.stats().last;
                (s.recoveries.iter().sum(), s.extractions)
            }
            Runner::Brute { .. } => (0, 0),
        }
    }
}

fn apply_to_graph(g: &mut Graph, op: &Update) -> dynapsp::Result<()> {
    match op {
        Update::Delete(v) => g.delete_vertex(*v),
        Update::Insert { v, in_edges, out_edges } => g.insert_vertex(*v, in_edges, out_edges),
    }
}

fn csv_writer(path: &PathBuf, schema: &str) -> Result<csv::Writer<fs::File>> {
    let mut f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    writeln!(f, "{schema}")?;
    Ok(csv::Writer::from_writer(f))
}

fn cmd_gen(n: usize, density: f64, w_max: Weight, ops: usize, seed: u64, out: Option<PathBuf>) -> Result<()> {
    let text = Trace::generate(n, density, w_max, ops, seed)?.to_text();
    match out {
        Some(p) => fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Returns whether verification found a mismatch.
fn cmd_run(path: PathBuf, args: EngineArgs, verify: bool, csv: Option<PathBuf>) -> Result<bool> {
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let trace = Trace::parse(&text)?;
    let mut runner = Runner::new(&args, trace.initial_graph())?;
    let mut truth = verify.then(|| trace.initial_graph());
    let mut out = csv.as_ref().map(|p| csv_writer(p, RUN_SCHEMA)).transpose()?;
    if let Some(w) = &mut out {
        w.write_record(["op", "kind", "wall_us", "recoveries", "extractions", "mismatches"])?;
    }
    let mut total_mismatch = 0u64;
    let mut first_bad = None;
    let t_all = Instant::now();
    for (i, op) in trace.ops.iter().enumerate() {
        let t0 = Instant::now();
        runner.apply(op)?;
        let us = t0.elapsed().as_micros();
        let mut bad = 0u64;
        if let Some(g) = &mut truth {
            apply_to_graph(g, op)?;
            let want = exact_apsp(g)?;
            bad = runner.matrix().iter().zip(&want).filter(|(a, b)| a != b).count() as u64;
            if bad > 0 && first_bad.is_none() {
                first_bad = Some(i);
            }
        }
        total_mismatch += bad;
        if let Some(w) = &mut out {
            let kind = if matches!(op, Update::Delete(_)) { "D" } else { "I" };
            let (rec, ext) = runner.counters();
            w.write_record([i.to_string(), kind.into(), us.to_string(), rec.to_string(), ext.to_string(), bad.to_string()])?;
        }
    }
    if let Some(w) = &mut out {
        w.flush()?;
    }
    let m = runner.matrix();
    let finite = m.iter().filter(|&&d| d != INF).count();
    println!(
        "replayed {} ops in {:.3}s, {finite} finite entries{}",
        trace.ops.len(),
        t_all.elapsed().as_secs_f64(),
        if verify { format!(", {total_mismatch} mismatching entries") } else { String::new() }
    );
    if let Some(i) = first_bad {
        eprintln!("verification failed: seed {} op {i}", args.seed);
        return Ok(true);
    }
    Ok(false)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    v[v.len() / 2]
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn cmd_bench(ns: Vec<usize>, reps: usize, density: f64, args: EngineArgs, csv: Option<PathBuf>) -> Result<()> {
    anyhow::ensure!(ns.windows(2).all(|w| w[0] < w[1]), "--n must be ascending");
    anyhow::ensure!(reps > 0, "--reps must be positive");
    let mut out = csv.as_ref().map(|p| csv_writer(p, BENCH_SCHEMA)).transpose()?;
    let header = ["n", "engine_median_us", "recompute_median_us", "engine_mean_us", "recompute_mean_us"];
    if let Some(w) = &mut out {
        w.write_record(header)?;
    }
    println!("{}", header.join(","));
    for n in ns {
        let trace = Trace::generate(n, density, 10, reps, args.seed)?;
        let mut runner = Runner::new(&args, trace.initial_graph())?;
        let mut g = trace.initial_graph();
        let (mut te, mut tr) = (Vec::new(), Vec::new());
        for op in &trace.ops {
            let t0 = Instant::now();
            runner.apply(op)?;
            te.push(t0.elapsed().as_secs_f64() * 1e6);
            apply_to_graph(&mut g, op)?;
            let t0 = Instant::now();
            std::hint::black_box(exact_apsp(&g)?);
            tr.push(t0.elapsed().as_secs_f64() * 1e6);
        }
        let row = [
            n.to_string(),
            format!("{:.1}", median(&mut te)),
            format!("{:.1}", median(&mut tr)),
            format!("{:.1}", mean(&te)),
            format!("{:.1}", mean(&tr)),
        ];
        println!("{}", row.join(","));
        if let Some(w) = &mut out {
            w.write_record(&row)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Gen { n, density, w_max, ops, seed, out } => cmd_gen(n, density, w_max, ops, seed, out).map(|_| false),
        Cmd::Run { trace, engine, verify, csv } => cmd_run(trace, engine, verify, csv),
        Cmd::Bench { n, reps, density, engine, csv } => cmd_bench(n, reps, density, engine, csv).map(|_| false),
    };
    match res {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
