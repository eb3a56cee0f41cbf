//! The work behind each CLI verb, returning text so it can be tested
//! without spawning the binary.

use std::fmt::Write as _;
use std::time::Instant;

use coalguard_core::analysis::{
    audit_vulnerabilities, build_state_graph, hidden_agents_h, security_formula, AnalysisError,
};
use coalguard_core::formula::{find_horn_labeling, to_horn_disjunction};
use coalguard_core::synth::adversarial_instance;
use coalguard_core::{
    apply_actions, greedy_block, run, EngineConfig, OracleSchedule, Policy, RunTrace, SystemState, TickRecord, TieBreak,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub ticks: Option<u64>,
    pub policy: Option<Policy>,
    pub seed: Option<u64>,
    pub oracle_schedule: OracleSchedule,
}

pub fn effective_config(sc: &Scenario, opts: &RunOptions) -> EngineConfig {
    EngineConfig {
        policy: opts.policy.unwrap_or(sc.config.policy),
        seed: opts.seed.unwrap_or(sc.config.seed),
        oracle_schedule: opts.oracle_schedule,
        ..sc.config
    }
}

pub fn run_scenario(sc: &Scenario, opts: &RunOptions) -> (SystemState, RunTrace) {
    let cfg = effective_config(sc, opts);
    let mut queue = sc.action_queue();
    run(&sc.model, &sc.initial, &mut queue, &cfg, opts.ticks.unwrap_or_else(|| sc.default_ticks()))
}

/// One JSON object per line, one line per tick.
pub fn trace_jsonl(trace: &RunTrace) -> String {
    let mut out = String::new();
    for r in &trace.records {
        out.push_str(&serde_json::to_string(r).expect("trace records serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_trace(text: &str) -> serde_json::Result<Vec<TickRecord>> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

/// Re-executes each record's executed requests from the initial state and
/// returns the first tick whose recorded valuation differs.
pub fn replay(sc: &Scenario, records: &[TickRecord]) -> Result<(), u64> {
    let mut s = sc.initial.clone();
    for r in records {
        s = apply_actions(&sc.model, &s, &r.executed);
        if sc.model.valuation_map(&s) != r.valuation || sc.model.is_secure(&s) != r.secure {
            return Err(r.tick);
        }
    }
    Ok(())
}

pub fn summarize(trace: &RunTrace) -> String {
    let mut out = String::new();
    for r in &trace.records {
        let names = |v: &[coalguard_core::AgentId]| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ");
        let executed = r
            .executed
            .iter()
            .map(|a| format!("{}<-{}", a.var, a.value))
            .collect::<Vec<_>>()
            .join(", ");
        write!(out, "tick {}: blocked [{}]; executed {{{}}}", r.tick, names(&r.blocked), executed).unwrap();
        if !r.suspended.is_empty() {
            write!(out, "; suspended [{}]", names(&r.suspended)).unwrap();
        }
        writeln!(out, "; {}", if r.secure { "secure" } else { "INSECURE" }).unwrap();
    }
    out
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AnalyzeOptions {
    pub state_graph: bool,
    pub horn: bool,
    pub audit: bool,
}

impl AnalyzeOptions {
    fn all_if_none(self) -> Self {
        if self.state_graph || self.horn || self.audit {
            self
        } else {
            AnalyzeOptions { state_graph: true, horn: true, audit: true }
        }
    }
}

/// Text report for `analyze`, and the state graph's edge list when the
/// graph section was requested.
pub fn analyze(sc: &Scenario, opts: AnalyzeOptions) -> Result<(String, Option<String>), AnalysisError> {
    let opts = opts.all_if_none();
    let m = &sc.model;
    let mut out = String::new();
    let mut edges = None;
    let phi = security_formula(m);
    let empty = m.formulas().is_empty();

    if opts.state_graph {
        let g = build_state_graph(m)?;
        writeln!(
            out,
            "state graph: {} variables, {} vertices, {} edges, {} secure",
            g.variable_count(),
            g.vertex_count(),
            g.edge_count(),
            g.secure_count()
        )
        .unwrap();
        writeln!(out, "full graph: {}", connectivity(g.is_connected(false))).unwrap();
        if empty {
            writeln!(out, "secure set = full graph; connected").unwrap();
        } else {
            let secure = connectivity(g.is_connected(true));
            write!(out, "secure set: {secure}").unwrap();
            if opts.horn {
                match find_horn_labeling(&phi)? {
                    Some(l) => write!(out, "; renamable Horn: yes ({l})").unwrap(),
                    None => write!(out, "; renamable Horn: no").unwrap(),
                }
            }
            out.push('\n');
        }
        edges = Some(g.to_edge_list());
    }

    if opts.horn {
        for (i, f) in m.formula_indices().zip(m.formulas()) {
            match find_horn_labeling(f)? {
                Some(l) => writeln!(out, "{i}: renamable Horn: yes ({l})").unwrap(),
                None => writeln!(out, "{i}: renamable Horn: no").unwrap(),
            }
        }
        if !empty && m.is_secure(&sc.initial) {
            let rewriting = to_horn_disjunction(&phi)?;
            let h = hidden_agents_h(m, &sc.initial, &phi, &rewriting)?;
            let names = h.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ");
            writeln!(out, "single-flip threats at initial state: {{{names}}}").unwrap();
        }
    }

    if opts.audit {
        let found = audit_vulnerabilities(m, &sc.initial)?;
        if found.is_empty() {
            writeln!(out, "audit: no coalition can make a critical formula true").unwrap();
        }
        for v in found {
            let coalition = v.coalition.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ");
            let witness = v
                .witness
                .values
                .iter()
                .map(|(var, b)| format!("{var}={b}"))
                .collect::<Vec<_>>()
                .join(", ");
            writeln!(out, "audit: {{{coalition}}} -> {} with {witness}", v.formula).unwrap();
        }
    }
    Ok((out, edges))
}

fn connectivity(c: bool) -> &'static str {
    if c {
        "connected"
    } else {
        "disconnected"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchPoint {
    pub n: usize,
    pub iterations: usize,
    /// Fastest of the repeats.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub points: Vec<BenchPoint>,
    /// Least-squares slope of log time against log n.
    pub slope: f64,
}

/// Times greedy blocking on adversarial instances of each size.
pub fn bench(sizes: &[usize], seed: u64, repeats: usize) -> BenchReport {
    let points: Vec<BenchPoint> = sizes
        .iter()
        .map(|&n| {
            let inst = adversarial_instance(&mut ChaCha8Rng::seed_from_u64(seed), n);
            let mut best = f64::INFINITY;
            let mut iterations = 0;
            for _ in 0..repeats.max(1) {
                let start = Instant::now();
                let r = greedy_block(&inst.model, &inst.state, &inst.batch, TieBreak::Fifo);
                best = best.min(start.elapsed().as_secs_f64());
                iterations = r.iterations.len();
            }
            BenchPoint { n, iterations, seconds: best }
        })
        .collect();
    let slope = log_log_slope(&points);
    BenchReport { points, slope }
}

fn log_log_slope(points: &[BenchPoint]) -> f64 {
    let xy: Vec<(f64, f64)> = points.iter().map(|p| ((p.n as f64).ln(), p.seconds.max(1e-9).ln())).collect();
    let k = xy.len() as f64;
    let (mx, my) = (xy.iter().map(|p| p.0).sum::<f64>() / k, xy.iter().map(|p| p.1).sum::<f64>() / k);
    let sxy: f64 = xy.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xy.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn format_bench(r: &BenchReport) -> String {
    let mut out = String::from("n\titerations\tseconds\n");
    for p in &r.points {
        writeln!(out, "{}\t{}\t{:.6}", p.n, p.iterations, p.seconds).unwrap();
    }
    writeln!(out, "log-log slope: {:.2}", r.slope).unwrap();
    out
}
