//! Per-tick blocking methods.
//!
//! [`greedy_block`] repeatedly blocks the requesting agent that touches the
//! most newly-true critical formulas. [`nondet_block`] searches agent
//! subsets of shrinking size with [`scan_oracle`] and blocks the complement
//! of the first subset that keeps every formula false.
//! [`brute_force_min_block`] is the exhaustive reference.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{simulate, ActionRequest, Batch, SimulationReport};
use crate::ids::AgentId;
use crate::model::{FormulaIdx, Model, SystemState};

/// Largest number of requesting agents the exhaustive oracle accepts.
pub const BRUTE_FORCE_LIMIT: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlockingError {
    #[error("cannot rank agents of an empty matrix")]
    EmptyMatrix,
    #[error("{found} requesting agents exceed the exhaustive limit of {limit}")]
    BudgetExceeded { found: usize, limit: usize },
}

/// Rule ordering agents with equal counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Earliest request in the tick's batch first, then agent name.
    #[default]
    Fifo,
    /// Agent name only.
    Lexicographic,
}

/// How [`scan_oracle`] evaluates its candidate subsets. The result does not
/// depend on the choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OracleSchedule {
    #[default]
    Parallel,
    Sequential,
    /// Sequential, in an order shuffled by the seed.
    Shuffled(u64),
}

/// Rows are newly-true formulas, columns implicated agents. A cell is
/// marked when the agent controls any variable of the formula.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockingMatrix {
    pub rows: Vec<FormulaIdx>,
    pub columns: Vec<AgentId>,
    pub marks: Vec<Vec<bool>>,
    pub counters: Vec<usize>,
}

impl BlockingMatrix {
    pub fn is_marked(&self, row: FormulaIdx, column: &AgentId) -> Option<bool> {
        let r = self.rows.iter().position(|&x| x == row)?;
        let c = self.columns.iter().position(|x| x == column)?;
        Some(self.marks[r][c])
    }

    pub fn counter(&self, column: &AgentId) -> Option<usize> {
        let c = self.columns.iter().position(|x| x == column)?;
        Some(self.counters[c])
    }
}

pub fn build_matrix(m: &Model, report: &SimulationReport) -> BlockingMatrix {
    let marks: Vec<Vec<bool>> = report
        .became_true
        .iter()
        .map(|&i| {
            report
                .implicated_agents
                .iter()
                .map(|a| m.agent_touches(a, i))
                .collect()
        })
        .collect();
    let counters = (0..report.implicated_agents.len())
        .map(|c| marks.iter().filter(|row| row[c]).count())
        .collect();
    BlockingMatrix {
        rows: report.became_true.clone(),
        columns: report.implicated_agents.clone(),
        marks,
        counters,
    }
}

/// Orders the matrix columns by counter, highest first. `batch` supplies
/// the arrival order used by [`TieBreak::Fifo`].
pub fn rank_agents(
    mx: &BlockingMatrix,
    tie_break: TieBreak,
    batch: &[ActionRequest],
) -> Result<Vec<AgentId>, BlockingError> {
    if mx.columns.is_empty() {
        return Err(BlockingError::EmptyMatrix);
    }
    let mut first_seen: HashMap<&AgentId, u64> = HashMap::new();
    for r in batch {
        first_seen.entry(&r.agent).or_insert(r.arrival);
    }
    let mut order: Vec<usize> = (0..mx.columns.len()).collect();
    order.sort_by(|&x, &y| {
        let (ax, ay) = (&mx.columns[x], &mx.columns[y]);
        let by_counter = mx.counters[y].cmp(&mx.counters[x]);
        let by_fifo = match tie_break {
            TieBreak::Fifo => first_seen
                .get(ax)
                .unwrap_or(&u64::MAX)
                .cmp(first_seen.get(ay).unwrap_or(&u64::MAX)),
            TieBreak::Lexicographic => std::cmp::Ordering::Equal,
        };
        by_counter.then(by_fifo).then_with(|| ax.cmp(ay))
    });
    Ok(order.into_iter().map(|c| mx.columns[c].clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GreedyIteration {
    pub became_true: Vec<FormulaIdx>,
    pub implicated: Vec<AgentId>,
    pub matrix: BlockingMatrix,
    pub ranking: Vec<AgentId>,
    pub blocked: AgentId,
}

/// Candidate subsets of equal size that keep the most formulas false.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleFrontier {
    /// Duplicate-free, in canonical (sorted) order.
    pub subsets: Vec<BTreeSet<AgentId>>,
    /// Critical formulas that do not become true under each subset.
    pub kept_false: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleStep {
    pub frontier: OracleFrontier,
    pub representative: BTreeSet<AgentId>,
    pub safe: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleRound {
    pub became_true: Vec<FormulaIdx>,
    pub implicated: Vec<AgentId>,
    pub steps: Vec<OracleStep>,
    pub chosen: BTreeSet<AgentId>,
    pub blocked: Vec<AgentId>,
}

/// Audit record of one blocking iteration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IterationSnapshot {
    Greedy(GreedyIteration),
    Oracle(OracleRound),
    Exhaustive { kept: BTreeSet<AgentId> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockReport {
    /// Blocked agents, in blocking order.
    pub blocked: Vec<AgentId>,
    /// Requests of agents that were not blocked.
    pub allowed: Batch,
    pub iterations: Vec<IterationSnapshot>,
}

fn without_agents(batch: &[ActionRequest], blocked: &[AgentId]) -> Batch {
    batch
        .iter()
        .filter(|r| !blocked.contains(&r.agent))
        .cloned()
        .collect()
}

/// Greedy blocking: simulate, build the matrix, block the top-ranked agent,
/// drop its requests and repeat until no formula becomes true.
///
/// Runs at most one iteration per requesting agent.
pub fn greedy_block(
    m: &Model,
    s: &SystemState,
    batch: &[ActionRequest],
    tie_break: TieBreak,
) -> BlockReport {
    let mut blocked = Vec::new();
    let mut allowed = batch.to_vec();
    let mut iterations = Vec::new();
    loop {
        let report = simulate(m, s, &allowed);
        if report.is_safe() {
            break;
        }
        let matrix = build_matrix(m, &report);
        // A newly-true formula always has a requesting agent among its
        // controllers, so the matrix has columns.
        let ranking = rank_agents(&matrix, tie_break, batch).expect("nonempty matrix");
        let top = ranking[0].clone();
        allowed.retain(|r| r.agent != top);
        blocked.push(top.clone());
        iterations.push(IterationSnapshot::Greedy(GreedyIteration {
            became_true: report.became_true,
            implicated: report.implicated_agents,
            matrix,
            ranking,
            blocked: top,
        }));
    }
    BlockReport { blocked, allowed, iterations }
}

/// Requests surviving when only `kept` among `universe` may act. Agents
/// outside `universe` always act.
fn restrict(batch: &[ActionRequest], universe: &BTreeSet<AgentId>, kept: &BTreeSet<AgentId>) -> Batch {
    batch
        .iter()
        .filter(|r| !universe.contains(&r.agent) || kept.contains(&r.agent))
        .cloned()
        .collect()
}

/// Formulas that do not flip to true when running `batch` from `s`.
fn kept_false(m: &Model, s: &SystemState, batch: &[ActionRequest]) -> usize {
    m.formulas().len() - simulate(m, s, batch).became_true.len()
}

/// Expands every subset of `input` into its subsets one element smaller,
/// simulates each with only those agents of `universe` acting, and keeps
/// the ones leaving the most formulas false.
///
/// Every member of `input` must be nonempty.
pub fn scan_oracle(
    m: &Model,
    s: &SystemState,
    batch: &[ActionRequest],
    universe: &BTreeSet<AgentId>,
    input: &[BTreeSet<AgentId>],
    schedule: OracleSchedule,
) -> OracleFrontier {
    let candidates: Vec<BTreeSet<AgentId>> = input
        .iter()
        .flat_map(|set| {
            debug_assert!(!set.is_empty());
            set.iter().map(move |drop| {
                let mut child = set.clone();
                child.remove(drop);
                child
            })
        })
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let score = |c: &BTreeSet<AgentId>| kept_false(m, s, &restrict(batch, universe, c));
    let scores: Vec<usize> = match schedule {
        OracleSchedule::Parallel => candidates.par_iter().map(score).collect(),
        OracleSchedule::Sequential => candidates.iter().map(score).collect(),
        OracleSchedule::Shuffled(seed) => {
            let mut order: Vec<usize> = (0..candidates.len()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let mut out = vec![0; candidates.len()];
            for i in order {
                out[i] = score(&candidates[i]);
            }
            out
        }
    };

    let best = scores.iter().copied().max().unwrap_or(0);
    OracleFrontier {
        subsets: candidates
            .into_iter()
            .zip(scores)
            .filter(|&(_, sc)| sc == best)
            .map(|(c, _)| c)
            .collect(),
        kept_false: best,
    }
}

/// Oracle-based blocking.
///
/// Starting from the implicated agents `A'`, each step replaces the current
/// subsets by their best one-smaller subsets. One seeded representative of
/// each frontier is tested (all members tie on the count); the first one
/// keeping every formula false is kept and `A'` minus it is blocked. At most
/// `|A'|` steps run. If requests of agents outside `A'` still make a formula
/// true afterwards, the procedure repeats on the reduced batch.
pub fn nondet_block(
    m: &Model,
    s: &SystemState,
    batch: &[ActionRequest],
    seed: u64,
    schedule: OracleSchedule,
) -> BlockReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = m.formulas().len();
    let mut blocked: Vec<AgentId> = Vec::new();
    let mut allowed = batch.to_vec();
    let mut iterations = Vec::new();
    loop {
        let report = simulate(m, s, &allowed);
        if report.is_safe() {
            break;
        }
        let universe: BTreeSet<AgentId> = report.implicated_agents.iter().cloned().collect();
        let mut input = vec![universe.clone()];
        let mut steps = Vec::new();
        let mut chosen = None;
        for _ in 0..universe.len() {
            let frontier = scan_oracle(m, s, &allowed, &universe, &input, schedule);
            let representative = frontier
                .subsets
                .choose(&mut rng)
                .expect("frontier of nonempty input")
                .clone();
            let safe = frontier.kept_false == total;
            input = frontier.subsets.clone();
            steps.push(OracleStep { frontier, representative: representative.clone(), safe });
            if safe {
                chosen = Some(representative);
                break;
            }
        }
        let chosen = chosen.unwrap_or_else(|| {
            input
                .choose(&mut rng)
                .cloned()
                .unwrap_or_default()
        });
        let round_blocked: Vec<AgentId> = report
            .implicated_agents
            .iter()
            .filter(|a| !chosen.contains(*a))
            .cloned()
            .collect();
        allowed = without_agents(&allowed, &round_blocked);
        blocked.extend(round_blocked.iter().cloned());
        iterations.push(IterationSnapshot::Oracle(OracleRound {
            became_true: report.became_true,
            implicated: report.implicated_agents,
            steps,
            chosen,
            blocked: round_blocked,
        }));
    }
    BlockReport { blocked, allowed, iterations }
}

/// Exhaustive reference: the largest set of requesting agents whose
/// requests keep every critical formula from becoming true. Among maximum
/// sets, the one whose blocked complement is lexicographically least wins.
pub fn brute_force_min_block(
    m: &Model,
    s: &SystemState,
    batch: &[ActionRequest],
) -> Result<BlockReport, BlockingError> {
    let mut requesting: Vec<AgentId> = batch.iter().map(|r| r.agent.clone()).collect();
    requesting.sort();
    requesting.dedup();
    let k = requesting.len();
    if k > BRUTE_FORCE_LIMIT {
        return Err(BlockingError::BudgetExceeded { found: k, limit: BRUTE_FORCE_LIMIT });
    }
    let universe: BTreeSet<AgentId> = requesting.iter().cloned().collect();
    let mut best: Option<(usize, Vec<AgentId>, BTreeSet<AgentId>)> = None;
    for mask in 0u32..1 << k {
        let size = mask.count_ones() as usize;
        if best.as_ref().is_some_and(|(b, _, _)| size < *b) {
            continue;
        }
        let kept: BTreeSet<AgentId> = (0..k)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| requesting[i].clone())
            .collect();
        if !simulate(m, s, &restrict(batch, &universe, &kept)).is_safe() {
            continue;
        }
        let blocked: Vec<AgentId> = requesting.iter().filter(|a| !kept.contains(*a)).cloned().collect();
        let better = match &best {
            None => true,
            Some((b, bb, _)) => size > *b || blocked < *bb,
        };
        if better {
            best = Some((size, blocked, kept));
        }
    }
    // The empty set always qualifies from a secure start; from an insecure
    // one nothing may, and everyone is blocked.
    let (blocked, kept) = best
        .map(|(_, b, k)| (b, k))
        .unwrap_or_else(|| (requesting.clone(), BTreeSet::new()));
    Ok(BlockReport {
        allowed: without_agents(batch, &blocked),
        blocked,
        iterations: vec![IterationSnapshot::Exhaustive { kept }],
    })
}
