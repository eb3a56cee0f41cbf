//! Discrete clock, FIFO action queue, batch application and simulation.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blocking::{greedy_block, nondet_block, IterationSnapshot, OracleSchedule, TieBreak};
use crate::ids::{AgentId, VarId};
use crate::model::{FormulaIdx, Model, ModelError, SystemState};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("agent `{agent}` does not control variable `{var}`")]
    OwnershipViolation { agent: AgentId, var: VarId },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A request before it is queued.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub agent: AgentId,
    pub var: VarId,
    pub value: bool,
}

impl Request {
    pub fn new(agent: impl Into<AgentId>, var: impl Into<VarId>, value: bool) -> Self {
        Request { agent: agent.into(), var: var.into(), value }
    }
}

/// A queued request to set one variable.
///
/// Engine operations assume the request was checked against the model
/// (see [`ActionQueue::enqueue`]) and panic on unknown variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionRequest {
    pub agent: AgentId,
    pub var: VarId,
    pub value: bool,
    pub arrival: u64,
}

impl ActionRequest {
    fn var_index(&self, m: &Model) -> usize {
        m.var_index(&self.var)
            .unwrap_or_else(|_| panic!("request on unknown variable `{}`", self.var))
    }
}

/// Ordered multiset of requests.
pub type Batch = Vec<ActionRequest>;

/// FIFO queue of requests. Arrival indices are assigned on enqueue and are
/// strictly increasing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActionQueue {
    items: VecDeque<ActionRequest>,
    next_arrival: u64,
}

impl ActionQueue {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a request after checking that its agent owns its variable.
    pub fn enqueue(&mut self, m: &Model, r: Request) -> Result<&ActionRequest, EngineError> {
        m.agent_index(&r.agent)?;
        if m.controller_of(&r.var)? != &r.agent {
            return Err(EngineError::OwnershipViolation { agent: r.agent, var: r.var });
        }
        self.items.push_back(ActionRequest {
            agent: r.agent,
            var: r.var,
            value: r.value,
            arrival: self.next_arrival,
        });
        self.next_arrival += 1;
        Ok(self.items.back().expect("just pushed"))
    }

    /// Removes and returns the first `min(n, len)` requests.
    pub fn take_batch(&mut self, n: usize) -> Batch {
        let k = n.min(self.items.len());
        self.items.drain(..k).collect()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ActionRequest> {
        self.items.iter()
    }
}

/// Executes `batch` on `s`. Requests apply in arrival order, so the last
/// write to a variable wins. The tick advances by one.
pub fn apply_actions(m: &Model, s: &SystemState, batch: &[ActionRequest]) -> SystemState {
    let mut order: Vec<&ActionRequest> = batch.iter().collect();
    order.sort_by_key(|r| r.arrival);
    let mut next = s.clone();
    next.tick = s.tick + 1;
    for r in order {
        next.set(r.var_index(m), r.value);
    }
    next
}

/// Outcome of executing a batch hypothetically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulationReport {
    /// Critical formulas false at the start state and true afterwards.
    pub became_true: Vec<FormulaIdx>,
    /// Requesting agents that control a variable of some formula in
    /// `became_true`, in model order.
    pub implicated_agents: Vec<AgentId>,
    pub simulated_state: SystemState,
}

impl SimulationReport {
    pub fn is_safe(&self) -> bool {
        self.became_true.is_empty()
    }
}

/// Runs `batch` against a copy of `s` and reports which critical formulas
/// flip from false to true and which requesting agents are involved.
pub fn simulate(m: &Model, s: &SystemState, batch: &[ActionRequest]) -> SimulationReport {
    let after = apply_actions(m, s, batch);
    let before_true: BTreeSet<FormulaIdx> = m.true_formulas(s).into_iter().collect();
    let became_true: Vec<FormulaIdx> = m
        .true_formulas(&after)
        .into_iter()
        .filter(|i| !before_true.contains(i))
        .collect();
    let requesting: BTreeSet<&AgentId> = batch.iter().map(|r| &r.agent).collect();
    let implicated_agents = m
        .agents()
        .iter()
        .filter(|a| requesting.contains(a))
        .filter(|a| became_true.iter().any(|&i| m.agent_touches(a, i)))
        .cloned()
        .collect();
    SimulationReport { became_true, implicated_agents, simulated_state: after }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ActionLimit {
    /// As many actions per tick as there are critical formulas.
    #[default]
    Auto,
    Fixed(usize),
}

impl ActionLimit {
    pub fn resolve(self, m: &Model) -> usize {
        match self {
            ActionLimit::Auto => m.formulas().len().max(1),
            ActionLimit::Fixed(n) => n.max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    None,
    #[default]
    Greedy,
    Nondeterministic,
}

/// What happens to an agent after a policy blocks it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlockingStrategy {
    /// Drop the agent's requests for this tick only.
    #[default]
    DropTick,
    /// Also drop its requests in every tick numbered below the given one.
    BlockUntilTick(u64),
    /// Also drop its requests for a random number of following ticks, drawn
    /// uniformly from `lo..=hi` with a generator seeded by `seed`.
    BlockForRandomInterval { seed: u64, lo: u64, hi: u64 },
    /// Drop the requests silently and remember the variables; any later
    /// request by the agent on one of them gets the agent suspended for
    /// that tick.
    SilentFreeze,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EngineConfig {
    pub max_actions_per_tick: ActionLimit,
    pub policy: Policy,
    pub blocking_strategy: BlockingStrategy,
    pub tie_break: TieBreak,
    pub seed: u64,
    pub oracle_schedule: OracleSchedule,
}

/// Blocks that outlive the tick in which they were decided.
#[derive(Debug, Clone)]
pub struct BlockedRegistry {
    /// Agent is suspended in ticks numbered strictly below the value.
    until: BTreeMap<AgentId, u64>,
    frozen: BTreeMap<AgentId, BTreeSet<VarId>>,
    rng: ChaCha8Rng,
}

impl BlockedRegistry {
    pub fn new(strategy: BlockingStrategy) -> Self {
        let seed = match strategy {
            BlockingStrategy::BlockForRandomInterval { seed, .. } => seed,
            _ => 0,
        };
        BlockedRegistry {
            until: BTreeMap::new(),
            frozen: BTreeMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn is_suspended(&self, agent: &AgentId, tick: u64, batch: &[ActionRequest]) -> bool {
        if self.until.get(agent).is_some_and(|&u| tick < u) {
            return true;
        }
        self.frozen.get(agent).is_some_and(|vars| {
            batch.iter().any(|r| &r.agent == agent && vars.contains(&r.var))
        })
    }

    fn record(&mut self, strategy: BlockingStrategy, tick: u64, agent: &AgentId, dropped: &[ActionRequest]) {
        match strategy {
            BlockingStrategy::DropTick => {}
            BlockingStrategy::BlockUntilTick(t) => {
                let e = self.until.entry(agent.clone()).or_insert(0);
                *e = (*e).max(t);
            }
            BlockingStrategy::BlockForRandomInterval { lo, hi, .. } => {
                let d = self.rng.gen_range(lo.min(hi)..=hi.max(lo));
                let e = self.until.entry(agent.clone()).or_insert(0);
                *e = (*e).max(tick + 1 + d);
            }
            BlockingStrategy::SilentFreeze => {
                self.frozen
                    .entry(agent.clone())
                    .or_default()
                    .extend(dropped.iter().filter(|r| &r.agent == agent).map(|r| r.var.clone()));
            }
        }
    }
}

/// One tick of a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickRecord {
    /// Tick of the state this record produced.
    pub tick: u64,
    pub batch: Batch,
    /// Agents whose requests were withheld by earlier blocks.
    pub suspended: Vec<AgentId>,
    pub iterations: Vec<IterationSnapshot>,
    pub blocked: Vec<AgentId>,
    pub executed: Batch,
    pub valuation: BTreeMap<VarId, bool>,
    pub secure: bool,
}

/// Sequence of tick records of one run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<TickRecord>,
}

impl RunTrace {
    pub fn all_secure(&self) -> bool {
        self.records.iter().all(|r| r.secure)
    }
}

fn tick_seed(seed: u64, tick: u64) -> u64 {
    // splitmix64 finalizer over the pair.
    let mut z = seed ^ tick.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Advances the system by one tick: takes up to `n` requests, withholds
/// those of suspended agents, lets the policy block agents, and executes
/// what remains.
pub fn tick(
    m: &Model,
    s: &SystemState,
    q: &mut ActionQueue,
    cfg: &EngineConfig,
    registry: &mut BlockedRegistry,
) -> (SystemState, TickRecord) {
    let number = s.tick + 1;
    let batch = q.take_batch(cfg.max_actions_per_tick.resolve(m));

    let mut suspended: Vec<AgentId> = Vec::new();
    for r in &batch {
        if !suspended.contains(&r.agent) && registry.is_suspended(&r.agent, number, &batch) {
            suspended.push(r.agent.clone());
        }
    }
    let candidates: Batch = batch
        .iter()
        .filter(|r| !suspended.contains(&r.agent))
        .cloned()
        .collect();

    let report = match cfg.policy {
        Policy::None => None,
        Policy::Greedy => Some(greedy_block(m, s, &candidates, cfg.tie_break)),
        Policy::Nondeterministic => Some(nondet_block(
            m,
            s,
            &candidates,
            tick_seed(cfg.seed, number),
            cfg.oracle_schedule,
        )),
    };
    let (blocked, executed, iterations) = match report {
        None => (Vec::new(), candidates.clone(), Vec::new()),
        Some(r) => (r.blocked, r.allowed, r.iterations),
    };
    for a in &blocked {
        registry.record(cfg.blocking_strategy, number, a, &candidates);
    }

    let next = apply_actions(m, s, &executed);
    let record = TickRecord {
        tick: number,
        batch,
        suspended,
        iterations,
        blocked,
        executed,
        valuation: m.valuation_map(&next),
        secure: m.is_secure(&next),
    };
    (next, record)
}

/// Runs `ticks` ticks from `initial`.
pub fn run(
    m: &Model,
    initial: &SystemState,
    queue: &mut ActionQueue,
    cfg: &EngineConfig,
    ticks: u64,
) -> (SystemState, RunTrace) {
    let mut registry = BlockedRegistry::new(cfg.blocking_strategy);
    let mut state = initial.clone();
    let mut trace = RunTrace::default();
    for _ in 0..ticks {
        let (next, record) = tick(m, &state, queue, cfg, &mut registry);
        trace.records.push(record);
        state = next;
    }
    (state, trace)
}
