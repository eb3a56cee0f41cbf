//! Scenario files: a model, an initial valuation, a request queue and an
//! engine configuration in one TOML document.

use std::path::{Path, PathBuf};

use coalguard_core::engine::EngineError;
use coalguard_core::formula::FormulaError;
use coalguard_core::model::ModelError;
use coalguard_core::{
    parse_formula, ActionLimit, ActionQueue, BlockingStrategy, EngineConfig, FormulaIdx, Model, Policy, Request,
    SystemState, TieBreak, ValidationOptions, VarId,
};
use indexmap::IndexMap;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("formula {index}: {source}")]
    Formula { index: usize, source: FormulaError },
    #[error("{0}")]
    Model(#[from] ModelError),
    #[error("max_actions_per_tick must be \"auto\" or a positive integer, got \"{0}\"")]
    ActionLimit(String),
    #[error("initial value for unknown variable `{0}`")]
    UnknownInitial(VarId),
    #[error("InsecureStart: initial state makes {} true", list(.0))]
    InsecureStart(Vec<FormulaIdx>),
    #[error("queue entry {index}: {source}")]
    Ownership { index: usize, source: EngineError },
}

fn list(v: &[FormulaIdx]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(default)]
    formulas: Vec<String>,
    agents: IndexMap<String, Vec<String>>,
    #[serde(default)]
    initial: IndexMap<String, bool>,
    #[serde(default)]
    queue: Vec<RawRequest>,
    #[serde(default)]
    config: RawConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRequest {
    agent: String,
    var: String,
    value: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    max_actions_per_tick: Option<RawLimit>,
    policy: Option<Policy>,
    blocking_strategy: Option<RawStrategy>,
    tie_break: Option<TieBreak>,
    seed: Option<u64>,
    allow_single_agent_formulas: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawLimit {
    Fixed(usize),
    Named(String),
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum RawStrategy {
    DropTick,
    SilentFreeze,
    BlockUntilTick(u64),
    RandomInterval { seed: u64, lo: u64, hi: u64 },
}

impl From<RawStrategy> for BlockingStrategy {
    fn from(r: RawStrategy) -> Self {
        match r {
            RawStrategy::DropTick => BlockingStrategy::DropTick,
            RawStrategy::SilentFreeze => BlockingStrategy::SilentFreeze,
            RawStrategy::BlockUntilTick(t) => BlockingStrategy::BlockUntilTick(t),
            RawStrategy::RandomInterval { seed, lo, hi } => BlockingStrategy::BlockForRandomInterval { seed, lo, hi },
        }
    }
}

/// A loaded, validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub model: Model,
    pub initial: SystemState,
    /// Requests in arrival order.
    pub queue: Vec<Request>,
    pub config: EngineConfig,
}

impl Scenario {
    /// A fresh queue holding the scenario's requests.
    pub fn action_queue(&self) -> ActionQueue {
        let mut q = ActionQueue::new();
        for r in &self.queue {
            q.enqueue(&self.model, r.clone()).expect("checked on load");
        }
        q
    }

    /// Ticks needed to drain the queue, at least one.
    pub fn default_ticks(&self) -> u64 {
        let n = self.config.max_actions_per_tick.resolve(&self.model);
        self.queue.len().div_ceil(n).max(1) as u64
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub allow_insecure_start: bool,
}

pub fn load_scenario(path: &Path, options: LoadOptions) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_owned(), source })?;
    parse_scenario(&text, options)
}

pub fn parse_scenario(text: &str, options: LoadOptions) -> Result<Scenario, ScenarioError> {
    let raw: RawScenario = toml::from_str(text)?;

    let formulas = raw
        .formulas
        .iter()
        .enumerate()
        .map(|(i, f)| parse_formula(f).map_err(|source| ScenarioError::Formula { index: i + 1, source }))
        .collect::<Result<Vec<_>, _>>()?;
    let validation = ValidationOptions {
        allow_single_agent_formulas: raw.config.allow_single_agent_formulas.unwrap_or(false),
    };
    let variables: Vec<VarId> = raw.initial.keys().map(|v| VarId::new(v.as_str())).collect();
    let partition = raw
        .agents
        .iter()
        .map(|(a, vs)| (a.as_str().into(), vs.iter().map(|v| v.as_str().into()).collect()));
    let model = Model::new(variables, partition, formulas, validation)?;

    for v in raw.initial.keys() {
        if model.var_index(&VarId::new(v.as_str())).is_err() {
            return Err(ScenarioError::UnknownInitial(v.as_str().into()));
        }
    }
    let initial = model.state(0, raw.initial.iter().map(|(v, &b)| (v.as_str(), b)))?;
    let insecure = model.true_formulas(&initial);
    if !insecure.is_empty() && !options.allow_insecure_start {
        return Err(ScenarioError::InsecureStart(insecure));
    }

    let mut check = ActionQueue::new();
    let mut queue = Vec::with_capacity(raw.queue.len());
    for (i, r) in raw.queue.into_iter().enumerate() {
        let req = Request::new(r.agent, r.var, r.value);
        check
            .enqueue(&model, req.clone())
            .map_err(|source| ScenarioError::Ownership { index: i + 1, source })?;
        queue.push(req);
    }

    let max_actions_per_tick = match raw.config.max_actions_per_tick {
        None => ActionLimit::Auto,
        Some(RawLimit::Named(s)) if s == "auto" => ActionLimit::Auto,
        Some(RawLimit::Named(s)) => return Err(ScenarioError::ActionLimit(s)),
        Some(RawLimit::Fixed(0)) => return Err(ScenarioError::ActionLimit("0".into())),
        Some(RawLimit::Fixed(n)) => ActionLimit::Fixed(n),
    };
    let config = EngineConfig {
        max_actions_per_tick,
        policy: raw.config.policy.unwrap_or_default(),
        blocking_strategy: raw.config.blocking_strategy.map(Into::into).unwrap_or_default(),
        tie_break: raw.config.tie_break.unwrap_or_default(),
        seed: raw.config.seed.unwrap_or(0),
        oracle_schedule: Default::default(),
    };
    Ok(Scenario { model, initial, queue, config })
}
