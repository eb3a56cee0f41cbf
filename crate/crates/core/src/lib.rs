//! Blocking underhand attacks by hidden coalitions in multi-agent systems
//! of propositional control.
//!
//! Each variable is owned by one agent, and only that agent may change it.
//! The system is secure while every critical formula is false. At each tick
//! agents submit requests; a blocking policy simulates the batch and
//! withholds the requests of agents whose combined effect would make a
//! critical formula true, without knowing which agents cooperate.

pub mod analysis;
pub mod blocking;
pub mod engine;
pub mod fixtures;
pub mod formula;
pub mod ids;
pub mod model;
pub mod synth;

pub use blocking::{
    brute_force_min_block, build_matrix, greedy_block, nondet_block, rank_agents, scan_oracle, BlockReport,
    BlockingMatrix, OracleFrontier, OracleSchedule, TieBreak,
};
pub use engine::{
    apply_actions, run, simulate, tick, ActionLimit, ActionQueue, ActionRequest, Batch, BlockedRegistry,
    BlockingStrategy, EngineConfig, Policy, Request, RunTrace, SimulationReport, TickRecord,
};
pub use formula::{parse_formula, Formula};
pub use ids::{AgentId, VarId};
pub use model::{FormulaIdx, Model, SystemState, ValidationOptions};
