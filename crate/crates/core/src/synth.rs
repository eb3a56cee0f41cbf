//! Generated systems: random small scenarios for property checks and
//! adversarial instances that force one greedy iteration per formula.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::engine::{ActionQueue, Batch, Request};
use crate::formula::Formula;
use crate::ids::{AgentId, VarId};
use crate::model::{Model, SystemState, ValidationOptions};

/// A model, a start state and one tick's batch.
#[derive(Debug, Clone)]
pub struct Instance {
    pub model: Model,
    pub state: SystemState,
    pub batch: Batch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomLimits {
    pub max_vars: usize,
    pub max_agents: usize,
    pub max_formulas: usize,
    pub max_queue: usize,
    pub formula_depth: u32,
}

impl Default for RandomLimits {
    fn default() -> Self {
        RandomLimits { max_vars: 10, max_agents: 6, max_formulas: 4, max_queue: 8, formula_depth: 3 }
    }
}

pub fn random_formula<R: Rng + ?Sized>(rng: &mut R, vars: &[VarId], depth: u32) -> Formula {
    if depth == 0 || rng.gen_bool(0.25) {
        return Formula::Var(vars.choose(rng).expect("nonempty").clone());
    }
    match rng.gen_range(0..4) {
        0 => Formula::not(random_formula(rng, vars, depth - 1)),
        1 => Formula::or(random_formula(rng, vars, depth - 1), random_formula(rng, vars, depth - 1)),
        _ => Formula::and(random_formula(rng, vars, depth - 1), random_formula(rng, vars, depth - 1)),
    }
}

/// Random partition of `n_vars` variables over `n_agents` agents, each agent
/// owning at least one.
pub fn random_partition<R: Rng + ?Sized>(
    rng: &mut R,
    n_vars: usize,
    n_agents: usize,
) -> (Vec<VarId>, Vec<(AgentId, Vec<VarId>)>) {
    assert!(n_agents >= 1 && n_vars >= n_agents);
    let vars: Vec<VarId> = (0..n_vars).map(|i| format!("v{i}").into()).collect();
    let mut order = vars.clone();
    order.shuffle(rng);
    let mut parts: Vec<(AgentId, Vec<VarId>)> =
        (0..n_agents).map(|a| (format!("a{a}").into(), Vec::new())).collect();
    for (i, v) in order.into_iter().enumerate() {
        let a = if i < n_agents { i } else { rng.gen_range(0..n_agents) };
        parts[a].1.push(v);
    }
    (vars, parts)
}

/// A valid model with a secure start state and a random batch. Formulas
/// each involve at least two agents and are false somewhere.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, limits: RandomLimits) -> Instance {
    loop {
        let n_agents = rng.gen_range(2..=limits.max_agents.max(2));
        let n_vars = rng.gen_range(n_agents..=limits.max_vars.max(n_agents));
        let (vars, parts) = random_partition(rng, n_vars, n_agents);
        let n_formulas = rng.gen_range(1..=limits.max_formulas.max(1));
        let owner_of = |v: &VarId| parts.iter().position(|(_, vs)| vs.contains(v));
        let mut formulas = Vec::new();
        for _ in 0..50 {
            if formulas.len() == n_formulas {
                break;
            }
            let f = random_formula(rng, &vars, limits.formula_depth);
            let mut owners: Vec<usize> = f.vars().iter().filter_map(owner_of).collect();
            owners.sort_unstable();
            owners.dedup();
            if owners.len() >= 2 {
                formulas.push(f);
            }
        }
        if formulas.len() != n_formulas {
            continue;
        }
        let Ok(model) = Model::new(vars.clone(), parts.clone(), formulas, ValidationOptions::default()) else {
            continue;
        };
        let Some(state) = (0..64)
            .map(|_| model.state_from_bits(0, rng.gen::<u64>()))
            .find(|s| model.is_secure(s))
        else {
            continue;
        };
        let batch = random_batch(rng, &model, &state, limits.max_queue);
        return Instance { model, state, batch };
    }
}

/// Between one and `max_len` requests; three in four ask for a change.
pub fn random_batch<R: Rng + ?Sized>(rng: &mut R, m: &Model, s: &SystemState, max_len: usize) -> Batch {
    let len = rng.gen_range(1..=max_len.max(1));
    let mut q = ActionQueue::new();
    for _ in 0..len {
        let vi = rng.gen_range(0..m.variables().len());
        let var = m.variables()[vi].clone();
        let agent = m.controller_of(&var).expect("valid model").clone();
        let value = if rng.gen_bool(0.75) { !s.value(vi) } else { s.value(vi) };
        q.enqueue(m, Request { agent, var, value }).expect("owner requests");
    }
    q.take_batch(len)
}

/// `n` agents, `n` critical formulas and a batch of `n` requests in which
/// blocking any single agent neutralizes exactly one formula, so greedy
/// blocking needs `n` iterations.
///
/// Agent `a_i` owns `x_i` and `z_{i-1}`; formula `i` is
/// `x_i & ~z_i & w_k` for a seeded choice of `k`, where the `w` variables are
/// true, spread over the agents, and never requested. Every agent asks to
/// set its `x` to true.
pub fn adversarial_instance<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Instance {
    assert!(n >= 2);
    let x = |i: usize| VarId::new(format!("x{i}"));
    let z = |i: usize| VarId::new(format!("z{i}"));
    let w = |i: usize| VarId::new(format!("w{i}"));
    let mut parts: Vec<(AgentId, Vec<VarId>)> = (0..n)
        .map(|i| (AgentId::new(format!("a{i}")), vec![x(i), z((i + n - 1) % n)]))
        .collect();
    for j in 0..n {
        let owner = rng.gen_range(0..n);
        parts[owner].1.push(w(j));
    }
    let formulas = (0..n)
        .map(|i| {
            let k = rng.gen_range(0..n);
            Formula::and(Formula::and(Formula::Var(x(i)), Formula::not(Formula::Var(z(i)))), Formula::Var(w(k)))
        })
        .collect();
    let vars: Vec<VarId> = (0..n).flat_map(|i| [x(i), z(i), w(i)]).collect();
    let model = Model::new(vars, parts, formulas, ValidationOptions::default()).expect("valid adversarial model");
    let state = model
        .state(0, (0..n).flat_map(|i| [(x(i), false), (z(i), false), (w(i), true)]))
        .expect("total valuation");
    let mut q = ActionQueue::new();
    for i in 0..n {
        q.enqueue(&model, Request::new(format!("a{i}"), x(i), true)).expect("owner requests");
    }
    let batch = q.take_batch(n);
    Instance { model, state, batch }
}
