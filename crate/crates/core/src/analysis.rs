//! Exhaustive analyses over the state graph: the hypercube whose vertices
//! are valuations and whose edges are single-variable flips.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::formula::{find_horn_labeling, Formula, FormulaError, HornDisjunction, TRUTH_TABLE_LIMIT};
use crate::ids::{AgentId, VarId};
use crate::model::{FormulaIdx, Model, ModelError, PartialValuation, SystemState};

/// Largest agent count the vulnerability audit enumerates.
pub const AUDIT_AGENT_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("{found} {what} exceed the exhaustive limit of {limit}")]
    BudgetExceeded { what: &'static str, found: usize, limit: usize },
    #[error("state is not secure")]
    NotSecure,
    #[error("formula is not false at the given state")]
    NotFalse,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

/// The state graph of a model with per-vertex security flags.
///
/// Vertex `b` is the valuation with variable `i` set to bit `i` of `b`.
#[derive(Debug, Clone)]
pub struct StateGraph {
    variables: Vec<VarId>,
    owners: Vec<AgentId>,
    secure: Vec<bool>,
}

/// Single-flip edge between `low` and `high = low | 1 << var`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub low: u32,
    pub high: u32,
    pub var: usize,
}

pub fn build_state_graph(m: &Model) -> Result<StateGraph, AnalysisError> {
    let n = m.variables().len();
    if n > TRUTH_TABLE_LIMIT {
        return Err(AnalysisError::BudgetExceeded { what: "variables", found: n, limit: TRUTH_TABLE_LIMIT });
    }
    let owners = m
        .variables()
        .iter()
        .map(|v| m.controller_of(v).cloned())
        .collect::<Result<_, _>>()?;
    let secure = (0..1u64 << n)
        .into_par_iter()
        .map(|b| m.is_secure(&m.state_from_bits(0, b)))
        .collect();
    Ok(StateGraph { variables: m.variables().to_vec(), owners, secure })
}

impl StateGraph {
    pub fn vertex_count(&self) -> usize {
        self.secure.len()
    }

    pub fn variable_count(&self) -> usize {
        self.variables.len()
    }

    pub fn secure_count(&self) -> usize {
        self.secure.iter().filter(|&&s| s).count()
    }

    pub fn is_secure(&self, vertex: u32) -> bool {
        self.secure[vertex as usize]
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        let n = self.variables.len();
        (0..self.vertex_count() as u32).flat_map(move |low| {
            (0..n)
                .filter(move |&i| low >> i & 1 == 0)
                .map(move |var| Edge { low, high: low | 1 << var, var })
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    /// Agent controlling the variable an edge flips.
    pub fn label(&self, e: &Edge) -> &AgentId {
        &self.owners[e.var]
    }

    pub fn neighbors(&self, v: u32) -> impl Iterator<Item = u32> + '_ {
        (0..self.variables.len()).map(move |i| v ^ 1 << i)
    }

    /// Bit string of a vertex, variable 0 first.
    pub fn vertex_bits(&self, v: u32) -> String {
        (0..self.variables.len())
            .map(|i| if v >> i & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    /// One line per edge: both endpoints' bit strings and the agent label.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for e in self.edges() {
            let _ = writeln!(out, "{} {} {}", self.vertex_bits(e.low), self.vertex_bits(e.high), self.label(&e));
        }
        out
    }

    fn vertex_of(&self, s: &SystemState) -> u32 {
        s.bits() as u32
    }

    /// Connectivity of the whole graph or of its secure vertices. Empty and
    /// single-vertex sets are connected.
    pub fn is_connected(&self, restrict_to_secure: bool) -> bool {
        connected_subset(self.variables.len(), |v| !restrict_to_secure || self.secure[v as usize])
    }

    /// Shortest path of secure vertices from `from` to `to`.
    pub fn secure_path(&self, from: &SystemState, to: &SystemState) -> Result<Option<Vec<u32>>, AnalysisError> {
        let (a, b) = (self.vertex_of(from), self.vertex_of(to));
        if !self.is_secure(a) || !self.is_secure(b) {
            return Err(AnalysisError::NotSecure);
        }
        let mut prev = vec![u32::MAX; self.vertex_count()];
        prev[a as usize] = a;
        let mut queue = VecDeque::from([a]);
        while let Some(v) = queue.pop_front() {
            if v == b {
                let mut path = vec![b];
                let mut cur = b;
                while cur != a {
                    cur = prev[cur as usize];
                    path.push(cur);
                }
                path.reverse();
                return Ok(Some(path));
            }
            for w in self.neighbors(v) {
                if self.secure[w as usize] && prev[w as usize] == u32::MAX {
                    prev[w as usize] = v;
                    queue.push_back(w);
                }
            }
        }
        Ok(None)
    }
}

/// Whether the vertices of the `n`-cube satisfying `member` induce a
/// connected subgraph.
pub fn connected_subset(n: usize, member: impl Fn(u32) -> bool) -> bool {
    let size = 1u32 << n;
    let Some(start) = (0..size).find(|&v| member(v)) else {
        return true;
    };
    let mut seen = vec![false; size as usize];
    seen[start as usize] = true;
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for i in 0..n {
            let w = v ^ 1 << i;
            if !seen[w as usize] && member(w) {
                seen[w as usize] = true;
                stack.push(w);
            }
        }
    }
    (0..size).all(|v| !member(v) || seen[v as usize])
}

/// Which vertex set of a formula the connectivity-vs-Horn check looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexSet {
    /// States where the formula is false (the secure states).
    #[default]
    Falsifying,
    /// States where the formula is true.
    Satisfying,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HornConnectivity {
    pub reading: VertexSet,
    pub connected: bool,
    pub renamable_horn: bool,
}

impl HornConnectivity {
    /// False only for a counterexample: connected but not renamable Horn.
    pub fn holds(&self) -> bool {
        !self.connected || self.renamable_horn
    }
}

/// Checks "connected vertex set implies a Horn labeling exists" for one
/// formula over its own variables.
pub fn check_connected_implies_horn(f: &Formula, reading: VertexSet) -> Result<HornConnectivity, AnalysisError> {
    let vars: Vec<VarId> = f.vars().into_iter().collect();
    let table = crate::formula::table::truth_table(f, &vars)?;
    let connected = connected_subset(vars.len(), |v| match reading {
        VertexSet::Falsifying => !table[v as usize],
        VertexSet::Satisfying => table[v as usize],
    });
    Ok(HornConnectivity {
        reading,
        connected,
        renamable_horn: find_horn_labeling(f)?.is_some(),
    })
}

/// Agents owning a variable of some disjunct of `rewriting` whose single
/// flip at `s` makes `phi` true. Model order.
pub fn hidden_agents_h(
    m: &Model,
    s: &SystemState,
    phi: &Formula,
    rewriting: &HornDisjunction,
) -> Result<Vec<AgentId>, AnalysisError> {
    if m.eval(phi, s)? {
        return Err(AnalysisError::NotFalse);
    }
    let candidates: BTreeSet<VarId> = rewriting.disjuncts().iter().flat_map(Formula::vars).collect();
    let mut owners = BTreeSet::new();
    for v in candidates {
        let vi = m.var_index(&v)?;
        if m.eval(phi, &s.flipped(vi))? {
            owners.insert(m.agent_index(m.controller_of(&v)?)?);
        }
    }
    Ok(owners.into_iter().map(|a| m.agents()[a].clone()).collect())
}

/// The disjunction of all critical formulas: true exactly at insecure
/// states.
pub fn security_formula(m: &Model) -> Formula {
    Formula::any(m.formulas().iter().cloned())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Vulnerability {
    pub coalition: BTreeSet<AgentId>,
    pub formula: FormulaIdx,
    pub witness: PartialValuation,
}

/// For each critical formula, every inclusion-minimal coalition able to
/// make it true from `s`, smallest first, each with a witness.
pub fn audit_vulnerabilities(m: &Model, s: &SystemState) -> Result<Vec<Vulnerability>, AnalysisError> {
    let agents = m.agents();
    if agents.len() > AUDIT_AGENT_LIMIT {
        return Err(AnalysisError::BudgetExceeded {
            what: "agents",
            found: agents.len(),
            limit: AUDIT_AGENT_LIMIT,
        });
    }
    let per_formula: Vec<Result<Vec<Vulnerability>, AnalysisError>> = m
        .formula_indices()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|i| {
            let f = m.formula(i);
            let mut found: Vec<u32> = Vec::new();
            let mut out = Vec::new();
            for size in 1..=agents.len() {
                for mask in masks_of_size(agents.len(), size) {
                    if found.iter().any(|&f| f & !mask == 0) {
                        continue;
                    }
                    let coalition: BTreeSet<AgentId> = (0..agents.len())
                        .filter(|b| mask >> b & 1 == 1)
                        .map(|b| agents[b].clone())
                        .collect();
                    if let (true, Some(witness)) = m.diamond_holds(s, &coalition, f)? {
                        found.push(mask);
                        out.push(Vulnerability { coalition, formula: i, witness });
                    }
                }
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::new();
    for r in per_formula {
        all.extend(r?);
    }
    Ok(all)
}

/// `n`-bit masks with `k` ones, in lexicographic order of their member
/// lists (lowest bit first).
fn masks_of_size(n: usize, k: usize) -> Vec<u32> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(idx.iter().fold(0, |acc, &i| acc | 1 << i));
        let Some(pos) = (0..k).rev().find(|&p| idx[p] < n - k + p) else {
            return out;
        };
        idx[pos] += 1;
        for p in pos + 1..k {
            idx[p] = idx[p - 1] + 1;
        }
    }
}
