//! Agents, variables, ownership, critical formulas, and states.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::Formula;
use crate::ids::{AgentId, VarId};

/// Largest coalition variable count searched exhaustively.
pub const DIAMOND_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(VarId),
    #[error("unknown agent `{0}`")]
    UnknownAgent(AgentId),
    #[error("coalition controls {found} variables, exhaustive limit is {limit}")]
    BudgetExceeded { found: usize, limit: usize },
    #[error("valuation has no value for `{0}`")]
    MissingValue(VarId),
    #[error("invalid model: {}", join(.0))]
    Invalid(Vec<Violation>),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Index of a critical formula. Printed 1-based, as `phi1`, `phi2`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct FormulaIdx(pub usize);

impl fmt::Display for FormulaIdx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "phi{}", self.0 + 1)
    }
}

impl From<FormulaIdx> for String {
    fn from(i: FormulaIdx) -> String {
        i.to_string()
    }
}

impl TryFrom<String> for FormulaIdx {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.strip_prefix("phi")
            .and_then(|n| n.parse::<usize>().ok())
            .filter(|&n| n >= 1)
            .map(|n| FormulaIdx(n - 1))
            .ok_or_else(|| format!("bad formula label `{s}`"))
    }
}

/// A rule broken by a model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Violation {
    NoAgents,
    NoVariables,
    UncoveredVariable(VarId),
    DoublyOwned(VarId),
    DuplicateAgent(AgentId),
    UnknownAgent { formula: FormulaIdx, agent: AgentId },
    /// Fewer than two agents control the formula's variables.
    SingleAgentFormula(FormulaIdx),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoAgents => f.write_str("model has no agents"),
            Violation::NoVariables => f.write_str("model has no variables"),
            Violation::UncoveredVariable(v) => write!(f, "variable `{v}` is not controlled by any agent"),
            Violation::DoublyOwned(v) => write!(f, "DoublyOwned({v}): variable controlled by more than one agent"),
            Violation::DuplicateAgent(a) => write!(f, "agent `{a}` declared twice"),
            Violation::UnknownAgent { formula, agent } => write!(f, "{formula} mentions unknown agent `{agent}`"),
            Violation::SingleAgentFormula(i) => write!(f, "{i} is controlled by fewer than two agents"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ValidationOptions {
    /// Report single-agent formulas as warnings instead of errors.
    pub allow_single_agent_formulas: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub errors: Vec<Violation>,
    pub warnings: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

/// System model: agents, variables, the ownership partition and the
/// critical formulas. The system is secure when every critical formula is
/// false.
#[derive(Debug, Clone)]
pub struct Model {
    agents: Vec<AgentId>,
    variables: Vec<VarId>,
    partition: Vec<Vec<usize>>,
    formulas: Vec<Formula>,
    var_index: HashMap<VarId, usize>,
    agent_index: HashMap<AgentId, usize>,
    owner: Vec<Option<usize>>,
    formula_vars: Vec<Vec<usize>>,
    raw_partition: Vec<(AgentId, Vec<VarId>)>,
}

impl Model {
    /// Builds a model without validating it.
    ///
    /// The variable order is `variables` followed by any other variable
    /// that appears in the partition or a formula, in order of appearance.
    pub fn from_parts(
        variables: impl IntoIterator<Item = VarId>,
        partition: impl IntoIterator<Item = (AgentId, Vec<VarId>)>,
        formulas: Vec<Formula>,
    ) -> Model {
        let raw_partition: Vec<(AgentId, Vec<VarId>)> = partition.into_iter().collect();
        let mut var_list: Vec<VarId> = Vec::new();
        let mut var_index = HashMap::new();
        let mut add = |v: &VarId, list: &mut Vec<VarId>| {
            var_index.entry(v.clone()).or_insert_with(|| {
                list.push(v.clone());
                list.len() - 1
            });
        };
        for v in variables {
            add(&v, &mut var_list);
        }
        for (_, vars) in &raw_partition {
            for v in vars {
                add(v, &mut var_list);
            }
        }
        for f in &formulas {
            for v in f.vars() {
                add(&v, &mut var_list);
            }
        }

        let mut agents = Vec::new();
        let mut agent_index = HashMap::new();
        let mut partition: Vec<Vec<usize>> = Vec::new();
        let mut owner = vec![None; var_list.len()];
        for (a, vars) in &raw_partition {
            let ai = *agent_index.entry(a.clone()).or_insert_with(|| {
                agents.push(a.clone());
                partition.push(Vec::new());
                agents.len() - 1
            });
            for v in vars {
                let vi = var_index[v];
                if !partition[ai].contains(&vi) {
                    partition[ai].push(vi);
                }
                owner[vi].get_or_insert(ai);
            }
        }
        for p in &mut partition {
            p.sort_unstable();
        }
        let formula_vars = formulas
            .iter()
            .map(|f| f.vars().iter().map(|v| var_index[v]).collect())
            .collect();
        Model {
            agents,
            variables: var_list,
            partition,
            formulas,
            var_index,
            agent_index,
            owner,
            formula_vars,
            raw_partition,
        }
    }

    /// Builds and validates a model.
    pub fn new(
        variables: impl IntoIterator<Item = VarId>,
        partition: impl IntoIterator<Item = (AgentId, Vec<VarId>)>,
        formulas: Vec<Formula>,
        options: ValidationOptions,
    ) -> Result<Model, ModelError> {
        let m = Model::from_parts(variables, partition, formulas);
        let report = m.validate(options);
        if report.is_ok() {
            Ok(m)
        } else {
            Err(ModelError::Invalid(report.errors))
        }
    }

    /// Checks the partition and formula rules. Every violation is listed.
    pub fn validate(&self, options: ValidationOptions) -> ValidationReport {
        let mut report = ValidationReport::default();
        if self.agents.is_empty() {
            report.errors.push(Violation::NoAgents);
        }
        if self.variables.is_empty() {
            report.errors.push(Violation::NoVariables);
        }
        let mut seen_agents = BTreeSet::new();
        let mut owners: Vec<BTreeSet<&AgentId>> = vec![BTreeSet::new(); self.variables.len()];
        for (a, vars) in &self.raw_partition {
            if !seen_agents.insert(a) {
                report.errors.push(Violation::DuplicateAgent(a.clone()));
            }
            for v in vars {
                owners[self.var_index[v]].insert(a);
            }
        }
        for (vi, o) in owners.iter().enumerate() {
            match o.len() {
                0 => report.errors.push(Violation::UncoveredVariable(self.variables[vi].clone())),
                1 => {}
                _ => report.errors.push(Violation::DoublyOwned(self.variables[vi].clone())),
            }
        }
        for (i, f) in self.formulas.iter().enumerate() {
            let idx = FormulaIdx(i);
            for agent in f.coalition_agents() {
                if !self.agent_index.contains_key(&agent) {
                    report.errors.push(Violation::UnknownAgent { formula: idx, agent });
                }
            }
            let controllers: BTreeSet<usize> =
                self.formula_vars[i].iter().filter_map(|&v| self.owner[v]).collect();
            if controllers.len() < 2 {
                let v = Violation::SingleAgentFormula(idx);
                if options.allow_single_agent_formulas {
                    report.warnings.push(v);
                } else {
                    report.errors.push(v);
                }
            }
        }
        report
    }

    pub fn agents(&self) -> &[AgentId] {
        &self.agents
    }

    pub fn variables(&self) -> &[VarId] {
        &self.variables
    }

    pub fn formulas(&self) -> &[Formula] {
        &self.formulas
    }

    pub fn formula(&self, i: FormulaIdx) -> &Formula {
        &self.formulas[i.0]
    }

    pub fn formula_indices(&self) -> impl Iterator<Item = FormulaIdx> {
        (0..self.formulas.len()).map(FormulaIdx)
    }

    pub fn var_index(&self, v: &VarId) -> Result<usize, ModelError> {
        self.var_index
            .get(v)
            .copied()
            .ok_or_else(|| ModelError::UnknownVariable(v.clone()))
    }

    pub fn agent_index(&self, a: &AgentId) -> Result<usize, ModelError> {
        self.agent_index
            .get(a)
            .copied()
            .ok_or_else(|| ModelError::UnknownAgent(a.clone()))
    }

    /// The agent controlling `v`.
    pub fn controller_of(&self, v: &VarId) -> Result<&AgentId, ModelError> {
        let vi = self.var_index(v)?;
        self.owner[vi]
            .map(|a| &self.agents[a])
            .ok_or_else(|| ModelError::UnknownVariable(v.clone()))
    }

    /// Variables controlled by `agent`, in model order.
    pub fn vars_of_agent(&self, agent: &AgentId) -> Result<Vec<&VarId>, ModelError> {
        let ai = self.agent_index(agent)?;
        Ok(self.partition[ai].iter().map(|&v| &self.variables[v]).collect())
    }

    /// Whether `agent` controls at least one variable of formula `i`.
    pub fn agent_touches(&self, agent: &AgentId, i: FormulaIdx) -> bool {
        self.agent_index
            .get(agent)
            .is_some_and(|&a| self.formula_vars[i.0].iter().any(|&v| self.owner[v] == Some(a)))
    }

    /// Agents controlling some variable of `f`, in model order.
    pub fn agents_of(&self, f: &Formula) -> Result<Vec<&AgentId>, ModelError> {
        let mut set = BTreeSet::new();
        for v in f.vars() {
            let vi = self.var_index(&v)?;
            if let Some(a) = self.owner[vi] {
                set.insert(a);
            }
        }
        Ok(set.into_iter().map(|a| &self.agents[a]).collect())
    }

    /// Checks that every variable and coalition agent of `f` is known.
    pub fn check_formula(&self, f: &Formula) -> Result<(), ModelError> {
        for v in f.vars() {
            self.var_index(&v)?;
        }
        for a in f.coalition_agents() {
            self.agent_index(&a)?;
        }
        Ok(())
    }

    /// Builds a state from a total valuation. Extra or missing variables are
    /// errors.
    pub fn state<I, V>(&self, tick: u64, valuation: I) -> Result<SystemState, ModelError>
    where
        I: IntoIterator<Item = (V, bool)>,
        V: Into<VarId>,
    {
        let mut values: Vec<Option<bool>> = vec![None; self.variables.len()];
        for (v, b) in valuation {
            let v = v.into();
            values[self.var_index(&v)?] = Some(b);
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(i, b)| b.ok_or_else(|| ModelError::MissingValue(self.variables[i].clone())))
            .collect::<Result<_, _>>()?;
        Ok(SystemState { tick, values })
    }

    /// State whose valuation is read from the low bits of `bits`
    /// (bit `i` is variable `i`).
    pub fn state_from_bits(&self, tick: u64, bits: u64) -> SystemState {
        SystemState {
            tick,
            values: (0..self.variables.len()).map(|i| bits >> i & 1 == 1).collect(),
        }
    }

    /// True iff every critical formula is false at `s`.
    pub fn is_secure(&self, s: &SystemState) -> bool {
        self.formula_indices().all(|i| !self.holds(i, s))
    }

    /// Value of critical formula `i` at `s`.
    pub fn holds(&self, i: FormulaIdx, s: &SystemState) -> bool {
        let mut values = s.values.clone();
        eval_in(self, &self.formulas[i.0], &mut values)
    }

    /// Critical formulas true at `s`.
    pub fn true_formulas(&self, s: &SystemState) -> Vec<FormulaIdx> {
        let mut values = s.values.clone();
        self.formula_indices()
            .filter(|&i| eval_in(self, &self.formulas[i.0], &mut values))
            .collect()
    }

    /// Evaluates `f` at `s`; a coalition node is true iff some assignment
    /// to the coalition's variables, all else fixed, makes its child true.
    pub fn eval(&self, f: &Formula, s: &SystemState) -> Result<bool, ModelError> {
        self.check_formula(f)?;
        self.check_diamond_budget(f)?;
        let mut values = s.values.clone();
        Ok(eval_in(self, f, &mut values))
    }

    fn coalition_vars(&self, coalition: &BTreeSet<AgentId>) -> Result<Vec<usize>, ModelError> {
        let mut vars = Vec::new();
        for a in coalition {
            vars.extend_from_slice(&self.partition[self.agent_index(a)?]);
        }
        vars.sort_unstable();
        if vars.len() > DIAMOND_LIMIT {
            return Err(ModelError::BudgetExceeded { found: vars.len(), limit: DIAMOND_LIMIT });
        }
        Ok(vars)
    }

    fn check_diamond_budget(&self, f: &Formula) -> Result<(), ModelError> {
        match f {
            Formula::Top | Formula::Var(_) => Ok(()),
            Formula::Not(c) => self.check_diamond_budget(c),
            Formula::Or(l, r) => {
                self.check_diamond_budget(l)?;
                self.check_diamond_budget(r)
            }
            Formula::Diamond(c, child) => {
                self.coalition_vars(c)?;
                self.check_diamond_budget(child)
            }
        }
    }

    /// Decides `<>{coalition} f` at `s` and returns a witnessing
    /// assignment to the coalition's variables.
    ///
    /// Assignments are tried in order of how many variables they change
    /// from `s`, so the witness is a smallest change.
    pub fn diamond_holds(
        &self,
        s: &SystemState,
        coalition: &BTreeSet<AgentId>,
        f: &Formula,
    ) -> Result<(bool, Option<PartialValuation>), ModelError> {
        self.check_formula(f)?;
        self.check_diamond_budget(f)?;
        let vars = self.coalition_vars(coalition)?;
        let k = vars.len();
        let mut values = s.values.clone();
        for changed in 0..=k {
            for flips in masks_with_popcount(k, changed) {
                for (bit, &v) in vars.iter().enumerate() {
                    values[v] = s.values[v] ^ (flips >> bit & 1 == 1);
                }
                if eval_in(self, f, &mut values) {
                    let witness = PartialValuation {
                        coalition: coalition.clone(),
                        values: vars
                            .iter()
                            .map(|&v| (self.variables[v].clone(), values[v]))
                            .collect(),
                    };
                    return Ok((true, Some(witness)));
                }
            }
        }
        Ok((false, None))
    }

    pub fn valuation_map(&self, s: &SystemState) -> BTreeMap<VarId, bool> {
        self.variables.iter().cloned().zip(s.values.iter().copied()).collect()
    }
}

/// All `k`-bit masks with exactly `ones` bits set, ascending.
fn masks_with_popcount(k: usize, ones: usize) -> impl Iterator<Item = u64> {
    let limit = 1u64 << k;
    let first = if ones == 0 { 0 } else { (1u64 << ones) - 1 };
    let mut next = Some(first);
    std::iter::from_fn(move || {
        let cur = next?;
        if cur >= limit {
            return None;
        }
        next = if cur == 0 {
            None
        } else {
            // Gosper's hack.
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            Some((((r ^ cur) >> 2) / c) | r)
        };
        Some(cur)
    })
}

fn eval_in(m: &Model, f: &Formula, values: &mut Vec<bool>) -> bool {
    match f {
        Formula::Top => true,
        Formula::Var(v) => values[m.var_index[v]],
        Formula::Not(c) => !eval_in(m, c, values),
        Formula::Or(l, r) => eval_in(m, l, values) || eval_in(m, r, values),
        Formula::Diamond(c, child) => {
            let vars: Vec<usize> = c
                .iter()
                .flat_map(|a| m.partition[m.agent_index[a]].iter().copied())
                .collect();
            let saved: Vec<bool> = vars.iter().map(|&v| values[v]).collect();
            let mut found = false;
            for mask in 0..1u64 << vars.len() {
                for (bit, &v) in vars.iter().enumerate() {
                    values[v] = mask >> bit & 1 == 1;
                }
                if eval_in(m, child, values) {
                    found = true;
                    break;
                }
            }
            for (&v, b) in vars.iter().zip(saved) {
                values[v] = b;
            }
            found
        }
    }
}

/// Truth assignment to every model variable at a tick.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SystemState {
    pub tick: u64,
    values: Vec<bool>,
}

impl SystemState {
    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn value(&self, var: usize) -> bool {
        self.values[var]
    }

    /// Copy of the state with one variable negated.
    pub fn flipped(&self, var: usize) -> SystemState {
        let mut out = self.clone();
        out.values[var] = !out.values[var];
        out
    }

    pub(crate) fn set(&mut self, var: usize, value: bool) {
        self.values[var] = value;
    }

    /// Valuation packed into bits (bit `i` is variable `i`). Only meaningful
    /// for at most 64 variables.
    pub fn bits(&self) -> u64 {
        self.values
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &b)| acc | (u64::from(b) << i))
    }
}

/// Values chosen by a coalition for exactly the variables it controls.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartialValuation {
    pub coalition: BTreeSet<AgentId>,
    pub values: BTreeMap<VarId, bool>,
}

impl PartialValuation {
    /// `s` with the coalition's choices applied.
    pub fn apply(&self, m: &Model, s: &SystemState) -> Result<SystemState, ModelError> {
        let mut out = s.clone();
        for (v, &b) in &self.values {
            out.set(m.var_index(v)?, b);
        }
        Ok(out)
    }
}
