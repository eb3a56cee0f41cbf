//! Horn structure: relabelings that make a CNF Horn, and rewriting a
//! formula as a disjunction of Horn formulas.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::table::{minterm, sorted_vars, truth_table};
use super::{to_cnf, ClauseSet, Formula, FormulaError, TRUTH_TABLE_LIMIT};
use crate::ids::VarId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Identity,
    Flipped,
}

/// Per-variable polarity flip.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HornLabeling(BTreeMap<VarId, Polarity>);

impl HornLabeling {
    pub fn identity<'a>(vars: impl IntoIterator<Item = &'a VarId>) -> Self {
        HornLabeling(vars.into_iter().map(|v| (v.clone(), Polarity::Identity)).collect())
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (VarId, Polarity)>) -> Self {
        HornLabeling(pairs.into_iter().collect())
    }

    pub fn polarity(&self, v: &VarId) -> Polarity {
        self.0.get(v).copied().unwrap_or(Polarity::Identity)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarId, Polarity)> {
        self.0.iter().map(|(v, p)| (v, *p))
    }

    /// Rewrites `cnf` with every flipped variable negated.
    pub fn apply(&self, cnf: &ClauseSet) -> ClauseSet {
        ClauseSet::new(cnf.clauses().filter_map(|c| {
            super::Clause::new(c.literals().map(|l| match self.polarity(&l.var) {
                Polarity::Identity => l.clone(),
                Polarity::Flipped => l.negated(),
            }))
        }))
    }

    /// True when `cnf`, relabeled, has at most one positive literal per clause.
    pub fn makes_horn(&self, cnf: &ClauseSet) -> bool {
        cnf.clauses().all(|c| {
            c.literals()
                .filter(|l| l.positive == (self.polarity(&l.var) == Polarity::Identity))
                .count()
                <= 1
        })
    }
}

impl fmt::Display for HornLabeling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (v, p)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match p {
                Polarity::Identity => write!(f, "λ({v})={v}")?,
                Polarity::Flipped => write!(f, "λ({v})=¬{v}")?,
            }
        }
        Ok(())
    }
}

/// Implication-graph 2-SAT over boolean variables `0..n`.
///
/// Literal encoding: `2 * x` is `x`, `2 * x + 1` is `!x`.
#[derive(Clone)]
struct TwoSat {
    n: usize,
    edges: Vec<Vec<usize>>,
}

impl TwoSat {
    fn new(n: usize) -> Self {
        TwoSat { n, edges: vec![Vec::new(); 2 * n] }
    }

    fn lit(x: usize, value: bool) -> usize {
        2 * x + usize::from(!value)
    }

    /// Adds the clause `a | b`.
    fn add_clause(&mut self, a: usize, b: usize) {
        self.edges[a ^ 1].push(b);
        self.edges[b ^ 1].push(a);
    }

    fn solve(&self) -> Option<Vec<bool>> {
        let comp = self.components();
        (0..self.n)
            .map(|x| {
                let (t, f) = (comp[2 * x], comp[2 * x + 1]);
                // Tarjan numbers components in reverse topological order.
                (t != f).then_some(t < f)
            })
            .collect()
    }

    // Iterative Tarjan SCC.
    fn components(&self) -> Vec<usize> {
        let size = self.edges.len();
        let mut index = vec![usize::MAX; size];
        let mut low = vec![0; size];
        let mut on_stack = vec![false; size];
        let mut comp = vec![usize::MAX; size];
        let mut stack = Vec::new();
        let mut next_index = 0;
        let mut next_comp = 0;
        for root in 0..size {
            if index[root] != usize::MAX {
                continue;
            }
            let mut work = vec![(root, 0usize)];
            while let Some(&mut (node, ref mut edge)) = work.last_mut() {
                if *edge == 0 && index[node] == usize::MAX {
                    index[node] = next_index;
                    low[node] = next_index;
                    next_index += 1;
                    stack.push(node);
                    on_stack[node] = true;
                }
                if let Some(&succ) = self.edges[node].get(*edge) {
                    *edge += 1;
                    if index[succ] == usize::MAX {
                        work.push((succ, 0));
                    } else if on_stack[succ] {
                        low[node] = low[node].min(index[succ]);
                    }
                    continue;
                }
                work.pop();
                if let Some(&(parent, _)) = work.last() {
                    low[parent] = low[parent].min(low[node]);
                }
                if low[node] == index[node] {
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == node {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
        comp
    }
}

/// Finds a relabeling under which the CNF of `f` is Horn, by reduction to
/// 2-SAT: in every clause, no two literals may both end up positive.
///
/// Of all valid labelings, returns the one whose flip mask (bit `i` for the
/// `i`-th variable in sorted order) is numerically smallest, the same one
/// [`find_horn_labeling_exhaustive`] finds. The labeling covers every
/// variable of `f`, including ones that vanish from the CNF.
pub fn find_horn_labeling(f: &Formula) -> Result<Option<HornLabeling>, FormulaError> {
    let cnf = to_cnf(f)?;
    let vars = sorted_vars(f);
    if cnf.is_horn() {
        return Ok(Some(HornLabeling::identity(&vars)));
    }
    let index: HashMap<&VarId, usize> = vars.iter().enumerate().map(|(i, v)| (v, i)).collect();

    // Boolean x_v means "v is flipped". A literal is positive after
    // relabeling iff its sign differs from x_v, so the literal's
    // "not positive" condition is x_v for a positive literal and !x_v for
    // a negative one.
    let mut sat = TwoSat::new(vars.len());
    for clause in cnf.clauses() {
        let lits: Vec<usize> = clause
            .literals()
            .map(|l| TwoSat::lit(index[&l.var], l.positive))
            .collect();
        for (i, &a) in lits.iter().enumerate() {
            for &b in &lits[i + 1..] {
                sat.add_clause(a, b);
            }
        }
    }
    if sat.solve().is_none() {
        return Ok(None);
    }
    // Fix flips from the most significant bit down, preferring no flip.
    for x in (0..vars.len()).rev() {
        let mut trial = sat.clone();
        let keep = TwoSat::lit(x, false);
        trial.add_clause(keep, keep);
        sat = if trial.solve().is_some() {
            trial
        } else {
            let flip = TwoSat::lit(x, true);
            sat.add_clause(flip, flip);
            sat
        };
    }
    let flips = sat.solve().expect("satisfiable after fixing");
    let labeling = HornLabeling(
        vars.iter()
            .zip(flips)
            .map(|(v, flip)| (v.clone(), if flip { Polarity::Flipped } else { Polarity::Identity }))
            .collect(),
    );
    debug_assert!(labeling.makes_horn(&cnf));
    Ok(Some(labeling))
}

/// Tries all `2^|vars|` labelings in order; the first that makes the CNF
/// Horn is returned.
pub fn find_horn_labeling_exhaustive(f: &Formula) -> Result<Option<HornLabeling>, FormulaError> {
    let cnf = to_cnf(f)?;
    let vars = sorted_vars(f);
    if vars.len() > TRUTH_TABLE_LIMIT {
        return Err(FormulaError::TooManyVariables {
            found: vars.len(),
            limit: TRUTH_TABLE_LIMIT,
        });
    }
    Ok((0..1u32 << vars.len())
        .map(|mask| {
            HornLabeling(
                vars.iter()
                    .enumerate()
                    .map(|(i, v)| {
                        let p = if mask >> i & 1 == 1 { Polarity::Flipped } else { Polarity::Identity };
                        (v.clone(), p)
                    })
                    .collect(),
            )
        })
        .find(|l| l.makes_horn(&cnf)))
}

/// A disjunction of Horn formulas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HornDisjunction {
    disjuncts: Vec<Formula>,
}

impl HornDisjunction {
    /// Checks that every disjunct is diamond-free and Horn in CNF.
    pub fn new(disjuncts: Vec<Formula>) -> Result<Self, FormulaError> {
        for (index, d) in disjuncts.iter().enumerate() {
            if !to_cnf(d)?.is_horn() {
                return Err(FormulaError::NotHorn { index });
            }
        }
        Ok(HornDisjunction { disjuncts })
    }

    pub fn disjuncts(&self) -> &[Formula] {
        &self.disjuncts
    }

    pub fn len(&self) -> usize {
        self.disjuncts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disjuncts.is_empty()
    }

    pub fn to_formula(&self) -> Formula {
        Formula::any(self.disjuncts.iter().cloned())
    }
}

/// Rewrites `f` as the disjunction of its satisfying minterms over its own
/// variables. Minterms are listed in conventional truth-table order, first
/// variable most significant.
pub fn to_horn_disjunction(f: &Formula) -> Result<HornDisjunction, FormulaError> {
    let vars = sorted_vars(f);
    let table = truth_table(f, &vars)?;
    let n = vars.len() as u32;
    Ok(HornDisjunction {
        disjuncts: (0..1u32 << n)
            .map(|k| if n == 0 { 0 } else { k.reverse_bits() >> (32 - n) })
            .filter(|&row| table[row as usize])
            .map(|row| minterm(&vars, row))
            .collect(),
    })
}
