use std::collections::BTreeSet;
use std::fmt;

use super::{Formula, FormulaError};
use crate::ids::VarId;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub var: VarId,
    pub positive: bool,
}

impl Literal {
    pub fn pos(var: impl Into<VarId>) -> Self {
        Literal { var: var.into(), positive: true }
    }

    pub fn neg(var: impl Into<VarId>) -> Self {
        Literal { var: var.into(), positive: false }
    }

    pub fn negated(&self) -> Self {
        Literal { var: self.var.clone(), positive: !self.positive }
    }

    pub fn to_formula(&self) -> Formula {
        let v = Formula::Var(self.var.clone());
        if self.positive {
            v
        } else {
            Formula::not(v)
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.var)
        } else {
            write!(f, "~{}", self.var)
        }
    }
}

/// Disjunction of literals. Never contains a variable in both polarities.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Clause(BTreeSet<Literal>);

impl Clause {
    /// Returns `None` for a tautological clause.
    pub fn new(literals: impl IntoIterator<Item = Literal>) -> Option<Clause> {
        let set: BTreeSet<Literal> = literals.into_iter().collect();
        if set.iter().any(|l| set.contains(&l.negated())) {
            None
        } else {
            Some(Clause(set))
        }
    }

    pub fn literals(&self) -> impl Iterator<Item = &Literal> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn positive_count(&self) -> usize {
        self.0.iter().filter(|l| l.positive).count()
    }

    fn union(&self, other: &Clause) -> Option<Clause> {
        Clause::new(self.0.iter().chain(other.0.iter()).cloned())
    }

    fn subsumes(&self, other: &Clause) -> bool {
        self.0.is_subset(&other.0)
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            write!(f, "{l}")?;
        }
        f.write_str(")")
    }
}

/// Conjunction of clauses, free of duplicates and of subsumed clauses.
/// The empty set is `true`; a set holding the empty clause is `false`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClauseSet(BTreeSet<Clause>);

impl ClauseSet {
    pub fn new(clauses: impl IntoIterator<Item = Clause>) -> ClauseSet {
        let mut out = ClauseSet::default();
        for c in clauses {
            out.insert(c);
        }
        out
    }

    fn insert(&mut self, clause: Clause) {
        if self.0.iter().any(|c| c.subsumes(&clause)) {
            return;
        }
        self.0.retain(|c| !clause.subsumes(c));
        self.0.insert(clause);
    }

    fn falsum() -> ClauseSet {
        ClauseSet::new([Clause::default()])
    }

    pub fn clauses(&self) -> impl Iterator<Item = &Clause> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn vars(&self) -> BTreeSet<VarId> {
        self.0
            .iter()
            .flat_map(|c| c.literals().map(|l| l.var.clone()))
            .collect()
    }

    /// Every clause has at most one positive literal.
    pub fn is_horn(&self) -> bool {
        self.0.iter().all(|c| c.positive_count() <= 1)
    }

    fn conjoin(mut self, other: ClauseSet) -> ClauseSet {
        for c in other.0 {
            self.insert(c);
        }
        self
    }

    fn disjoin(&self, other: &ClauseSet) -> ClauseSet {
        ClauseSet::new(
            self.0
                .iter()
                .flat_map(|a| other.0.iter().filter_map(move |b| a.union(b))),
        )
    }

    pub fn to_formula(&self) -> Formula {
        Formula::all(
            self.0
                .iter()
                .map(|c| Formula::any(c.literals().map(Literal::to_formula))),
        )
    }
}

impl fmt::Display for ClauseSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("true");
        }
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Conjunctive normal form by distribution. Tautological and subsumed
/// clauses are dropped, so the CNF of a minterm expansion is its set of
/// prime implicates.
pub fn to_cnf(f: &Formula) -> Result<ClauseSet, FormulaError> {
    if f.has_diamond() {
        return Err(FormulaError::DiamondPresent);
    }
    Ok(cnf_of(f, true))
}

fn cnf_of(f: &Formula, positive: bool) -> ClauseSet {
    match (f, positive) {
        (Formula::Top, true) => ClauseSet::default(),
        (Formula::Top, false) => ClauseSet::falsum(),
        (Formula::Var(v), pol) => ClauseSet::new(Clause::new([Literal {
            var: v.clone(),
            positive: pol,
        }])),
        (Formula::Not(c), pol) => cnf_of(c, !pol),
        (Formula::Or(l, r), true) => cnf_of(l, true).disjoin(&cnf_of(r, true)),
        (Formula::Or(l, r), false) => cnf_of(l, false).conjoin(cnf_of(r, false)),
        (Formula::Diamond(..), _) => unreachable!("checked by to_cnf"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_formula, table};

    #[test]
    fn xor_cnf() {
        let f = parse_formula("(~A & B) | (A & ~B)").unwrap();
        let cnf = to_cnf(&f).unwrap();
        let expected = ClauseSet::new([
            Clause::new([Literal::pos("A"), Literal::pos("B")]).unwrap(),
            Clause::new([Literal::neg("A"), Literal::neg("B")]).unwrap(),
        ]);
        assert_eq!(cnf, expected);
        assert!(table::equivalent(&f, &cnf.to_formula()).unwrap());
    }

    #[test]
    fn top_and_var() {
        assert!(to_cnf(&Formula::Top).unwrap().is_empty());
        assert_eq!(
            to_cnf(&Formula::var("p")).unwrap(),
            ClauseSet::new(Clause::new([Literal::pos("p")]))
        );
        let bottom = to_cnf(&Formula::bottom()).unwrap();
        assert_eq!(bottom.len(), 1);
        assert!(bottom.clauses().next().unwrap().is_empty());
    }

    #[test]
    fn tautologies_dropped() {
        let cnf = to_cnf(&parse_formula("p | ~p").unwrap()).unwrap();
        assert!(cnf.is_empty());
        assert!(Clause::new([Literal::pos("p"), Literal::neg("p")]).is_none());
    }

    #[test]
    fn diamond_rejected() {
        let f = parse_formula("<>{a} p").unwrap();
        assert_eq!(to_cnf(&f), Err(FormulaError::DiamondPresent));
    }
}
