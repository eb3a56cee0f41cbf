//! Truth-table helpers for diamond-free formulas over small variable sets.
//!
//! Row `r` assigns bit `i` of `r` to the `i`-th variable of the ordered
//! variable list.

use super::{Formula, FormulaError, TRUTH_TABLE_LIMIT};
use crate::ids::VarId;

fn check(f: &Formula, vars: &[VarId]) -> Result<(), FormulaError> {
    if f.has_diamond() {
        return Err(FormulaError::DiamondPresent);
    }
    if vars.len() > TRUTH_TABLE_LIMIT {
        return Err(FormulaError::TooManyVariables {
            found: vars.len(),
            limit: TRUTH_TABLE_LIMIT,
        });
    }
    Ok(())
}

/// Value of `f` at `row` over `vars`. Variables of `f` missing from `vars`
/// read as false.
pub fn eval_row(f: &Formula, vars: &[VarId], row: u32) -> bool {
    f.eval_classical(&|v: &VarId| {
        Some(
            vars.iter()
                .position(|x| x == v)
                .is_some_and(|i| row >> i & 1 == 1),
        )
    })
}

/// Full truth table of `f` over `vars`.
pub fn truth_table(f: &Formula, vars: &[VarId]) -> Result<Vec<bool>, FormulaError> {
    check(f, vars)?;
    Ok((0..1u32 << vars.len()).map(|row| eval_row(f, vars, row)).collect())
}

/// Truth-table equivalence over the union of both formulas' variables.
pub fn equivalent(a: &Formula, b: &Formula) -> Result<bool, FormulaError> {
    let vars: Vec<VarId> = a.vars().union(&b.vars()).cloned().collect();
    Ok(truth_table(a, &vars)? == truth_table(b, &vars)?)
}

/// Canonical formula with the given truth table: disjunction of the
/// satisfying minterms, or `~true` when there are none.
pub fn formula_from_table(vars: &[VarId], table: &[bool]) -> Formula {
    debug_assert_eq!(table.len(), 1 << vars.len());
    Formula::any(
        table
            .iter()
            .enumerate()
            .filter(|(_, &t)| t)
            .map(|(row, _)| minterm(vars, row as u32)),
    )
}

/// Conjunction of literals fixing every variable of `vars` to row `row`.
pub fn minterm(vars: &[VarId], row: u32) -> Formula {
    Formula::all(vars.iter().enumerate().map(|(i, v)| {
        if row >> i & 1 == 1 {
            Formula::Var(v.clone())
        } else {
            Formula::not(Formula::Var(v.clone()))
        }
    }))
}

pub(crate) fn sorted_vars(f: &Formula) -> Vec<VarId> {
    f.vars().into_iter().collect()
}
