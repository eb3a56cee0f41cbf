//! Propositional formulas with the coalition modality, their normal forms,
//! and Horn-renaming detection.

mod ast;
mod cnf;
mod horn;
mod parse;
pub mod table;

use thiserror::Error;

pub use ast::Formula;
pub use cnf::{to_cnf, Clause, ClauseSet, Literal};
pub use horn::{
    find_horn_labeling, find_horn_labeling_exhaustive, to_horn_disjunction, HornDisjunction,
    HornLabeling, Polarity,
};
pub use parse::parse_formula;

/// Largest variable count handled by truth-table based routines.
pub const TRUTH_TABLE_LIMIT: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("syntax error at offset {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("empty coalition at offset {position}")]
    EmptyCoalition { position: usize },
    #[error("formula contains a coalition modality")]
    DiamondPresent,
    #[error("formula has {found} variables, limit is {limit}")]
    TooManyVariables { found: usize, limit: usize },
    #[error("disjunct {index} is not a Horn formula")]
    NotHorn { index: usize },
}
