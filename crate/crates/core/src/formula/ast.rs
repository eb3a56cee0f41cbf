use std::collections::BTreeSet;
use std::fmt;

use crate::ids::{AgentId, VarId};

/// Propositional formula extended with the coalition modality `<>{C} f`.
///
/// Conjunction is not a node: `a & b` is represented as `~(~a | ~b)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Top,
    Var(VarId),
    Not(Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    /// Coalition `C` can make the child true by choosing values for the
    /// variables it controls. The coalition is never empty.
    Diamond(BTreeSet<AgentId>, Box<Formula>),
}

impl Formula {
    pub fn var(name: impl Into<VarId>) -> Formula {
        Formula::Var(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::or(Formula::not(a), Formula::not(b)))
    }

    pub fn bottom() -> Formula {
        Formula::not(Formula::Top)
    }

    /// Builds a diamond node; returns `None` for an empty coalition.
    pub fn diamond<I, A>(coalition: I, child: Formula) -> Option<Formula>
    where
        I: IntoIterator<Item = A>,
        A: Into<AgentId>,
    {
        let coalition: BTreeSet<AgentId> = coalition.into_iter().map(Into::into).collect();
        if coalition.is_empty() {
            None
        } else {
            Some(Formula::Diamond(coalition, Box::new(child)))
        }
    }

    /// Left-folded disjunction; `bottom()` when empty.
    pub fn any(items: impl IntoIterator<Item = Formula>) -> Formula {
        items
            .into_iter()
            .reduce(Formula::or)
            .unwrap_or_else(Formula::bottom)
    }

    /// Left-folded conjunction; `Top` when empty.
    pub fn all(items: impl IntoIterator<Item = Formula>) -> Formula {
        items
            .into_iter()
            .reduce(Formula::and)
            .unwrap_or(Formula::Top)
    }

    /// Variables occurring in the formula. Coalition names are not variables.
    pub fn vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<VarId>) {
        match self {
            Formula::Top => {}
            Formula::Var(v) => {
                out.insert(v.clone());
            }
            Formula::Not(c) | Formula::Diamond(_, c) => c.collect_vars(out),
            Formula::Or(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    /// Agents named in any coalition of the formula.
    pub fn coalition_agents(&self) -> BTreeSet<AgentId> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Diamond(c, _) = f {
                out.extend(c.iter().cloned());
            }
        });
        out
    }

    pub fn has_diamond(&self) -> bool {
        let mut found = false;
        self.visit(&mut |f| found |= matches!(f, Formula::Diamond(..)));
        found
    }

    fn visit(&self, g: &mut impl FnMut(&Formula)) {
        g(self);
        match self {
            Formula::Top | Formula::Var(_) => {}
            Formula::Not(c) | Formula::Diamond(_, c) => c.visit(g),
            Formula::Or(l, r) => {
                l.visit(g);
                r.visit(g);
            }
        }
    }

    /// Classical evaluation of a diamond-free formula under `lookup`.
    ///
    /// Panics if a diamond is encountered or `lookup` has no value for a
    /// variable; callers check both beforehand.
    pub fn eval_classical(&self, lookup: &impl Fn(&VarId) -> Option<bool>) -> bool {
        match self {
            Formula::Top => true,
            Formula::Var(v) => lookup(v).unwrap_or_else(|| panic!("no value for {v}")),
            Formula::Not(c) => !c.eval_classical(lookup),
            Formula::Or(l, r) => l.eval_classical(lookup) || r.eval_classical(lookup),
            Formula::Diamond(..) => panic!("diamond in classical evaluation"),
        }
    }

    fn fmt_operand(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Or(..) => write!(f, "({self})"),
            _ => write!(f, "{self}"),
        }
    }
}

/// Prints the surface syntax accepted by [`crate::formula::parse_formula`].
/// The output re-parses to a structurally equal tree.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Top => f.write_str("true"),
            Formula::Var(v) => write!(f, "{v}"),
            Formula::Not(c) => {
                f.write_str("~")?;
                c.fmt_operand(f)
            }
            Formula::Or(l, r) => {
                write!(f, "{l} | ")?;
                r.fmt_operand(f)
            }
            Formula::Diamond(c, child) => {
                f.write_str("<>{")?;
                for (i, a) in c.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str("}")?;
                child.fmt_operand(f)
            }
        }
    }
}
