use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::{eval_expr, free_vars, simplify, Expr, Valuation, Value, VarRef, VariableDecl};

/// Default cap on the number of valuations tried by [`is_false`].
pub const DEFAULT_ENUM_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UnknownReason {
    /// A free variable has an `opaque` domain.
    Opaque { variable: String },
    /// A free variable is not declared at all.
    Undeclared { variable: String },
    /// The valuation space exceeds the enumeration budget.
    BudgetExceeded { valuations: u128, budget: u64 },
}

impl fmt::Display for UnknownReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnknownReason::Opaque { variable } => write!(f, "`{variable}` has an opaque domain"),
            UnknownReason::Undeclared { variable } => write!(f, "`{variable}` is not declared"),
            UnknownReason::BudgetExceeded { valuations, budget } => {
                write!(f, "{valuations} valuations exceed the budget of {budget}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FalsityVerdict {
    /// No valuation satisfies the constraint.
    False,
    /// A satisfying valuation.
    Satisfiable(Valuation),
    Unknown(UnknownReason),
}

impl FalsityVerdict {
    pub fn is_false(&self) -> bool {
        matches!(self, FalsityVerdict::False)
    }
}

/// Decides whether `e` is equivalent to `false` over the declared domains.
///
/// Tries the simplifier first, then enumerates every valuation of the free
/// variables (pre-state references count as separate variables). Evaluation
/// errors count as "not true".
pub fn is_false(e: &Expr, decls: &[VariableDecl], budget: u64) -> FalsityVerdict {
    let s = simplify(e);
    match s {
        Expr::Bool(false) => return FalsityVerdict::False,
        Expr::Bool(true) => return FalsityVerdict::Satisfiable(Valuation::new()),
        _ => {}
    }
    let by_name: BTreeMap<&str, &VariableDecl> =
        decls.iter().map(|d| (d.name.as_str(), d)).collect();
    let vars: Vec<VarRef> = free_vars(&s).into_iter().collect();

    let mut spaces: Vec<Vec<Value>> = Vec::with_capacity(vars.len());
    let mut total: u128 = 1;
    for v in &vars {
        let Some(decl) = by_name.get(v.path.as_str()) else {
            return FalsityVerdict::Unknown(UnknownReason::Undeclared {
                variable: v.path.clone(),
            });
        };
        let Some(card) = decl.domain.cardinality() else {
            return FalsityVerdict::Unknown(UnknownReason::Opaque {
                variable: v.path.clone(),
            });
        };
        if card == 0 {
            // nothing to assign, so nothing can satisfy the constraint
            return FalsityVerdict::False;
        }
        total = total.saturating_mul(card);
        if total > budget as u128 {
            return FalsityVerdict::Unknown(UnknownReason::BudgetExceeded {
                valuations: total_space(&vars, &by_name),
                budget,
            });
        }
    }
    for v in &vars {
        spaces.push(by_name[v.path.as_str()].domain.values().unwrap_or_default());
    }

    // odometer over the cartesian product of the per-variable spaces
    let mut idx = vec![0usize; vars.len()];
    loop {
        let mut val = Valuation::new();
        for (i, v) in vars.iter().enumerate() {
            val.set(&v.path, spaces[i][idx[i]].clone(), v.old);
        }
        if let Ok(Value::Bool(true)) = eval_expr(&s, &val) {
            return FalsityVerdict::Satisfiable(val);
        }
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return FalsityVerdict::False;
            }
            idx[pos] += 1;
            if idx[pos] < spaces[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

fn total_space(vars: &[VarRef], by_name: &BTreeMap<&str, &VariableDecl>) -> u128 {
    vars.iter()
        .filter_map(|v| by_name.get(v.path.as_str())?.domain.cardinality())
        .fold(1u128, |acc, c| acc.saturating_mul(c))
}
