//! Constraint language for transition guards, effects and contract invariants.
//!
//! The dialect mixes OCL (`queue->notEmpty`, `queue@pre`, `devOn[id]`) with
//! VDM (`n in set dom mem`, `mem(n)`, `myCS~.s`). Both old-value markers are
//! synonyms.

mod domain;
mod eval;
mod falsity;
pub(crate) mod parse;
mod simplify;
mod typeck;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::syntax::SyntaxError;

pub use domain::{Domain, Value, VariableDecl};
pub use eval::{eval_constraint, eval_expr, EvalError, Valuation};
pub use falsity::{is_false, FalsityVerdict, UnknownReason, DEFAULT_ENUM_BUDGET};
pub use parse::{parse_constraint, parse_expr_raw, parse_value, ExprParser};
pub use simplify::simplify;
pub use typeck::{free_vars, infer_sort, resolve, Sort, TypeError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    Inv,
    Pre,
    Post,
}

impl ConstraintKind {
    pub fn keyword(self) -> &'static str {
        match self {
            ConstraintKind::Inv => "inv",
            ConstraintKind::Pre => "pre",
            ConstraintKind::Post => "post",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        match s {
            "inv" => Some(ConstraintKind::Inv),
            "pre" => Some(ConstraintKind::Pre),
            "post" => Some(ConstraintKind::Post),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinOp {
    And,
    Or,
    Implies,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Implies => "implies",
            BinOp::Eq => "=",
            BinOp::Neq => "<>",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
        }
    }

    fn tag(self) -> &'static str {
        match self {
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Implies => "implies",
            BinOp::Eq => "eq",
            BinOp::Neq => "neq",
            BinOp::Lt => "lt",
            BinOp::Le => "le",
            BinOp::Gt => "gt",
            BinOp::Ge => "ge",
            BinOp::Add => "add",
            BinOp::Sub => "sub",
        }
    }

    pub fn is_commutative(self) -> bool {
        matches!(
            self,
            BinOp::And | BinOp::Or | BinOp::Eq | BinOp::Neq | BinOp::Add
        )
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Implies => 1,
            BinOp::Or => 2,
            BinOp::And => 3,
            BinOp::Eq | BinOp::Neq | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 5,
            BinOp::Add | BinOp::Sub => 6,
        }
    }
}

/// Dot-call built-ins on collections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Size,
    LastItem,
    Domain,
    Range,
    /// Prefix of a sequence; also the reading of `q(1,...,k)`.
    Front,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Size => "size",
            Method::LastItem => "lastItem",
            Method::Domain => "domain",
            Method::Range => "range",
            Method::Front => "front",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "size" => Some(Method::Size),
            "lastItem" => Some(Method::LastItem),
            "domain" => Some(Method::Domain),
            "range" => Some(Method::Range),
            "front" => Some(Method::Front),
            _ => None,
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Method::Front => 1,
            _ => 0,
        }
    }
}

/// Arrow operations (`->notEmpty`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArrowOp {
    NotEmpty,
    IsEmpty,
    Size,
}

impl ArrowOp {
    pub fn name(self) -> &'static str {
        match self {
            ArrowOp::NotEmpty => "notEmpty",
            ArrowOp::IsEmpty => "isEmpty",
            ArrowOp::Size => "size",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "notEmpty" => Some(ArrowOp::NotEmpty),
            "isEmpty" => Some(ArrowOp::IsEmpty),
            "size" => Some(ArrowOp::Size),
            _ => None,
        }
    }
}

/// A resolved reference to a declared variable, optionally its pre-state value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarRef {
    pub path: String,
    pub old: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Bool(bool),
    Int(i64),
    Enum(String),
    /// Dotted identifier chain before resolution against declarations.
    Path { segments: Vec<String>, old: bool },
    Var(VarRef),
    Not(Box<Expr>),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// `x in set s`
    InSet(Box<Expr>, Box<Expr>),
    /// `dom m`
    Dom(Box<Expr>),
    /// `m(k)`
    Apply(Box<Expr>, Box<Expr>),
    /// `m[k]`
    Index(Box<Expr>, Box<Expr>),
    Field(Box<Expr>, String),
    Call(Box<Expr>, Method, Vec<Expr>),
    Arrow(Box<Expr>, ArrowOp),
    SetLit(Vec<Expr>),
}

impl Expr {
    pub fn var(path: &str) -> Expr {
        Expr::Var(VarRef {
            path: path.to_string(),
            old: false,
        })
    }

    pub fn old_var(path: &str) -> Expr {
        Expr::Var(VarRef {
            path: path.to_string(),
            old: true,
        })
    }

    pub fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn and(l: Expr, r: Expr) -> Expr {
        Expr::bin(BinOp::And, l, r)
    }

    pub fn not(e: Expr) -> Expr {
        Expr::Not(Box::new(e))
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Expr::Bool(true))
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Expr::Bool(false))
    }

    /// True when the expression mentions a pre-state value anywhere.
    pub fn has_old_refs(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if let Expr::Var(VarRef { old: true, .. }) | Expr::Path { old: true, .. } = e {
                found = true;
            }
        });
        found
    }

    /// Pre-order traversal.
    pub fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Bool(_) | Expr::Int(_) | Expr::Enum(_) | Expr::Path { .. } | Expr::Var(_) => {}
            Expr::Not(e) | Expr::Neg(e) | Expr::Dom(e) | Expr::Field(e, _) | Expr::Arrow(e, _) => {
                e.visit(f)
            }
            Expr::Binary(_, l, r)
            | Expr::InSet(l, r)
            | Expr::Apply(l, r)
            | Expr::Index(l, r) => {
                l.visit(f);
                r.visit(f);
            }
            Expr::Call(e, _, args) => {
                e.visit(f);
                args.iter().for_each(|a| a.visit(f));
            }
            Expr::SetLit(items) => items.iter().for_each(|a| a.visit(f)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Not(_) => 4,
            Expr::InSet(..) => 5,
            Expr::Neg(_) | Expr::Dom(_) => 7,
            Expr::Int(n) if *n < 0 => 7,
            _ => 8,
        }
    }

    /// Compact prefix rendering used in diagnostics and tests,
    /// e.g. `lt(var myCS.s, int 10)`.
    pub fn to_sexpr(&self) -> String {
        match self {
            Expr::Bool(b) => format!("bool {b}"),
            Expr::Int(n) => format!("int {n}"),
            Expr::Enum(s) => format!("enum {s}"),
            Expr::Path { segments, old } => {
                format!("path {}{}", segments.join("."), if *old { "@pre" } else { "" })
            }
            Expr::Var(v) if v.old => format!("old {}", v.path),
            Expr::Var(v) => format!("var {}", v.path),
            Expr::Not(e) => format!("not({})", e.to_sexpr()),
            Expr::Neg(e) => format!("neg({})", e.to_sexpr()),
            Expr::Binary(op, l, r) => format!("{}({}, {})", op.tag(), l.to_sexpr(), r.to_sexpr()),
            Expr::InSet(l, r) => format!("in({}, {})", l.to_sexpr(), r.to_sexpr()),
            Expr::Dom(e) => format!("dom({})", e.to_sexpr()),
            Expr::Apply(l, r) => format!("apply({}, {})", l.to_sexpr(), r.to_sexpr()),
            Expr::Index(l, r) => format!("index({}, {})", l.to_sexpr(), r.to_sexpr()),
            Expr::Field(e, f) => format!("field({}, {f})", e.to_sexpr()),
            Expr::Call(e, m, args) => {
                let mut parts = vec![e.to_sexpr()];
                parts.extend(args.iter().map(Expr::to_sexpr));
                format!("{}({})", m.name(), parts.join(", "))
            }
            Expr::Arrow(e, op) => format!("{}({})", op.name(), e.to_sexpr()),
            Expr::SetLit(items) => format!(
                "set({})",
                items.iter().map(Expr::to_sexpr).collect::<Vec<_>>().join(", ")
            ),
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    if e.precedence() < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Prints concrete syntax that parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Int(n) => write!(f, "{n}"),
            Expr::Enum(s) => write!(f, "<{s}>"),
            Expr::Path { segments, old } => {
                write!(f, "{}", segments.join("."))?;
                if *old {
                    f.write_str("@pre")?;
                }
                Ok(())
            }
            Expr::Var(v) => {
                f.write_str(&v.path)?;
                if v.old {
                    f.write_str("@pre")?;
                }
                Ok(())
            }
            Expr::Not(e) => {
                f.write_str("not ")?;
                write_child(f, e, 4)
            }
            // `-3` parses as a literal, so a negated literal keeps its parens
            Expr::Neg(e) if matches!(**e, Expr::Int(_)) => write!(f, "-({e})"),
            Expr::Neg(e) => {
                f.write_str("-")?;
                write_child(f, e, 8)
            }
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                let (lp, rp) = match op {
                    BinOp::Implies => (p + 1, p),
                    BinOp::Or | BinOp::And | BinOp::Add | BinOp::Sub => (p, p + 1),
                    _ => (p + 1, p + 1),
                };
                write_child(f, l, lp)?;
                write!(f, " {} ", op.symbol())?;
                write_child(f, r, rp)
            }
            Expr::InSet(l, r) => {
                write_child(f, l, 6)?;
                f.write_str(" in set ")?;
                write_child(f, r, 6)
            }
            Expr::Dom(e) => {
                f.write_str("dom ")?;
                write_child(f, e, 7)
            }
            Expr::Apply(l, r) => {
                write_child(f, l, 8)?;
                write!(f, "({r})")
            }
            Expr::Index(l, r) => {
                write_child(f, l, 8)?;
                write!(f, "[{r}]")
            }
            Expr::Field(e, name) => {
                write_child(f, e, 8)?;
                write!(f, ".{name}")
            }
            Expr::Call(e, m, args) => {
                write_child(f, e, 8)?;
                write!(f, ".{}(", m.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Expr::Arrow(e, op) => {
                write_child(f, e, 8)?;
                write!(f, "->{}", op.name())
            }
            Expr::SetLit(items) => {
                f.write_str("{")?;
                for (i, a) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str("}")
            }
        }
    }
}

/// `Contract::operation(signature)` heading of a constraint.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ConstraintContext {
    pub contract: String,
    pub operation: Option<String>,
}

impl fmt::Display for ConstraintContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.contract)?;
        if let Some(op) = &self.operation {
            write!(f, "::{op}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NamedConstraint {
    pub name: String,
    pub context: Option<ConstraintContext>,
    pub kind: ConstraintKind,
    pub body: Expr,
}

impl NamedConstraint {
    pub fn new(name: impl Into<String>, kind: ConstraintKind, body: Expr) -> Self {
        NamedConstraint {
            name: name.into(),
            context: None,
            kind,
            body,
        }
    }
}

impl fmt::Display for NamedConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(ctx) = &self.context {
            write!(f, "context {ctx} ")?;
        }
        write!(f, "{} {}: {}", self.kind.keyword(), self.name, self.body)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstraintError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("unknown variable `{name}` at {span}")]
    UnknownVariable {
        name: String,
        span: crate::syntax::Span,
    },
    #[error("type error in `{subexpr}`: {message}")]
    Type { subexpr: String, message: String },
    #[error("old-value reference `{subexpr}` is only allowed in a postcondition")]
    OldInNonPost { subexpr: String },
}

impl From<TypeError> for ConstraintError {
    fn from(e: TypeError) -> Self {
        ConstraintError::Type {
            subexpr: e.subexpr,
            message: e.message,
        }
    }
}
