use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{ArrowOp, BinOp, ConstraintError, Expr, Method, VarRef, VariableDecl};

/// Static sort of an expression. `Any` comes from opaque declarations and
/// unifies with everything.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sort {
    Bool,
    Int,
    Enum,
    Map(Box<Sort>, Box<Sort>),
    Seq(Box<Sort>),
    Set(Box<Sort>),
    Record(BTreeMap<String, Sort>),
    Any,
}

impl Sort {
    pub fn compatible(&self, other: &Sort) -> bool {
        match (self, other) {
            (Sort::Any, _) | (_, Sort::Any) => true,
            (Sort::Bool, Sort::Bool) | (Sort::Int, Sort::Int) | (Sort::Enum, Sort::Enum) => true,
            (Sort::Map(k1, v1), Sort::Map(k2, v2)) => k1.compatible(k2) && v1.compatible(v2),
            (Sort::Seq(a), Sort::Seq(b)) | (Sort::Set(a), Sort::Set(b)) => a.compatible(b),
            // `{}` doubles as the empty map
            (Sort::Map(..), Sort::Set(e)) | (Sort::Set(e), Sort::Map(..)) => **e == Sort::Any,
            (Sort::Record(a), Sort::Record(b)) => {
                a.len() == b.len()
                    && a
                        .iter()
                        .all(|(k, s)| b.get(k).is_some_and(|t| s.compatible(t)))
            }
            _ => false,
        }
    }

    /// The more informative of two compatible sorts.
    fn join(&self, other: &Sort) -> Sort {
        if *self == Sort::Any {
            other.clone()
        } else {
            self.clone()
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Bool => f.write_str("boolean"),
            Sort::Int => f.write_str("integer"),
            Sort::Enum => f.write_str("enum"),
            Sort::Map(k, v) => write!(f, "map {k} to {v}"),
            Sort::Seq(e) => write!(f, "seq of {e}"),
            Sort::Set(e) => write!(f, "set of {e}"),
            Sort::Record(fields) => {
                f.write_str("record {")?;
                for (i, (n, s)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, " {n} : {s}")?;
                }
                f.write_str(" }")
            }
            Sort::Any => f.write_str("opaque"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeError {
    pub subexpr: String,
    pub message: String,
}

fn type_err(e: &Expr, message: impl Into<String>) -> TypeError {
    TypeError {
        subexpr: e.to_string(),
        message: message.into(),
    }
}

/// Replaces identifier chains by variable references, taking the longest
/// dotted prefix that names a declared variable; the remaining segments
/// become field accesses.
pub fn resolve(e: &Expr, decls: &[VariableDecl]) -> Result<Expr, ConstraintError> {
    let declared: BTreeSet<&str> = decls.iter().map(|d| d.name.as_str()).collect();
    resolve_in(e, &declared)
}

fn resolve_in(e: &Expr, declared: &BTreeSet<&str>) -> Result<Expr, ConstraintError> {
    let r = |x: &Expr| resolve_in(x, declared).map(Box::new);
    Ok(match e {
        Expr::Path { segments, old } => {
            let hit = (1..=segments.len())
                .rev()
                .find(|&k| declared.contains(segments[..k].join(".").as_str()));
            let Some(k) = hit else {
                return Err(ConstraintError::UnknownVariable {
                    name: segments.join("."),
                    span: Default::default(),
                });
            };
            let mut out = Expr::Var(VarRef {
                path: segments[..k].join("."),
                old: *old,
            });
            for field in &segments[k..] {
                out = Expr::Field(Box::new(out), field.clone());
            }
            out
        }
        Expr::Var(v) => {
            if !declared.contains(v.path.as_str()) {
                return Err(ConstraintError::UnknownVariable {
                    name: v.path.clone(),
                    span: Default::default(),
                });
            }
            e.clone()
        }
        Expr::Bool(_) | Expr::Int(_) | Expr::Enum(_) => e.clone(),
        Expr::Not(x) => Expr::Not(r(x)?),
        Expr::Neg(x) => Expr::Neg(r(x)?),
        Expr::Dom(x) => Expr::Dom(r(x)?),
        Expr::Field(x, f) => Expr::Field(r(x)?, f.clone()),
        Expr::Arrow(x, op) => Expr::Arrow(r(x)?, *op),
        Expr::Binary(op, a, b) => Expr::Binary(*op, r(a)?, r(b)?),
        Expr::InSet(a, b) => Expr::InSet(r(a)?, r(b)?),
        Expr::Apply(a, b) => Expr::Apply(r(a)?, r(b)?),
        Expr::Index(a, b) => Expr::Index(r(a)?, r(b)?),
        Expr::Call(x, m, args) => Expr::Call(
            r(x)?,
            *m,
            args.iter()
                .map(|a| resolve_in(a, declared))
                .collect::<Result<_, _>>()?,
        ),
        Expr::SetLit(items) => Expr::SetLit(
            items
                .iter()
                .map(|a| resolve_in(a, declared))
                .collect::<Result<_, _>>()?,
        ),
    })
}

/// Infers the sort of a resolved expression.
pub fn infer_sort(e: &Expr, decls: &[VariableDecl]) -> Result<Sort, TypeError> {
    let env: BTreeMap<&str, Sort> = decls
        .iter()
        .map(|d| (d.name.as_str(), d.domain.sort()))
        .collect();
    infer(e, &env)
}

fn expect(e: &Expr, env: &BTreeMap<&str, Sort>, want: &Sort) -> Result<Sort, TypeError> {
    let got = infer(e, env)?;
    if got.compatible(want) {
        Ok(got.join(want))
    } else {
        Err(type_err(e, format!("expected {want}, found {got}")))
    }
}

fn infer(e: &Expr, env: &BTreeMap<&str, Sort>) -> Result<Sort, TypeError> {
    match e {
        Expr::Bool(_) => Ok(Sort::Bool),
        Expr::Int(_) => Ok(Sort::Int),
        Expr::Enum(_) => Ok(Sort::Enum),
        Expr::Path { .. } => Err(type_err(e, "unresolved identifier")),
        Expr::Var(v) => env
            .get(v.path.as_str())
            .cloned()
            .ok_or_else(|| type_err(e, "undeclared variable")),
        Expr::Not(x) => expect(x, env, &Sort::Bool).map(|_| Sort::Bool),
        Expr::Neg(x) => expect(x, env, &Sort::Int).map(|_| Sort::Int),
        Expr::Binary(op, a, b) => match op {
            BinOp::And | BinOp::Or | BinOp::Implies => {
                expect(a, env, &Sort::Bool)?;
                expect(b, env, &Sort::Bool)?;
                Ok(Sort::Bool)
            }
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                expect(a, env, &Sort::Int)?;
                expect(b, env, &Sort::Int)?;
                Ok(Sort::Bool)
            }
            BinOp::Add | BinOp::Sub => {
                expect(a, env, &Sort::Int)?;
                expect(b, env, &Sort::Int)?;
                Ok(Sort::Int)
            }
            BinOp::Eq | BinOp::Neq => {
                let l = infer(a, env)?;
                let r = infer(b, env)?;
                if l.compatible(&r) {
                    Ok(Sort::Bool)
                } else {
                    Err(type_err(e, format!("cannot compare {l} with {r}")))
                }
            }
        },
        Expr::InSet(x, s) => {
            let elem = infer(x, env)?;
            match infer(s, env)? {
                Sort::Set(t) if t.compatible(&elem) => Ok(Sort::Bool),
                Sort::Any => Ok(Sort::Bool),
                other => Err(type_err(e, format!("`in set` needs a set of {elem}, found {other}"))),
            }
        }
        Expr::Dom(m) => match infer(m, env)? {
            Sort::Map(k, _) => Ok(Sort::Set(k)),
            Sort::Any => Ok(Sort::Set(Box::new(Sort::Any))),
            other => Err(type_err(e, format!("`dom` needs a map, found {other}"))),
        },
        Expr::Apply(m, k) | Expr::Index(m, k) => {
            let key = infer(k, env)?;
            match infer(m, env)? {
                Sort::Map(ks, vs) if ks.compatible(&key) => Ok(*vs),
                Sort::Seq(t) if key.compatible(&Sort::Int) => Ok(*t),
                Sort::Any => Ok(Sort::Any),
                other => Err(type_err(e, format!("cannot apply {other} to {key}"))),
            }
        }
        Expr::Field(r, name) => match infer(r, env)? {
            Sort::Record(fields) => fields
                .get(name)
                .cloned()
                .ok_or_else(|| type_err(e, format!("record has no field `{name}`"))),
            Sort::Any => Ok(Sort::Any),
            other => Err(type_err(e, format!("field access on {other}"))),
        },
        Expr::Call(x, m, args) => {
            if args.len() != m.arity() {
                return Err(type_err(
                    e,
                    format!("`{}` takes {} argument(s)", m.name(), m.arity()),
                ));
            }
            let base = infer(x, env)?;
            match (m, base) {
                (_, Sort::Any) => {
                    for a in args {
                        infer(a, env)?;
                    }
                    Ok(match m {
                        Method::Size => Sort::Int,
                        Method::Domain | Method::Range => Sort::Set(Box::new(Sort::Any)),
                        _ => Sort::Any,
                    })
                }
                (Method::Size, Sort::Seq(_) | Sort::Set(_) | Sort::Map(..)) => Ok(Sort::Int),
                (Method::LastItem, Sort::Seq(t)) => Ok(*t),
                (Method::Domain, Sort::Map(k, _)) => Ok(Sort::Set(k)),
                (Method::Range, Sort::Map(_, v)) => Ok(Sort::Set(v)),
                (Method::Front, Sort::Seq(t)) => {
                    expect(&args[0], env, &Sort::Int)?;
                    Ok(Sort::Seq(t))
                }
                (_, other) => Err(type_err(e, format!("`{}` is not defined on {other}", m.name()))),
            }
        }
        Expr::Arrow(x, op) => {
            let base = infer(x, env)?;
            match op {
                // on a non-collection these test definedness
                ArrowOp::NotEmpty | ArrowOp::IsEmpty => Ok(Sort::Bool),
                ArrowOp::Size => match base {
                    Sort::Seq(_) | Sort::Set(_) | Sort::Map(..) | Sort::Any => Ok(Sort::Int),
                    other => Err(type_err(e, format!("`->size` is not defined on {other}"))),
                },
            }
        }
        Expr::SetLit(items) => {
            let mut elem = Sort::Any;
            for it in items {
                let s = infer(it, env)?;
                if !s.compatible(&elem) {
                    return Err(type_err(e, format!("mixed element sorts {elem} and {s}")));
                }
                elem = elem.join(&s);
            }
            Ok(Sort::Set(Box::new(elem)))
        }
    }
}

/// Free variables, split into current-state and pre-state references.
pub fn free_vars(e: &Expr) -> BTreeSet<VarRef> {
    let mut out = BTreeSet::new();
    e.visit(&mut |x| {
        if let Expr::Var(v) = x {
            out.insert(v.clone());
        }
    });
    out
}
