use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{ArrowOp, BinOp, Expr, Method, NamedConstraint, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("undefined application: {0}")]
    UndefinedApplication(String),
    #[error("variable `{0}` has no value")]
    MissingVariable(String),
    #[error("no pre-state value for `{0}`")]
    MissingOld(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("integer overflow in `{0}`")]
    Overflow(String),
    #[error("unresolved identifier `{0}`")]
    Unresolved(String),
}

/// Assignment of values to variable paths, with an optional pre-state.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Valuation {
    pub current: BTreeMap<String, Value>,
    pub old: Option<BTreeMap<String, Value>>,
}

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, path: &str, v: Value) -> Self {
        self.current.insert(path.to_string(), v);
        self
    }

    pub fn with_old(mut self, path: &str, v: Value) -> Self {
        self.old
            .get_or_insert_with(BTreeMap::new)
            .insert(path.to_string(), v);
        self
    }

    pub fn set(&mut self, path: &str, v: Value, old: bool) {
        if old {
            self.old
                .get_or_insert_with(BTreeMap::new)
                .insert(path.to_string(), v);
        } else {
            self.current.insert(path.to_string(), v);
        }
    }
}

pub fn eval_constraint(c: &NamedConstraint, v: &Valuation) -> Result<bool, EvalError> {
    as_bool(&c.body, eval_expr(&c.body, v)?)
}

fn as_bool(e: &Expr, v: Value) -> Result<bool, EvalError> {
    match v {
        Value::Bool(b) => Ok(b),
        other => Err(EvalError::TypeMismatch(format!(
            "`{e}` is {} where a boolean is needed",
            other.kind()
        ))),
    }
}

fn as_int(e: &Expr, v: Value) -> Result<i64, EvalError> {
    match v {
        Value::Int(n) => Ok(n),
        other => Err(EvalError::TypeMismatch(format!(
            "`{e}` is {} where an integer is needed",
            other.kind()
        ))),
    }
}

fn eval_bool(e: &Expr, v: &Valuation) -> Result<bool, EvalError> {
    as_bool(e, eval_expr(e, v)?)
}

/// Evaluates an expression. The connectives are error-absorbing: a definite
/// `false` conjunct (or `true` disjunct) decides the result even when the
/// other operand fails to evaluate, so the operators stay commutative.
pub fn eval_expr(e: &Expr, v: &Valuation) -> Result<Value, EvalError> {
    match e {
        Expr::Bool(b) => Ok(Value::Bool(*b)),
        Expr::Int(n) => Ok(Value::Int(*n)),
        Expr::Enum(s) => Ok(Value::Enum(s.clone())),
        Expr::Path { segments, .. } => Err(EvalError::Unresolved(segments.join("."))),
        Expr::Var(r) => {
            if r.old {
                v.old
                    .as_ref()
                    .and_then(|m| m.get(&r.path))
                    .cloned()
                    .ok_or_else(|| EvalError::MissingOld(r.path.clone()))
            } else {
                v.current
                    .get(&r.path)
                    .cloned()
                    .ok_or_else(|| EvalError::MissingVariable(r.path.clone()))
            }
        }
        Expr::Not(x) => eval_bool(x, v).map(|b| Value::Bool(!b)),
        Expr::Neg(x) => {
            let n = as_int(x, eval_expr(x, v)?)?;
            n.checked_neg()
                .map(Value::Int)
                .ok_or_else(|| EvalError::Overflow(e.to_string()))
        }
        Expr::Binary(op, a, b) => match op {
            BinOp::And | BinOp::Or | BinOp::Implies => {
                let l = eval_bool(a, v);
                let r = eval_bool(b, v);
                // the value each side would need to decide the result alone
                let (left_decides, right_decides, result_if_decided) = match op {
                    BinOp::And => (false, false, false),
                    BinOp::Or => (true, true, true),
                    _ => (false, true, true),
                };
                if l == Ok(left_decides) || r == Ok(right_decides) {
                    return Ok(Value::Bool(result_if_decided));
                }
                let (l, r) = (l?, r?);
                Ok(Value::Bool(match op {
                    BinOp::And => l && r,
                    BinOp::Or => l || r,
                    _ => !l || r,
                }))
            }
            BinOp::Eq | BinOp::Neq => {
                let l = eval_expr(a, v)?;
                let r = eval_expr(b, v)?;
                let same = values_equal(&l, &r);
                Ok(Value::Bool(if *op == BinOp::Eq { same } else { !same }))
            }
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                let l = as_int(a, eval_expr(a, v)?)?;
                let r = as_int(b, eval_expr(b, v)?)?;
                Ok(Value::Bool(match op {
                    BinOp::Lt => l < r,
                    BinOp::Le => l <= r,
                    BinOp::Gt => l > r,
                    _ => l >= r,
                }))
            }
            BinOp::Add | BinOp::Sub => {
                let l = as_int(a, eval_expr(a, v)?)?;
                let r = as_int(b, eval_expr(b, v)?)?;
                let out = if *op == BinOp::Add {
                    l.checked_add(r)
                } else {
                    l.checked_sub(r)
                };
                out.map(Value::Int)
                    .ok_or_else(|| EvalError::Overflow(e.to_string()))
            }
        },
        Expr::InSet(x, s) => {
            let x = eval_expr(x, v)?;
            match eval_expr(s, v)? {
                Value::Set(set) => Ok(Value::Bool(set.contains(&x))),
                Value::Map(m) if m.is_empty() => Ok(Value::Bool(false)),
                other => Err(EvalError::TypeMismatch(format!(
                    "`in set` applied to {}",
                    other.kind()
                ))),
            }
        }
        Expr::Dom(m) => keys(m, eval_expr(m, v)?),
        Expr::Apply(m, k) | Expr::Index(m, k) => {
            let coll = eval_expr(m, v)?;
            let key = eval_expr(k, v)?;
            apply(e, coll, key)
        }
        Expr::Field(r, name) => match eval_expr(r, v)? {
            Value::Record(rec) => rec.get(name).cloned().ok_or_else(|| {
                EvalError::TypeMismatch(format!("record `{r}` has no field `{name}`"))
            }),
            other => Err(EvalError::TypeMismatch(format!(
                "field `{name}` of {}",
                other.kind()
            ))),
        },
        Expr::Call(x, m, args) => {
            let base = eval_expr(x, v)?;
            match (m, base) {
                (Method::Size, coll) => size(x, &coll).map(Value::Int),
                (Method::LastItem, Value::Seq(s)) => s
                    .last()
                    .cloned()
                    .ok_or_else(|| EvalError::UndefinedApplication(format!("`{e}` on an empty sequence"))),
                (Method::Domain, coll) => keys(x, coll),
                (Method::Range, Value::Map(map)) => {
                    Ok(Value::Set(map.into_values().collect()))
                }
                (Method::Range, Value::Set(s)) if s.is_empty() => Ok(Value::Set(s)),
                (Method::Front, Value::Seq(s)) => {
                    let k = as_int(&args[0], eval_expr(&args[0], v)?)?;
                    if k < 0 || k as usize > s.len() {
                        return Err(EvalError::UndefinedApplication(format!(
                            "`{e}` with prefix length {k} of a {}-element sequence",
                            s.len()
                        )));
                    }
                    Ok(Value::Seq(s[..k as usize].to_vec()))
                }
                (m, other) => Err(EvalError::TypeMismatch(format!(
                    "`{}` applied to {}",
                    m.name(),
                    other.kind()
                ))),
            }
        }
        Expr::Arrow(x, op) => {
            let base = match eval_expr(x, v) {
                Ok(b) => Some(b),
                Err(EvalError::UndefinedApplication(_)) if *op != ArrowOp::Size => None,
                Err(err) => return Err(err),
            };
            match op {
                ArrowOp::NotEmpty | ArrowOp::IsEmpty => {
                    let non_empty = match base {
                        None => false,
                        Some(Value::Seq(s)) => !s.is_empty(),
                        Some(Value::Set(s)) => !s.is_empty(),
                        Some(Value::Map(m)) => !m.is_empty(),
                        // a defined scalar is a one-element collection
                        Some(_) => true,
                    };
                    Ok(Value::Bool(if *op == ArrowOp::NotEmpty {
                        non_empty
                    } else {
                        !non_empty
                    }))
                }
                ArrowOp::Size => match base {
                    Some(coll @ (Value::Seq(_) | Value::Set(_) | Value::Map(_))) => {
                        size(x, &coll).map(Value::Int)
                    }
                    Some(_) => Ok(Value::Int(1)),
                    None => Ok(Value::Int(0)),
                },
            }
        }
        Expr::SetLit(items) => {
            let mut s = BTreeSet::new();
            for it in items {
                s.insert(eval_expr(it, v)?);
            }
            Ok(Value::Set(s))
        }
    }
}

/// Structural equality, except that an empty map equals the empty set.
fn values_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Map(m), Value::Set(s)) | (Value::Set(s), Value::Map(m)) => {
            m.is_empty() && s.is_empty()
        }
        _ => a == b,
    }
}

fn keys(e: &Expr, coll: Value) -> Result<Value, EvalError> {
    match coll {
        Value::Map(m) => Ok(Value::Set(m.into_keys().collect())),
        Value::Seq(s) => Ok(Value::Set(
            (1..=s.len() as i64).map(Value::Int).collect(),
        )),
        Value::Set(s) if s.is_empty() => Ok(Value::Set(s)),
        other => Err(EvalError::TypeMismatch(format!(
            "domain of `{e}` which is {}",
            other.kind()
        ))),
    }
}

fn size(e: &Expr, coll: &Value) -> Result<i64, EvalError> {
    match coll {
        Value::Seq(s) => Ok(s.len() as i64),
        Value::Set(s) => Ok(s.len() as i64),
        Value::Map(m) => Ok(m.len() as i64),
        other => Err(EvalError::TypeMismatch(format!(
            "size of `{e}` which is {}",
            other.kind()
        ))),
    }
}

fn apply(e: &Expr, coll: Value, key: Value) -> Result<Value, EvalError> {
    match coll {
        Value::Map(m) => m
            .get(&key)
            .cloned()
            .ok_or_else(|| EvalError::UndefinedApplication(format!("`{e}` at key {key}"))),
        Value::Seq(s) => {
            let Value::Int(i) = key else {
                return Err(EvalError::TypeMismatch(format!(
                    "sequence index {key} is not an integer"
                )));
            };
            // sequences are 1-indexed
            if i >= 1 && (i as usize) <= s.len() {
                Ok(s[i as usize - 1].clone())
            } else {
                Err(EvalError::UndefinedApplication(format!(
                    "`{e}` at index {i} of a {}-element sequence",
                    s.len()
                )))
            }
        }
        Value::Set(s) if s.is_empty() => Err(EvalError::UndefinedApplication(format!(
            "`{e}` on an empty map"
        ))),
        other => Err(EvalError::TypeMismatch(format!(
            "application of {}",
            other.kind()
        ))),
    }
}
