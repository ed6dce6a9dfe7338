use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::typeck::Sort;

/// Finite value domain of a contract variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Domain {
    Bool,
    /// Inclusive integer range.
    Int { lo: i64, hi: i64 },
    Enum(Vec<String>),
    /// Partial maps from `key` to `value`.
    Map { key: Box<Domain>, value: Box<Domain> },
    Seq { elem: Box<Domain>, max_len: usize },
    Set { elem: Box<Domain> },
    Record(Vec<(String, Domain)>),
    /// Unbounded or unknown; never enumerated.
    Opaque,
}

impl Domain {
    pub fn sort(&self) -> Sort {
        match self {
            Domain::Bool => Sort::Bool,
            Domain::Int { .. } => Sort::Int,
            Domain::Enum(_) => Sort::Enum,
            Domain::Map { key, value } => Sort::Map(Box::new(key.sort()), Box::new(value.sort())),
            Domain::Seq { elem, .. } => Sort::Seq(Box::new(elem.sort())),
            Domain::Set { elem } => Sort::Set(Box::new(elem.sort())),
            Domain::Record(fields) => {
                Sort::Record(fields.iter().map(|(n, d)| (n.clone(), d.sort())).collect())
            }
            Domain::Opaque => Sort::Any,
        }
    }

    pub fn is_enumerable(&self) -> bool {
        match self {
            Domain::Opaque => false,
            Domain::Bool | Domain::Int { .. } | Domain::Enum(_) => true,
            Domain::Map { key, value } => key.is_enumerable() && value.is_enumerable(),
            Domain::Seq { elem, .. } | Domain::Set { elem } => elem.is_enumerable(),
            Domain::Record(fields) => fields.iter().all(|(_, d)| d.is_enumerable()),
        }
    }

    /// Number of values, saturating; `None` for opaque domains.
    pub fn cardinality(&self) -> Option<u128> {
        Some(match self {
            Domain::Opaque => return None,
            Domain::Bool => 2,
            Domain::Int { lo, hi } => {
                if hi < lo {
                    0
                } else {
                    (*hi as i128 - *lo as i128 + 1) as u128
                }
            }
            Domain::Enum(lits) => lits.len() as u128,
            Domain::Map { key, value } => {
                let k = key.cardinality()?;
                let v = value.cardinality()?;
                sat_pow(v.saturating_add(1), k)
            }
            Domain::Seq { elem, max_len } => {
                let e = elem.cardinality()?;
                let mut total: u128 = 0;
                let mut term: u128 = 1;
                for _ in 0..=*max_len {
                    total = total.saturating_add(term);
                    term = term.saturating_mul(e);
                }
                total
            }
            Domain::Set { elem } => sat_pow(2, elem.cardinality()?),
            Domain::Record(fields) => {
                let mut n: u128 = 1;
                for (_, d) in fields {
                    n = n.saturating_mul(d.cardinality()?);
                }
                n
            }
        })
    }

    /// All values in a fixed order, or `None` for opaque domains.
    ///
    /// Callers bound the size with [`Domain::cardinality`] first.
    pub fn values(&self) -> Option<Vec<Value>> {
        Some(match self {
            Domain::Opaque => return None,
            Domain::Bool => vec![Value::Bool(false), Value::Bool(true)],
            Domain::Int { lo, hi } => (*lo..=*hi).map(Value::Int).collect(),
            Domain::Enum(lits) => lits.iter().cloned().map(Value::Enum).collect(),
            Domain::Map { key, value } => {
                let keys = key.values()?;
                let vals = value.values()?;
                // each key is absent or bound to one of the values
                let mut maps = vec![BTreeMap::new()];
                for k in &keys {
                    let mut next = Vec::with_capacity(maps.len() * (vals.len() + 1));
                    for m in &maps {
                        next.push(m.clone());
                        for v in &vals {
                            let mut m2 = m.clone();
                            m2.insert(k.clone(), v.clone());
                            next.push(m2);
                        }
                    }
                    maps = next;
                }
                maps.into_iter().map(Value::Map).collect()
            }
            Domain::Seq { elem, max_len } => {
                let elems = elem.values()?;
                let mut out = vec![Value::Seq(Vec::new())];
                let mut layer: Vec<Vec<Value>> = vec![Vec::new()];
                for _ in 0..*max_len {
                    let mut next = Vec::new();
                    for prefix in &layer {
                        for e in &elems {
                            let mut s = prefix.clone();
                            s.push(e.clone());
                            next.push(s);
                        }
                    }
                    out.extend(next.iter().cloned().map(Value::Seq));
                    layer = next;
                }
                out
            }
            Domain::Set { elem } => {
                let elems = elem.values()?;
                let mut sets = vec![BTreeSet::new()];
                for e in &elems {
                    let with: Vec<_> = sets
                        .iter()
                        .map(|s| {
                            let mut s2 = s.clone();
                            s2.insert(e.clone());
                            s2
                        })
                        .collect();
                    sets.extend(with);
                }
                sets.into_iter().map(Value::Set).collect()
            }
            Domain::Record(fields) => {
                let mut recs = vec![BTreeMap::new()];
                for (name, d) in fields {
                    let vals = d.values()?;
                    let mut next = Vec::with_capacity(recs.len() * vals.len());
                    for r in &recs {
                        for v in &vals {
                            let mut r2 = r.clone();
                            r2.insert(name.clone(), v.clone());
                            next.push(r2);
                        }
                    }
                    recs = next;
                }
                recs.into_iter().map(Value::Record).collect()
            }
        })
    }

    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (Domain::Opaque, _) => true,
            (Domain::Bool, Value::Bool(_)) => true,
            (Domain::Int { lo, hi }, Value::Int(n)) => lo <= n && n <= hi,
            (Domain::Enum(lits), Value::Enum(s)) => lits.contains(s),
            (Domain::Map { key, value }, Value::Map(m)) => {
                m.iter().all(|(k, v)| key.contains(k) && value.contains(v))
            }
            (Domain::Seq { elem, max_len }, Value::Seq(s)) => {
                s.len() <= *max_len && s.iter().all(|e| elem.contains(e))
            }
            (Domain::Set { elem }, Value::Set(s)) => s.iter().all(|e| elem.contains(e)),
            (Domain::Record(fields), Value::Record(r)) => {
                r.len() == fields.len()
                    && fields
                        .iter()
                        .all(|(n, d)| r.get(n).is_some_and(|v| d.contains(v)))
            }
            // an empty set literal and an empty map are indistinguishable in bindings
            (Domain::Map { .. }, Value::Set(s)) => s.is_empty(),
            _ => false,
        }
    }

    /// Problems with the domain itself (empty enum, inverted range, ...).
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_problems(&mut out);
        out
    }

    fn collect_problems(&self, out: &mut Vec<String>) {
        match self {
            Domain::Int { lo, hi } if lo > hi => {
                out.push(format!("integer range lower bound {lo} exceeds upper bound {hi}"))
            }
            Domain::Enum(lits) if lits.is_empty() => out.push("enum domain is empty".into()),
            Domain::Enum(lits) => {
                let mut seen = BTreeSet::new();
                for l in lits {
                    if !seen.insert(l) {
                        out.push(format!("enum literal `{l}` listed twice"));
                    }
                }
            }
            Domain::Map { key, value } => {
                key.collect_problems(out);
                value.collect_problems(out);
            }
            Domain::Seq { elem, .. } | Domain::Set { elem } => elem.collect_problems(out),
            Domain::Record(fields) => {
                let mut seen = BTreeSet::new();
                for (n, d) in fields {
                    if !seen.insert(n) {
                        out.push(format!("record field `{n}` listed twice"));
                    }
                    d.collect_problems(out);
                }
            }
            _ => {}
        }
    }
}

fn sat_pow(base: u128, exp: u128) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base);
        if acc == u128::MAX {
            break;
        }
    }
    acc
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Bool => f.write_str("bool"),
            Domain::Int { lo, hi } => write!(f, "int[{lo}..{hi}]"),
            Domain::Enum(lits) => write!(f, "enum {{ {} }}", lits.join(", ")),
            Domain::Map { key, value } => write!(f, "map {key} to {value}"),
            Domain::Seq { elem, max_len } => write!(f, "seq of {elem} max {max_len}"),
            Domain::Set { elem } => write!(f, "set of {elem}"),
            Domain::Record(fields) => {
                f.write_str("record { ")?;
                for (i, (n, d)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{n} : {d}")?;
                }
                f.write_str(" }")
            }
            Domain::Opaque => f.write_str("opaque"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VariableDecl {
    pub name: String,
    pub domain: Domain,
}

impl VariableDecl {
    pub fn new(name: impl Into<String>, domain: Domain) -> Self {
        VariableDecl {
            name: name.into(),
            domain,
        }
    }
}

/// Runtime value of a constraint variable or subexpression.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Enum(String),
    Seq(Vec<Value>),
    Set(BTreeSet<Value>),
    Map(BTreeMap<Value, Value>),
    Record(BTreeMap<String, Value>),
}

impl Value {
    pub fn kind(&self) -> &'static str {
        match self {
            Value::Bool(_) => "boolean",
            Value::Int(_) => "integer",
            Value::Enum(_) => "enum",
            Value::Seq(_) => "sequence",
            Value::Set(_) => "set",
            Value::Map(_) => "map",
            Value::Record(_) => "record",
        }
    }
}

/// Same literal syntax `parse_value` accepts.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list<'a>(
            f: &mut fmt::Formatter<'_>,
            items: impl Iterator<Item = &'a Value>,
        ) -> fmt::Result {
            for (i, v) in items.enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{v}")?;
            }
            Ok(())
        }
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Enum(s) => write!(f, "<{s}>"),
            Value::Seq(s) => {
                f.write_str("[")?;
                list(f, s.iter())?;
                f.write_str("]")
            }
            Value::Set(s) => {
                f.write_str("{")?;
                list(f, s.iter())?;
                f.write_str("}")
            }
            Value::Map(m) if m.is_empty() => f.write_str("{|->}"),
            Value::Map(m) => {
                f.write_str("{")?;
                for (i, (k, v)) in m.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k} |-> {v}")?;
                }
                f.write_str("}")
            }
            Value::Record(r) => {
                f.write_str("mk{")?;
                for (i, (k, v)) in r.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k} = {v}")?;
                }
                f.write_str("}")
            }
        }
    }
}
