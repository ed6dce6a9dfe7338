//! Synchronized product of two composable automata.
//!
//! Only the part reachable from `I1 × I2` is built. Shared actions
//! synchronize and become hidden; everything else interleaves. On a
//! synchronized step the guards (and effects) of both sides are conjoined.

use std::collections::{BTreeSet, HashMap, VecDeque};

use indexmap::{IndexMap, IndexSet};
use thiserror::Error;

use crate::automaton::{
    composable, shared_unchecked, ActionLabel, ComposabilityReport, InterfaceAutomaton, StateId,
    Transition,
};
use crate::expr::{ConstraintKind, Expr, NamedConstraint, VariableDecl};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductResult {
    pub automaton: InterfaceAutomaton,
    /// Product state → (left state, right state).
    pub pair_of: IndexMap<StateId, (StateId, StateId)>,
    pub shared_actions: BTreeSet<ActionLabel>,
}

impl ProductResult {
    pub fn state_of(&self, left: &str, right: &str) -> Option<&StateId> {
        self.pair_of
            .iter()
            .find(|(_, (l, r))| l.as_str() == left && r.as_str() == right)
            .map(|(s, _)| s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProductError {
    #[error("automata are not composable: {0}")]
    NotComposable(ComposabilityReport),
    #[error("variable `{0}` is declared with different domains on the two sides")]
    VariableClash(String),
    #[error("constraint `{0}` is defined differently on the two sides")]
    ConstraintClash(String),
}

/// Name of a product state.
pub fn pair_state(left: &StateId, right: &StateId) -> StateId {
    StateId(format!("({left},{right})"))
}

/// Name of the conjunction of two constraints; operands sorted.
pub fn conjunction_name(a: &str, b: &str) -> String {
    if a <= b {
        format!("{a}_and_{b}")
    } else {
        format!("{b}_and_{a}")
    }
}

fn conjoin(kind: ConstraintKind, a: &NamedConstraint, b: &NamedConstraint) -> NamedConstraint {
    let (first, second) = if a.name <= b.name { (a, b) } else { (b, a) };
    NamedConstraint::new(
        conjunction_name(&a.name, &b.name),
        kind,
        Expr::and(first.body.clone(), second.body.clone()),
    )
}

fn combine(a: &Option<String>, b: &Option<String>) -> Option<String> {
    match (a, b) {
        (None, None) => None,
        (Some(x), None) | (None, Some(x)) => Some(x.clone()),
        (Some(x), Some(y)) => Some(conjunction_name(x, y)),
    }
}

fn merge_variables(
    v1: &[VariableDecl],
    v2: &[VariableDecl],
) -> Result<Vec<VariableDecl>, ProductError> {
    let mut out = v1.to_vec();
    for d in v2 {
        match out.iter().find(|x| x.name == d.name) {
            Some(x) if x.domain == d.domain => {}
            Some(_) => return Err(ProductError::VariableClash(d.name.clone())),
            None => out.push(d.clone()),
        }
    }
    Ok(out)
}

fn merge_registry(
    r1: &IndexMap<String, NamedConstraint>,
    r2: &IndexMap<String, NamedConstraint>,
    into: &mut IndexMap<String, NamedConstraint>,
) -> Result<(), ProductError> {
    for (name, c) in r1.iter().chain(r2) {
        match into.get(name) {
            Some(existing) if existing.body != c.body => {
                return Err(ProductError::ConstraintClash(name.clone()))
            }
            Some(_) => {}
            None => {
                into.insert(name.clone(), c.clone());
            }
        }
    }
    Ok(())
}

fn index_by_source(a: &InterfaceAutomaton) -> HashMap<&str, Vec<&Transition>> {
    let mut idx: HashMap<&str, Vec<&Transition>> = HashMap::new();
    for t in &a.transitions {
        idx.entry(t.source.as_str()).or_default().push(t);
    }
    idx
}

/// Builds `a1 ⊗ a2` restricted to states reachable from the initial pairs.
///
/// Cost is proportional to the reachable pairs times the operands'
/// out-degrees, i.e. `O(|δ1|·|δ2|)` in the worst case.
pub fn product(
    a1: &InterfaceAutomaton,
    a2: &InterfaceAutomaton,
) -> Result<ProductResult, ProductError> {
    let report = composable(a1, a2);
    if !report.is_composable() {
        return Err(ProductError::NotComposable(report));
    }
    let shared = shared_unchecked(a1, a2);

    let mut p = InterfaceAutomaton::new(format!("{}_x_{}", a1.name, a2.name));
    p.inputs = a1
        .inputs
        .iter()
        .chain(&a2.inputs)
        .filter(|l| !shared.contains(*l))
        .cloned()
        .collect();
    p.outputs = a1
        .outputs
        .iter()
        .chain(&a2.outputs)
        .filter(|l| !shared.contains(*l))
        .cloned()
        .collect();
    p.hidden = a1
        .hidden
        .iter()
        .chain(&a2.hidden)
        .chain(&shared)
        .cloned()
        .collect();
    p.variables = merge_variables(&a1.variables, &a2.variables)?;
    merge_registry(&a1.invariants, &a2.invariants, &mut p.invariants)?;
    for kind in [ConstraintKind::Pre, ConstraintKind::Post] {
        let (r1, r2) = (a1.registry(kind), a2.registry(kind));
        let mut reg = IndexMap::new();
        merge_registry(r1, r2, &mut reg)?;
        for c1 in r1.values() {
            for c2 in r2.values() {
                let c = conjoin(kind, c1, c2);
                if let Some(existing) = reg.get(&c.name) {
                    if existing.body != c.body {
                        return Err(ProductError::ConstraintClash(c.name));
                    }
                } else {
                    reg.insert(c.name.clone(), c);
                }
            }
        }
        *p.registry_mut(kind) = reg;
    }

    let out1 = index_by_source(a1);
    let out2 = index_by_source(a2);
    let none: Vec<&Transition> = Vec::new();
    let mut pair_of: IndexMap<StateId, (StateId, StateId)> = IndexMap::new();
    let mut queue = VecDeque::new();
    let visit = |l: &StateId, r: &StateId, pair_of: &mut IndexMap<_, _>, queue: &mut VecDeque<_>| {
        let id = pair_state(l, r);
        if !pair_of.contains_key(&id) {
            pair_of.insert(id.clone(), (l.clone(), r.clone()));
            queue.push_back((id.clone(), l.clone(), r.clone()));
        }
        id
    };
    let mut initials = IndexSet::new();
    for i1 in &a1.initials {
        for i2 in &a2.initials {
            initials.insert(visit(i1, i2, &mut pair_of, &mut queue));
        }
    }
    while let Some((id, s1, s2)) = queue.pop_front() {
        let from1 = out1.get(s1.as_str()).unwrap_or(&none);
        let from2 = out2.get(s2.as_str()).unwrap_or(&none);
        for t1 in from1 {
            if shared.contains(&t1.action) {
                for t2 in from2.iter().filter(|t2| t2.action == t1.action) {
                    let target = visit(&t1.target, &t2.target, &mut pair_of, &mut queue);
                    p.transitions.push(Transition {
                        source: id.clone(),
                        pre: combine(&t1.pre, &t2.pre),
                        action: t1.action.clone(),
                        post: combine(&t1.post, &t2.post),
                        target,
                    });
                }
            } else {
                let target = visit(&t1.target, &s2, &mut pair_of, &mut queue);
                p.transitions.push(Transition {
                    source: id.clone(),
                    target,
                    ..(*t1).clone()
                });
            }
        }
        for t2 in from2.iter().filter(|t| !shared.contains(&t.action)) {
            let target = visit(&s1, &t2.target, &mut pair_of, &mut queue);
            p.transitions.push(Transition {
                source: id.clone(),
                target,
                ..(*t2).clone()
            });
        }
    }
    p.states = pair_of.keys().cloned().collect();
    p.initials = initials;
    Ok(ProductResult {
        automaton: p,
        pair_of,
        shared_actions: shared,
    })
}
