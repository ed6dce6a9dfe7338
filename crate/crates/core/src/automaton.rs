//! Extended interface automata: states, three disjoint action alphabets,
//! contract variables, named pre/postconditions and guarded transitions.

use std::borrow::Borrow;
use std::collections::BTreeSet;
use std::fmt;

use indexmap::{IndexMap, IndexSet};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::expr::{self, ConstraintKind, Expr, NamedConstraint, VariableDecl};
use crate::syntax::{is_identifier, Span};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub String);

impl StateId {
    pub fn new(s: impl Into<String>) -> Self {
        StateId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for StateId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for StateId {
    fn from(s: &str) -> Self {
        StateId(s.to_string())
    }
}

impl Serialize for StateId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

/// Action name with an optional automaton-local qualifier (`LEDevice::init`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionLabel {
    pub namespace: Option<String>,
    pub name: String,
}

impl ActionLabel {
    pub fn new(name: impl Into<String>) -> Self {
        ActionLabel {
            namespace: None,
            name: name.into(),
        }
    }

    pub fn qualified(namespace: impl Into<String>, name: impl Into<String>) -> Self {
        ActionLabel {
            namespace: Some(namespace.into()),
            name: name.into(),
        }
    }
}

impl fmt::Display for ActionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.namespace {
            Some(ns) => write!(f, "{ns}::{}", self.name),
            None => f.write_str(&self.name),
        }
    }
}

impl From<&str> for ActionLabel {
    fn from(s: &str) -> Self {
        match s.split_once("::") {
            Some((ns, name)) => ActionLabel::qualified(ns, name),
            None => ActionLabel::new(s),
        }
    }
}

impl Serialize for ActionLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionClass {
    Input,
    Output,
    Hidden,
}

impl ActionClass {
    /// `?`, `!` or `;`.
    pub fn suffix(self) -> char {
        match self {
            ActionClass::Input => '?',
            ActionClass::Output => '!',
            ActionClass::Hidden => ';',
        }
    }
}

/// `source -[pre] action [post]-> target`. Absent constraints mean `true`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Transition {
    pub source: StateId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pre: Option<String>,
    pub action: ActionLabel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub post: Option<String>,
    pub target: StateId,
}

impl Transition {
    pub fn new(source: &str, action: impl Into<ActionLabel>, target: &str) -> Self {
        Transition {
            source: source.into(),
            pre: None,
            action: action.into(),
            post: None,
            target: target.into(),
        }
    }

    pub fn with_pre(mut self, name: &str) -> Self {
        self.pre = Some(name.to_string());
        self
    }

    pub fn with_post(mut self, name: &str) -> Self {
        self.post = Some(name.to_string());
        self
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.source)?;
        if let Some(p) = &self.pre {
            write!(f, "{p}:")?;
        }
        write!(f, "{}:", self.action)?;
        if let Some(p) = &self.post {
            write!(f, "{p}:")?;
        }
        write!(f, "{}", self.target)
    }
}

/// Transitions are kept as a list in declaration order; a repeated
/// transition is harmless under the set reading and is kept as written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterfaceAutomaton {
    pub name: String,
    pub states: IndexSet<StateId>,
    pub initials: IndexSet<StateId>,
    pub inputs: IndexSet<ActionLabel>,
    pub outputs: IndexSet<ActionLabel>,
    pub hidden: IndexSet<ActionLabel>,
    pub variables: Vec<VariableDecl>,
    pub preconditions: IndexMap<String, NamedConstraint>,
    pub postconditions: IndexMap<String, NamedConstraint>,
    pub invariants: IndexMap<String, NamedConstraint>,
    pub transitions: Vec<Transition>,
}

impl InterfaceAutomaton {
    pub fn new(name: impl Into<String>) -> Self {
        InterfaceAutomaton {
            name: name.into(),
            states: IndexSet::new(),
            initials: IndexSet::new(),
            inputs: IndexSet::new(),
            outputs: IndexSet::new(),
            hidden: IndexSet::new(),
            variables: Vec::new(),
            preconditions: IndexMap::new(),
            postconditions: IndexMap::new(),
            invariants: IndexMap::new(),
            transitions: Vec::new(),
        }
    }

    pub fn with_states<'a>(mut self, states: impl IntoIterator<Item = &'a str>) -> Self {
        self.states.extend(states.into_iter().map(StateId::from));
        self
    }

    pub fn with_initials<'a>(mut self, states: impl IntoIterator<Item = &'a str>) -> Self {
        self.initials.extend(states.into_iter().map(StateId::from));
        self
    }

    pub fn with_actions<'a>(
        mut self,
        class: ActionClass,
        labels: impl IntoIterator<Item = &'a str>,
    ) -> Self {
        self.alphabet_mut(class)
            .extend(labels.into_iter().map(ActionLabel::from));
        self
    }

    pub fn with_transition(mut self, t: Transition) -> Self {
        self.transitions.push(t);
        self
    }

    pub fn alphabet(&self, class: ActionClass) -> &IndexSet<ActionLabel> {
        match class {
            ActionClass::Input => &self.inputs,
            ActionClass::Output => &self.outputs,
            ActionClass::Hidden => &self.hidden,
        }
    }

    pub fn alphabet_mut(&mut self, class: ActionClass) -> &mut IndexSet<ActionLabel> {
        match class {
            ActionClass::Input => &mut self.inputs,
            ActionClass::Output => &mut self.outputs,
            ActionClass::Hidden => &mut self.hidden,
        }
    }

    /// Σ = inputs ∪ outputs ∪ hidden.
    pub fn actions(&self) -> BTreeSet<ActionLabel> {
        self.inputs
            .iter()
            .chain(&self.outputs)
            .chain(&self.hidden)
            .cloned()
            .collect()
    }

    pub fn class_of(&self, label: &ActionLabel) -> Option<ActionClass> {
        [ActionClass::Input, ActionClass::Output, ActionClass::Hidden]
            .into_iter()
            .find(|c| self.alphabet(*c).contains(label))
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn constraint(&self, kind: ConstraintKind, name: &str) -> Option<&NamedConstraint> {
        self.registry(kind).get(name)
    }

    pub fn registry(&self, kind: ConstraintKind) -> &IndexMap<String, NamedConstraint> {
        match kind {
            ConstraintKind::Pre => &self.preconditions,
            ConstraintKind::Post => &self.postconditions,
            ConstraintKind::Inv => &self.invariants,
        }
    }

    pub fn registry_mut(&mut self, kind: ConstraintKind) -> &mut IndexMap<String, NamedConstraint> {
        match kind {
            ConstraintKind::Pre => &mut self.preconditions,
            ConstraintKind::Post => &mut self.postconditions,
            ConstraintKind::Inv => &mut self.invariants,
        }
    }

    pub fn add_constraint(&mut self, c: NamedConstraint) {
        self.registry_mut(c.kind).insert(c.name.clone(), c);
    }

    /// All registered constraints, invariants first.
    pub fn constraints(&self) -> impl Iterator<Item = &NamedConstraint> {
        self.invariants
            .values()
            .chain(self.preconditions.values())
            .chain(self.postconditions.values())
    }

    pub fn outgoing<'a>(&'a self, s: &'a str) -> impl Iterator<Item = &'a Transition> + 'a {
        self.transitions.iter().filter(move |t| t.source.as_str() == s)
    }
}

/// Where a diagnostic points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "at", rename_all = "snake_case")]
pub enum Location {
    Automaton(String),
    State(String),
    Transition { index: usize, text: String },
    Action(String),
    Variable(String),
    Constraint(String),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Automaton(n) => write!(f, "automaton {n}"),
            Location::State(s) => write!(f, "state {s}"),
            Location::Transition { index, text } => write!(f, "transition #{index} ({text})"),
            Location::Action(a) => write!(f, "action {a}"),
            Location::Variable(v) => write!(f, "variable {v}"),
            Location::Constraint(c) => write!(f, "constraint {c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub location: Location,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span: Option<Span>,
}

impl Diagnostic {
    fn new(location: Location, message: impl Into<String>) -> Self {
        Diagnostic {
            location,
            message: message.into(),
            span: None,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(span) = &self.span {
            write!(f, "{span}: ")?;
        }
        write!(f, "{}: {}", self.location, self.message)
    }
}

/// Checks every well-formedness rule and reports each violation.
pub fn validate(a: &InterfaceAutomaton) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let here = || Location::Automaton(a.name.clone());

    if a.initials.is_empty() {
        out.push(Diagnostic::new(here(), "initial set empty"));
    }
    for s in &a.initials {
        if !a.states.contains(s) {
            out.push(Diagnostic::new(
                Location::State(s.0.clone()),
                format!("initial state `{s}` is not in the state set"),
            ));
        }
    }

    let classes = [
        (ActionClass::Input, ActionClass::Output),
        (ActionClass::Input, ActionClass::Hidden),
        (ActionClass::Output, ActionClass::Hidden),
    ];
    let mut overlapping = BTreeSet::new();
    for (c1, c2) in classes {
        for l in a.alphabet(c1) {
            if a.alphabet(c2).contains(l) {
                overlapping.insert(l.clone());
            }
        }
    }
    for l in overlapping {
        out.push(Diagnostic::new(
            Location::Action(l.to_string()),
            format!("alphabets not disjoint: {l}"),
        ));
    }
    for l in a.actions() {
        let valid = is_identifier(&l.name)
            && l.namespace.as_deref().map_or(true, is_identifier);
        if !valid {
            out.push(Diagnostic::new(
                Location::Action(l.to_string()),
                format!("action label `{l}` is not an identifier"),
            ));
        }
    }

    for (i, t) in a.transitions.iter().enumerate() {
        let loc = || Location::Transition {
            index: i,
            text: t.to_string(),
        };
        for (end, s) in [("source", &t.source), ("target", &t.target)] {
            if !a.states.contains(s) {
                out.push(Diagnostic::new(loc(), format!("{end} state `{s}` is not declared")));
            }
        }
        if a.class_of(&t.action).is_none() {
            out.push(Diagnostic::new(
                loc(),
                format!("action `{}` is in no alphabet", t.action),
            ));
        }
        if let Some(p) = &t.pre {
            if !a.preconditions.contains_key(p) {
                out.push(Diagnostic::new(loc(), format!("precondition `{p}` is not registered")));
            }
        }
        if let Some(p) = &t.post {
            if !a.postconditions.contains_key(p) {
                out.push(Diagnostic::new(loc(), format!("postcondition `{p}` is not registered")));
            }
        }
    }

    let mut seen = BTreeSet::new();
    for d in &a.variables {
        let loc = || Location::Variable(d.name.clone());
        if !seen.insert(d.name.as_str()) {
            out.push(Diagnostic::new(loc(), "variable declared twice"));
        }
        if !d.name.split('.').all(is_identifier) {
            out.push(Diagnostic::new(loc(), "variable name is not a dotted identifier"));
        }
        for p in d.domain.problems() {
            out.push(Diagnostic::new(loc(), p));
        }
    }

    for kind in [ConstraintKind::Inv, ConstraintKind::Pre, ConstraintKind::Post] {
        for (name, c) in a.registry(kind) {
            let loc = || Location::Constraint(name.clone());
            if c.name != *name {
                out.push(Diagnostic::new(loc(), format!("registered under `{name}` but named `{}`", c.name)));
            }
            if c.kind != kind {
                out.push(Diagnostic::new(
                    loc(),
                    format!("a {} constraint in the {} registry", c.kind.keyword(), kind.keyword()),
                ));
            }
            out.extend(constraint_problems(c, &a.variables).into_iter().map(|m| Diagnostic::new(loc(), m)));
        }
    }
    out
}

fn constraint_problems(c: &NamedConstraint, decls: &[VariableDecl]) -> Vec<String> {
    let mut problems = Vec::new();
    let mut unknown = BTreeSet::new();
    c.body.visit(&mut |e| match e {
        Expr::Var(v) if !decls.iter().any(|d| d.name == v.path) => {
            unknown.insert(v.path.clone());
        }
        Expr::Path { segments, .. } => {
            unknown.insert(segments.join("."));
        }
        _ => {}
    });
    for u in &unknown {
        problems.push(format!("references undeclared variable `{u}`"));
    }
    if c.kind != ConstraintKind::Post && c.body.has_old_refs() {
        problems.push("old-value reference outside a postcondition".into());
    }
    if unknown.is_empty() {
        match expr::infer_sort(&c.body, decls) {
            Ok(s) if s.compatible(&expr::Sort::Bool) => {}
            Ok(s) => problems.push(format!("body has sort {s}, expected boolean")),
            Err(e) => problems.push(format!("type error in `{}`: {}", e.subexpr, e.message)),
        }
    }
    problems
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutomatonError {
    #[error("state not found: {0}")]
    StateNotFound(String),
    #[error("not composable: {0}")]
    NotComposable(ComposabilityReport),
}

/// Labels of class `class` on transitions leaving `s`.
pub fn enabled_actions(
    a: &InterfaceAutomaton,
    s: &str,
    class: ActionClass,
) -> Result<BTreeSet<ActionLabel>, AutomatonError> {
    if !a.states.contains(s) {
        return Err(AutomatonError::StateNotFound(s.to_string()));
    }
    let alphabet = a.alphabet(class);
    Ok(a
        .outgoing(s)
        .filter(|t| alphabet.contains(&t.action))
        .map(|t| t.action.clone())
        .collect())
}

/// The four disjointness clauses of composability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Clause {
    /// Σ1^I ∩ Σ2^I
    InputsOverlap,
    /// Σ1^O ∩ Σ2^O
    OutputsOverlap,
    /// Σ1^H ∩ Σ2
    LeftHiddenOverlap,
    /// Σ1 ∩ Σ2^H
    RightHiddenOverlap,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Clause::InputsOverlap => "inputs(A1) ∩ inputs(A2)",
            Clause::OutputsOverlap => "outputs(A1) ∩ outputs(A2)",
            Clause::LeftHiddenOverlap => "hidden(A1) ∩ actions(A2)",
            Clause::RightHiddenOverlap => "actions(A1) ∩ hidden(A2)",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClauseConflict {
    pub clause: Clause,
    pub actions: BTreeSet<ActionLabel>,
}

impl fmt::Display for ClauseConflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.actions.iter().map(ToString::to_string).collect();
        write!(f, "{} = {{{}}}", self.clause, names.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ComposabilityReport {
    pub conflicts: Vec<ClauseConflict>,
}

impl ComposabilityReport {
    pub fn is_composable(&self) -> bool {
        self.conflicts.is_empty()
    }

    /// Union of the conflicting actions over all clauses.
    pub fn conflicting_actions(&self) -> BTreeSet<ActionLabel> {
        self.conflicts
            .iter()
            .flat_map(|c| c.actions.iter().cloned())
            .collect()
    }

    pub fn clause(&self, clause: Clause) -> Option<&BTreeSet<ActionLabel>> {
        self.conflicts
            .iter()
            .find(|c| c.clause == clause)
            .map(|c| &c.actions)
    }
}

impl fmt::Display for ComposabilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.conflicts.is_empty() {
            return f.write_str("composable");
        }
        for (i, c) in self.conflicts.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

fn meet(a: &IndexSet<ActionLabel>, b: &BTreeSet<ActionLabel>) -> BTreeSet<ActionLabel> {
    a.iter().filter(|l| b.contains(*l)).cloned().collect()
}

pub fn composable(a1: &InterfaceAutomaton, a2: &InterfaceAutomaton) -> ComposabilityReport {
    let in2: BTreeSet<_> = a2.inputs.iter().cloned().collect();
    let out2: BTreeSet<_> = a2.outputs.iter().cloned().collect();
    let hid2: BTreeSet<_> = a2.hidden.iter().cloned().collect();
    let all1 = a1.actions();
    let all2 = a2.actions();
    let clauses = [
        (Clause::InputsOverlap, meet(&a1.inputs, &in2)),
        (Clause::OutputsOverlap, meet(&a1.outputs, &out2)),
        (Clause::LeftHiddenOverlap, meet(&a1.hidden, &all2)),
        (
            Clause::RightHiddenOverlap,
            all1.intersection(&hid2).cloned().collect(),
        ),
    ];
    ComposabilityReport {
        conflicts: clauses
            .into_iter()
            .filter(|(_, s)| !s.is_empty())
            .map(|(clause, actions)| ClauseConflict { clause, actions })
            .collect(),
    }
}

/// (Σ1^I ∩ Σ2^O) ∪ (Σ2^I ∩ Σ1^O) for a composable pair.
pub fn shared(
    a1: &InterfaceAutomaton,
    a2: &InterfaceAutomaton,
) -> Result<BTreeSet<ActionLabel>, AutomatonError> {
    let report = composable(a1, a2);
    if !report.is_composable() {
        return Err(AutomatonError::NotComposable(report));
    }
    Ok(shared_unchecked(a1, a2))
}

pub(crate) fn shared_unchecked(
    a1: &InterfaceAutomaton,
    a2: &InterfaceAutomaton,
) -> BTreeSet<ActionLabel> {
    let out2: BTreeSet<_> = a2.outputs.iter().cloned().collect();
    let in2: BTreeSet<_> = a2.inputs.iter().cloned().collect();
    let mut s = meet(&a1.inputs, &out2);
    s.extend(meet(&a1.outputs, &in2));
    s
}

/// Puts every unqualified hidden action in the automaton's own namespace.
/// Labels that already carry a namespace are left alone.
pub fn qualify_hidden(a: &InterfaceAutomaton) -> InterfaceAutomaton {
    let rename = |l: &ActionLabel| -> ActionLabel {
        if l.namespace.is_none() && a.hidden.contains(l) {
            ActionLabel::qualified(a.name.clone(), l.name.clone())
        } else {
            l.clone()
        }
    };
    let mut out = a.clone();
    out.hidden = a.hidden.iter().map(rename).collect();
    for t in &mut out.transitions {
        t.action = rename(&t.action);
    }
    out
}
