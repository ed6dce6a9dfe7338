//! Compatibility check: composability, product, illegal states, backward
//! closure to bad states, pruning, verdict.
//!
//! The closure and pruning phases are linear in the size of the product.
//! Building the product itself is `O(|δ1|·|δ2|)` in the worst case.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use indexmap::{IndexMap, IndexSet};
use serde::Serialize;

use crate::automaton::{
    composable, qualify_hidden, ActionClass, ActionLabel, ComposabilityReport, InterfaceAutomaton,
    StateId, Transition,
};
use crate::expr::{is_false, ConstraintKind, FalsityVerdict, UnknownReason, DEFAULT_ENUM_BUDGET};
use crate::product::{product, ProductError, ProductResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    /// Qualify hidden actions with their automaton's name before checking.
    pub qualify_hidden: bool,
    /// Also treat states without outgoing transitions as illegal.
    pub strict_deadlock: bool,
    /// Cap on valuations enumerated per constraint falsity test.
    pub enum_budget: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            qualify_hidden: false,
            strict_deadlock: false,
            enum_budget: DEFAULT_ENUM_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IllegalReason {
    /// `sender` can emit `action` here but its partner cannot receive it.
    UnreceivedOutput { action: ActionLabel, sender: Side },
    /// Every outgoing transition has a guard or effect equivalent to false.
    AllGuardsFalse { transitions: Vec<Transition> },
    /// No outgoing transitions at all (only with `strict_deadlock`).
    Deadlock,
}

impl fmt::Display for IllegalReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IllegalReason::UnreceivedOutput { action, sender } => {
                let side = match sender {
                    Side::Left => "left",
                    Side::Right => "right",
                };
                write!(f, "{side} side emits {action}! which its partner cannot receive")
            }
            IllegalReason::AllGuardsFalse { transitions } => {
                write!(f, "all {} outgoing transition(s) have a false pre/postcondition", transitions.len())
            }
            IllegalReason::Deadlock => f.write_str("no outgoing transitions"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UndecidedConstraint {
    pub name: String,
    pub kind: ConstraintKind,
    pub reason: UnknownReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IllegalStateSet {
    pub states: IndexSet<StateId>,
    pub reasons: IndexMap<StateId, Vec<IllegalReason>>,
    /// Constraints whose falsity could not be decided; treated as satisfiable.
    pub undecided: Vec<UndecidedConstraint>,
}

impl IllegalStateSet {
    pub fn from_states<I: IntoIterator<Item = StateId>>(states: I) -> Self {
        IllegalStateSet {
            states: states.into_iter().collect(),
            ..Default::default()
        }
    }

    fn add(&mut self, s: &StateId, r: IllegalReason) {
        self.states.insert(s.clone());
        self.reasons.entry(s.clone()).or_default().push(r);
    }
}

/// Per-state enabled labels of one class, precomputed for all states.
fn enabled_index(a: &InterfaceAutomaton, class: ActionClass) -> HashMap<&str, BTreeSet<&ActionLabel>> {
    let alphabet = a.alphabet(class);
    let mut idx: HashMap<&str, BTreeSet<&ActionLabel>> = HashMap::new();
    for t in &a.transitions {
        if alphabet.contains(&t.action) {
            idx.entry(t.source.as_str()).or_default().insert(&t.action);
        }
    }
    idx
}

/// States where a shared output cannot be received, plus states whose every
/// outgoing transition carries a pre- or postcondition equivalent to false.
///
/// `a1` and `a2` must be the operands `p` was built from.
pub fn illegal_states(
    p: &ProductResult,
    a1: &InterfaceAutomaton,
    a2: &InterfaceAutomaton,
    options: &CheckOptions,
) -> IllegalStateSet {
    let mut out = IllegalStateSet::default();
    let out1 = enabled_index(a1, ActionClass::Output);
    let in1 = enabled_index(a1, ActionClass::Input);
    let out2 = enabled_index(a2, ActionClass::Output);
    let in2 = enabled_index(a2, ActionClass::Input);
    let empty = BTreeSet::new();

    let auto = &p.automaton;
    let mut outgoing: HashMap<&str, Vec<&Transition>> = HashMap::new();
    for t in &auto.transitions {
        outgoing.entry(t.source.as_str()).or_default().push(t);
    }

    let mut verdicts: BTreeMap<(ConstraintKind, String), bool> = BTreeMap::new();
    let mut constraint_false = |kind: ConstraintKind, name: &Option<String>, out: &mut IllegalStateSet| -> bool {
        let Some(name) = name else { return false };
        if let Some(v) = verdicts.get(&(kind, name.clone())) {
            return *v;
        }
        let verdict = match auto.constraint(kind, name) {
            Some(c) => is_false(&c.body, &auto.variables, options.enum_budget),
            None => FalsityVerdict::Unknown(UnknownReason::Undeclared {
                variable: name.clone(),
            }),
        };
        if let FalsityVerdict::Unknown(reason) = &verdict {
            out.undecided.push(UndecidedConstraint {
                name: name.clone(),
                kind,
                reason: reason.clone(),
            });
        }
        let f = verdict.is_false();
        verdicts.insert((kind, name.clone()), f);
        f
    };

    for (id, (s1, s2)) in &p.pair_of {
        for a in &p.shared_actions {
            let sends1 = out1.get(s1.as_str()).unwrap_or(&empty).contains(a);
            let recv2 = in2.get(s2.as_str()).unwrap_or(&empty).contains(a);
            if sends1 && !recv2 {
                out.add(id, IllegalReason::UnreceivedOutput { action: a.clone(), sender: Side::Left });
            }
            let sends2 = out2.get(s2.as_str()).unwrap_or(&empty).contains(a);
            let recv1 = in1.get(s1.as_str()).unwrap_or(&empty).contains(a);
            if sends2 && !recv1 {
                out.add(id, IllegalReason::UnreceivedOutput { action: a.clone(), sender: Side::Right });
            }
        }
        let ts = outgoing.get(id.as_str()).map(Vec::as_slice).unwrap_or(&[]);
        if ts.is_empty() {
            if options.strict_deadlock {
                out.add(id, IllegalReason::Deadlock);
            }
            continue;
        }
        let mut all_disabled = true;
        for t in ts {
            let pre_false = constraint_false(ConstraintKind::Pre, &t.pre, &mut out);
            let disabled = pre_false || constraint_false(ConstraintKind::Post, &t.post, &mut out);
            if !disabled {
                all_disabled = false;
                break;
            }
        }
        if all_disabled {
            out.add(
                id,
                IllegalReason::AllGuardsFalse {
                    transitions: ts.iter().map(|t| (*t).clone()).collect(),
                },
            );
        }
    }
    out
}

/// Work counters for [`bad_states_counted`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClosureCounter {
    /// Transitions inspected while building the reverse index.
    pub edges_indexed: u64,
    /// States taken off the work queue.
    pub states_popped: u64,
    /// Reverse edges followed.
    pub edges_followed: u64,
}

impl ClosureCounter {
    pub fn total(&self) -> u64 {
        self.edges_indexed + self.states_popped + self.edges_followed
    }
}

/// Least fixed point of `illegal ∪ {s | s --output/hidden--> bad}`.
pub fn bad_states(p: &ProductResult, illegal: &IllegalStateSet) -> IndexSet<StateId> {
    bad_states_counted(&p.automaton, illegal).0
}

/// [`bad_states`] on a bare automaton, also returning operation counts.
pub fn bad_states_counted(
    a: &InterfaceAutomaton,
    illegal: &IllegalStateSet,
) -> (IndexSet<StateId>, ClosureCounter) {
    let mut count = ClosureCounter::default();
    let mut preds: HashMap<&str, Vec<&str>> = HashMap::with_capacity(a.states.len());
    for t in &a.transitions {
        count.edges_indexed += 1;
        // inputs are the environment's to withhold
        if !a.inputs.contains(&t.action) {
            preds.entry(t.target.as_str()).or_default().push(t.source.as_str());
        }
    }
    let mut bad: IndexSet<StateId> = illegal.states.iter().cloned().collect();
    let mut queue: VecDeque<&str> = illegal.states.iter().map(StateId::as_str).collect();
    while let Some(s) = queue.pop_front() {
        count.states_popped += 1;
        for &pred in preds.get(s).map(Vec::as_slice).unwrap_or(&[]) {
            count.edges_followed += 1;
            if !bad.contains(pred) {
                bad.insert(StateId::from(pred));
                queue.push_back(pred);
            }
        }
    }
    (bad, count)
}

/// Removes `remove` and everything no longer reachable from a surviving
/// initial state. Yields an automaton with no states if nothing survives.
pub fn prune(a: &InterfaceAutomaton, remove: &IndexSet<StateId>) -> InterfaceAutomaton {
    let mut succ: HashMap<&str, Vec<&str>> = HashMap::new();
    for t in &a.transitions {
        if !remove.contains(&t.source) && !remove.contains(&t.target) {
            succ.entry(t.source.as_str()).or_default().push(t.target.as_str());
        }
    }
    let mut reach: IndexSet<&str> = IndexSet::new();
    let mut queue = VecDeque::new();
    for i in &a.initials {
        if !remove.contains(i) && a.states.contains(i) && reach.insert(i.as_str()) {
            queue.push_back(i.as_str());
        }
    }
    while let Some(s) = queue.pop_front() {
        for &n in succ.get(s).map(Vec::as_slice).unwrap_or(&[]) {
            if reach.insert(n) {
                queue.push_back(n);
            }
        }
    }
    let mut out = a.clone();
    out.states = a
        .states
        .iter()
        .filter(|s| reach.contains(s.as_str()))
        .cloned()
        .collect();
    out.initials = a
        .initials
        .iter()
        .filter(|s| reach.contains(s.as_str()))
        .cloned()
        .collect();
    out.transitions = a
        .transitions
        .iter()
        .filter(|t| reach.contains(t.source.as_str()) && reach.contains(t.target.as_str()))
        .cloned()
        .collect();
    out
}

/// Alternating states and transitions, starting and ending with a state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub states: Vec<StateId>,
    pub transitions: Vec<Transition>,
}

impl Witness {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Checks the trace against `a`: starts initial, each step is a
    /// non-input transition of `a` linking consecutive states.
    pub fn replays(&self, a: &InterfaceAutomaton) -> bool {
        let Some(first) = self.states.first() else {
            return false;
        };
        a.initials.contains(first)
            && self.states.len() == self.transitions.len() + 1
            && self.transitions.iter().enumerate().all(|(i, t)| {
                t.source == self.states[i]
                    && t.target == self.states[i + 1]
                    && !a.inputs.contains(&t.action)
                    && a.transitions.contains(t)
            })
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(s) = self.states.first() {
            write!(f, "{s}")?;
        }
        for (t, s) in self.transitions.iter().zip(self.states.iter().skip(1)) {
            write!(f, " --{}--> {s}", t.action)?;
        }
        Ok(())
    }
}

/// Shortest output/hidden path from an initial state to an illegal state.
pub fn find_witness(a: &InterfaceAutomaton, illegal: &IllegalStateSet) -> Option<Witness> {
    let mut succ: HashMap<&str, Vec<&Transition>> = HashMap::new();
    for t in &a.transitions {
        if !a.inputs.contains(&t.action) {
            succ.entry(t.source.as_str()).or_default().push(t);
        }
    }
    let mut parent: HashMap<&str, Option<&Transition>> = HashMap::new();
    let mut queue = VecDeque::new();
    for i in &a.initials {
        if parent.insert(i.as_str(), None).is_none() {
            queue.push_back(i.as_str());
        }
    }
    while let Some(s) = queue.pop_front() {
        if illegal.states.contains(s) {
            let mut transitions = Vec::new();
            let mut cur = s;
            while let Some(Some(t)) = parent.get(cur) {
                transitions.push((*t).clone());
                cur = t.source.as_str();
            }
            transitions.reverse();
            let mut states = vec![StateId::from(cur)];
            states.extend(transitions.iter().map(|t| t.target.clone()));
            return Some(Witness { states, transitions });
        }
        for t in succ.get(s).map(Vec::as_slice).unwrap_or(&[]) {
            if !parent.contains_key(t.target.as_str()) {
                parent.insert(t.target.as_str(), Some(t));
                queue.push_back(t.target.as_str());
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "cause", rename_all = "snake_case")]
pub enum IncompatibleCause {
    NotComposable { report: ComposabilityReport },
    /// Variables or constraints of the two sides cannot be merged.
    ProductFailed { message: String },
    /// Every initial state of the product is bad.
    EmptyProduct,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Compatible,
    Incompatible(IncompatibleCause),
}

impl Verdict {
    pub fn is_compatible(&self) -> bool {
        matches!(self, Verdict::Compatible)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Compatible => f.write_str("Compatible"),
            Verdict::Incompatible(IncompatibleCause::NotComposable { report }) => {
                write!(f, "Incompatible (not composable: {report})")
            }
            Verdict::Incompatible(IncompatibleCause::ProductFailed { message }) => {
                write!(f, "Incompatible ({message})")
            }
            Verdict::Incompatible(IncompatibleCause::EmptyProduct) => {
                f.write_str("Incompatible (no legal initial state survives pruning)")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompatReport {
    /// The operands actually checked (after optional hidden qualification).
    pub left: InterfaceAutomaton,
    pub right: InterfaceAutomaton,
    pub composable: ComposabilityReport,
    pub shared: BTreeSet<ActionLabel>,
    pub product: Option<ProductResult>,
    pub illegal: IllegalStateSet,
    pub bad: IndexSet<StateId>,
    pub pruned: Option<InterfaceAutomaton>,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
}

/// Runs the whole pipeline. Every failure mode is reported as a verdict.
pub fn check_compatibility(
    a1: &InterfaceAutomaton,
    a2: &InterfaceAutomaton,
    options: &CheckOptions,
) -> CompatReport {
    let (left, right) = if options.qualify_hidden {
        (qualify_hidden(a1), qualify_hidden(a2))
    } else {
        (a1.clone(), a2.clone())
    };
    let comp = composable(&left, &right);
    let mut report = CompatReport {
        composable: comp.clone(),
        shared: BTreeSet::new(),
        product: None,
        illegal: IllegalStateSet::default(),
        bad: IndexSet::new(),
        pruned: None,
        verdict: Verdict::Compatible,
        witness: None,
        left,
        right,
    };
    if !comp.is_composable() {
        report.verdict = Verdict::Incompatible(IncompatibleCause::NotComposable { report: comp });
        return report;
    }
    let p = match product(&report.left, &report.right) {
        Ok(p) => p,
        Err(ProductError::NotComposable(r)) => {
            report.verdict = Verdict::Incompatible(IncompatibleCause::NotComposable { report: r });
            return report;
        }
        Err(e) => {
            report.verdict = Verdict::Incompatible(IncompatibleCause::ProductFailed {
                message: e.to_string(),
            });
            return report;
        }
    };
    report.shared = p.shared_actions.clone();
    let illegal = illegal_states(&p, &report.left, &report.right, options);
    let bad = bad_states(&p, &illegal);
    let pruned = prune(&p.automaton, &bad);
    if pruned.initials.is_empty() {
        report.verdict = Verdict::Incompatible(IncompatibleCause::EmptyProduct);
        report.witness = find_witness(&p.automaton, &illegal);
    }
    report.product = Some(p);
    report.illegal = illegal;
    report.bad = bad;
    report.pruned = Some(pruned);
    report
}
