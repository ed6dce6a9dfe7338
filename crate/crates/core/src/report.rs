//! Machine-readable summary of a compatibility check.

use serde::Serialize;

use crate::automaton::{ActionLabel, ClauseConflict, InterfaceAutomaton, StateId};
use crate::compat::{
    CheckOptions, CompatReport, IllegalReason, UndecidedConstraint, Verdict, Witness,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct JsonReport {
    pub schema_version: u32,
    pub left: String,
    pub right: String,
    pub options: JsonOptions,
    pub composable: bool,
    pub conflicts: Vec<ClauseConflict>,
    pub shared: Vec<ActionLabel>,
    pub product: Option<Shape>,
    pub illegal: Vec<IllegalEntry>,
    pub undecided: Vec<UndecidedConstraint>,
    pub bad: Vec<StateId>,
    pub pruned: Option<Shape>,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct JsonOptions {
    pub qualify_hidden: bool,
    pub strict_deadlock: bool,
    pub enum_budget: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Shape {
    pub states: usize,
    pub transitions: usize,
    pub initial: Vec<StateId>,
}

impl Shape {
    fn of(a: &InterfaceAutomaton) -> Self {
        Shape {
            states: a.states.len(),
            transitions: a.transitions.len(),
            initial: a.initials.iter().cloned().collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IllegalEntry {
    pub state: StateId,
    pub reasons: Vec<IllegalReason>,
}

impl JsonReport {
    pub fn new(r: &CompatReport, options: &CheckOptions) -> Self {
        JsonReport {
            schema_version: SCHEMA_VERSION,
            left: r.left.name.clone(),
            right: r.right.name.clone(),
            options: JsonOptions {
                qualify_hidden: options.qualify_hidden,
                strict_deadlock: options.strict_deadlock,
                enum_budget: options.enum_budget,
            },
            composable: r.composable.is_composable(),
            conflicts: r.composable.conflicts.clone(),
            shared: r.shared.iter().cloned().collect(),
            product: r.product.as_ref().map(|p| Shape::of(&p.automaton)),
            illegal: r
                .illegal
                .states
                .iter()
                .map(|s| IllegalEntry {
                    state: s.clone(),
                    reasons: r.illegal.reasons.get(s).cloned().unwrap_or_default(),
                })
                .collect(),
            undecided: r.illegal.undecided.clone(),
            bad: r.bad.iter().cloned().collect(),
            pruned: r.pruned.as_ref().map(Shape::of),
            verdict: r.verdict.clone(),
            witness: r.witness.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is always serializable")
    }
}
