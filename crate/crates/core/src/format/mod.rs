//! The `.ia` contract document format and DOT export.

mod dot;
mod parse;
mod print;

use std::collections::HashMap;

use thiserror::Error;

use crate::automaton::{validate, Diagnostic, InterfaceAutomaton, Location};
use crate::expr::{ConstraintError, NamedConstraint};
use crate::syntax::{Span, SyntaxError};

pub use dot::{export_dot, export_product_dot};
pub use parse::{parse_document, parse_document_mapped};
pub use print::{print_automaton, print_document};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Metadata {
    pub name: Option<String>,
    pub version: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ContractDocument {
    pub metadata: Metadata,
    pub automata: Vec<InterfaceAutomaton>,
}

impl ContractDocument {
    pub fn automaton(&self, name: &str) -> Option<&InterfaceAutomaton> {
        self.automata.iter().find(|a| a.name == name)
    }

    /// Every constraint declared in the document, in declaration order per automaton.
    pub fn constraints(&self) -> impl Iterator<Item = &NamedConstraint> {
        self.automata.iter().flat_map(|a| a.constraints())
    }
}

/// Source positions of the declarations in a parsed document.
#[derive(Debug, Clone, Default)]
pub struct SourceMap {
    pub automata: HashMap<String, AutomatonSpans>,
}

#[derive(Debug, Clone, Default)]
pub struct AutomatonSpans {
    pub header: Span,
    pub states: HashMap<String, Span>,
    pub actions: HashMap<String, Span>,
    pub variables: HashMap<String, Span>,
    pub constraints: HashMap<String, Span>,
    pub transitions: Vec<Span>,
}

impl AutomatonSpans {
    fn locate(&self, loc: &Location) -> Span {
        let found = match loc {
            Location::Automaton(_) => None,
            Location::State(s) => self.states.get(s),
            Location::Transition { index, .. } => self.transitions.get(*index),
            Location::Action(a) => self.actions.get(a),
            Location::Variable(v) => self.variables.get(v),
            Location::Constraint(c) => self.constraints.get(c),
        };
        found.copied().unwrap_or(self.header)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("{0}")]
    Syntax(#[from] SyntaxError),
    #[error("{span}: in constraint `{name}`: {error}")]
    Constraint {
        span: Span,
        name: String,
        error: ConstraintError,
    },
    #[error("{span}: duplicate {what} `{name}`")]
    Duplicate {
        span: Span,
        what: &'static str,
        name: String,
    },
    #[error("{span}: {message}")]
    Resolution { span: Span, message: String },
}

impl FormatError {
    pub fn span(&self) -> Span {
        match self {
            FormatError::Syntax(e) => e.span,
            FormatError::Constraint { span, .. }
            | FormatError::Duplicate { span, .. }
            | FormatError::Resolution { span, .. } => *span,
        }
    }
}

/// Parses `text` and validates every automaton in it, attaching source
/// positions to the diagnostics.
pub fn lint_document(text: &str) -> Result<(ContractDocument, Vec<Diagnostic>), FormatError> {
    let (doc, map) = parse_document_mapped(text)?;
    let mut diags = Vec::new();
    for a in &doc.automata {
        let spans = map.automata.get(&a.name);
        for mut d in validate(a) {
            d.span = spans.map(|s| s.locate(&d.location));
            diags.push(d);
        }
    }
    Ok((doc, diags))
}
