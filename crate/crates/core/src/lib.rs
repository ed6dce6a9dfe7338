//! Interface automata with contract constraints: composition and
//! compatibility checking.
//!
//! ```
//! use iacheck_core::{check_compatibility, fixtures, format::parse_document, CheckOptions};
//!
//! let ping = parse_document(fixtures::PING).unwrap();
//! let pong = parse_document(fixtures::PONG).unwrap();
//! let report = check_compatibility(&ping.automata[0], &pong.automata[0], &CheckOptions::default());
//! assert!(report.verdict.is_compatible());
//! ```

pub mod automaton;
pub mod compat;
pub mod expr;
pub mod fixtures;
pub mod format;
pub mod product;
pub mod report;
pub mod syntax;

pub use automaton::{
    composable, qualify_hidden, shared, validate, ActionClass, ActionLabel, ComposabilityReport,
    Diagnostic, InterfaceAutomaton, StateId, Transition,
};
pub use compat::{
    bad_states, check_compatibility, find_witness, illegal_states, prune, CheckOptions,
    CompatReport, IllegalStateSet, Verdict, Witness,
};
pub use product::{product, ProductError, ProductResult};
