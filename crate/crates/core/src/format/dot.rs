use std::fmt::Write;

use crate::automaton::{InterfaceAutomaton, StateId, Transition};
use crate::compat::CompatReport;
use crate::syntax::is_identifier;

fn id(s: &str) -> String {
    if is_identifier(s) {
        s.to_string()
    } else {
        format!("{s:?}")
    }
}

fn edge_label(a: &InterfaceAutomaton, t: &Transition) -> String {
    let mut label = t.action.to_string();
    if let Some(class) = a.class_of(&t.action) {
        label.push(class.suffix());
    }
    if let Some(p) = &t.pre {
        let _ = write!(label, " pre {p}");
    }
    if let Some(p) = &t.post {
        let _ = write!(label, " post {p}");
    }
    label
}

fn render(a: &InterfaceAutomaton, node_attrs: impl Fn(&StateId) -> Vec<String>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", id(&a.name));
    out.push_str("  rankdir=LR;\n");
    for s in &a.states {
        let mut attrs = Vec::new();
        if a.initials.contains(s) {
            attrs.push("shape=doublecircle".to_string());
        }
        attrs.extend(node_attrs(s));
        if attrs.is_empty() {
            let _ = writeln!(out, "  {};", id(s.as_str()));
        } else {
            let _ = writeln!(out, "  {} [{}];", id(s.as_str()), attrs.join(", "));
        }
    }
    for t in &a.transitions {
        let _ = writeln!(
            out,
            "  {} -> {} [label={:?}];",
            id(t.source.as_str()),
            id(t.target.as_str()),
            edge_label(a, t)
        );
    }
    out.push_str("}\n");
    out
}

/// Graphviz rendering of an automaton. Initial states are double circles;
/// edge labels carry the `?`/`!`/`;` class suffix.
pub fn export_dot(a: &InterfaceAutomaton) -> String {
    render(a, |_| Vec::new())
}

/// Renders the product of a compatibility check. Illegal states are red,
/// other bad states orange.
pub fn export_product_dot(report: &CompatReport) -> Option<String> {
    let p = &report.product.as_ref()?.automaton;
    Some(render(p, |s| {
        if report.illegal.states.contains(s) {
            vec!["color=red".into(), "style=filled".into(), "fillcolor=mistyrose".into()]
        } else if report.bad.contains(s) {
            vec!["color=orange".into()]
        } else {
            Vec::new()
        }
    }))
}
