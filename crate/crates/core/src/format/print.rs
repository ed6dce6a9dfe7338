use std::fmt::Write;

use super::ContractDocument;
use crate::automaton::{ActionClass, InterfaceAutomaton, StateId};
use crate::expr::ConstraintKind;
use crate::syntax::is_identifier;

const KEYWORDS: &[&str] = &["pre", "post", "inv", "context", "automaton", "document"];

pub(crate) fn quote_state(s: &StateId) -> String {
    let s = s.as_str();
    if is_identifier(s) && !KEYWORDS.contains(&s) {
        s.to_string()
    } else {
        let mut out = String::from("\"");
        for c in s.chars() {
            if c == '"' || c == '\\' {
                out.push('\\');
            }
            out.push(c);
        }
        out.push('"');
        out
    }
}

fn list<T>(items: impl IntoIterator<Item = T>, f: impl Fn(T) -> String) -> String {
    let items: Vec<String> = items.into_iter().map(f).collect();
    if items.is_empty() {
        "{ }".into()
    } else {
        format!("{{ {} }}", items.join(", "))
    }
}

/// Canonical text of one automaton. Parsing it back yields an equal automaton.
pub fn print_automaton(a: &InterfaceAutomaton) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "automaton {} {{", a.name);
    let _ = writeln!(out, "  states {}", list(&a.states, quote_state));
    let _ = writeln!(out, "  initial {}", list(&a.initials, quote_state));
    for (kw, class) in [
        ("inputs", ActionClass::Input),
        ("outputs", ActionClass::Output),
        ("hidden", ActionClass::Hidden),
    ] {
        let _ = writeln!(out, "  {kw} {}", list(a.alphabet(class), |l| l.to_string()));
    }
    if !a.variables.is_empty() {
        out.push('\n');
    }
    for v in &a.variables {
        let _ = writeln!(out, "  var {} : {};", v.name, v.domain);
    }
    for kind in [ConstraintKind::Inv, ConstraintKind::Pre, ConstraintKind::Post] {
        let reg = a.registry(kind);
        if !reg.is_empty() {
            out.push('\n');
        }
        for c in reg.values() {
            let _ = writeln!(out, "  {c};");
        }
    }
    if !a.transitions.is_empty() {
        out.push_str("\n  transitions {\n");
        for t in &a.transitions {
            let _ = write!(out, "    {} -[{}", quote_state(&t.source), t.action);
            if let Some(p) = &t.pre {
                let _ = write!(out, " pre {p}");
            }
            if let Some(p) = &t.post {
                let _ = write!(out, " post {p}");
            }
            let _ = writeln!(out, "]-> {};", quote_state(&t.target));
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

pub fn print_document(d: &ContractDocument) -> String {
    let mut out = String::new();
    if let Some(name) = &d.metadata.name {
        let _ = write!(out, "document {name}");
        if let Some(v) = &d.metadata.version {
            let _ = write!(out, " version {v:?}");
        }
        out.push_str(";\n\n");
    }
    let blocks: Vec<String> = d.automata.iter().map(print_automaton).collect();
    out.push_str(&blocks.join("\n"));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_document;

    #[test]
    fn round_trip() {
        let src = r#"
            automaton P {
              states { "(a,b)", s, "pre" }
              initial { "(a,b)" }
              inputs { x } outputs { P::y } hidden { }
              var m : map int[0..1] to bool;
              var r : record { c : enum { on, off }, s : int[-2..2] };
              inv I: true;
              context P::go(k : int) pre G: m(0) and r.c = <on>;
              post E: r.s = r.s@pre + 1 implies not (m[1] = false);
              transitions { "(a,b)" -[x pre G post E]-> s; s -[P::y]-> "pre"; "pre" -[x]-> s; }
            }"#;
        let d = parse_document(src).unwrap();
        let text = print_document(&d);
        let again = parse_document(&text).unwrap();
        assert_eq!(d, again, "{text}");
        assert_eq!(text, print_document(&again));
    }

    #[test]
    fn quoting() {
        assert_eq!(quote_state(&StateId::from("Off")), "Off");
        assert_eq!(quote_state(&StateId::from("(Off,x)")), "\"(Off,x)\"");
        assert_eq!(quote_state(&StateId::from("a\"b")), "\"a\\\"b\"");
    }
}
