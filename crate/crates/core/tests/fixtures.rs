mod common;

use std::collections::BTreeSet;

use iacheck_core::automaton::{qualify_hidden, ActionClass, InterfaceAutomaton, StateId, Transition};
use iacheck_core::compat::{CheckOptions, IncompatibleCause, Verdict};
use iacheck_core::expr::{
    eval_constraint, is_false, parse_value, ConstraintKind, FalsityVerdict, NamedConstraint,
    UnknownReason, Valuation, Value,
};
use iacheck_core::format::{
    export_dot, export_product_dot, lint_document, parse_document, print_document,
};
use iacheck_core::{check_compatibility, fixtures, validate};

fn load(text: &str) -> InterfaceAutomaton {
    parse_document(text).unwrap().automata.remove(0)
}

fn names<'a>(it: impl IntoIterator<Item = &'a StateId>) -> BTreeSet<&'a str> {
    it.into_iter().map(StateId::as_str).collect()
}

fn label_names(a: &InterfaceAutomaton, class: ActionClass) -> BTreeSet<String> {
    a.alphabet(class).iter().map(ToString::to_string).collect()
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

#[test]
fn le_device_listing() {
    let a = load(fixtures::LE_DEVICE);
    assert_eq!(
        names(&a.states),
        ["Off", "OnFollower", "OnLeader", "OnUndecided", "OnReady", "OnUpdate"].into()
    );
    assert_eq!(names(&a.initials), ["Off"].into());
    assert_eq!(label_names(&a, ActionClass::Input), set(&["receiveMessages"]));
    assert_eq!(label_names(&a, ActionClass::Output), set(&["sendMessages"]));
    assert_eq!(
        label_names(&a, ActionClass::Hidden),
        set(&[
            "changeClaim", "flushState", "update", "maxStrength", "maxStrengthId", "incStrength",
            "init", "flushMemory", "flushSummary", "isLeader", "write", "turnOn", "turnOff",
        ])
    );
    assert_eq!(a.transitions.len(), 14);
    assert!(a.transitions.contains(
        &Transition::new("OnUndecided", "changeClaim", "OnFollower")
            .with_pre("LDPreCC")
            .with_post("LDPostCC")
    ));
    assert!(validate(&a).is_empty());
}

#[test]
fn transport_layer_listing() {
    let a = load(fixtures::TRANSPORT_LAYER);
    assert_eq!(a.states.len(), 10);
    assert!(a.states.contains("AddToQueue") && a.states.contains("Ready"));
    assert_eq!(
        label_names(&a, ActionClass::Hidden),
        set(&[
            "init", "addToQueue", "getNextMsg", "createMessage", "AddToQueue", "setDeviceOn",
            "setDeviceOff", "ready",
        ])
    );
    assert_eq!(a.transitions.len(), 16);
    // two listing lines coincide once the state name is normalized
    let ready = Transition::new("AddToQueue", "ready", "Ready");
    assert_eq!(a.transitions.iter().filter(|t| **t == ready).count(), 2);
    assert_eq!(
        a.transitions[0],
        Transition::new("Init", "init", "Ready").with_post("TLPostI")
    );
    assert!(validate(&a).is_empty());
}

#[test]
fn fixtures_lint_clean_and_broken_does_not() {
    for text in [fixtures::LE_DEVICE, fixtures::TRANSPORT_LAYER, fixtures::PING, fixtures::PONG] {
        assert!(lint_document(text).unwrap().1.is_empty());
    }
    let (_, diags) = lint_document(fixtures::BROKEN).unwrap();
    assert_eq!(diags.len(), 1);
    assert!(diags.iter().all(|d| d.span.is_some()));
}

fn constraint<'a>(a: &'a InterfaceAutomaton, kind: ConstraintKind, name: &str) -> &'a NamedConstraint {
    a.constraint(kind, name).unwrap_or_else(|| panic!("{name} missing"))
}

fn value(a: &InterfaceAutomaton, var: &str, text: &str) -> Value {
    let d = a.variables.iter().find(|d| d.name == var).map(|d| &d.domain);
    parse_value(text, d).unwrap()
}

#[test]
fn claim_change_rules() {
    let a = load(fixtures::LE_DEVICE);
    let cc = constraint(&a, ConstraintKind::Pre, "LDPreCC");
    let allowed = [
        ("off", "undecided"),
        ("undecided", "leader"),
        ("undecided", "follower"),
        ("leader", "undecided"),
        ("follower", "undecided"),
    ];
    let claims = ["off", "undecided", "leader", "follower"];
    for from in claims {
        for to in claims {
            let v = Valuation::new()
                .with("myCS.c", Value::Enum(from.into()))
                .with("newc", Value::Enum(to.into()));
            assert_eq!(
                eval_constraint(cc, &v),
                Ok(allowed.contains(&(from, to))),
                "{from} -> {to}"
            );
        }
    }
    let post = constraint(&a, ConstraintKind::Post, "LDPostCC");
    let v = Valuation::new()
        .with("myCS.c", Value::Enum("leader".into()))
        .with("newClaim", Value::Enum("leader".into()));
    assert_eq!(eval_constraint(post, &v), Ok(true));
}

#[test]
fn strength_and_memory() {
    let a = load(fixtures::LE_DEVICE);
    let inc = constraint(&a, ConstraintKind::Post, "LDPostIS");
    let v = Valuation::new().with("myCS.s", Value::Int(4)).with_old("myCS.s", Value::Int(3));
    assert_eq!(eval_constraint(inc, &v), Ok(true));
    let v = Valuation::new().with("myCS.s", Value::Int(4)).with_old("myCS.s", Value::Int(4));
    assert_eq!(eval_constraint(inc, &v), Ok(false));

    let mem = value(&a, "mem", "{0 |-> mk{c = <leader>, s = 1}}");
    let w = constraint(&a, ConstraintKind::Pre, "LDPreW");
    for (n, expected) in [(0, true), (1, false)] {
        let v = Valuation::new().with("mem", mem.clone()).with("n", Value::Int(n));
        assert_eq!(eval_constraint(w, &v), Ok(expected));
    }
    let pw = constraint(&a, ConstraintKind::Post, "LDPostW");
    let v = Valuation::new()
        .with("mem", mem)
        .with("n", Value::Int(0))
        .with("dat", value(&a, "dat", "mk{c = <leader>, s = 1}"));
    assert_eq!(eval_constraint(pw, &v), Ok(true));
}

#[test]
fn transport_layer_constraints() {
    let a = load(fixtures::TRANSPORT_LAYER);
    let atq = constraint(&a, ConstraintKind::Post, "TLPostATQ");
    let v = Valuation::new()
        .with("queue", value(&a, "queue", "[<m1>, <m2>]"))
        .with_old("queue", value(&a, "queue", "[<m1>]"))
        .with("m", Value::Enum("m2".into()));
    assert_eq!(eval_constraint(atq, &v), Ok(true));
    let v = v.with("m", Value::Enum("m1".into()));
    assert_eq!(eval_constraint(atq, &v), Ok(false));
    assert!(matches!(
        is_false(&atq.body, &a.variables, 1_000_000),
        FalsityVerdict::Satisfiable(_)
    ));

    let gnm = constraint(&a, ConstraintKind::Pre, "TLPreGNM");
    for (q, expected) in [("[]", false), ("[<m2>]", true)] {
        let v = Valuation::new().with("queue", value(&a, "queue", q));
        assert_eq!(eval_constraint(gnm, &v), Ok(expected));
    }

    let on = constraint(&a, ConstraintKind::Pre, "TLPreSDON");
    let dev = value(&a, "devOn", "{0 |-> false}");
    for (id, expected) in [(0, true), (1, false)] {
        let v = Valuation::new().with("devOn", dev.clone()).with("devId", Value::Int(id));
        assert_eq!(eval_constraint(on, &v), Ok(expected), "devId = {id}");
    }

    let init = constraint(&a, ConstraintKind::Post, "TLPostI");
    assert_eq!(
        is_false(&init.body, &a.variables, 1_000_000),
        FalsityVerdict::Unknown(UnknownReason::Opaque {
            variable: "node_ids".into()
        })
    );
}

#[test]
fn fixtures_round_trip() {
    for text in [fixtures::LE_DEVICE, fixtures::TRANSPORT_LAYER, fixtures::PING] {
        let d = parse_document(text).unwrap();
        let printed = print_document(&d);
        assert_eq!(parse_document(&printed).unwrap(), d);
        assert_eq!(print_document(&parse_document(&printed).unwrap()), printed);
    }
}

#[test]
fn documents_keep_automaton_order() {
    let text = format!("{}\n{}", fixtures::PONG, fixtures::PING);
    let d = parse_document(&text).unwrap();
    let order: Vec<&str> = d.automata.iter().map(|a| a.name.as_str()).collect();
    assert_eq!(order, ["Pong", "Ping"]);
    let again = parse_document(&print_document(&d)).unwrap();
    assert_eq!(again, d);
}

#[test]
fn inline_constraints_get_stable_names() {
    let text = "automaton A {\n states { s } initial { s } inputs { } outputs { } hidden { h }\n\
                var x : int[0..1];\n\
                transitions { s -[h pre (x = 0)]-> s; s -[h post (x = x@pre)]-> s; } }";
    let d = parse_document(text).unwrap();
    let a = &d.automata[0];
    assert_eq!(a.transitions[0].pre.as_deref(), Some("A_pre0"));
    assert_eq!(a.transitions[1].post.as_deref(), Some("A_post1"));
    let printed = print_document(&d);
    assert!(printed.contains("pre A_pre0: x = 0;"), "{printed}");
    assert!(printed.contains("s -[h pre A_pre0]-> s;"), "{printed}");
    assert_eq!(parse_document(&printed).unwrap(), d);
}

#[test]
fn empty_document() {
    let (d, diags) = lint_document("").unwrap();
    assert!(d.automata.is_empty() && diags.is_empty());
}

#[test]
fn dot_export() {
    let le = load(fixtures::LE_DEVICE);
    let dot = export_dot(&le);
    assert!(dot.contains("Off -> OnReady [label=\"turnOn;\"];"));
    assert!(dot.contains("Off [shape=doublecircle];"));
    assert!(dot.contains("OnFollower -> OnFollower [label=\"sendMessages!\"];"));
    assert!(dot.contains("OnReady -> OnUpdate [label=\"receiveMessages?\"];"));
    assert!(dot.contains("[label=\"changeClaim; pre LDPreCC post LDPostCC\"]"));
    assert_eq!(dot.matches(" -> ").count(), 14);
    assert_eq!(export_dot(&le), dot);

    let single = InterfaceAutomaton::new("One").with_states(["s"]).with_initials(["s"]);
    let dot = export_dot(&single);
    assert_eq!(dot.matches(" -> ").count(), 0);
    assert_eq!(dot.lines().filter(|l| l.trim_start().starts_with("s ")).count(), 1);
}

#[test]
fn product_dot_hides_shared_actions() {
    let ping = load(fixtures::PING);
    let pong = load(fixtures::PONG);
    let r = check_compatibility(&ping, &pong, &CheckOptions::default());
    let dot = export_product_dot(&r).unwrap();
    assert!(dot.contains("[label=\"ping; pre CanSend post Sent\"]"), "{dot}");
    assert!(dot.contains("[label=\"pong;\"]"));
    assert!(!dot.contains("ping!") && !dot.contains("pong?"));
}

fn without_constraints(a: &InterfaceAutomaton) -> InterfaceAutomaton {
    let mut out = a.clone();
    out.variables.clear();
    out.preconditions.clear();
    out.postconditions.clear();
    out.invariants.clear();
    for t in &mut out.transitions {
        t.pre = None;
        t.post = None;
    }
    out
}

/// The oracle does not evaluate the fixtures' map and sequence constraints.
/// None of them is unsatisfiable on its own and no synchronized step carries
/// one, so the guard-falsity rule cannot fire and they can be dropped.
#[test]
fn qualified_fixtures_agree_with_oracle() {
    let le = qualify_hidden(&load(fixtures::LE_DEVICE));
    let tl = qualify_hidden(&load(fixtures::TRANSPORT_LAYER));
    for a in [&le, &tl] {
        for c in a.constraints() {
            assert!(
                !matches!(is_false(&c.body, &a.variables, 1_000_000), FalsityVerdict::False),
                "{} is unsatisfiable",
                c.name
            );
        }
    }
    let r = check_compatibility(&le, &tl, &CheckOptions::default());
    let p = r.product.as_ref().unwrap();
    for t in &p.automaton.transitions {
        if p.shared_actions.contains(&t.action) {
            assert!(t.pre.is_none() && t.post.is_none());
        }
    }

    let o = common::brute_force(&without_constraints(&le), &without_constraints(&tl), false);
    let pairs = |s: &indexmap::IndexSet<StateId>| -> BTreeSet<_> {
        s.iter().map(|x| common::split_pair(x.as_str())).collect()
    };
    assert_eq!(pairs(&p.automaton.states), o.reachable);
    assert_eq!(pairs(&r.illegal.states), o.illegal);
    assert_eq!(pairs(&r.bad), o.bad);
    assert_eq!(r.verdict.is_compatible(), o.compatible);
    assert_eq!(r.verdict, Verdict::Incompatible(IncompatibleCause::EmptyProduct));
    assert_eq!((p.automaton.states.len(), p.automaton.transitions.len()), (57, 191));
    assert_eq!(r.pruned.as_ref().unwrap().states.len(), 0);

    // the device can claim a role before the transport layer is ready
    let w = r.witness.as_ref().unwrap();
    assert!(w.replays(&p.automaton));
    assert!(r.illegal.states.contains(w.states.last().unwrap()));
}

#[test]
fn ping_pong_is_compatible() {
    let ping = load(fixtures::PING);
    let pong = load(fixtures::PONG);
    let r = check_compatibility(&ping, &pong, &CheckOptions::default());
    assert!(r.verdict.is_compatible());
    assert!(r.illegal.states.is_empty());
    let o = common::brute_force(&ping, &pong, false);
    assert!(o.compatible);
}
