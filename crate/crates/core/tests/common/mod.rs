//! Random automata, random expressions, and a brute-force compatibility
//! checker that shares no code with the library's algorithm.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use iacheck_core::automaton::{ActionClass, ActionLabel, InterfaceAutomaton, Transition};
use iacheck_core::expr::{BinOp, ConstraintKind, Domain, Expr, NamedConstraint, Valuation, VariableDecl};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Random automata

/// Variables the generated automata draw from. Both sides use the same
/// domains so the product can merge them.
pub fn variable_pool() -> Vec<VariableDecl> {
    vec![
        VariableDecl::new("x", Domain::Int { lo: 0, hi: 2 }),
        VariableDecl::new("b", Domain::Bool),
        VariableDecl::new(
            "c",
            Domain::Enum(vec!["lo".into(), "mid".into(), "hi".into()]),
        ),
    ]
}

#[derive(Debug, Clone, Copy)]
pub struct PairShape {
    pub max_states: usize,
    pub max_actions: usize,
    pub max_vars: usize,
    pub max_out_degree: usize,
}

impl Default for PairShape {
    fn default() -> Self {
        PairShape {
            max_states: 4,
            max_actions: 3,
            max_vars: 2,
            max_out_degree: 3,
        }
    }
}

fn atom(rng: &mut ChaCha8Rng, vars: &[VariableDecl], post: bool) -> Expr {
    let Some(v) = vars.choose(rng) else {
        return Expr::Bool(rng.gen_bool(0.8));
    };
    let cur = Expr::var(&v.name);
    let old = Expr::old_var(&v.name);
    let use_old = post && rng.gen_bool(0.4);
    match &v.domain {
        Domain::Int { lo, hi } => {
            if use_old {
                let k = rng.gen_range(-1..=1);
                let rhs = if k == 0 { old } else { Expr::bin(BinOp::Add, old, Expr::Int(k)) };
                return Expr::bin(BinOp::Eq, cur, rhs);
            }
            let op = *[BinOp::Eq, BinOp::Neq, BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge]
                .choose(rng)
                .unwrap();
            Expr::bin(op, cur, Expr::Int(rng.gen_range(lo - 1..=hi + 1)))
        }
        Domain::Bool => {
            if use_old {
                Expr::bin(BinOp::Neq, cur, old)
            } else if rng.gen_bool(0.5) {
                cur
            } else {
                Expr::not(cur)
            }
        }
        Domain::Enum(names) => {
            if use_old {
                return Expr::bin(BinOp::Eq, cur, old);
            }
            let op = if rng.gen_bool(0.6) { BinOp::Eq } else { BinOp::Neq };
            Expr::bin(op, cur, Expr::Enum(names.choose(rng).unwrap().clone()))
        }
        _ => Expr::Bool(true),
    }
}

/// Guard or effect over `vars`; roughly one in five is unsatisfiable.
pub fn random_guard(rng: &mut ChaCha8Rng, vars: &[VariableDecl], post: bool, depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.4) {
        return atom(rng, vars, post);
    }
    let l = random_guard(rng, vars, post, depth - 1);
    let r = random_guard(rng, vars, post, depth - 1);
    match rng.gen_range(0..5) {
        0 | 1 => Expr::and(l, r),
        2 => Expr::bin(BinOp::Or, l, r),
        3 => Expr::bin(BinOp::Implies, l, r),
        _ => Expr::not(l),
    }
}

#[derive(Clone, Copy)]
enum Role {
    Left(ActionClass),
    Right(ActionClass),
    LeftSends,
    RightSends,
}

/// A random composable pair.
pub fn random_pair(rng: &mut ChaCha8Rng, shape: PairShape) -> (InterfaceAutomaton, InterfaceAutomaton) {
    let pool = variable_pool();
    let labels = ["p", "q", "r", "s", "t", "u"];
    let mut left = InterfaceAutomaton::new("A");
    let mut right = InterfaceAutomaton::new("B");
    let (mut nl, mut nr) = (0, 0);
    for l in labels {
        let role = match rng.gen_range(0..9) {
            0 => Role::Left(ActionClass::Input),
            1 => Role::Left(ActionClass::Output),
            2 => Role::Left(ActionClass::Hidden),
            3 => Role::Right(ActionClass::Input),
            4 => Role::Right(ActionClass::Output),
            5 => Role::Right(ActionClass::Hidden),
            6 | 7 => Role::LeftSends,
            _ => Role::RightSends,
        };
        let (uses_l, uses_r) = match role {
            Role::Left(_) => (true, false),
            Role::Right(_) => (false, true),
            _ => (true, true),
        };
        if (uses_l && nl == shape.max_actions) || (uses_r && nr == shape.max_actions) {
            continue;
        }
        nl += uses_l as usize;
        nr += uses_r as usize;
        let label = ActionLabel::new(l);
        match role {
            Role::Left(c) => {
                left.alphabet_mut(c).insert(label);
            }
            Role::Right(c) => {
                right.alphabet_mut(c).insert(label);
            }
            Role::LeftSends => {
                left.outputs.insert(label.clone());
                right.inputs.insert(label);
            }
            Role::RightSends => {
                left.inputs.insert(label.clone());
                right.outputs.insert(label);
            }
        }
    }
    for a in [&mut left, &mut right] {
        fill(rng, a, &pool, shape);
    }
    (left, right)
}

fn fill(rng: &mut ChaCha8Rng, a: &mut InterfaceAutomaton, pool: &[VariableDecl], shape: PairShape) {
    let prefix = a.name.to_lowercase();
    let n = rng.gen_range(1..=shape.max_states);
    for i in 0..n {
        a.states.insert(format!("{prefix}{i}").as_str().into());
    }
    a.initials.insert(format!("{prefix}0").as_str().into());
    if n > 1 && rng.gen_bool(0.15) {
        a.initials.insert(format!("{prefix}1").as_str().into());
    }
    let nvars = rng.gen_range(0..=shape.max_vars);
    let mut vars = pool.to_vec();
    vars.shuffle(rng);
    vars.truncate(nvars);
    a.variables = vars.clone();
    for i in 0..rng.gen_range(0..=2) {
        let body = random_guard(rng, &vars, false, 2);
        a.add_constraint(NamedConstraint::new(format!("{}P{i}", a.name), ConstraintKind::Pre, body));
    }
    for i in 0..rng.gen_range(0..=2) {
        let body = random_guard(rng, &vars, true, 2);
        a.add_constraint(NamedConstraint::new(format!("{}Q{i}", a.name), ConstraintKind::Post, body));
    }
    let actions: Vec<ActionLabel> = a.actions().into_iter().collect();
    let states: Vec<_> = a.states.iter().cloned().collect();
    let pres: Vec<String> = a.preconditions.keys().cloned().collect();
    let posts: Vec<String> = a.postconditions.keys().cloned().collect();
    if actions.is_empty() {
        return;
    }
    for s in &states {
        for _ in 0..rng.gen_range(0..=shape.max_out_degree) {
            let mut t = Transition::new(
                s.as_str(),
                actions.choose(rng).unwrap().clone(),
                states.choose(rng).unwrap().as_str(),
            );
            if !pres.is_empty() && rng.gen_bool(0.4) {
                t.pre = pres.choose(rng).cloned();
            }
            if !posts.is_empty() && rng.gen_bool(0.3) {
                t.post = posts.choose(rng).cloned();
            }
            a.transitions.push(t);
        }
    }
}

/// A single random automaton of roughly `states` states and `transitions`
/// transitions over a fixed alphabet; used for scaling runs.
pub fn random_automaton(
    rng: &mut ChaCha8Rng,
    name: &str,
    states: usize,
    transitions: usize,
    inputs: &[&str],
    outputs: &[&str],
    hidden: &[&str],
) -> InterfaceAutomaton {
    let prefix = name.to_lowercase();
    let mut a = InterfaceAutomaton::new(name)
        .with_actions(ActionClass::Input, inputs.iter().copied())
        .with_actions(ActionClass::Output, outputs.iter().copied())
        .with_actions(ActionClass::Hidden, hidden.iter().copied());
    for i in 0..states {
        a.states.insert(format!("{prefix}{i}").as_str().into());
    }
    a.initials.insert(format!("{prefix}0").as_str().into());
    let actions: Vec<ActionLabel> = a.actions().into_iter().collect();
    for i in 0..transitions {
        // a spanning path first so most states are reachable
        let src = if i + 1 < states { i } else { rng.gen_range(0..states) };
        let dst = if i + 1 < states { i + 1 } else { rng.gen_range(0..states) };
        a.transitions.push(Transition::new(
            &format!("{prefix}{src}"),
            actions.choose(rng).unwrap().clone(),
            &format!("{prefix}{dst}"),
        ));
    }
    a
}

// ---------------------------------------------------------------------------
// Random expressions for the simplifier

pub fn expression_decls() -> Vec<VariableDecl> {
    vec![
        VariableDecl::new("i", Domain::Int { lo: 0, hi: 3 }),
        VariableDecl::new("j", Domain::Int { lo: -1, hi: 1 }),
        VariableDecl::new("b", Domain::Bool),
        VariableDecl::new("e", Domain::Enum(vec!["a".into(), "b".into(), "c".into()])),
        VariableDecl::new(
            "m",
            Domain::Map {
                key: Box::new(Domain::Int { lo: 0, hi: 1 }),
                value: Box::new(Domain::Int { lo: 0, hi: 1 }),
            },
        ),
        VariableDecl::new(
            "q",
            Domain::Seq {
                elem: Box::new(Domain::Bool),
                max_len: 2,
            },
        ),
    ]
}

fn int_expr(rng: &mut ChaCha8Rng, depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.35) {
        return match rng.gen_range(0..6) {
            0 => Expr::var("i"),
            1 => Expr::var("j"),
            2 => Expr::Apply(Box::new(Expr::var("m")), Box::new(int_expr(rng, 0))),
            3 => Expr::Call(Box::new(Expr::var("q")), iacheck_core::expr::Method::Size, vec![]),
            _ => Expr::Int(rng.gen_range(-2..=3)),
        };
    }
    let op = if rng.gen_bool(0.5) { BinOp::Add } else { BinOp::Sub };
    match rng.gen_range(0..4) {
        0 => Expr::Neg(Box::new(int_expr(rng, depth - 1))),
        _ => Expr::bin(op, int_expr(rng, depth - 1), int_expr(rng, depth - 1)),
    }
}

/// Random boolean expression over [`expression_decls`], including partial
/// map applications that fail to evaluate.
pub fn random_expr(rng: &mut ChaCha8Rng, depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..8) {
            0 => Expr::Bool(rng.gen_bool(0.5)),
            1 => Expr::var("b"),
            2 => Expr::bin(
                if rng.gen_bool(0.5) { BinOp::Eq } else { BinOp::Neq },
                Expr::var("e"),
                Expr::Enum(["a", "b", "c"].choose(rng).unwrap().to_string()),
            ),
            3 => Expr::InSet(Box::new(int_expr(rng, 0)), Box::new(Expr::Dom(Box::new(Expr::var("m"))))),
            4 => Expr::Arrow(Box::new(Expr::var("q")), iacheck_core::expr::ArrowOp::NotEmpty),
            _ => {
                let op = *[BinOp::Eq, BinOp::Neq, BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge]
                    .choose(rng)
                    .unwrap();
                Expr::bin(op, int_expr(rng, 1), int_expr(rng, 1))
            }
        };
    }
    let l = random_expr(rng, depth - 1);
    match rng.gen_range(0..7) {
        0 => Expr::not(l),
        1 => Expr::and(l.clone(), l),
        2 | 3 => Expr::and(l, random_expr(rng, depth - 1)),
        4 => Expr::bin(BinOp::Or, l, random_expr(rng, depth - 1)),
        5 => Expr::bin(BinOp::Implies, l, random_expr(rng, depth - 1)),
        _ => Expr::bin(BinOp::Eq, l, random_expr(rng, depth - 1)),
    }
}

pub fn random_valuation(rng: &mut ChaCha8Rng, decls: &[VariableDecl], with_old: bool) -> Valuation {
    let mut v = Valuation::new();
    for d in decls {
        let values = d.domain.values().expect("finite domain");
        v.set(&d.name, values.choose(rng).unwrap().clone(), false);
        if with_old {
            v.set(&d.name, values.choose(rng).unwrap().clone(), true);
        }
    }
    v
}

// ---------------------------------------------------------------------------
// Brute-force oracle

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Ov {
    B(bool),
    I(i64),
    E(String),
}

type Env = HashMap<(String, bool), Ov>;

fn domain_values(d: &Domain) -> Vec<Ov> {
    match d {
        Domain::Bool => vec![Ov::B(false), Ov::B(true)],
        Domain::Int { lo, hi } => (*lo..=*hi).map(Ov::I).collect(),
        Domain::Enum(names) => names.iter().cloned().map(Ov::E).collect(),
        other => panic!("oracle does not handle {other}"),
    }
}

/// Evaluates the fragment produced by [`random_guard`].
fn ev(e: &Expr, env: &Env) -> Ov {
    match e {
        Expr::Bool(b) => Ov::B(*b),
        Expr::Int(n) => Ov::I(*n),
        Expr::Enum(s) => Ov::E(s.clone()),
        Expr::Var(r) => env[&(r.path.clone(), r.old)].clone(),
        Expr::Not(x) => Ov::B(!truth(x, env)),
        Expr::Binary(op, l, r) => match op {
            BinOp::And => Ov::B(truth(l, env) && truth(r, env)),
            BinOp::Or => Ov::B(truth(l, env) || truth(r, env)),
            BinOp::Implies => Ov::B(!truth(l, env) || truth(r, env)),
            BinOp::Eq => Ov::B(ev(l, env) == ev(r, env)),
            BinOp::Neq => Ov::B(ev(l, env) != ev(r, env)),
            _ => {
                let (Ov::I(a), Ov::I(b)) = (ev(l, env), ev(r, env)) else {
                    panic!("ill-typed {e}")
                };
                match op {
                    BinOp::Lt => Ov::B(a < b),
                    BinOp::Le => Ov::B(a <= b),
                    BinOp::Gt => Ov::B(a > b),
                    BinOp::Ge => Ov::B(a >= b),
                    BinOp::Add => Ov::I(a + b),
                    BinOp::Sub => Ov::I(a - b),
                    _ => unreachable!(),
                }
            }
        },
        other => panic!("oracle does not handle {other}"),
    }
}

fn truth(e: &Expr, env: &Env) -> bool {
    ev(e, env) == Ov::B(true)
}

/// All assignments to every variable, current and old.
fn all_envs(vars: &[VariableDecl]) -> Vec<Env> {
    let mut envs = vec![Env::new()];
    for d in vars {
        for old in [false, true] {
            let mut next = Vec::new();
            for env in &envs {
                for v in domain_values(&d.domain) {
                    let mut e = env.clone();
                    e.insert((d.name.clone(), old), v);
                    next.push(e);
                }
            }
            envs = next;
        }
    }
    envs
}

/// True iff no assignment makes every body true.
fn jointly_unsat(bodies: &[&Expr], envs: &[Env]) -> bool {
    !envs.iter().any(|env| bodies.iter().all(|b| truth(b, env)))
}

pub type Pair = (String, String);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OracleEdge {
    pub from: Pair,
    pub action: ActionLabel,
    /// Operand constraint names on each side, pre then post.
    pub pre: Vec<String>,
    pub post: Vec<String>,
    pub to: Pair,
}

#[derive(Debug, Clone)]
pub struct Oracle {
    pub shared: BTreeSet<ActionLabel>,
    pub edges: Vec<OracleEdge>,
    pub reachable: BTreeSet<Pair>,
    pub illegal: BTreeSet<Pair>,
    pub bad: BTreeSet<Pair>,
    pub pruned: BTreeSet<Pair>,
    pub compatible: bool,
    /// Reachable states made illegal only by unsatisfiable guards or effects.
    pub guard_illegal: usize,
}

fn merged_vars(a1: &InterfaceAutomaton, a2: &InterfaceAutomaton) -> Vec<VariableDecl> {
    let mut out: Vec<VariableDecl> = Vec::new();
    for d in a1.variables.iter().chain(&a2.variables) {
        if !out.iter().any(|x| x.name == d.name) {
            out.push(d.clone());
        }
    }
    out
}

/// Exhaustive checker over all of `S1 × S2`, straight from the definitions.
/// `a1` and `a2` must be composable.
pub fn brute_force(a1: &InterfaceAutomaton, a2: &InterfaceAutomaton, strict_deadlock: bool) -> Oracle {
    let shared: BTreeSet<ActionLabel> = a1
        .actions()
        .into_iter()
        .filter(|l| {
            (a1.inputs.contains(l) && a2.outputs.contains(l))
                || (a1.outputs.contains(l) && a2.inputs.contains(l))
        })
        .collect();
    let envs = all_envs(&merged_vars(a1, a2));

    let mut all = Vec::new();
    for s1 in &a1.states {
        for s2 in &a2.states {
            all.push((s1.as_str().to_string(), s2.as_str().to_string()));
        }
    }

    let names = |x: &Option<String>, y: &Option<String>| -> Vec<String> {
        let mut v: Vec<String> = x.iter().chain(y.iter()).cloned().collect();
        v.sort();
        v
    };
    let mut edges = Vec::new();
    for (s1, s2) in &all {
        for t1 in a1.transitions.iter().filter(|t| t.source.as_str() == s1) {
            if shared.contains(&t1.action) {
                for t2 in a2.transitions.iter().filter(|t| t.source.as_str() == s2 && t.action == t1.action) {
                    edges.push(OracleEdge {
                        from: (s1.clone(), s2.clone()),
                        action: t1.action.clone(),
                        pre: names(&t1.pre, &t2.pre),
                        post: names(&t1.post, &t2.post),
                        to: (t1.target.as_str().into(), t2.target.as_str().into()),
                    });
                }
            } else {
                edges.push(OracleEdge {
                    from: (s1.clone(), s2.clone()),
                    action: t1.action.clone(),
                    pre: names(&t1.pre, &None),
                    post: names(&t1.post, &None),
                    to: (t1.target.as_str().into(), s2.clone()),
                });
            }
        }
        for t2 in a2.transitions.iter().filter(|t| t.source.as_str() == s2 && !shared.contains(&t.action)) {
            edges.push(OracleEdge {
                from: (s1.clone(), s2.clone()),
                action: t2.action.clone(),
                pre: names(&t2.pre, &None),
                post: names(&t2.post, &None),
                to: (s1.clone(), t2.target.as_str().into()),
            });
        }
    }

    let body = |name: &String| -> &Expr {
        a1.preconditions
            .get(name)
            .or_else(|| a1.postconditions.get(name))
            .or_else(|| a2.preconditions.get(name))
            .or_else(|| a2.postconditions.get(name))
            .map(|c| &c.body)
            .unwrap_or_else(|| panic!("unregistered constraint {name}"))
    };
    let mut unsat_cache: BTreeMap<Vec<String>, bool> = BTreeMap::new();
    let mut unsat = |group: &Vec<String>| -> bool {
        if group.is_empty() {
            return false;
        }
        *unsat_cache
            .entry(group.clone())
            .or_insert_with(|| jointly_unsat(&group.iter().map(body).collect::<Vec<_>>(), &envs))
    };

    let mut illegal = BTreeSet::new();
    let mut by_guard = BTreeSet::new();
    for (s1, s2) in &all {
        let has = |a: &InterfaceAutomaton, s: &str, l: &ActionLabel| {
            a.transitions.iter().any(|t| t.source.as_str() == s && &t.action == l)
        };
        let unreceived = shared.iter().any(|l| {
            (a1.outputs.contains(l) && has(a1, s1, l) && !has(a2, s2, l))
                || (a2.outputs.contains(l) && has(a2, s2, l) && !has(a1, s1, l))
        });
        let out: Vec<&OracleEdge> = edges.iter().filter(|e| e.from == (s1.clone(), s2.clone())).collect();
        let all_false = !out.is_empty() && out.iter().all(|e| unsat(&e.pre) || unsat(&e.post));
        let deadlock = strict_deadlock && out.is_empty();
        if all_false && !unreceived {
            by_guard.insert((s1.clone(), s2.clone()));
        }
        if unreceived || all_false || deadlock {
            illegal.insert((s1.clone(), s2.clone()));
        }
    }

    let is_input = |l: &ActionLabel| {
        !shared.contains(l) && (a1.inputs.contains(l) || a2.inputs.contains(l))
    };
    let mut bad = illegal.clone();
    loop {
        let before = bad.len();
        for e in &edges {
            if !is_input(&e.action) && bad.contains(&e.to) {
                bad.insert(e.from.clone());
            }
        }
        if bad.len() == before {
            break;
        }
    }

    let initials: Vec<Pair> = a1
        .initials
        .iter()
        .flat_map(|i1| a2.initials.iter().map(move |i2| (i1.as_str().to_string(), i2.as_str().to_string())))
        .collect();
    let reach_from = |start: Vec<Pair>, allowed: &dyn Fn(&Pair) -> bool| -> BTreeSet<Pair> {
        let mut seen: BTreeSet<Pair> = start.iter().filter(|p| allowed(p)).cloned().collect();
        let mut queue: VecDeque<Pair> = seen.iter().cloned().collect();
        while let Some(p) = queue.pop_front() {
            for e in edges.iter().filter(|e| e.from == p) {
                if allowed(&e.to) && seen.insert(e.to.clone()) {
                    queue.push_back(e.to.clone());
                }
            }
        }
        seen
    };
    let reachable = reach_from(initials.clone(), &|_| true);
    let pruned = reach_from(initials.clone(), &|p| !bad.contains(p));
    let compatible = initials.iter().any(|i| !bad.contains(i));

    Oracle {
        guard_illegal: by_guard.intersection(&reachable).count(),
        shared,
        edges,
        illegal: illegal.intersection(&reachable).cloned().collect(),
        bad: bad.intersection(&reachable).cloned().collect(),
        reachable,
        pruned,
        compatible,
    }
}

/// Number of product transitions the synchronized interleaving yields from the reachable pairs.
pub fn interleaving_count(a1: &InterfaceAutomaton, a2: &InterfaceAutomaton, reachable: &BTreeSet<Pair>) -> usize {
    let shared: BTreeSet<ActionLabel> = a1
        .actions()
        .into_iter()
        .filter(|l| a2.actions().contains(l))
        .collect();
    let out = |a: &InterfaceAutomaton, s: &str| -> Vec<ActionLabel> {
        a.transitions.iter().filter(|t| t.source.as_str() == s).map(|t| t.action.clone()).collect()
    };
    reachable
        .iter()
        .map(|(s1, s2)| {
            let o1 = out(a1, s1);
            let o2 = out(a2, s2);
            let solo = o1.iter().filter(|l| !shared.contains(*l)).count()
                + o2.iter().filter(|l| !shared.contains(*l)).count();
            let sync: usize = shared
                .iter()
                .map(|l| o1.iter().filter(|x| *x == l).count() * o2.iter().filter(|x| *x == l).count())
                .sum();
            solo + sync
        })
        .sum()
}

/// The name `(l,r)` the library gives a product state, split back apart.
pub fn split_pair(s: &str) -> Pair {
    let inner = &s[1..s.len() - 1];
    let (l, r) = inner.split_once(',').expect("pair state");
    (l.to_string(), r.to_string())
}
