use super::{BinOp, Expr};

/// Constant folding, boolean identity/annihilator elimination, double
/// negation removal and canonical ordering of commutative operands.
///
/// Preserves the evaluator's semantics, including when evaluation fails.
pub fn simplify(e: &Expr) -> Expr {
    match e {
        Expr::Not(x) => match simplify(x) {
            Expr::Bool(b) => Expr::Bool(!b),
            Expr::Not(inner) => *inner,
            other => Expr::Not(Box::new(other)),
        },
        Expr::Neg(x) => match simplify(x) {
            Expr::Int(n) if n.checked_neg().is_some() => Expr::Int(-n),
            other => Expr::Neg(Box::new(other)),
        },
        Expr::Binary(op @ (BinOp::And | BinOp::Or), ..) => simplify_junction(*op, e),
        Expr::Binary(BinOp::Implies, a, b) => {
            let (a, b) = (simplify(a), simplify(b));
            match (&a, &b) {
                (Expr::Bool(false), _) | (_, Expr::Bool(true)) => Expr::Bool(true),
                (Expr::Bool(true), _) => b,
                (_, Expr::Bool(false)) => simplify(&Expr::not(a)),
                _ => Expr::bin(BinOp::Implies, a, b),
            }
        }
        Expr::Binary(op, a, b) => {
            let (mut a, mut b) = (simplify(a), simplify(b));
            if let Some(folded) = fold(*op, &a, &b) {
                return folded;
            }
            if op.is_commutative() && b < a {
                std::mem::swap(&mut a, &mut b);
            }
            Expr::bin(*op, a, b)
        }
        Expr::InSet(a, b) => Expr::InSet(Box::new(simplify(a)), Box::new(simplify(b))),
        Expr::Dom(x) => Expr::Dom(Box::new(simplify(x))),
        Expr::Apply(a, b) => Expr::Apply(Box::new(simplify(a)), Box::new(simplify(b))),
        Expr::Index(a, b) => Expr::Index(Box::new(simplify(a)), Box::new(simplify(b))),
        Expr::Field(x, f) => Expr::Field(Box::new(simplify(x)), f.clone()),
        Expr::Call(x, m, args) => {
            Expr::Call(Box::new(simplify(x)), *m, args.iter().map(simplify).collect())
        }
        Expr::Arrow(x, op) => Expr::Arrow(Box::new(simplify(x)), *op),
        Expr::SetLit(items) => Expr::SetLit(items.iter().map(simplify).collect()),
        Expr::Bool(_) | Expr::Int(_) | Expr::Enum(_) | Expr::Path { .. } | Expr::Var(_) => {
            e.clone()
        }
    }
}

/// Flattens a chain of `and` (or `or`), drops identities, short-circuits on
/// the annihilator and sorts the remaining operands.
fn simplify_junction(op: BinOp, e: &Expr) -> Expr {
    let (identity, annihilator) = if op == BinOp::And {
        (true, false)
    } else {
        (false, true)
    };
    let mut raw = Vec::new();
    flatten(op, e, &mut raw);
    let mut operands = Vec::with_capacity(raw.len());
    for x in raw {
        match simplify(x) {
            Expr::Bool(b) if b == annihilator => return Expr::Bool(annihilator),
            Expr::Bool(b) if b == identity => {}
            // simplified operands may themselves be junctions of the same op
            s @ Expr::Binary(o, ..) if o == op => {
                let mut inner = Vec::new();
                flatten(op, &s, &mut inner);
                operands.extend(inner.into_iter().cloned());
            }
            s => operands.push(s),
        }
    }
    operands.sort();
    let mut it = operands.into_iter();
    match it.next() {
        None => Expr::Bool(identity),
        Some(first) => it.fold(first, |acc, x| Expr::bin(op, acc, x)),
    }
}

fn flatten<'a>(op: BinOp, e: &'a Expr, out: &mut Vec<&'a Expr>) {
    match e {
        Expr::Binary(o, a, b) if *o == op => {
            flatten(op, a, out);
            flatten(op, b, out);
        }
        _ => out.push(e),
    }
}

fn fold(op: BinOp, a: &Expr, b: &Expr) -> Option<Expr> {
    use Expr::{Bool, Enum, Int};
    Some(match (op, a, b) {
        (BinOp::Add, Int(x), Int(y)) => Int(x.checked_add(*y)?),
        (BinOp::Sub, Int(x), Int(y)) => Int(x.checked_sub(*y)?),
        (BinOp::Lt, Int(x), Int(y)) => Bool(x < y),
        (BinOp::Le, Int(x), Int(y)) => Bool(x <= y),
        (BinOp::Gt, Int(x), Int(y)) => Bool(x > y),
        (BinOp::Ge, Int(x), Int(y)) => Bool(x >= y),
        (BinOp::Eq | BinOp::Neq, Int(_), Int(_))
        | (BinOp::Eq | BinOp::Neq, Bool(_), Bool(_))
        | (BinOp::Eq | BinOp::Neq, Enum(_), Enum(_)) => Bool((a == b) == (op == BinOp::Eq)),
        _ => return None,
    })
}
