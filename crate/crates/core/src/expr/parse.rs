use std::collections::{BTreeMap, BTreeSet};

use super::{
    resolve, typeck, ArrowOp, BinOp, ConstraintContext, ConstraintError, ConstraintKind, Domain,
    Expr, Method, NamedConstraint, Value, VariableDecl,
};
use crate::syntax::{tokenize, Span, SyntaxError, Tok, TokenStream};

/// Recursive-descent parser for constraint expressions over a token stream.
///
/// Precedence, loosest first: `implies` (right-assoc), `or`, `and`, `not`,
/// comparisons and `in set`, `+`/`-`, unary `-`/`dom`, postfix.
pub struct ExprParser<'a> {
    pub ts: &'a mut TokenStream,
    pub src: &'a str,
}

impl<'a> ExprParser<'a> {
    pub fn new(ts: &'a mut TokenStream, src: &'a str) -> Self {
        ExprParser { ts, src }
    }

    /// Parses an optional `context ...` heading and `pre|post|inv NAME:`.
    pub fn parse_header(
        &mut self,
    ) -> Result<(Option<ConstraintContext>, ConstraintKind, String, Span), SyntaxError> {
        let mut context = None;
        if self.ts.eat_ident("context") {
            let start = self.ts.token().span.offset;
            loop {
                if self.ts.at_eof() {
                    return Err(self.ts.unexpected("`pre`, `post` or `inv` after the context"));
                }
                let is_kind = matches!(self.ts.peek(), Tok::Ident(s) if ConstraintKind::from_keyword(s).is_some())
                    && matches!(self.ts.peek_nth(1), Tok::Ident(_))
                    && matches!(self.ts.peek_nth(2), Tok::Colon);
                if is_kind {
                    break;
                }
                self.ts.next();
            }
            let end = self.ts.prev_end();
            context = Some(split_context(&self.src[start..end]));
        }
        let span = self.ts.span();
        let kind = match self.ts.peek() {
            Tok::Ident(s) => ConstraintKind::from_keyword(s),
            _ => None,
        }
        .ok_or_else(|| self.ts.unexpected("`pre`, `post` or `inv`"))?;
        self.ts.next();
        let (name, _) = self.ts.expect_ident()?;
        self.ts.expect(&Tok::Colon)?;
        Ok((context, kind, name, span))
    }

    pub fn parse_expr(&mut self) -> Result<Expr, SyntaxError> {
        self.parse_implies()
    }

    fn parse_implies(&mut self) -> Result<Expr, SyntaxError> {
        let lhs = self.parse_or()?;
        if self.ts.eat_ident("implies") || self.ts.eat(&Tok::FatArrow) {
            let rhs = self.parse_implies()?;
            return Ok(Expr::bin(BinOp::Implies, lhs, rhs));
        }
        Ok(lhs)
    }

    fn parse_or(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.parse_and()?;
        while self.ts.eat_ident("or") {
            let rhs = self.parse_and()?;
            lhs = Expr::bin(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.parse_not()?;
        while self.ts.eat_ident("and") {
            let rhs = self.parse_not()?;
            lhs = Expr::bin(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_not(&mut self) -> Result<Expr, SyntaxError> {
        if self.ts.eat_ident("not") {
            return Ok(Expr::not(self.parse_not()?));
        }
        self.parse_cmp()
    }

    fn parse_cmp(&mut self) -> Result<Expr, SyntaxError> {
        let lhs = self.parse_add()?;
        let op = match self.ts.peek() {
            Tok::Eq => BinOp::Eq,
            Tok::Neq => BinOp::Neq,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::Ident(s) if s == "in" => {
                self.ts.next();
                self.ts.expect_keyword("set")?;
                let rhs = self.parse_add()?;
                return Ok(Expr::InSet(Box::new(lhs), Box::new(rhs)));
            }
            _ => return Ok(lhs),
        };
        self.ts.next();
        let rhs = self.parse_add()?;
        Ok(Expr::bin(op, lhs, rhs))
    }

    fn parse_add(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.parse_unary()?;
        loop {
            let op = match self.ts.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.ts.next();
            let rhs = self.parse_unary()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn parse_unary(&mut self) -> Result<Expr, SyntaxError> {
        if self.ts.eat(&Tok::Minus) {
            if let Tok::Int(n) = *self.ts.peek() {
                self.ts.next();
                return self.parse_postfix(Expr::Int(-n));
            }
            return Ok(Expr::Neg(Box::new(self.parse_unary()?)));
        }
        if self.ts.eat_ident("dom") {
            return Ok(Expr::Dom(Box::new(self.parse_unary()?)));
        }
        let base = self.parse_primary()?;
        self.parse_postfix(base)
    }

    fn parse_primary(&mut self) -> Result<Expr, SyntaxError> {
        let span = self.ts.span();
        match self.ts.peek().clone() {
            Tok::Int(n) => {
                self.ts.next();
                Ok(Expr::Int(n))
            }
            Tok::EnumLit(s) => {
                self.ts.next();
                Ok(Expr::Enum(s))
            }
            Tok::LParen => {
                self.ts.next();
                let e = self.parse_expr()?;
                self.ts.expect(&Tok::RParen)?;
                Ok(e)
            }
            Tok::LBrace => {
                self.ts.next();
                let mut items = Vec::new();
                if !self.ts.eat(&Tok::RBrace) {
                    loop {
                        items.push(self.parse_expr()?);
                        if self.ts.eat(&Tok::RBrace) {
                            break;
                        }
                        self.ts.expect(&Tok::Comma)?;
                    }
                }
                Ok(Expr::SetLit(items))
            }
            Tok::Ident(s) => {
                if s == "true" || s == "false" {
                    self.ts.next();
                    return Ok(Expr::Bool(s == "true"));
                }
                if is_reserved(&s) {
                    return Err(SyntaxError::new(span, format!("unexpected keyword `{s}`")));
                }
                self.ts.next();
                let mut segments = vec![s];
                let mut old = false;
                loop {
                    match self.ts.peek() {
                        Tok::Tilde | Tok::AtPre => {
                            self.ts.next();
                            old = true;
                        }
                        Tok::Dot => {
                            let Tok::Ident(name) = self.ts.peek_nth(1).clone() else {
                                break;
                            };
                            // `.size()` and the paren-less `.range`/`.domain` end the chain
                            let call = matches!(self.ts.peek_nth(2), Tok::LParen)
                                || name == "range"
                                || name == "domain";
                            if call {
                                break;
                            }
                            self.ts.next();
                            self.ts.next();
                            segments.push(name);
                        }
                        _ => break,
                    }
                }
                Ok(Expr::Path { segments, old })
            }
            _ => Err(self.ts.unexpected("an expression")),
        }
    }

    fn parse_postfix(&mut self, mut base: Expr) -> Result<Expr, SyntaxError> {
        loop {
            match self.ts.peek() {
                Tok::Dot => {
                    self.ts.next();
                    let (name, span) = self.ts.expect_ident()?;
                    if self.ts.eat(&Tok::LParen) {
                        let method = Method::from_name(&name).ok_or_else(|| {
                            SyntaxError::new(span, format!("unknown operation `{name}`"))
                        })?;
                        let mut args = Vec::new();
                        if !self.ts.eat(&Tok::RParen) {
                            loop {
                                args.push(self.parse_expr()?);
                                if self.ts.eat(&Tok::RParen) {
                                    break;
                                }
                                self.ts.expect(&Tok::Comma)?;
                            }
                        }
                        if args.len() != method.arity() {
                            return Err(SyntaxError::new(
                                span,
                                format!("`{name}` takes {} argument(s)", method.arity()),
                            ));
                        }
                        base = Expr::Call(Box::new(base), method, args);
                    } else if name == "range" || name == "domain" {
                        let m = Method::from_name(&name).unwrap_or(Method::Range);
                        base = Expr::Call(Box::new(base), m, Vec::new());
                    } else {
                        base = Expr::Field(Box::new(base), name);
                    }
                }
                Tok::LParen => {
                    let open = self.ts.next().span;
                    let first = self.parse_expr()?;
                    if self.ts.eat(&Tok::Comma) {
                        // q(1,...,k): prefix slice
                        if first != Expr::Int(1) {
                            return Err(SyntaxError::new(open, "only prefix slices `(1,...,k)` are supported"));
                        }
                        self.ts.expect(&Tok::Ellipsis)?;
                        self.ts.expect(&Tok::Comma)?;
                        let upto = self.parse_expr()?;
                        self.ts.expect(&Tok::RParen)?;
                        base = Expr::Call(Box::new(base), Method::Front, vec![upto]);
                    } else {
                        self.ts.expect(&Tok::RParen)?;
                        base = Expr::Apply(Box::new(base), Box::new(first));
                    }
                }
                Tok::LBracket => {
                    self.ts.next();
                    let k = self.parse_expr()?;
                    self.ts.expect(&Tok::RBracket)?;
                    base = Expr::Index(Box::new(base), Box::new(k));
                }
                Tok::Arrow => {
                    self.ts.next();
                    let (name, span) = self.ts.expect_ident()?;
                    let op = ArrowOp::from_name(&name).ok_or_else(|| {
                        SyntaxError::new(span, format!("unknown collection operation `->{name}`"))
                    })?;
                    if self.ts.eat(&Tok::LParen) {
                        self.ts.expect(&Tok::RParen)?;
                    }
                    base = Expr::Arrow(Box::new(base), op);
                }
                _ => return Ok(base),
            }
        }
    }
}

const RESERVED: &[&str] = &[
    "context", "pre", "post", "inv", "and", "or", "implies", "not", "in", "set", "dom",
];

fn is_reserved(s: &str) -> bool {
    RESERVED.contains(&s)
}

fn split_context(raw: &str) -> ConstraintContext {
    let text = raw.split_whitespace().collect::<Vec<_>>().join(" ");
    match text.split_once("::") {
        Some((contract, op)) => ConstraintContext {
            contract: contract.trim().to_string(),
            operation: Some(op.trim().to_string()),
        },
        None => ConstraintContext {
            contract: text,
            operation: None,
        },
    }
}

/// Parses an expression without resolving identifiers.
pub fn parse_expr_raw(text: &str) -> Result<Expr, SyntaxError> {
    let mut ts = TokenStream::new(tokenize(text)?);
    let e = ExprParser::new(&mut ts, text).parse_expr()?;
    if !ts.at_eof() {
        return Err(ts.unexpected("end of expression"));
    }
    Ok(e)
}

/// Resolves, type-checks and applies the old-value discipline to a freshly
/// parsed constraint body. `tokens` is used to locate unknown identifiers.
pub(crate) fn finish_constraint(
    raw: Expr,
    kind: ConstraintKind,
    decls: &[VariableDecl],
    locate: impl Fn(&str) -> Span,
) -> Result<Expr, ConstraintError> {
    let body = resolve(&raw, decls).map_err(|e| match e {
        ConstraintError::UnknownVariable { name, .. } => {
            let head = name.split('.').next().unwrap_or(&name).to_string();
            ConstraintError::UnknownVariable {
                span: locate(&head),
                name,
            }
        }
        other => other,
    })?;
    if kind != ConstraintKind::Post {
        let mut offending = None;
        body.visit(&mut |e| {
            if offending.is_none() {
                if let Expr::Var(v) = e {
                    if v.old {
                        offending = Some(e.to_string());
                    }
                }
            }
        });
        if let Some(subexpr) = offending {
            return Err(ConstraintError::OldInNonPost { subexpr });
        }
    }
    let sort = typeck::infer_sort(&body, decls)?;
    if !sort.compatible(&typeck::Sort::Bool) {
        return Err(ConstraintError::Type {
            subexpr: body.to_string(),
            message: format!("constraint must be boolean, found {sort}"),
        });
    }
    Ok(body)
}

/// Parses `[context C::op(...)] pre|post|inv NAME: expr` against `decls`.
pub fn parse_constraint(
    text: &str,
    decls: &[VariableDecl],
) -> Result<NamedConstraint, ConstraintError> {
    let toks = tokenize(text)?;
    let mut ts = TokenStream::new(toks.clone());
    let mut p = ExprParser::new(&mut ts, text);
    let (context, kind, name, _) = p.parse_header()?;
    let raw = p.parse_expr()?;
    if !ts.at_eof() {
        return Err(ts.unexpected("end of constraint").into());
    }
    let locate = |ident: &str| {
        toks.iter()
            .find(|t| matches!(&t.tok, Tok::Ident(s) if s == ident))
            .map(|t| t.span)
            .unwrap_or_default()
    };
    let body = finish_constraint(raw, kind, decls, locate)?;
    Ok(NamedConstraint {
        name,
        context,
        kind,
        body,
    })
}

/// Parses a literal value: `3`, `-1`, `true`, `<off>`, `[v, ...]` (sequence),
/// `{v, ...}` (set), `{k |-> v, ...}` or `{|->}` (map), `mk{f = v, ...}`
/// (record). `{}` becomes an empty map when `hint` is a map domain.
pub fn parse_value(text: &str, hint: Option<&Domain>) -> Result<Value, SyntaxError> {
    let mut ts = TokenStream::new(tokenize(text)?);
    let v = value(&mut ts, hint)?;
    if !ts.at_eof() {
        return Err(ts.unexpected("end of value"));
    }
    Ok(v)
}

fn value(ts: &mut TokenStream, hint: Option<&Domain>) -> Result<Value, SyntaxError> {
    match ts.peek().clone() {
        Tok::Int(n) => {
            ts.next();
            Ok(Value::Int(n))
        }
        Tok::Minus => {
            ts.next();
            match ts.peek().clone() {
                Tok::Int(n) => {
                    ts.next();
                    Ok(Value::Int(-n))
                }
                _ => Err(ts.unexpected("integer")),
            }
        }
        Tok::EnumLit(s) => {
            ts.next();
            Ok(Value::Enum(s))
        }
        Tok::Ident(s) if s == "true" || s == "false" => {
            ts.next();
            Ok(Value::Bool(s == "true"))
        }
        Tok::Ident(s) if s == "mk" => {
            ts.next();
            ts.expect(&Tok::LBrace)?;
            let mut rec = BTreeMap::new();
            if !ts.eat(&Tok::RBrace) {
                loop {
                    let (field, span) = ts.expect_ident()?;
                    ts.expect(&Tok::Eq)?;
                    let fhint = match hint {
                        Some(Domain::Record(fs)) => fs.iter().find(|(n, _)| *n == field).map(|(_, d)| d),
                        _ => None,
                    };
                    let v = value(ts, fhint)?;
                    if rec.insert(field.clone(), v).is_some() {
                        return Err(SyntaxError::new(span, format!("field `{field}` given twice")));
                    }
                    if ts.eat(&Tok::RBrace) {
                        break;
                    }
                    ts.expect(&Tok::Comma)?;
                }
            }
            Ok(Value::Record(rec))
        }
        Tok::LBracket => {
            ts.next();
            let ehint = match hint {
                Some(Domain::Seq { elem, .. }) => Some(&**elem),
                _ => None,
            };
            let mut items = Vec::new();
            if !ts.eat(&Tok::RBracket) {
                loop {
                    items.push(value(ts, ehint)?);
                    if ts.eat(&Tok::RBracket) {
                        break;
                    }
                    ts.expect(&Tok::Comma)?;
                }
            }
            Ok(Value::Seq(items))
        }
        Tok::LBrace => {
            ts.next();
            if ts.eat(&Tok::MapsTo) {
                ts.expect(&Tok::RBrace)?;
                return Ok(Value::Map(BTreeMap::new()));
            }
            if ts.eat(&Tok::RBrace) {
                return Ok(match hint {
                    Some(Domain::Map { .. }) => Value::Map(BTreeMap::new()),
                    _ => Value::Set(BTreeSet::new()),
                });
            }
            let (khint, vhint, ehint) = match hint {
                Some(Domain::Map { key, value }) => (Some(&**key), Some(&**value), None),
                Some(Domain::Set { elem }) => (None, None, Some(&**elem)),
                _ => (None, None, None),
            };
            let first = value(ts, khint.or(ehint))?;
            if ts.eat(&Tok::MapsTo) {
                let mut m = BTreeMap::new();
                m.insert(first, value(ts, vhint)?);
                while ts.eat(&Tok::Comma) {
                    let k = value(ts, khint)?;
                    ts.expect(&Tok::MapsTo)?;
                    m.insert(k, value(ts, vhint)?);
                }
                ts.expect(&Tok::RBrace)?;
                Ok(Value::Map(m))
            } else {
                let mut s = BTreeSet::new();
                s.insert(first);
                while ts.eat(&Tok::Comma) {
                    s.insert(value(ts, ehint)?);
                }
                ts.expect(&Tok::RBrace)?;
                Ok(Value::Set(s))
            }
        }
        _ => Err(ts.unexpected("a value")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn le_decls() -> Vec<VariableDecl> {
        vec![
            VariableDecl::new("myCS.s", Domain::Int { lo: 0, hi: 10 }),
            VariableDecl::new(
                "myCS.c",
                Domain::Enum(vec!["off".into(), "undecided".into()]),
            ),
        ]
    }

    #[test]
    fn increment_precondition() {
        let c = parse_constraint(
            "context LE Device::incStrength() pre LDPreIS: myCS.s < 10",
            &le_decls(),
        )
        .unwrap();
        assert_eq!(c.kind, ConstraintKind::Pre);
        assert_eq!(c.name, "LDPreIS");
        assert_eq!(c.body.to_sexpr(), "lt(var myCS.s, int 10)");
        let ctx = c.context.unwrap();
        assert_eq!(ctx.contract, "LE Device");
        assert_eq!(ctx.operation.as_deref(), Some("incStrength()"));
    }

    #[test]
    fn increment_postcondition_with_old_value() {
        let c = parse_constraint(
            "context LE Device::incStrength() post LDPostIS: myCS.s = myCS~.s + 1",
            &le_decls(),
        )
        .unwrap();
        assert_eq!(c.kind, ConstraintKind::Post);
        assert_eq!(
            c.body.to_sexpr(),
            "eq(var myCS.s, add(old myCS.s, int 1))"
        );
        assert!(c.body.has_old_refs());
    }

    #[test]
    fn constant_true() {
        let c = parse_constraint("pre P: true", &[]).unwrap();
        assert_eq!(c.body, Expr::Bool(true));
        assert!(c.context.is_none());
    }

    #[test]
    fn old_value_rejected_outside_post() {
        let err = parse_constraint("pre P: myCS.s@pre < 3", &le_decls()).unwrap_err();
        assert!(matches!(err, ConstraintError::OldInNonPost { .. }));
        let err = parse_constraint("inv I: myCS~.s < 3", &le_decls()).unwrap_err();
        assert!(matches!(err, ConstraintError::OldInNonPost { .. }));
    }

    #[test]
    fn syntax_error_has_location() {
        let err = parse_constraint("pre P:\n  myCS.s < ", &le_decls()).unwrap_err();
        match err {
            ConstraintError::Syntax(e) => assert_eq!(e.span.line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_variable_has_location() {
        let err = parse_constraint("pre P: true and ghost.x < 1", &le_decls()).unwrap_err();
        match err {
            ConstraintError::UnknownVariable { name, span } => {
                assert_eq!(name, "ghost.x");
                assert_eq!((span.line, span.column), (1, 17));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn precedence_of_implies_and_in_set() {
        let e = parse_expr_raw("a implies b implies c").unwrap();
        assert_eq!(e.to_sexpr(), "implies(path a, implies(path b, path c))");
        let e = parse_expr_raw("a = 1 and b or c").unwrap();
        assert_eq!(e.to_sexpr(), "or(and(eq(path a, int 1), path b), path c)");
        let e = parse_expr_raw("n in set dom mem").unwrap();
        assert_eq!(e.to_sexpr(), "in(path n, dom(path mem))");
    }

    #[test]
    fn collection_syntax() {
        let e = parse_expr_raw("devOn.range = {false} and devOn.domain() = ids").unwrap();
        assert_eq!(
            e.to_sexpr(),
            "and(eq(range(path devOn), set(bool false)), eq(domain(path devOn), path ids))"
        );
        let e = parse_expr_raw("queue@pre = queue(1,...,queue.size())").unwrap();
        assert_eq!(
            e.to_sexpr(),
            "eq(path queue@pre, front(path queue, size(path queue)))"
        );
        let e = parse_expr_raw("devOn[devId]->notEmpty and q→isEmpty()").unwrap();
        assert_eq!(
            e.to_sexpr(),
            "and(notEmpty(index(path devOn, path devId)), isEmpty(path q))"
        );
    }

    #[test]
    fn printing_reparses() {
        for src in [
            "a implies (b implies c)",
            "(a implies b) implies c",
            "not (a and b) or not not c",
            "x - (y - 1) = -3",
            "x - -3 < 2",
            "-(x + 1) > 0",
            "mem(n).c = <off> or mem(n) = dat",
            "q@pre = q.front(q.size() - 1) and q.lastItem() = m",
            "(a = b) = (c = d)",
        ] {
            let e = parse_expr_raw(src).unwrap();
            let again = parse_expr_raw(&e.to_string()).unwrap();
            assert_eq!(e, again, "{src} printed as {e}");
        }
    }

    #[test]
    fn values() {
        assert_eq!(parse_value("-4", None).unwrap(), Value::Int(-4));
        assert_eq!(parse_value("<off>", None).unwrap(), Value::Enum("off".into()));
        let m = parse_value("{0 |-> true, 1 |-> false}", None).unwrap();
        assert_eq!(m.to_string(), "{0 |-> true, 1 |-> false}");
        let r = parse_value("mk{s = 1, c = <on>}", None).unwrap();
        assert_eq!(r.to_string(), "mk{c = <on>, s = 1}");
        let map_dom = Domain::Map {
            key: Box::new(Domain::Bool),
            value: Box::new(Domain::Bool),
        };
        assert_eq!(parse_value("{}", Some(&map_dom)).unwrap(), Value::Map(BTreeMap::new()));
        assert_eq!(parse_value("{}", None).unwrap(), Value::Set(BTreeSet::new()));
        for v in [
            "[1, 2]",
            "{<a>, <b>}",
            "{|->}",
            "mk{c = <on>, s = [true]}",
        ] {
            assert_eq!(parse_value(v, None).unwrap().to_string(), v);
        }
    }
}
