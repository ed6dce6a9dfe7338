use indexmap::IndexSet;

use super::{AutomatonSpans, ContractDocument, FormatError, Metadata, SourceMap};
use crate::automaton::{ActionClass, ActionLabel, InterfaceAutomaton, StateId, Transition};
use crate::expr::parse::finish_constraint;
use crate::expr::{ConstraintContext, ConstraintKind, Domain, Expr, ExprParser, NamedConstraint, VariableDecl};
use crate::syntax::{tokenize, Span, Tok, Token, TokenStream};

pub fn parse_document(text: &str) -> Result<ContractDocument, FormatError> {
    parse_document_mapped(text).map(|(d, _)| d)
}

/// Parses a document and also returns the positions of its declarations.
pub fn parse_document_mapped(text: &str) -> Result<(ContractDocument, SourceMap), FormatError> {
    let toks = tokenize(text)?;
    let mut p = DocParser {
        ts: TokenStream::new(toks.clone()),
        src: text,
        toks: &toks,
    };
    let mut doc = ContractDocument::default();
    let mut map = SourceMap::default();
    while !p.ts.at_eof() {
        if p.ts.is_ident("document") {
            p.ts.next();
            if doc.metadata != Metadata::default() {
                return Err(FormatError::Duplicate {
                    span: p.ts.span(),
                    what: "document header",
                    name: "document".into(),
                });
            }
            let (name, _) = p.ts.expect_ident()?;
            doc.metadata.name = Some(name);
            if p.ts.eat_ident("version") {
                match p.ts.next().tok {
                    Tok::Str(s) => doc.metadata.version = Some(s),
                    _ => return Err(p.ts.unexpected("a version string").into()),
                }
            }
            p.ts.expect(&Tok::Semi)?;
        } else if p.ts.is_ident("automaton") {
            let (a, spans) = p.automaton()?;
            if doc.automaton(&a.name).is_some() {
                return Err(FormatError::Duplicate {
                    span: spans.header,
                    what: "automaton",
                    name: a.name,
                });
            }
            map.automata.insert(a.name.clone(), spans);
            doc.automata.push(a);
        } else {
            return Err(p.ts.unexpected("`automaton` or `document`").into());
        }
    }
    Ok((doc, map))
}

/// A constraint whose body still has to be resolved against the variables.
struct PendingConstraint {
    name: String,
    context: Option<ConstraintContext>,
    kind: ConstraintKind,
    raw: Expr,
    span: Span,
    /// Token range of the body, for locating unknown identifiers.
    body_tokens: (usize, usize),
}

enum ConstraintRef {
    Named(String, Span),
    Inline(Expr, Span, (usize, usize)),
}

struct PendingTransition {
    source: StateId,
    action: ActionLabel,
    pre: Option<ConstraintRef>,
    post: Option<ConstraintRef>,
    target: StateId,
}

struct DocParser<'a> {
    ts: TokenStream,
    src: &'a str,
    toks: &'a [Token],
}

impl<'a> DocParser<'a> {
    fn token_index(&self) -> usize {
        let off = self.ts.token().span.offset;
        self.toks.iter().position(|t| t.span.offset == off).unwrap_or(0)
    }

    fn expr(&mut self) -> Result<(Expr, (usize, usize)), FormatError> {
        let start = self.token_index();
        let e = ExprParser::new(&mut self.ts, self.src).parse_expr()?;
        Ok((e, (start, self.token_index())))
    }

    fn state_id(&mut self) -> Result<(StateId, Span), FormatError> {
        let span = self.ts.span();
        match self.ts.peek().clone() {
            Tok::Ident(s) | Tok::Str(s) => {
                self.ts.next();
                Ok((StateId(s), span))
            }
            _ => Err(self.ts.unexpected("a state name").into()),
        }
    }

    fn label(&mut self) -> Result<(ActionLabel, Span), FormatError> {
        let (first, span) = self.ts.expect_ident()?;
        if self.ts.eat(&Tok::ColonColon) {
            let (name, _) = self.ts.expect_ident()?;
            return Ok((ActionLabel::qualified(first, name), span));
        }
        Ok((ActionLabel::new(first), span))
    }

    /// `{ item, item, ... }` with an optional trailing comma.
    fn braced_list<T>(
        &mut self,
        mut item: impl FnMut(&mut Self) -> Result<T, FormatError>,
    ) -> Result<Vec<T>, FormatError> {
        self.ts.expect(&Tok::LBrace)?;
        let mut out = Vec::new();
        while !self.ts.eat(&Tok::RBrace) {
            out.push(item(self)?);
            if !self.ts.eat(&Tok::Comma) {
                self.ts.expect(&Tok::RBrace)?;
                break;
            }
        }
        Ok(out)
    }

    fn signed_int(&mut self) -> Result<i64, FormatError> {
        let neg = self.ts.eat(&Tok::Minus);
        match self.ts.peek().clone() {
            Tok::Int(n) => {
                self.ts.next();
                Ok(if neg { -n } else { n })
            }
            _ => Err(self.ts.unexpected("an integer").into()),
        }
    }

    fn domain(&mut self) -> Result<Domain, FormatError> {
        let (kw, span) = self.ts.expect_ident()?;
        Ok(match kw.as_str() {
            "bool" => Domain::Bool,
            "opaque" => Domain::Opaque,
            "int" => {
                self.ts.expect(&Tok::LBracket)?;
                let lo = self.signed_int()?;
                self.ts.expect(&Tok::DotDot)?;
                let hi = self.signed_int()?;
                self.ts.expect(&Tok::RBracket)?;
                Domain::Int { lo, hi }
            }
            "enum" => Domain::Enum(self.braced_list(|p| Ok(p.ts.expect_ident()?.0))?),
            "map" => {
                let key = self.domain()?;
                self.ts.expect_keyword("to")?;
                let value = self.domain()?;
                Domain::Map {
                    key: Box::new(key),
                    value: Box::new(value),
                }
            }
            "seq" => {
                self.ts.expect_keyword("of")?;
                let elem = self.domain()?;
                self.ts.expect_keyword("max")?;
                let n = self.signed_int()?;
                if n < 0 {
                    return Err(FormatError::Resolution {
                        span,
                        message: "sequence bound must be non-negative".into(),
                    });
                }
                Domain::Seq {
                    elem: Box::new(elem),
                    max_len: n as usize,
                }
            }
            "set" => {
                self.ts.expect_keyword("of")?;
                Domain::Set {
                    elem: Box::new(self.domain()?),
                }
            }
            "record" => Domain::Record(self.braced_list(|p| {
                let (name, _) = p.ts.expect_ident()?;
                p.ts.expect(&Tok::Colon)?;
                Ok((name, p.domain()?))
            })?),
            other => {
                return Err(FormatError::Resolution {
                    span,
                    message: format!("unknown domain `{other}`"),
                })
            }
        })
    }

    fn constraint_ref(&mut self) -> Result<ConstraintRef, FormatError> {
        let span = self.ts.span();
        if self.ts.eat(&Tok::LParen) {
            let (e, range) = self.expr()?;
            self.ts.expect(&Tok::RParen)?;
            return Ok(ConstraintRef::Inline(e, span, range));
        }
        let (name, span) = self.ts.expect_ident()?;
        Ok(ConstraintRef::Named(name, span))
    }

    fn transition(&mut self) -> Result<(PendingTransition, Span), FormatError> {
        let (source, span) = self.state_id()?;
        self.ts.expect(&Tok::Minus)?;
        self.ts.expect(&Tok::LBracket)?;
        let (action, _) = self.label()?;
        let pre = if self.ts.eat_ident("pre") {
            Some(self.constraint_ref()?)
        } else {
            None
        };
        let post = if self.ts.eat_ident("post") {
            Some(self.constraint_ref()?)
        } else {
            None
        };
        self.ts.expect(&Tok::RBracket)?;
        self.ts.expect(&Tok::Arrow)?;
        let (target, _) = self.state_id()?;
        self.ts.expect(&Tok::Semi)?;
        Ok((
            PendingTransition {
                source,
                action,
                pre,
                post,
                target,
            },
            span,
        ))
    }

    fn automaton(&mut self) -> Result<(InterfaceAutomaton, AutomatonSpans), FormatError> {
        let header = self.ts.expect_keyword("automaton")?;
        let (name, _) = self.ts.expect_ident()?;
        let mut a = InterfaceAutomaton::new(name.clone());
        let mut spans = AutomatonSpans {
            header,
            ..Default::default()
        };
        let mut seen_blocks: IndexSet<&'static str> = IndexSet::new();
        let mut pending_constraints: Vec<PendingConstraint> = Vec::new();
        let mut pending_transitions: Vec<(PendingTransition, Span)> = Vec::new();

        self.ts.expect(&Tok::LBrace)?;
        while !self.ts.eat(&Tok::RBrace) {
            let span = self.ts.span();
            let kw = match self.ts.peek() {
                Tok::Ident(s) => s.clone(),
                _ => return Err(self.ts.unexpected("a declaration").into()),
            };
            let block: &'static str = match kw.as_str() {
                "states" => "states",
                "initial" => "initial",
                "inputs" => "inputs",
                "outputs" => "outputs",
                "hidden" => "hidden",
                "transitions" => "transitions",
                _ => "",
            };
            if !block.is_empty() && !seen_blocks.insert(block) {
                return Err(FormatError::Duplicate {
                    span,
                    what: "block",
                    name: block.into(),
                });
            }
            match kw.as_str() {
                "states" | "initial" => {
                    self.ts.next();
                    let ids = self.braced_list(|p| p.state_id())?;
                    for (id, sp) in ids {
                        let set = if kw == "states" {
                            spans.states.insert(id.0.clone(), sp);
                            &mut a.states
                        } else {
                            &mut a.initials
                        };
                        if !set.insert(id.clone()) {
                            return Err(FormatError::Duplicate {
                                span: sp,
                                what: "state",
                                name: id.0,
                            });
                        }
                    }
                }
                "inputs" | "outputs" | "hidden" => {
                    self.ts.next();
                    let class = match kw.as_str() {
                        "inputs" => ActionClass::Input,
                        "outputs" => ActionClass::Output,
                        _ => ActionClass::Hidden,
                    };
                    for (l, sp) in self.braced_list(|p| p.label())? {
                        spans.actions.entry(l.to_string()).or_insert(sp);
                        if !a.alphabet_mut(class).insert(l.clone()) {
                            return Err(FormatError::Duplicate {
                                span: sp,
                                what: "action",
                                name: l.to_string(),
                            });
                        }
                    }
                }
                "var" => {
                    self.ts.next();
                    let (first, sp) = self.ts.expect_ident()?;
                    let mut path = first;
                    while self.ts.eat(&Tok::Dot) {
                        path.push('.');
                        path.push_str(&self.ts.expect_ident()?.0);
                    }
                    self.ts.expect(&Tok::Colon)?;
                    let domain = self.domain()?;
                    self.ts.expect(&Tok::Semi)?;
                    if a.variables.iter().any(|d| d.name == path) {
                        return Err(FormatError::Duplicate {
                            span: sp,
                            what: "variable",
                            name: path,
                        });
                    }
                    spans.variables.insert(path.clone(), sp);
                    a.variables.push(VariableDecl::new(path, domain));
                }
                "context" | "pre" | "post" | "inv" => {
                    let (context, kind, cname, sp) =
                        ExprParser::new(&mut self.ts, self.src).parse_header()?;
                    let (raw, range) = self.expr()?;
                    self.ts.expect(&Tok::Semi)?;
                    if pending_constraints.iter().any(|c| c.name == cname) {
                        return Err(FormatError::Duplicate {
                            span: sp,
                            what: "constraint",
                            name: cname,
                        });
                    }
                    spans.constraints.insert(cname.clone(), sp);
                    pending_constraints.push(PendingConstraint {
                        name: cname,
                        context,
                        kind,
                        raw,
                        span: sp,
                        body_tokens: range,
                    });
                }
                "transitions" => {
                    self.ts.next();
                    self.ts.expect(&Tok::LBrace)?;
                    while !self.ts.eat(&Tok::RBrace) {
                        pending_transitions.push(self.transition()?);
                    }
                }
                _ => return Err(self.ts.unexpected("a declaration").into()),
            }
        }
        for required in ["states", "initial", "inputs", "outputs", "hidden"] {
            if !seen_blocks.contains(required) {
                return Err(FormatError::Resolution {
                    span: header,
                    message: format!("automaton `{name}` has no `{required}` block"),
                });
            }
        }

        for c in pending_constraints {
            let body = self.finish(&c.name, c.raw, c.kind, &a.variables, c.span, c.body_tokens)?;
            a.add_constraint(NamedConstraint {
                name: c.name,
                context: c.context,
                kind: c.kind,
                body,
            });
        }
        for (i, (t, span)) in pending_transitions.into_iter().enumerate() {
            let pre = self.resolve_ref(&mut a, t.pre, ConstraintKind::Pre, i)?;
            let post = self.resolve_ref(&mut a, t.post, ConstraintKind::Post, i)?;
            a.transitions.push(Transition {
                source: t.source,
                pre,
                action: t.action,
                post,
                target: t.target,
            });
            spans.transitions.push(span);
        }
        Ok((a, spans))
    }

    fn finish(
        &self,
        name: &str,
        raw: Expr,
        kind: ConstraintKind,
        decls: &[VariableDecl],
        span: Span,
        (start, end): (usize, usize),
    ) -> Result<Expr, FormatError> {
        let body_toks = &self.toks[start..end.max(start)];
        let locate = |ident: &str| {
            body_toks
                .iter()
                .find(|t| matches!(&t.tok, Tok::Ident(s) if s == ident))
                .map(|t| t.span)
                .unwrap_or(span)
        };
        finish_constraint(raw, kind, decls, locate).map_err(|error| FormatError::Constraint {
            span,
            name: name.to_string(),
            error,
        })
    }

    fn resolve_ref(
        &self,
        a: &mut InterfaceAutomaton,
        r: Option<ConstraintRef>,
        kind: ConstraintKind,
        index: usize,
    ) -> Result<Option<String>, FormatError> {
        match r {
            None => Ok(None),
            Some(ConstraintRef::Named(name, span)) => {
                if a.constraint(kind, &name).is_some() {
                    Ok(Some(name))
                } else {
                    let message = match [ConstraintKind::Pre, ConstraintKind::Post, ConstraintKind::Inv]
                        .into_iter()
                        .find(|k| a.constraint(*k, &name).is_some())
                    {
                        Some(other) => format!(
                            "`{name}` is declared as {} but used as {}",
                            other.keyword(),
                            kind.keyword()
                        ),
                        None => format!("no {} constraint named `{name}`", kind.keyword()),
                    };
                    Err(FormatError::Resolution { span, message })
                }
            }
            Some(ConstraintRef::Inline(raw, span, range)) => {
                let base = format!("{}_{}{}", a.name, kind.keyword(), index);
                let mut name = base.clone();
                let mut k = 2;
                while a.constraints().any(|c| c.name == name) {
                    name = format!("{base}_{k}");
                    k += 1;
                }
                let body = self.finish(&name, raw, kind, &a.variables, span, range)?;
                a.add_constraint(NamedConstraint::new(name.clone(), kind, body));
                Ok(Some(name))
            }
        }
    }
}
