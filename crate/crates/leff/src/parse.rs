//! Recursive-descent parser for programs: declarations followed by an
//! optional main computation.
//!
//! A program is a sequence of `effect`, `type`, `const`, and `let`
//! declarations, then either `main = C`, a bare computation, or nothing (a
//! declaration-only fragment). A top-level `let x = V` binds a value for the
//! rest of the program; it is told apart from a main computation that merely
//! starts with `let x = C in ...` by attempting the declaration first and
//! rolling back when the binding turns out to be followed by `in` (or is not
//! a value at all).
//!
//! The parser also records an occurrence table: which operation, type, and
//! constant names the source mentions, and which declarations it makes. The
//! profile checker works from that table without re-walking the tree.

use crate::ast::*;
use crate::diag::Diagnostic;
use crate::lex::{lex, Tok};
use crate::registry::{is_builtin, Registry};

#[derive(Clone, Debug, PartialEq)]
pub enum Decl {
    Effect { name: Name, param: Type, arity: Type, span: Span },
    TypeOpaque { name: Name, span: Span },
    TypeAlias { name: Name, rhs: Type, span: Span },
    Const { name: Name, base: Name, span: Span },
    LetVal { name: Name, val: Val, span: Span },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OccKind {
    /// An operation name: call site, effect-row member, handler clause, or
    /// its own declaration.
    Op,
    /// A base type name inside a type annotation.
    TypeName,
    /// A declared constant used as a value.
    ConstUse,
    /// `type N = T`.
    AliasDecl,
    /// `type N`.
    OpaqueDecl,
    /// `const c : B`, recorded under B.
    ConstDecl,
}

#[derive(Clone, Copy, Debug)]
pub struct Occurrence {
    pub name: Name,
    pub kind: OccKind,
    pub span: Span,
}

pub struct SourceProgram {
    pub registry: Registry,
    pub decls: Vec<Decl>,
    pub main: Option<Comp>,
    pub occurrences: Vec<Occurrence>,
}

impl SourceProgram {
    /// Top-level value bindings substituted into the main computation, later
    /// bindings first so that earlier ones reach uses inside later ones.
    pub fn linked_main(&self) -> Option<Comp> {
        let mut main = self.main.clone()?;
        for decl in self.decls.iter().rev() {
            if let Decl::LetVal { name, val, .. } = decl {
                main = substitute_comp(&main, *name, val);
            }
        }
        Some(main)
    }
}

pub fn parse_program(text: &str) -> Result<SourceProgram, Vec<Diagnostic>> {
    let toks = lex(text).map_err(|d| vec![d])?;
    let mut p = Parser {
        toks,
        pos: 0,
        reg: Registry::standard(),
        decls: Vec::new(),
        occ: Vec::new(),
        scope: Vec::new(),
    };
    match p.program() {
        Ok(main) => Ok(SourceProgram {
            registry: p.reg,
            decls: p.decls,
            main,
            occurrences: p.occ,
        }),
        Err(d) => Err(vec![d]),
    }
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    reg: Registry,
    decls: Vec<Decl>,
    occ: Vec<Occurrence>,
    scope: Vec<Name>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek2(&self) -> &Tok {
        if self.pos + 1 < self.toks.len() {
            &self.toks[self.pos + 1].0
        } else {
            &Tok::Eof
        }
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn next(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Span, Diagnostic> {
        if *self.peek() == tok {
            Ok(self.next().1)
        } else {
            Err(Diagnostic::error(
                self.span(),
                format!("expected {what}, found {}", describe(self.peek())),
            ))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(Name, Span), Diagnostic> {
        match self.peek().clone() {
            Tok::Ident(n) => {
                let span = self.next().1;
                Ok((n, span))
            }
            other => Err(Diagnostic::error(
                self.span(),
                format!("expected {what}, found {}", describe(&other)),
            )),
        }
    }

    /// Binder position: an identifier or `_` (anonymous, unreferencable).
    fn binder(&mut self) -> Result<(Name, Span), Diagnostic> {
        if *self.peek() == Tok::Underscore {
            let span = self.next().1;
            return Ok((Name::new("_"), span));
        }
        self.ident("a binder")
    }

    fn in_scope(&self, n: Name) -> bool {
        self.scope.iter().rev().any(|s| *s == n)
    }

    fn record(&mut self, name: Name, kind: OccKind, span: Span) {
        self.occ.push(Occurrence { name, kind, span });
    }

    // ----- program structure -----

    fn program(&mut self) -> Result<Option<Comp>, Diagnostic> {
        loop {
            match self.peek() {
                Tok::Effect => self.effect_decl()?,
                Tok::Type => self.type_decl()?,
                Tok::Const => self.const_decl()?,
                Tok::Let => {
                    if !self.try_letval_decl()? {
                        let main = self.comp()?;
                        self.expect(Tok::Eof, "end of input after the main computation")?;
                        return Ok(Some(main));
                    }
                }
                Tok::Main => {
                    self.next();
                    self.expect(Tok::Eq, "'=' after main")?;
                    let main = self.comp()?;
                    self.expect(Tok::Eof, "end of input after the main computation")?;
                    return Ok(Some(main));
                }
                Tok::Eof => return Ok(None),
                _ => {
                    let main = self.comp()?;
                    self.expect(Tok::Eof, "end of input after the main computation")?;
                    return Ok(Some(main));
                }
            }
        }
    }

    fn effect_decl(&mut self) -> Result<(), Diagnostic> {
        let span = self.next().1; // effect
        let (name, nspan) = self.ident("an operation name")?;
        self.record(name, OccKind::Op, nspan);
        self.expect(Tok::Colon, "':' in an effect declaration")?;
        let param = self.type_resolved()?;
        self.expect(Tok::SigArrow, "'~>' between parameter and arity types")?;
        let arity = self.type_resolved()?;
        self.reg.declare_op(name, OpSig { param: param.clone(), arity: arity.clone() }, nspan)?;
        self.decls.push(Decl::Effect { name, param, arity, span });
        Ok(())
    }

    fn type_decl(&mut self) -> Result<(), Diagnostic> {
        let span = self.next().1; // type
        let (name, nspan) = self.ident("a type name")?;
        if *self.peek() == Tok::Eq {
            self.next();
            let rhs = self.type_resolved()?;
            self.reg.declare_alias(name, rhs.clone(), nspan)?;
            self.record(name, OccKind::AliasDecl, nspan);
            self.decls.push(Decl::TypeAlias { name, rhs, span });
        } else {
            self.reg.declare_opaque(name, nspan)?;
            self.record(name, OccKind::OpaqueDecl, nspan);
            self.decls.push(Decl::TypeOpaque { name, span });
        }
        Ok(())
    }

    fn const_decl(&mut self) -> Result<(), Diagnostic> {
        let span = self.next().1; // const
        let (name, nspan) = self.ident("a constant name")?;
        self.expect(Tok::Colon, "':' in a constant declaration")?;
        let (base, bspan) = self.ident("a base type name")?;
        self.record(base, OccKind::TypeName, bspan);
        self.record(base, OccKind::ConstDecl, bspan);
        self.reg.declare_const(name, base, nspan)?;
        self.decls.push(Decl::Const { name, base, span });
        Ok(())
    }

    /// Attempts `let x = V` as a top-level binding. Returns false (with the
    /// position restored) when the text is really the start of the main
    /// computation.
    fn try_letval_decl(&mut self) -> Result<bool, Diagnostic> {
        let save_pos = self.pos;
        let save_occ = self.occ.len();
        let span = self.next().1; // let
        let attempt = (|| -> Result<(Name, Val), Diagnostic> {
            let (name, _) = self.ident("a name")?;
            self.expect(Tok::Eq, "'='")?;
            let val = self.value()?;
            Ok((name, val))
        })();
        // commit only when what follows can start another declaration (or
        // ends the program); anything else means the right-hand side was
        // a computation, as in `let b = lt (1, 2) in ...`, so the whole
        // text is the main computation
        let follows_decl = matches!(
            self.peek(),
            Tok::Let | Tok::Type | Tok::Const | Tok::Effect | Tok::Main | Tok::Eof
        );
        match attempt {
            Ok((name, val)) if follows_decl => {
                self.scope.push(name);
                self.decls.push(Decl::LetVal { name, val, span });
                Ok(true)
            }
            _ => {
                self.pos = save_pos;
                self.occ.truncate(save_occ);
                Ok(false)
            }
        }
    }

    // ----- computations -----

    fn comp(&mut self) -> Result<Comp, Diagnostic> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Return => {
                self.next();
                let v = self.value()?;
                Ok(Comp::ret_at(v, span))
            }
            Tok::Pi1 | Tok::Pi2 => {
                let proj = if *self.peek() == Tok::Pi1 { Proj::Fst } else { Proj::Snd };
                self.next();
                self.expect(Tok::LParen, "'(' after the projection")?;
                let v = self.value()?;
                self.expect(Tok::RParen, "')' closing the projection")?;
                Ok(Comp::project_at(proj, v, span))
            }
            Tok::Let => {
                self.next();
                let (bound, _) = self.binder()?;
                self.expect(Tok::Eq, "'=' in let")?;
                let head = self.comp()?;
                self.expect(Tok::In, "'in' after the bound computation")?;
                self.scope.push(bound);
                let body = self.comp();
                self.scope.pop();
                Ok(Comp::let_in_at(bound, head, body?, span))
            }
            Tok::With => {
                self.next();
                let handler = self.value_atom()?;
                self.expect(Tok::Handle, "'handle' after the handler value")?;
                let body = self.comp()?;
                Ok(Comp::handle_at(handler, body, span))
            }
            Tok::If => {
                self.next();
                let cond = self.value()?;
                self.expect(Tok::Then, "'then'")?;
                let then_c = self.comp()?;
                self.expect(Tok::Else, "'else'")?;
                let else_c = self.comp()?;
                Ok(Comp::if_at(cond, then_c, else_c, span))
            }
            Tok::Fix => {
                self.next();
                let (func, _) = self.ident("the recursive function's name")?;
                self.expect(Tok::LParen, "'(' before the parameter")?;
                let (param, _) = self.binder()?;
                self.expect(Tok::Colon, "':' before the parameter type")?;
                let param_ty = self.type_resolved()?;
                self.expect(Tok::RParen, "')' after the parameter")?;
                self.expect(Tok::Colon, "':' before the result type")?;
                let ret_ty = self.type_resolved()?;
                let latent = self.opt_bracket_row()?;
                self.expect(Tok::Arrow, "'->' before the body")?;
                self.scope.push(func);
                self.scope.push(param);
                let body = self.comp();
                self.scope.pop();
                self.scope.pop();
                Ok(Comp::fix_at(func, param, param_ty, ret_ty, latent, body?, span))
            }
            Tok::Ident(n)
                if self.reg.is_op(n) && !self.in_scope(n) && *self.peek2() == Tok::LParen =>
            {
                let (_, nspan) = self.next();
                self.record(n, OccKind::Op, nspan);
                self.expect(Tok::LParen, "'('")?;
                let arg = self.value()?;
                self.expect(Tok::Semi, "';' between the argument and the continuation")?;
                let (bound, _) = self.binder()?;
                self.expect(Tok::Dot, "'.' after the continuation's binder")?;
                self.scope.push(bound);
                let cont = self.comp();
                self.scope.pop();
                self.expect(Tok::RParen, "')' closing the operation call")?;
                Ok(Comp::op_call_at(n, arg, bound, cont?, span))
            }
            _ => {
                let f = self.value_atom()?;
                let a = self.value_atom()?;
                Ok(Comp::apply_at(f, a, span))
            }
        }
    }

    // ----- values -----

    fn value(&mut self) -> Result<Val, Diagnostic> {
        match self.peek() {
            Tok::Fun => {
                self.next();
                self.expect(Tok::LParen, "'(' before the parameter")?;
                let (param, _) = self.binder()?;
                self.expect(Tok::Colon, "':' before the parameter type")?;
                let param_ty = self.type_resolved()?;
                self.expect(Tok::RParen, "')' after the parameter")?;
                let latent = self.opt_bracket_row()?;
                self.expect(Tok::Arrow, "'->' before the body")?;
                self.scope.push(param);
                let body = self.comp();
                self.scope.pop();
                Ok(Val::lambda(param, param_ty, latent, body?))
            }
            Tok::Handler => self.handler(),
            _ => self.value_atom(),
        }
    }

    fn value_atom(&mut self) -> Result<Val, Diagnostic> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Ident(n) => {
                self.next();
                if self.in_scope(n) {
                    return Ok(Val::var(n));
                }
                if let Some(base) = self.reg.const_base(n) {
                    self.record(n, OccKind::ConstUse, span);
                    return Ok(Val::constant(Constant::Declared { name: n, base }));
                }
                if is_builtin(n) {
                    return Ok(Val::builtin(n));
                }
                if self.reg.is_op(n) {
                    return Err(Diagnostic::error(
                        span,
                        format!("operation {n} is not a value; call it as {n}(V; x. C)"),
                    ));
                }
                Ok(Val::var(n))
            }
            Tok::Int(v) => {
                self.next();
                Ok(Val::int(v))
            }
            Tok::Real(x) => {
                self.next();
                Ok(Val::real(x))
            }
            Tok::Minus => {
                self.next();
                match self.peek().clone() {
                    Tok::Int(v) => {
                        self.next();
                        Ok(Val::int(-v))
                    }
                    Tok::Real(x) => {
                        self.next();
                        Ok(Val::real(-x))
                    }
                    _ => Err(Diagnostic::error(span, "expected a number after '-'")),
                }
            }
            Tok::Str(s) => {
                self.next();
                Ok(Val::str(&s))
            }
            Tok::True => {
                self.next();
                Ok(Val::bool(true))
            }
            Tok::False => {
                self.next();
                Ok(Val::bool(false))
            }
            Tok::Nil => {
                self.next();
                self.expect(Tok::LBracket, "'[' after nil")?;
                let t = self.type_resolved()?;
                self.expect(Tok::RBracket, "']' after the element type")?;
                Ok(Val::nil(t))
            }
            Tok::LParen => {
                self.next();
                if *self.peek() == Tok::RParen {
                    self.next();
                    return Ok(Val::unit());
                }
                let first = self.value()?;
                if *self.peek() == Tok::Comma {
                    self.next();
                    let second = self.value()?;
                    self.expect(Tok::RParen, "')' closing the pair")?;
                    return Ok(Val::pair(first, second));
                }
                self.expect(Tok::RParen, "')' closing the parenthesized value")?;
                Ok(first)
            }
            other => Err(Diagnostic::error(
                span,
                format!("expected a value, found {}", describe(&other)),
            )),
        }
    }

    fn handler(&mut self) -> Result<Val, Diagnostic> {
        self.next(); // handler
        self.expect(Tok::LBrace, "'{' opening the handler")?;
        self.expect(Tok::Return, "the return clause first")?;
        let (ret_param, _) = self.binder()?;
        self.expect(Tok::Arrow, "'->' in the return clause")?;
        self.scope.push(ret_param);
        let ret_body = self.comp();
        self.scope.pop();
        let ret_body = ret_body?;
        let mut clauses: Vec<OpClause> = Vec::new();
        while *self.peek() == Tok::Pipe {
            self.next();
            let (op, ospan) = self.ident("an operation name")?;
            if !self.reg.is_op(op) {
                return Err(Diagnostic::error(ospan, format!("unknown operation {op}")));
            }
            if clauses.iter().any(|c| c.op == op) {
                return Err(Diagnostic::error(ospan, format!("duplicate clause for {op}")));
            }
            self.record(op, OccKind::Op, ospan);
            self.expect(Tok::LParen, "'(' before the clause parameters")?;
            let (param, _) = self.binder()?;
            self.expect(Tok::Semi, "';' between parameter and continuation")?;
            let (k, _) = self.binder()?;
            self.expect(Tok::RParen, "')' after the clause parameters")?;
            self.expect(Tok::Arrow, "'->' before the clause body")?;
            self.scope.push(param);
            self.scope.push(k);
            let body = self.comp();
            self.scope.pop();
            self.scope.pop();
            clauses.push(OpClause { op, param, k, body: body? });
        }
        self.expect(Tok::RBrace, "'}' closing the handler")?;
        self.expect(Tok::Colon, "':' before the handler's ascription")?;
        let tspan = self.span();
        let ty = self.type_resolved()?;
        let ascription = match ty {
            Type::HandlerArrow { value, handled, residual, result } => HandlerAscription {
                value_ty: *value,
                handled,
                residual,
                result_ty: *result,
            },
            other => {
                return Err(Diagnostic::error(
                    tspan,
                    format!(
                        "a handler is ascribed a handler type T1 =[E1 ; E2]=> T2, not {}",
                        crate::pretty::type_to_string(&other)
                    ),
                ))
            }
        };
        Ok(Val::handler(HandlerVal { ret_param, ret_body, clauses, ascription }))
    }

    // ----- effect rows and types -----

    /// Optional `[row]` before `->` in lambdas and fix; absent means `any`.
    fn opt_bracket_row(&mut self) -> Result<EffectSet, Diagnostic> {
        if *self.peek() != Tok::LBracket {
            return Ok(EffectSet::Any);
        }
        self.next();
        let row = self.row()?;
        self.expect(Tok::RBracket, "']' closing the effect row")?;
        Ok(row)
    }

    /// `any` or `{op, ...}`.
    fn row(&mut self) -> Result<EffectSet, Diagnostic> {
        if *self.peek() == Tok::Any {
            self.next();
            return Ok(EffectSet::Any);
        }
        self.expect(Tok::LBrace, "an effect row ('any' or '{...}')")?;
        let mut names = Vec::new();
        if *self.peek() != Tok::RBrace {
            loop {
                let (op, ospan) = self.ident("an operation name")?;
                self.record(op, OccKind::Op, ospan);
                names.push((op, ospan));
                if *self.peek() == Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RBrace, "'}' closing the effect row")?;
        let mut entries = std::collections::BTreeMap::new();
        for (op, ospan) in names {
            let sig = self.reg.op_sig(op, ospan)?;
            entries.insert(op, sig);
        }
        Ok(EffectSet::Fin(entries))
    }

    fn grade_word(&mut self) -> Result<Vec<GradeLetter>, Diagnostic> {
        let span = self.span();
        match self.next().0 {
            Tok::Int(1) => Ok(Vec::new()),
            Tok::Ident(n) => {
                let text = n.text();
                let mut out = Vec::new();
                for ch in text.chars() {
                    out.push(match ch {
                        'C' => GradeLetter::C,
                        'D' => GradeLetter::D,
                        'R' => GradeLetter::R,
                        other => {
                            return Err(Diagnostic::error(
                                span,
                                format!("'{other}' is not a grade letter (C, D, R)"),
                            ))
                        }
                    });
                }
                Ok(out)
            }
            _ => Err(Diagnostic::error(span, "expected a grade word (letters C, D, R, or 1)")),
        }
    }

    fn type_resolved(&mut self) -> Result<Type, Diagnostic> {
        let span = self.span();
        let raw = self.ty()?;
        self.reg.resolve_type(&raw, span)
    }

    fn ty(&mut self) -> Result<Type, Diagnostic> {
        let left = self.prod_ty()?;
        match self.peek() {
            Tok::Arrow => {
                self.next();
                let right = self.ty()?;
                Ok(Type::Arrow {
                    param: Box::new(left),
                    latent: EffectSet::Any,
                    grade: None,
                    result: Box::new(right),
                })
            }
            Tok::EffArrowL => {
                self.next();
                let latent = self.row()?;
                let grade = if *self.peek() == Tok::Pipe {
                    self.next();
                    Some(self.grade_word()?)
                } else {
                    None
                };
                self.expect(Tok::EffArrowR, "']->' closing the arrow's effect row")?;
                let right = self.ty()?;
                Ok(Type::Arrow {
                    param: Box::new(left),
                    latent,
                    grade,
                    result: Box::new(right),
                })
            }
            Tok::DArrow => {
                self.next();
                let right = self.ty()?;
                Ok(Type::HandlerArrow {
                    value: Box::new(left),
                    handled: EffectSet::Any,
                    residual: EffectSet::Any,
                    result: Box::new(right),
                })
            }
            Tok::HandArrowL => {
                self.next();
                let handled = self.row()?;
                self.expect(Tok::Semi, "';' between handled and residual rows")?;
                let residual = self.row()?;
                self.expect(Tok::HandArrowR, "']=>' closing the handler arrow")?;
                let right = self.ty()?;
                Ok(Type::HandlerArrow {
                    value: Box::new(left),
                    handled,
                    residual,
                    result: Box::new(right),
                })
            }
            _ => Ok(left),
        }
    }

    fn prod_ty(&mut self) -> Result<Type, Diagnostic> {
        let left = self.postfix_ty()?;
        if *self.peek() == Tok::Star {
            self.next();
            let right = self.prod_ty()?;
            Ok(Type::prod(left, right))
        } else {
            Ok(left)
        }
    }

    fn postfix_ty(&mut self) -> Result<Type, Diagnostic> {
        let mut t = self.atom_ty()?;
        let list_name = Name::new("list");
        while matches!(self.peek(), Tok::Ident(n) if *n == list_name) {
            self.next();
            t = Type::list(t);
        }
        Ok(t)
    }

    fn atom_ty(&mut self) -> Result<Type, Diagnostic> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Ident(n) => {
                self.next();
                if n.text().as_ref() == "Unit" {
                    Ok(Type::Unit)
                } else {
                    self.record(n, OccKind::TypeName, span);
                    Ok(Type::Base(n))
                }
            }
            Tok::LParen => {
                self.next();
                let t = self.ty()?;
                self.expect(Tok::RParen, "')' closing the type")?;
                Ok(t)
            }
            other => Err(Diagnostic::error(
                span,
                format!("expected a type, found {}", describe(&other)),
            )),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(n) => format!("'{n}'"),
        Tok::Int(v) => format!("'{v}'"),
        Tok::Real(x) => format!("'{x}'"),
        Tok::Str(_) => "a string literal".to_string(),
        Tok::Eof => "end of input".to_string(),
        Tok::Fun => "'fun'".to_string(),
        Tok::Return => "'return'".to_string(),
        Tok::Let => "'let'".to_string(),
        Tok::In => "'in'".to_string(),
        Tok::With => "'with'".to_string(),
        Tok::Handle => "'handle'".to_string(),
        Tok::Handler => "'handler'".to_string(),
        Tok::If => "'if'".to_string(),
        Tok::Then => "'then'".to_string(),
        Tok::Else => "'else'".to_string(),
        Tok::Fix => "'fix'".to_string(),
        Tok::Nil => "'nil'".to_string(),
        Tok::Main => "'main'".to_string(),
        Tok::Effect => "'effect'".to_string(),
        Tok::Type => "'type'".to_string(),
        Tok::Const => "'const'".to_string(),
        Tok::Pi1 => "'pi1'".to_string(),
        Tok::Pi2 => "'pi2'".to_string(),
        Tok::Any => "'any'".to_string(),
        Tok::True => "'true'".to_string(),
        Tok::False => "'false'".to_string(),
        Tok::LParen => "'('".to_string(),
        Tok::RParen => "')'".to_string(),
        Tok::LBrace => "'{'".to_string(),
        Tok::RBrace => "'}'".to_string(),
        Tok::LBracket => "'['".to_string(),
        Tok::RBracket => "']'".to_string(),
        Tok::Comma => "','".to_string(),
        Tok::Semi => "';'".to_string(),
        Tok::Colon => "':'".to_string(),
        Tok::Dot => "'.'".to_string(),
        Tok::Star => "'*'".to_string(),
        Tok::Eq => "'='".to_string(),
        Tok::Pipe => "'|'".to_string(),
        Tok::Underscore => "'_'".to_string(),
        Tok::Minus => "'-'".to_string(),
        Tok::Arrow => "'->'".to_string(),
        Tok::DArrow => "'=>'".to_string(),
        Tok::EffArrowL => "'-['".to_string(),
        Tok::EffArrowR => "']->'".to_string(),
        Tok::HandArrowL => "'=['".to_string(),
        Tok::HandArrowR => "']=>'".to_string(),
        Tok::SigArrow => "'~>'".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> SourceProgram {
        parse_program(text).unwrap_or_else(|ds| panic!("{}", ds[0]))
    }

    fn parse_err(text: &str) -> Diagnostic {
        parse_program(text).err().expect("expected a parse error").remove(0)
    }

    #[test]
    fn a_bare_computation_is_the_main() {
        let p = parse("return 3");
        assert!(p.decls.is_empty());
        assert_eq!(p.main.unwrap(), Comp::ret(Val::int(3)));
    }

    #[test]
    fn main_keyword_form() {
        let p = parse("main = return ()");
        assert_eq!(p.main.unwrap(), Comp::ret(Val::unit()));
    }

    #[test]
    fn toplevel_let_is_a_declaration_but_let_in_is_main() {
        let p = parse("let three = 3\nmain = return three");
        assert_eq!(p.decls.len(), 1);
        match &p.decls[0] {
            Decl::LetVal { name, val, .. } => {
                assert_eq!(name.text().as_ref(), "three");
                assert_eq!(*val, Val::int(3));
            }
            other => panic!("unexpected decl {other:?}"),
        }
        let p = parse("let x = return 3 in return x");
        assert!(p.decls.is_empty());
        match p.main.unwrap().kind() {
            CompKind::Let { .. } => {}
            other => panic!("expected let, got a different form: {:?}", other.is_core_form()),
        }
    }

    #[test]
    fn linked_main_substitutes_declarations_in_order() {
        let p = parse("let one = 1\nlet pairofones = (one, one)\nmain = return pairofones");
        let main = p.linked_main().unwrap();
        assert_eq!(main, Comp::ret(Val::pair(Val::int(1), Val::int(1))));
    }

    #[test]
    fn operation_calls_parse_and_bind() {
        let p = parse("choice((); a. do(a; _. return a))");
        let main = p.main.unwrap();
        match main.kind() {
            CompKind::OpCall { op, bound, .. } => {
                assert_eq!(op.text().as_ref(), "choice");
                assert_eq!(bound.text().as_ref(), "a");
            }
            _ => panic!("expected an operation call"),
        }
    }

    #[test]
    fn operations_are_not_values() {
        let err = parse_err("return choice");
        assert!(err.message.contains("not a value"), "{}", err.message);
    }

    #[test]
    fn lambdas_carry_latent_rows() {
        let p = parse("return fun (x : Real) [{observe, do}] -> return x");
        match p.main.unwrap().kind() {
            CompKind::Return(v) => match v.kind() {
                ValKind::Lambda { latent, .. } => {
                    assert!(latent.contains(Name::new("observe")));
                    assert!(latent.contains(Name::new("do")));
                    assert!(!latent.contains(Name::new("choice")));
                }
                _ => panic!("expected lambda"),
            },
            _ => panic!("expected return"),
        }
        // no bracket means untracked
        let p = parse("return fun (x : Real) -> return x");
        match p.main.unwrap().kind() {
            CompKind::Return(v) => match v.kind() {
                ValKind::Lambda { latent, .. } => assert!(latent.is_any()),
                _ => panic!("expected lambda"),
            },
            _ => panic!("expected return"),
        }
    }

    #[test]
    fn effect_declarations_extend_the_row_vocabulary() {
        let p = parse(
            "effect ping : Int ~> Real\n\
             main = return fun (x : Unit) [{ping}] -> ping(3; r. return r)",
        );
        assert_eq!(p.decls.len(), 1);
        let err = parse_err("return fun (x : Unit) [{zap}] -> return x");
        assert!(err.message.contains("unknown operation"), "{}", err.message);
    }

    #[test]
    fn handlers_parse_with_ascriptions() {
        let p = parse(
            "let h = handler { return x -> return x | choice(p; k) -> k 1 } \
             : Int =[{choice} ; {}]=> Int\n\
             main = with h handle choice((); a. return a)",
        );
        match &p.decls[0] {
            Decl::LetVal { val, .. } => match val.kind() {
                ValKind::Handler(h) => {
                    assert_eq!(h.clauses.len(), 1);
                    assert_eq!(h.ascription.result_ty, Type::base("Int"));
                    assert!(h.ascription.residual == EffectSet::empty());
                }
                _ => panic!("expected handler"),
            },
            _ => panic!("expected letval"),
        }
    }

    #[test]
    fn handler_ascription_must_be_a_handler_type() {
        let err =
            parse_err("return handler { return x -> return x } : Int -> Int");
        assert!(err.message.contains("handler type"), "{}", err.message);
    }

    #[test]
    fn type_aliases_expand_at_parse_time() {
        let p = parse(
            "type Money = Real\n\
             main = return fun (m : Money) -> return m",
        );
        match p.main.unwrap().kind() {
            CompKind::Return(v) => match v.kind() {
                ValKind::Lambda { param_ty, .. } => {
                    assert_eq!(*param_ty, Type::base("Real"));
                }
                _ => panic!("expected lambda"),
            },
            _ => panic!("expected return"),
        }
    }

    #[test]
    fn abstract_bases_instantiate_once() {
        // instantiating before use is fine, and so is leaving A_E abstract
        parse("type A_E = Int\nmain = return fun (a : A_E) -> return a");
        parse("main = let f = return fun (a : A_E) -> return a in return ()");
        // but pinning it down after a declaration already relied on it fails
        let err = parse_err(
            "effect probe : A_E ~> Unit\n\
             type A_E = Int\n\
             main = return ()",
        );
        assert!(err.message.contains("before any use"), "{}", err.message);
    }

    #[test]
    fn wildcard_binders_never_collide() {
        let p = parse("do(1; _. do(2; _. return ()))");
        assert!(p.main.is_some());
    }

    #[test]
    fn fix_parses_with_latent_row() {
        let p = parse(
            "let f = 3\n\
             main = let go = fix go (n : Int) : Int [{}] -> return n in go 3",
        );
        assert_eq!(p.decls.len(), 1);
    }

    #[test]
    fn nested_pairs_and_projections() {
        let p = parse("let p = ((1, 2.5), ()) \n main = pi1(p)");
        assert_eq!(p.decls.len(), 1);
        match p.linked_main().unwrap().kind() {
            CompKind::Project(Proj::Fst, v) => {
                assert_eq!(*v, Val::pair(Val::pair(Val::int(1), Val::real(2.5)), Val::unit()));
            }
            _ => panic!("expected projection"),
        }
    }

    #[test]
    fn vars_shadow_operations_and_builtins() {
        // a bound variable named like an operation is just a variable
        let p = parse("let choice = return 3 in return choice");
        assert!(p.main.is_some());
        let p = parse("let plus = return 3 in return plus");
        assert!(p.main.is_some());
    }

    #[test]
    fn occurrences_record_ops_and_types() {
        let p = parse(
            "type A_E = Int\n\
             main = choice((); a. do(a; _. return ()))",
        );
        let has = |name: &str, kind: OccKind| {
            p.occurrences
                .iter()
                .any(|o| o.kind == kind && o.name == Name::new(name))
        };
        assert!(has("choice", OccKind::Op));
        assert!(has("do", OccKind::Op));
        assert!(has("A_E", OccKind::AliasDecl));
        assert!(!has("observe", OccKind::Op));
    }

    #[test]
    fn declaration_only_fragment_has_no_main() {
        let p = parse("type Money = Real\nlet zero = 0.0\n");
        assert!(p.main.is_none());
        assert_eq!(p.decls.len(), 2);
    }
}
