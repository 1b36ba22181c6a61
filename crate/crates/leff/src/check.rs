//! Type checking, in two modes sharing one code path.
//!
//! `Simple` checks shapes only: every effect row read from an annotation is
//! coerced to the unconstrained row on the way in, so row mismatches can
//! never fail a program. `Effects` keeps the rows and enforces three things:
//! an operation call needs its operation in the ambient row; applying a
//! function needs its latent row inside the ambient row (weakening); and
//! handling a computation needs the handler's residual row inside the
//! ambient row.
//!
//! The ambient row of a handled body is the handler's handled row joined
//! with whatever part of the outer ambient the handler does not handle;
//! operations in that remainder simply pass through the handler at run time,
//! which is exactly what the forwarding step does.
//!
//! Subtyping is structural. Function parameters are contravariant, results
//! covariant, and latent rows compare by weakening, where the unconstrained
//! row is compatible in both directions (it means "not tracked", not "all
//! effects").

use crate::ast::*;
use crate::diag::Diagnostic;
use crate::parse::{Decl, SourceProgram};
use crate::pretty::{effects_to_string, type_to_string};
use crate::registry::{builtin_type, BuiltinType, Registry};
use std::collections::BTreeSet;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    Simple,
    Effects,
}

pub fn sub_ty(a: &Type, b: &Type) -> bool {
    match (a, b) {
        (Type::Base(x), Type::Base(y)) => x == y,
        (Type::Unit, Type::Unit) => true,
        (Type::Prod(a1, a2), Type::Prod(b1, b2)) => sub_ty(a1, b1) && sub_ty(a2, b2),
        (Type::List(x), Type::List(y)) => sub_ty(x, y),
        (
            Type::Arrow { param: p1, latent: e1, result: r1, .. },
            Type::Arrow { param: p2, latent: e2, result: r2, .. },
        ) => sub_ty(p2, p1) && effect_weaken_check(e1, e2) && sub_ty(r1, r2),
        (
            Type::HandlerArrow { value: v1, handled: h1, residual: s1, result: r1 },
            Type::HandlerArrow { value: v2, handled: h2, residual: s2, result: r2 },
        ) => {
            sub_ty(v2, v1)
                && effect_weaken_check(h1, h2)
                && effect_weaken_check(h2, h1)
                && effect_weaken_check(s1, s2)
                && sub_ty(r1, r2)
        }
        _ => false,
    }
}

fn same_ty(a: &Type, b: &Type) -> bool {
    sub_ty(a, b) && sub_ty(b, a)
}

type Ctx = Vec<(Name, Type)>;

pub struct Checker {
    reg: Registry,
    mode: Mode,
}

impl Checker {
    pub fn new(reg: Registry, mode: Mode) -> Checker {
        Checker { reg, mode }
    }

    /// Rows read from annotations pass through here; simple mode unties them.
    fn import_row(&self, e: &EffectSet) -> EffectSet {
        match self.mode {
            Mode::Simple => EffectSet::Any,
            Mode::Effects => e.clone(),
        }
    }

    /// Types read from annotations pass through here; simple mode unties
    /// every row buried inside.
    fn import_type(&self, t: &Type) -> Type {
        match self.mode {
            Mode::Effects => t.clone(),
            Mode::Simple => scrub(t),
        }
    }

    fn lookup(&self, ctx: &Ctx, n: Name, span: Span) -> Result<Type, Diagnostic> {
        ctx.iter()
            .rev()
            .find(|(name, _)| *name == n)
            .map(|(_, t)| t.clone())
            .ok_or_else(|| Diagnostic::error(span, format!("unbound variable {n}")))
    }

    pub fn val_type(&mut self, ctx: &mut Ctx, v: &Val, span: Span) -> Result<Type, Diagnostic> {
        match v.kind() {
            ValKind::Var(n) => self.lookup(ctx, *n, span),
            ValKind::Lambda { param, param_ty, latent, body } => {
                let param_ty = self.import_type(param_ty);
                let latent = self.import_row(latent);
                ctx.push((*param, param_ty.clone()));
                let result = self.comp_type(ctx, &latent, body);
                ctx.pop();
                Ok(Type::Arrow {
                    param: Box::new(param_ty),
                    latent,
                    grade: None,
                    result: Box::new(result?),
                })
            }
            ValKind::Pair(a, b) => Ok(Type::prod(
                self.val_type(ctx, a, span)?,
                self.val_type(ctx, b, span)?,
            )),
            ValKind::Unit => Ok(Type::Unit),
            ValKind::Const(c) => Ok(match c {
                Constant::Int(_) => Type::base("Int"),
                Constant::Real(_) => Type::base("Real"),
                Constant::Bool(_) => Type::base("Bool"),
                Constant::Str(_) => Type::base("Str"),
                Constant::Declared { base, .. } => Type::Base(*base),
            }),
            ValKind::Builtin(b) => match builtin_type(*b) {
                Some(BuiltinType::Mono { param, result }) => Ok(Type::Arrow {
                    param: Box::new(self.import_type(param)),
                    latent: self.import_row(&EffectSet::empty()),
                    grade: None,
                    result: Box::new(self.import_type(result)),
                }),
                Some(_) => Err(Diagnostic::error(
                    span,
                    format!("built-in {b} works on several shapes; apply it directly"),
                )),
                None => Err(Diagnostic::error(span, format!("unknown built-in {b}"))),
            },
            ValKind::Handler(h) => self.handler_type(ctx, h, span),
            ValKind::Nil { elem } => Ok(Type::list(self.import_type(elem))),
            ValKind::ConsCell(head, tail) => {
                let th = self.val_type(ctx, head, span)?;
                let tt = self.val_type(ctx, tail, span)?;
                match &tt {
                    Type::List(e) if same_ty(&th, e) => Ok(tt.clone()),
                    _ => Err(Diagnostic::error(
                        span,
                        format!(
                            "list cell with head {} and tail {}",
                            type_to_string(&th),
                            type_to_string(&tt)
                        ),
                    )),
                }
            }
        }
    }

    fn handler_type(
        &mut self,
        ctx: &mut Ctx,
        h: &HandlerVal,
        span: Span,
    ) -> Result<Type, Diagnostic> {
        let value_ty = self.import_type(&h.ascription.value_ty);
        let result_ty = self.import_type(&h.ascription.result_ty);
        let handled = self.import_row(&h.ascription.handled);
        let residual = self.import_row(&h.ascription.residual);

        ctx.push((h.ret_param, value_ty.clone()));
        let ret_ty = self.comp_type(ctx, &residual, &h.ret_body);
        ctx.pop();
        let ret_ty = ret_ty?;
        if !sub_ty(&ret_ty, &result_ty) {
            return Err(Diagnostic::error(
                h.ret_body.span(),
                format!(
                    "the return clause produces {} but the ascription promises {}",
                    type_to_string(&ret_ty),
                    type_to_string(&result_ty)
                ),
            ));
        }

        let mut covered: BTreeSet<Name> = BTreeSet::new();
        for cl in &h.clauses {
            covered.insert(cl.op);
            let sig = match handled.get(cl.op) {
                Some(s) => s.clone(),
                None if handled.is_any() => self.reg.op_sig(cl.op, span)?,
                None => {
                    return Err(Diagnostic::error(
                        cl.body.span(),
                        format!(
                            "clause for {} but the handled row is only {}",
                            cl.op,
                            effects_to_string(&handled)
                        ),
                    ))
                }
            };
            let k_ty = Type::Arrow {
                param: Box::new(self.import_type(&sig.arity)),
                latent: residual.clone(),
                grade: None,
                result: Box::new(result_ty.clone()),
            };
            ctx.push((cl.param, self.import_type(&sig.param)));
            ctx.push((cl.k, k_ty));
            let body_ty = self.comp_type(ctx, &residual, &cl.body);
            ctx.pop();
            ctx.pop();
            let body_ty = body_ty?;
            if !sub_ty(&body_ty, &result_ty) {
                return Err(Diagnostic::error(
                    cl.body.span(),
                    format!(
                        "the {} clause produces {} but the ascription promises {}",
                        cl.op,
                        type_to_string(&body_ty),
                        type_to_string(&result_ty)
                    ),
                ));
            }
        }

        // handled-but-clauseless operations forward; they must fit the residual
        if let EffectSet::Fin(m) = &handled {
            for (op, sig) in m {
                if covered.contains(op) {
                    continue;
                }
                let ok = match residual.get(*op) {
                    Some(rsig) => rsig == sig,
                    None => residual.is_any(),
                };
                if !ok {
                    return Err(Diagnostic::error(
                        span,
                        format!(
                            "{op} is in the handled row but has no clause, so it forwards; \
                             the residual row {} does not carry it",
                            effects_to_string(&residual)
                        ),
                    ));
                }
            }
        }

        Ok(Type::HandlerArrow {
            value: Box::new(value_ty),
            handled,
            residual,
            result: Box::new(result_ty),
        })
    }

    pub fn comp_type(
        &mut self,
        ctx: &mut Ctx,
        ambient: &EffectSet,
        c: &Comp,
    ) -> Result<Type, Diagnostic> {
        let span = c.span();
        match c.kind() {
            CompKind::Return(v) => self.val_type(ctx, v, span),
            CompKind::Project(p, v) => match self.val_type(ctx, v, span)? {
                Type::Prod(a, b) => Ok(match p {
                    Proj::Fst => *a,
                    Proj::Snd => *b,
                }),
                other => Err(Diagnostic::error(
                    span,
                    format!("projection from a non-pair of type {}", type_to_string(&other)),
                )),
            },
            CompKind::OpCall { op, arg, bound, cont } => {
                let sig = match ambient.get(*op) {
                    Some(s) => s.clone(),
                    None if ambient.is_any() => self.reg.op_sig(*op, span)?,
                    None => {
                        return Err(Diagnostic::error(
                            span,
                            format!(
                                "operation {op} is not available here; the ambient row is {}",
                                effects_to_string(ambient)
                            ),
                        ))
                    }
                };
                let ta = self.val_type(ctx, arg, span)?;
                if !sub_ty(&ta, &sig.param) {
                    return Err(Diagnostic::error(
                        span,
                        format!(
                            "{op} takes {} but the argument has type {}",
                            type_to_string(&sig.param),
                            type_to_string(&ta)
                        ),
                    ));
                }
                ctx.push((*bound, sig.arity.clone()));
                let t = self.comp_type(ctx, ambient, cont);
                ctx.pop();
                t
            }
            CompKind::Let { bound, head, body } => {
                let th = self.comp_type(ctx, ambient, head)?;
                ctx.push((*bound, th));
                let t = self.comp_type(ctx, ambient, body);
                ctx.pop();
                t
            }
            CompKind::Apply(f, a) => self.apply_type(ctx, ambient, f, a, span),
            CompKind::Handle { handler, body } => {
                let th = self.val_type(ctx, handler, span)?;
                let (value, handled, residual, result) = match th {
                    Type::HandlerArrow { value, handled, residual, result } => {
                        (*value, handled, residual, *result)
                    }
                    other => {
                        return Err(Diagnostic::error(
                            span,
                            format!(
                                "'with ... handle' needs a handler, not a value of type {}",
                                type_to_string(&other)
                            ),
                        ))
                    }
                };
                if !effect_weaken_check(&residual, ambient) {
                    return Err(Diagnostic::error(
                        span,
                        format!(
                            "the handler leaves {} unhandled, which the ambient row {} \
                             does not allow",
                            effects_to_string(&residual),
                            effects_to_string(ambient)
                        ),
                    ));
                }
                let handled_names: BTreeSet<Name> = handled.names().into_iter().collect();
                let pass_through = ambient.difference_by_name(&handled_names);
                let body_ambient = handled.union(&pass_through).map_err(|op| {
                    Diagnostic::error(
                        span,
                        format!("operation {op} has conflicting signatures at this handler"),
                    )
                })?;
                let tb = self.comp_type(ctx, &body_ambient, body)?;
                if !sub_ty(&tb, &value) {
                    return Err(Diagnostic::error(
                        span,
                        format!(
                            "the handled computation has type {} but the handler takes {}",
                            type_to_string(&tb),
                            type_to_string(&value)
                        ),
                    ));
                }
                Ok(result)
            }
            CompKind::Fix { func, param, param_ty, ret_ty, latent, body } => {
                let param_ty = self.import_type(param_ty);
                let ret_ty = self.import_type(ret_ty);
                let latent = self.import_row(latent);
                let self_ty = Type::Arrow {
                    param: Box::new(param_ty.clone()),
                    latent: latent.clone(),
                    grade: None,
                    result: Box::new(ret_ty.clone()),
                };
                ctx.push((*func, self_ty.clone()));
                ctx.push((*param, param_ty));
                let tb = self.comp_type(ctx, &latent, body);
                ctx.pop();
                ctx.pop();
                let tb = tb?;
                if !sub_ty(&tb, &ret_ty) {
                    return Err(Diagnostic::error(
                        span,
                        format!(
                            "the recursive body produces {} but is annotated {}",
                            type_to_string(&tb),
                            type_to_string(&ret_ty)
                        ),
                    ));
                }
                Ok(self_ty)
            }
            CompKind::If { cond, then_c, else_c } => {
                let tc = self.val_type(ctx, cond, span)?;
                if tc != Type::base("Bool") {
                    return Err(Diagnostic::error(
                        span,
                        format!("the condition has type {}, not Bool", type_to_string(&tc)),
                    ));
                }
                let tt = self.comp_type(ctx, ambient, then_c)?;
                let te = self.comp_type(ctx, ambient, else_c)?;
                if !same_ty(&tt, &te) {
                    return Err(Diagnostic::error(
                        span,
                        format!(
                            "the branches disagree: {} versus {}",
                            type_to_string(&tt),
                            type_to_string(&te)
                        ),
                    ));
                }
                Ok(tt)
            }
        }
    }

    fn apply_type(
        &mut self,
        ctx: &mut Ctx,
        ambient: &EffectSet,
        f: &Val,
        a: &Val,
        span: Span,
    ) -> Result<Type, Diagnostic> {
        if let ValKind::Builtin(b) = f.kind() {
            if let Some(bt) = builtin_type(*b) {
                if !matches!(bt, BuiltinType::Mono { .. }) {
                    let ta = self.val_type(ctx, a, span)?;
                    return self.shape_apply(*b, bt, &ta, span);
                }
            }
        }
        let tf = self.val_type(ctx, f, span)?;
        let ta = self.val_type(ctx, a, span)?;
        match tf {
            Type::Arrow { param, latent, result, .. } => {
                if !sub_ty(&ta, &param) {
                    return Err(Diagnostic::error(
                        span,
                        format!(
                            "the function takes {} but the argument has type {}",
                            type_to_string(&param),
                            type_to_string(&ta)
                        ),
                    ));
                }
                if !effect_weaken_check(&latent, ambient) {
                    return Err(Diagnostic::error(
                        span,
                        format!(
                            "calling this function may perform {} but the ambient row is {}",
                            effects_to_string(&latent),
                            effects_to_string(ambient)
                        ),
                    ));
                }
                Ok(*result)
            }
            other => Err(Diagnostic::error(
                span,
                format!("this is not a function; it has type {}", type_to_string(&other)),
            )),
        }
    }

    fn shape_apply(
        &self,
        b: Name,
        bt: &BuiltinType,
        ta: &Type,
        span: Span,
    ) -> Result<Type, Diagnostic> {
        let int = Type::base("Int");
        let real = Type::base("Real");
        let huh = || {
            Diagnostic::error(
                span,
                format!("built-in {b} does not apply to an argument of type {}", type_to_string(ta)),
            )
        };
        match bt {
            BuiltinType::NumBinSame | BuiltinType::NumBinBool => match ta {
                Type::Prod(x, y) if **x == int && **y == int => {
                    Ok(if matches!(bt, BuiltinType::NumBinSame) { int } else { Type::base("Bool") })
                }
                Type::Prod(x, y) if **x == real && **y == real => {
                    Ok(if matches!(bt, BuiltinType::NumBinSame) { real } else { Type::base("Bool") })
                }
                _ => Err(huh()),
            },
            BuiltinType::EqOp => match ta {
                Type::Prod(x, y) if same_ty(x, y) => match **x {
                    Type::Unit | Type::Base(_) => Ok(Type::base("Bool")),
                    _ => Err(Diagnostic::error(
                        span,
                        format!(
                            "eq compares unit and base-type values, not {}",
                            type_to_string(x)
                        ),
                    )),
                },
                _ => Err(huh()),
            },
            BuiltinType::Cons => match ta {
                Type::Prod(head, tail) => match &**tail {
                    Type::List(e) if same_ty(head, e) => Ok((**tail).clone()),
                    _ => Err(huh()),
                },
                _ => Err(huh()),
            },
            BuiltinType::Length => match ta {
                Type::List(_) => Ok(int),
                _ => Err(huh()),
            },
            BuiltinType::Nth => match ta {
                Type::Prod(l, i) if **i == int => match &**l {
                    Type::List(e) => Ok((**e).clone()),
                    _ => Err(huh()),
                },
                _ => Err(huh()),
            },
            BuiltinType::Mono { .. } => unreachable!("mono builtins take the arrow path"),
        }
    }
}

fn scrub(t: &Type) -> Type {
    match t {
        Type::Base(_) | Type::Unit => t.clone(),
        Type::Prod(a, b) => Type::prod(scrub(a), scrub(b)),
        Type::List(e) => Type::list(scrub(e)),
        Type::Arrow { param, result, grade, .. } => Type::Arrow {
            param: Box::new(scrub(param)),
            latent: EffectSet::Any,
            grade: grade.clone(),
            result: Box::new(scrub(result)),
        },
        Type::HandlerArrow { value, result, .. } => Type::HandlerArrow {
            value: Box::new(scrub(value)),
            handled: EffectSet::Any,
            residual: EffectSet::Any,
            result: Box::new(scrub(result)),
        },
    }
}

/// Types the declarations in order, then the main computation (if any) under
/// the given ambient row. Returns main's type.
pub fn check_program(
    prog: &SourceProgram,
    mode: Mode,
    ambient: &EffectSet,
) -> Result<Option<Type>, Vec<Diagnostic>> {
    let mut ck = Checker::new(prog.registry.clone(), mode);
    let mut ctx: Ctx = Vec::new();
    for d in &prog.decls {
        if let Decl::LetVal { name, val, span } = d {
            let t = ck.val_type(&mut ctx, val, *span).map_err(|e| vec![e])?;
            ctx.push((*name, t));
        }
    }
    let ambient = ck.import_row(ambient);
    match &prog.main {
        Some(main) => {
            let t = ck.comp_type(&mut ctx, &ambient, main).map_err(|e| vec![e])?;
            Ok(Some(t))
        }
        None => Ok(None),
    }
}

/// Convenience for tests and tools: type one closed computation.
pub fn type_of_comp(
    reg: &Registry,
    mode: Mode,
    ambient: &EffectSet,
    c: &Comp,
) -> Result<Type, Diagnostic> {
    let mut ck = Checker::new(reg.clone(), mode);
    let mut ctx = Vec::new();
    ck.comp_type(&mut ctx, ambient, c)
}

/// Names an ambient row for the command line: `empty`, `any`, `env`, `rl`,
/// `rl_abs`, `iface_abs`, a literal `{op, op}`, or unions of those with `+`.
pub fn row_spec(reg: &Registry, spec: &str) -> Result<EffectSet, String> {
    let mut reg = reg.clone();
    let mut acc = EffectSet::empty();
    for part in spec.split('+') {
        let part = part.trim();
        let row = match part {
            "empty" | "{}" => EffectSet::empty(),
            "any" => EffectSet::Any,
            "env" => named_row(&mut reg, &["observe", "do"])?,
            "rl" => named_row(&mut reg, &["choice", "reward"])?,
            "rl_abs" => named_row(&mut reg, &["choice_RL", "reward_RL"])?,
            "iface_abs" => named_row(&mut reg, &["observe_RL", "getactions_RL"])?,
            lit if lit.starts_with('{') && lit.ends_with('}') => {
                let inner = &lit[1..lit.len() - 1];
                let names: Vec<&str> = inner
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .collect();
                named_row(&mut reg, &names)?
            }
            other => return Err(format!("unknown effect row '{other}'")),
        };
        acc = acc.union(&row).map_err(|op| format!("conflicting signatures for {op}"))?;
    }
    Ok(acc)
}

fn named_row(reg: &mut Registry, names: &[&str]) -> Result<EffectSet, String> {
    let mut entries = std::collections::BTreeMap::new();
    for n in names {
        let name = Name::new(n);
        let sig = reg
            .op_sig(name, Span::synth())
            .map_err(|d| format!("unknown operation {n}: {}", d.message))?;
        entries.insert(name, sig);
    }
    Ok(EffectSet::Fin(entries))
}
