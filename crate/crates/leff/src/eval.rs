//! Small-step evaluation.
//!
//! The evaluation spine never crosses a binder: a step happens at the top of
//! the term, inside a let head, or inside a handled body, so every redex is
//! as closed as the term it sits in. Operation calls do not step on their
//! own; they bubble up through let (commuting past the binding) until a
//! handler with a matching clause catches them, or they reach the top, where
//! the whole computation is stuck on that operation and the caller decides
//! what to do about it.
//!
//! Two failure channels are kept apart. `TypeFault` marks configurations a
//! well-typed program can never reach (projecting from a non-pair, applying
//! an integer); hitting one in a checked program is a bug in this crate, and
//! the progress property test hunts for exactly that. `Failure` is honest
//! runtime failure from partial built-ins: an out-of-range list index, a
//! non-positive bound for `randomint`, or an explicit `fail_real` /
//! `fail_unit` call.

use crate::ast::*;
use crate::registry::Registry;

/// Deterministic generator behind `randomfloat` and `randomint`.
///
/// splitmix64: one addition and two xor-multiply rounds per draw. Every
/// consumer of randomness in this crate, including the native bandit oracle,
/// draws from this same sequence, so traces line up bit for bit across
/// implementations as long as the draw order matches.
#[derive(Clone, Debug)]
pub struct RandomSource {
    state: u64,
}

impl RandomSource {
    pub fn new(seed: u64) -> RandomSource {
        RandomSource { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1), using the top 53 bits.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [0, n). The caller guarantees n > 0.
    pub fn below(&mut self, n: i64) -> i64 {
        (self.next_u64() % n as u64) as i64
    }
}

#[derive(Clone, Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{span}: error: {message}")]
    TypeFault { span: Span, message: String },
    #[error("{span}: error: {message}")]
    Failure { span: Span, message: String },
}

fn fault(span: Span, message: impl Into<String>) -> EvalError {
    EvalError::TypeFault { span, message: message.into() }
}

fn failure(span: Span, message: impl Into<String>) -> EvalError {
    EvalError::Failure { span, message: message.into() }
}

/// One step of the machine.
pub enum Step {
    Reduced(Comp),
    /// The term was `return V`.
    Done(Val),
    /// The term was an operation call with no handler around it.
    Blocked,
}

/// Where a run ended up.
#[derive(Clone, Debug)]
pub enum Outcome {
    Value(Val),
    /// An unhandled operation reached the top. `cont` still binds `bound`.
    Stuck { op: Name, arg: Val, bound: Name, cont: Comp },
    FuelExhausted(Comp),
}

/// A handler clause fired on this operation with this argument.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceEvent {
    pub op: Name,
    pub arg: Val,
}

pub struct Evaluator {
    reg: Registry,
    pub rng: RandomSource,
    pub trace: Vec<TraceEvent>,
    /// Steps taken across all `evaluate` calls.
    pub steps: u64,
}

impl Evaluator {
    pub fn new(reg: Registry, seed: u64) -> Evaluator {
        Evaluator { reg, rng: RandomSource::new(seed), trace: Vec::new(), steps: 0 }
    }

    pub fn take_trace(&mut self) -> Vec<TraceEvent> {
        std::mem::take(&mut self.trace)
    }

    pub fn step(&mut self, c: &Comp) -> Result<Step, EvalError> {
        let span = c.span();
        match c.kind() {
            CompKind::Return(v) => Ok(Step::Done(v.clone())),
            CompKind::Project(p, v) => match v.kind() {
                ValKind::Pair(a, b) => {
                    let picked = match p {
                        Proj::Fst => a,
                        Proj::Snd => b,
                    };
                    Ok(Step::Reduced(Comp::ret_at(picked.clone(), span)))
                }
                _ => Err(fault(span, "projection from a non-pair")),
            },
            CompKind::OpCall { .. } => Ok(Step::Blocked),
            CompKind::Let { bound, head, body } => match head.kind() {
                CompKind::Return(v) => Ok(Step::Reduced(substitute_comp(body, *bound, v))),
                CompKind::OpCall { op, arg, bound: y, cont } => {
                    // commute the call past the binding, renaming its bound
                    // variable if the body would capture it
                    let (y, cont) = if *y != *bound && body.fv().contains(y) {
                        let mut avoid = (**cont.fv()).clone();
                        avoid.extend(body.fv().iter().copied());
                        avoid.insert(*bound);
                        let y2 = fresh_name(*y, &avoid);
                        (y2, substitute_comp(cont, *y, &Val::var(y2)))
                    } else {
                        (*y, cont.clone())
                    };
                    let inner = Comp::let_in_at(*bound, cont, body.clone(), span);
                    Ok(Step::Reduced(Comp::op_call_at(*op, arg.clone(), y, inner, span)))
                }
                _ => match self.step(head)? {
                    Step::Reduced(h) => {
                        Ok(Step::Reduced(Comp::let_in_at(*bound, h, body.clone(), span)))
                    }
                    Step::Done(_) | Step::Blocked => {
                        unreachable!("return and op heads are handled above")
                    }
                },
            },
            CompKind::Apply(f, a) => match f.kind() {
                ValKind::Lambda { param, body, .. } => {
                    Ok(Step::Reduced(substitute_comp(body, *param, a)))
                }
                ValKind::Builtin(b) => {
                    let v = self.apply_builtin(*b, a, span)?;
                    Ok(Step::Reduced(Comp::ret_at(v, span)))
                }
                _ => Err(fault(span, "applied a value that is not a function")),
            },
            CompKind::Handle { handler, body } => {
                let h = match handler.kind() {
                    ValKind::Handler(h) => h,
                    _ => return Err(fault(span, "'with ... handle' on a non-handler")),
                };
                match body.kind() {
                    CompKind::Return(v) => {
                        Ok(Step::Reduced(substitute_comp(&h.ret_body, h.ret_param, v)))
                    }
                    CompKind::OpCall { op, arg, bound: y, cont } => {
                        match h.clauses.iter().find(|cl| cl.op == *op) {
                            Some(cl) => {
                                self.trace.push(TraceEvent { op: *op, arg: arg.clone() });
                                let resumed =
                                    Comp::handle_at(handler.clone(), cont.clone(), span);
                                let k_fun = Val::lambda(
                                    *y,
                                    self.arity_of(h, *op, span)?,
                                    EffectSet::Any,
                                    resumed,
                                );
                                let step1 = substitute_comp(&cl.body, cl.param, arg);
                                Ok(Step::Reduced(substitute_comp(&step1, cl.k, &k_fun)))
                            }
                            None => {
                                // forward past this handler
                                let (y, cont) = if handler.fv().contains(y) {
                                    let mut avoid = (**cont.fv()).clone();
                                    avoid.extend(handler.fv().iter().copied());
                                    let y2 = fresh_name(*y, &avoid);
                                    (y2, substitute_comp(cont, *y, &Val::var(y2)))
                                } else {
                                    (*y, cont.clone())
                                };
                                let inner = Comp::handle_at(handler.clone(), cont, span);
                                Ok(Step::Reduced(Comp::op_call_at(
                                    *op,
                                    arg.clone(),
                                    y,
                                    inner,
                                    span,
                                )))
                            }
                        }
                    }
                    _ => match self.step(body)? {
                        Step::Reduced(b) => {
                            Ok(Step::Reduced(Comp::handle_at(handler.clone(), b, span)))
                        }
                        Step::Done(_) | Step::Blocked => {
                            unreachable!("return and op bodies are handled above")
                        }
                    },
                }
            }
            CompKind::Fix { func, param, param_ty, ret_ty, latent, body } => {
                // unfold once, lazily: the self-reference becomes an
                // eta-wrapper that re-enters this fix when finally applied
                let z = fresh_name(Name::new("z"), body.fv());
                let g = fresh_name(Name::new("g"), body.fv());
                let rewrap = Val::lambda(
                    z,
                    param_ty.clone(),
                    latent.clone(),
                    Comp::let_in(
                        g,
                        Comp::fix_at(
                            *func,
                            *param,
                            param_ty.clone(),
                            ret_ty.clone(),
                            latent.clone(),
                            body.clone(),
                            span,
                        ),
                        Comp::apply(Val::var(g), Val::var(z)),
                    ),
                );
                let unfolded = substitute_comp(body, *func, &rewrap);
                Ok(Step::Reduced(Comp::ret_at(
                    Val::lambda(*param, param_ty.clone(), latent.clone(), unfolded),
                    span,
                )))
            }
            CompKind::If { cond, then_c, else_c } => match cond.kind() {
                ValKind::Const(Constant::Bool(true)) => Ok(Step::Reduced(then_c.clone())),
                ValKind::Const(Constant::Bool(false)) => Ok(Step::Reduced(else_c.clone())),
                _ => Err(fault(span, "the condition of an if is not a boolean")),
            },
        }
    }

    fn arity_of(&mut self, h: &HandlerVal, op: Name, span: Span) -> Result<Type, EvalError> {
        if let Some(sig) = h.ascription.handled.get(op) {
            return Ok(sig.arity.clone());
        }
        self.reg
            .op_sig(op, span)
            .map(|sig| sig.arity)
            .map_err(|d| fault(d.span, d.message))
    }

    /// Runs for at most `fuel` steps.
    pub fn evaluate(&mut self, c: &Comp, fuel: u64) -> Result<Outcome, EvalError> {
        let mut cur = c.clone();
        for _ in 0..fuel {
            match self.step(&cur)? {
                Step::Reduced(next) => {
                    self.steps += 1;
                    cur = next;
                }
                Step::Done(v) => return Ok(Outcome::Value(v)),
                Step::Blocked => {
                    if let CompKind::OpCall { op, arg, bound, cont } = cur.kind() {
                        return Ok(Outcome::Stuck {
                            op: *op,
                            arg: arg.clone(),
                            bound: *bound,
                            cont: cont.clone(),
                        });
                    }
                    unreachable!("blocked on a non-op");
                }
            }
        }
        Ok(Outcome::FuelExhausted(cur))
    }

    fn apply_builtin(&mut self, b: Name, arg: &Val, span: Span) -> Result<Val, EvalError> {
        let text = b.text();
        let int_pair = |v: &Val| -> Option<(i64, i64)> {
            match v.kind() {
                ValKind::Pair(a, b) => match (a.kind(), b.kind()) {
                    (
                        ValKind::Const(Constant::Int(x)),
                        ValKind::Const(Constant::Int(y)),
                    ) => Some((*x, *y)),
                    _ => None,
                },
                _ => None,
            }
        };
        let real_pair = |v: &Val| -> Option<(f64, f64)> {
            match v.kind() {
                ValKind::Pair(a, b) => match (a.kind(), b.kind()) {
                    (
                        ValKind::Const(Constant::Real(x)),
                        ValKind::Const(Constant::Real(y)),
                    ) => Some((*x, *y)),
                    _ => None,
                },
                _ => None,
            }
        };
        let bad = || fault(span, format!("built-in {b} applied to an ill-shaped argument"));
        match &*text {
            "plus" | "minus" | "times" => {
                if let Some((x, y)) = int_pair(arg) {
                    let r = match &*text {
                        "plus" => x.wrapping_add(y),
                        "minus" => x.wrapping_sub(y),
                        _ => x.wrapping_mul(y),
                    };
                    Ok(Val::int(r))
                } else if let Some((x, y)) = real_pair(arg) {
                    let r = match &*text {
                        "plus" => x + y,
                        "minus" => x - y,
                        _ => x * y,
                    };
                    Ok(Val::real(r))
                } else {
                    Err(bad())
                }
            }
            "div" => {
                let (x, y) = real_pair(arg).ok_or_else(bad)?;
                Ok(Val::real(x / y))
            }
            "lt" | "leq" | "gt" | "geq" => {
                let verdict = if let Some((x, y)) = int_pair(arg) {
                    match &*text {
                        "lt" => x < y,
                        "leq" => x <= y,
                        "gt" => x > y,
                        _ => x >= y,
                    }
                } else if let Some((x, y)) = real_pair(arg) {
                    match &*text {
                        "lt" => x < y,
                        "leq" => x <= y,
                        "gt" => x > y,
                        _ => x >= y,
                    }
                } else {
                    return Err(bad());
                };
                Ok(Val::bool(verdict))
            }
            "eq" => match arg.kind() {
                ValKind::Pair(a, b) => Ok(Val::bool(base_equal(a, b).ok_or_else(bad)?)),
                _ => Err(bad()),
            },
            "not" => match arg.kind() {
                ValKind::Const(Constant::Bool(x)) => Ok(Val::bool(!x)),
                _ => Err(bad()),
            },
            "and" | "or" => match arg.kind() {
                ValKind::Pair(a, b) => match (a.kind(), b.kind()) {
                    (
                        ValKind::Const(Constant::Bool(x)),
                        ValKind::Const(Constant::Bool(y)),
                    ) => Ok(Val::bool(if &*text == "and" { *x && *y } else { *x || *y })),
                    _ => Err(bad()),
                },
                _ => Err(bad()),
            },
            "real_of_int" => match arg.kind() {
                ValKind::Const(Constant::Int(x)) => Ok(Val::real(*x as f64)),
                _ => Err(bad()),
            },
            "cons" => match arg.kind() {
                ValKind::Pair(head, tail) => match tail.kind() {
                    ValKind::Nil { .. } | ValKind::ConsCell(..) => {
                        Ok(Val::cons_cell(head.clone(), tail.clone()))
                    }
                    _ => Err(bad()),
                },
                _ => Err(bad()),
            },
            "length" => {
                let mut n: i64 = 0;
                let mut cur = arg.clone();
                loop {
                    match cur.kind() {
                        ValKind::Nil { .. } => return Ok(Val::int(n)),
                        ValKind::ConsCell(_, tail) => {
                            n += 1;
                            cur = tail.clone();
                        }
                        _ => return Err(bad()),
                    }
                }
            }
            "nth" => match arg.kind() {
                ValKind::Pair(list, idx) => {
                    let i = match idx.kind() {
                        ValKind::Const(Constant::Int(i)) => *i,
                        _ => return Err(bad()),
                    };
                    let mut remaining = i;
                    let mut cur = list.clone();
                    loop {
                        match cur.kind() {
                            ValKind::ConsCell(head, tail) => {
                                if remaining == 0 {
                                    return Ok(head.clone());
                                }
                                remaining -= 1;
                                cur = tail.clone();
                            }
                            ValKind::Nil { .. } => {
                                return Err(failure(
                                    span,
                                    format!("nth: index {i} is out of range"),
                                ))
                            }
                            _ => return Err(bad()),
                        }
                    }
                }
                _ => Err(bad()),
            },
            "randomfloat" => match arg.kind() {
                ValKind::Const(Constant::Real(b)) => Ok(Val::real(self.rng.unit() * b)),
                _ => Err(bad()),
            },
            "randomint" => match arg.kind() {
                ValKind::Const(Constant::Int(n)) => {
                    if *n <= 0 {
                        Err(failure(span, format!("randomint: bound {n} is not positive")))
                    } else {
                        Ok(Val::int(self.rng.below(*n)))
                    }
                }
                _ => Err(bad()),
            },
            "fail_real" | "fail_unit" => match arg.kind() {
                ValKind::Const(Constant::Str(s)) => Err(failure(span, s.to_string())),
                _ => Err(bad()),
            },
            _ => Err(fault(span, format!("unknown built-in {b}"))),
        }
    }
}

/// Equality on unit and base-type values; None when the shapes do not
/// support it.
fn base_equal(a: &Val, b: &Val) -> Option<bool> {
    match (a.kind(), b.kind()) {
        (ValKind::Unit, ValKind::Unit) => Some(true),
        (ValKind::Const(x), ValKind::Const(y)) => match (x, y) {
            (Constant::Int(i), Constant::Int(j)) => Some(i == j),
            (Constant::Real(i), Constant::Real(j)) => Some(i == j),
            (Constant::Bool(i), Constant::Bool(j)) => Some(i == j),
            (Constant::Str(i), Constant::Str(j)) => Some(i == j),
            (
                Constant::Declared { name: i, .. },
                Constant::Declared { name: j, .. },
            ) => Some(i == j),
            _ => None,
        },
        _ => None,
    }
}

/// A placeholder value of the given type, used when a test driver resumes a
/// computation that is stuck on an unhandled operation.
pub fn default_value_of(t: &Type) -> Option<Val> {
    match t {
        Type::Unit => Some(Val::unit()),
        Type::Base(n) => match &*n.text() {
            "Int" => Some(Val::int(0)),
            "Real" => Some(Val::real(0.0)),
            "Bool" => Some(Val::bool(true)),
            "Str" => Some(Val::str("")),
            _ => None,
        },
        Type::Prod(a, b) => Some(Val::pair(default_value_of(a)?, default_value_of(b)?)),
        Type::List(e) => Some(Val::nil((**e).clone())),
        Type::Arrow { .. } | Type::HandlerArrow { .. } => None,
    }
}

/// Runs a computation, resuming every unhandled operation with a default
/// value of its arity type, and returns the sequence of operations in the
/// order they surfaced plus the final value (None when fuel ran out).
pub fn run_with_defaults(
    reg: &Registry,
    c: &Comp,
    seed: u64,
    fuel: u64,
) -> Result<(Vec<Name>, Option<Val>), EvalError> {
    let mut ev = Evaluator::new(reg.clone(), seed);
    let mut reg = reg.clone();
    let mut performed = Vec::new();
    let mut cur = c.clone();
    let mut budget = fuel;
    loop {
        match ev.evaluate(&cur, budget)? {
            Outcome::Value(v) => return Ok((performed, Some(v))),
            Outcome::FuelExhausted(_) => return Ok((performed, None)),
            Outcome::Stuck { op, bound, cont, .. } => {
                performed.push(op);
                if performed.len() as u64 >= budget {
                    return Ok((performed, None));
                }
                budget -= 1;
                let sig = reg.op_sig(op, cont.span()).map_err(|d| EvalError::TypeFault {
                    span: d.span,
                    message: d.message,
                })?;
                let v = default_value_of(&sig.arity).ok_or_else(|| {
                    fault(cont.span(), format!("no default value for resuming {op}"))
                })?;
                cur = substitute_comp(&cont, bound, &v);
            }
        }
    }
}
