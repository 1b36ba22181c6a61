//! Shared helpers for the integration tests: a seeded generator of
//! well-typed closed computations, plus a generator of handler-free
//! protocol fragments for the grade tests.
//!
//! The term generator is type-directed. It invents a goal type first and
//! then builds a computation of that type, so everything it emits
//! typechecks by construction; the tests re-check anyway and treat a
//! rejection as a bug in either the generator or the checker. Effect
//! discipline is maintained throughout: every arrow latent row and every
//! handler residual row is a subset of the ambient row it will be used
//! under, so the output is well-typed in effect mode, not just simply.

#![allow(dead_code)]

use leff::ast::{
    Comp, EffectSet, HandlerAscription, HandlerVal, Name, OpClause, Span, Type, Val,
};
use leff::eval::RandomSource;
use leff::registry::Registry;

/// The standard registry with the four abstract carriers pinned to the
/// same concrete types the bandit prelude uses. Resolving them lets the
/// generator build values of every operation's parameter and arity type.
pub fn test_registry() -> Registry {
    let mut reg = Registry::standard();
    let s = Span::synth();
    reg.declare_alias(Name::new("A_E"), Type::base("Int"), s).unwrap();
    reg.declare_alias(Name::new("O_E"), Type::base("Real"), s).unwrap();
    reg.declare_alias(Name::new("A_RL"), Type::base("Int"), s).unwrap();
    reg.declare_alias(Name::new("O_RL"), Type::Unit, s).unwrap();
    reg
}

/// Type declarations matching `test_registry`, for sources that must be
/// parsed from text.
pub const CARRIER_DECLS: &str =
    "type A_E = Int\ntype O_E = Real\ntype A_RL = Int\ntype O_RL = Unit\n";

pub const ALL_OPS: [&str; 8] = [
    "choice",
    "reward",
    "observe",
    "do",
    "choice_RL",
    "reward_RL",
    "observe_RL",
    "getactions_RL",
];

pub struct Gen {
    pub rng: RandomSource,
    pub reg: Registry,
    fresh: u32,
}

impl Gen {
    pub fn new(seed: u64) -> Gen {
        Gen { rng: RandomSource::new(seed), reg: test_registry(), fresh: 0 }
    }

    pub fn fresh(&mut self) -> Name {
        let n = self.fresh;
        self.fresh += 1;
        Name::new(&format!("x{n}"))
    }

    pub fn index(&mut self, n: usize) -> usize {
        if n <= 1 {
            0
        } else {
            self.rng.below(n as i64) as usize
        }
    }

    pub fn flip(&mut self, p: f64) -> bool {
        self.rng.unit() < p
    }

    /// Materializes a row from operation names, with resolved signatures.
    pub fn row(&mut self, names: &[&str]) -> EffectSet {
        let mut entries = Vec::new();
        for n in names {
            let op = Name::new(n);
            let sig = self.reg.op_sig(op, Span::synth()).expect("standard op");
            entries.push((op, sig));
        }
        EffectSet::from_entries(entries)
    }

    /// A random subset of a finite ambient row.
    pub fn sub_row(&mut self, ambient: &EffectSet) -> EffectSet {
        match ambient {
            EffectSet::Any => EffectSet::empty(),
            EffectSet::Fin(m) => {
                let keep: Vec<_> = m
                    .iter()
                    .filter(|_| self.flip(0.5))
                    .map(|(n, s)| (*n, s.clone()))
                    .collect();
                EffectSet::from_entries(keep)
            }
        }
    }

    /// One of a few ambient rows the acceptance populations are drawn
    /// under, from empty up to all eight operations.
    pub fn ambient(&mut self) -> EffectSet {
        match self.index(5) {
            0 => EffectSet::empty(),
            1 => self.row(&["choice", "reward"]),
            2 => self.row(&["do", "observe"]),
            3 => self.row(&["choice", "reward", "do", "observe"]),
            _ => self.row(&ALL_OPS),
        }
    }

    // ===== types =====

    pub fn ty(&mut self, ambient: &EffectSet, depth: usize) -> Type {
        if depth == 0 {
            return match self.index(5) {
                0 => Type::base("Int"),
                1 => Type::base("Real"),
                2 => Type::base("Bool"),
                3 => Type::Unit,
                _ => Type::base("Str"),
            };
        }
        match self.index(8) {
            0 => Type::base("Int"),
            1 => Type::base("Real"),
            2 => Type::base("Bool"),
            3 => Type::Unit,
            4 => Type::base("Str"),
            5 => Type::prod(self.ty(ambient, depth - 1), self.ty(ambient, depth - 1)),
            6 => Type::list(self.ty(ambient, depth - 1)),
            _ => {
                let latent = self.sub_row(ambient);
                Type::arrow(self.ty(ambient, depth - 1), latent, self.ty(ambient, depth - 1))
            }
        }
    }

    // ===== values =====

    pub fn value(
        &mut self,
        ctx: &mut Vec<(Name, Type)>,
        want: &Type,
        depth: usize,
    ) -> Val {
        let hits: Vec<Name> =
            ctx.iter().filter(|(_, t)| t == want).map(|(n, _)| *n).collect();
        if !hits.is_empty() && self.flip(0.45) {
            let i = self.index(hits.len());
            return Val::var(hits[i]);
        }
        match want {
            Type::Unit => Val::unit(),
            Type::Base(b) => match &*b.text() {
                "Int" => {
                    const POOL: [i64; 6] = [0, 1, 2, 3, 7, 41];
                    Val::int(POOL[self.index(POOL.len())])
                }
                "Real" => {
                    const POOL: [f64; 6] = [0.0, 0.5, 1.0, 2.5, 3.25, 10.0];
                    Val::real(POOL[self.index(POOL.len())])
                }
                "Bool" => Val::bool(self.flip(0.5)),
                "Str" => {
                    const POOL: [&str; 4] = ["", "a", "ok", "hi there"];
                    Val::str(POOL[self.index(POOL.len())])
                }
                other => panic!("generator asked for a value of abstract base {other}"),
            },
            Type::Prod(a, b) => {
                let d = depth.saturating_sub(1);
                Val::pair(self.value(ctx, a, d), self.value(ctx, b, d))
            }
            Type::List(t) => Val::nil((**t).clone()),
            Type::Arrow { param, latent, result, .. } => {
                let x = self.fresh();
                ctx.push((x, (**param).clone()));
                let body =
                    self.comp(ctx, &latent.clone(), result, depth.saturating_sub(1));
                ctx.pop();
                Val::lambda(x, (**param).clone(), latent.clone(), body)
            }
            Type::HandlerArrow { .. } => {
                panic!("generator does not make first-class handler values")
            }
        }
    }

    // ===== computations =====

    pub fn comp(
        &mut self,
        ctx: &mut Vec<(Name, Type)>,
        ambient: &EffectSet,
        want: &Type,
        depth: usize,
    ) -> Comp {
        if depth == 0 {
            let v = self.value(ctx, want, 0);
            return Comp::ret(v);
        }

        #[derive(Clone, Copy)]
        enum Arm {
            Ret,
            Let,
            If,
            ApplyLam,
            ApplyCtx,
            Builtin,
            Proj,
            Op,
            Handle,
            Fix,
        }

        let ops = ambient.names();
        let callable: Vec<Name> = ctx
            .iter()
            .filter(|(_, t)| match t {
                Type::Arrow { latent, result, .. } => {
                    **result == *want && leff::ast::effect_weaken_check(latent, ambient)
                }
                _ => false,
            })
            .map(|(n, _)| *n)
            .collect();
        let has_builtin = matches!(want, Type::List(_))
            || matches!(want, Type::Base(b)
                if matches!(&*b.text(), "Int" | "Real" | "Bool"));

        let mut arms: Vec<(Arm, u32)> = vec![
            (Arm::Ret, 1),
            (Arm::Let, 5),
            (Arm::If, 2),
            (Arm::ApplyLam, 3),
            (Arm::Proj, 1),
        ];
        if has_builtin {
            arms.push((Arm::Builtin, 3));
        }
        if !ops.is_empty() {
            arms.push((Arm::Op, 5));
        }
        if depth >= 2 {
            arms.push((Arm::Handle, 2));
        }
        if matches!(want, Type::Arrow { .. }) {
            arms.push((Arm::Fix, 2));
        }
        if !callable.is_empty() {
            arms.push((Arm::ApplyCtx, 3));
        }

        let total: u32 = arms.iter().map(|(_, w)| w).sum();
        let mut roll = self.rng.below(total as i64) as u32;
        let mut chosen = Arm::Ret;
        for (arm, w) in &arms {
            if roll < *w {
                chosen = *arm;
                break;
            }
            roll -= w;
        }

        match chosen {
            Arm::Ret => Comp::ret(self.value(ctx, want, depth - 1)),
            Arm::Let => {
                let th = self.ty(ambient, depth.min(2));
                let head = self.comp(ctx, ambient, &th, depth - 1);
                let x = self.fresh();
                ctx.push((x, th));
                let body = self.comp(ctx, ambient, want, depth - 1);
                ctx.pop();
                Comp::let_in(x, head, body)
            }
            Arm::If => {
                let cond = self.value(ctx, &Type::base("Bool"), 1);
                let then_c = self.comp(ctx, ambient, want, depth - 1);
                let else_c = self.comp(ctx, ambient, want, depth - 1);
                Comp::if_then_else(cond, then_c, else_c)
            }
            Arm::ApplyLam => {
                let param = self.ty(ambient, 1);
                let latent = self.sub_row(ambient);
                let fty = Type::arrow(param.clone(), latent, want.clone());
                let f = self.value(ctx, &fty, depth - 1);
                let a = self.value(ctx, &param, depth - 1);
                Comp::apply(f, a)
            }
            Arm::ApplyCtx => {
                let f = callable[self.index(callable.len())];
                let param = ctx
                    .iter()
                    .find(|(n, _)| *n == f)
                    .and_then(|(_, t)| match t {
                        Type::Arrow { param, .. } => Some((**param).clone()),
                        _ => None,
                    })
                    .expect("callable came from ctx");
                let a = self.value(ctx, &param, depth - 1);
                Comp::apply(Val::var(f), a)
            }
            Arm::Builtin => self.builtin_comp(ctx, want, depth),
            Arm::Proj => {
                let other = self.ty(ambient, 1);
                let first = self.flip(0.5);
                let pty = if first {
                    Type::prod(want.clone(), other)
                } else {
                    Type::prod(other, want.clone())
                };
                let pv = self.value(ctx, &pty, depth - 1);
                let side = if first { leff::ast::Proj::Fst } else { leff::ast::Proj::Snd };
                Comp::project(side, pv)
            }
            Arm::Op => {
                let op = ops[self.index(ops.len())];
                let sig = ambient.get(op).expect("op listed in ambient").clone();
                let arg = self.value(ctx, &sig.param, depth - 1);
                let x = self.fresh();
                ctx.push((x, sig.arity.clone()));
                let cont = self.comp(ctx, ambient, want, depth - 1);
                ctx.pop();
                Comp::op_call(op, arg, x, cont)
            }
            Arm::Handle => self.handle_comp(ctx, ambient, want, depth),
            Arm::Fix => {
                let (param, latent, result) = match want {
                    Type::Arrow { param, latent, result, .. } => {
                        ((**param).clone(), latent.clone(), (**result).clone())
                    }
                    _ => unreachable!("fix arm only offered for arrow goals"),
                };
                let f = self.fresh();
                let x = self.fresh();
                ctx.push((f, want.clone()));
                ctx.push((x, param.clone()));
                let body = self.comp(ctx, &latent, &result, depth - 1);
                ctx.pop();
                ctx.pop();
                Comp::fix(f, x, param, result, latent, body)
            }
        }
    }

    /// A direct application of a shape-matched or curated builtin that
    /// produces the wanted type. Only builtins that cannot fault at
    /// runtime are used: arithmetic wraps, comparisons are total, and
    /// `randomfloat` accepts any real.
    fn builtin_comp(
        &mut self,
        ctx: &mut Vec<(Name, Type)>,
        want: &Type,
        depth: usize,
    ) -> Comp {
        let d = depth.saturating_sub(1);
        let int = Type::base("Int");
        let real = Type::base("Real");
        let boolean = Type::base("Bool");
        let app = |name: &str, arg: Val| Comp::apply(Val::builtin(Name::new(name)), arg);
        let num_pair = |g: &mut Gen, ctx: &mut Vec<(Name, Type)>, t: &Type| {
            let a = g.value(ctx, t, d);
            let b = g.value(ctx, t, d);
            Val::pair(a, b)
        };
        match want {
            Type::Base(b) if &*b.text() == "Int" => match self.index(4) {
                0 => app("plus", num_pair(self, ctx, &int)),
                1 => app("minus", num_pair(self, ctx, &int)),
                2 => app("times", num_pair(self, ctx, &int)),
                _ => {
                    let elem = self.ty(&EffectSet::empty(), 1);
                    let l = self.value(ctx, &Type::list(elem), d);
                    app("length", l)
                }
            },
            Type::Base(b) if &*b.text() == "Real" => match self.index(4) {
                0 => app("plus", num_pair(self, ctx, &real)),
                1 => app("times", num_pair(self, ctx, &real)),
                2 => app("real_of_int", self.value(ctx, &int, d)),
                _ => app("randomfloat", self.value(ctx, &real, d)),
            },
            Type::Base(b) if &*b.text() == "Bool" => match self.index(4) {
                0 => {
                    let t = if self.flip(0.5) { int.clone() } else { real.clone() };
                    let cmp = ["lt", "leq", "gt", "geq"][self.index(4)];
                    app(cmp, num_pair(self, ctx, &t))
                }
                1 => {
                    let t = match self.index(4) {
                        0 => int.clone(),
                        1 => boolean.clone(),
                        2 => Type::base("Str"),
                        _ => Type::Unit,
                    };
                    app("eq", num_pair(self, ctx, &t))
                }
                2 => app("not", self.value(ctx, &boolean, d)),
                _ => {
                    let gate = if self.flip(0.5) { "and" } else { "or" };
                    app(gate, num_pair(self, ctx, &boolean))
                }
            },
            Type::List(t) => {
                let head = self.value(ctx, t, d);
                let tail = self.value(ctx, &Type::list((**t).clone()), d);
                app("cons", Val::pair(head, tail))
            }
            _ => Comp::ret(self.value(ctx, want, d)),
        }
    }

    /// A `with H handle body` computation. Handled operations all get
    /// clauses, the residual row is a subset of the ambient row, and the
    /// body is generated under the pass-through ambient the checker uses.
    fn handle_comp(
        &mut self,
        ctx: &mut Vec<(Name, Type)>,
        ambient: &EffectSet,
        want: &Type,
        depth: usize,
    ) -> Comp {
        let mut picked: Vec<&str> = Vec::new();
        let first = ALL_OPS[self.index(ALL_OPS.len())];
        picked.push(first);
        if self.flip(0.4) {
            let second = ALL_OPS[self.index(ALL_OPS.len())];
            if second != first {
                picked.push(second);
            }
        }
        let handled = self.row(&picked);
        let residual = self.sub_row(ambient);

        let handled_names = handled.names().into_iter().collect();
        let pass = ambient.difference_by_name(&handled_names);
        let body_ambient = handled.union(&pass).expect("one registry, no clashes");

        let value_ty = self.ty(&body_ambient, depth.min(2) - 1);
        let body = self.comp(ctx, &body_ambient, &value_ty, depth - 1);

        let ret_param = self.fresh();
        ctx.push((ret_param, value_ty.clone()));
        let ret_body = self.comp(ctx, &residual, want, depth.min(2) - 1);
        ctx.pop();

        let mut clauses = Vec::new();
        for op in handled.names() {
            let sig = handled.get(op).expect("just listed").clone();
            let p = self.fresh();
            let k = self.fresh();
            let k_ty = Type::arrow(sig.arity.clone(), residual.clone(), want.clone());
            ctx.push((p, sig.param.clone()));
            ctx.push((k, k_ty));
            let body = match self.index(10) {
                0..=4 => {
                    let v = self.value(ctx, &sig.arity, 1);
                    Comp::apply(Val::var(k), v)
                }
                5 | 6 => {
                    let v1 = self.value(ctx, &sig.arity, 1);
                    let v2 = self.value(ctx, &sig.arity, 1);
                    let y = self.fresh();
                    Comp::let_in(
                        y,
                        Comp::apply(Val::var(k), v1),
                        Comp::apply(Val::var(k), v2),
                    )
                }
                _ => self.comp(ctx, &residual.clone(), want, depth.min(2) - 1),
            };
            ctx.pop();
            ctx.pop();
            clauses.push(OpClause { op, param: p, k, body });
        }

        let h = HandlerVal {
            ret_param,
            ret_body,
            clauses,
            ascription: HandlerAscription {
                value_ty,
                handled,
                residual,
                result_ty: want.clone(),
            },
        };
        Comp::handle(Val::handler(h), body)
    }

    /// Entry point: a closed computation and its goal type, generated
    /// under the given ambient row.
    pub fn closed_comp(&mut self, ambient: &EffectSet, depth: usize) -> (Comp, Type) {
        let want = self.ty(ambient, 2);
        let mut ctx = Vec::new();
        let c = self.comp(&mut ctx, ambient, &want, depth);
        assert!(ctx.is_empty(), "generator leaked context entries");
        (c, want)
    }

    // ===== handler-free protocol fragments for the grade tests =====

    /// A closed, handler-free computation over the environment protocol
    /// operations. Some outputs follow the choice-do-reward discipline and
    /// some break it on purpose; callers filter with the grader.
    pub fn protocol_fragment(&mut self) -> Comp {
        let segments = 1 + self.index(3);
        let mut body = Comp::ret(Val::unit());
        for _ in 0..segments {
            let seg = match self.index(10) {
                0..=4 => self.round_segment(),
                5 | 6 => self.act_only_segment(),
                7 => self.loop_segment(),
                8 => self.branch_segment(),
                _ => self.broken_segment(),
            };
            let x = self.fresh();
            body = Comp::let_in(x, seg, body);
        }
        body
    }

    /// One full protocol round: pick, act on the picked action, collect a
    /// reward, sometimes observing along the way. Grades to the unit word.
    fn round_segment(&mut self) -> Comp {
        let a = self.fresh();
        let o = self.fresh();
        let u1 = self.fresh();
        let u2 = self.fresh();
        let reward_arg =
            if self.flip(0.5) { Val::var(o) } else { Val::real(1.0) };
        let mut tail = Comp::ret(Val::unit());
        tail = Comp::op_call(Name::new("reward"), reward_arg, u2, tail);
        tail = Comp::op_call(Name::new("observe"), Val::unit(), o, tail);
        tail = Comp::op_call(Name::new("do"), Val::var(a), u1, tail);
        Comp::op_call(Name::new("choice"), Val::unit(), a, tail)
    }

    /// A bare run of `do` calls, one to three of them. Grades to a power
    /// of D, which a whole program is allowed to leave over.
    fn act_only_segment(&mut self) -> Comp {
        let n = 1 + self.index(3);
        let mut c = Comp::ret(Val::unit());
        for _ in 0..n {
            let u = self.fresh();
            c = Comp::op_call(Name::new("do"), Val::int(0), u, c);
        }
        c
    }

    /// A counted loop whose body is one full round. The loop itself
    /// grades to D^*.
    fn loop_segment(&mut self) -> Comp {
        let go = self.fresh();
        let n = self.fresh();
        let b = self.fresh();
        let m = self.fresh();
        let f = self.fresh();
        let u = self.fresh();
        let round = self.round_segment();
        let rec = Comp::let_in(
            u,
            round,
            Comp::let_in(
                m,
                Comp::apply(
                    Val::builtin(Name::new("minus")),
                    Val::pair(Val::var(n), Val::int(1)),
                ),
                Comp::apply(Val::var(go), Val::var(m)),
            ),
        );
        let body = Comp::let_in(
            b,
            Comp::apply(Val::builtin(Name::new("eq")), Val::pair(Val::var(n), Val::int(0))),
            Comp::if_then_else(Val::var(b), Comp::ret(Val::unit()), rec),
        );
        let row = self.row(&["choice", "reward", "do", "observe"]);
        let loop_fix =
            Comp::fix(go, n, Type::base("Int"), Type::Unit, row, body);
        let iters = 1 + self.index(3) as i64;
        Comp::let_in(f, loop_fix, Comp::apply(Val::var(f), Val::int(iters)))
    }

    /// A branch whose arms both stay inside the acting sublanguage, with
    /// possibly different numbers of `do` calls.
    fn branch_segment(&mut self) -> Comp {
        let then_c = self.act_only_segment();
        let else_c = self.act_only_segment();
        Comp::if_then_else(Val::bool(self.flip(0.5)), then_c, else_c)
    }

    /// A deliberate protocol break: rewarding before acting, or picking
    /// without following through.
    fn broken_segment(&mut self) -> Comp {
        if self.flip(0.5) {
            let a = self.fresh();
            let u1 = self.fresh();
            let u2 = self.fresh();
            let mut tail = Comp::ret(Val::unit());
            tail = Comp::op_call(Name::new("do"), Val::var(a), u2, tail);
            tail = Comp::op_call(Name::new("reward"), Val::real(1.0), u1, tail);
            Comp::op_call(Name::new("choice"), Val::unit(), a, tail)
        } else {
            let a = self.fresh();
            Comp::op_call(Name::new("choice"), Val::unit(), a, Comp::ret(Val::unit()))
        }
    }
}

/// Wraps a computation as a parseable program over the pinned carriers.
pub fn program_source(c: &Comp) -> String {
    format!("{CARRIER_DECLS}\nmain =\n  {}\n", leff::pretty::comp_to_string(c))
}

/// The tally of a completed preservation walk.
pub struct Walk {
    pub steps: usize,
    /// Operations that surfaced unhandled, in order; each was checked
    /// against the ambient row and then resumed with a default value.
    pub surfaced: Vec<Name>,
    /// Whether the walk reached a value (as opposed to hitting the cap).
    pub finished: bool,
}

/// Steps a computation at most `cap` times, re-typing the whole term after
/// every step and demanding the type never moves (up to mutual subtyping,
/// which is how `[any]` rows introduced by the machine stay comparable).
/// Operations that reach the top must sit inside the ambient row; they are
/// resumed with a default value of their arity type, which by the
/// substitution lemma must also leave the type alone, and the walk goes on.
pub fn preservation_walk(
    reg: &Registry,
    mode: leff::check::Mode,
    ambient: &EffectSet,
    c: &Comp,
    seed: u64,
    cap: usize,
) -> Result<Walk, String> {
    use leff::check::{sub_ty, type_of_comp};
    use leff::eval::{default_value_of, Evaluator, Step};
    use leff::pretty::type_to_string;

    let t0 = type_of_comp(reg, mode, ambient, c)
        .map_err(|d| format!("the starting term does not check: {d}"))?;
    let mut sigs = reg.clone();
    let mut ev = Evaluator::new(reg.clone(), seed);
    let mut cur = c.clone();
    let mut surfaced = Vec::new();
    let recheck = |i: usize, next: &Comp| -> Result<(), String> {
        let t = type_of_comp(reg, mode, ambient, next)
            .map_err(|d| format!("after step {i} the term no longer checks: {d}"))?;
        if !(sub_ty(&t, &t0) && sub_ty(&t0, &t)) {
            return Err(format!(
                "step {i} changed the type from {} to {}",
                type_to_string(&t0),
                type_to_string(&t)
            ));
        }
        Ok(())
    };
    for i in 0..cap {
        match ev.step(&cur) {
            Ok(Step::Reduced(next)) => {
                recheck(i, &next)?;
                cur = next;
            }
            Ok(Step::Done(_)) => {
                return Ok(Walk { steps: i, surfaced, finished: true })
            }
            Ok(Step::Blocked) => {
                let (op, arg_ok, bound, cont) = match cur.kind() {
                    leff::ast::CompKind::OpCall { op, arg, bound, cont } => {
                        (*op, arg.free_vars().is_empty(), *bound, cont.clone())
                    }
                    _ => unreachable!("blocked on a non-operation"),
                };
                if !ambient.is_any() && !ambient.contains(op) {
                    return Err(format!("{op} surfaced outside the ambient row"));
                }
                assert!(arg_ok, "a surfaced operation carried an open argument");
                surfaced.push(op);
                let sig = sigs
                    .op_sig(op, leff::ast::Span::synth())
                    .map_err(|d| format!("no signature for surfaced {op}: {d}"))?;
                let v = default_value_of(&sig.arity)
                    .ok_or_else(|| format!("no default value to resume {op}"))?;
                let next = leff::ast::substitute_comp(&cont, bound, &v);
                recheck(i, &next)?;
                cur = next;
            }
            Err(e) => return Err(format!("runtime fault on a well-typed term: {e}")),
        }
    }
    Ok(Walk { steps: cap, surfaced, finished: false })
}

/// Runs one job per seed across the available cores and collects results
/// in seed order.
pub fn fan_out<T, F>(seeds: &[u64], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(4);
    let chunk = seeds.len().div_ceil(workers).max(1);
    let mut out: Vec<Option<T>> = Vec::new();
    out.resize_with(seeds.len(), || None);
    let f = &f;
    std::thread::scope(|scope| {
        for (sc, oc) in seeds.chunks(chunk).zip(out.chunks_mut(chunk)) {
            scope.spawn(move || {
                for (seed, slot) in sc.iter().zip(oc.iter_mut()) {
                    *slot = Some(f(*seed));
                }
            });
        }
    });
    out.into_iter().map(|o| o.expect("every slot filled")).collect()
}
