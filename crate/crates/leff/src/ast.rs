//! Core term and type representation.
//!
//! The language is fine-grain call-by-value: values (`Val`) never reduce and
//! computations (`Comp`) reduce by exactly one rule at a time. Terms are
//! immutable trees behind `Arc`, so sharing a subterm is a pointer bump and
//! the whole tree is safe to send across threads. Every node caches its free
//! variable set; `substitute` uses the cache to return shared subtrees
//! untouched when the substituted variable does not occur, which is what
//! keeps the evaluator usable on long runs.
//!
//! Binder names are kept (no de Bruijn indices in the working representation;
//! an index-based oracle lives in the test suite). `alpha_equal` compares
//! terms up to consistent renaming of bound names.

use once_cell::sync::Lazy;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

// ===== names =====

/// Interned identifier. Equality and ordering are by intern id, which is
/// stable within a process; anything printed for the outside world goes
/// through the text, never the id.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name(u32);

struct Interner {
    texts: Vec<Arc<str>>,
    ids: HashMap<Arc<str>, u32>,
}

static INTERNER: Lazy<Mutex<Interner>> = Lazy::new(|| {
    Mutex::new(Interner { texts: Vec::new(), ids: HashMap::new() })
});

impl Name {
    pub fn new(text: &str) -> Name {
        let mut int = INTERNER.lock().unwrap();
        if let Some(&id) = int.ids.get(text) {
            return Name(id);
        }
        let id = int.texts.len() as u32;
        let arc: Arc<str> = Arc::from(text);
        int.texts.push(arc.clone());
        int.ids.insert(arc, id);
        Name(id)
    }

    pub fn text(&self) -> Arc<str> {
        INTERNER.lock().unwrap().texts[self.0 as usize].clone()
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.text())
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.text())
    }
}

/// A name guaranteed not to occur in `avoid`, derived from `base` by
/// appending `%n` for the smallest workable `n`. Deterministic in its inputs.
pub fn fresh_name(base: Name, avoid: &BTreeSet<Name>) -> Name {
    let text = base.text();
    let stem = match text.find('%') {
        Some(i) => &text[..i],
        None => &text[..],
    };
    let stem = if stem.is_empty() { "x" } else { stem };
    for n in 1.. {
        let candidate = Name::new(&format!("{stem}%{n}"));
        if !avoid.contains(&candidate) {
            return candidate;
        }
    }
    unreachable!()
}

// ===== source positions =====

/// Line/column of the token that started a construct; 1-based. Synthetic
/// nodes built by the evaluator carry `Span::synth()`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn synth() -> Span {
        Span { line: 0, col: 0 }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

// ===== grades =====

/// Letter of the operation-order monoid. `grade` is the module that gives
/// these meaning; the letters live here because arrow types may carry a
/// latent-grade annotation.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GradeLetter {
    C,
    D,
    R,
}

// ===== effect rows and types =====

/// Finite operation set, or the distinguished unconstrained set used by
/// simple-mode typing (and by effect annotations that opt out of tracking).
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum EffectSet {
    Any,
    Fin(BTreeMap<Name, OpSig>),
}

/// Parameter and arity type of one operation, `op : param ~> arity`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OpSig {
    pub param: Type,
    pub arity: Type,
}

impl EffectSet {
    pub fn empty() -> EffectSet {
        EffectSet::Fin(BTreeMap::new())
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (Name, OpSig)>) -> EffectSet {
        EffectSet::Fin(entries.into_iter().collect())
    }

    pub fn is_any(&self) -> bool {
        matches!(self, EffectSet::Any)
    }

    pub fn get(&self, op: Name) -> Option<&OpSig> {
        match self {
            EffectSet::Any => None,
            EffectSet::Fin(m) => m.get(&op),
        }
    }

    pub fn contains(&self, op: Name) -> bool {
        match self {
            EffectSet::Any => true,
            EffectSet::Fin(m) => m.contains_key(&op),
        }
    }

    /// Union of two sets. A clash (same name, different signature) is
    /// reported to the caller; `Any` absorbs everything.
    pub fn union(&self, other: &EffectSet) -> Result<EffectSet, Name> {
        match (self, other) {
            (EffectSet::Any, _) | (_, EffectSet::Any) => Ok(EffectSet::Any),
            (EffectSet::Fin(a), EffectSet::Fin(b)) => {
                let mut out = a.clone();
                for (name, sig) in b {
                    match out.get(name) {
                        Some(existing) if existing != sig => return Err(*name),
                        _ => {
                            out.insert(*name, sig.clone());
                        }
                    }
                }
                Ok(EffectSet::Fin(out))
            }
        }
    }

    /// Entries of `self` that are not named in `minus`.
    pub fn difference_by_name(&self, minus: &BTreeSet<Name>) -> EffectSet {
        match self {
            EffectSet::Any => EffectSet::Any,
            EffectSet::Fin(m) => EffectSet::Fin(
                m.iter()
                    .filter(|(name, _)| !minus.contains(name))
                    .map(|(n, s)| (*n, s.clone()))
                    .collect(),
            ),
        }
    }

    pub fn names(&self) -> Vec<Name> {
        match self {
            EffectSet::Any => Vec::new(),
            EffectSet::Fin(m) => m.keys().copied().collect(),
        }
    }
}

/// Whether a computation typed under `small` may run under `big`.
/// Finite sets weaken by entrywise-equal inclusion. The unconstrained set is
/// compatible in both directions: it is how simple-mode typing and
/// effect-opted-out annotations say "not tracked here".
pub fn effect_weaken_check(small: &EffectSet, big: &EffectSet) -> bool {
    match (small, big) {
        (EffectSet::Any, _) | (_, EffectSet::Any) => true,
        (EffectSet::Fin(a), EffectSet::Fin(b)) => a
            .iter()
            .all(|(name, sig)| b.get(name).is_some_and(|other| other == sig)),
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Type {
    /// Named base type (Bool, Int, Real, Str, A_E, O_E, A_RL, O_RL, or a
    /// declared one). Aliases are resolved by the registry, not here.
    Base(Name),
    Unit,
    Prod(Box<Type>, Box<Type>),
    List(Box<Type>),
    Arrow {
        param: Box<Type>,
        latent: EffectSet,
        /// Latent grade annotation used only by graded mode; `None` reads as
        /// the unit grade there.
        grade: Option<Vec<GradeLetter>>,
        result: Box<Type>,
    },
    HandlerArrow {
        value: Box<Type>,
        handled: EffectSet,
        residual: EffectSet,
        result: Box<Type>,
    },
}

impl Type {
    pub fn base(name: &str) -> Type {
        Type::Base(Name::new(name))
    }

    pub fn prod(a: Type, b: Type) -> Type {
        Type::Prod(Box::new(a), Box::new(b))
    }

    pub fn list(t: Type) -> Type {
        Type::List(Box::new(t))
    }

    pub fn arrow(param: Type, latent: EffectSet, result: Type) -> Type {
        Type::Arrow { param: Box::new(param), latent, grade: None, result: Box::new(result) }
    }
}

// ===== constants =====

/// Literal or declared constant. Reals compare bitwise so that structural
/// equality on terms is an equivalence (the runtime `eq` builtin uses IEEE
/// comparison instead).
#[derive(Clone, Debug)]
pub enum Constant {
    Int(i64),
    Real(f64),
    Bool(bool),
    Str(Arc<str>),
    /// `const c : B` for an opaque base type B.
    Declared { name: Name, base: Name },
}

impl PartialEq for Constant {
    fn eq(&self, other: &Constant) -> bool {
        match (self, other) {
            (Constant::Int(a), Constant::Int(b)) => a == b,
            (Constant::Real(a), Constant::Real(b)) => a.to_bits() == b.to_bits(),
            (Constant::Bool(a), Constant::Bool(b)) => a == b,
            (Constant::Str(a), Constant::Str(b)) => a == b,
            (
                Constant::Declared { name: a, base: ab },
                Constant::Declared { name: b, base: bb },
            ) => a == b && ab == bb,
            _ => false,
        }
    }
}

impl Eq for Constant {}

// ===== terms =====

type VarSet = Arc<BTreeSet<Name>>;

static EMPTY_VARS: Lazy<VarSet> = Lazy::new(|| Arc::new(BTreeSet::new()));

fn vars_union(sets: &[&VarSet]) -> VarSet {
    let mut nonempty: Vec<&VarSet> = sets.iter().copied().filter(|s| !s.is_empty()).collect();
    match nonempty.len() {
        0 => EMPTY_VARS.clone(),
        1 => nonempty.pop().unwrap().clone(),
        _ => {
            let mut out: BTreeSet<Name> = (*nonempty[0]).as_ref().clone();
            for s in &nonempty[1..] {
                out.extend(s.iter().copied());
            }
            Arc::new(out)
        }
    }
}

fn vars_minus(set: &VarSet, bound: &[Name]) -> VarSet {
    if bound.iter().all(|b| !set.contains(b)) {
        return set.clone();
    }
    let mut out = (**set).clone();
    for b in bound {
        out.remove(b);
    }
    Arc::new(out)
}

fn vars_single(name: Name) -> VarSet {
    Arc::new(BTreeSet::from([name]))
}

/// Value: a term that is already fully evaluated.
#[derive(Clone)]
pub struct Val(Arc<ValNode>);

pub struct ValNode {
    pub kind: ValKind,
    fv: VarSet,
}

#[derive(Clone)]
pub enum ValKind {
    Var(Name),
    Lambda {
        param: Name,
        param_ty: Type,
        latent: EffectSet,
        body: Comp,
    },
    Pair(Val, Val),
    Unit,
    Const(Constant),
    /// Registered host function; applied by the evaluator in one step.
    Builtin(Name),
    Handler(Arc<HandlerVal>),
    /// Empty list; carries its element type so typing stays syntax-directed.
    Nil { elem: Type },
    /// Non-empty list cell. Built only by the `cons` builtin at run time;
    /// the surface syntax has no list literals beyond `nil[T]`.
    ConsCell(Val, Val),
}

/// Handler literal together with its mandatory ascription.
pub struct HandlerVal {
    pub ret_param: Name,
    pub ret_body: Comp,
    pub clauses: Vec<OpClause>,
    pub ascription: HandlerAscription,
}

pub struct OpClause {
    pub op: Name,
    pub param: Name,
    pub k: Name,
    pub body: Comp,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct HandlerAscription {
    pub value_ty: Type,
    pub handled: EffectSet,
    pub residual: EffectSet,
    pub result_ty: Type,
}

impl HandlerAscription {
    pub fn as_type(&self) -> Type {
        Type::HandlerArrow {
            value: Box::new(self.value_ty.clone()),
            handled: self.handled.clone(),
            residual: self.residual.clone(),
            result: Box::new(self.result_ty.clone()),
        }
    }
}

/// Computation: a term that takes reduction steps.
#[derive(Clone)]
pub struct Comp(Arc<CompNode>);

pub struct CompNode {
    pub kind: CompKind,
    pub span: Span,
    fv: VarSet,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Proj {
    Fst,
    Snd,
}

#[derive(Clone)]
pub enum CompKind {
    Return(Val),
    Project(Proj, Val),
    OpCall {
        op: Name,
        arg: Val,
        bound: Name,
        cont: Comp,
    },
    Let {
        bound: Name,
        head: Comp,
        body: Comp,
    },
    Apply(Val, Val),
    Handle {
        handler: Val,
        body: Comp,
    },
    /// Extension over the core forms: general recursion.
    Fix {
        func: Name,
        param: Name,
        param_ty: Type,
        ret_ty: Type,
        latent: EffectSet,
        body: Comp,
    },
    /// Extension over the core forms: boolean branching.
    If {
        cond: Val,
        then_c: Comp,
        else_c: Comp,
    },
}

impl CompKind {
    /// False for the flagged extensions (Fix, If), true for the forms of the
    /// base calculus.
    pub fn is_core_form(&self) -> bool {
        !matches!(self, CompKind::Fix { .. } | CompKind::If { .. })
    }
}

// ----- constructors (compute the cached free-variable set) -----

impl Val {
    fn make(kind: ValKind, fv: VarSet) -> Val {
        Val(Arc::new(ValNode { kind, fv }))
    }

    pub fn var(name: Name) -> Val {
        Val::make(ValKind::Var(name), vars_single(name))
    }

    pub fn lambda(param: Name, param_ty: Type, latent: EffectSet, body: Comp) -> Val {
        let fv = vars_minus(body.fv(), &[param]);
        Val::make(ValKind::Lambda { param, param_ty, latent, body }, fv)
    }

    pub fn pair(a: Val, b: Val) -> Val {
        let fv = vars_union(&[a.fv(), b.fv()]);
        Val::make(ValKind::Pair(a, b), fv)
    }

    pub fn unit() -> Val {
        Val::make(ValKind::Unit, EMPTY_VARS.clone())
    }

    pub fn constant(c: Constant) -> Val {
        Val::make(ValKind::Const(c), EMPTY_VARS.clone())
    }

    pub fn int(n: i64) -> Val {
        Val::constant(Constant::Int(n))
    }

    pub fn real(x: f64) -> Val {
        Val::constant(Constant::Real(x))
    }

    pub fn bool(b: bool) -> Val {
        Val::constant(Constant::Bool(b))
    }

    pub fn str(s: &str) -> Val {
        Val::constant(Constant::Str(Arc::from(s)))
    }

    pub fn builtin(name: Name) -> Val {
        Val::make(ValKind::Builtin(name), EMPTY_VARS.clone())
    }

    pub fn nil(elem: Type) -> Val {
        Val::make(ValKind::Nil { elem }, EMPTY_VARS.clone())
    }

    pub fn cons_cell(head: Val, tail: Val) -> Val {
        let fv = vars_union(&[head.fv(), tail.fv()]);
        Val::make(ValKind::ConsCell(head, tail), fv)
    }

    pub fn handler(h: HandlerVal) -> Val {
        let mut parts: Vec<VarSet> = Vec::with_capacity(1 + h.clauses.len());
        parts.push(vars_minus(h.ret_body.fv(), &[h.ret_param]));
        for clause in &h.clauses {
            parts.push(vars_minus(clause.body.fv(), &[clause.param, clause.k]));
        }
        let refs: Vec<&VarSet> = parts.iter().collect();
        let fv = vars_union(&refs);
        Val::make(ValKind::Handler(Arc::new(h)), fv)
    }

    pub fn kind(&self) -> &ValKind {
        &self.0.kind
    }

    pub fn fv(&self) -> &VarSet {
        &self.0.fv
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        (*self.0.fv).clone()
    }

    pub fn ptr_eq(&self, other: &Val) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

impl Comp {
    fn make(kind: CompKind, span: Span, fv: VarSet) -> Comp {
        Comp(Arc::new(CompNode { kind, span, fv }))
    }

    pub fn ret(v: Val) -> Comp {
        Comp::ret_at(v, Span::synth())
    }

    pub fn ret_at(v: Val, span: Span) -> Comp {
        let fv = v.fv().clone();
        Comp::make(CompKind::Return(v), span, fv)
    }

    pub fn project(p: Proj, v: Val) -> Comp {
        Comp::project_at(p, v, Span::synth())
    }

    pub fn project_at(p: Proj, v: Val, span: Span) -> Comp {
        let fv = v.fv().clone();
        Comp::make(CompKind::Project(p, v), span, fv)
    }

    pub fn op_call(op: Name, arg: Val, bound: Name, cont: Comp) -> Comp {
        Comp::op_call_at(op, arg, bound, cont, Span::synth())
    }

    pub fn op_call_at(op: Name, arg: Val, bound: Name, cont: Comp, span: Span) -> Comp {
        let cont_fv = vars_minus(cont.fv(), &[bound]);
        let fv = vars_union(&[arg.fv(), &cont_fv]);
        Comp::make(CompKind::OpCall { op, arg, bound, cont }, span, fv)
    }

    pub fn let_in(bound: Name, head: Comp, body: Comp) -> Comp {
        Comp::let_in_at(bound, head, body, Span::synth())
    }

    pub fn let_in_at(bound: Name, head: Comp, body: Comp, span: Span) -> Comp {
        let body_fv = vars_minus(body.fv(), &[bound]);
        let fv = vars_union(&[head.fv(), &body_fv]);
        Comp::make(CompKind::Let { bound, head, body }, span, fv)
    }

    pub fn apply(f: Val, arg: Val) -> Comp {
        Comp::apply_at(f, arg, Span::synth())
    }

    pub fn apply_at(f: Val, arg: Val, span: Span) -> Comp {
        let fv = vars_union(&[f.fv(), arg.fv()]);
        Comp::make(CompKind::Apply(f, arg), span, fv)
    }

    pub fn handle(handler: Val, body: Comp) -> Comp {
        Comp::handle_at(handler, body, Span::synth())
    }

    pub fn handle_at(handler: Val, body: Comp, span: Span) -> Comp {
        let fv = vars_union(&[handler.fv(), body.fv()]);
        Comp::make(CompKind::Handle { handler, body }, span, fv)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn fix_at(
        func: Name,
        param: Name,
        param_ty: Type,
        ret_ty: Type,
        latent: EffectSet,
        body: Comp,
        span: Span,
    ) -> Comp {
        let fv = vars_minus(body.fv(), &[func, param]);
        Comp::make(CompKind::Fix { func, param, param_ty, ret_ty, latent, body }, span, fv)
    }

    pub fn fix(
        func: Name,
        param: Name,
        param_ty: Type,
        ret_ty: Type,
        latent: EffectSet,
        body: Comp,
    ) -> Comp {
        Comp::fix_at(func, param, param_ty, ret_ty, latent, body, Span::synth())
    }

    pub fn if_then_else(cond: Val, then_c: Comp, else_c: Comp) -> Comp {
        Comp::if_at(cond, then_c, else_c, Span::synth())
    }

    pub fn if_at(cond: Val, then_c: Comp, else_c: Comp, span: Span) -> Comp {
        let fv = vars_union(&[cond.fv(), then_c.fv(), else_c.fv()]);
        Comp::make(CompKind::If { cond, then_c, else_c }, span, fv)
    }

    pub fn kind(&self) -> &CompKind {
        &self.0.kind
    }

    pub fn span(&self) -> Span {
        self.0.span
    }

    pub fn fv(&self) -> &VarSet {
        &self.0.fv
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        (*self.0.fv).clone()
    }

    pub fn ptr_eq(&self, other: &Comp) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

// ===== substitution =====

fn avoid_for(value: &Val, body_fv: &VarSet) -> BTreeSet<Name> {
    let mut avoid: BTreeSet<Name> = (**value.fv()).clone();
    avoid.extend(body_fv.iter().copied());
    avoid
}

/// `substitute_comp(c, x, v)` is `c{x := v}`, capture-avoiding: binders that
/// would capture a free variable of `v` are renamed first (deterministically).
pub fn substitute_comp(c: &Comp, x: Name, v: &Val) -> Comp {
    if !c.fv().contains(&x) {
        return c.clone();
    }
    let span = c.span();
    match c.kind() {
        CompKind::Return(val) => Comp::ret_at(substitute_val(val, x, v), span),
        CompKind::Project(p, val) => Comp::project_at(*p, substitute_val(val, x, v), span),
        CompKind::OpCall { op, arg, bound, cont } => {
            let arg = substitute_val(arg, x, v);
            let (bound, cont) = subst_under_binder(*bound, cont, x, v);
            Comp::op_call_at(*op, arg, bound, cont, span)
        }
        CompKind::Let { bound, head, body } => {
            let head = substitute_comp(head, x, v);
            let (bound, body) = subst_under_binder(*bound, body, x, v);
            Comp::let_in_at(bound, head, body, span)
        }
        CompKind::Apply(f, a) => {
            Comp::apply_at(substitute_val(f, x, v), substitute_val(a, x, v), span)
        }
        CompKind::Handle { handler, body } => Comp::handle_at(
            substitute_val(handler, x, v),
            substitute_comp(body, x, v),
            span,
        ),
        CompKind::Fix { func, param, param_ty, ret_ty, latent, body } => {
            let (func, param, body) = rename_pair(*func, *param, body, x, v);
            Comp::fix_at(func, param, param_ty.clone(), ret_ty.clone(), latent.clone(), body, span)
        }
        CompKind::If { cond, then_c, else_c } => Comp::if_at(
            substitute_val(cond, x, v),
            substitute_comp(then_c, x, v),
            substitute_comp(else_c, x, v),
            span,
        ),
    }
}

pub fn substitute_val(val: &Val, x: Name, v: &Val) -> Val {
    if !val.fv().contains(&x) {
        return val.clone();
    }
    match val.kind() {
        ValKind::Var(name) => {
            if *name == x {
                v.clone()
            } else {
                val.clone()
            }
        }
        ValKind::Lambda { param, param_ty, latent, body } => {
            let (param, body) = subst_under_binder(*param, body, x, v);
            Val::lambda(param, param_ty.clone(), latent.clone(), body)
        }
        ValKind::Pair(a, b) => Val::pair(substitute_val(a, x, v), substitute_val(b, x, v)),
        ValKind::ConsCell(h, t) => {
            Val::cons_cell(substitute_val(h, x, v), substitute_val(t, x, v))
        }
        ValKind::Handler(h) => {
            let (ret_param, ret_body) = subst_under_binder(h.ret_param, &h.ret_body, x, v);
            let clauses = h
                .clauses
                .iter()
                .map(|cl| {
                    let (param, k, body) = rename_pair(cl.param, cl.k, &cl.body, x, v);
                    OpClause { op: cl.op, param, k, body }
                })
                .collect();
            Val::handler(HandlerVal {
                ret_param,
                ret_body,
                clauses,
                ascription: h.ascription.clone(),
            })
        }
        ValKind::Unit | ValKind::Const(_) | ValKind::Builtin(_) | ValKind::Nil { .. } => {
            val.clone()
        }
    }
}

/// Substitute under one binder, renaming it if it would capture.
fn subst_under_binder(bound: Name, body: &Comp, x: Name, v: &Val) -> (Name, Comp) {
    if bound == x {
        // shadowed: nothing to substitute below
        return (bound, body.clone());
    }
    if v.fv().contains(&bound) && body.fv().contains(&x) {
        let avoid = avoid_for(v, body.fv());
        let fresh = fresh_name(bound, &avoid);
        let renamed = substitute_comp(body, bound, &Val::var(fresh));
        (fresh, substitute_comp(&renamed, x, v))
    } else {
        (bound, substitute_comp(body, x, v))
    }
}

/// Substitution under two simultaneous binders (Fix's function and parameter,
/// or a handler clause's parameter and continuation). If either binder equals
/// `x` it shadows the substitution entirely; otherwise each binder that would
/// capture a free variable of `v` is renamed first. A fresh name must also
/// dodge the sibling binder so the two stay distinct.
fn rename_pair(b1: Name, b2: Name, body: &Comp, x: Name, v: &Val) -> (Name, Name, Comp) {
    if b1 == x || b2 == x || !body.fv().contains(&x) {
        return (b1, b2, body.clone());
    }
    let mut body = body.clone();
    let mut b1 = b1;
    let mut b2 = b2;
    if v.fv().contains(&b1) {
        let mut avoid = avoid_for(v, body.fv());
        avoid.insert(b2);
        let fresh = fresh_name(b1, &avoid);
        body = substitute_comp(&body, b1, &Val::var(fresh));
        b1 = fresh;
    }
    if v.fv().contains(&b2) {
        let mut avoid = avoid_for(v, body.fv());
        avoid.insert(b1);
        let fresh = fresh_name(b2, &avoid);
        body = substitute_comp(&body, b2, &Val::var(fresh));
        b2 = fresh;
    }
    (b1, b2, substitute_comp(&body, x, v))
}

// ===== alpha equality =====

struct AlphaEnv {
    left: Vec<(Name, u32)>,
    right: Vec<(Name, u32)>,
    next: u32,
}

impl AlphaEnv {
    fn new() -> AlphaEnv {
        AlphaEnv { left: Vec::new(), right: Vec::new(), next: 0 }
    }

    fn push(&mut self, l: Name, r: Name) {
        self.left.push((l, self.next));
        self.right.push((r, self.next));
        self.next += 1;
    }

    fn pop(&mut self, n: usize) {
        for _ in 0..n {
            self.left.pop();
            self.right.pop();
        }
    }

    fn lookup(stack: &[(Name, u32)], name: Name) -> Option<u32> {
        stack.iter().rev().find(|(n, _)| *n == name).map(|(_, i)| *i)
    }

    fn var_eq(&self, l: Name, r: Name) -> bool {
        match (Self::lookup(&self.left, l), Self::lookup(&self.right, r)) {
            (Some(a), Some(b)) => a == b,
            (None, None) => l == r,
            _ => false,
        }
    }
}

pub fn alpha_equal_comp(a: &Comp, b: &Comp) -> bool {
    alpha_comp(a, b, &mut AlphaEnv::new())
}

pub fn alpha_equal_val(a: &Val, b: &Val) -> bool {
    alpha_val(a, b, &mut AlphaEnv::new())
}

fn alpha_comp(a: &Comp, b: &Comp, env: &mut AlphaEnv) -> bool {
    match (a.kind(), b.kind()) {
        (CompKind::Return(x), CompKind::Return(y)) => alpha_val(x, y, env),
        (CompKind::Project(p, x), CompKind::Project(q, y)) => p == q && alpha_val(x, y, env),
        (
            CompKind::OpCall { op: o1, arg: a1, bound: b1, cont: c1 },
            CompKind::OpCall { op: o2, arg: a2, bound: b2, cont: c2 },
        ) => {
            o1 == o2 && alpha_val(a1, a2, env) && {
                env.push(*b1, *b2);
                let r = alpha_comp(c1, c2, env);
                env.pop(1);
                r
            }
        }
        (
            CompKind::Let { bound: b1, head: h1, body: c1 },
            CompKind::Let { bound: b2, head: h2, body: c2 },
        ) => {
            alpha_comp(h1, h2, env) && {
                env.push(*b1, *b2);
                let r = alpha_comp(c1, c2, env);
                env.pop(1);
                r
            }
        }
        (CompKind::Apply(f1, a1), CompKind::Apply(f2, a2)) => {
            alpha_val(f1, f2, env) && alpha_val(a1, a2, env)
        }
        (
            CompKind::Handle { handler: h1, body: c1 },
            CompKind::Handle { handler: h2, body: c2 },
        ) => alpha_val(h1, h2, env) && alpha_comp(c1, c2, env),
        (
            CompKind::Fix { func: f1, param: p1, param_ty: t1, ret_ty: r1, latent: e1, body: c1 },
            CompKind::Fix { func: f2, param: p2, param_ty: t2, ret_ty: r2, latent: e2, body: c2 },
        ) => {
            t1 == t2 && r1 == r2 && e1 == e2 && {
                env.push(*f1, *f2);
                env.push(*p1, *p2);
                let r = alpha_comp(c1, c2, env);
                env.pop(2);
                r
            }
        }
        (
            CompKind::If { cond: v1, then_c: t1, else_c: e1 },
            CompKind::If { cond: v2, then_c: t2, else_c: e2 },
        ) => alpha_val(v1, v2, env) && alpha_comp(t1, t2, env) && alpha_comp(e1, e2, env),
        _ => false,
    }
}

fn alpha_val(a: &Val, b: &Val, env: &mut AlphaEnv) -> bool {
    match (a.kind(), b.kind()) {
        (ValKind::Var(x), ValKind::Var(y)) => env.var_eq(*x, *y),
        (
            ValKind::Lambda { param: p1, param_ty: t1, latent: e1, body: c1 },
            ValKind::Lambda { param: p2, param_ty: t2, latent: e2, body: c2 },
        ) => {
            t1 == t2 && e1 == e2 && {
                env.push(*p1, *p2);
                let r = alpha_comp(c1, c2, env);
                env.pop(1);
                r
            }
        }
        (ValKind::Pair(a1, b1), ValKind::Pair(a2, b2)) => {
            alpha_val(a1, a2, env) && alpha_val(b1, b2, env)
        }
        (ValKind::Unit, ValKind::Unit) => true,
        (ValKind::Const(c1), ValKind::Const(c2)) => c1 == c2,
        (ValKind::Builtin(n1), ValKind::Builtin(n2)) => n1 == n2,
        (ValKind::Nil { elem: e1 }, ValKind::Nil { elem: e2 }) => e1 == e2,
        (ValKind::ConsCell(h1, t1), ValKind::ConsCell(h2, t2)) => {
            alpha_val(h1, h2, env) && alpha_val(t1, t2, env)
        }
        (ValKind::Handler(h1), ValKind::Handler(h2)) => {
            if h1.ascription != h2.ascription || h1.clauses.len() != h2.clauses.len() {
                return false;
            }
            env.push(h1.ret_param, h2.ret_param);
            let ret_ok = alpha_comp(&h1.ret_body, &h2.ret_body, env);
            env.pop(1);
            if !ret_ok {
                return false;
            }
            h1.clauses.iter().zip(h2.clauses.iter()).all(|(c1, c2)| {
                c1.op == c2.op && {
                    env.push(c1.param, c2.param);
                    env.push(c1.k, c2.k);
                    let r = alpha_comp(&c1.body, &c2.body, env);
                    env.pop(2);
                    r
                }
            })
        }
        _ => false,
    }
}

// ===== structural equality (binder names included) =====

impl PartialEq for Val {
    fn eq(&self, other: &Val) -> bool {
        match (self.kind(), other.kind()) {
            (ValKind::Var(a), ValKind::Var(b)) => a == b,
            (
                ValKind::Lambda { param: p1, param_ty: t1, latent: e1, body: b1 },
                ValKind::Lambda { param: p2, param_ty: t2, latent: e2, body: b2 },
            ) => p1 == p2 && t1 == t2 && e1 == e2 && b1 == b2,
            (ValKind::Pair(a1, b1), ValKind::Pair(a2, b2)) => a1 == a2 && b1 == b2,
            (ValKind::Unit, ValKind::Unit) => true,
            (ValKind::Const(a), ValKind::Const(b)) => a == b,
            (ValKind::Builtin(a), ValKind::Builtin(b)) => a == b,
            (ValKind::Nil { elem: a }, ValKind::Nil { elem: b }) => a == b,
            (ValKind::ConsCell(h1, t1), ValKind::ConsCell(h2, t2)) => h1 == h2 && t1 == t2,
            (ValKind::Handler(h1), ValKind::Handler(h2)) => {
                h1.ret_param == h2.ret_param
                    && h1.ret_body == h2.ret_body
                    && h1.ascription == h2.ascription
                    && h1.clauses.len() == h2.clauses.len()
                    && h1.clauses.iter().zip(h2.clauses.iter()).all(|(a, b)| {
                        a.op == b.op && a.param == b.param && a.k == b.k && a.body == b.body
                    })
            }
            _ => false,
        }
    }
}

impl Eq for Val {}

impl PartialEq for Comp {
    fn eq(&self, other: &Comp) -> bool {
        match (self.kind(), other.kind()) {
            (CompKind::Return(a), CompKind::Return(b)) => a == b,
            (CompKind::Project(p, a), CompKind::Project(q, b)) => p == q && a == b,
            (
                CompKind::OpCall { op: o1, arg: a1, bound: b1, cont: c1 },
                CompKind::OpCall { op: o2, arg: a2, bound: b2, cont: c2 },
            ) => o1 == o2 && a1 == a2 && b1 == b2 && c1 == c2,
            (
                CompKind::Let { bound: b1, head: h1, body: c1 },
                CompKind::Let { bound: b2, head: h2, body: c2 },
            ) => b1 == b2 && h1 == h2 && c1 == c2,
            (CompKind::Apply(f1, a1), CompKind::Apply(f2, a2)) => f1 == f2 && a1 == a2,
            (
                CompKind::Handle { handler: h1, body: c1 },
                CompKind::Handle { handler: h2, body: c2 },
            ) => h1 == h2 && c1 == c2,
            (
                CompKind::Fix { func: f1, param: p1, param_ty: t1, ret_ty: r1, latent: e1, body: c1 },
                CompKind::Fix { func: f2, param: p2, param_ty: t2, ret_ty: r2, latent: e2, body: c2 },
            ) => f1 == f2 && p1 == p2 && t1 == t2 && r1 == r2 && e1 == e2 && c1 == c2,
            (
                CompKind::If { cond: v1, then_c: t1, else_c: e1 },
                CompKind::If { cond: v2, then_c: t2, else_c: e2 },
            ) => v1 == v2 && t1 == t2 && e1 == e2,
            _ => false,
        }
    }
}

impl Eq for Comp {}

impl fmt::Debug for Val {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::pretty::val_to_string(self))
    }
}

impl fmt::Debug for Comp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::pretty::comp_to_string(self))
    }
}
