//! Name tables for a program: base types, type aliases, declared constants,
//! operation signatures, and the fixed set of built-in functions.
//!
//! Four base types are registered up front as *abstract*: `A_E` and `O_E`
//! (the action and observation types an environment exposes) and `A_RL` and
//! `O_RL` (their counterparts on the learner side of the abstraction
//! boundary). A program may instantiate an abstract base once with a type
//! alias declaration; code written before such a declaration would see the
//! name with its old meaning, so instantiating a name after a type mentioning
//! it has been resolved is an error ("declare aliases first"). Re-declaring
//! an alias with an identical definition is allowed so that independently
//! written source fragments can be concatenated.

use crate::ast::{EffectSet, Name, OpSig, Span, Type};
use crate::diag::Diagnostic;
use crate::pretty::type_to_string;
use once_cell::sync::Lazy;
use std::collections::{BTreeMap, BTreeSet};

// ===== builtins =====

/// Typing shape of a built-in function. `Mono` builtins are first-class
/// values with an ordinary arrow type; the rest match on the shape of their
/// argument and must be applied directly.
#[derive(Clone, Debug)]
pub enum BuiltinType {
    Mono { param: Type, result: Type },
    /// `Int * Int -> Int` and `Real * Real -> Real`.
    NumBinSame,
    /// `Int * Int -> Bool` and `Real * Real -> Bool`.
    NumBinBool,
    /// `T * T -> Bool` for unit, primitive, and opaque-base `T`.
    EqOp,
    /// `T * T list -> T list`.
    Cons,
    /// `T list -> Int`.
    Length,
    /// `T list * Int -> T`, 0-based.
    Nth,
}

fn real() -> Type {
    Type::base("Real")
}

fn int() -> Type {
    Type::base("Int")
}

fn boolean() -> Type {
    Type::base("Bool")
}

fn string() -> Type {
    Type::base("Str")
}

fn mono(param: Type, result: Type) -> BuiltinType {
    BuiltinType::Mono { param, result }
}

static BUILTINS: Lazy<BTreeMap<Name, BuiltinType>> = Lazy::new(|| {
    let mut m = BTreeMap::new();
    let mut put = |name: &str, ty: BuiltinType| {
        m.insert(Name::new(name), ty);
    };
    put("plus", BuiltinType::NumBinSame);
    put("minus", BuiltinType::NumBinSame);
    put("times", BuiltinType::NumBinSame);
    put("div", mono(Type::prod(real(), real()), real()));
    put("lt", BuiltinType::NumBinBool);
    put("leq", BuiltinType::NumBinBool);
    put("gt", BuiltinType::NumBinBool);
    put("geq", BuiltinType::NumBinBool);
    put("eq", BuiltinType::EqOp);
    put("not", mono(boolean(), boolean()));
    put("and", mono(Type::prod(boolean(), boolean()), boolean()));
    put("or", mono(Type::prod(boolean(), boolean()), boolean()));
    put("real_of_int", mono(int(), real()));
    put("cons", BuiltinType::Cons);
    put("length", BuiltinType::Length);
    put("nth", BuiltinType::Nth);
    // draws a real uniformly from [0, b)
    put("randomfloat", mono(real(), real()));
    // draws an int uniformly from [0, n); n must be positive
    put("randomint", mono(int(), int()));
    // abort the whole run with a message; typed at the result they pretend to produce
    put("fail_real", mono(string(), real()));
    put("fail_unit", mono(string(), Type::Unit));
    m
});

pub fn builtin_type(name: Name) -> Option<&'static BuiltinType> {
    BUILTINS.get(&name)
}

pub fn is_builtin(name: Name) -> bool {
    BUILTINS.contains_key(&name)
}

// ===== the registry =====

#[derive(Clone)]
pub struct Registry {
    primitives: BTreeSet<Name>,
    bases: BTreeSet<Name>,
    aliases: BTreeMap<Name, Type>,
    consts: BTreeMap<Name, Name>,
    /// Raw signatures: the types inside may still name abstract bases; they
    /// are pushed through the alias table on every lookup.
    ops: BTreeMap<Name, OpSig>,
    /// Type names some resolved type already depends on; instantiating one of
    /// these later would silently change meaning, so it is refused.
    used: BTreeSet<Name>,
}

impl Registry {
    /// Primitives, the four abstract bases, and the eight standard
    /// operations.
    pub fn standard() -> Registry {
        let primitives: BTreeSet<Name> =
            ["Bool", "Int", "Real", "Str"].into_iter().map(Name::new).collect();
        let bases: BTreeSet<Name> =
            ["A_E", "O_E", "A_RL", "O_RL"].into_iter().map(Name::new).collect();
        let mut ops = BTreeMap::new();
        let mut op = |name: &str, param: Type, arity: Type| {
            ops.insert(Name::new(name), OpSig { param, arity });
        };
        op("choice", Type::Unit, Type::base("A_E"));
        op("reward", real(), Type::Unit);
        op("observe", Type::Unit, Type::base("O_E"));
        op("do", Type::base("A_E"), Type::Unit);
        op("choice_RL", Type::Unit, Type::base("A_RL"));
        op("reward_RL", real(), Type::Unit);
        op("observe_RL", Type::Unit, Type::base("O_RL"));
        op("getactions_RL", Type::base("O_RL"), Type::list(Type::base("A_RL")));
        Registry {
            primitives,
            bases,
            aliases: BTreeMap::new(),
            consts: BTreeMap::new(),
            ops,
            used: BTreeSet::new(),
        }
    }

    pub fn is_primitive(&self, n: Name) -> bool {
        self.primitives.contains(&n)
    }

    pub fn knows_type_name(&self, n: Name) -> bool {
        self.primitives.contains(&n) || self.bases.contains(&n) || self.aliases.contains_key(&n)
    }

    /// A base with no alias attached; constants may only inhabit these.
    pub fn is_opaque_base(&self, n: Name) -> bool {
        self.bases.contains(&n) && !self.aliases.contains_key(&n)
    }

    pub fn is_op(&self, n: Name) -> bool {
        self.ops.contains_key(&n)
    }

    pub fn const_base(&self, n: Name) -> Option<Name> {
        self.consts.get(&n).copied()
    }

    pub fn alias_of(&self, n: Name) -> Option<&Type> {
        self.aliases.get(&n)
    }

    /// `type N`: registers an opaque base; idempotent for known names.
    pub fn declare_opaque(&mut self, n: Name, span: Span) -> Result<(), Diagnostic> {
        if self.primitives.contains(&n) {
            return Err(Diagnostic::error(span, format!("cannot re-declare primitive type {n}")));
        }
        self.bases.insert(n);
        Ok(())
    }

    /// `type N = T` with `rhs` already resolved. Instantiates an abstract
    /// base or introduces a new alias; identical re-declaration is a no-op.
    pub fn declare_alias(&mut self, n: Name, rhs: Type, span: Span) -> Result<(), Diagnostic> {
        if self.primitives.contains(&n) {
            return Err(Diagnostic::error(span, format!("cannot alias primitive type {n}")));
        }
        if type_mentions(&rhs, n) {
            return Err(Diagnostic::error(span, format!("type alias {n} refers to itself")));
        }
        if let Some(existing) = self.aliases.get(&n) {
            if *existing == rhs {
                return Ok(());
            }
            return Err(Diagnostic::error(
                span,
                format!(
                    "type {n} is already {}; conflicting re-declaration as {}",
                    type_to_string(existing),
                    type_to_string(&rhs)
                ),
            ));
        }
        if self.used.contains(&n) {
            return Err(Diagnostic::error(
                span,
                format!("type {n} was already used abstractly; declare the alias before any use"),
            ));
        }
        self.bases.remove(&n);
        self.aliases.insert(n, rhs);
        Ok(())
    }

    /// `const c : B` for an opaque base `B`. Pins `B` abstract for the rest
    /// of the program.
    pub fn declare_const(&mut self, c: Name, base: Name, span: Span) -> Result<(), Diagnostic> {
        if is_builtin(c) {
            return Err(Diagnostic::error(span, format!("{c} is a built-in function")));
        }
        if self.ops.contains_key(&c) {
            return Err(Diagnostic::error(span, format!("{c} is an operation name")));
        }
        if !self.is_opaque_base(base) {
            return Err(Diagnostic::error(
                span,
                format!("constants need an opaque base type; {base} is not one"),
            ));
        }
        if let Some(existing) = self.consts.get(&c) {
            if *existing == base {
                return Ok(());
            }
            return Err(Diagnostic::error(
                span,
                format!("constant {c} is already declared at type {existing}"),
            ));
        }
        self.consts.insert(c, base);
        self.used.insert(base);
        Ok(())
    }

    /// `effect op : T1 ~> T2` with a raw (alias-bearing) signature. Identical
    /// re-declaration is a no-op, where "identical" compares the resolved
    /// signatures.
    pub fn declare_op(&mut self, op: Name, sig: OpSig, span: Span) -> Result<(), Diagnostic> {
        if is_builtin(op) {
            return Err(Diagnostic::error(span, format!("{op} is a built-in function")));
        }
        if self.consts.contains_key(&op) {
            return Err(Diagnostic::error(span, format!("{op} is a constant name")));
        }
        if let Some(existing) = self.ops.get(&op).cloned() {
            let old = self.resolve_sig(&existing, span)?;
            let new = self.resolve_sig(&sig, span)?;
            if old == new {
                return Ok(());
            }
            return Err(Diagnostic::error(
                span,
                format!(
                    "operation {op} is already declared as {} ~> {}",
                    type_to_string(&old.param),
                    type_to_string(&old.arity)
                ),
            ));
        }
        // freshly declared operations resolve eagerly, pinning any abstract
        // base they mention; only the standard eight stay raw
        let resolved = self.resolve_sig(&sig, span)?;
        self.ops.insert(op, resolved);
        Ok(())
    }

    /// Resolved signature of an operation.
    pub fn op_sig(&mut self, op: Name, span: Span) -> Result<OpSig, Diagnostic> {
        match self.ops.get(&op).cloned() {
            Some(sig) => self.resolve_sig(&sig, span),
            None => Err(Diagnostic::error(span, format!("unknown operation {op}"))),
        }
    }

    fn resolve_sig(&mut self, sig: &OpSig, span: Span) -> Result<OpSig, Diagnostic> {
        Ok(OpSig {
            param: self.resolve_type(&sig.param, span)?,
            arity: self.resolve_type(&sig.arity, span)?,
        })
    }

    /// Builds an effect row from operation names, attaching each one's
    /// resolved signature.
    pub fn row_from_names(
        &mut self,
        names: impl IntoIterator<Item = Name>,
        span: Span,
    ) -> Result<EffectSet, Diagnostic> {
        let mut entries = BTreeMap::new();
        for op in names {
            let sig = self.op_sig(op, span)?;
            entries.insert(op, sig);
        }
        Ok(EffectSet::Fin(entries))
    }

    /// Expands aliases everywhere in `t` (including inside latent effect
    /// rows) and records every base name the result depends on.
    pub fn resolve_type(&mut self, t: &Type, span: Span) -> Result<Type, Diagnostic> {
        match t {
            Type::Base(n) => {
                self.used.insert(*n);
                if let Some(expansion) = self.aliases.get(n) {
                    return Ok(expansion.clone());
                }
                if self.primitives.contains(n) || self.bases.contains(n) {
                    return Ok(t.clone());
                }
                Err(Diagnostic::error(span, format!("unknown type {n}")))
            }
            Type::Unit => Ok(Type::Unit),
            Type::Prod(a, b) => Ok(Type::prod(
                self.resolve_type(a, span)?,
                self.resolve_type(b, span)?,
            )),
            Type::List(e) => Ok(Type::list(self.resolve_type(e, span)?)),
            Type::Arrow { param, latent, grade, result } => Ok(Type::Arrow {
                param: Box::new(self.resolve_type(param, span)?),
                latent: self.resolve_effects(latent, span)?,
                grade: grade.clone(),
                result: Box::new(self.resolve_type(result, span)?),
            }),
            Type::HandlerArrow { value, handled, residual, result } => Ok(Type::HandlerArrow {
                value: Box::new(self.resolve_type(value, span)?),
                handled: self.resolve_effects(handled, span)?,
                residual: self.resolve_effects(residual, span)?,
                result: Box::new(self.resolve_type(result, span)?),
            }),
        }
    }

    pub fn resolve_effects(&mut self, e: &EffectSet, span: Span) -> Result<EffectSet, Diagnostic> {
        match e {
            EffectSet::Any => Ok(EffectSet::Any),
            EffectSet::Fin(m) => {
                let mut out = BTreeMap::new();
                for (op, sig) in m {
                    out.insert(*op, self.resolve_sig(sig, span)?);
                }
                Ok(EffectSet::Fin(out))
            }
        }
    }
}

fn type_mentions(t: &Type, n: Name) -> bool {
    match t {
        Type::Base(b) => *b == n,
        Type::Unit => false,
        Type::Prod(a, b) => type_mentions(a, n) || type_mentions(b, n),
        Type::List(e) => type_mentions(e, n),
        Type::Arrow { param, latent, result, .. } => {
            type_mentions(param, n) || effects_mention(latent, n) || type_mentions(result, n)
        }
        Type::HandlerArrow { value, handled, residual, result } => {
            type_mentions(value, n)
                || effects_mention(handled, n)
                || effects_mention(residual, n)
                || type_mentions(result, n)
        }
    }
}

fn effects_mention(e: &EffectSet, n: Name) -> bool {
    match e {
        EffectSet::Any => false,
        EffectSet::Fin(m) => m
            .values()
            .any(|sig| type_mentions(&sig.param, n) || type_mentions(&sig.arity, n)),
    }
}
