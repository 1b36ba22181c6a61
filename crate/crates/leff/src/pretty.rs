//! Printing terms, types, and effect rows back to surface syntax.
//!
//! The printer and the parser are kept inverse to each other: for any parsed
//! program, printing and re-parsing yields an alpha-identical program (the
//! round-trip property test pins this down). Runtime-only values that have no
//! surface form (non-empty list cells) print in a bracketed debug form.

use crate::ast::*;
use std::fmt::Write;

pub fn effects_to_string(e: &EffectSet) -> String {
    match e {
        EffectSet::Any => "any".to_string(),
        EffectSet::Fin(m) => {
            let mut names: Vec<String> =
                m.keys().map(|n| n.text().as_ref().to_string()).collect();
            names.sort();
            format!("{{{}}}", names.join(", "))
        }
    }
}

fn grade_word(g: &[GradeLetter]) -> String {
    if g.is_empty() {
        return "1".to_string();
    }
    g.iter()
        .map(|l| match l {
            GradeLetter::C => 'C',
            GradeLetter::D => 'D',
            GradeLetter::R => 'R',
        })
        .collect()
}

/// Precedence levels for type printing: 0 arrow, 1 product, 2 list, 3 atom.
fn ty(out: &mut String, t: &Type, level: u8) {
    match t {
        Type::Base(name) => {
            let _ = write!(out, "{name}");
        }
        Type::Unit => out.push_str("Unit"),
        Type::Prod(a, b) => {
            let paren = level > 1;
            if paren {
                out.push('(');
            }
            ty(out, a, 2);
            out.push_str(" * ");
            ty(out, b, 1);
            if paren {
                out.push(')');
            }
        }
        Type::List(elem) => {
            ty(out, elem, 2);
            out.push_str(" list");
        }
        Type::Arrow { param, latent, grade, result } => {
            let paren = level > 0;
            if paren {
                out.push('(');
            }
            ty(out, param, 1);
            match (latent, grade) {
                (EffectSet::Any, None) => out.push_str(" -> "),
                (e, None) => {
                    let _ = write!(out, " -[{}]-> ", effects_to_string(e));
                }
                (e, Some(g)) => {
                    let _ = write!(out, " -[{} | {}]-> ", effects_to_string(e), grade_word(g));
                }
            }
            ty(out, result, 0);
            if paren {
                out.push(')');
            }
        }
        Type::HandlerArrow { value, handled, residual, result } => {
            let paren = level > 0;
            if paren {
                out.push('(');
            }
            ty(out, value, 1);
            if handled.is_any() && residual.is_any() {
                out.push_str(" => ");
            } else {
                let _ = write!(
                    out,
                    " =[{} ; {}]=> ",
                    effects_to_string(handled),
                    effects_to_string(residual)
                );
            }
            ty(out, result, 0);
            if paren {
                out.push(')');
            }
        }
    }
}

pub fn type_to_string(t: &Type) -> String {
    let mut s = String::new();
    ty(&mut s, t, 0);
    s
}

fn escape_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

fn constant(out: &mut String, c: &Constant) {
    match c {
        Constant::Int(n) => {
            let _ = write!(out, "{n}");
        }
        Constant::Real(x) => {
            // keep a mark that this is a real so re-parsing yields Real, not Int
            if x.fract() == 0.0 && x.is_finite() {
                let _ = write!(out, "{x:.1}");
            } else {
                let _ = write!(out, "{x}");
            }
        }
        Constant::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Constant::Str(s) => {
            let _ = write!(out, "\"{}\"", escape_str(s));
        }
        Constant::Declared { name, .. } => {
            let _ = write!(out, "{name}");
        }
    }
}

/// True when `v` prints as a single token / self-delimited group and can sit
/// in application position without parentheses.
fn is_atom(v: &Val) -> bool {
    !matches!(v.kind(), ValKind::Lambda { .. } | ValKind::Handler(_))
}

fn val(out: &mut String, v: &Val) {
    match v.kind() {
        ValKind::Var(name) => {
            let _ = write!(out, "{name}");
        }
        ValKind::Lambda { param, param_ty, latent, body } => {
            let _ = write!(out, "fun ({param} : {})", type_to_string(param_ty));
            if !latent.is_any() {
                let _ = write!(out, " [{}]", effects_to_string(latent));
            }
            out.push_str(" -> ");
            comp(out, body);
        }
        ValKind::Pair(a, b) => {
            out.push('(');
            val(out, a);
            out.push_str(", ");
            val(out, b);
            out.push(')');
        }
        ValKind::Unit => out.push_str("()"),
        ValKind::Const(c) => constant(out, c),
        ValKind::Builtin(name) => {
            let _ = write!(out, "{name}");
        }
        ValKind::Nil { elem } => {
            let _ = write!(out, "nil[{}]", type_to_string(elem));
        }
        ValKind::ConsCell(_, _) => {
            // runtime-only; print as a bracketed listing
            out.push('[');
            let mut cur = v.clone();
            let mut first = true;
            loop {
                match cur.kind() {
                    ValKind::ConsCell(h, t) => {
                        if !first {
                            out.push_str(", ");
                        }
                        first = false;
                        val(out, h);
                        cur = t.clone();
                    }
                    ValKind::Nil { .. } => break,
                    _ => {
                        if !first {
                            out.push_str(", ");
                        }
                        out.push_str(". ");
                        val(out, &cur);
                        break;
                    }
                }
            }
            out.push(']');
        }
        ValKind::Handler(h) => {
            out.push_str("handler { return ");
            let _ = write!(out, "{}", h.ret_param);
            out.push_str(" -> ");
            comp(out, &h.ret_body);
            for cl in &h.clauses {
                let _ = write!(out, " | {}({}; {}) -> ", cl.op, cl.param, cl.k);
                comp(out, &cl.body);
            }
            out.push_str(" } : ");
            let asc = &h.ascription;
            let mut t = String::new();
            ty(&mut t, &asc.value_ty, 1);
            out.push_str(&t);
            if asc.handled.is_any() && asc.residual.is_any() {
                out.push_str(" => ");
            } else {
                let _ = write!(
                    out,
                    " =[{} ; {}]=> ",
                    effects_to_string(&asc.handled),
                    effects_to_string(&asc.residual)
                );
            }
            let mut t = String::new();
            ty(&mut t, &asc.result_ty, 0);
            out.push_str(&t);
        }
    }
}

fn val_atom(out: &mut String, v: &Val) {
    if is_atom(v) {
        val(out, v);
    } else {
        out.push('(');
        val(out, v);
        out.push(')');
    }
}

fn comp(out: &mut String, c: &Comp) {
    match c.kind() {
        CompKind::Return(v) => {
            out.push_str("return ");
            val(out, v);
        }
        CompKind::Project(p, v) => {
            out.push_str(match p {
                Proj::Fst => "pi1(",
                Proj::Snd => "pi2(",
            });
            val(out, v);
            out.push(')');
        }
        CompKind::OpCall { op, arg, bound, cont } => {
            let _ = write!(out, "{op}(");
            val(out, arg);
            let _ = write!(out, "; {bound}. ");
            comp(out, cont);
            out.push(')');
        }
        CompKind::Let { bound, head, body } => {
            let _ = write!(out, "let {bound} = ");
            comp(out, head);
            out.push_str(" in ");
            comp(out, body);
        }
        CompKind::Apply(f, a) => {
            val_atom(out, f);
            out.push(' ');
            val_atom(out, a);
        }
        CompKind::Handle { handler, body } => {
            out.push_str("with ");
            val_atom(out, handler);
            out.push_str(" handle ");
            comp(out, body);
        }
        CompKind::Fix { func, param, param_ty, ret_ty, latent, body } => {
            let _ = write!(
                out,
                "fix {func} ({param} : {}) : {}",
                type_to_string(param_ty),
                type_to_string(ret_ty)
            );
            if !latent.is_any() {
                let _ = write!(out, " [{}]", effects_to_string(latent));
            }
            out.push_str(" -> ");
            comp(out, body);
        }
        CompKind::If { cond, then_c, else_c } => {
            out.push_str("if ");
            val(out, cond);
            out.push_str(" then ");
            comp(out, then_c);
            out.push_str(" else ");
            comp(out, else_c);
        }
    }
}

pub fn val_to_string(v: &Val) -> String {
    let mut s = String::new();
    val(&mut s, v);
    s
}

pub fn comp_to_string(c: &Comp) -> String {
    let mut s = String::new();
    comp(&mut s, c);
    s
}

pub fn decl_to_string(d: &crate::parse::Decl) -> String {
    use crate::parse::Decl;
    match d {
        Decl::Effect { name, param, arity, .. } => {
            format!("effect {name} : {} ~> {}", type_to_string(param), type_to_string(arity))
        }
        Decl::TypeOpaque { name, .. } => format!("type {name}"),
        Decl::TypeAlias { name, rhs, .. } => format!("type {name} = {}", type_to_string(rhs)),
        Decl::Const { name, base, .. } => format!("const {name} : {base}"),
        Decl::LetVal { name, val, .. } => format!("let {name} = {}", val_to_string(val)),
    }
}

pub fn program_to_string(p: &crate::parse::SourceProgram) -> String {
    let mut out = String::new();
    for d in &p.decls {
        out.push_str(&decl_to_string(d));
        out.push('\n');
    }
    if let Some(main) = &p.main {
        out.push_str("main = ");
        out.push_str(&comp_to_string(main));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(s: &str) -> Name {
        Name::new(s)
    }

    #[test]
    fn types_print_with_minimal_parens() {
        let int = Type::base("Int");
        let real = Type::base("Real");
        // Int * Real * Unit associates right
        let t = Type::prod(int.clone(), Type::prod(real.clone(), Type::Unit));
        assert_eq!(type_to_string(&t), "Int * Real * Unit");
        let t = Type::prod(Type::prod(int.clone(), real.clone()), Type::Unit);
        assert_eq!(type_to_string(&t), "(Int * Real) * Unit");
        // list binds tighter than product
        let t = Type::prod(Type::list(int.clone()), real.clone());
        assert_eq!(type_to_string(&t), "Int list * Real");
        let t = Type::list(Type::prod(int.clone(), real.clone()));
        assert_eq!(type_to_string(&t), "(Int * Real) list");
        // arrows are lowest and right-associative
        let t = Type::arrow(
            int.clone(),
            EffectSet::Any,
            Type::arrow(real.clone(), EffectSet::Any, Type::Unit),
        );
        assert_eq!(type_to_string(&t), "Int -> Real -> Unit");
        let t = Type::arrow(
            Type::arrow(int.clone(), EffectSet::Any, real.clone()),
            EffectSet::Any,
            Type::Unit,
        );
        assert_eq!(type_to_string(&t), "(Int -> Real) -> Unit");
        // latent effect row
        let t = Type::arrow(int, EffectSet::empty(), real);
        assert_eq!(type_to_string(&t), "Int -[{}]-> Real");
    }

    #[test]
    fn effect_rows_print_sorted_by_name() {
        let sig = OpSig { param: Type::Unit, arity: Type::Unit };
        let e = EffectSet::from_entries([
            (n("reward"), sig.clone()),
            (n("choice"), sig.clone()),
        ]);
        assert_eq!(effects_to_string(&e), "{choice, reward}");
        assert_eq!(effects_to_string(&EffectSet::Any), "any");
        assert_eq!(effects_to_string(&EffectSet::empty()), "{}");
    }

    #[test]
    fn terms_print_in_surface_syntax() {
        let x = n("x");
        let f = n("f");
        let lam = Val::lambda(
            x,
            Type::base("Int"),
            EffectSet::empty(),
            Comp::ret(Val::var(x)),
        );
        assert_eq!(val_to_string(&lam), "fun (x : Int) [{}] -> return x");
        let app = Comp::apply(lam.clone(), Val::int(3));
        assert_eq!(
            comp_to_string(&app),
            "(fun (x : Int) [{}] -> return x) 3"
        );
        let c = Comp::let_in(f, Comp::ret(lam), Comp::apply(Val::var(f), Val::int(-2)));
        assert_eq!(
            comp_to_string(&c),
            "let f = return fun (x : Int) [{}] -> return x in f -2"
        );
        let opc = Comp::op_call(
            n("choice"),
            Val::unit(),
            n("a"),
            Comp::ret(Val::var(n("a"))),
        );
        assert_eq!(comp_to_string(&opc), "choice((); a. return a)");
    }

    #[test]
    fn reals_keep_their_decimal_point() {
        assert_eq!(val_to_string(&Val::real(3.0)), "3.0");
        assert_eq!(val_to_string(&Val::real(0.25)), "0.25");
        assert_eq!(val_to_string(&Val::real(1e20)), "100000000000000000000.0");
        assert_eq!(val_to_string(&Val::int(3)), "3");
    }

    #[test]
    fn runtime_lists_print_bracketed() {
        let v = Val::cons_cell(
            Val::int(1),
            Val::cons_cell(Val::int(2), Val::nil(Type::base("Int"))),
        );
        assert_eq!(val_to_string(&v), "[1, 2]");
        assert_eq!(val_to_string(&Val::nil(Type::base("Int"))), "nil[Int]");
    }
}
