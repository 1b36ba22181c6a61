//! Operation-order checking.
//!
//! Programs that drive a bandit follow a protocol: pick an arm, act on it,
//! collect the reward. This module assigns each computation a word over the
//! letters C (a `choice` call), D (a `do` call) and R (a `reward` call) and
//! normalizes it in the free monoid with the single cancellation rule
//! CDR = 1. The rule has no overlaps with itself, so the rewriting is
//! confluent and the normal form is reached by a single left-to-right pass
//! with a stack.
//!
//! A whole round of the protocol cancels to the empty word, so a loop that
//! plays rounds forever grades 1 no matter how many iterations run. A
//! program that, say, rewards before acting is left with letters that no
//! amount of context can cancel, and the top-level check refuses it.
//!
//! Recursion is summarized, not unrolled. The body of a `fix` is graded
//! with the recursive call counted as 1. If the body then cancels to 1,
//! every finite unrolling cancels too (split the body as u v around the
//! call site; u v cancels to 1 implies u^n v^n does, by cancelling
//! innermost-first), so the function's calls grade 1. If the body is left
//! with only D letters the unrollings are D-words of unknown length, which
//! the abstract letter D^* stands for. Anything else does not iterate and
//! is refused. D^* is a barrier to cancellation: a C on one side and an R
//! on the other may or may not have a D between them, so the normalizer
//! never cancels across it.
//!
//! `observe` calls grade 1, as does any operation outside the protocol;
//! under `strict` an unknown operation is an error instead. Handlers can
//! splice continuations into arbitrary shapes, so a fragment containing one
//! is out of scope for this checker and is refused outright.

use crate::ast::{CompKind, GradeLetter, Name, Span, ValKind};
use crate::ast::{Comp, Val};
use crate::diag::Diagnostic;
use crate::parse::SourceProgram;
use std::collections::BTreeMap;

/// One letter of a grade word. `Star` abbreviates any finite run of D's.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GAtom {
    C,
    D,
    R,
    Star,
}

impl From<GradeLetter> for GAtom {
    fn from(g: GradeLetter) -> GAtom {
        match g {
            GradeLetter::C => GAtom::C,
            GradeLetter::D => GAtom::D,
            GradeLetter::R => GAtom::R,
        }
    }
}

/// The letter of one operation, if it participates in the protocol.
pub fn letter_of(op: Name) -> Option<GAtom> {
    match &*op.text() {
        "choice" | "choice_RL" => Some(GAtom::C),
        "do" => Some(GAtom::D),
        "reward" | "reward_RL" => Some(GAtom::R),
        _ => None,
    }
}

/// Whether this operation is part of the protocol vocabulary at all;
/// `observe` is, it just grades 1.
fn protocol_op(op: Name) -> bool {
    letter_of(op).is_some() || matches!(&*op.text(), "observe" | "observe_RL" | "getactions_RL")
}

/// Normal form under CDR = 1, with D^* as a barrier. Adjacent D's melt
/// into a neighbouring D^*; two D^* merge.
pub fn normalize(word: &[GAtom]) -> Vec<GAtom> {
    let mut stack: Vec<GAtom> = Vec::new();
    for &a in word {
        match a {
            GAtom::C => stack.push(GAtom::C),
            GAtom::D => {
                if stack.last() != Some(&GAtom::Star) {
                    stack.push(GAtom::D);
                }
            }
            GAtom::R => {
                let n = stack.len();
                if n >= 2 && stack[n - 2] == GAtom::C && stack[n - 1] == GAtom::D {
                    stack.truncate(n - 2);
                } else {
                    stack.push(GAtom::R);
                }
            }
            GAtom::Star => {
                while matches!(stack.last(), Some(GAtom::D) | Some(GAtom::Star)) {
                    stack.pop();
                }
                stack.push(GAtom::Star);
            }
        }
    }
    stack
}

/// Renders a normalized word: the empty word as `1 (D^0)`, pure-D words as
/// a power, anything involving D^* that is still all-D as `D^*`, and mixed
/// leftovers letter by letter.
pub fn word_to_string(word: &[GAtom]) -> String {
    if word.is_empty() {
        return "1 (D^0)".to_string();
    }
    if word.iter().all(|a| *a == GAtom::D) {
        return format!("D^{}", word.len());
    }
    if word.iter().all(|a| matches!(a, GAtom::D | GAtom::Star)) {
        return "D^*".to_string();
    }
    word.iter()
        .map(|a| match a {
            GAtom::C => "C",
            GAtom::D => "D",
            GAtom::R => "R",
            GAtom::Star => "D^*",
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Whether a normalized word is acceptable for a whole program: leftover
/// acting is harmless, leftover picking or rewarding is a protocol break.
pub fn main_word_ok(word: &[GAtom]) -> bool {
    word.iter().all(|a| matches!(a, GAtom::D | GAtom::Star))
}

/// Whether the pattern word (which may contain D^*) covers the concrete
/// word (which must not). Classic wildcard matching; D^* absorbs any run
/// of D's, including none.
pub fn word_covers(pattern: &[GAtom], concrete: &[GAtom]) -> bool {
    debug_assert!(!concrete.contains(&GAtom::Star));
    match pattern.split_first() {
        None => concrete.is_empty(),
        Some((GAtom::Star, rest)) => {
            let mut suffix = concrete;
            loop {
                if word_covers(rest, suffix) {
                    return true;
                }
                match suffix.split_first() {
                    Some((GAtom::D, tail)) => suffix = tail,
                    _ => return false,
                }
            }
        }
        Some((a, rest)) => match concrete.split_first() {
            Some((b, tail)) if a == b => word_covers(rest, tail),
            _ => false,
        },
    }
}

/// Latent grade words of functions the checker can see through.
type GradeEnv = BTreeMap<Name, Vec<GAtom>>;

struct Grader {
    strict: bool,
}

impl Grader {
    fn comp(&self, env: &GradeEnv, c: &Comp) -> Result<Vec<GAtom>, Diagnostic> {
        let span = c.span();
        match c.kind() {
            CompKind::Return(_) | CompKind::Project(..) => Ok(Vec::new()),
            CompKind::OpCall { op, cont, .. } => {
                let mut w = match letter_of(*op) {
                    Some(a) => vec![a],
                    None if protocol_op(*op) => Vec::new(),
                    None if self.strict => {
                        return Err(Diagnostic::error(
                            span,
                            format!("operation {op} has no grade letter"),
                        ))
                    }
                    None => Vec::new(),
                };
                w.extend(self.comp(env, cont)?);
                Ok(w)
            }
            CompKind::Let { bound, head, body } => {
                let mut w = Vec::new();
                let mut env2 = env.clone();
                match head.kind() {
                    CompKind::Return(v) => {
                        if let Some(latent) = self.latent_of(env, v)? {
                            env2.insert(*bound, latent);
                        } else {
                            env2.remove(bound);
                        }
                    }
                    CompKind::Fix { func, body: fix_body, .. } => {
                        env2.insert(*bound, self.fix_latent(env, *func, fix_body, span)?);
                    }
                    _ => {
                        w.extend(self.comp(env, head)?);
                        env2.remove(bound);
                    }
                }
                w.extend(self.comp(&env2, body)?);
                Ok(w)
            }
            CompKind::Apply(f, _) => match f.kind() {
                ValKind::Lambda { body, .. } => self.comp(env, body),
                ValKind::Builtin(_) => Ok(Vec::new()),
                ValKind::Var(x) => match env.get(x) {
                    Some(w) => Ok(w.clone()),
                    None if self.strict => Err(Diagnostic::error(
                        span,
                        format!("cannot see the grade of {x} here"),
                    )),
                    None => Ok(Vec::new()),
                },
                _ if self.strict => {
                    Err(Diagnostic::error(span, "cannot see the grade of this function"))
                }
                _ => Ok(Vec::new()),
            },
            CompKind::Handle { .. } => Err(Diagnostic::error(
                span,
                "the order checker works on handler-free fragments; \
                 this computation installs a handler",
            )),
            CompKind::Fix { func, body, .. } => {
                // validate, then: the fix itself just returns a function
                self.fix_latent(env, *func, body, span)?;
                Ok(Vec::new())
            }
            CompKind::If { then_c, else_c, .. } => {
                let wt = normalize(&self.comp(env, then_c)?);
                let we = normalize(&self.comp(env, else_c)?);
                if wt == we {
                    Ok(wt)
                } else if main_word_ok(&wt) && main_word_ok(&we) {
                    // all-D words of different lengths join at D^*
                    Ok(vec![GAtom::Star])
                } else {
                    Err(Diagnostic::error(
                        span,
                        format!(
                            "the branches grade differently: {} versus {}",
                            word_to_string(&wt),
                            word_to_string(&we)
                        ),
                    ))
                }
            }
        }
    }

    /// The latent word of a value, when the checker can see one.
    fn latent_of(&self, env: &GradeEnv, v: &Val) -> Result<Option<Vec<GAtom>>, Diagnostic> {
        match v.kind() {
            ValKind::Lambda { body, .. } => Ok(Some(self.comp(env, body)?)),
            ValKind::Var(x) => Ok(env.get(x).cloned()),
            _ => Ok(None),
        }
    }

    /// Summarizes a recursive body: counted with its own calls as 1, it
    /// must cancel to 1 or to an all-D word.
    fn fix_latent(
        &self,
        env: &GradeEnv,
        func: Name,
        body: &Comp,
        span: Span,
    ) -> Result<Vec<GAtom>, Diagnostic> {
        let mut env2 = env.clone();
        env2.insert(func, Vec::new());
        let w = normalize(&self.comp(&env2, body)?);
        if w.is_empty() {
            Ok(Vec::new())
        } else if main_word_ok(&w) {
            Ok(vec![GAtom::Star])
        } else {
            Err(Diagnostic::error(
                span,
                format!(
                    "the recursive body grades {}, which does not iterate",
                    word_to_string(&w)
                ),
            ))
        }
    }
}

/// Grades the linked main computation and returns the normalized word.
pub fn grade_program(prog: &SourceProgram, strict: bool) -> Result<Vec<GAtom>, Diagnostic> {
    let main = prog.linked_main().ok_or_else(|| {
        Diagnostic::error(Span::synth(), "the program has no main computation to grade")
    })?;
    let g = Grader { strict };
    let env = GradeEnv::new();
    Ok(normalize(&g.comp(&env, &main)?))
}

/// Grades a trace of performed operations. Traces are concrete, so the
/// result never contains D^*.
pub fn grade_trace(ops: &[Name]) -> Vec<GAtom> {
    let word: Vec<GAtom> = ops.iter().filter_map(|o| letter_of(*o)).collect();
    normalize(&word)
}
