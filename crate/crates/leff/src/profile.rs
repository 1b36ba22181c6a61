//! Fragment profiles.
//!
//! A program meant to be one fragment of a larger composition can be held to
//! a discipline about which names it touches. The environment side of an
//! interface must not reach upward into the abstract operations; a learner
//! written against the abstract interface must not reach past it to concrete
//! operations or concrete carrier types, and must not instantiate the
//! abstract carriers it is supposed to stay generic over.
//!
//! The checks run over the occurrence table the parser records, so they see
//! every operation call, type mention, and declaration exactly where it
//! happened in the source.

use crate::ast::Name;
use crate::diag::Diagnostic;
use crate::parse::{OccKind, SourceProgram};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Profile {
    /// An environment fragment: no abstract interface names.
    Env,
    /// A learner fragment: only the abstract interface operations, no
    /// concrete carriers, no instantiations.
    Rl,
    /// An interface fragment: unrestricted, it bridges both sides.
    Iface,
}

pub fn parse_profile(s: &str) -> Result<Profile, String> {
    match s {
        "env" => Ok(Profile::Env),
        "rl" => Ok(Profile::Rl),
        "iface" => Ok(Profile::Iface),
        other => Err(format!("unknown profile '{other}' (expected env, rl, or iface)")),
    }
}

fn abstract_ops() -> [Name; 4] {
    ["choice_RL", "reward_RL", "observe_RL", "getactions_RL"].map(Name::new)
}

fn abstract_carriers() -> [Name; 2] {
    ["A_RL", "O_RL"].map(Name::new)
}

fn concrete_carriers() -> [Name; 2] {
    ["A_E", "O_E"].map(Name::new)
}

pub fn check_profile(prog: &SourceProgram, profile: Profile) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let abs_ops = abstract_ops();
    let abs_tys = abstract_carriers();
    let conc_tys = concrete_carriers();
    let all_carriers: Vec<Name> =
        abs_tys.iter().chain(conc_tys.iter()).copied().collect();
    for occ in &prog.occurrences {
        match profile {
            Profile::Iface => {}
            Profile::Env => match occ.kind {
                OccKind::Op if abs_ops.contains(&occ.name) => {
                    out.push(Diagnostic::error(
                        occ.span,
                        format!("an environment fragment must not call {}", occ.name),
                    ));
                }
                OccKind::TypeName | OccKind::AliasDecl | OccKind::OpaqueDecl
                | OccKind::ConstDecl
                    if abs_tys.contains(&occ.name) =>
                {
                    out.push(Diagnostic::error(
                        occ.span,
                        format!("an environment fragment must not mention {}", occ.name),
                    ));
                }
                _ => {}
            },
            Profile::Rl => match occ.kind {
                OccKind::Op if !abs_ops.contains(&occ.name) => {
                    out.push(Diagnostic::error(
                        occ.span,
                        format!(
                            "a learner fragment may only call the abstract interface \
                             operations; {} is not one of them",
                            occ.name
                        ),
                    ));
                }
                OccKind::TypeName if conc_tys.contains(&occ.name) => {
                    out.push(Diagnostic::error(
                        occ.span,
                        format!("a learner fragment must not mention {}", occ.name),
                    ));
                }
                OccKind::AliasDecl if all_carriers.contains(&occ.name) => {
                    out.push(Diagnostic::error(
                        occ.span,
                        format!(
                            "a learner fragment must stay abstract; do not instantiate {}",
                            occ.name
                        ),
                    ));
                }
                OccKind::ConstDecl if all_carriers.contains(&occ.name) => {
                    out.push(Diagnostic::error(
                        occ.span,
                        format!(
                            "a learner fragment must not declare constants at {}",
                            occ.name
                        ),
                    ));
                }
                _ => {}
            },
        }
    }
    out
}
