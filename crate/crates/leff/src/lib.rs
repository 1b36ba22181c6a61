//! A fine-grain call-by-value calculus with algebraic effects and handlers.
//!
//! The crate provides, in rough dependency order:
//!
//! * [`ast`]: terms, types, effect rows, substitution, alpha equality.
//! * [`registry`]: declared base types, aliases, constants, operations, and
//!   the built-in function signatures.
//! * [`lex`] / [`parse`]: surface syntax to [`ast`], with positioned
//!   diagnostics; [`pretty`] prints the other way.
//! * [`check`]: a simple type checker and an effect-row type checker over the
//!   same code path, plus source profiles that restrict what a file may
//!   mention.
//! * [`eval`]: a small-step substitution machine with a deterministic random
//!   source and an operation trace.
//! * [`grade`]: an operation-order checker over an annotated fragment.
//! * [`prelude`] / [`bandit`]: a reinforcement-learning prelude written in
//!   the object language (learner, abstraction interface, one-armed-bandit
//!   environment) and a native driver plus oracle for it.
//!
//! The `book/` directory of the repository walks through the same material
//! chapter by chapter; its code snippets are checked against this crate.

pub mod ast;
pub mod bandit;
pub mod book;
pub mod check;
pub mod diag;
pub mod eval;
pub mod grade;
pub mod lex;
pub mod parse;
pub mod prelude;
pub mod pretty;
pub mod profile;
pub mod registry;
