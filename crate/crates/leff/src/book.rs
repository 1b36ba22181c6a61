//! The guide, compiled.
//!
//! Each chapter of the `book/` directory is included here as the
//! documentation of an empty module, so every Rust snippet in the guide is
//! built and executed by `cargo test --doc`. If a chapter drifts from the
//! library, the doc tests say so.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/language.md")]
pub mod language {}

#[doc = include_str!("../../../book/src/effects.md")]
pub mod effects {}

#[doc = include_str!("../../../book/src/handlers.md")]
pub mod handlers {}

#[doc = include_str!("../../../book/src/checking.md")]
pub mod checking {}

#[doc = include_str!("../../../book/src/grading.md")]
pub mod grading {}

#[doc = include_str!("../../../book/src/bandit.md")]
pub mod bandit {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
