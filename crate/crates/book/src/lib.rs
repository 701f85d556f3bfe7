//! The guide in `book/` is plain mdbook, which cannot run listings that
//! depend on this workspace. Each chapter is included here as module docs so
//! `cargo test` compiles and runs every Rust listing in it.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/masking.md")]
pub mod masking {}
#[doc = include_str!("../../../book/src/schedule.md")]
pub mod schedule {}
#[doc = include_str!("../../../book/src/agent.md")]
pub mod agent {}
#[doc = include_str!("../../../book/src/priors.md")]
pub mod priors {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
