//! The guide's chapters as doc comments, so `cargo test` runs every Rust
//! snippet in `book/src`. One module per chapter keeps failures traceable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/graphs.md")]
pub mod graphs {}
#[doc = include_str!("../../../book/src/oracle.md")]
pub mod oracle {}
#[doc = include_str!("../../../book/src/dynamics.md")]
pub mod dynamics {}
#[doc = include_str!("../../../book/src/cftp.md")]
pub mod cftp {}
#[doc = include_str!("../../../book/src/grand-coupling.md")]
pub mod grand_coupling {}
#[doc = include_str!("../../../book/src/potts.md")]
pub mod potts {}
#[doc = include_str!("../../../book/src/randomness.md")]
pub mod randomness {}
#[doc = include_str!("../../../book/src/domination.md")]
pub mod domination {}
#[doc = include_str!("../../../book/src/statistics.md")]
pub mod statistics {}
#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
