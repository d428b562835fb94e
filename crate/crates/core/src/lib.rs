//! Verification of finite-data asynchronous programs by compilation to Petri nets.
//!
//! A program is a set of handlers described by context-free grammars, a finite
//! set of global states and a task buffer of pending handler instances. The
//! library compiles programs into (reset) Petri nets and decides safety,
//! boundedness and termination, and semi-decides fair termination, fair
//! starvation and configuration reachability.

pub mod analysis;
pub mod compile;
pub mod corpus;
pub mod encoders;
pub mod grammars;
pub mod model;
pub mod multiset;
pub mod petri;
mod text;

pub use model::{AsyncProgram, Configuration, Handler, Letter, State};
pub use multiset::Multiset;
