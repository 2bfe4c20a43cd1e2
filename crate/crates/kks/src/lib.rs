//! Knight-Knave-Spy puzzles and multi-agent debate experiments.
//!
//! The crate provides, bottom to top:
//!
//! - [`statement`]: roles, the statement AST, and truth semantics;
//! - [`dsl`]: the canonical statement grammar and English rendering;
//! - [`solver`]: exhaustive certification of unique solutions;
//! - [`generator`]: seeded puzzle and dataset construction;
//! - [`agents`]: scripted behavior profiles, remote chat-endpoint agents,
//!   and the rationality judge client;
//! - [`prompts`]: the prompt templates and their renderers;
//! - [`engine`]: the phase-structured debate protocol state machine;
//! - [`metrics`]: outcome metrics, AUC variants, and state transitions;
//! - [`regression`]: OLS/ridge fits and the per-game feature table;
//! - [`experiment`]: the controlled-experiment grid, batch runner, and
//!   report emission.
//!
//! See the crate examples for one runnable program per capability.

pub mod agents;
pub mod dsl;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod generator;
pub mod metrics;
pub mod prompts;
pub mod regression;
pub mod seed;
pub mod solver;
pub mod statement;

pub use error::{Error, Result};
