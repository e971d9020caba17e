//! Querying label traces with scenario programs.
//!
//! Programs are parsed from a Scenic-style language, compiled into one
//! hierarchical state machine per object, and matched against sliding
//! windows of a label trace.

pub mod bench;
pub mod compiler;
pub mod dsl;
pub mod engine;
pub mod guards;
pub mod oracle;
pub mod query;
pub mod synth;
pub mod trace;
pub mod world;
