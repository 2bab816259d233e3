//! Configuration ingestion, initial-condition construction, checkpoint
//! persistence, run orchestration, and report emission.

pub mod initial;

pub use initial::{build_initial, make_instanton, random_field, InitialCondition};
