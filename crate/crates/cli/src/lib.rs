//! Experiment harness behind the `eebeam` binary.

pub mod experiments;
