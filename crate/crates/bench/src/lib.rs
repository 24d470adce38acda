//! Shared helpers for the benchmark targets.

use std::path::PathBuf;

use socopf::{load_case, Network};

/// Path of a shipped fixture, e.g. `fixture("case9")`.
pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(format!("{name}.m"))
}

pub fn load_fixture(name: &str) -> Network {
    load_case(fixture(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}
