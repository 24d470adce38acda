//! Case ingestion: MATPOWER parsing, per-unit conversion, load scaling and
//! node-to-line incidence.

mod incidence;
mod network;
mod parse;

use std::path::Path;

use thiserror::Error;

pub use incidence::{incidence, Incidence, SparseCols};
pub use network::{scale_loads, to_network, to_network_with, Branch, Bus, BusKind, CostBasis, Generator, Network};
pub use parse::{parse_matpower, RawCase};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("malformed case file: {0}")]
    MalformedFile(String),
    #[error("case file has no (or an empty) `{0}` section")]
    MissingSection(&'static str),
    #[error("unsupported generator cost: {0}")]
    UnsupportedCost(String),
    #[error("branch row {row} references unknown bus {bus}")]
    UnknownBus { row: usize, bus: i64 },
    #[error("network is islanded: {unreached} bus(es) unreachable from bus {root}")]
    IslandedNetwork { root: i64, unreached: usize },
    #[error("network has no slack bus")]
    NoSlack,
    #[error("network has {0} slack buses, expected exactly one")]
    MultipleSlack(usize),
    #[error("branch {branch} ({from}-{to}) has zero reactance")]
    NonPositiveReactance { branch: usize, from: i64, to: i64 },
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("load scaling factor must be positive and finite, got {0}")]
    NonPositiveFactor(f64),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

/// Read, parse and convert a case file in one step, costs rebased to $/h.
pub fn load_case(path: impl AsRef<Path>) -> Result<Network, IngestError> {
    load_case_with(path, CostBasis::Rebased)
}

pub fn load_case_with(path: impl AsRef<Path>, basis: CostBasis) -> Result<Network, IngestError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| IngestError::Io { path: path.display().to_string(), message: e.to_string() })?;
    let mut raw = parse_matpower(&text)?;
    if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
        raw.name = stem.to_string();
    }
    to_network_with(&raw, basis)
}
