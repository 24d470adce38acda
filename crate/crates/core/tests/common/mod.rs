#![allow(dead_code)]

use std::path::PathBuf;

use socopf::{load_case, parse_matpower, to_network, Network};

pub const FIXTURES: [&str; 6] = ["case9", "case14", "case30", "case57", "case118", "case300"];

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(format!("{name}.m"))
}

pub fn load(name: &str) -> Network {
    load_case(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn read(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

/// Slack generator at bus 1 feeding a PQ load at bus 2 over one line.
pub fn two_bus_text(r: f64, x: f64, pd_mw: f64, qd_mvar: f64) -> String {
    format!(
        "function mpc = twobus
mpc.baseMVA = 100;
mpc.bus = [
  1 3 0 0 0 0 1 1 0 100 1 1.1 0.9;
  2 1 {pd_mw} {qd_mvar} 0 0 1 1 0 100 1 1.1 0.9;
];
mpc.gen = [
  1 0 0 300 -300 1 100 1 250 0;
];
mpc.branch = [
  1 2 {r} {x} 0 0 0 0 0 0 1 -360 360;
];
mpc.gencost = [
  2 0 0 3 0.11 5 150;
];
"
    )
}

pub fn two_bus(r: f64, x: f64, pd_mw: f64, qd_mvar: f64) -> Network {
    to_network(&parse_matpower(&two_bus_text(r, x, pd_mw, qd_mvar)).unwrap()).unwrap()
}
