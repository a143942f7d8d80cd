#![allow(dead_code)]

pub mod props;

use std::path::PathBuf;

use acr_core::{parse_network, ReactionNetwork};

pub fn network_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../networks")
        .join(name)
}

pub fn load(name: &str) -> ReactionNetwork {
    let text = std::fs::read_to_string(network_path(name)).unwrap();
    parse_network(&text).unwrap()
}

pub fn sis(alpha: f64, beta: f64) -> ReactionNetwork {
    parse_network(&format!("A + B -> 2B ; {}\nB -> A ; {}", alpha, beta)).unwrap()
}
