//! Shared fixtures for the benchmarks.

use susykit_core::config::{Model, ModelConfig};

/// Non-degenerate system with all three constant blocks nonzero.
pub const GENERIC: &str = r#"{
  "branch": "nondegenerate",
  "w10": "2 + tanh(q) + q^2/5",
  "v1": "sin(q) + 0.5",
  "C00": 0.42857142857142855,
  "C0vec": [0.3333333333333333, -0.5, 0.4],
  "C10": -0.6666666666666666,
  "Ctilde": 1.25,
  "domain": {"a": -1, "b": 1},
  "spectral": false
}"#;

/// Scalar oscillator pair on the default box.
pub const HARMONIC: &str = r#"{
  "branch": "nondegenerate",
  "w10": "-2*q",
  "v1": "0",
  "C00": 0.0,
  "C0vec": [0, 0, 0],
  "C10": -0.25,
  "Ctilde": 0.0,
  "domain": {"a": -4, "b": 4}
}"#;

pub fn model(json: &str) -> (ModelConfig, Model) {
    let config = ModelConfig::from_json(json).expect("fixture parses");
    let model = config.build(false).expect("fixture builds");
    (config, model)
}
