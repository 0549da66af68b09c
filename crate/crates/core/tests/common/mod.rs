//! Shared fixtures: one characterization per waveform group, computed once
//! per test binary.

#![allow(dead_code)]

use std::sync::OnceLock;

use memosc::cli::characterize_config;
use memosc::config::{Group, RunConfig};
use memosc::ppv::Characterization;

pub fn characterized(group: Group) -> &'static Characterization {
    static A: OnceLock<Characterization> = OnceLock::new();
    static B: OnceLock<Characterization> = OnceLock::new();
    let cell = match group {
        Group::A => &A,
        Group::B => &B,
    };
    cell.get_or_init(|| characterize_config(&RunConfig::preset(group)).expect("characterization"))
}

pub fn max_abs(y: &[f64]) -> f64 {
    y.iter().fold(0.0, |m, v| m.max(v.abs()))
}
