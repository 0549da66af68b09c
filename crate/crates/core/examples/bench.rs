//! Time the 60-oscillator recognition task with full circuits and with the
//! phase model.
//!
//! cargo run --release --example bench [A|B]

use memosc::bench::run_bench;
use memosc::cli::{characterize_config, experiment};
use memosc::config::{Group, RunConfig};

fn main() -> memosc::Result<()> {
    let group = Group::parse(&std::env::args().nth(1).unwrap_or_else(|| "B".into()))?;
    let cfg = RunConfig::preset(group);
    let ch = characterize_config(&cfg)?;
    let exp = experiment(&cfg)?;
    let rep = run_bench(&ch.oscillator, &ch.model, &exp, cfg.bench.full_steps_per_period, cfg.bench.agreement_tol)?;
    print!("{}", rep.summary());
    Ok(())
}
