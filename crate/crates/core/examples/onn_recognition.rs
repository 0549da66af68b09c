//! Store three 6x10 glyphs, corrupt one, and let the network settle.
//!
//! cargo run --release --example onn_recognition [A|B] [pattern] [flips] [direct]

use memosc::config::Group;
use memosc::memristor::MemristorParams;
use memosc::onn::{corrupt, format_grid, run_recognition, Engine, OnnExperiment, PatternSet};
use memosc::ppv::{characterize, CharacterizeOptions};

fn main() -> memosc::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let group = Group::parse(args.first().map_or("B", String::as_str))?;
    let k: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let flips: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(6);

    let ps = PatternSet::default_set();
    let model = characterize(group.circuit(), MemristorParams::surrogate(), &CharacterizeOptions::default())?.model;
    let input = corrupt(&ps.patterns[k % ps.len()], flips, 1);

    let mut exp = OnnExperiment::new(ps.clone(), input.clone(), group.onn_i0());
    exp.rng_seed = 1;
    if args.get(3).is_some_and(|s| s == "direct") {
        exp.engine = Engine::Direct;
    }
    let r = run_recognition(&exp, &model)?;

    println!("input ({flips} pixels flipped):\n{}", format_grid(&input, ps.cols));
    println!("after {:.0} us:\n{}", exp.t_end * 1e6, format_grid(&r.pixels, ps.cols));
    match r.matched {
        Some(m) => println!("recovered pattern {m} (converged: {})", r.converged),
        None => println!("closest pattern {} at Hamming distance {}", r.best, r.hamming),
    }
    let spread = r.delta_theta.iter().map(|d| d.abs().min(std::f64::consts::PI - d.abs())).fold(0.0, f64::max);
    println!("largest distance from 0 or pi: {spread:.3} rad, final drift {:.3e} rad/s", r.drift);
    Ok(())
}
