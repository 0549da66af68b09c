//! Recognition with a spread of free-running frequencies, averaged over
//! seeds, for both waveform groups.
//!
//! cargo run --release --example mismatch [deviation] [seeds]

use memosc::config::Group;
use memosc::memristor::MemristorParams;
use memosc::onn::{corrupt, run_recognition, OnnExperiment, PatternSet};
use memosc::ppv::{characterize, CharacterizeOptions};

fn main() -> memosc::Result<()> {
    let mut args = std::env::args().skip(1);
    let dev: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.1);
    let seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);
    let ps = PatternSet::default_set();

    for group in [Group::A, Group::B] {
        let model = characterize(group.circuit(), MemristorParams::surrogate(), &CharacterizeOptions::default())?.model;
        let (mut errors, mut recovered) = (0, 0);
        for seed in 0..seeds {
            let k = (seed % ps.len() as u64) as usize;
            let mut exp = OnnExperiment::new(ps.clone(), corrupt(&ps.patterns[k], 6, seed), group.onn_i0());
            exp.freq_deviation = dev;
            exp.rng_seed = seed;
            let r = run_recognition(&exp, &model)?;
            let d = r.pixels.iter().zip(&ps.patterns[k]).filter(|(a, b)| a != b).count();
            let d = d.min(ps.n() - d);
            errors += d;
            recovered += usize::from(d == 0);
            println!("group {} seed {seed:2}: pattern {k}, {d:2} wrong pixels", group.name());
        }
        println!(
            "group {}: mean {:.1} wrong pixels, {recovered}/{seeds} exact at +-{:.0}% deviation\n",
            group.name(),
            errors as f64 / seeds as f64,
            100.0 * dev
        );
    }
    Ok(())
}
