//! Settle each circuit onto its limit cycle and print one period of output.
//!
//! cargo run --release --example oscillator [A|B]

use memosc::config::Group;
use memosc::memristor::MemristorParams;
use memosc::transient::{Oscillator, SettleOptions};

fn main() -> memosc::Result<()> {
    let groups = match std::env::args().nth(1) {
        Some(g) => vec![Group::parse(&g)?],
        None => vec![Group::A, Group::B],
    };
    for group in groups {
        let c = group.circuit();
        let osc = Oscillator::settle(c, MemristorParams::surrogate(), SettleOptions::default())?;
        let cyc = &osc.cycle;
        let v = &cyc.one_cycle.v;
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lens = &cyc.cycle_lengths;
        let last = &lens[lens.len().saturating_sub(10)..];
        let spread = last.iter().copied().fold(0.0, f64::max) - last.iter().copied().fold(f64::INFINITY, f64::min);

        println!("group {} (rs = {} ohm, cp = {:e} F)", group.name(), c.rs, c.cp);
        println!("  period {:.6e} s, f0 {:.4} MHz", osc.period(), 1e-6 / osc.period());
        println!("  swing {lo:.3} .. {hi:.3} V, mid-level {:.3} V", cyc.threshold);
        println!("  last {} cycle lengths spread {:.2e} of T", last.len(), spread / osc.period());

        // coarse text plot of one cycle
        let rows = 24;
        for k in 0..rows {
            let i = k * v.len() / rows;
            let bar = ((v[i] - lo) / (hi - lo) * 50.0).round() as usize;
            println!("  {:5.2} |{}*", v[i], " ".repeat(bar));
        }
        println!();
    }
    Ok(())
}
