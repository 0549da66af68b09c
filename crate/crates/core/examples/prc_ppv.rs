//! Measure the phase response curve by pulse injection, convert it to the
//! PPV and fit a Fourier series.
//!
//! cargo run --release --example prc_ppv [A|B] [samples]

use std::f64::consts::TAU;

use memosc::config::Group;
use memosc::memristor::MemristorParams;
use memosc::ppv::{extract_prc, fit_fourier, prc_to_ppv, PulseSpec};
use memosc::transient::{Oscillator, SettleOptions};

fn main() -> memosc::Result<()> {
    let mut args = std::env::args().skip(1);
    let group = Group::parse(&args.next().unwrap_or_else(|| "B".into()))?;
    let samples: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(64);

    let osc = Oscillator::settle(group.circuit(), MemristorParams::surrogate(), SettleOptions::default())?;
    let pulse = PulseSpec::default();
    let prc = extract_prc(&osc, pulse, samples, 20)?;
    let ppv = prc_to_ppv(&prc, osc.omega0())?;
    let fit = fit_fourier(&ppv, 8)?;

    println!("group {}: T = {:.4e} s, pulse {:e} A x {:e} s", group.name(), osc.period(), pulse.b, pulse.h);
    println!("lobe ratio max/|min| = {:.3}", prc.lobe_ratio());
    println!("\n  phase/2pi   shift (rad)   gamma (1/C)");
    for k in 0..prc.phases.len() {
        println!("  {:9.4} {:13.5e} {:13.5e}", prc.phases[k] / prc.period, prc.shifts[k], ppv.gamma[k]);
    }

    println!("\nFourier fit, order {} (rms residual {:.3e}):", fit.order, fit.residual_rms);
    for i in 0..=fit.order {
        let b = if i == 0 { 0.0 } else { fit.b[i] };
        println!("  {i}: A = {:12.4e}  B = {:12.4e}", fit.a[i], b);
    }
    let (shift, odd) = fit.odd_aligned();
    println!("even/odd energy after aligning by {:.3} rad: {:.3}", shift, odd.even_to_odd());
    println!("max |gamma| on a fine grid: {:.4e} (theta period {:.3})", fit.max_abs(512), TAU);
    Ok(())
}
