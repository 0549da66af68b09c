//! Two oscillators joined by inverter couplers, simulated with the phase
//! model and as full circuits. Positive coupling locks in phase, negative in
//! anti-phase.
//!
//! cargo run --release --example pair_sync [A|B]

use memosc::config::Group;
use memosc::memristor::MemristorParams;
use memosc::onn::CouplingMatrix;
use memosc::phasenet::simulate_pair;
use memosc::ppv::{characterize, CharacterizeOptions};
use memosc::transient::{crossing_phase_differences, simulate_full_network};

fn main() -> memosc::Result<()> {
    let group = Group::parse(&std::env::args().nth(1).unwrap_or_else(|| "B".into()))?;
    let ch = characterize(group.circuit(), MemristorParams::surrogate(), &CharacterizeOptions::default())?;
    let (m, osc) = (&ch.model, &ch.oscillator);
    let period = osc.period();
    let i0 = 5.53e-6;
    let offset = 1.0;
    let periods = 300.0;

    for sign in [1i32, -1] {
        let i = sign as f64 * i0;
        let tr = simulate_pair(&m.ppv, &m.vout_cycle, m.omega0, i, i, (0.0, offset / m.omega0), period / 200.0, periods * period)?;
        let d = tr.difference_series(1);
        println!("coupling {:+.2e} A", i);
        for k in (0..d.len()).step_by(d.len() / 10) {
            println!("  t = {:7.2} T   dtheta = {:+.4}", tr.t[k] / period, d[k]);
        }
        println!("  phase model final  {:+.4} rad", d[d.len() - 1]);

        let init = [osc.cycle.state_at_phase(0.0), osc.cycle.state_at_phase(offset)];
        let s = CouplingMatrix::all_to_all(2, sign);
        let trajs =
            simulate_full_network(2, &osc.circuit, &osc.memristor, &s, i0, osc.cycle.threshold, &init, period / 2000.0, periods * period)?;
        let full = crossing_phase_differences(&trajs, osc.cycle.threshold, period)?;
        println!("  full circuit final {:+.4} rad\n", full[1]);
    }
    Ok(())
}
