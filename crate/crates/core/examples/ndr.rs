//! DC characteristic of the surrogate memristor and the operating point of
//! both oscillator circuits.
//!
//! cargo run --release --example ndr

use memosc::memristor::{curve_order, dc_sweep, find_operating_point, linspace, ndr_segments, LoadLine, MemristorParams, DEFAULT_ROOT_TOL};
use memosc::transient::CircuitParams;

fn main() -> memosc::Result<()> {
    let p = MemristorParams::surrogate();
    let sweep = dc_sweep(&p, &linspace(0.0, 10.0, 2001), DEFAULT_ROOT_TOL)?;
    let curve = curve_order(&sweep.points);

    for s in ndr_segments(&curve) {
        println!("NDR from {:.3} V / {:.3} mA down to {:.3} V / {:.3} mA", s.lower.vm, 1e3 * s.lower.im, s.upper.vm, 1e3 * s.upper.im);
    }

    for (name, c) in [("sawtooth", CircuitParams::sawtooth()), ("sinusoid", CircuitParams::sinusoid())] {
        let op = find_operating_point(&curve, LoadLine::new(c.vdc, c.rs)?)?;
        println!(
            "{name:>8}: rs = {} ohm, Q at {:.4} V, {:.4} mA, x = {:.4} (unique {}, in NDR {})",
            c.rs,
            op.point.vm,
            1e3 * op.point.im,
            op.point.x_eq,
            op.unique,
            op.in_ndr
        );
    }

    println!("\n   v (V)     i (mA)");
    for pt in curve.iter().step_by(curve.len() / 20) {
        println!("{:8.3} {:10.4}", pt.vm, 1e3 * pt.im);
    }
    Ok(())
}
