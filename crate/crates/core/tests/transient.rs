use std::f64::consts::{PI, TAU};

use memosc::memristor::MemristorParams;
use memosc::ode::Method;
use memosc::onn::CouplingMatrix;
use memosc::phasenet::wrap;
use memosc::transient::*;
use memosc::Error;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

fn rc_only() -> (CircuitParams, MemristorParams) {
    (CircuitParams::sinusoid(), MemristorParams::zero())
}

fn settled(c: CircuitParams) -> Oscillator {
    Oscillator::settle(c, MemristorParams::surrogate(), SettleOptions::default()).unwrap()
}

#[test]
fn rc_charging_matches_exponential() {
    let (c, m) = rc_only();
    let tau = c.rc();
    let tr = simulate_circuit(&c, &m, (0.0, 0.0), &InjectionSignal::none(), tau / 1000.0, 2.0 * tau).unwrap();
    let v = tr.v[1000];
    let expect = c.vdc * (1.0 - (-1.0f64).exp());
    assert!(((v - expect) / expect).abs() < 1e-4, "{v} vs {expect}");
}

#[test]
fn rc_charging_never_overshoots() {
    let (c, m) = rc_only();
    let tau = c.rc();
    for method in [Method::Rk4, Method::Euler] {
        let opts = SimOptions { method, ..SimOptions::default() };
        let tr = simulate_circuit_with(&c, &m, (0.0, 0.0), &InjectionSignal::none(), tau / 50.0, 20.0 * tau, &opts).unwrap();
        assert!(tr.v.windows(2).all(|w| w[1] >= w[0]));
        assert!(tr.v.iter().all(|&v| v <= c.vdc));
    }
}

#[test]
fn trajectory_samples_are_uniform() {
    let (c, m) = rc_only();
    let tr = simulate_circuit(&c, &m, (0.0, 0.0), &InjectionSignal::none(), 1e-9, 1e-7).unwrap();
    assert_eq!(tr.len(), 101);
    assert!(tr.t.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(tr.t.len(), tr.v.len());
    assert_eq!(tr.x.len(), tr.im.len());
}

#[test]
fn bad_step_or_span_is_rejected() {
    let (c, m) = rc_only();
    let none = InjectionSignal::none();
    for (dt, t_end) in [(0.0, 1e-6), (1e-6, 1e-6), (-1e-9, 1e-6), (1e-9, f64::NAN)] {
        assert!(matches!(simulate_circuit(&c, &m, (0.0, 0.0), &none, dt, t_end), Err(Error::BadDuration(_))));
    }
}

#[test]
fn circuit_validation() {
    assert!(CircuitParams::new(3.3, 0.0, 1e-9).is_err());
    assert!(CircuitParams::new(3.3, 100.0, -1e-9).is_err());
    assert!(CircuitParams::new(3.3, 100.0, 1e-9).is_ok());
}

#[test]
fn divergence_bound_trips() {
    let (c, m) = rc_only();
    let opts = SimOptions { v_bound: 1.0, ..SimOptions::default() };
    let r = simulate_circuit_with(&c, &m, (0.0, 0.0), &InjectionSignal::none(), c.rc() / 100.0, 10.0 * c.rc(), &opts);
    assert!(matches!(r, Err(Error::Diverged { .. })));
}

#[test]
fn overlapping_segments_are_rejected() {
    let seg = |a, b| Segment { t_start: a, t_end: b, amplitude: 1e-3 };
    assert!(InjectionSignal::new(vec![seg(0.0, 2.0), seg(1.0, 3.0)]).is_err());
    assert!(InjectionSignal::new(vec![seg(0.0, f64::INFINITY)]).is_err());
    let ok = InjectionSignal::new(vec![seg(2.0, 3.0), seg(0.0, 1.0)]).unwrap();
    assert_eq!(ok.at(0.5), 1e-3);
    assert_eq!(ok.at(1.5), 0.0);
    assert_eq!(ok.at(3.0), 0.0);
}

#[test]
fn injected_charge_is_exact_off_grid() {
    // a pulse edge between samples must deliver b*h, visible on the RC node
    let c = CircuitParams::new(0.0, 1e9, 1e-9).unwrap();
    let m = MemristorParams::zero();
    let (b, h) = (1e-3, 3.3e-9);
    let inj = InjectionSignal::pulse(1.05e-9, b, h);
    let tr = simulate_circuit(&c, &m, (0.0, 0.0), &inj, 1e-9, 1e-8).unwrap();
    let dv = tr.v[tr.len() - 1];
    assert!((dv - b * h / c.cp).abs() < 1e-6 * b * h / c.cp, "{dv}");
}

#[test]
fn synthetic_sine_period() {
    let n = 40 * 100;
    let t: Vec<f64> = (0..=n).map(|k| k as f64 * 1e-8).collect();
    let v: Vec<f64> = t.iter().map(|&t| (TAU * 1e6 * t).sin()).collect();
    let tr = Trajectory { x: vec![0.0; t.len()], im: vec![0.0; t.len()], t, v };
    let lc = detect_limit_cycle(&tr, 0.0, 0).unwrap();
    assert!((lc.period - 1e-6).abs() < 1e-4 * 1e-6, "{}", lc.period);
    assert!((lc.omega0 - TAU * 1e6).abs() < 1e-4 * TAU * 1e6);
}

#[test]
fn monotone_trajectory_does_not_oscillate() {
    let (c, m) = rc_only();
    let tr = simulate_circuit(&c, &m, (0.0, 0.0), &InjectionSignal::none(), c.rc() / 100.0, 10.0 * c.rc()).unwrap();
    assert!(matches!(detect_limit_cycle(&tr, 0.5 * c.vdc, 0), Err(Error::NoOscillation(_))));
}

#[test]
fn surrogate_oscillates_in_both_configurations() {
    for c in [CircuitParams::sinusoid(), CircuitParams::sawtooth()] {
        let osc = settled(c);
        let lens = &osc.cycle.cycle_lengths;
        assert!(lens.len() >= 10);
        let last = &lens[lens.len() - 10..];
        let mean = last.iter().sum::<f64>() / 10.0;
        assert!(last.iter().all(|l| (l - mean).abs() <= 1e-3 * mean));
        let v = &osc.cycle.one_cycle.v;
        let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(hi - lo > 0.1, "swing {}", hi - lo);
        assert!(hi < c.vdc && lo > 0.0);
    }
}

#[test]
fn step_halving_error_scales_with_order() {
    let osc = settled(CircuitParams::sinusoid());
    let t = osc.period();
    let none = InjectionSignal::none();
    let run = |dt: f64| simulate_circuit(&osc.circuit, &osc.memristor, osc.start, &none, dt, 2.0 * t).unwrap();
    let dt = t / 400.0;
    let (a, b, r) = (run(dt), run(dt / 2.0), run(dt / 8.0));
    let err = |tr: &Trajectory, stride: usize| tr.v.iter().enumerate().map(|(k, v)| (v - r.v[k * stride]).abs()).fold(0.0, f64::max);
    let (e1, e2) = (err(&a, 8), err(&b, 4));
    assert!(e2 < e1);
    // RK4 would give 16; phase errors near the fast edges keep it lower
    assert!(e1 / e2 > 6.0, "ratio {}", e1 / e2);
}

#[test]
fn crossing_period_matches_spectral_peak() {
    for c in [CircuitParams::sinusoid(), CircuitParams::sawtooth()] {
        let osc = settled(c);
        let t = osc.period();
        let tr = simulate_circuit(&osc.circuit, &osc.memristor, osc.start, &InjectionSignal::none(), osc.dt, 200.0 * t).unwrap();
        let stride = 10;
        let v: Vec<f64> = tr.v.iter().step_by(stride).copied().collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let len = (v.len() * 8).next_power_of_two();
        let mut buf: Vec<Complex<f64>> = v.iter().map(|x| Complex::new(x - mean, 0.0)).collect();
        buf.resize(len, Complex::new(0.0, 0.0));
        FftPlanner::new().plan_fft_forward(len).process(&mut buf);
        let (k, _) =
            buf[1..len / 2]
                .iter()
                .enumerate()
                .map(|(k, z)| (k + 1, z.norm()))
                .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        let f_peak = k as f64 / (len as f64 * stride as f64 * osc.dt);
        let t_peak = 1.0 / f_peak;
        assert!(((t_peak - t) / t).abs() < 5e-3, "spectral {t_peak:e} vs crossings {t:e}");
    }
}

#[test]
fn one_oscillator_network_is_the_circuit() {
    let osc = settled(CircuitParams::sinusoid());
    let (c, m) = (osc.circuit, osc.memristor.clone());
    let dt = osc.dt;
    let alone = simulate_circuit(&c, &m, osc.start, &InjectionSignal::none(), dt, 3.0 * osc.period()).unwrap();
    let net = simulate_full_network(1, &c, &m, &CouplingMatrix::zeros(1), 5e-6, osc.cycle.threshold, &[osc.start], dt, 3.0 * osc.period())
        .unwrap();
    assert_eq!(net[0], alone);
}

#[test]
fn uncoupled_network_matches_independent_runs() {
    let osc = settled(CircuitParams::sawtooth());
    let (c, m) = (osc.circuit, osc.memristor.clone());
    let init = [(0.0, 0.0), osc.start, osc.cycle.state_at_phase(2.0)];
    let t_end = 2.0 * osc.period();
    let net = simulate_full_network(3, &c, &m, &CouplingMatrix::zeros(3), 5e-6, osc.cycle.threshold, &init, osc.dt, t_end).unwrap();
    for (tr, &s) in net.iter().zip(&init) {
        assert_eq!(*tr, simulate_circuit(&c, &m, s, &InjectionSignal::none(), osc.dt, t_end).unwrap());
    }
}

#[test]
fn network_dimension_checks() {
    let (c, m) = (CircuitParams::sinusoid(), MemristorParams::surrogate());
    let r = simulate_full_network(3, &c, &m, &CouplingMatrix::zeros(2), 1e-6, 1.0, &[(0.0, 0.0); 2], 1e-9, 1e-7);
    assert!(matches!(r, Err(Error::BadDimensions(_))));
    let r = simulate_full_network(2, &c, &m, &CouplingMatrix::zeros(2), 1e-6, 1.0, &[(0.0, 0.0); 3], 1e-9, 1e-7);
    assert!(matches!(r, Err(Error::BadDimensions(_))));
}

fn locked_pair(osc: &Oscillator, sign: i32) -> (f64, Vec<Trajectory>) {
    let t = osc.period();
    let init = [osc.cycle.state_at_phase(0.0), osc.cycle.state_at_phase(1.0)];
    let trajs = simulate_full_network(
        2,
        &osc.circuit,
        &osc.memristor,
        &CouplingMatrix::all_to_all(2, sign),
        5.53e-6,
        osc.cycle.threshold,
        &init,
        t / 1000.0,
        200.0 * t,
    )
    .unwrap();
    let d = crossing_phase_differences(&trajs, osc.cycle.threshold, t).unwrap();
    (d[1], trajs)
}

#[test]
fn coupled_pair_locks_in_and_anti_phase() {
    let osc = settled(CircuitParams::sinusoid());
    let (inphase, a) = locked_pair(&osc, 1);
    let (anti, _) = locked_pair(&osc, -1);
    assert!(inphase.abs() < 0.1, "{inphase}");
    assert!(wrap(anti - PI).abs() < 0.1, "{anti}");
    let (again, b) = locked_pair(&osc, 1);
    assert_eq!(again, inphase);
    assert_eq!(a, b);
}

#[test]
fn phase_at_cycle_start_is_the_crossing_state() {
    let osc = settled(CircuitParams::sinusoid());
    let (v, _) = osc.cycle.state_at_phase(0.0);
    assert!((v - osc.cycle.threshold).abs() < 0.05);
    let (v2, x2) = osc.cycle.state_at_phase(TAU);
    assert_eq!(osc.cycle.state_at_phase(0.0), (v2, x2));
}
