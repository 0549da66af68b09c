mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI, TAU};

use common::characterized;
use memosc::config::Group;
use memosc::onn::CouplingMatrix;
use memosc::phasenet::*;
use memosc::ppv::PpvFourier;
use memosc::Error;

const W0: f64 = TAU * 1e6;

/// Output `sin(theta)`: rising mid-level crossing at phase 0.
fn sine_cycle(m: usize) -> Vec<f64> {
    (0..m).map(|k| (TAU * k as f64 / m as f64).sin()).collect()
}

/// A harmonic oscillator's PPV leads its output by a quarter period.
fn quadrature_ppv(b: f64) -> PpvFourier {
    PpvFourier::new(vec![0.0, b], vec![0.0, 0.0]).unwrap()
}

fn config(n: usize, ppv: PpvFourier, s: &CouplingMatrix, i0: f64) -> PhaseNetConfig {
    PhaseNetConfig {
        omega: vec![W0; n],
        ppv,
        i_currents: s.currents(i0),
        vout_cycle: sine_cycle(1000),
        q_order: 1,
        m_order: 1,
        form: SeriesForm::default(),
    }
}

#[test]
fn wrap_range() {
    assert_eq!(wrap(PI), PI);
    assert_eq!(wrap(-PI), PI);
    assert!((wrap(3.0 * PI) - PI).abs() < 1e-12);
    assert!((wrap(0.5 + TAU) - 0.5).abs() < 1e-12);
    assert!((wrap(-0.5 - 2.0 * TAU) + 0.5).abs() < 1e-12);
}

#[test]
fn sign_series_vanishes_at_quarter_period() {
    for q in [1, 2, 7, 100] {
        for norm in [false, true] {
            assert!(sign_series(FRAC_PI_2, q, norm).abs() < 1e-12);
        }
    }
}

#[test]
fn normalized_sign_series_converges_to_one() {
    assert!((sign_series(0.0, 10_000, true) - 1.0).abs() < 1e-3);
    assert!((sign_series(PI, 10_000, true) + 1.0).abs() < 1e-3);
    // the literal series tends to pi/4
    assert!((sign_series(0.0, 10_000, false) - PI / 4.0).abs() < 1e-3);
}

#[test]
fn sign_series_is_periodic() {
    for k in 0..20 {
        let th = -3.0 + 0.37 * k as f64;
        assert!((sign_series(th, 9, true) - sign_series(th + TAU, 9, true)).abs() < 1e-12);
    }
}

#[test]
fn connection_function_two_term_hand_sum() {
    let ppv = PpvFourier::new(vec![0.1, 0.7, -0.3], vec![0.0, 1.2, 0.4]).unwrap();
    let (w, i0, d) = (2.0, 3.0, FRAC_PI_3);
    // (theta_n - theta_j) = -delta
    let x = -d;
    let hand = w * i0 * (0.5 * (0.7 * x.cos() + 1.2 * x.sin()) - (1.0 / 6.0) * (-0.3 * (3.0 * x).cos() + 0.4 * (3.0 * x).sin()));
    let got = connection_h(d, w, i0, &ppv, 2, SeriesForm::literal());
    assert!((got - hand).abs() < 1e-12, "{got} vs {hand}");
    let norm = connection_h(d, w, i0, &ppv, 2, SeriesForm::default());
    assert!((norm - 4.0 / PI * hand).abs() < 1e-12);
}

#[test]
fn connection_function_zero_at_zero_without_cosines() {
    let ppv = PpvFourier::new(vec![0.0; 4], vec![0.0, 1.0, -2.0, 0.5]).unwrap();
    for m in 1..=3 {
        assert_eq!(connection_h(0.0, W0, 1e-6, &ppv, m, SeriesForm::default()), 0.0);
    }
}

#[test]
fn sinusoidal_ppv_gives_sinusoidal_connection() {
    let ppv = PpvFourier::sine(2.0);
    let amp = connection_h(-FRAC_PI_2, 1.0, 1.0, &ppv, 1, SeriesForm::literal());
    assert!((amp - 1.0).abs() < 1e-12);
    for k in 0..24 {
        let d = -PI + TAU * k as f64 / 24.0;
        let h = connection_h(d, 1.0, 1.0, &ppv, 1, SeriesForm::literal());
        assert!((h - amp * (-d).sin()).abs() < 1e-12);
    }
}

#[test]
fn connection_function_ignores_missing_harmonics() {
    let ppv = PpvFourier::sine(1.0);
    let a = connection_h(0.4, W0, 1e-6, &ppv, 1, SeriesForm::default());
    let b = connection_h(0.4, W0, 1e-6, &ppv, 5, SeriesForm::default());
    assert_eq!(a, b);
}

#[test]
fn sign_lookup_and_output_phase() {
    let c = sine_cycle(1000);
    assert_eq!(sign_at(&c, 0.5), 1.0);
    assert_eq!(sign_at(&c, PI + 0.5), -1.0);
    assert_eq!(sign_at(&c, 0.5 + 3.0 * TAU), 1.0);
    assert!((output_phase(&c) - FRAC_PI_2).abs() < 0.01);
}

#[test]
fn uncoupled_pair_keeps_its_shifts() {
    let tr = simulate_pair(&quadrature_ppv(1e4), &sine_cycle(500), W0, 0.0, 0.0, (1e-8, -3e-8), 1e-9, 2e-6).unwrap();
    assert!(tr.alpha[0].iter().all(|&a| a == 1e-8));
    assert!(tr.alpha[1].iter().all(|&a| a == -3e-8));
}

#[test]
fn synthetic_pair_locks_by_coupling_sign() {
    let g = quadrature_ppv(1e4);
    let c = sine_cycle(1000);
    let t = TAU / W0;
    let run = |i: f64| simulate_pair(&g, &c, W0, i, i, (0.0, 1.0 / W0), t / 200.0, 100.0 * t).unwrap();
    assert!(run(5e-6).final_differences()[1].abs() < 0.05);
    assert!(wrap(run(-5e-6).final_differences()[1] - PI).abs() < 0.05);
}

#[test]
fn measured_pair_locks_by_coupling_sign() {
    for group in [Group::A, Group::B] {
        let m = &characterized(group).model;
        let t = TAU / m.omega0;
        let run = |i: f64| simulate_pair(&m.ppv, &m.vout_cycle, m.omega0, i, i, (0.0, 1.0 / m.omega0), t / 200.0, 300.0 * t).unwrap();
        let pos = run(5.53e-6).final_differences()[1];
        let neg = run(-5.53e-6).final_differences()[1];
        assert!(pos.abs() < 0.1, "{group:?} positive {pos}");
        assert!(wrap(neg - PI).abs() < 0.1, "{group:?} negative {neg}");
    }
}

#[test]
fn single_oscillator_runs_free() {
    let s = CouplingMatrix::zeros(1);
    let cfg = config(1, quadrature_ppv(1e4), &s, 0.0);
    let a0 = 2e-8;
    let tr = simulate_direct(&cfg, &[a0], 1e-9, 1e-6).unwrap();
    for (k, &t) in tr.t.iter().enumerate() {
        assert_eq!(tr.alpha[0][k], a0);
        assert!((tr.theta[0][k] - (W0 * t + W0 * a0)).abs() < 1e-9);
    }
}

#[test]
fn direct_pair_reduces_to_pair_model() {
    for group in [Group::A, Group::B] {
        let m = &characterized(group).model;
        let (i12, i21) = (5.53e-6, 4.0e-6);
        let cfg = PhaseNetConfig {
            omega: vec![m.omega0; 2],
            ppv: m.ppv.clone(),
            i_currents: vec![0.0, i12, i21, 0.0],
            vout_cycle: m.vout_cycle.clone(),
            q_order: 8,
            m_order: 8,
            form: SeriesForm::default(),
        };
        let t = TAU / m.omega0;
        let init = (1e-9, 2.0 / m.omega0);
        let pair = simulate_pair(&m.ppv, &m.vout_cycle, m.omega0, i12, i21, init, t / 200.0, 50.0 * t).unwrap();
        let direct = simulate_direct(&cfg, &[init.0, init.1], t / 200.0, 50.0 * t).unwrap();
        assert_eq!(pair, direct);
    }
}

#[test]
fn direct_model_validates_inputs() {
    let s = CouplingMatrix::zeros(2);
    let mut cfg = config(2, quadrature_ppv(1.0), &s, 0.0);
    assert!(matches!(simulate_direct(&cfg, &[0.0], 1e-9, 1e-7), Err(Error::BadDimensions(_))));
    cfg.i_currents[0] = 1e-6;
    assert!(simulate_direct(&cfg, &[0.0, 0.0], 1e-9, 1e-7).is_err());
    let cfg = config(2, quadrature_ppv(1.0), &s, 0.0);
    assert!(matches!(simulate_direct(&cfg, &[0.0, 0.0], 1e-9, 0.0), Err(Error::BadDuration(_))));
}

#[test]
fn averaged_model_without_coupling_rotates_freely() {
    let s = CouplingMatrix::zeros(3);
    let mut cfg = config(3, quadrature_ppv(1e4), &s, 1e-6);
    cfg.omega = vec![W0, 1.1 * W0, 0.9 * W0];
    let init = [0.1, 2.0, -1.0];
    let tr = simulate_averaged(&cfg, &s, 1e-6, &init, 1e-8, 2e-6).unwrap();
    for (n, &th0) in init.iter().enumerate() {
        for (k, &t) in tr.t.iter().enumerate() {
            let expect = cfg.omega[n] * t + th0;
            assert!((tr.theta[n][k] - expect).abs() < 1e-9 * expect.abs().max(1.0));
        }
    }
}

#[test]
fn averaged_model_is_rotation_invariant() {
    let m = &characterized(Group::B).model;
    let s = CouplingMatrix::all_to_all(4, 1);
    let cfg = PhaseNetConfig {
        omega: vec![m.omega0; 4],
        ppv: m.ppv.clone(),
        i_currents: s.currents(5e-6),
        vout_cycle: m.vout_cycle.clone(),
        q_order: 8,
        m_order: 8,
        form: SeriesForm::default(),
    };
    let init = [0.0, 1.0, 2.5, -2.0];
    let shift = 1.234;
    let moved: Vec<f64> = init.iter().map(|t| t + shift).collect();
    let dt = suggest_averaged_dt(&cfg, &s, 5e-6);
    let a = simulate_averaged(&cfg, &s, 5e-6, &init, dt, 20e-6).unwrap();
    let b = simulate_averaged(&cfg, &s, 5e-6, &moved, dt, 20e-6).unwrap();
    for n in 0..4 {
        for k in 0..a.t.len() {
            assert!((b.theta[n][k] - a.theta[n][k] - shift).abs() < 1e-9 * a.theta[n][k].abs().max(1.0));
        }
    }
}

#[test]
fn five_oscillators_fall_into_phase() {
    let s = CouplingMatrix::all_to_all(5, 1);
    let i0 = 2e-6;
    let cfg = config(5, quadrature_ppv(1e4), &s, i0);
    let t = TAU / W0;
    let init = [0.0, 0.9, -1.1, 2.0, 0.4];
    let avg = simulate_averaged(&cfg, &s, i0, &init, t / 20.0, 100.0 * t).unwrap();
    let alphas: Vec<f64> = init.iter().map(|th| th / W0).collect();
    let direct = simulate_direct(&cfg, &alphas, t / 200.0, 100.0 * t).unwrap();
    for tr in [&avg, &direct] {
        assert!(tr.final_differences().iter().all(|d| d.abs() < 0.05), "{:?}", tr.final_differences());
    }
    assert!(avg.max_drift(0.05) < 1e-3 * W0);
}

#[test]
fn averaged_model_rejects_short_series() {
    let s = CouplingMatrix::zeros(2);
    let mut cfg = config(2, PpvFourier::sine(1.0), &s, 0.0);
    cfg.m_order = 3;
    assert!(matches!(simulate_averaged(&cfg, &s, 0.0, &[0.0, 0.0], 1e-9, 1e-7), Err(Error::InvalidParams(_))));
}

#[test]
fn trace_helpers() {
    let s = CouplingMatrix::zeros(2);
    let cfg = config(2, quadrature_ppv(1.0), &s, 0.0);
    let tr = simulate_averaged(&cfg, &s, 0.0, &[0.0, 3.5], 1e-8, 1e-6).unwrap();
    let d = tr.difference_series(1);
    assert!(d.iter().all(|x| (x - wrap(3.5)).abs() < 1e-9));
    assert_eq!(tr.final_differences()[0], 0.0);
    assert!(tr.max_drift(0.1) < 1e-3);
    for k in 0..tr.t.len() {
        assert!((tr.theta[1][k] - W0 * (tr.t[k] + tr.alpha[1][k])).abs() < 1e-9);
    }
}

#[test]
fn coupling_strength_scales_with_current() {
    let s = CouplingMatrix::all_to_all(3, 1);
    let a = config(3, quadrature_ppv(1e4), &s, 1e-6).coupling_strength();
    let b = config(3, quadrature_ppv(1e4), &s, 2e-6).coupling_strength();
    assert!((a - 2.0 * 1e-6 * 1e4).abs() < 1e-9);
    assert!((b - 2.0 * a).abs() < 1e-12);
}

#[test]
fn strobe_drift_ignores_ripple_within_a_cycle() {
    // the first oscillator runs 4% slow; ripple follows its own cycle
    let w = 0.96 * W0;
    let t: Vec<f64> = (0..=4000).map(|k| k as f64 * 1e-9).collect();
    let th0: Vec<f64> = t.iter().map(|&t| w * t).collect();
    let ripple: Vec<f64> = th0.iter().map(|&p| p + 1.0 + 0.3 * p.sin()).collect();
    let tr = PhaseTrace { t: t.clone(), alpha: vec![vec![0.0; t.len()]; 2], theta: vec![th0.clone(), ripple] };
    assert!(tr.max_drift(0.25) > 1e5);
    assert!(tr.strobe_drift(0.25) < 1e-3 * W0 * 1e-3);
    let slip: Vec<f64> = th0.iter().zip(&t).map(|(p, t)| p + 3e4 * t).collect();
    let tr = PhaseTrace { theta: vec![th0.clone(), slip], ..tr };
    assert!((tr.strobe_drift(0.25) - 3e4).abs() < 1e-3);
    let short =
        PhaseTrace { t: t[..100].to_vec(), alpha: vec![vec![0.0; 100]; 2], theta: vec![th0[..100].to_vec(), tr.theta[1][..100].to_vec()] };
    assert_eq!(short.strobe_drift(0.25), short.max_drift(0.25));
}
