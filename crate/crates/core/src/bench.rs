//! Wall-clock comparison of the full circuit network and the phase model on
//! the same recognition task.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::onn::{best_match, hebbian_weights, init_phases, readout_pattern, run_recognition, OnnExperiment, RecognitionResult};
use crate::phasenet::wrap;
use crate::ppv::WaveformModel;
use crate::transient::{crossing_phase_differences, FullNetwork, Oscillator};

const PHASE_MIN_SECONDS: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub n: usize,
    /// Simulated time of both runs (s).
    pub span: f64,
    pub full_seconds: f64,
    pub phase_seconds: f64,
    pub speedup: f64,
    /// Largest wrapped difference between the two final phase pictures (rad).
    pub agreement: f64,
    pub flagged: bool,
    pub full_steps: usize,
    pub phase_steps: usize,
    pub full_delta_theta: Vec<f64>,
    pub full_hamming: usize,
    pub phase: RecognitionResult,
}

impl BenchReport {
    pub fn summary(&self) -> String {
        format!(
            "n={} span={:e} s\nfull network: {:.4} s ({} steps), hamming {}\nphase model: {:.6} s ({} steps), hamming {}\nspeedup: {:.1}x\nagreement: {:.4} rad{}\n",
            self.n,
            self.span,
            self.full_seconds,
            self.full_steps,
            self.full_hamming,
            self.phase_seconds,
            self.phase_steps,
            self.phase.hamming,
            self.speedup,
            self.agreement,
            if self.flagged { " (above tolerance)" } else { "" }
        )
    }
}

/// Run both engines back to back on `exp`. The circuits start on the limit
/// cycle at the encoded input phases, with the coupler comparing against the
/// cycle mid-level. Only the simulations are timed; the phase-model time is
/// the mean over repeated runs after a warm-up.
pub fn run_bench(
    osc: &Oscillator,
    model: &WaveformModel,
    exp: &OnnExperiment,
    full_steps_per_period: usize,
    agreement_tol: f64,
) -> Result<BenchReport> {
    if exp.freq_deviation != 0.0 {
        return Err(Error::InvalidParams("the full network has identical circuits; set freq_deviation = 0".into()));
    }
    if full_steps_per_period < 20 {
        return Err(Error::InvalidParams("full_steps_per_period must be at least 20".into()));
    }
    let span = exp.t_end - exp.t_init;
    if !(exp.t_init >= 0.0 && span > 0.0) {
        return Err(Error::BadDuration("need 0 <= t_init < t_end".into()));
    }
    let n = exp.patterns.n();
    let s = hebbian_weights(&exp.patterns);
    let theta0 = init_phases(&exp.test_input, exp.rng_seed, exp.jitter);
    let init: Vec<(f64, f64)> = theta0.iter().map(|&th| osc.cycle.state_at_phase(th)).collect();
    let period = osc.period();
    let dt = span / (span * full_steps_per_period as f64 / period).ceil();
    let net = FullNetwork {
        circuit: osc.circuit,
        memristor: osc.memristor.clone(),
        coupling: s,
        i0: exp.i0,
        v_ref: osc.cycle.threshold,
        opts: osc.opts,
        record_every: (full_steps_per_period / 200).max(1),
    };

    let t0 = Instant::now();
    let trajs = net.run(&init, dt, span)?;
    let full_seconds = t0.elapsed().as_secs_f64();

    // The phase run is short, so warm up once and average repeats over at
    // least PHASE_MIN_SECONDS.
    let phase = run_recognition(exp, model)?;
    let t0 = Instant::now();
    let mut reps = 0u32;
    while reps == 0 || t0.elapsed().as_secs_f64() < PHASE_MIN_SECONDS {
        std::hint::black_box(run_recognition(exp, model)?);
        reps += 1;
    }
    let phase_seconds = t0.elapsed().as_secs_f64() / reps as f64;

    let full_delta_theta = crossing_phase_differences(&trajs, osc.cycle.threshold, period)?;
    let full_pixels = readout_pattern(&full_delta_theta, exp.color);
    let (_, full_hamming) = best_match(&exp.patterns, &full_pixels);
    let agreement = full_delta_theta.iter().zip(&phase.delta_theta).map(|(a, b)| wrap(a - b).abs()).fold(0.0, f64::max);
    Ok(BenchReport {
        n,
        span,
        full_seconds,
        phase_seconds,
        speedup: full_seconds / phase_seconds.max(1e-9),
        agreement,
        flagged: agreement > agreement_tol,
        full_steps: crate::ode::step_count(dt, span),
        phase_steps: phase.trace.t.len().saturating_sub(1),
        full_delta_theta,
        full_hamming,
        phase,
    })
}
