//! Phase response by pulse injection, the perturbation projection vector
//! `Gamma = P / (b h omega0)`, and its truncated Fourier series.
//!
//! A pulse of charge `b h` injected at phase `t` after the reference crossing
//! changes the timing of every later crossing. Comparing the `k`-th crossing
//! after the pulse against an unperturbed run gives the asymptotic shift
//! `P(t)`, positive for an advance.

use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::transient::{InjectionSignal, Oscillator};

/// Rectangular current pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    /// Height (A).
    pub b: f64,
    /// Width (s).
    pub h: f64,
}

impl Default for PulseSpec {
    fn default() -> Self {
        Self { b: 1e-3, h: 6e-9 }
    }
}

impl PulseSpec {
    pub fn new(b: f64, h: f64) -> Result<Self> {
        if b == 0.0 || !b.is_finite() || !(h > 0.0) {
            return Err(Error::InvalidParams("pulse needs b != 0 and h > 0".into()));
        }
        Ok(Self { b, h })
    }

    /// Shrink `h` below `period / 50` if needed.
    pub fn guarded(self, period: f64) -> Self {
        let limit = period / 50.0;
        if self.h < limit {
            return self;
        }
        let h = 0.99 * limit;
        log::warn!("pulse width {:.3e} s is not below T/50 = {:.3e} s; using {:.3e} s", self.h, limit, h);
        Self { h, ..self }
    }

    pub fn charge(&self) -> f64 {
        self.b * self.h
    }
}

/// Shift of the `k_periods`-th crossing after a pulse at `t_pulse` (s after
/// the reference crossing), in radians.
pub fn measure_phase_shift(osc: &Oscillator, pulse: PulseSpec, t_pulse: f64, k_periods: usize) -> Result<f64> {
    let span = run_span(osc, t_pulse, k_periods);
    let reference = osc.run_crossings(&InjectionSignal::none(), span)?;
    shift_against(osc, &reference, pulse, t_pulse, k_periods, span)
}

fn run_span(osc: &Oscillator, t_pulse: f64, k_periods: usize) -> f64 {
    osc.crossing_offset + t_pulse + (k_periods as f64 + 2.5) * osc.period()
}

fn shift_against(osc: &Oscillator, reference: &[f64], pulse: PulseSpec, t_pulse: f64, k_periods: usize, span: f64) -> Result<f64> {
    if !(t_pulse >= 0.0 && t_pulse < osc.period()) {
        return Err(Error::InvalidParams("t_pulse must lie within one period of the reference crossing".into()));
    }
    if k_periods == 0 {
        return Err(Error::InvalidParams("k_periods must be at least 1".into()));
    }
    let t0 = osc.crossing_offset + t_pulse;
    let inj = InjectionSignal::pulse(t0, pulse.b, pulse.h);
    let perturbed = if pulse.b == 0.0 { reference.to_vec() } else { osc.run_crossings(&inj, span)? };
    // Index of the k-th reference crossing after the pulse starts; the same
    // index in the perturbed run is the same cycle.
    let idx = reference.partition_point(|&c| c <= t0) + k_periods - 1;
    let (Some(&tu), Some(&tp)) = (reference.get(idx), perturbed.get(idx)) else {
        return Err(Error::NoOscillation("run lost its oscillation after the pulse".into()));
    };
    Ok(osc.omega0() * (tu - tp))
}

/// Sampled phase response curve.
#[derive(Debug, Clone, PartialEq)]
pub struct PrcCurve {
    /// Pulse times after the reference crossing (s), uniform on `[0, T)`.
    pub phases: Vec<f64>,
    /// Asymptotic phase shifts (rad).
    pub shifts: Vec<f64>,
    pub pulse: PulseSpec,
    pub period: f64,
}

impl PrcCurve {
    /// `max / |min|` of the shifts.
    pub fn lobe_ratio(&self) -> f64 {
        lobe_ratio(&self.shifts)
    }
}

pub fn lobe_ratio(y: &[f64]) -> f64 {
    let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = y.iter().copied().fold(f64::INFINITY, f64::min);
    max / min.abs()
}

/// PRC at `m_samples` uniform phases. Samples run in parallel and are
/// returned in phase order.
pub fn extract_prc(osc: &Oscillator, pulse: PulseSpec, m_samples: usize, k_periods: usize) -> Result<PrcCurve> {
    if m_samples < 16 {
        return Err(Error::InvalidParams("need at least 16 PRC samples".into()));
    }
    let period = osc.period();
    let pulse = pulse.guarded(period);
    let phases: Vec<f64> = (0..m_samples).map(|j| period * j as f64 / m_samples as f64).collect();
    let span = run_span(osc, period, k_periods);
    let reference = osc.run_crossings(&InjectionSignal::none(), span)?;
    let shifts = phases.par_iter().map(|&tp| shift_against(osc, &reference, pulse, tp, k_periods, span)).collect::<Result<Vec<f64>>>()?;
    Ok(PrcCurve { phases, shifts, pulse, period })
}

/// Phase sensitivity per unit injected charge.
#[derive(Debug, Clone, PartialEq)]
pub struct PpvCurve {
    pub phases: Vec<f64>,
    /// `Gamma(t) = P / (b h omega0)` in 1/A, so `Gamma * I` is a
    /// dimensionless rate of time shift.
    pub gamma: Vec<f64>,
    pub period: f64,
}

pub fn prc_to_ppv(prc: &PrcCurve, omega0: f64) -> Result<PpvCurve> {
    if !(omega0 > 0.0) || prc.phases.len() != prc.shifts.len() || prc.phases.is_empty() {
        return Err(Error::InvalidParams("PRC incomplete or omega0 not positive".into()));
    }
    let scale = 1.0 / (prc.pulse.b * prc.pulse.h * omega0);
    Ok(PpvCurve { phases: prc.phases.clone(), gamma: prc.shifts.iter().map(|p| p * scale).collect(), period: prc.period })
}

/// `Gamma(theta) = A0 + sum_{i=1..P} A_i cos(i theta) + B_i sin(i theta)`,
/// `theta = 2 pi t / T`.
#[derive(Debug, Clone, PartialEq)]
pub struct PpvFourier {
    pub order: usize,
    /// `A_0..A_P`.
    pub a: Vec<f64>,
    /// `B_0..B_P` with `B_0 = 0`.
    pub b: Vec<f64>,
    pub residual_rms: f64,
}

/// Discrete Fourier projection on the uniform sample grid, which is the least
/// squares fit when `2P + 1 <= M`.
pub fn fit_fourier(ppv: &PpvCurve, order: usize) -> Result<PpvFourier> {
    let m = ppv.gamma.len();
    if order < 1 || 2 * order + 1 > m {
        return Err(Error::FitFailed(format!("order {order} needs at least {} samples, have {m}", 2 * order + 1)));
    }
    let step = ppv.period / m as f64;
    let uniform = ppv.phases.iter().enumerate().all(|(k, &t)| (t - step * k as f64).abs() <= 1e-9 * ppv.period);
    if !uniform {
        return Err(Error::FitFailed("samples are not on a uniform grid over one period".into()));
    }
    if ppv.gamma.iter().any(|g| !g.is_finite()) {
        return Err(Error::FitFailed("non-finite samples".into()));
    }
    let thetas: Vec<f64> = (0..m).map(|k| TAU * k as f64 / m as f64).collect();
    let mut a = vec![0.0; order + 1];
    let mut b = vec![0.0; order + 1];
    a[0] = ppv.gamma.iter().sum::<f64>() / m as f64;
    for i in 1..=order {
        let (mut sa, mut sb) = (0.0, 0.0);
        for (g, th) in ppv.gamma.iter().zip(&thetas) {
            let (s, c) = (i as f64 * th).sin_cos();
            sa += g * c;
            sb += g * s;
        }
        a[i] = 2.0 * sa / m as f64;
        b[i] = 2.0 * sb / m as f64;
    }
    let mut f = PpvFourier { order, a, b, residual_rms: 0.0 };
    let ss: f64 = ppv.gamma.iter().zip(&thetas).map(|(g, &th)| (g - f.eval(th)).powi(2)).sum();
    f.residual_rms = (ss / m as f64).sqrt();
    Ok(f)
}

impl PpvFourier {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() || a.len() < 2 {
            return Err(Error::InvalidParams("need A_0..A_P and B_0..B_P with P >= 1".into()));
        }
        Ok(Self { order: a.len() - 1, a, b, residual_rms: 0.0 })
    }

    /// `Gamma = b1 sin(theta)`.
    pub fn sine(b1: f64) -> Self {
        Self { order: 1, a: vec![0.0, 0.0], b: vec![0.0, b1], residual_rms: 0.0 }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let mut s = self.a[0];
        for i in 1..=self.order {
            let (si, ci) = (i as f64 * theta).sin_cos();
            s += self.a[i] * ci + self.b[i] * si;
        }
        s
    }

    /// Series of `theta -> Gamma(theta + phi)`.
    pub fn rotated(&self, phi: f64) -> Self {
        let mut r = self.clone();
        for i in 1..=self.order {
            let (s, c) = (i as f64 * phi).sin_cos();
            r.a[i] = self.a[i] * c + self.b[i] * s;
            r.b[i] = self.b[i] * c - self.a[i] * s;
        }
        r
    }

    /// Amplitude and phase of harmonic `i`: `A cos + B sin = r cos(i theta - psi)`.
    pub fn harmonic(&self, i: usize) -> (f64, f64) {
        (self.a[i].hypot(self.b[i]), self.b[i].atan2(self.a[i]))
    }

    /// Rotation that turns the fundamental into a pure `+sin`, and the
    /// rotated series.
    pub fn odd_aligned(&self) -> (f64, Self) {
        let (_, psi) = self.harmonic(1);
        let phi = psi - std::f64::consts::FRAC_PI_2;
        (phi, self.rotated(phi))
    }

    /// `(|A_0| + sum |A_i|) / sum |B_i|`. Small means odd-dominated.
    pub fn even_to_odd(&self) -> f64 {
        let even: f64 = self.a.iter().map(|v| v.abs()).sum();
        let odd: f64 = self.b.iter().map(|v| v.abs()).sum();
        even / odd
    }

    pub fn max_abs(&self, samples: usize) -> f64 {
        (0..samples).map(|k| self.eval(TAU * k as f64 / samples as f64).abs()).fold(0.0, f64::max)
    }
}

/// What the phase models need from one oscillator design.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformModel {
    pub omega0: f64,
    /// Fourier PPV in the crossing frame (1/A).
    pub ppv: PpvFourier,
    /// One cycle of `v - threshold`, uniform in phase from the rising crossing.
    pub vout_cycle: Vec<f64>,
    /// Mid-level of the output, also the coupler comparator level.
    pub threshold: f64,
}

/// Settings for [`characterize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacterizeOptions {
    pub settle: crate::transient::SettleOptions,
    pub pulse: PulseSpec,
    pub m_samples: usize,
    pub k_periods: usize,
    pub order: usize,
}

impl Default for CharacterizeOptions {
    fn default() -> Self {
        Self { settle: Default::default(), pulse: PulseSpec::default(), m_samples: 64, k_periods: 20, order: 8 }
    }
}

/// Full pipeline for one oscillator: settle, PRC, PPV, Fourier fit.
#[derive(Debug, Clone)]
pub struct Characterization {
    pub oscillator: Oscillator,
    pub prc: PrcCurve,
    pub ppv: PpvCurve,
    pub model: WaveformModel,
}

pub fn characterize(
    circuit: crate::transient::CircuitParams,
    memristor: crate::memristor::MemristorParams,
    o: &CharacterizeOptions,
) -> Result<Characterization> {
    let oscillator = Oscillator::settle(circuit, memristor, o.settle)?;
    let prc = extract_prc(&oscillator, o.pulse, o.m_samples, o.k_periods)?;
    let ppv = prc_to_ppv(&prc, oscillator.omega0())?;
    let fourier = fit_fourier(&ppv, o.order)?;
    let model = WaveformModel {
        omega0: oscillator.omega0(),
        ppv: fourier,
        vout_cycle: oscillator.cycle.vout_cycle(),
        threshold: oscillator.cycle.threshold,
    };
    Ok(Characterization { oscillator, prc, ppv, model })
}
