//! Time-domain simulation of the Fig. 2 oscillator: a source `vdc` through
//! `rs` into a node loaded by the memristor and a capacitor `cp`.
//!
//! ```text
//! cp dv/dt = (vdc - v)/rs - g(x) v + i_inj(t)
//! dx/dt    = f(x, v)
//! ```
//!
//! Phase zero of a settled oscillator is the rising crossing of `v` through
//! the middle of its swing, `(max + min) / 2`.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::memristor::MemristorParams;
use crate::ode::{step_count, Method, Stepper};
use crate::onn::CouplingMatrix;

/// Bias network of one oscillator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams {
    pub vdc: f64,
    pub rs: f64,
    pub cp: f64,
}

impl CircuitParams {
    pub fn new(vdc: f64, rs: f64, cp: f64) -> Result<Self> {
        let c = Self { vdc, rs, cp };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rs > 0.0) || !(self.cp > 0.0) || !self.vdc.is_finite() {
            return Err(Error::InvalidParams("circuit needs rs > 0, cp > 0, finite vdc".into()));
        }
        Ok(())
    }

    /// 810 ohm, 800 pF at 3.3 V: the near-sinusoidal configuration.
    pub fn sinusoid() -> Self {
        Self { vdc: 3.3, rs: 810.0, cp: 800e-12 }
    }

    /// 1 kohm, 3500 pF at 3.3 V: the relaxation (sawtooth) configuration.
    pub fn sawtooth() -> Self {
        Self { vdc: 3.3, rs: 1000.0, cp: 3500e-12 }
    }

    pub fn rc(&self) -> f64 {
        self.rs * self.cp
    }
}

#[inline]
fn circuit_rhs(c: &CircuitParams, m: &MemristorParams, v: f64, x: f64, inj: f64) -> (f64, f64) {
    let dv = ((c.vdc - v) / c.rs - m.current(x, v) + inj) / c.cp;
    (dv, m.dxdt(x, v))
}

/// One constant-current piece of an injected waveform, active on `[t_start, t_end)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub amplitude: f64,
}

/// Piecewise-constant current injected into the output node.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InjectionSignal {
    segments: Vec<Segment>,
}

impl InjectionSignal {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(mut segments: Vec<Segment>) -> Result<Self> {
        segments.sort_by(|a, b| a.t_start.total_cmp(&b.t_start));
        for s in &segments {
            if !(s.t_start.is_finite() && s.t_end.is_finite() && s.amplitude.is_finite()) || s.t_end < s.t_start {
                return Err(Error::InvalidParams("injection segment times must be finite and ordered".into()));
            }
        }
        if segments.windows(2).any(|w| w[1].t_start < w[0].t_end) {
            return Err(Error::InvalidParams("injection segments overlap".into()));
        }
        Ok(Self { segments })
    }

    /// Rectangular pulse of height `b` and width `h` starting at `t0`.
    pub fn pulse(t0: f64, b: f64, h: f64) -> Self {
        Self { segments: vec![Segment { t_start: t0, t_end: t0 + h, amplitude: b }] }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn at(&self, t: f64) -> f64 {
        self.segments.iter().find(|s| t >= s.t_start && t < s.t_end).map_or(0.0, |s| s.amplitude)
    }

    /// Edges of non-zero segments strictly inside `(t0, t1)`, ascending.
    fn breakpoints(&self, t0: f64, t1: f64, out: &mut Vec<f64>) {
        out.clear();
        for s in self.segments.iter().filter(|s| s.amplitude != 0.0) {
            for e in [s.t_start, s.t_end] {
                if e > t0 && e < t1 {
                    out.push(e);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
    }
}

/// Uniformly sampled circuit waveform.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub v: Vec<f64>,
    pub x: Vec<f64>,
    pub im: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn with_capacity(n: usize) -> Self {
        Self { t: Vec::with_capacity(n), v: Vec::with_capacity(n), x: Vec::with_capacity(n), im: Vec::with_capacity(n) }
    }

    fn push(&mut self, t: f64, v: f64, x: f64, m: &MemristorParams) {
        self.t.push(t);
        self.v.push(v);
        self.x.push(x);
        self.im.push(m.current(x, v));
    }

    /// Samples with `t >= t_from`.
    pub fn tail(&self, t_from: f64) -> Trajectory {
        let k = self.t.partition_point(|&t| t < t_from);
        Trajectory { t: self.t[k..].to_vec(), v: self.v[k..].to_vec(), x: self.x[k..].to_vec(), im: self.im[k..].to_vec() }
    }

    /// `(max + min) / 2` of `v` over samples after `frac * t_end`.
    pub fn mid_level(&self, frac: f64) -> f64 {
        let t_end = self.t.last().copied().unwrap_or(0.0);
        let k = self.t.partition_point(|&t| t < frac * t_end);
        let (lo, hi) = self.v[k..].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        0.5 * (lo + hi)
    }
}

/// Integration controls shared by the circuit simulators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub method: Method,
    /// Divergence bound on `|v|` in volts.
    pub v_bound: f64,
    /// Divergence bound on `|x|`.
    pub x_bound: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { method: Method::Rk4, v_bound: 1e3, x_bound: 1e3 }
    }
}

fn check_span(dt: f64, t_end: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() || !(t_end > dt) || !t_end.is_finite() {
        return Err(Error::BadDuration(format!("need 0 < dt < t_end, got dt={dt:e}, t_end={t_end:e}")));
    }
    Ok(step_count(dt, t_end))
}

/// Integrate one oscillator with the default RK4 options.
pub fn simulate_circuit(
    cp: &CircuitParams,
    mp: &MemristorParams,
    init: (f64, f64),
    inj: &InjectionSignal,
    dt: f64,
    t_end: f64,
) -> Result<Trajectory> {
    simulate_circuit_with(cp, mp, init, inj, dt, t_end, &SimOptions::default())
}

/// Integrate one oscillator. Output samples sit on `k * dt`; steps that
/// contain an injection edge are split there so the injected charge is exact.
pub fn simulate_circuit_with(
    cp: &CircuitParams,
    mp: &MemristorParams,
    init: (f64, f64),
    inj: &InjectionSignal,
    dt: f64,
    t_end: f64,
    opts: &SimOptions,
) -> Result<Trajectory> {
    cp.validate()?;
    let n = check_span(dt, t_end)?;
    let mut traj = Trajectory::with_capacity(n + 1);
    let mut y = [init.0, init.1];
    let mut st = Stepper::new(opts.method, 2);
    let mut edges = Vec::new();
    traj.push(0.0, y[0], y[1], mp);
    for k in 0..n {
        let t0 = k as f64 * dt;
        let t1 = (k + 1) as f64 * dt;
        inj.breakpoints(t0, t1, &mut edges);
        if edges.is_empty() {
            let i = inj.at(0.5 * (t0 + t1));
            let mut f = |_t: f64, s: &[f64], d: &mut [f64]| {
                let (dv, dx) = circuit_rhs(cp, mp, s[0], s[1], i);
                d[0] = dv;
                d[1] = dx;
            };
            st.step(&mut f, t0, &mut y, dt);
        } else {
            let mut a = t0;
            for b in edges.iter().copied().chain(std::iter::once(t1)) {
                let i = inj.at(0.5 * (a + b));
                let mut f = |_t: f64, s: &[f64], d: &mut [f64]| {
                    let (dv, dx) = circuit_rhs(cp, mp, s[0], s[1], i);
                    d[0] = dv;
                    d[1] = dx;
                };
                st.step(&mut f, a, &mut y, b - a);
                a = b;
            }
        }
        if !(y[0].abs() <= opts.v_bound && y[1].abs() <= opts.x_bound) {
            return Err(Error::Diverged { t: t1 });
        }
        traj.push(t1, y[0], y[1], mp);
    }
    Ok(traj)
}

/// Times where `v` rises through `threshold`, linearly interpolated.
pub fn rising_crossings(t: &[f64], v: &[f64], threshold: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for k in 0..v.len().saturating_sub(1) {
        if v[k] < threshold && v[k + 1] >= threshold {
            let s = (threshold - v[k]) / (v[k + 1] - v[k]);
            out.push(t[k] + s * (t[k + 1] - t[k]));
        }
    }
    out
}

/// Settled periodic orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitCycle {
    pub period: f64,
    pub omega0: f64,
    /// Crossing level used as the phase reference.
    pub threshold: f64,
    /// One period starting at a rising threshold crossing, `t` from 0.
    pub one_cycle: Trajectory,
    /// Measured cycle lengths after the settling discard.
    pub cycle_lengths: Vec<f64>,
}

impl LimitCycle {
    /// Output waveform over one cycle relative to the threshold.
    pub fn vout_cycle(&self) -> Vec<f64> {
        self.one_cycle.v.iter().map(|v| v - self.threshold).collect()
    }

    /// State `(v, x)` at phase `phi` (rad) after the reference crossing.
    pub fn state_at_phase(&self, phi: f64) -> (f64, f64) {
        let c = &self.one_cycle;
        let n = c.len();
        let tau = phi.rem_euclid(TAU) / self.omega0;
        let dt = c.t[1] - c.t[0];
        let pos = tau / dt;
        let k = (pos.floor() as usize).min(n - 2);
        let s = pos - k as f64;
        (c.v[k] + s * (c.v[k + 1] - c.v[k]), c.x[k] + s * (c.x[k + 1] - c.x[k]))
    }
}

/// Period from rising threshold crossings. Discards the first `settle_cycles`
/// crossings and anything in the first 20% of the run, whichever is later,
/// then needs at least 10 whole cycles. The last 10 must agree within 0.1%.
pub fn detect_limit_cycle(traj: &Trajectory, threshold_v: f64, settle_cycles: usize) -> Result<LimitCycle> {
    if traj.len() < 3 {
        return Err(Error::NoOscillation("trajectory too short".into()));
    }
    let all = rising_crossings(&traj.t, &traj.v, threshold_v);
    let t0 = traj.t[0];
    let t_cut = t0 + 0.2 * (traj.t[traj.len() - 1] - t0);
    let skip = settle_cycles.max(all.partition_point(|&c| c < t_cut));
    let used: &[f64] = if all.len() > skip { &all[skip..] } else { &[] };
    if used.len() < 11 {
        return Err(Error::NoOscillation(format!("{} usable rising crossings of {threshold_v} V, need 11", used.len())));
    }
    let lengths: Vec<f64> = used.windows(2).map(|w| w[1] - w[0]).collect();
    let period = (used[used.len() - 1] - used[0]) / (used.len() - 1) as f64;
    let last = &lengths[lengths.len() - 10..];
    let (lo, hi) = last.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &l| (lo.min(l), hi.max(l)));
    let spread = (hi - lo) / period;
    if spread > 1e-3 {
        return Err(Error::PeriodUnstable { spread });
    }
    let (c0, c1) = (used[used.len() - 2], used[used.len() - 1]);
    let one_cycle = resample(traj, c0, c1);
    Ok(LimitCycle { period, omega0: TAU / period, threshold: threshold_v, one_cycle, cycle_lengths: lengths })
}

fn resample(traj: &Trajectory, c0: f64, c1: f64) -> Trajectory {
    let dt = traj.t[1] - traj.t[0];
    let m = ((c1 - c0) / dt).round().max(8.0) as usize;
    let step = (c1 - c0) / m as f64;
    let mut out = Trajectory::with_capacity(m);
    for j in 0..m {
        let t = c0 + step * j as f64;
        let pos = (t - traj.t[0]) / dt;
        let k = (pos.floor() as usize).min(traj.len() - 2);
        let s = pos - k as f64;
        let lerp = |a: &[f64]| a[k] + s * (a[k + 1] - a[k]);
        out.t.push(step * j as f64);
        out.v.push(lerp(&traj.v));
        out.x.push(lerp(&traj.x));
        out.im.push(lerp(&traj.im));
    }
    out
}

/// A settled oscillator ready for perturbation experiments.
#[derive(Debug, Clone)]
pub struct Oscillator {
    pub circuit: CircuitParams,
    pub memristor: MemristorParams,
    pub opts: SimOptions,
    pub dt: f64,
    pub cycle: LimitCycle,
    /// State on the cycle at `t = 0` of every experiment.
    pub start: (f64, f64),
    /// Time of the reference crossing after `start`, in `[0, dt)`.
    pub crossing_offset: f64,
}

/// Controls for [`Oscillator::settle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettleOptions {
    /// Fixed step; `None` uses `T / 2000` from a coarse bootstrap run.
    pub dt: Option<f64>,
    pub steps_per_period: usize,
    pub settle_cycles: usize,
    /// Periods simulated after settling.
    pub periods: usize,
    pub init: (f64, f64),
    pub sim: SimOptions,
}

impl Default for SettleOptions {
    fn default() -> Self {
        Self { dt: None, steps_per_period: 2000, settle_cycles: 20, periods: 30, init: (0.0, 0.0), sim: SimOptions::default() }
    }
}

impl Oscillator {
    /// Run to the limit cycle and pick a start state just before a rising crossing.
    pub fn settle(circuit: CircuitParams, memristor: MemristorParams, o: SettleOptions) -> Result<Self> {
        circuit.validate()?;
        let dt = match o.dt {
            Some(dt) => dt,
            None => {
                let dt0 = circuit.rc() / 100.0;
                let boot =
                    simulate_circuit_with(&circuit, &memristor, o.init, &InjectionSignal::none(), dt0, 300.0 * circuit.rc(), &o.sim)?;
                let mid = boot.mid_level(0.5);
                let crossings = rising_crossings(&boot.t, &boot.v, mid);
                let half = &crossings[crossings.len() / 2..];
                if half.len() < 3 {
                    return Err(Error::NoOscillation("bootstrap run shows no oscillation".into()));
                }
                let t_est = (half[half.len() - 1] - half[0]) / (half.len() - 1) as f64;
                t_est / o.steps_per_period as f64
            }
        };
        // Two passes: a long one to reach the cycle, then one whose window is
        // long enough for the crossing-count requirements.
        let guess = dt * o.steps_per_period as f64;
        let t_end = guess * (o.settle_cycles + o.periods + 12) as f64 / 0.8;
        let traj = simulate_circuit_with(&circuit, &memristor, o.init, &InjectionSignal::none(), dt, t_end, &o.sim)?;
        let mid = traj.mid_level(0.5);
        let cycle = detect_limit_cycle(&traj, mid, o.settle_cycles)?;
        let crossings = rising_crossings(&traj.t, &traj.v, mid);
        let c = crossings[crossings.len() - 2];
        let k = ((c / dt).floor() as usize).min(traj.len() - 1);
        let k = if traj.t[k] > c { k - 1 } else { k };
        Ok(Self { circuit, memristor, opts: o.sim, dt, start: (traj.v[k], traj.x[k]), crossing_offset: c - traj.t[k], cycle })
    }

    pub fn period(&self) -> f64 {
        self.cycle.period
    }

    pub fn omega0(&self) -> f64 {
        self.cycle.omega0
    }

    /// Rising reference crossings of a run started from `start`.
    pub fn run_crossings(&self, inj: &InjectionSignal, t_end: f64) -> Result<Vec<f64>> {
        let traj = simulate_circuit_with(&self.circuit, &self.memristor, self.start, inj, self.dt, t_end, &self.opts)?;
        Ok(rising_crossings(&traj.t, &traj.v, self.cycle.threshold))
    }
}

/// `n` full circuits coupled by signed, quantized current sources: oscillator
/// `n` receives `sum_j s_nj i0 sign(v_j - v_ref)` with `sign(0) = +1`.
#[derive(Debug, Clone)]
pub struct FullNetwork {
    pub circuit: CircuitParams,
    pub memristor: MemristorParams,
    pub coupling: CouplingMatrix,
    pub i0: f64,
    /// Comparator level of the coupler. Use the cycle mid-level; the node
    /// voltage never goes negative so a zero level would never switch.
    pub v_ref: f64,
    pub opts: SimOptions,
    /// Keep every `record_every`-th sample.
    pub record_every: usize,
}

impl FullNetwork {
    pub fn run(&self, init: &[(f64, f64)], dt: f64, t_end: f64) -> Result<Vec<Trajectory>> {
        self.circuit.validate()?;
        let n = self.coupling.n();
        if init.len() != n {
            return Err(Error::BadDimensions(format!("{} initial states for {n} oscillators", init.len())));
        }
        let steps = check_span(dt, t_end)?;
        let every = self.record_every.max(1);
        let w: Vec<f64> = self.coupling.entries().iter().map(|&s| s as f64 * self.i0).collect();
        let (c, m, vref) = (&self.circuit, &self.memristor, self.v_ref);
        let mut y: Vec<f64> = init.iter().flat_map(|&(v, x)| [v, x]).collect();
        let mut sgn = vec![0.0; n];
        let mut st = Stepper::new(self.opts.method, 2 * n);
        let mut out: Vec<Trajectory> = (0..n).map(|_| Trajectory::with_capacity(steps / every + 1)).collect();
        let record = |t: f64, y: &[f64], out: &mut Vec<Trajectory>| {
            for (j, tr) in out.iter_mut().enumerate() {
                tr.push(t, y[2 * j], y[2 * j + 1], m);
            }
        };
        record(0.0, &y, &mut out);
        let mut f = |_t: f64, s: &[f64], d: &mut [f64]| {
            for j in 0..n {
                sgn[j] = if s[2 * j] - vref >= 0.0 { 1.0 } else { -1.0 };
            }
            for i in 0..n {
                let row = &w[i * n..(i + 1) * n];
                let mut inj = 0.0;
                for j in 0..n {
                    inj += row[j] * sgn[j];
                }
                let (dv, dx) = circuit_rhs(c, m, s[2 * i], s[2 * i + 1], inj);
                d[2 * i] = dv;
                d[2 * i + 1] = dx;
            }
        };
        for k in 0..steps {
            let t0 = k as f64 * dt;
            st.step(&mut f, t0, &mut y, dt);
            let t1 = (k + 1) as f64 * dt;
            if y.chunks(2).any(|s| !(s[0].abs() <= self.opts.v_bound && s[1].abs() <= self.opts.x_bound)) {
                return Err(Error::Diverged { t: t1 });
            }
            if (k + 1) % every == 0 {
                record(t1, &y, &mut out);
            }
        }
        Ok(out)
    }
}

/// Co-integrate `n` coupled circuits; see [`FullNetwork`].
#[allow(clippy::too_many_arguments)]
pub fn simulate_full_network(
    n: usize,
    cp: &CircuitParams,
    mp: &MemristorParams,
    coupling: &CouplingMatrix,
    i0: f64,
    v_ref: f64,
    init: &[(f64, f64)],
    dt: f64,
    t_end: f64,
) -> Result<Vec<Trajectory>> {
    if coupling.n() != n {
        return Err(Error::BadDimensions(format!("coupling is {0}x{0}, expected {n}", coupling.n())));
    }
    FullNetwork { circuit: *cp, memristor: mp.clone(), coupling: coupling.clone(), i0, v_ref, opts: SimOptions::default(), record_every: 1 }
        .run(init, dt, t_end)
}

/// Steady phase of each trajectory relative to the first, from the last
/// rising crossings: `theta_n - theta_1 = omega (t_1 - t_n)`, wrapped.
pub fn crossing_phase_differences(trajs: &[Trajectory], threshold: f64, period: f64) -> Result<Vec<f64>> {
    let first = trajs.first().ok_or_else(|| Error::BadDimensions("no trajectories".into()))?;
    let c1 = rising_crossings(&first.t, &first.v, threshold);
    let r = *c1.last().ok_or_else(|| Error::NoOscillation("reference oscillator has no crossings".into()))?;
    trajs
        .iter()
        .map(|tr| {
            let c = rising_crossings(&tr.t, &tr.v, threshold);
            let near = c
                .iter()
                .copied()
                .min_by(|a, b| (a - r).abs().total_cmp(&(b - r).abs()))
                .ok_or_else(|| Error::NoOscillation("oscillator has no crossings".into()))?;
            Ok(crate::phasenet::wrap(TAU * (r - near) / period))
        })
        .collect()
}
