//! Phase-domain oscillator networks.
//!
//! Each oscillator is a phase `theta_n = omega_n (t + alpha_n)` measured from
//! the rising mid-level crossing of its output. Three models:
//!
//! * pair and direct: `alpha_n' = Gamma(theta_n) sum_j I_nj sign(V(theta_j))`,
//!   integrated at a step that resolves the oscillation;
//! * averaged: `theta_n' = omega_n + sum_j s_nj H_n(theta_j - theta_n)`, with
//!   the square wave `sign(V)` replaced by its odd-harmonic cosine series.
//!
//! The cosine series assumes `sign(V(theta)) ~ cos(theta)`, so the averaged
//! model works internally in a frame shifted by the phase of the output's
//! fundamental. Inputs and outputs stay in the crossing frame.

use std::f64::consts::{FRAC_2_PI, PI, TAU};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::ode::{step_count, Method, Stepper};
use crate::onn::CouplingMatrix;
use crate::ppv::PpvFourier;

/// Wrap to `(-pi, pi]`.
pub fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Coupling strength below which the direct and averaged models are expected
/// to agree: `max_n sum_j |I_nj| * max |Gamma|`.
pub const WEAK_COUPLING: f64 = 0.05;

/// Which Fourier coefficients multiply the `(2i-1)`-th harmonic in `H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarmonicIndex {
    /// `A_i, B_i`, as the connection function is usually printed.
    #[default]
    Printed,
    /// `A_{2i-1}, B_{2i-1}`, the terms that survive averaging.
    OddHarmonic,
}

impl HarmonicIndex {
    fn coeff(self, i: usize) -> usize {
        match self {
            HarmonicIndex::Printed => i,
            HarmonicIndex::OddHarmonic => 2 * i - 1,
        }
    }

    /// Largest `M` a Fourier series of `order` can supply.
    pub fn max_terms(self, order: usize) -> usize {
        match self {
            HarmonicIndex::Printed => order,
            HarmonicIndex::OddHarmonic => order.div_ceil(2),
        }
    }
}

/// Shape of the square-wave and connection-function series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub struct SeriesForm {
    /// Multiply the cosine series by `4/pi` so it converges to `sign`.
    pub normalized: bool,
    pub index: HarmonicIndex,
}

impl Default for SeriesForm {
    fn default() -> Self {
        Self { normalized: true, index: HarmonicIndex::Printed }
    }
}

impl SeriesForm {
    /// The series exactly as printed: no `4/pi`, coefficients `A_i, B_i`.
    pub fn literal() -> Self {
        Self { normalized: false, index: HarmonicIndex::Printed }
    }

    fn scale(&self) -> f64 {
        if self.normalized {
            2.0 * FRAC_2_PI
        } else {
            1.0
        }
    }
}

/// `sum_{i=1..q} (-1)^(i+1) cos((2i-1) theta) / (2i-1)`, times `4/pi` when normalized.
pub fn sign_series(theta: f64, q: usize, normalized: bool) -> f64 {
    let mut s = 0.0;
    for i in 1..=q {
        let k = (2 * i - 1) as f64;
        let term = (k * theta).cos() / k;
        s += if i % 2 == 1 { term } else { -term };
    }
    if normalized {
        s * 2.0 * FRAC_2_PI
    } else {
        s
    }
}

/// Connection function
/// `H(delta) = omega_n i0 sum_{i=1..M} (-1)^(i+1)/(2(2i-1)) [A cos((2i-1)(-delta)) + B sin((2i-1)(-delta))]`
/// with `delta = theta_j - theta_n`. `ppv` must be in the output-aligned frame.
pub fn connection_h(delta: f64, omega_n: f64, i0: f64, ppv: &PpvFourier, m_order: usize, form: SeriesForm) -> f64 {
    let mut s = 0.0;
    for i in 1..=m_order {
        let k = (2 * i - 1) as f64;
        let c = form.index.coeff(i);
        let (a, b) = if c <= ppv.order { (ppv.a[c], ppv.b[c]) } else { (0.0, 0.0) };
        let w = 1.0 / (2.0 * k);
        let w = if i % 2 == 1 { w } else { -w };
        let nd = -delta;
        s += w * (a * (k * nd).cos() + b * (k * nd).sin());
    }
    omega_n * i0 * form.scale() * s
}

/// Phase of the output's fundamental: `sign(V(theta)) ~ cos(theta - phi)`.
pub fn output_phase(vout_cycle: &[f64]) -> f64 {
    if vout_cycle.is_empty() {
        return 0.0;
    }
    let m = vout_cycle.len() as f64;
    let (mut c, mut s) = (0.0, 0.0);
    for (k, &v) in vout_cycle.iter().enumerate() {
        let sg = if v >= 0.0 { 1.0 } else { -1.0 };
        let (sn, cs) = (TAU * k as f64 / m).sin_cos();
        c += sg * cs;
        s += sg * sn;
    }
    s.atan2(c)
}

/// `sign(V(theta))` from one cycle of samples, linearly interpolated, periodic.
#[inline]
pub fn sign_at(vout_cycle: &[f64], theta: f64) -> f64 {
    let m = vout_cycle.len();
    let pos = theta.rem_euclid(TAU) / TAU * m as f64;
    let k = (pos.floor() as usize).min(m - 1);
    let s = pos - k as f64;
    let v = vout_cycle[k] + s * (vout_cycle[(k + 1) % m] - vout_cycle[k]);
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Network description shared by the phase models.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseNetConfig {
    /// Free-running frequencies (rad/s).
    pub omega: Vec<f64>,
    /// PPV of the waveform class, crossing frame, 1/A.
    pub ppv: PpvFourier,
    /// Coupling currents `I_nj` (A), row-major `n x n`.
    pub i_currents: Vec<f64>,
    /// One cycle of output relative to the coupler level, uniform in phase.
    pub vout_cycle: Vec<f64>,
    pub q_order: usize,
    pub m_order: usize,
    pub form: SeriesForm,
}

impl PhaseNetConfig {
    pub fn n(&self) -> usize {
        self.omega.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 || self.i_currents.len() != n * n {
            return Err(Error::BadDimensions(format!("{} currents for {n} oscillators", self.i_currents.len())));
        }
        if self.omega.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidParams("all omega must be positive".into()));
        }
        if (0..n).any(|i| self.i_currents[i * n + i] != 0.0) {
            return Err(Error::InvalidParams("coupling currents must be zero on the diagonal".into()));
        }
        if self.vout_cycle.len() < 2 {
            return Err(Error::InvalidParams("vout_cycle needs at least two samples".into()));
        }
        Ok(())
    }

    /// `max_n sum_j |I_nj| * max |Gamma|`, the peak dimensionless `alpha` rate.
    pub fn coupling_strength(&self) -> f64 {
        let n = self.n();
        let row = (0..n).map(|i| self.i_currents[i * n..(i + 1) * n].iter().map(|c| c.abs()).sum::<f64>()).fold(0.0, f64::max);
        row * self.ppv.max_abs(512)
    }
}

/// Sampled phase trajectories.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhaseTrace {
    pub t: Vec<f64>,
    /// `alpha[n][k]` in seconds.
    pub alpha: Vec<Vec<f64>>,
    /// `theta[n][k]` in radians, unwrapped.
    pub theta: Vec<Vec<f64>>,
}

impl PhaseTrace {
    fn new(n: usize, cap: usize) -> Self {
        Self {
            t: Vec::with_capacity(cap),
            alpha: (0..n).map(|_| Vec::with_capacity(cap)).collect(),
            theta: (0..n).map(|_| Vec::with_capacity(cap)).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.theta.len()
    }

    fn push_alpha(&mut self, t: f64, alpha: &[f64], omega: &[f64]) {
        self.t.push(t);
        for (i, &a) in alpha.iter().enumerate() {
            self.alpha[i].push(a);
            self.theta[i].push(omega[i] * (t + a));
        }
    }

    fn push_theta(&mut self, t: f64, theta: &[f64], omega: &[f64]) {
        self.t.push(t);
        for (i, &th) in theta.iter().enumerate() {
            self.theta[i].push(th);
            self.alpha[i].push(th / omega[i] - t);
        }
    }

    /// Final `theta_n - theta_1`, wrapped.
    pub fn final_differences(&self) -> Vec<f64> {
        let k = self.t.len() - 1;
        let r = self.theta[0][k];
        self.theta.iter().map(|th| wrap(th[k] - r)).collect()
    }

    /// `theta_n(k) - theta_1(k)`, wrapped.
    pub fn difference_series(&self, n: usize) -> Vec<f64> {
        self.theta[n].iter().zip(&self.theta[0]).map(|(a, b)| wrap(a - b)).collect()
    }

    /// Drift of `theta_n - theta_1` sampled each time `theta_1` passes a
    /// multiple of `2 pi`, so ripple within a cycle cancels. Largest rate
    /// between consecutive samples ending in the last `frac` of the run;
    /// falls back to [`PhaseTrace::max_drift`] with fewer than two samples.
    pub fn strobe_drift(&self, frac: f64) -> f64 {
        let len = self.t.len();
        let th0 = self.theta.first().map_or(&[][..], |v| &v[..]);
        let mut strobes = Vec::new();
        for k in 0..len.saturating_sub(1) {
            let (a, b) = (th0[k] / TAU, th0[k + 1] / TAU);
            let mut m = a.floor() + 1.0;
            while m <= b {
                strobes.push((k, (m - a) / (b - a)));
                m += 1.0;
            }
        }
        if strobes.len() < 2 {
            return self.max_drift(frac);
        }
        let t_end = self.t[len - 1];
        let cut = t_end - frac * (t_end - self.t[0]);
        let at = |v: &[f64], (k, w): (usize, f64)| v[k] + w * (v[k + 1] - v[k]);
        let first = strobes.iter().position(|&s| at(&self.t, s) >= cut).unwrap_or(strobes.len() - 1).max(1);
        let mut worst = 0.0f64;
        for th in &self.theta[1..] {
            let diff = |s: (usize, f64)| at(th, s) - at(th0, s);
            for j in first..strobes.len() {
                let dt = at(&self.t, strobes[j]) - at(&self.t, strobes[j - 1]);
                worst = worst.max(((diff(strobes[j]) - diff(strobes[j - 1])) / dt).abs());
            }
        }
        worst
    }

    /// Largest `|d(theta_n - theta_1)/dt|` over the last `frac` of the run.
    pub fn max_drift(&self, frac: f64) -> f64 {
        let len = self.t.len();
        if len < 2 {
            return 0.0;
        }
        let t_end = self.t[len - 1];
        let from = self.t.partition_point(|&t| t < t_end - frac * (t_end - self.t[0])).min(len - 2);
        let mut worst = 0.0f64;
        for th in &self.theta {
            for k in from..len - 1 {
                let d1 = th[k + 1] - self.theta[0][k + 1];
                let d0 = th[k] - self.theta[0][k];
                worst = worst.max(((d1 - d0) / (self.t[k + 1] - self.t[k])).abs());
            }
        }
        worst
    }
}

/// Integration controls for the phase models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseRunOptions {
    pub method: Method,
    /// Divergence bound on `|alpha|` (s).
    pub alpha_bound: f64,
}

impl Default for PhaseRunOptions {
    fn default() -> Self {
        Self { method: Method::Rk4, alpha_bound: 1.0 }
    }
}

fn check_span(dt: f64, t_end: f64) -> Result<usize> {
    if !(dt > 0.0) || !(t_end > dt) || !t_end.is_finite() {
        return Err(Error::BadDuration(format!("need 0 < dt < t_end, got dt={dt:e}, t_end={t_end:e}")));
    }
    Ok(step_count(dt, t_end))
}

/// Two identical oscillators sharing `omega0`:
/// `alpha_1' = Gamma(theta_1) i12 sign(V(theta_2))` and the mirror image.
#[allow(clippy::too_many_arguments)]
pub fn simulate_pair(
    gamma: &PpvFourier,
    vout_cycle: &[f64],
    omega0: f64,
    i12: f64,
    i21: f64,
    init: (f64, f64),
    dt: f64,
    t_end: f64,
) -> Result<PhaseTrace> {
    if vout_cycle.len() < 2 || !(omega0 > 0.0) {
        return Err(Error::InvalidParams("pair needs omega0 > 0 and a sampled output cycle".into()));
    }
    let steps = check_span(dt, t_end)?;
    let opts = PhaseRunOptions::default();
    let omega = [omega0, omega0];
    let mut y = [init.0, init.1];
    let mut tr = PhaseTrace::new(2, steps + 1);
    let mut st = Stepper::new(opts.method, 2);
    let mut f = |t: f64, a: &[f64], d: &mut [f64]| {
        let th1 = omega0 * (t + a[0]);
        let th2 = omega0 * (t + a[1]);
        let s1 = sign_at(vout_cycle, th1);
        let s2 = sign_at(vout_cycle, th2);
        d[0] = gamma.eval(th1) * (i12 * s2);
        d[1] = gamma.eval(th2) * (i21 * s1);
    };
    tr.push_alpha(0.0, &y, &omega);
    for k in 0..steps {
        st.step(&mut f, k as f64 * dt, &mut y, dt);
        let t1 = (k + 1) as f64 * dt;
        if !y.iter().all(|a| a.abs() <= opts.alpha_bound) {
            return Err(Error::Diverged { t: t1 });
        }
        tr.push_alpha(t1, &y, &omega);
    }
    Ok(tr)
}

/// `alpha_n' = Gamma(theta_n) sum_j I_nj sign(V(theta_j))`.
pub fn simulate_direct(cfg: &PhaseNetConfig, init: &[f64], dt: f64, t_end: f64) -> Result<PhaseTrace> {
    cfg.validate()?;
    let n = cfg.n();
    if init.len() != n {
        return Err(Error::BadDimensions(format!("{} initial alphas for {n} oscillators", init.len())));
    }
    let steps = check_span(dt, t_end)?;
    let opts = PhaseRunOptions::default();
    let (omega, w, vc, g) = (&cfg.omega, &cfg.i_currents, &cfg.vout_cycle, &cfg.ppv);
    let mut y = init.to_vec();
    let mut sgn = vec![0.0; n];
    let mut tr = PhaseTrace::new(n, steps + 1);
    let mut st = Stepper::new(opts.method, n);
    let mut f = |t: f64, a: &[f64], d: &mut [f64]| {
        for j in 0..n {
            sgn[j] = sign_at(vc, omega[j] * (t + a[j]));
        }
        for i in 0..n {
            let th = omega[i] * (t + a[i]);
            let row = &w[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for j in 0..n {
                acc += row[j] * sgn[j];
            }
            d[i] = g.eval(th) * acc;
        }
    };
    tr.push_alpha(0.0, &y, omega);
    for k in 0..steps {
        st.step(&mut f, k as f64 * dt, &mut y, dt);
        let t1 = (k + 1) as f64 * dt;
        if !y.iter().all(|a| a.abs() <= opts.alpha_bound) {
            return Err(Error::Diverged { t: t1 });
        }
        tr.push_alpha(t1, &y, omega);
    }
    Ok(tr)
}

/// Per-harmonic weights `w_i` and coefficients of the averaged model.
struct Harmonics {
    k: Vec<usize>,
    wa: Vec<f64>,
    wb: Vec<f64>,
}

fn harmonics(ppv: &PpvFourier, m: usize, form: SeriesForm) -> Result<Harmonics> {
    let mut h = Harmonics { k: Vec::new(), wa: Vec::new(), wb: Vec::new() };
    for i in 1..=m {
        let c = form.index.coeff(i);
        if c > ppv.order {
            return Err(Error::InvalidParams(format!("m_order {m} needs Fourier coefficient {c}, series has order {}", ppv.order)));
        }
        let k = 2 * i - 1;
        let w = form.scale() / (2.0 * k as f64) * if i % 2 == 1 { 1.0 } else { -1.0 };
        h.k.push(k);
        h.wa.push(w * ppv.a[c]);
        h.wb.push(w * ppv.b[c]);
    }
    Ok(h)
}

/// Step size for the averaged model: the inverse of the largest coupling
/// rate, capped at the fastest period. The averaged equations carry no
/// oscillation at `omega`, so only the coupling sets the time scale.
pub fn suggest_averaged_dt(cfg: &PhaseNetConfig, s: &CouplingMatrix, i0: f64) -> f64 {
    let w_max = cfg.omega.iter().copied().fold(0.0, f64::max);
    let aligned = cfg.ppv.rotated(output_phase(&cfg.vout_cycle));
    let hsum: f64 =
        harmonics(&aligned, cfg.m_order, cfg.form).map(|h| h.wa.iter().zip(&h.wb).map(|(a, b)| a.abs() + b.abs()).sum()).unwrap_or(0.0);
    let rate = w_max * i0.abs() * s.max_row_abs() as f64 * hsum;
    let base = TAU / w_max;
    if rate > 0.0 {
        base.min(1.0 / rate)
    } else {
        base
    }
}

/// `theta_n' = omega_n + sum_j s_nj H_n(theta_j - theta_n)`.
///
/// `init` and the returned phases are in the crossing frame. Hebbian coupling
/// matrices are applied through their pattern factors in `O(N p M)` per
/// evaluation.
pub fn simulate_averaged(cfg: &PhaseNetConfig, s: &CouplingMatrix, i0: f64, init: &[f64], dt: f64, t_end: f64) -> Result<PhaseTrace> {
    let n = cfg.n();
    if n == 0 || s.n() != n || init.len() != n {
        return Err(Error::BadDimensions(format!("coupling {0}x{0}, {1} phases, {n} frequencies", s.n(), init.len())));
    }
    if cfg.omega.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::InvalidParams("all omega must be positive".into()));
    }
    let steps = check_span(dt, t_end)?;
    let phi = output_phase(&cfg.vout_cycle);
    let h = harmonics(&cfg.ppv.rotated(phi), cfg.m_order, cfg.form)?;
    let omega = &cfg.omega;
    let mut y: Vec<f64> = init.iter().map(|th| th - phi).collect();
    let mut eng = CouplingSums::new(s, n, &h)?;
    let mut tr = PhaseTrace::new(n, steps + 1);
    let mut st = Stepper::new(Method::Rk4, n);
    let mut shifted = vec![0.0; n];
    let mut f = |_t: f64, th: &[f64], d: &mut [f64]| {
        eng.eval(th, d);
        for i in 0..n {
            d[i] = omega[i] + omega[i] * i0 * d[i];
        }
    };
    let mut push = |t: f64, y: &[f64], tr: &mut PhaseTrace| {
        for i in 0..n {
            shifted[i] = y[i] + phi;
        }
        tr.push_theta(t, &shifted, omega);
    };
    push(0.0, &y, &mut tr);
    for k in 0..steps {
        st.step(&mut f, k as f64 * dt, &mut y, dt);
        let t1 = (k + 1) as f64 * dt;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { t: t1 });
        }
        push(t1, &y, &mut tr);
    }
    Ok(tr)
}

/// Coupling term of every oscillator for all odd harmonics at once.
///
/// With `u_m = e^{i (2m+1) theta}` per oscillator and `C + iS = sum_j s_nj u_m(j)`,
/// the term is `sum_m wa_m Re(conj(u_m) (C + iS)) + wb_m Im(conj(u_m) (C + iS))`.
/// The harmonic count is padded to a power of two (zero weights) so the
/// inner loops run over fixed-size arrays.
struct CouplingSums {
    n: usize,
    width: usize,
    wa: Vec<f64>,
    wb: Vec<f64>,
    /// Dense `s` as `f64`, empty when factored.
    dense: Vec<f64>,
    /// Pattern factors as `f64`, one row of `n` per pattern.
    factors: Vec<f64>,
    np: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
    /// Per pattern: weighted projections `wa P - wb Q` and `wa Q + wb P`.
    u: Vec<f64>,
    v: Vec<f64>,
}

const MAX_WIDTH: usize = 64;

impl CouplingSums {
    fn new(s: &CouplingMatrix, n: usize, h: &Harmonics) -> Result<Self> {
        let m = h.wa.len();
        let width = m.next_power_of_two();
        if width > MAX_WIDTH {
            return Err(Error::InvalidParams(format!("m_order {m} above the supported {MAX_WIDTH}")));
        }
        let pad = |w: &[f64]| {
            let mut v = w.to_vec();
            v.resize(width, 0.0);
            v
        };
        let factors: Vec<f64> = s.factors().map_or_else(Vec::new, |p| p.iter().flatten().map(|&v| v as f64).collect());
        let dense = if factors.is_empty() { s.entries().iter().map(|&v| v as f64).collect() } else { Vec::new() };
        let np = factors.len() / n.max(1);
        Ok(Self {
            n,
            width,
            wa: pad(&h.wa),
            wb: pad(&h.wb),
            dense,
            factors,
            np,
            cos: vec![0.0; n * width],
            sin: vec![0.0; n * width],
            u: vec![0.0; np * width],
            v: vec![0.0; np * width],
        })
    }

    fn eval(&mut self, theta: &[f64], d: &mut [f64]) {
        match self.width {
            1 => self.eval_w::<1>(theta, d),
            2 => self.eval_w::<2>(theta, d),
            4 => self.eval_w::<4>(theta, d),
            8 => self.eval_w::<8>(theta, d),
            16 => self.eval_w::<16>(theta, d),
            32 => self.eval_w::<32>(theta, d),
            _ => self.eval_w::<64>(theta, d),
        }
    }

    fn eval_w<const W: usize>(&mut self, theta: &[f64], d: &mut [f64]) {
        let n = self.n;
        let wa: &[f64; W] = self.wa[..W].try_into().expect("padded width");
        let wb: &[f64; W] = self.wb[..W].try_into().expect("padded width");
        let cos = &mut self.cos.as_chunks_mut::<W>().0[..n];
        let sin = &mut self.sin.as_chunks_mut::<W>().0[..n];
        for ((cr, sr), &th) in cos.iter_mut().zip(sin.iter_mut()).zip(theta) {
            let (s1, c1) = th.sin_cos();
            let (c2, s2) = (c1 * c1 - s1 * s1, 2.0 * c1 * s1);
            let (mut c, mut s) = (c1, s1);
            for k in 0..W {
                cr[k] = c;
                sr[k] = s;
                (c, s) = (c * c2 - s * s2, c * s2 + s * c2);
            }
        }
        let (cos, sin) = (&*cos, &*sin);
        if self.factors.is_empty() {
            for (i, di) in d.iter_mut().enumerate().take(n) {
                let (mut cc, mut ss) = ([0.0; W], [0.0; W]);
                for (j, &w) in self.dense[i * n..(i + 1) * n].iter().enumerate() {
                    if w != 0.0 {
                        for k in 0..W {
                            cc[k] += w * cos[j][k];
                            ss[k] += w * sin[j][k];
                        }
                    }
                }
                let mut acc = 0.0;
                for k in 0..W {
                    acc += cos[i][k] * (wa[k] * cc[k] - wb[k] * ss[k]) + sin[i][k] * (wa[k] * ss[k] + wb[k] * cc[k]);
                }
                *di = acc;
            }
        } else {
            let u = &mut self.u.as_chunks_mut::<W>().0[..self.np];
            let v = &mut self.v.as_chunks_mut::<W>().0[..self.np];
            for ((row, up), vp) in self.factors.chunks_exact(n).zip(u.iter_mut()).zip(v.iter_mut()) {
                let (mut pc, mut ps) = ([0.0; W], [0.0; W]);
                for ((&w, c), s) in row.iter().zip(cos).zip(sin) {
                    for k in 0..W {
                        pc[k] += w * c[k];
                        ps[k] += w * s[k];
                    }
                }
                for k in 0..W {
                    up[k] = wa[k] * pc[k] - wb[k] * ps[k];
                    vp[k] = wa[k] * ps[k] + wb[k] * pc[k];
                }
            }
            // s_nn = 0 removes each oscillator's own contribution, which is
            // -np wa_m per harmonic since |u_m| = 1.
            let own = -(self.np as f64) * wa.iter().sum::<f64>();
            for (i, di) in d.iter_mut().enumerate().take(n) {
                let (mut ui, mut vi) = ([0.0; W], [0.0; W]);
                for (p, (up, vp)) in u.iter().zip(v.iter()).enumerate() {
                    let w = self.factors[p * n + i];
                    for k in 0..W {
                        ui[k] += w * up[k];
                        vi[k] += w * vp[k];
                    }
                }
                let mut acc = own;
                for k in 0..W {
                    acc += cos[i][k] * ui[k] + sin[i][k] * vi[k];
                }
                *di = acc;
            }
        }
    }
}
