//! Oscillatory associative memory: Hebbian weights, input encoding as initial
//! phases, recognition runs and phase-to-pixel readout.
//!
//! Pixels are `+1` (black) and `-1` (white). A pixel is encoded as phase 0
//! (`+1`) or `pi` (`-1`) relative to oscillator 1; which colour phase 0 means
//! on readout is [`PhaseColor`]. Patterns and their inverses are the same
//! memory.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::phasenet::{simulate_averaged, simulate_direct, suggest_averaged_dt, wrap, PhaseNetConfig, PhaseTrace, SeriesForm};
use crate::ppv::WaveformModel;

/// Stored binary images.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternSet {
    pub rows: usize,
    pub cols: usize,
    pub patterns: Vec<Vec<i8>>,
}

impl PatternSet {
    pub fn new(rows: usize, cols: usize, patterns: Vec<Vec<i8>>) -> Result<Self> {
        let n = rows * cols;
        if patterns.is_empty() {
            return Err(Error::InvalidParams("pattern set is empty".into()));
        }
        for p in &patterns {
            if p.len() != n {
                return Err(Error::BadDimensions(format!("pattern has {} pixels, expected {rows}x{cols}", p.len())));
            }
            if p.iter().any(|&v| v != 1 && v != -1) {
                return Err(Error::InvalidParams("pattern entries must be +1 or -1".into()));
            }
        }
        Ok(Self { rows, cols, patterns })
    }

    pub fn n(&self) -> usize {
        self.rows * self.cols
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Three 6x10 glyphs (L, X, F) with zero mutual overlap.
    pub fn default_set() -> Self {
        let glyphs = [
            "1100000000\n1100000000\n1100000000\n1100000000\n1111111111\n1111111111",
            "1100000011\n0110000110\n0011001100\n0001111000\n0011001100\n0110000110",
            "1111111111\n1100000000\n1111111100\n1100000000\n1100000000\n1100000000",
        ];
        let pats = glyphs.iter().map(|g| parse_grid(g).expect("built-in glyph").2).collect();
        Self::new(6, 10, pats).expect("built-in glyphs")
    }

    /// Parse several grids separated by blank lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut grids = Vec::new();
        let mut block = String::new();
        for line in text.lines().map(str::trim).filter(|l| !l.starts_with('#')) {
            if line.is_empty() {
                if !block.is_empty() {
                    grids.push(parse_grid(&block)?);
                    block.clear();
                }
            } else {
                block.push_str(line);
                block.push('\n');
            }
        }
        if !block.is_empty() {
            grids.push(parse_grid(&block)?);
        }
        let (rows, cols) = grids.first().map(|g| (g.0, g.1)).ok_or_else(|| Error::InvalidParams("no patterns in file".into()))?;
        if grids.iter().any(|g| g.0 != rows || g.1 != cols) {
            return Err(Error::BadDimensions("patterns differ in size".into()));
        }
        Self::new(rows, cols, grids.into_iter().map(|g| g.2).collect())
    }
}

/// One `{0,1}` grid, `1` is black (`+1`).
pub fn parse_grid(text: &str) -> Result<(usize, usize, Vec<i8>)> {
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    let cols = lines.first().map_or(0, |l| l.len());
    let mut px = Vec::with_capacity(lines.len() * cols);
    for l in &lines {
        if l.len() != cols {
            return Err(Error::BadDimensions("ragged pattern grid".into()));
        }
        for ch in l.chars() {
            px.push(match ch {
                '1' => 1,
                '0' => -1,
                _ => return Err(Error::InvalidParams(format!("unexpected pattern character {ch:?}"))),
            });
        }
    }
    Ok((lines.len(), cols, px))
}

pub fn format_grid(pixels: &[i8], cols: usize) -> String {
    let mut s = String::new();
    for row in pixels.chunks(cols) {
        for &p in row {
            s.push(if p > 0 { '1' } else { '0' });
        }
        s.push('\n');
    }
    s
}

/// Symmetric integer coupling with zero diagonal. Matrices built from patterns
/// keep the patterns so `s x` can be applied in `O(N p)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingMatrix {
    n: usize,
    s: Vec<i32>,
    factors: Option<Vec<Vec<i8>>>,
}

impl CouplingMatrix {
    pub fn new(n: usize, s: Vec<i32>) -> Result<Self> {
        if s.len() != n * n {
            return Err(Error::BadDimensions(format!("{} entries for {n}x{n}", s.len())));
        }
        for i in 0..n {
            if s[i * n + i] != 0 {
                return Err(Error::InvalidParams("coupling diagonal must be zero".into()));
            }
            for j in 0..i {
                if s[i * n + j] != s[j * n + i] {
                    return Err(Error::InvalidParams("coupling must be symmetric".into()));
                }
            }
        }
        Ok(Self { n, s, factors: None })
    }

    /// Every off-diagonal entry equal to `v`.
    pub fn all_to_all(n: usize, v: i32) -> Self {
        let s = (0..n * n).map(|k| if k / n == k % n { 0 } else { v }).collect();
        Self { n, s, factors: None }
    }

    pub fn zeros(n: usize) -> Self {
        Self::all_to_all(n, 0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> i32 {
        self.s[i * self.n + j]
    }

    pub fn entries(&self) -> &[i32] {
        &self.s
    }

    pub fn factors(&self) -> Option<&[Vec<i8>]> {
        self.factors.as_deref()
    }

    pub fn max_row_abs(&self) -> i64 {
        self.s.chunks(self.n.max(1)).map(|r| r.iter().map(|&v| v.unsigned_abs() as i64).sum()).max().unwrap_or(0)
    }

    /// Currents `s_nj * i0` as a flat row-major matrix.
    pub fn currents(&self, i0: f64) -> Vec<f64> {
        self.s.iter().map(|&v| v as f64 * i0).collect()
    }
}

/// `s_nj = sum_k xi_n^k xi_j^k` off the diagonal.
pub fn hebbian_weights(ps: &PatternSet) -> CouplingMatrix {
    let n = ps.n();
    let mut s = vec![0i32; n * n];
    for p in &ps.patterns {
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s[i * n + j] += p[i] as i32 * p[j] as i32;
                }
            }
        }
    }
    CouplingMatrix { n, s, factors: Some(ps.patterns.clone()) }
}

/// `0` for `+1`, `pi` for `-1`, plus uniform jitter in `[-jitter, jitter]`.
pub fn init_phases(test_input: &[i8], rng_seed: u64, jitter: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    test_input
        .iter()
        .map(|&p| {
            let base = if p > 0 { 0.0 } else { PI };
            let j = if jitter > 0.0 { rng.gen_range(-jitter..=jitter) } else { 0.0 };
            base + j
        })
        .collect()
}

/// Flip `k` distinct pixels chosen by `seed`.
pub fn corrupt(pattern: &[i8], k: usize, seed: u64) -> Vec<i8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = pattern.to_vec();
    for idx in sample(&mut rng, pattern.len(), k.min(pattern.len())) {
        out[idx] = -out[idx];
    }
    out
}

/// Colour represented by phase 0 relative to oscillator 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseColor {
    #[default]
    ZeroIsBlack,
    ZeroIsWhite,
}

/// `+1` where `|theta_n - theta_1| < pi/2` (flipped for [`PhaseColor::ZeroIsWhite`]).
pub fn readout_pattern(thetas: &[f64], mapping: PhaseColor) -> Vec<i8> {
    let Some(&r) = thetas.first() else { return Vec::new() };
    thetas
        .iter()
        .map(|th| {
            let near_zero = wrap(th - r).abs() < FRAC_PI_2;
            match (near_zero, mapping) {
                (true, PhaseColor::ZeroIsBlack) | (false, PhaseColor::ZeroIsWhite) => 1,
                _ => -1,
            }
        })
        .collect()
}

/// Plain P2 graymap, black `0` for `+1`, white `255` for `-1`, row-major.
/// `comment` lines are written after the magic number.
pub fn pattern_to_image(pixels: &[i8], rows: usize, cols: usize, comment: &[String]) -> Result<String> {
    if pixels.len() != rows * cols || rows == 0 || cols == 0 {
        return Err(Error::BadDimensions(format!("{} pixels for a {rows}x{cols} image", pixels.len())));
    }
    let mut s = String::from("P2\n");
    for c in comment {
        let _ = writeln!(s, "# {c}");
    }
    let _ = writeln!(s, "{cols} {rows}\n255");
    for row in pixels.chunks(cols) {
        let vals: Vec<&str> = row.iter().map(|&p| if p > 0 { "0" } else { "255" }).collect();
        let _ = writeln!(s, "{}", vals.join(" "));
    }
    Ok(s)
}

/// Inverse of [`pattern_to_image`]: values below 128 are black.
pub fn parse_pgm(text: &str) -> Result<(usize, usize, Vec<i8>)> {
    let mut tokens = text.lines().map(|l| l.split('#').next().unwrap_or("")).flat_map(str::split_whitespace);
    if tokens.next() != Some("P2") {
        return Err(Error::InvalidParams("not a P2 graymap".into()));
    }
    let mut num =
        || -> Result<usize> { tokens.next().and_then(|t| t.parse().ok()).ok_or_else(|| Error::InvalidParams("truncated graymap".into())) };
    let (cols, rows, maxval) = (num()?, num()?, num()?);
    let mut px = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        px.push(if num()? * 2 < maxval + 1 { 1 } else { -1 });
    }
    Ok((rows, cols, px))
}

/// Best match up to global inversion: `(index, hamming)`.
pub fn best_match(ps: &PatternSet, pixels: &[i8]) -> (usize, usize) {
    ps.patterns
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let d = p.iter().zip(pixels).filter(|(a, b)| a != b).count();
            (k, d.min(p.len() - d))
        })
        .min_by_key(|&(k, d)| (d, k))
        .unwrap_or((0, pixels.len()))
}

/// Which phase model integrates the recognition run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    #[default]
    Averaged,
    Direct,
}

/// One recognition run.
#[derive(Debug, Clone, PartialEq)]
pub struct OnnExperiment {
    pub patterns: PatternSet,
    pub test_input: Vec<i8>,
    /// Unit coupler current (A).
    pub i0: f64,
    /// Fractional frequency spread `d`; `omega_n = omega0 (1 + delta_n)`, `delta_n ~ U[-d, d]`.
    pub freq_deviation: f64,
    pub rng_seed: u64,
    /// Initial phase jitter (rad).
    pub jitter: f64,
    /// Input phases are applied at `t_init`; the network then runs to `t_end`.
    pub t_init: f64,
    pub t_end: f64,
    pub engine: Engine,
    /// Step; `None` picks one from the model.
    pub dt: Option<f64>,
    pub q_order: usize,
    pub m_order: usize,
    pub form: SeriesForm,
    pub color: PhaseColor,
}

impl OnnExperiment {
    /// Case-1 style run: 30 us, no mismatch, default jitter.
    pub fn new(patterns: PatternSet, test_input: Vec<i8>, i0: f64) -> Self {
        Self {
            patterns,
            test_input,
            i0,
            freq_deviation: 0.0,
            rng_seed: 0,
            jitter: 0.3,
            t_init: 0.0,
            t_end: 30e-6,
            engine: Engine::Averaged,
            dt: None,
            q_order: 8,
            m_order: 8,
            form: SeriesForm::default(),
            color: PhaseColor::default(),
        }
    }

    /// Per-oscillator frequencies drawn from the seed.
    pub fn frequencies(&self, omega0: f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(1);
        let d = self.freq_deviation;
        (0..self.patterns.n()).map(|_| if d > 0.0 { omega0 * (1.0 + rng.gen_range(-d..=d)) } else { omega0 }).collect()
    }

    /// `m_order` is capped by `q_order` and by the terms the fitted series
    /// can supply under the chosen harmonic indexing.
    pub fn phase_config(&self, model: &WaveformModel, s: &CouplingMatrix) -> PhaseNetConfig {
        PhaseNetConfig {
            omega: self.frequencies(model.omega0),
            ppv: model.ppv.clone(),
            i_currents: s.currents(self.i0),
            vout_cycle: model.vout_cycle.clone(),
            q_order: self.q_order,
            m_order: self.m_order.min(self.q_order).min(self.form.index.max_terms(model.ppv.order)),
            form: self.form,
        }
    }
}

/// Outcome of [`run_recognition`].
#[derive(Debug, Clone, PartialEq)]
pub struct RecognitionResult {
    /// `theta_n - theta_1` at the end, wrapped.
    pub delta_theta: Vec<f64>,
    pub pixels: Vec<i8>,
    /// Stored pattern recovered exactly (up to inversion).
    pub matched: Option<usize>,
    pub best: usize,
    pub hamming: usize,
    pub converged: bool,
    /// Largest cycle-to-cycle drift of `theta_n - theta_1` over the last 5% (rad/s).
    pub drift: f64,
    pub trace: PhaseTrace,
}

/// Run the network from the encoded input and read out the final pattern.
/// Convergence means the phase differences, sampled once per cycle of the
/// first oscillator, drift by less than `1e-3 omega0` over the last 5%.
pub fn run_recognition(exp: &OnnExperiment, model: &WaveformModel) -> Result<RecognitionResult> {
    let n = exp.patterns.n();
    if exp.test_input.len() != n {
        return Err(Error::BadDimensions(format!("test input has {} pixels, network has {n}", exp.test_input.len())));
    }
    if !(exp.t_init >= 0.0 && exp.t_init < exp.t_end) {
        return Err(Error::BadDuration("need 0 <= t_init < t_end".into()));
    }
    let s = hebbian_weights(&exp.patterns);
    let cfg = exp.phase_config(model, &s);
    let theta0 = init_phases(&exp.test_input, exp.rng_seed, exp.jitter);
    let span = exp.t_end - exp.t_init;
    // An automatic step is shortened so the run ends exactly at t_end.
    let fit = |dt: f64| span / (span / dt).ceil();
    let mut trace = match exp.engine {
        Engine::Averaged => {
            let dt = exp.dt.unwrap_or_else(|| fit(suggest_averaged_dt(&cfg, &s, exp.i0)));
            simulate_averaged(&cfg, &s, exp.i0, &theta0, dt, span)?
        }
        Engine::Direct => {
            let dt = exp.dt.unwrap_or_else(|| fit(std::f64::consts::TAU / model.omega0 / 200.0));
            let alpha0: Vec<f64> = theta0.iter().zip(&cfg.omega).map(|(th, w)| th / w).collect();
            simulate_direct(&cfg, &alpha0, dt, span)?
        }
    };
    for t in trace.t.iter_mut() {
        *t += exp.t_init;
    }
    let delta_theta = trace.final_differences();
    let last: Vec<f64> = trace.theta.iter().map(|th| th[th.len() - 1]).collect();
    let pixels = readout_pattern(&last, exp.color);
    let (best, hamming) = best_match(&exp.patterns, &pixels);
    let drift = trace.strobe_drift(0.05);
    Ok(RecognitionResult {
        delta_theta,
        pixels,
        matched: (hamming == 0).then_some(best),
        best,
        hamming,
        converged: drift < 1e-3 * model.omega0,
        drift,
        trace,
    })
}
