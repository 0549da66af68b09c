//! Run configuration: one TOML file describes any experiment.
//!
//! Every section is optional. Values are resolved in this order: built-in
//! defaults, the group preset (`group = "A"` or `"B"`), the file, then
//! command-line overrides. Unknown keys are rejected by their full dotted name.
//!
//! ```toml
//! group = "B"
//! seed = 7
//! out = "runs/b"
//!
//! [memristor]          # inline coefficients, or `file = "params.toml"`
//! a1 = -5.9e6
//!
//! [circuit]
//! vdc = 3.3
//! rs = 810.0
//! cp = 800e-12
//!
//! [sweep]
//! v_min = 0.0
//! v_max = 10.0
//! points = 2001
//!
//! [settle]
//! steps_per_period = 2000
//! settle_cycles = 20
//! periods = 30
//! method = "rk4"
//!
//! [pulse]
//! b = 1e-3
//! h = 6e-9
//!
//! [prc]
//! samples = 64
//! k_periods = 20
//! order = 8
//! file = "prc.csv"     # ppv only: reuse a measured PRC
//!
//! [pair]
//! current = 5.53e-6
//! init_offset = 1.0
//! periods = 300
//! full_circuit = true
//!
//! [onn]
//! patterns = "patterns.txt"
//! input = "input.txt"  # or `pattern = 0` and `flips = 6`
//! i0 = 5.33e-6
//! freq_deviation = 0.0
//! jitter = 0.3
//! t_init = 0.0
//! t_end = 30e-6
//! engine = "averaged"
//! q_order = 8
//! m_order = 8
//! normalized = true
//! harmonic_index = "printed"
//! color = "zero_is_black"
//!
//! [bench]
//! full_steps_per_period = 2000
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::memristor::MemristorParams;
use crate::ode::Method;
use crate::onn::{Engine, PatternSet, PhaseColor};
use crate::phasenet::{HarmonicIndex, SeriesForm};
use crate::ppv::PulseSpec;
use crate::transient::CircuitParams;

/// Waveform group of the recognition experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    /// 1 kohm / 3500 pF, sawtooth-like output.
    A,
    /// 810 ohm / 800 pF, near-sinusoidal output.
    B,
}

impl Group {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Group::A),
            "B" | "b" => Ok(Group::B),
            _ => Err(Error::config("group", format!("expected \"A\" or \"B\", got {s:?}"))),
        }
    }

    pub fn circuit(self) -> CircuitParams {
        match self {
            Group::A => CircuitParams::sawtooth(),
            Group::B => CircuitParams::sinusoid(),
        }
    }

    /// Default coupler unit current. The two values give both groups the
    /// same coupling rate `omega0 i0 max|Gamma| max_row_sum|s|` with the
    /// bundled surrogate and pattern set.
    pub fn onn_i0(self) -> f64 {
        match self {
            Group::A => 1.0e-5,
            Group::B => 5.33e-6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Group::A => "A",
            Group::B => "B",
        }
    }
}

/// DC sweep settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub v_min: f64,
    pub v_max: f64,
    pub points: usize,
    pub tol: f64,
}

/// Limit-cycle settling settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettleConfig {
    pub steps_per_period: usize,
    pub settle_cycles: usize,
    pub periods: usize,
    pub method: Method,
}

/// PRC extraction settings.
#[derive(Debug, Clone, PartialEq)]
pub struct PrcConfig {
    pub samples: usize,
    pub k_periods: usize,
    pub order: usize,
    pub file: Option<PathBuf>,
}

/// Two-oscillator run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairConfig {
    /// Magnitude of the coupling current (A); runs use `+current` and `-current`.
    pub current: f64,
    /// Initial `theta_2 - theta_1` (rad).
    pub init_offset: f64,
    pub periods: usize,
    pub phase_steps_per_period: usize,
    pub full_circuit: bool,
    pub full_steps_per_period: usize,
}

/// How the test image is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSpec {
    File(PathBuf),
    /// Stored pattern `pattern` with `flips` pixels inverted (seeded).
    Corrupted {
        pattern: usize,
        flips: usize,
    },
}

/// Recognition run.
#[derive(Debug, Clone, PartialEq)]
pub struct OnnConfig {
    pub patterns: Option<PathBuf>,
    pub input: InputSpec,
    pub i0: f64,
    pub freq_deviation: f64,
    pub jitter: f64,
    pub t_init: f64,
    pub t_end: f64,
    pub engine: Engine,
    pub dt: Option<f64>,
    pub q_order: usize,
    pub m_order: usize,
    pub form: SeriesForm,
    pub color: PhaseColor,
}

/// Full-circuit vs phase-model benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    pub full_steps_per_period: usize,
    /// Flag the run when the final phase pictures differ by more than this (rad).
    pub agreement_tol: f64,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub group: Group,
    pub seed: u64,
    pub out: PathBuf,
    pub memristor: MemristorParams,
    pub circuit: CircuitParams,
    pub sweep: SweepConfig,
    pub settle: SettleConfig,
    pub pulse: PulseSpec,
    pub prc: PrcConfig,
    pub pair: PairConfig,
    pub onn: OnnConfig,
    pub bench: BenchConfig,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub group: Option<Group>,
}

impl RunConfig {
    /// Built-in defaults for a group.
    pub fn preset(group: Group) -> Self {
        Self {
            group,
            seed: 0,
            out: PathBuf::from("out"),
            memristor: MemristorParams::surrogate(),
            circuit: group.circuit(),
            sweep: SweepConfig { v_min: 0.0, v_max: 10.0, points: 2001, tol: crate::memristor::DEFAULT_ROOT_TOL },
            settle: SettleConfig { steps_per_period: 2000, settle_cycles: 20, periods: 30, method: Method::Rk4 },
            pulse: PulseSpec::default(),
            prc: PrcConfig { samples: 64, k_periods: 20, order: 8, file: None },
            pair: PairConfig {
                current: 5.53e-6,
                init_offset: 1.0,
                periods: 300,
                phase_steps_per_period: 200,
                full_circuit: true,
                full_steps_per_period: 2000,
            },
            onn: OnnConfig {
                patterns: None,
                input: InputSpec::Corrupted { pattern: 0, flips: 6 },
                i0: group.onn_i0(),
                freq_deviation: 0.0,
                jitter: 0.3,
                t_init: 0.0,
                t_end: 30e-6,
                engine: Engine::Averaged,
                dt: None,
                q_order: 8,
                m_order: 8,
                form: SeriesForm::default(),
                color: PhaseColor::default(),
            },
            bench: BenchConfig { full_steps_per_period: 2000, agreement_tol: 0.5 },
        }
    }

    /// Defaults plus overrides, no file.
    pub fn from_overrides(ov: &Overrides) -> Self {
        let mut cfg = Self::preset(ov.group.unwrap_or(Group::B));
        cfg.apply(ov);
        cfg
    }

    pub fn load(path: &Path, ov: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_str_with(&text, base, ov)
    }

    /// Parse `text`; relative paths are taken from `base`.
    pub fn from_str_with(text: &str, base: &Path, ov: &Overrides) -> Result<Self> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| Error::config("<syntax>", e.to_string().trim_end()))?;
        let root = Section::new("", &table);
        let group = match ov.group {
            Some(g) => g,
            None => match root.str("group")? {
                Some(s) => Group::parse(&s)?,
                None => Group::B,
            },
        };
        if ov.group.is_some() {
            root.mark("group");
        }
        let mut cfg = Self::preset(group);
        if let Some(s) = root.u64("seed")? {
            cfg.seed = s;
        }
        if let Some(s) = root.str("out")? {
            cfg.out = base.join(s);
        }
        if let Some(sec) = root.section("memristor")? {
            cfg.memristor = match sec.str("file")? {
                Some(f) => {
                    sec.finish()?;
                    let p = base.join(f);
                    let text = std::fs::read_to_string(&p).map_err(|e| Error::config("memristor.file", format!("{}: {e}", p.display())))?;
                    MemristorParams::from_toml_unchecked(&text)?
                }
                None => MemristorParams::from_value(Value::Table(sec.table.clone()), "memristor")?,
            };
        }
        if let Some(sec) = root.section("circuit")? {
            let c = &mut cfg.circuit;
            set(&mut c.vdc, sec.f64("vdc")?);
            set(&mut c.rs, sec.f64("rs")?);
            set(&mut c.cp, sec.f64("cp")?);
            sec.finish()?;
            check(c.vdc.is_finite(), "circuit.vdc", "must be finite")?;
            check(c.rs > 0.0 && c.rs.is_finite(), "circuit.rs", "must be positive")?;
            check(c.cp > 0.0 && c.cp.is_finite(), "circuit.cp", "must be positive")?;
        }
        if let Some(sec) = root.section("sweep")? {
            let s = &mut cfg.sweep;
            set(&mut s.v_min, sec.f64("v_min")?);
            set(&mut s.v_max, sec.f64("v_max")?);
            set(&mut s.points, sec.usize("points")?);
            set(&mut s.tol, sec.f64("tol")?);
            sec.finish()?;
            check(s.v_min < s.v_max, "sweep.v_max", "must exceed v_min")?;
            check(s.points >= 2, "sweep.points", "need at least 2")?;
            check(s.tol > 0.0, "sweep.tol", "must be positive")?;
        }
        if let Some(sec) = root.section("settle")? {
            let s = &mut cfg.settle;
            set(&mut s.steps_per_period, sec.usize("steps_per_period")?);
            set(&mut s.settle_cycles, sec.usize("settle_cycles")?);
            set(&mut s.periods, sec.usize("periods")?);
            set(&mut s.method, sec.parse::<Method>("method")?);
            sec.finish()?;
            check(s.steps_per_period >= 20, "settle.steps_per_period", "need at least 20")?;
            check(s.periods >= 11, "settle.periods", "need at least 11")?;
        }
        if let Some(sec) = root.section("pulse")? {
            let (mut b, mut h) = (cfg.pulse.b, cfg.pulse.h);
            set(&mut b, sec.f64("b")?);
            set(&mut h, sec.f64("h")?);
            sec.finish()?;
            check(b != 0.0 && b.is_finite(), "pulse.b", "must be finite and non-zero")?;
            check(h > 0.0 && h.is_finite(), "pulse.h", "must be positive")?;
            cfg.pulse = PulseSpec { b, h };
        }
        if let Some(sec) = root.section("prc")? {
            let p = &mut cfg.prc;
            set(&mut p.samples, sec.usize("samples")?);
            set(&mut p.k_periods, sec.usize("k_periods")?);
            set(&mut p.order, sec.usize("order")?);
            if let Some(f) = sec.str("file")? {
                p.file = Some(base.join(f));
            }
            sec.finish()?;
            check(p.order >= 1, "prc.order", "must be at least 1")?;
            check(p.samples >= 16, "prc.samples", "need at least 16")?;
            check(p.samples > 2 * p.order, "prc.samples", "need at least 2 order + 1")?;
            check(p.k_periods >= 1, "prc.k_periods", "must be at least 1")?;
        }
        if let Some(sec) = root.section("pair")? {
            let p = &mut cfg.pair;
            set(&mut p.current, sec.f64("current")?);
            set(&mut p.init_offset, sec.f64("init_offset")?);
            set(&mut p.periods, sec.usize("periods")?);
            set(&mut p.phase_steps_per_period, sec.usize("phase_steps_per_period")?);
            set(&mut p.full_circuit, sec.bool("full_circuit")?);
            set(&mut p.full_steps_per_period, sec.usize("full_steps_per_period")?);
            sec.finish()?;
            check(p.current.is_finite(), "pair.current", "must be finite")?;
            check(p.periods > 0, "pair.periods", "must be positive")?;
            check(p.phase_steps_per_period > 0, "pair.phase_steps_per_period", "must be positive")?;
            check(p.full_steps_per_period > 0, "pair.full_steps_per_period", "must be positive")?;
        }
        if let Some(sec) = root.section("onn")? {
            let o = &mut cfg.onn;
            if let Some(f) = sec.str("patterns")? {
                o.patterns = Some(base.join(f));
            }
            let input = sec.str("input")?;
            let pattern = sec.usize("pattern")?;
            let flips = sec.usize("flips")?;
            match (input, pattern.is_some() || flips.is_some()) {
                (Some(_), true) => return Err(Error::config("onn.input", "give either input or pattern/flips")),
                (Some(f), false) => o.input = InputSpec::File(base.join(f)),
                (None, _) => {
                    if let InputSpec::Corrupted { pattern: p0, flips: f0 } = o.input {
                        o.input = InputSpec::Corrupted { pattern: pattern.unwrap_or(p0), flips: flips.unwrap_or(f0) };
                    }
                }
            }
            set(&mut o.i0, sec.f64("i0")?);
            set(&mut o.freq_deviation, sec.f64("freq_deviation")?);
            set(&mut o.jitter, sec.f64("jitter")?);
            set(&mut o.t_init, sec.f64("t_init")?);
            set(&mut o.t_end, sec.f64("t_end")?);
            set(&mut o.engine, sec.parse::<Engine>("engine")?);
            if let Some(dt) = sec.f64("dt")? {
                o.dt = Some(dt);
            }
            set(&mut o.q_order, sec.usize("q_order")?);
            set(&mut o.m_order, sec.usize("m_order")?);
            set(&mut o.form.normalized, sec.bool("normalized")?);
            set(&mut o.form.index, sec.parse::<HarmonicIndex>("harmonic_index")?);
            set(&mut o.color, sec.parse::<PhaseColor>("color")?);
            sec.finish()?;
            check(o.freq_deviation >= 0.0 && o.freq_deviation < 1.0, "onn.freq_deviation", "must lie in [0, 1)")?;
            check(o.jitter >= 0.0, "onn.jitter", "must be >= 0")?;
            check(o.i0.is_finite(), "onn.i0", "must be finite")?;
            check(o.t_init >= 0.0, "onn.t_init", "must be >= 0")?;
            check(o.t_end > o.t_init && o.t_end.is_finite(), "onn.t_end", "must exceed t_init")?;
            check(o.dt.is_none_or(|d| d > 0.0), "onn.dt", "must be positive")?;
            check(o.q_order > 0, "onn.q_order", "must be positive")?;
            check(o.m_order > 0, "onn.m_order", "must be positive")?;
        }
        if let Some(sec) = root.section("bench")? {
            let b = &mut cfg.bench;
            set(&mut b.full_steps_per_period, sec.usize("full_steps_per_period")?);
            set(&mut b.agreement_tol, sec.f64("agreement_tol")?);
            sec.finish()?;
            check(b.full_steps_per_period >= 20, "bench.full_steps_per_period", "need at least 20")?;
            check(b.agreement_tol >= 0.0, "bench.agreement_tol", "must be >= 0")?;
        }
        root.finish()?;
        cfg.apply(ov);
        Ok(cfg)
    }

    fn apply(&mut self, ov: &Overrides) {
        if let Some(o) = &ov.out {
            self.out = o.clone();
        }
        if let Some(s) = ov.seed {
            self.seed = s;
        }
    }

    /// Hex digest identifying everything that affects results. The output
    /// directory is excluded.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        let mut c = self.clone();
        c.out = PathBuf::new();
        h.update(format!("{c:?}").as_bytes());
        hex::encode(&h.finalize()[..8])
    }

    /// Stored patterns: the file if given, the built-in set otherwise.
    pub fn pattern_set(&self) -> Result<PatternSet> {
        match &self.onn.patterns {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::config("onn.patterns", format!("{}: {e}", p.display())))?;
                PatternSet::parse(&text).map_err(|e| Error::config("onn.patterns", e.to_string()))
            }
            None => Ok(PatternSet::default_set()),
        }
    }
}

fn check(ok: bool, key: &str, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(key, msg))
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

/// A TOML table read key by key, with errors naming the dotted key.
pub(crate) struct Section<'a> {
    prefix: String,
    table: &'a Table,
    used: RefCell<BTreeSet<String>>,
}

impl<'a> Section<'a> {
    pub(crate) fn new(prefix: &str, table: &'a Table) -> Self {
        Self { prefix: prefix.to_string(), table, used: RefCell::new(BTreeSet::new()) }
    }

    fn key(&self, k: &str) -> String {
        if self.prefix.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.prefix)
        }
    }

    fn mark(&self, k: &str) {
        self.used.borrow_mut().insert(k.to_string());
    }

    fn get(&self, k: &str) -> Option<&'a Value> {
        self.mark(k);
        self.table.get(k)
    }

    pub(crate) fn f64(&self, k: &str) -> Result<Option<f64>> {
        match self.get(k) {
            None => Ok(None),
            Some(Value::Float(x)) if x.is_finite() => Ok(Some(*x)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(v) => Err(Error::config(self.key(k), format!("expected a finite number, got {v}"))),
        }
    }

    pub(crate) fn u64(&self, k: &str) -> Result<Option<u64>> {
        match self.get(k) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(v) => Err(Error::config(self.key(k), format!("expected a non-negative integer, got {v}"))),
        }
    }

    pub(crate) fn usize(&self, k: &str) -> Result<Option<usize>> {
        Ok(self.u64(k)?.map(|v| v as usize))
    }

    pub(crate) fn bool(&self, k: &str) -> Result<Option<bool>> {
        match self.get(k) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(v) => Err(Error::config(self.key(k), format!("expected true or false, got {v}"))),
        }
    }

    pub(crate) fn str(&self, k: &str) -> Result<Option<String>> {
        match self.get(k) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(v) => Err(Error::config(self.key(k), format!("expected a string, got {v}"))),
        }
    }

    /// A string naming an enum variant.
    pub(crate) fn parse<T: DeserializeOwned>(&self, k: &str) -> Result<Option<T>> {
        match self.get(k) {
            None => Ok(None),
            Some(v) => {
                v.clone().try_into().map(Some).map_err(|e: toml::de::Error| Error::config(self.key(k), e.message().trim_end().to_string()))
            }
        }
    }

    pub(crate) fn section(&self, k: &str) -> Result<Option<Section<'a>>> {
        match self.get(k) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(Section::new(&self.key(k), t))),
            Some(v) => Err(Error::config(self.key(k), format!("expected a table, got {v}"))),
        }
    }

    /// Fails on the first key that was never read.
    pub(crate) fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        match self.table.keys().find(|k| !used.contains(k.as_str())) {
            Some(k) => Err(Error::config(self.key(k), "unknown key")),
            None => Ok(()),
        }
    }
}
