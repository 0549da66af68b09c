//! Command-line front end.
//!
//! Each subcommand loads a [`RunConfig`], runs one pipeline and writes its
//! artifacts to the output directory. Exit codes: 0 ok, 1 I/O, 2 config,
//! 3 numeric, 4 no convergence.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::bench::run_bench;
use crate::config::{Group, InputSpec, Overrides, RunConfig};
use crate::error::{Error, Result};
use crate::io::{Artifacts, Stamp, Table};
use crate::memristor::{curve_order, dc_sweep, find_operating_point, linspace, ndr_segments, LoadLine};
use crate::onn::CouplingMatrix;
use crate::onn::{corrupt, parse_grid, parse_pgm, pattern_to_image, run_recognition, OnnExperiment, PatternSet};
use crate::phasenet::{simulate_pair, wrap};
use crate::ppv::{characterize, extract_prc, fit_fourier, prc_to_ppv, Characterization, CharacterizeOptions, PrcCurve, PulseSpec};
use crate::transient::{
    rising_crossings, simulate_circuit_with, FullNetwork, InjectionSignal, Oscillator, SettleOptions, SimOptions, Trajectory,
};

#[derive(Debug, Parser)]
#[command(name = "memosc", version, about = "Memristor oscillator networks: circuit, PPV and phase-model experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `out` in the config).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Seed for corruption, jitter and frequency draws.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Waveform group preset.
    #[arg(long, global = true, value_name = "A|B", value_parser = parse_group)]
    pub group: Option<Group>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// DC sweep, NDR segments and operating point.
    Ndr,
    /// Start-up transient and settled limit cycle.
    Osc,
    /// Phase response curve by pulse injection.
    Prc,
    /// PPV and its Fourier series.
    Ppv,
    /// Two coupled oscillators, both coupling signs, both engines.
    Pair,
    /// Pattern recognition run.
    Onn,
    /// Full circuit network vs phase model timing.
    Bench,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Ndr => "ndr",
            Command::Osc => "osc",
            Command::Prc => "prc",
            Command::Ppv => "ppv",
            Command::Pair => "pair",
            Command::Onn => "onn",
            Command::Bench => "bench",
        }
    }
}

fn parse_group(s: &str) -> std::result::Result<Group, String> {
    Group::parse(s).map_err(|e| e.to_string())
}

/// What a command produced. `error` is set when artifacts were written but
/// the run still failed, e.g. a recognition run that did not settle.
#[derive(Debug)]
pub struct Outcome {
    pub summary: String,
    pub files: Vec<PathBuf>,
    pub error: Option<Error>,
}

impl Cli {
    pub fn overrides(&self) -> Overrides {
        Overrides { out: self.out.clone(), seed: self.seed, group: self.group }
    }

    pub fn load_config(&self) -> Result<RunConfig> {
        match &self.config {
            Some(p) => RunConfig::load(p, &self.overrides()),
            None => Ok(RunConfig::from_overrides(&self.overrides())),
        }
    }
}

/// Parse arguments, run, print, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(o) => {
            print!("{}", o.summary);
            match o.error {
                Some(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
                None => 0,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = cli.load_config()?;
    run_command(cli.command, &cfg)
}

pub fn run_command(cmd: Command, cfg: &RunConfig) -> Result<Outcome> {
    let stamp = Stamp { config_hash: cfg.hash(), seed: cfg.seed };
    let mut art = Artifacts::create(&cfg.out, stamp)?;
    log::info!("{} group {} config {} -> {}", cmd.name(), cfg.group.name(), cfg.hash(), cfg.out.display());
    let result = match cmd {
        Command::Ndr => cmd_ndr(cfg, &mut art),
        Command::Osc => cmd_osc(cfg, &mut art),
        Command::Prc => cmd_prc(cfg, &mut art),
        Command::Ppv => cmd_ppv(cfg, &mut art),
        Command::Pair => cmd_pair(cfg, &mut art),
        Command::Onn => cmd_onn(cfg, &mut art),
        Command::Bench => cmd_bench(cfg, &mut art),
    };
    let (summary, error) = match result {
        Ok(s) => (s, None),
        Err(Partial { summary: Some(s), error }) => (s, Some(error)),
        Err(Partial { summary: None, error }) => return Err(error),
    };
    let head = format!("# {}\n# command={} group={}\n", art.stamp.line(), cmd.name(), cfg.group.name());
    art.save_text(&format!("{}_summary.txt", cmd.name()), &format!("{head}{summary}"))?;
    Ok(Outcome { summary, files: art.written().to_vec(), error })
}

/// A failure, possibly after a summary was produced.
struct Partial {
    summary: Option<String>,
    error: Error,
}

impl From<Error> for Partial {
    fn from(error: Error) -> Self {
        Self { summary: None, error }
    }
}

type CmdResult = std::result::Result<String, Partial>;

pub fn settle_options(cfg: &RunConfig) -> SettleOptions {
    SettleOptions {
        dt: None,
        steps_per_period: cfg.settle.steps_per_period,
        settle_cycles: cfg.settle.settle_cycles,
        periods: cfg.settle.periods,
        init: (0.0, 0.0),
        sim: SimOptions { method: cfg.settle.method, ..SimOptions::default() },
    }
}

pub fn characterize_options(cfg: &RunConfig) -> CharacterizeOptions {
    CharacterizeOptions {
        settle: settle_options(cfg),
        pulse: cfg.pulse,
        m_samples: cfg.prc.samples,
        k_periods: cfg.prc.k_periods,
        order: cfg.prc.order,
    }
}

pub fn characterize_config(cfg: &RunConfig) -> Result<Characterization> {
    characterize(cfg.circuit, cfg.memristor.clone(), &characterize_options(cfg))
}

fn cmd_ndr(cfg: &RunConfig, art: &mut Artifacts) -> CmdResult {
    let s = &cfg.sweep;
    let sweep = dc_sweep(&cfg.memristor, &linspace(s.v_min, s.v_max, s.points), s.tol)?;
    let mut csv = art.csv().meta("no_equilibrium_points", sweep.no_equilibrium.len()).columns(&["vm", "im", "x_eq", "branch"]);
    for p in &sweep.points {
        csv.row(&[p.vm, p.im, p.x_eq, p.branch as f64]);
    }
    art.save_csv("sweep.csv", &csv)?;

    let curve = curve_order(&sweep.points);
    let segs = ndr_segments(&curve);
    let mut out = format!("{} equilibrium points over {} V .. {} V\n", sweep.points.len(), s.v_min, s.v_max);
    if segs.is_empty() {
        out.push_str("no NDR segment\n");
        return Err(Partial { summary: Some(out), error: Error::NoNdr });
    }
    for (k, seg) in segs.iter().enumerate() {
        let _ = writeln!(
            out,
            "ndr segment {k}: v {:.6} .. {:.6} V, i {:.6e} .. {:.6e} A",
            seg.lower.vm, seg.upper.vm, seg.upper.im, seg.lower.im
        );
    }
    let ll = LoadLine::new(cfg.circuit.vdc, cfg.circuit.rs)?;
    let op = match find_operating_point(&curve, ll) {
        Ok(op) => op,
        Err(e) => {
            out.push_str("load line misses the DC curve\n");
            return Err(Partial { summary: Some(out), error: e });
        }
    };
    let _ = writeln!(
        out,
        "operating point: v = {:.6} V, i = {:.6e} A, x = {:.6}\nintersections: {}\nunique: {}\ninside ndr: {}",
        op.point.vm,
        op.point.im,
        op.point.x_eq,
        op.all.len(),
        op.unique,
        op.in_ndr
    );
    Ok(out)
}

fn cmd_osc(cfg: &RunConfig, art: &mut Artifacts) -> CmdResult {
    let so = settle_options(cfg);
    let osc = Oscillator::settle(cfg.circuit, cfg.memristor.clone(), so)?;
    let c = &osc.cycle;
    let t_end = osc.period() * (so.settle_cycles + so.periods) as f64;
    let traj = simulate_circuit_with(&osc.circuit, &osc.memristor, so.init, &InjectionSignal::none(), osc.dt, t_end, &osc.opts)?;
    art.save_csv("trajectory.csv", &trajectory_csv(art, &traj))?;
    let mut csv = art.csv().meta("T", c.period).meta("omega0", c.omega0).meta("threshold", c.threshold).columns(&["t", "v", "x", "im"]);
    for k in 0..c.one_cycle.len() {
        csv.row(&[c.one_cycle.t[k], c.one_cycle.v[k], c.one_cycle.x[k], c.one_cycle.im[k]]);
    }
    art.save_csv("limit_cycle.csv", &csv)?;
    let (lo, hi) = c.one_cycle.v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let last = &c.cycle_lengths[c.cycle_lengths.len().saturating_sub(10)..];
    let spread = last.iter().fold(0.0f64, |m, &l| m.max((l - c.period).abs())) / c.period;
    Ok(format!(
        "period: {:e} s\nfrequency: {:e} Hz\nomega0: {:e} rad/s\nswing: {:.6} .. {:.6} V\nmid-level: {:.6} V\nlast-10 spread: {:.3e}\ndt: {:e} s\n",
        c.period,
        1.0 / c.period,
        c.omega0,
        lo,
        hi,
        c.threshold,
        spread,
        osc.dt
    ))
}

fn trajectory_csv(art: &Artifacts, traj: &Trajectory) -> crate::io::Csv {
    let mut csv = art.csv().columns(&["t", "v", "x", "im"]);
    for k in 0..traj.len() {
        csv.row(&[traj.t[k], traj.v[k], traj.x[k], traj.im[k]]);
    }
    csv
}

fn prc_csv(art: &Artifacts, prc: &PrcCurve, omega0: f64) -> crate::io::Csv {
    let mut csv = art.csv().meta("period", prc.period).meta("omega0", omega0).meta("b", prc.pulse.b).meta("h", prc.pulse.h).columns(&[
        "phase_s",
        "phase_rad",
        "value",
    ]);
    for (t, p) in prc.phases.iter().zip(&prc.shifts) {
        csv.row(&[*t, t * omega0, *p]);
    }
    csv
}

fn cmd_prc(cfg: &RunConfig, art: &mut Artifacts) -> CmdResult {
    let osc = Oscillator::settle(cfg.circuit, cfg.memristor.clone(), settle_options(cfg))?;
    let prc = extract_prc(&osc, cfg.pulse, cfg.prc.samples, cfg.prc.k_periods)?;
    art.save_csv("prc.csv", &prc_csv(art, &prc, osc.omega0()))?;
    let max = prc.shifts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = prc.shifts.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(format!(
        "samples: {}\npulse: {:e} A x {:e} s\nmax shift: {:e} rad\nmin shift: {:e} rad\nlobe ratio: {:.4}\n",
        prc.shifts.len(),
        prc.pulse.b,
        prc.pulse.h,
        max,
        min,
        prc.lobe_ratio()
    ))
}

fn read_prc(path: &std::path::Path, fallback: PulseSpec) -> Result<(PrcCurve, f64)> {
    let t = Table::read(path)?;
    let bad = |m: &str| Error::config("prc.file", format!("{}: {m}", path.display()));
    let period = t.meta_f64("period").ok_or_else(|| bad("missing `# period=` line"))?;
    let omega0 = t.meta_f64("omega0").unwrap_or(std::f64::consts::TAU / period);
    let pulse = match (t.meta_f64("b"), t.meta_f64("h")) {
        (Some(b), Some(h)) => PulseSpec::new(b, h)?,
        _ => fallback,
    };
    let phases = t.column("phase_s").ok_or_else(|| bad("no phase_s column"))?;
    let shifts = t.column("value").ok_or_else(|| bad("no value column"))?;
    Ok((PrcCurve { phases, shifts, pulse, period }, omega0))
}

fn cmd_ppv(cfg: &RunConfig, art: &mut Artifacts) -> CmdResult {
    let (prc, omega0) = match &cfg.prc.file {
        Some(p) => read_prc(p, cfg.pulse)?,
        None => {
            let osc = Oscillator::settle(cfg.circuit, cfg.memristor.clone(), settle_options(cfg))?;
            let prc = extract_prc(&osc, cfg.pulse, cfg.prc.samples, cfg.prc.k_periods)?;
            art.save_csv("prc.csv", &prc_csv(art, &prc, osc.omega0()))?;
            (prc, osc.omega0())
        }
    };
    let ppv = prc_to_ppv(&prc, omega0)?;
    let fit = fit_fourier(&ppv, cfg.prc.order)?;
    let mut csv = art.csv().meta("period", ppv.period).meta("omega0", omega0).columns(&["phase_s", "phase_rad", "value"]);
    for (t, g) in ppv.phases.iter().zip(&ppv.gamma) {
        csv.row(&[*t, t * omega0, *g]);
    }
    art.save_csv("ppv.csv", &csv)?;
    let mut csv = art.csv().meta("residual_rms", fit.residual_rms).meta("order", fit.order).columns(&["i", "A_i", "B_i"]);
    for i in 0..=fit.order {
        csv.row(&[i as f64, fit.a[i], fit.b[i]]);
    }
    art.save_csv("fourier.csv", &csv)?;
    Ok(format!(
        "omega0: {:e} rad/s\nmax |Gamma|: {:e} 1/A\norder: {}\nresidual rms: {:e}\nA1 = {:e}, B1 = {:e}\n",
        omega0,
        fit.max_abs(512),
        fit.order,
        fit.residual_rms,
        fit.a[1],
        fit.b[1]
    ))
}

/// Phase difference `theta_2 - theta_1` at each rising crossing of oscillator 1.
fn crossing_series(a: &Trajectory, b: &Trajectory, threshold: f64, period: f64) -> Vec<(f64, f64)> {
    let ca = rising_crossings(&a.t, &a.v, threshold);
    let cb = rising_crossings(&b.t, &b.v, threshold);
    if cb.is_empty() {
        return Vec::new();
    }
    ca.iter()
        .map(|&r| {
            let k = cb.partition_point(|&c| c < r);
            let near = [k.checked_sub(1), (k < cb.len()).then_some(k)]
                .into_iter()
                .flatten()
                .map(|j| cb[j])
                .min_by(|x, y| (x - r).abs().total_cmp(&(y - r).abs()))
                .unwrap_or(r);
            (r, wrap(std::f64::consts::TAU * (r - near) / period))
        })
        .collect()
}

fn cmd_pair(cfg: &RunConfig, art: &mut Artifacts) -> CmdResult {
    let ch = characterize_config(cfg)?;
    let m = &ch.model;
    let p = &cfg.pair;
    let period = ch.oscillator.period();
    let t_end = period * p.periods as f64;
    let mut out = format!("omega0: {:e} rad/s\ncurrent: {:e} A\ninitial offset: {} rad\n", m.omega0, p.current, p.init_offset);
    for (sign, tag) in [(1i32, "positive"), (-1, "negative")] {
        let i = sign as f64 * p.current;
        let tr = simulate_pair(
            &m.ppv,
            &m.vout_cycle,
            m.omega0,
            i,
            i,
            (0.0, p.init_offset / m.omega0),
            period / p.phase_steps_per_period as f64,
            t_end,
        )?;
        let d = tr.difference_series(1);
        let mut csv = art.csv().meta("current", i).columns(&["t", "alpha_1", "alpha_2", "dtheta"]);
        for k in 0..tr.t.len() {
            csv.row(&[tr.t[k], tr.alpha[0][k], tr.alpha[1][k], d[k]]);
        }
        art.save_csv(&format!("pair_{tag}_phase.csv"), &csv)?;
        let _ = write!(out, "{tag}: phase model final dtheta {:.6} rad", d[d.len() - 1]);
        if p.full_circuit {
            let net = FullNetwork {
                circuit: ch.oscillator.circuit,
                memristor: ch.oscillator.memristor.clone(),
                coupling: CouplingMatrix::all_to_all(2, sign),
                i0: p.current,
                v_ref: ch.oscillator.cycle.threshold,
                opts: ch.oscillator.opts,
                record_every: (p.full_steps_per_period / 200).max(1),
            };
            let init = [ch.oscillator.cycle.state_at_phase(0.0), ch.oscillator.cycle.state_at_phase(p.init_offset)];
            let trajs = net.run(&init, period / p.full_steps_per_period as f64, t_end)?;
            let series = crossing_series(&trajs[0], &trajs[1], ch.oscillator.cycle.threshold, period);
            let mut csv = art.csv().meta("current", i).columns(&["t", "dtheta"]);
            for (t, dth) in &series {
                csv.row(&[*t, *dth]);
            }
            art.save_csv(&format!("pair_{tag}_full.csv"), &csv)?;
            if let Some((_, last)) = series.last() {
                let _ = write!(out, ", full circuit {:.6} rad", last);
            }
        }
        out.push('\n');
    }
    Ok(out)
}

fn test_input(cfg: &RunConfig, ps: &PatternSet) -> Result<Vec<i8>> {
    match &cfg.onn.input {
        InputSpec::File(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::config("onn.input", format!("{}: {e}", p.display())))?;
            let (rows, cols, px) = if text.trim_start().starts_with("P2") { parse_pgm(&text)? } else { parse_grid(&text)? };
            if (rows, cols) != (ps.rows, ps.cols) {
                return Err(Error::config("onn.input", format!("{rows}x{cols} image, patterns are {}x{}", ps.rows, ps.cols)));
            }
            Ok(px)
        }
        InputSpec::Corrupted { pattern, flips } => {
            let base = ps
                .patterns
                .get(*pattern)
                .ok_or_else(|| Error::config("onn.pattern", format!("index {pattern} but only {} patterns", ps.len())))?;
            Ok(corrupt(base, *flips, cfg.seed))
        }
    }
}

pub fn experiment(cfg: &RunConfig) -> Result<OnnExperiment> {
    let ps = cfg.pattern_set()?;
    let input = test_input(cfg, &ps)?;
    let o = &cfg.onn;
    let mut exp = OnnExperiment::new(ps, input, o.i0);
    exp.freq_deviation = o.freq_deviation;
    exp.rng_seed = cfg.seed;
    exp.jitter = o.jitter;
    exp.t_init = o.t_init;
    exp.t_end = o.t_end;
    exp.engine = o.engine;
    exp.dt = o.dt;
    exp.q_order = o.q_order;
    exp.m_order = o.m_order;
    exp.form = o.form;
    exp.color = o.color;
    Ok(exp)
}

fn save_image(art: &mut Artifacts, name: &str, px: &[i8], ps: &PatternSet, what: &str) -> Result<()> {
    let img = pattern_to_image(px, ps.rows, ps.cols, &[art.stamp.line(), what.to_string()])?;
    art.save_text(name, &img)?;
    Ok(())
}

fn cmd_onn(cfg: &RunConfig, art: &mut Artifacts) -> CmdResult {
    let exp = experiment(cfg)?;
    let ch = characterize_config(cfg)?;
    let r = run_recognition(&exp, &ch.model)?;
    let ps = &exp.patterns;
    let mut csv = art.csv().meta("converged", r.converged).meta("drift", r.drift).columns(&[
        "oscillator",
        "delta_theta",
        "pixel",
        "match",
        "hamming",
    ]);
    for (k, (d, p)) in r.delta_theta.iter().zip(&r.pixels).enumerate() {
        csv.row(&[(k + 1).to_string(), d.to_string(), p.to_string(), r.best.to_string(), r.hamming.to_string()]);
    }
    art.save_csv("onn_summary.csv", &csv)?;
    let names: Vec<String> = std::iter::once("t".to_string()).chain((1..=ps.n()).map(|k| format!("dtheta_{k}"))).collect();
    let mut csv = art.csv().columns(&names);
    let series: Vec<Vec<f64>> = (0..ps.n()).map(|k| r.trace.difference_series(k)).collect();
    for (i, t) in r.trace.t.iter().enumerate() {
        let row: Vec<f64> = std::iter::once(*t).chain(series.iter().map(|s| s[i])).collect();
        csv.row(&row);
    }
    art.save_csv("onn_phase.csv", &csv)?;
    save_image(art, "onn_input.pgm", &exp.test_input, ps, "input")?;
    save_image(art, "onn_final.pgm", &r.pixels, ps, "final")?;
    save_image(art, "onn_best.pgm", &ps.patterns[r.best], ps, &format!("stored pattern {}", r.best))?;
    let summary = format!(
        "oscillators: {}\npatterns: {}\ni0: {:e} A\nfrequency deviation: {}\nbest match: {}\nhamming: {}\nrecognized: {}\nconverged: {}\ndrift: {:e} rad/s\n",
        ps.n(),
        ps.len(),
        exp.i0,
        exp.freq_deviation,
        r.best,
        r.hamming,
        r.matched.is_some(),
        r.converged,
        r.drift
    );
    if r.converged {
        Ok(summary)
    } else {
        Err(Partial { summary: Some(summary), error: Error::NotConverged { drift: r.drift } })
    }
}

fn cmd_bench(cfg: &RunConfig, art: &mut Artifacts) -> CmdResult {
    let exp = experiment(cfg)?;
    let ch = characterize_config(cfg)?;
    let rep = run_bench(&ch.oscillator, &ch.model, &exp, cfg.bench.full_steps_per_period, cfg.bench.agreement_tol)?;
    let mut csv = art.csv().meta("agreement", rep.agreement).columns(&["oscillator", "full_delta_theta", "phase_delta_theta"]);
    for (k, (a, b)) in rep.full_delta_theta.iter().zip(&rep.phase.delta_theta).enumerate() {
        csv.row(&[(k + 1) as f64, *a, *b]);
    }
    art.save_csv("bench.csv", &csv)?;
    Ok(rep.summary())
}
