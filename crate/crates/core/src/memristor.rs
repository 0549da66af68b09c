//! Unfolding-polynomial memristor model and its DC analysis.
//!
//! State equation and conductance law:
//!
//! ```text
//! dx/dt = a0 + a1 x + b2 v^2 + sum_{i=1..5} c_{2i} v^2 x^i
//! i_m   = v * sum_{i=0..5} d_i x^i
//! ```
//!
//! Because `dx/dt` is affine in `v^2` for fixed `x`, every `x` has at most one
//! non-negative equilibrium voltage. The DC curve for `v >= 0` is therefore a
//! graph over `x`, and ordering sweep points by `x_eq` walks the S-shaped curve
//! through both turning points. NDR detection and load-line intersection use
//! that ordering.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Default equilibrium search window for `x`.
pub const DEFAULT_X_WINDOW: (f64, f64) = (-10.0, 10.0);
/// Default relative bisection tolerance.
pub const DEFAULT_ROOT_TOL: f64 = 1e-9;
/// Number of scan intervals used to bracket roots.
const SCAN_INTERVALS: usize = 4000;

/// Polynomial coefficients of the memristor model.
#[derive(Debug, Clone, PartialEq)]
pub struct MemristorParams {
    pub a0: f64,
    pub a1: f64,
    pub b2: f64,
    /// c2, c4, c6, c8, c10; `c[i-1]` multiplies `v^2 x^i`.
    pub c: [f64; 5],
    /// d0..d5 in siemens.
    pub d: [f64; 6],
    /// Equilibrium search window for `x`.
    pub x_window: (f64, f64),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamFile {
    #[serde(default)]
    a0: f64,
    #[serde(default)]
    a1: f64,
    #[serde(default)]
    b2: f64,
    #[serde(default)]
    c2: f64,
    #[serde(default)]
    c4: f64,
    #[serde(default)]
    c6: f64,
    #[serde(default)]
    c8: f64,
    #[serde(default)]
    c10: f64,
    #[serde(default)]
    d0: f64,
    #[serde(default)]
    d1: f64,
    #[serde(default)]
    d2: f64,
    #[serde(default)]
    d3: f64,
    #[serde(default)]
    d4: f64,
    #[serde(default)]
    d5: f64,
    x_min: Option<f64>,
    x_max: Option<f64>,
}

impl Default for MemristorParams {
    fn default() -> Self {
        Self::zero()
    }
}

impl MemristorParams {
    /// All coefficients zero.
    pub fn zero() -> Self {
        Self { a0: 0.0, a1: 0.0, b2: 0.0, c: [0.0; 5], d: [0.0; 6], x_window: DEFAULT_X_WINDOW }
    }

    /// Constant conductance `d0`, no state dynamics.
    pub fn ohmic(d0: f64) -> Self {
        let mut p = Self::zero();
        p.d[0] = d0;
        p
    }

    /// The surrogate coefficient set shipped with the crate (`data/surrogate.toml`).
    pub fn surrogate() -> Self {
        Self::from_toml_unchecked(include_str!("../data/surrogate.toml")).expect("bundled surrogate parameters parse")
    }

    /// Parse a parameter file without the NDR requirement. Missing
    /// coefficients are zero.
    pub fn from_toml_unchecked(text: &str) -> Result<Self> {
        let f: ParamFile = toml::from_str(text).map_err(|e| toml_error("memristor", e))?;
        Self::from_file_struct(f, "")
    }

    /// Parse and validate a parameter file. Rejects coefficient sets whose
    /// DC curve has no negative-slope segment.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let p = Self::from_toml_unchecked(text)?;
        p.require_ndr()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub(crate) fn from_value(v: toml::Value, prefix: &str) -> Result<Self> {
        let f: ParamFile = v.try_into().map_err(|e| toml_error(prefix, e))?;
        Self::from_file_struct(f, prefix)
    }

    fn from_file_struct(f: ParamFile, prefix: &str) -> Result<Self> {
        let lo = f.x_min.unwrap_or(DEFAULT_X_WINDOW.0);
        let hi = f.x_max.unwrap_or(DEFAULT_X_WINDOW.1);
        let p = Self {
            a0: f.a0,
            a1: f.a1,
            b2: f.b2,
            c: [f.c2, f.c4, f.c6, f.c8, f.c10],
            d: [f.d0, f.d1, f.d2, f.d3, f.d4, f.d5],
            x_window: (lo, hi),
        };
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::config(key(prefix, "x_min"), "x_min must be finite and below x_max"));
        }
        p.check_finite()?;
        Ok(p)
    }

    pub fn check_finite(&self) -> Result<()> {
        let all = [self.a0, self.a1, self.b2].into_iter().chain(self.c).chain(self.d);
        if all.into_iter().all(f64::is_finite) {
            Ok(())
        } else {
            Err(Error::InvalidParams("non-finite coefficient".into()))
        }
    }

    /// Checks that the default sweep shows negative differential resistance.
    pub fn require_ndr(&self) -> Result<()> {
        let sweep = dc_sweep(self, &linspace(0.0, 10.0, 2001), DEFAULT_ROOT_TOL)?;
        if ndr_segments(&sweep.points).is_empty() {
            Err(Error::NoNdr)
        } else {
            Ok(())
        }
    }

    /// Conductance `g(x) = sum d_i x^i`.
    #[inline]
    pub fn conductance(&self, x: f64) -> f64 {
        let mut s = self.d[0];
        let mut xp = 1.0;
        for &di in &self.d[1..] {
            xp *= x;
            s += di * xp;
        }
        s
    }

    /// Coefficient of `v^2` in the state equation: `b2 + sum c_{2i} x^i`.
    #[inline]
    pub fn v2_coeff(&self, x: f64) -> f64 {
        let mut s = self.b2;
        let mut xp = 1.0;
        for &ci in &self.c {
            xp *= x;
            s += ci * xp;
        }
        s
    }

    /// Unchecked state rate.
    #[inline]
    pub fn dxdt(&self, x: f64, v: f64) -> f64 {
        self.a0 + self.a1 * x + v * v * self.v2_coeff(x)
    }

    /// Unchecked memristor current.
    #[inline]
    pub fn current(&self, x: f64, v: f64) -> f64 {
        v * self.conductance(x)
    }
}

fn key(prefix: &str, k: &str) -> String {
    if prefix.is_empty() {
        k.to_string()
    } else {
        format!("{prefix}.{k}")
    }
}

pub(crate) fn toml_error(prefix: &str, e: toml::de::Error) -> Error {
    let msg = e.message().to_string();
    let name = msg.split('`').nth(1).map(|k| key(prefix, k)).unwrap_or_else(|| prefix.to_string());
    Error::config(name, msg)
}

/// `dx/dt` at `(x, vm)`.
pub fn eval_dxdt(x: f64, vm: f64, p: &MemristorParams) -> Result<f64> {
    let r = p.dxdt(x, vm);
    if r.is_finite() {
        Ok(r)
    } else {
        Err(Error::NumericOverflow("eval_dxdt"))
    }
}

/// Memristor current at `(x, vm)`.
pub fn eval_current(x: f64, vm: f64, p: &MemristorParams) -> Result<f64> {
    let r = p.current(x, vm);
    if r.is_finite() {
        Ok(r)
    } else {
        Err(Error::NumericOverflow("eval_current"))
    }
}

/// One equilibrium on the DC curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcPoint {
    pub vm: f64,
    pub im: f64,
    pub x_eq: f64,
    /// Root index at this voltage, counted from the lowest `x`.
    pub branch: usize,
}

/// Result of a DC sweep.
#[derive(Debug, Clone, Default)]
pub struct DcSweep {
    pub points: Vec<DcPoint>,
    /// Voltages with no root in the search window.
    pub no_equilibrium: Vec<f64>,
    /// Voltages where `f` vanished over the whole window; reported as `x = 0`.
    pub degenerate: Vec<f64>,
}

/// Evenly spaced grid including both ends.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|k| lo + step * k as f64).collect()
}

/// Solve `f(x, vm) = 0` for every voltage by scanning the `x` window for sign
/// changes and bisecting each bracket to relative tolerance `tol`.
pub fn dc_sweep(p: &MemristorParams, v_range: &[f64], tol: f64) -> Result<DcSweep> {
    if v_range.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParams("v_range must be strictly increasing".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParams("tolerance must be positive".into()));
    }
    p.check_finite()?;
    let mut out = DcSweep::default();
    for &vm in v_range {
        let roots = equilibria(p, vm, tol);
        match roots {
            Roots::Degenerate => {
                out.degenerate.push(vm);
                out.points.push(DcPoint { vm, im: p.current(0.0, vm), x_eq: 0.0, branch: 0 });
            }
            Roots::Found(xs) if xs.is_empty() => out.no_equilibrium.push(vm),
            Roots::Found(xs) => {
                for (branch, x) in xs.into_iter().enumerate() {
                    let im = eval_current(x, vm, p)?;
                    out.points.push(DcPoint { vm, im, x_eq: x, branch });
                }
            }
        }
    }
    Ok(out)
}

enum Roots {
    Found(Vec<f64>),
    Degenerate,
}

fn equilibria(p: &MemristorParams, vm: f64, tol: f64) -> Roots {
    let (lo, hi) = p.x_window;
    let h = (hi - lo) / SCAN_INTERVALS as f64;
    let xs: Vec<f64> = (0..=SCAN_INTERVALS).map(|k| lo + h * k as f64).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| p.dxdt(x, vm)).collect();
    if fs.iter().all(|&f| f == 0.0) {
        return Roots::Degenerate;
    }
    let mut roots = Vec::new();
    for k in 0..SCAN_INTERVALS {
        let (fa, fb) = (fs[k], fs[k + 1]);
        if fa == 0.0 {
            roots.push(xs[k]);
        } else if fa * fb < 0.0 {
            roots.push(bisect(|x| p.dxdt(x, vm), xs[k], xs[k + 1], fa, tol));
        }
    }
    if fs[SCAN_INTERVALS] == 0.0 {
        roots.push(xs[SCAN_INTERVALS]);
    }
    Roots::Found(roots)
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64, tol: f64) -> f64 {
    loop {
        let m = 0.5 * (a + b);
        if (b - a) <= tol * m.abs().max(1.0) || m == a || m == b {
            return m;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
}

/// Points with `vm >= 0` ordered along the DC curve (by `x_eq`, then `vm`).
pub fn curve_order(points: &[DcPoint]) -> Vec<DcPoint> {
    let mut pts: Vec<DcPoint> = points.iter().copied().filter(|p| p.vm >= 0.0).collect();
    pts.sort_by(|a, b| a.x_eq.total_cmp(&b.x_eq).then(a.vm.total_cmp(&b.vm)));
    pts
}

/// A contiguous negative-slope piece of the I–V curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NdrSegment {
    /// Turning point at the high-voltage, low-current end (A).
    pub upper: DcPoint,
    /// Turning point at the low-voltage, high-current end (B).
    pub lower: DcPoint,
}

impl NdrSegment {
    pub fn contains_v(&self, v: f64) -> bool {
        v >= self.lower.vm && v <= self.upper.vm
    }
}

/// Negative-slope segments of the curve traversed in `x` order.
pub fn ndr_segments(points: &[DcPoint]) -> Vec<NdrSegment> {
    let pts = curve_order(points);
    let mut segs = Vec::new();
    let mut start: Option<usize> = None;
    for k in 0..pts.len().saturating_sub(1) {
        let dv = pts[k + 1].vm - pts[k].vm;
        let di = pts[k + 1].im - pts[k].im;
        let falling = dv * di < 0.0;
        match (falling, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                segs.push(NdrSegment { upper: pts[s], lower: pts[k] });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        segs.push(NdrSegment { upper: pts[s], lower: pts[pts.len() - 1] });
    }
    segs
}

/// Source and series resistor feeding the device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadLine {
    pub vdc: f64,
    pub rs: f64,
}

impl LoadLine {
    pub fn new(vdc: f64, rs: f64) -> Result<Self> {
        if !(rs > 0.0) || !vdc.is_finite() {
            return Err(Error::InvalidParams("load line needs rs > 0 and finite vdc".into()));
        }
        Ok(Self { vdc, rs })
    }

    pub fn current_at(&self, v: f64) -> f64 {
        (self.vdc - v) / self.rs
    }
}

/// Intersections of a load line with the DC curve.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    /// First intersection along the curve.
    pub point: DcPoint,
    pub all: Vec<DcPoint>,
    pub unique: bool,
    pub in_ndr: bool,
}

/// Intersect the load line with the curve, interpolating linearly between
/// neighbouring curve points.
pub fn find_operating_point(curve: &[DcPoint], ll: LoadLine) -> Result<OperatingPoint> {
    if curve.is_empty() {
        return Err(Error::InvalidParams("empty DC curve".into()));
    }
    let pts = curve_order(curve);
    let mut hits: Vec<(DcPoint, bool)> = Vec::new();
    let resid = |p: &DcPoint| p.im - ll.current_at(p.vm);
    for k in 0..pts.len() {
        let (a, ra) = (pts[k], resid(&pts[k]));
        if ra == 0.0 {
            let falling = k + 1 < pts.len() && (pts[k + 1].vm - a.vm) * (pts[k + 1].im - a.im) < 0.0;
            hits.push((a, falling));
            continue;
        }
        if k + 1 == pts.len() {
            break;
        }
        let (b, rb) = (pts[k + 1], resid(&pts[k + 1]));
        if ra * rb < 0.0 {
            let s = ra / (ra - rb);
            let lerp = |u: f64, w: f64| u + s * (w - u);
            let p = DcPoint { vm: lerp(a.vm, b.vm), im: lerp(a.im, b.im), x_eq: lerp(a.x_eq, b.x_eq), branch: a.branch };
            hits.push((p, (b.vm - a.vm) * (b.im - a.im) < 0.0));
        }
    }
    let Some(&(point, falling)) = hits.first() else {
        return Err(Error::NoOperatingPoint);
    };
    Ok(OperatingPoint { point, unique: hits.len() == 1, in_ndr: falling, all: hits.into_iter().map(|h| h.0).collect() })
}
