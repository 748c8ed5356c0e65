//! Boundary value problems `u'' = g(x, u) + p(x)`, `u'(0) = a0 u(0)`,
//! `u'(1) = a1 u(1)` with `a0, a1 > 0`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Expr, ParseError};

type Field = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type Forcing = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Number of x points on which `g(x, 0) = 0` is checked at construction.
const ORIGIN_CHECK_POINTS: usize = 64;
const ORIGIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("parameter {name} must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("g(x, 0) must vanish; g({x}, 0) = {value}")]
    NonzeroAtOrigin { x: f64, value: f64 },
    #[error("cannot parse {field}: {source}")]
    Parse {
        field: &'static str,
        #[source]
        source: ParseError,
    },
    #[error("p must not depend on u")]
    ForcingDependsOnU,
    #[error("invalid problem file: {0}")]
    InvalidFile(String),
    #[error("no superlinear slope above M = {m} found below u = {cap}")]
    SuperlinearityNotDetected { m: f64, cap: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PainleveParams {
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "A")]
    pub a: f64,
}

/// Problem definition file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProblemFile {
    Painleve {
        #[serde(rename = "K")]
        k: f64,
        #[serde(rename = "A")]
        a: f64,
        a0: f64,
        a1: f64,
    },
    Custom {
        g: String,
        p: String,
        a0: f64,
        a1: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        g_u: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        g_uu: Option<String>,
    },
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self, ProblemError> {
        serde_json::from_str(text).map_err(|e| ProblemError::InvalidFile(e.to_string()))
    }

    pub fn to_spec(&self) -> Result<ProblemSpec, ProblemError> {
        match self {
            ProblemFile::Painleve { k, a, a0, a1 } => painleve_problem(PainleveParams { k: *k, a: *a }, *a0, *a1),
            ProblemFile::Custom {
                g,
                p,
                a0,
                a1,
                g_u,
                g_uu,
            } => ProblemSpec::custom_with_overrides(g, p, g_u.as_deref(), g_uu.as_deref(), *a0, *a1),
        }
    }

    pub fn a1(&self) -> f64 {
        match self {
            ProblemFile::Painleve { a1, .. } | ProblemFile::Custom { a1, .. } => *a1,
        }
    }

    pub fn with_a1(&self, value: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            ProblemFile::Painleve { a1, .. } | ProblemFile::Custom { a1, .. } => *a1 = value,
        }
        out
    }

    /// Painlevé: sets `A`. Custom: multiplies the forcing by `value`.
    pub fn with_p_amplitude(&self, value: f64) -> Self {
        match self {
            ProblemFile::Painleve { k, a0, a1, .. } => ProblemFile::Painleve {
                k: *k,
                a: value,
                a0: *a0,
                a1: *a1,
            },
            ProblemFile::Custom {
                g,
                p,
                a0,
                a1,
                g_u,
                g_uu,
            } => ProblemFile::Custom {
                g: g.clone(),
                p: format!("({value}) * ({p})"),
                a0: *a0,
                a1: *a1,
                g_u: g_u.clone(),
                g_uu: g_uu.clone(),
            },
        }
    }
}

/// Data of one boundary value problem. Immutable and cheap to clone.
#[derive(Clone)]
pub struct ProblemSpec {
    g: Field,
    g_u: Field,
    g_uu: Field,
    p: Forcing,
    p_constant: Option<f64>,
    a0: f64,
    a1: f64,
    label: String,
    source: Option<ProblemFile>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("label", &self.label)
            .field("a0", &self.a0)
            .field("a1", &self.a1)
            .field("p_constant", &self.p_constant)
            .finish_non_exhaustive()
    }
}

fn positive(name: &'static str, value: f64) -> Result<(), ProblemError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ProblemError::NonPositiveParameter { name, value })
    }
}

fn parse_field(field: &'static str, text: &str) -> Result<Expr, ProblemError> {
    Expr::parse(text).map_err(|source| ProblemError::Parse { field, source })
}

impl ProblemSpec {
    /// Builds a problem from closures for `g`, `∂g/∂u`, `∂²g/∂u²` and `p`.
    pub fn from_fns<G, Gu, Guu, P>(
        label: impl Into<String>,
        g: G,
        g_u: Gu,
        g_uu: Guu,
        p: P,
        a0: f64,
        a1: f64,
    ) -> Result<Self, ProblemError>
    where
        G: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        Gu: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        Guu: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        P: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let spec = Self {
            g: Arc::new(g),
            g_u: Arc::new(g_u),
            g_uu: Arc::new(g_uu),
            p: Arc::new(p),
            p_constant: None,
            a0,
            a1,
            label: label.into(),
            source: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Parses `g(x, u)` and `p(x)`; derivatives are taken symbolically.
    pub fn custom(g: &str, p: &str, a0: f64, a1: f64) -> Result<Self, ProblemError> {
        Self::custom_with_overrides(g, p, None, None, a0, a1)
    }

    pub fn custom_with_overrides(
        g: &str,
        p: &str,
        g_u: Option<&str>,
        g_uu: Option<&str>,
        a0: f64,
        a1: f64,
    ) -> Result<Self, ProblemError> {
        let g_expr = parse_field("g", g)?;
        let p_expr = parse_field("p", p)?;
        if p_expr.depends_on_u() {
            return Err(ProblemError::ForcingDependsOnU);
        }
        let gu_expr = match g_u {
            Some(text) => parse_field("g_u", text)?,
            None => g_expr.differentiate_u(),
        };
        let guu_expr = match g_uu {
            Some(text) => parse_field("g_uu", text)?,
            None => gu_expr.differentiate_u(),
        };
        let p_constant = (!p_expr.depends_on_x()).then(|| p_expr.eval(0.0, 0.0));
        let source = ProblemFile::Custom {
            g: g.to_string(),
            p: p.to_string(),
            a0,
            a1,
            g_u: g_u.map(str::to_string),
            g_uu: g_uu.map(str::to_string),
        };
        let mut spec = Self::from_fns(
            format!("u'' = {g} + {p}"),
            move |x, u| g_expr.eval(x, u),
            move |x, u| gu_expr.eval(x, u),
            move |x, u| guu_expr.eval(x, u),
            move |x| p_expr.eval(x, 0.0),
            a0,
            a1,
        )?;
        spec.p_constant = p_constant;
        spec.source = Some(source);
        Ok(spec)
    }

    fn validate(&self) -> Result<(), ProblemError> {
        positive("a0", self.a0)?;
        positive("a1", self.a1)?;
        for i in 0..ORIGIN_CHECK_POINTS {
            let x = i as f64 / (ORIGIN_CHECK_POINTS - 1) as f64;
            let value = (self.g)(x, 0.0);
            if !(value.abs() <= ORIGIN_TOL) {
                return Err(ProblemError::NonzeroAtOrigin { x, value });
            }
        }
        Ok(())
    }

    /// Marks `p` as the constant `value`. `p` itself is not changed.
    pub fn with_constant_p(mut self, value: f64) -> Self {
        self.p_constant = Some(value);
        self
    }

    /// Same problem with `p` replaced by `p + shift`.
    pub fn with_p_shift(&self, shift: f64) -> Self {
        let p = Arc::clone(&self.p);
        let mut out = self.clone();
        out.p = Arc::new(move |x| p(x) + shift);
        out.p_constant = self.p_constant.map(|c| c + shift);
        out.source = None;
        out.label = format!("{} (p shifted by {shift})", self.label);
        out
    }

    #[inline]
    pub fn g(&self, x: f64, u: f64) -> f64 {
        (self.g)(x, u)
    }

    #[inline]
    pub fn g_u(&self, x: f64, u: f64) -> f64 {
        (self.g_u)(x, u)
    }

    #[inline]
    pub fn g_uu(&self, x: f64, u: f64) -> f64 {
        (self.g_uu)(x, u)
    }

    #[inline]
    pub fn p(&self, x: f64) -> f64 {
        (self.p)(x)
    }

    pub fn p_constant(&self) -> Option<f64> {
        self.p_constant
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn source(&self) -> Option<&ProblemFile> {
        self.source.as_ref()
    }

    /// Supremum norm of `p` over a uniform grid and its minimum.
    pub fn p_range(&self, points: usize) -> (f64, f64) {
        let points = points.max(2);
        (0..points)
            .map(|i| self.p(i as f64 / (points - 1) as f64))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }
}

/// `u'' = K u³ + L(x) u + A` with `L(x) = a0² + (a1² − a0²) x`. The constant
/// `A` is carried by `p`, so that `g(x, 0) = 0`.
pub fn painleve_problem(params: PainleveParams, a0: f64, a1: f64) -> Result<ProblemSpec, ProblemError> {
    positive("K", params.k)?;
    positive("A", params.a)?;
    positive("a0", a0)?;
    positive("a1", a1)?;
    let PainleveParams { k, a } = params;
    let slope = a1 * a1 - a0 * a0;
    let l0 = a0 * a0;
    let spec = ProblemSpec::from_fns(
        format!("painleve K={k} A={a} a0={a0} a1={a1}"),
        move |x, u| k * u * u * u + (l0 + slope * x) * u,
        move |x, u| 3.0 * k * u * u + l0 + slope * x,
        move |_, u| 6.0 * k * u,
        move |_| a,
        a0,
        a1,
    )?;
    Ok(ProblemSpec {
        p_constant: Some(a),
        source: Some(ProblemFile::Painleve { k, a, a0, a1 }),
        ..spec
    })
}

/// A run of u grid points on which a pointwise condition held. Endpoints sit
/// halfway between the last passing and the first failing grid point; runs
/// touching the edge of the grid are reported as unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains_range(&self, lo: f64, hi: f64) -> bool {
        self.lo <= lo && hi <= self.hi
    }

    pub fn is_everything(&self) -> bool {
        self.lo == f64::NEG_INFINITY && self.hi == f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub x: f64,
    pub u: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeSample {
    pub magnitude: f64,
    /// `min_x g(x, m) / m`
    pub positive_side: f64,
    /// `min_x g(x, -m) / (-m)`
    pub negative_side: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeGrid {
    pub x_points: usize,
    pub u_points: usize,
    pub u_max: f64,
}

impl ProbeGrid {
    pub fn new(u_max: f64, x_points: usize, u_points: usize) -> Self {
        Self {
            x_points: x_points.max(16),
            u_points: u_points.max(16),
            u_max,
        }
    }

    fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.x_points;
        (0..n).map(move |i| i as f64 / (n - 1) as f64)
    }

    /// Symmetric grid on `[-u_max, u_max]` offset by half a cell so that 0 is
    /// never sampled.
    fn us(&self) -> Vec<f64> {
        let n = self.u_points;
        let cell = 2.0 * self.u_max / n as f64;
        (0..n).map(|i| -self.u_max + (i as f64 + 0.5) * cell).collect()
    }
}

impl Default for ProbeGrid {
    fn default() -> Self {
        Self::new(10.0, 65, 2048)
    }
}

/// Grid evidence for the standing hypotheses. Verdicts are relative to the
/// recorded grid, never proofs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub grid: ProbeGrid,
    pub lambda1: f64,
    pub monotone_crec: bool,
    pub monotone_witness: Option<Witness>,
    pub positivity_p: bool,
    pub positivity_witness: Option<Witness>,
    pub superlinearity_slope: Vec<SlopeSample>,
    /// Slopes on both sides grow across the probed magnitudes.
    pub superlinear_trend: bool,
    pub h1_holds_on: Vec<Interval>,
    pub h2_holds_on: Vec<Interval>,
    /// `∂g/∂u > g/u` at every grid point with `u ≠ 0` (the condition with p = 0).
    pub h2_without_p: bool,
    pub h2_without_p_witness: Option<Witness>,
    pub h9_holds: bool,
    pub h9_witness: Option<Witness>,
}

/// Comparison slack for inequalities against `-λ₁`.
pub(crate) fn eigen_slack(lambda1: f64) -> f64 {
    1e-9 * (1.0 + lambda1.abs())
}

/// `∂g/∂u(·, 0) ≤ −λ₁` on `points` x values, strictly somewhere. Returns the
/// verdict and, on failure, the worst point.
pub(crate) fn h9_on_grid(prob: &ProblemSpec, lambda1: f64, points: usize) -> (bool, Option<Witness>) {
    let slack = eigen_slack(lambda1);
    let bound = -lambda1;
    let mut strict = false;
    let mut worst: Option<Witness> = None;
    for i in 0..points {
        let x = i as f64 / (points - 1) as f64;
        let value = prob.g_u(x, 0.0);
        if value > bound + slack || value.is_nan() {
            if worst.is_none_or(|w| value > w.value) {
                worst = Some(Witness { x, u: 0.0, value });
            }
        } else if value < bound - slack {
            strict = true;
        }
    }
    match worst {
        Some(w) => (false, Some(w)),
        None if strict => (true, None),
        None => (
            false,
            Some(Witness {
                x: 0.0,
                u: 0.0,
                value: prob.g_u(0.0, 0.0),
            }),
        ),
    }
}

fn runs(us: &[f64], pass: &[bool]) -> Vec<Interval> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < us.len() {
        if !pass[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < us.len() && pass[i] {
            i += 1;
        }
        let lo = if start == 0 {
            f64::NEG_INFINITY
        } else {
            0.5 * (us[start - 1] + us[start])
        };
        let hi = if i == us.len() {
            f64::INFINITY
        } else {
            0.5 * (us[i - 1] + us[i])
        };
        out.push(Interval { lo, hi });
    }
    out
}

/// Samples the standing hypotheses on `grid`. `lambda1` is the first
/// eigenvalue of `-u''` under the problem's boundary conditions.
pub fn probe_hypotheses(prob: &ProblemSpec, grid: ProbeGrid, lambda1: f64) -> HypothesisReport {
    let xs: Vec<f64> = grid.xs().collect();
    let us = grid.us();

    let mut monotone_witness = None;
    'outer: for &x in &xs {
        let mut prev = prob.g(x, us[0]);
        for &u in &us[1..] {
            let cur = prob.g(x, u);
            if !(cur > prev) {
                monotone_witness = Some(Witness {
                    x,
                    u,
                    value: cur - prev,
                });
                break 'outer;
            }
            prev = cur;
        }
    }

    let positivity_witness = xs
        .iter()
        .map(|&x| (x, prob.p(x)))
        .find(|(_, v)| !(*v > 0.0))
        .map(|(x, value)| Witness { x, u: 0.0, value });

    let mut superlinearity_slope = Vec::new();
    let mut m = 1.0_f64.min(grid.u_max);
    while m <= grid.u_max * (1.0 + 1e-12) {
        let positive_side = xs.iter().map(|&x| prob.g(x, m) / m).fold(f64::INFINITY, f64::min);
        let negative_side = xs.iter().map(|&x| prob.g(x, -m) / -m).fold(f64::INFINITY, f64::min);
        superlinearity_slope.push(SlopeSample {
            magnitude: m,
            positive_side,
            negative_side,
        });
        m *= 2.0;
    }
    let superlinear_trend = superlinearity_slope.len() >= 2
        && superlinearity_slope
            .windows(2)
            .all(|w| w[1].positive_side > w[0].positive_side && w[1].negative_side > w[0].negative_side);

    let slack = eigen_slack(lambda1);
    let h1: Vec<bool> = us
        .iter()
        .map(|&u| {
            let mut strict = false;
            for &x in &xs {
                let d = prob.g_u(x, u) + lambda1;
                if !(d >= -slack) {
                    return false;
                }
                strict |= d > slack;
            }
            strict
        })
        .collect();
    let h2: Vec<bool> = us
        .iter()
        .map(|&u| xs.iter().all(|&x| prob.g_u(x, u) > (prob.g(x, u) + prob.p(x)) / u))
        .collect();
    let mut h2_without_p_witness = None;
    'h2p: for &u in &us {
        for &x in &xs {
            let value = prob.g_u(x, u) - prob.g(x, u) / u;
            if !(value > 0.0) {
                h2_without_p_witness = Some(Witness { x, u, value });
                break 'h2p;
            }
        }
    }
    let points = grid.x_points.max(256);
    let (h9_holds, h9_witness) = h9_on_grid(prob, lambda1, points);

    HypothesisReport {
        grid,
        lambda1,
        monotone_crec: monotone_witness.is_none(),
        monotone_witness,
        positivity_p: positivity_witness.is_none(),
        positivity_witness,
        superlinearity_slope,
        superlinear_trend,
        h1_holds_on: runs(&us, &h1),
        h2_holds_on: runs(&us, &h2),
        h2_without_p: h2_without_p_witness.is_none(),
        h2_without_p_witness,
        h9_holds,
        h9_witness,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct P0Estimate {
    /// Slope for the lower bound `g(x, u) ≥ M u + N_M` on `u ≥ 0`.
    pub m: f64,
    /// `inf_{x ∈ [0,1], u ≥ 0} g(x, u) − M u`.
    pub n_m: f64,
    /// Forcing level above which every solution is negative.
    pub p0: f64,
    /// Tail cut: `g(x, u) − M u` was minimised over `u ∈ [0, u_cut]`.
    pub u_cut: f64,
}

const P0_MARGIN: f64 = 1e-9;
const TAIL_CAP: f64 = 1e6;
const P0_X_POINTS: usize = 257;
const P0_U_POINTS: usize = 4097;

/// Golden-section minimum of a unimodal `f` on `[a, b]`.
pub(crate) fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Lower bound `p0` on the forcing that rules out non-negative solutions.
pub fn estimate_p0(prob: &ProblemSpec) -> Result<P0Estimate, ProblemError> {
    let (a0, a1) = (prob.a0(), prob.a1());
    let m = (a1 * a1).max(a1 * a1 * (1.0 + 2.0 * a0) / (2.0 * a0));
    let xs: Vec<f64> = (0..P0_X_POINTS).map(|i| i as f64 / (P0_X_POINTS - 1) as f64).collect();
    let min_slope = |u: f64| xs.iter().map(|&x| prob.g(x, u) / u).fold(f64::INFINITY, f64::min);

    let mut u = 1.0;
    while !(min_slope(u) > m) {
        u *= 2.0;
        if u > TAIL_CAP {
            return Err(ProblemError::SuperlinearityNotDetected { m, cap: TAIL_CAP });
        }
    }
    // twice the first magnitude where the slope clears M
    let u_cut = 2.0 * u;

    let objective = |x: f64, u: f64| prob.g(x, u) - m * u;
    let du = u_cut / (P0_U_POINTS - 1) as f64;
    let mut best = (0.0, 0.0, 0.0);
    for &x in &xs {
        for j in 0..P0_U_POINTS {
            let u = j as f64 * du;
            let v = objective(x, u);
            if v < best.2 {
                best = (x, u, v);
            }
        }
    }
    // coordinate refinement around the best grid cell
    let dx = 1.0 / (P0_X_POINTS - 1) as f64;
    let (mut bx, mut bu, mut bv) = best;
    for _ in 0..8 {
        let (u_new, v_u) = golden_min(|u| objective(bx, u), (bu - du).max(0.0), (bu + du).min(u_cut));
        if v_u < bv {
            bu = u_new;
            bv = v_u;
        }
        let (x_new, v_x) = golden_min(|x| objective(x, bu), (bx - dx).max(0.0), (bx + dx).min(1.0));
        if v_x < bv {
            bx = x_new;
            bv = v_x;
        }
        // endpoints are not reached by golden sections
        for x in [0.0, 1.0] {
            let v = objective(x, bu);
            if v < bv {
                bx = x;
                bv = v;
            }
        }
    }
    let n_m = bv.min(0.0);
    Ok(P0Estimate {
        m,
        n_m,
        p0: -n_m + P0_MARGIN,
        u_cut,
    })
}
