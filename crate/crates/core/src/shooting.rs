//! The shooting family `u_λ'' = g(x, u_λ) + p`, `u_λ(0) = λ`, `u_λ'(0) = a0 λ`
//! and the map `T(λ) = u_λ'(1) / u_λ(1)` with its first two derivatives.
//!
//! The augmented shot integrates `(u, u', w, w', z, z')` in one pass, where
//! `w = ∂u/∂λ` and `z = ∂²u/∂λ²` solve the first and second variational
//! equations.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::integrator::{integrate, IntegratorConfig, IntegratorError, Status, SystemState, Trajectory};
use crate::problem::ProblemSpec;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShootingError {
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error("integration step underflow at x = {x} (lambda = {lambda})")]
    StepUnderflow { lambda: f64, x: f64 },
    #[error("lambda = {lambda} is outside the domain: escape at x = {x}")]
    OutsideDomain { lambda: f64, x: f64 },
    #[error("lambda = {lambda} is at the pole: |u(1)| = {u1:e}")]
    AtPole { lambda: f64, u1: f64 },
    #[error("no sign change of u(1) found within |lambda| <= {cap}")]
    BracketNotFound { cap: f64 },
    #[error("p must be constant")]
    NonConstantP,
    #[error("minimisation of T failed: {0}")]
    MinimizationFailed(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootConfig {
    pub integrator: IntegratorConfig,
    /// `|u(1)|` at or below this is treated as the pole of T.
    pub pole_guard: f64,
    pub search_cap: f64,
}

impl Default for ShootConfig {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::default(),
            pole_guard: 1e-12,
            search_cap: 1e6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ShotStatus {
    Defined,
    Escaped { x: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Terminal {
    pub u1: f64,
    pub du1: f64,
    pub w1: f64,
    pub dw1: f64,
    pub z1: f64,
    pub dz1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotResult {
    pub lambda: f64,
    /// Values at x = 1 when defined, else at the escape point.
    pub terminal: Terminal,
    pub status: ShotStatus,
    pub trajectory: Option<Trajectory<6>>,
}

impl ShotResult {
    pub fn is_defined(&self) -> bool {
        self.status == ShotStatus::Defined
    }
}

/// Right-hand side of the augmented system.
pub fn augmented_rhs(prob: &ProblemSpec) -> impl Fn(f64, &[f64; 6]) -> [f64; 6] + '_ {
    move |x, y| {
        let u = y[0];
        let gu = prob.g_u(x, u);
        [
            y[1],
            prob.g(x, u) + prob.p(x),
            y[3],
            gu * y[2],
            y[5],
            gu * y[4] + prob.g_uu(x, u) * y[2] * y[2],
        ]
    }
}

/// Right-hand side of the plain system `(u, u')`.
pub fn plain_rhs(prob: &ProblemSpec) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + '_ {
    move |x, y| [y[1], prob.g(x, y[0]) + prob.p(x)]
}

fn shot_status<const N: usize>(lambda: f64, traj: &Trajectory<N>) -> Result<ShotStatus, ShootingError> {
    match traj.status() {
        Status::Completed => Ok(ShotStatus::Defined),
        Status::Escaped { x } => Ok(ShotStatus::Escaped { x }),
        Status::StepUnderflow { x } => Err(ShootingError::StepUnderflow { lambda, x }),
    }
}

fn augmented(prob: &ProblemSpec, lambda: f64, config: &ShootConfig) -> Result<Trajectory<6>, ShootingError> {
    let a0 = prob.a0();
    let start = SystemState::new(0.0, [lambda, a0 * lambda, 1.0, a0, 0.0, 0.0]);
    Ok(integrate(augmented_rhs(prob), start, &config.integrator)?)
}

/// Augmented shot; the dense trajectory is dropped.
pub fn shoot(prob: &ProblemSpec, lambda: f64, config: &ShootConfig) -> Result<ShotResult, ShootingError> {
    let mut shot = shoot_with_trajectory(prob, lambda, config)?;
    shot.trajectory = None;
    Ok(shot)
}

pub fn shoot_with_trajectory(
    prob: &ProblemSpec,
    lambda: f64,
    config: &ShootConfig,
) -> Result<ShotResult, ShootingError> {
    let traj = augmented(prob, lambda, config)?;
    let status = shot_status(lambda, &traj)?;
    let y = traj.last().y;
    Ok(ShotResult {
        lambda,
        terminal: Terminal {
            u1: y[0],
            du1: y[1],
            w1: y[2],
            dw1: y[3],
            z1: y[4],
            dz1: y[5],
        },
        status,
        trajectory: Some(traj),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlainShot {
    pub lambda: f64,
    pub u1: f64,
    pub du1: f64,
    pub status: ShotStatus,
}

impl PlainShot {
    pub fn is_defined(&self) -> bool {
        self.status == ShotStatus::Defined
    }
}

pub fn plain_trajectory(
    prob: &ProblemSpec,
    lambda: f64,
    config: &IntegratorConfig,
) -> Result<Trajectory<2>, IntegratorError> {
    let start = SystemState::new(0.0, [lambda, prob.a0() * lambda]);
    integrate(plain_rhs(prob), start, config)
}

/// Shot of `(u, u')` alone, for scans that only need terminal values.
pub fn shoot_plain(prob: &ProblemSpec, lambda: f64, config: &ShootConfig) -> Result<PlainShot, ShootingError> {
    let traj = plain_trajectory(prob, lambda, &config.integrator)?;
    let status = shot_status(lambda, &traj)?;
    let y = traj.last().y;
    Ok(PlainShot {
        lambda,
        u1: y[0],
        du1: y[1],
        status,
    })
}

fn is_defined(prob: &ProblemSpec, lambda: f64, config: &ShootConfig) -> bool {
    matches!(shoot_plain(prob, lambda, config), Ok(s) if s.is_defined())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TDerivatives {
    pub lambda: f64,
    pub t: f64,
    pub t_prime: f64,
    pub t_second: f64,
}

impl TDerivatives {
    pub fn from_terminal(lambda: f64, term: &Terminal) -> Self {
        let Terminal {
            u1,
            du1,
            w1,
            dw1,
            z1,
            dz1,
        } = *term;
        let wronskian = u1 * dw1 - du1 * w1;
        Self {
            lambda,
            t: du1 / u1,
            t_prime: wronskian / (u1 * u1),
            t_second: (u1 * dz1 - du1 * z1) / (u1 * u1) - 2.0 * w1 * wronskian / (u1 * u1 * u1),
        }
    }
}

fn defined_shot(prob: &ProblemSpec, lambda: f64, config: &ShootConfig) -> Result<ShotResult, ShootingError> {
    let shot = shoot(prob, lambda, config)?;
    if let ShotStatus::Escaped { x } = shot.status {
        return Err(ShootingError::OutsideDomain { lambda, x });
    }
    if !(shot.terminal.u1.abs() > config.pole_guard) {
        return Err(ShootingError::AtPole {
            lambda,
            u1: shot.terminal.u1,
        });
    }
    Ok(shot)
}

/// `T`, `T'` and `T''` from one augmented shot.
pub fn t_derivatives(prob: &ProblemSpec, lambda: f64, config: &ShootConfig) -> Result<TDerivatives, ShootingError> {
    let shot = defined_shot(prob, lambda, config)?;
    Ok(TDerivatives::from_terminal(lambda, &shot.terminal))
}

/// `T(λ) = u_λ'(1) / u_λ(1)`.
pub fn t_value(prob: &ProblemSpec, lambda: f64, config: &ShootConfig) -> Result<f64, ShootingError> {
    t_derivatives(prob, lambda, config).map(|d| d.t)
}

/// `T'(λ) = (u(1) w'(1) − u'(1) w(1)) / u(1)²`.
pub fn t_prime(prob: &ProblemSpec, lambda: f64, config: &ShootConfig) -> Result<f64, ShootingError> {
    t_derivatives(prob, lambda, config).map(|d| d.t_prime)
}

/// `T''(λ) = (u z' − u' z) / u² − 2 w (u w' − u' w) / u³`, all at x = 1.
pub fn t_second(prob: &ProblemSpec, lambda: f64, config: &ShootConfig) -> Result<f64, ShootingError> {
    t_derivatives(prob, lambda, config).map(|d| d.t_second)
}

/// `T'` through the quadrature `∫ (u g_u − g − p) w dx / u(1)²`, which equals
/// the terminal Wronskian form after integration by parts.
pub fn t_prime_by_quadrature(prob: &ProblemSpec, lambda: f64, config: &ShootConfig) -> Result<f64, ShootingError> {
    let shot = shoot_with_trajectory(prob, lambda, config)?;
    if let ShotStatus::Escaped { x } = shot.status {
        return Err(ShootingError::OutsideDomain { lambda, x });
    }
    let u1 = shot.terminal.u1;
    if !(u1.abs() > config.pole_guard) {
        return Err(ShootingError::AtPole { lambda, u1 });
    }
    let traj = shot.trajectory.expect("trajectory retained");
    let integral = traj.quadrature(|x, y| {
        let u = y[0];
        (u * prob.g_u(x, u) - prob.g(x, u) - prob.p(x)) * y[2]
    });
    // the Wronskian vanishes at x = 0: u(0) w'(0) - u'(0) w(0) = λ a0 - a0 λ
    Ok(integral / (u1 * u1))
}

/// `u_λ(1)`, with escapes mapped to ±∞ by the sign of u at escape. Uses the
/// augmented shot so that T evaluated at the returned λ₀ sees the same u(1).
fn signed_u1(prob: &ProblemSpec, lambda: f64, config: &ShootConfig) -> Result<f64, ShootingError> {
    let shot = shoot(prob, lambda, config)?;
    Ok(match shot.status {
        ShotStatus::Defined => shot.terminal.u1,
        ShotStatus::Escaped { .. } => f64::INFINITY.copysign(shot.terminal.u1),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Lambda0Method {
    /// Expanding bracket and bisection on the increasing map λ ↦ u_λ(1).
    Bisection,
    /// Monotonicity of g in u was not observed; first sign change of a scan.
    Scan,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lambda0 {
    pub value: f64,
    /// `u_{λ0}(1)`
    pub residual: f64,
    pub method: Lambda0Method,
}

fn bisect_sign_change<F>(mut lo: f64, mut hi: f64, mut f_lo: f64, f: F) -> Result<(f64, f64), ShootingError>
where
    F: Fn(f64) -> Result<f64, ShootingError>,
{
    let mut best = (lo, f_lo);
    let mut f_hi = f64::NAN;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid)?;
        if f_mid.abs() < best.1.abs() {
            best = (mid, f_mid);
        }
        if f_mid == 0.0 {
            return Ok((mid, 0.0));
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    if f_hi.is_finite() && f_hi.abs() < best.1.abs() {
        best = (hi, f_hi);
    }
    Ok(best)
}

/// Coarse check that g is strictly increasing in u on `x ∈ [0,1]`, `|u| ≤ 10`.
fn g_looks_monotone(prob: &ProblemSpec) -> bool {
    (0..=32).all(|i| {
        let x = i as f64 / 32.0;
        let mut prev = prob.g(x, -10.0);
        (1..=512).all(|j| {
            let cur = prob.g(x, -10.0 + 20.0 * j as f64 / 512.0);
            let ok = cur > prev;
            prev = cur;
            ok
        })
    })
}

pub fn find_lambda0_detailed(prob: &ProblemSpec, config: &ShootConfig) -> Result<Lambda0, ShootingError> {
    let f = |l: f64| signed_u1(prob, l, config);
    let cap = config.search_cap;
    if !g_looks_monotone(prob) {
        let mut grid: Vec<f64> = (0..=120)
            .map(|k| 1e-3 * (cap / 1e-3).powf(k as f64 / 120.0))
            .flat_map(|d| [-d, d])
            .chain([0.0])
            .collect();
        grid.sort_by(f64::total_cmp);
        let values: Vec<f64> = grid.iter().map(|&l| f(l)).collect::<Result<_, _>>()?;
        for i in 1..grid.len() {
            if values[i - 1] == 0.0 {
                return Ok(Lambda0 {
                    value: grid[i - 1],
                    residual: 0.0,
                    method: Lambda0Method::Scan,
                });
            }
            if (values[i - 1] < 0.0) != (values[i] < 0.0) {
                let (value, residual) = bisect_sign_change(grid[i - 1], grid[i], values[i - 1], f)?;
                return Ok(Lambda0 {
                    value,
                    residual,
                    method: Lambda0Method::Scan,
                });
            }
        }
        return Err(ShootingError::BracketNotFound { cap });
    }

    let at_zero = f(0.0)?;
    if at_zero == 0.0 {
        return Ok(Lambda0 {
            value: 0.0,
            residual: 0.0,
            method: Lambda0Method::Bisection,
        });
    }
    let direction = if at_zero > 0.0 { -1.0 } else { 1.0 };
    let mut near = (0.0, at_zero);
    let mut step = 1.0;
    let far = loop {
        let l = direction * step;
        let v = f(l)?;
        if (v < 0.0) != (at_zero < 0.0) || v == 0.0 {
            break (l, v);
        }
        near = (l, v);
        if step >= cap {
            return Err(ShootingError::BracketNotFound { cap });
        }
        step = (2.0 * step).min(cap);
    };
    if far.1 == 0.0 {
        return Ok(Lambda0 {
            value: far.0,
            residual: 0.0,
            method: Lambda0Method::Bisection,
        });
    }
    let ((lo, f_lo), hi) = if near.0 < far.0 { (near, far.0) } else { (far, near.0) };
    let (value, residual) = bisect_sign_change(lo, hi, f_lo, f)?;
    Ok(Lambda0 {
        value,
        residual,
        method: Lambda0Method::Bisection,
    })
}

/// The unique λ with `u_λ(1) = 0`.
pub fn find_lambda0(prob: &ProblemSpec, config: &ShootConfig) -> Result<f64, ShootingError> {
    find_lambda0_detailed(prob, config).map(|l| l.value)
}

/// One end of the domain as a numerical bracket: `inner` is defined,
/// `outer` (when present) escapes. No `outer` means no escape was seen up to
/// the search cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Boundary {
    pub inner: f64,
    pub outer: Option<f64>,
}

impl Boundary {
    pub fn cap_limited(&self) -> bool {
        self.outer.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DomainInfo {
    pub lower: Boundary,
    pub lambda0: f64,
    pub lambda0_method: Lambda0Method,
    pub upper: Boundary,
    pub search_cap: f64,
}

impl DomainInfo {
    pub fn any_cap_limited(&self) -> bool {
        self.lower.cap_limited() || self.upper.cap_limited()
    }
}

fn locate_boundary(prob: &ProblemSpec, lambda0: f64, direction: f64, config: &ShootConfig) -> Boundary {
    let cap = config.search_cap;
    let scale = 1.0 + lambda0.abs();
    let mut inner = lambda0;
    let mut offset = 0.125 * scale;
    let outer = loop {
        let candidate = lambda0 + direction * offset;
        if candidate.abs() >= cap {
            let edge = direction * cap;
            if is_defined(prob, edge, config) {
                return Boundary {
                    inner: edge,
                    outer: None,
                };
            }
            break edge;
        }
        if !is_defined(prob, candidate, config) {
            break candidate;
        }
        inner = candidate;
        offset *= 2.0;
    };
    let mut outer = outer;
    while (outer - inner).abs() > 1e-8 * (1.0 + inner.abs()) {
        let mid = 0.5 * (inner + outer);
        if mid == inner || mid == outer {
            break;
        }
        if is_defined(prob, mid, config) {
            inner = mid;
        } else {
            outer = mid;
        }
    }
    Boundary {
        inner,
        outer: Some(outer),
    }
}

/// Locates λ₀ and brackets both ends of the set of λ whose shot reaches x = 1.
pub fn find_domain(prob: &ProblemSpec, config: &ShootConfig) -> Result<DomainInfo, ShootingError> {
    let l0 = find_lambda0_detailed(prob, config)?;
    let (lower, upper) = rayon::join(
        || locate_boundary(prob, l0.value, -1.0, config),
        || locate_boundary(prob, l0.value, 1.0, config),
    );
    Ok(DomainInfo {
        lower,
        lambda0: l0.value,
        lambda0_method: l0.method,
        upper,
        search_cap: config.search_cap,
    })
}

fn geometric(from: f64, to: f64, n: usize) -> impl Iterator<Item = f64> {
    let ratio = if n > 1 {
        (to / from).powf(1.0 / (n - 1) as f64)
    } else {
        1.0
    };
    (0..n).map(move |k| from * ratio.powi(k as i32))
}

/// `n` points strictly between `lambda0` and `end.inner`, geometrically
/// clustered toward `lambda0` and, when the end is a finite bracket, also
/// toward it. Sorted ascending.
pub fn clustered_points(lambda0: f64, end: &Boundary, n: usize) -> Vec<f64> {
    let width = (end.inner - lambda0).abs();
    let direction = (end.inner - lambda0).signum();
    if width == 0.0 || n == 0 {
        return Vec::new();
    }
    let first = (1e-6 * (1.0 + lambda0.abs())).min(1e-3 * width);
    let mut pts: Vec<f64> = if end.cap_limited() {
        geometric(first, width, n)
            .map(|d| if d >= width { end.inner } else { lambda0 + direction * d })
            .collect()
    } else {
        let near = n / 2;
        let last = (1e-6 * (1.0 + end.inner.abs())).min(1e-3 * width);
        geometric(first, 0.5 * width, near)
            .map(|d| lambda0 + direction * d)
            .chain(geometric(last, 0.5 * width, n - near).map(|d| end.inner - direction * d))
            .collect()
    };
    pts.retain(|&l| (l - lambda0) * direction > 0.0 && (end.inner - l) * direction >= 0.0);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleStatus {
    Defined,
    AtPole,
    Escaped,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveSample {
    pub lambda: f64,
    pub t: Option<f64>,
    pub t_prime: Option<f64>,
    pub t_second: Option<f64>,
    pub status: SampleStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TCurve {
    pub domain: DomainInfo,
    pub samples: Vec<CurveSample>,
    pub a_min_point: Option<(f64, f64)>,
}

fn curve_sample(prob: &ProblemSpec, lambda: f64, config: &ShootConfig) -> CurveSample {
    let empty = |status| CurveSample {
        lambda,
        t: None,
        t_prime: None,
        t_second: None,
        status,
    };
    match t_derivatives(prob, lambda, config) {
        Ok(d) => CurveSample {
            lambda,
            t: Some(d.t),
            t_prime: Some(d.t_prime),
            t_second: Some(d.t_second),
            status: SampleStatus::Defined,
        },
        Err(ShootingError::AtPole { .. }) => empty(SampleStatus::AtPole),
        Err(ShootingError::OutsideDomain { .. }) => empty(SampleStatus::Escaped),
        Err(_) => empty(SampleStatus::Failed),
    }
}

/// Samples T, T' and T'' with `n` points on each component of the domain.
pub fn sample_t_curve(prob: &ProblemSpec, n: usize, config: &ShootConfig) -> Result<TCurve, ShootingError> {
    let n = n.max(16);
    let domain = find_domain(prob, config)?;
    let mut lambdas = clustered_points(domain.lambda0, &domain.lower, n);
    lambdas.extend(clustered_points(domain.lambda0, &domain.upper, n));
    let samples: Vec<CurveSample> = lambdas.par_iter().map(|&l| curve_sample(prob, l, config)).collect();
    let a_min_point = a_min(prob, &domain, config).ok();
    Ok(TCurve {
        domain,
        samples,
        a_min_point,
    })
}

fn t_plain(prob: &ProblemSpec, lambda: f64, config: &ShootConfig) -> Option<f64> {
    match shoot_plain(prob, lambda, config) {
        Ok(s) if s.is_defined() && s.u1.abs() > config.pole_guard => Some(s.du1 / s.u1),
        _ => None,
    }
}

const A_MIN_GRID: usize = 400;

/// Minimiser of T over `(λ0, λ*)`: grid search, golden section on T, then
/// bisection on the sign change of T'.
pub fn a_min(prob: &ProblemSpec, domain: &DomainInfo, config: &ShootConfig) -> Result<(f64, f64), ShootingError> {
    let grid = clustered_points(domain.lambda0, &domain.upper, A_MIN_GRID);
    if grid.len() < 3 {
        return Err(ShootingError::MinimizationFailed("empty right component".into()));
    }
    let values: Vec<Option<f64>> = grid.par_iter().map(|&l| t_plain(prob, l, config)).collect();
    let (idx, _) = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| ShootingError::MinimizationFailed("T undefined on the grid".into()))?;
    if idx == 0 || idx == grid.len() - 1 {
        return Err(ShootingError::MinimizationFailed(format!(
            "grid minimum at the edge of the component (lambda = {})",
            grid[idx]
        )));
    }
    let (mut lo, mut hi) = (grid[idx - 1], grid[idx + 1]);
    let t = |l: f64| t_plain(prob, l, config).unwrap_or(f64::INFINITY);

    // golden section
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (t(c), t(d));
    for _ in 0..100 {
        if b - a <= 1e-9 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = t(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = t(d);
        }
    }
    let mut best = if fc < fd { (c, fc) } else { (d, fd) };

    // T' root
    let tp = |l: f64| t_prime(prob, l, config);
    if let (Ok(p_lo), Ok(p_hi)) = (tp(lo), tp(hi)) {
        if p_lo < 0.0 && p_hi > 0.0 {
            let mut f_lo = p_lo;
            while hi - lo > 1e-13 * (1.0 + lo.abs()) {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let f_mid = tp(mid)?;
                if (f_mid < 0.0) == (f_lo < 0.0) {
                    lo = mid;
                    f_lo = f_mid;
                } else {
                    hi = mid;
                }
            }
            let root = 0.5 * (lo + hi);
            let value = t(root);
            if value <= best.1 {
                best = (root, value);
            }
        }
    }
    if !(best.1.is_finite() && best.1 > 0.0) {
        return Err(ShootingError::MinimizationFailed(format!(
            "non-positive minimum {} at lambda = {}",
            best.1, best.0
        )));
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PSensitivity {
    /// `∫ [(u g_u − g − p) y + u] dx / u(1)²` by quadrature.
    pub integral_form: f64,
    /// `(u(1) y'(1) − u'(1) y(1)) / u(1)²`.
    pub terminal_form: f64,
}

/// ∂T/∂p for constant p, through `y = ∂u/∂p`, `y'' = g_u y + 1`, `y(0) = y'(0) = 0`.
pub fn t_p_sensitivity_detail(
    prob: &ProblemSpec,
    lambda: f64,
    config: &ShootConfig,
) -> Result<PSensitivity, ShootingError> {
    let p = prob.p_constant().ok_or(ShootingError::NonConstantP)?;
    let a0 = prob.a0();
    let traj = integrate(
        |x, y: &[f64; 4]| {
            let u = y[0];
            [y[1], prob.g(x, u) + p, y[3], prob.g_u(x, u) * y[2] + 1.0]
        },
        SystemState::new(0.0, [lambda, a0 * lambda, 0.0, 0.0]),
        &config.integrator,
    )?;
    if let ShotStatus::Escaped { x } = shot_status(lambda, &traj)? {
        return Err(ShootingError::OutsideDomain { lambda, x });
    }
    let [u1, du1, y1, dy1] = traj.last().y;
    if !(u1.abs() > config.pole_guard) {
        return Err(ShootingError::AtPole { lambda, u1 });
    }
    let integral = traj.quadrature(|x, s| {
        let u = s[0];
        (u * prob.g_u(x, u) - prob.g(x, u) - p) * s[2] + u
    });
    Ok(PSensitivity {
        integral_form: integral / (u1 * u1),
        terminal_form: (u1 * dy1 - du1 * y1) / (u1 * u1),
    })
}

pub fn t_p_sensitivity(prob: &ProblemSpec, lambda: f64, config: &ShootConfig) -> Result<f64, ShootingError> {
    t_p_sensitivity_detail(prob, lambda, config).map(|s| s.integral_form)
}
