//! Adaptive Dormand–Prince 5(4) integration on `[0, 1]` with dense output.
//!
//! Component 0 of every system is the designated escape coordinate: the
//! integration stops with [`Status::Escaped`] the first time `|y[0]|`
//! exceeds [`IntegratorConfig::escape_bound`]. Other components may grow
//! without triggering escape.

use serde::Serialize;
use thiserror::Error;

/// Right end of every integration span.
pub const X_END: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum IntegratorError {
    #[error("right-hand side is not finite at x = {x}")]
    NonFiniteRhs { x: f64 },
    #[error("maximum number of steps ({steps}) exceeded at x = {x}")]
    MaxStepsExceeded { steps: usize, x: f64 },
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("invalid initial state: {0}")]
    InvalidInitialState(&'static str),
    #[error("x = {x} is outside the integrated range [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },
    #[error("sample count must be positive")]
    InvalidSampleCount,
    #[error("residual requires a completed trajectory")]
    NotCompleted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub escape_bound: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            escape_bound: 1e8,
            min_step: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), IntegratorError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.rel_tol) || !positive(self.abs_tol) {
            return Err(IntegratorError::InvalidConfig("tolerances must be positive"));
        }
        if self.rel_tol < 10.0 * f64::EPSILON {
            return Err(IntegratorError::InvalidConfig(
                "rel_tol must be at least 10 machine epsilons",
            ));
        }
        if !positive(self.escape_bound) || !positive(self.min_step) || self.max_steps == 0 {
            return Err(IntegratorError::InvalidConfig(
                "escape_bound, min_step and max_steps must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemState<const N: usize> {
    pub x: f64,
    pub y: [f64; N],
}

impl<const N: usize> SystemState<N> {
    pub fn new(x: f64, y: [f64; N]) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    Completed,
    Escaped { x: f64 },
    StepUnderflow { x: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Statistics {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evaluations: usize,
}

/// One accepted step: the state at its left end and the coefficients of the
/// quartic continuous extension over `[x, x + h]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step<const N: usize> {
    pub x: f64,
    pub h: f64,
    coeffs: [[f64; N]; 5],
}

impl<const N: usize> Step<N> {
    pub fn start(&self) -> SystemState<N> {
        SystemState::new(self.x, self.coeffs[0])
    }

    pub fn end_x(&self) -> f64 {
        self.x + self.h
    }

    fn theta(&self, x: f64) -> f64 {
        ((x - self.x) / self.h).clamp(0.0, 1.0)
    }

    fn value(&self, x: f64) -> [f64; N] {
        let t = self.theta(x);
        let s = 1.0 - t;
        let [r1, r2, r3, r4, r5] = &self.coeffs;
        std::array::from_fn(|i| r1[i] + t * (r2[i] + s * (r3[i] + t * (r4[i] + s * r5[i]))))
    }

    /// Derivative of the continuous extension with respect to x.
    fn slope(&self, x: f64) -> [f64; N] {
        let t = self.theta(x);
        let s = 1.0 - t;
        let [_, r2, r3, r4, r5] = &self.coeffs;
        std::array::from_fn(|i| {
            // P(t) = r1 + t r2 + t s r3 + t^2 s r4 + t^2 s^2 r5
            let d = r2[i]
                + (1.0 - 2.0 * t) * r3[i]
                + (2.0 * t * s - t * t) * r4[i]
                + (2.0 * t * s * s - 2.0 * t * t * s) * r5[i];
            d / self.h
        })
    }
}

/// Dense numerical solution of one initial value problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<const N: usize> {
    initial: SystemState<N>,
    steps: Vec<Step<N>>,
    last: SystemState<N>,
    status: Status,
    stats: Statistics,
}

impl<const N: usize> Trajectory<N> {
    pub fn status(&self) -> Status {
        self.status
    }

    pub fn is_completed(&self) -> bool {
        self.status == Status::Completed
    }

    pub fn steps(&self) -> &[Step<N>] {
        &self.steps
    }

    pub fn statistics(&self) -> Statistics {
        self.stats
    }

    pub fn initial(&self) -> SystemState<N> {
        self.initial
    }

    /// State at the right end of the last accepted step.
    pub fn last(&self) -> SystemState<N> {
        self.last
    }

    fn locate(&self, x: f64) -> Result<Option<&Step<N>>, IntegratorError> {
        let lo = self.initial.x;
        let hi = self.last.x;
        if !(lo..=hi).contains(&x) {
            return Err(IntegratorError::OutOfRange { x, lo, hi });
        }
        if self.steps.is_empty() {
            return Ok(None);
        }
        let idx = self.steps.partition_point(|s| s.end_x() < x);
        Ok(Some(&self.steps[idx.min(self.steps.len() - 1)]))
    }

    pub fn evaluate(&self, x: f64) -> Result<SystemState<N>, IntegratorError> {
        match self.locate(x)? {
            None => Ok(self.initial),
            Some(step) if x == step.x => Ok(step.start()),
            Some(_) if x == self.last.x => Ok(self.last),
            Some(step) => Ok(SystemState::new(x, step.value(x))),
        }
    }

    /// x-derivative of the interpolant.
    pub fn evaluate_slope(&self, x: f64) -> Result<[f64; N], IntegratorError> {
        match self.locate(x)? {
            None => Ok([0.0; N]),
            Some(step) => Ok(step.slope(x)),
        }
    }

    /// Maximum over `n_samples` uniformly spaced points of the sup-norm of
    /// `y'_interp(x) - rhs(x, y_interp(x))`.
    pub fn residual_norm<F>(&self, rhs: F, n_samples: usize) -> Result<f64, IntegratorError>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        if n_samples == 0 {
            return Err(IntegratorError::InvalidSampleCount);
        }
        if !self.is_completed() {
            return Err(IntegratorError::NotCompleted);
        }
        let (lo, hi) = (self.initial.x, self.last.x);
        let mut worst = 0.0_f64;
        for k in 0..n_samples {
            let x = if n_samples == 1 {
                lo
            } else {
                lo + (hi - lo) * k as f64 / (n_samples - 1) as f64
            };
            let state = self.evaluate(x)?;
            let slope = self.evaluate_slope(x)?;
            let f = rhs(x, &state.y);
            for i in 0..N {
                worst = worst.max((slope[i] - f[i]).abs());
            }
        }
        Ok(worst)
    }

    /// Integral of `f(x, y(x))` over the integrated range, by five-point
    /// Gauss–Legendre quadrature on every accepted step of the interpolant.
    pub fn quadrature<F>(&self, f: F) -> f64
    where
        F: Fn(f64, &[f64; N]) -> f64,
    {
        const NODES: [f64; 5] = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683,
            0.0,
            0.538_469_310_105_683,
            0.906_179_845_938_664,
        ];
        const WEIGHTS: [f64; 5] = [
            0.236_926_885_056_189,
            0.478_628_670_499_366,
            0.568_888_888_888_889,
            0.478_628_670_499_366,
            0.236_926_885_056_189,
        ];
        let mut total = 0.0;
        for step in &self.steps {
            let half = 0.5 * step.h;
            let mid = step.x + half;
            let mut acc = 0.0;
            for (node, weight) in NODES.iter().zip(WEIGHTS) {
                let x = mid + half * node;
                acc += weight * f(x, &step.value(x));
            }
            total += half * acc;
        }
        total
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
/// Step shrink factor after a trial step produced non-finite values.
const NON_FINITE_SHRINK: f64 = 0.25;

fn all_finite<const N: usize>(v: &[f64; N]) -> bool {
    v.iter().all(|c| c.is_finite())
}

fn combine<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(a, k)| a * k[i]).sum::<f64>())
}

struct Controller<'a, const N: usize, F> {
    rhs: F,
    config: &'a IntegratorConfig,
    stats: Statistics,
}

impl<const N: usize, F> Controller<'_, N, F>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    fn eval(&mut self, x: f64, y: &[f64; N]) -> [f64; N] {
        self.stats.rhs_evaluations += 1;
        (self.rhs)(x, y)
    }

    fn weighted_rms(&self, v: &[f64; N], y: &[f64; N], y_new: &[f64; N]) -> f64 {
        let sum: f64 = (0..N)
            .map(|i| {
                let sc = self.config.abs_tol + self.config.rel_tol * y[i].abs().max(y_new[i].abs());
                (v[i] / sc).powi(2)
            })
            .sum();
        (sum / N as f64).sqrt()
    }

    fn initial_step(&mut self, x: f64, y: &[f64; N], f0: &[f64; N]) -> f64 {
        let span = X_END - x;
        let d0 = self.weighted_rms(y, y, y);
        let d1 = self.weighted_rms(f0, y, y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 }.min(span);
        let y1 = combine(y, h0, &[(1.0, f0)]);
        let f1 = self.eval(x + h0, &y1);
        let diff: [f64; N] = std::array::from_fn(|i| f1[i] - f0[i]);
        let d2 = if all_finite(&f1) {
            self.weighted_rms(&diff, y, y) / h0
        } else {
            f64::INFINITY
        };
        let dmax = d1.max(d2);
        let h1 = if dmax <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / dmax).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span).max(self.config.min_step)
    }
}

/// Integrates `y' = rhs(x, y)` from `y0` (at `y0.x`, normally 0) up to x = 1.
///
/// Returns a trajectory whose status is `Completed`, `Escaped` (first time
/// `|y[0]| > escape_bound`), or `StepUnderflow`. A step underflow with
/// `|y[0]| > 0.01 * escape_bound` is reported as an escape.
pub fn integrate<const N: usize, F>(
    rhs: F,
    y0: SystemState<N>,
    config: &IntegratorConfig,
) -> Result<Trajectory<N>, IntegratorError>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    config.validate()?;
    if !(0.0..X_END).contains(&y0.x) {
        return Err(IntegratorError::InvalidInitialState("start must lie in [0, 1)"));
    }
    if !all_finite(&y0.y) {
        return Err(IntegratorError::InvalidInitialState("initial state is not finite"));
    }
    let mut ctl = Controller {
        rhs,
        config,
        stats: Statistics::default(),
    };
    let mut steps: Vec<Step<N>> = Vec::new();
    let finish = |steps: Vec<Step<N>>, last: SystemState<N>, status, stats| Trajectory {
        initial: y0,
        steps,
        last,
        status,
        stats,
    };

    let mut x = y0.x;
    let mut y = y0.y;
    if y[0].abs() > config.escape_bound {
        return Ok(finish(steps, y0, Status::Escaped { x }, ctl.stats));
    }
    let mut k1 = ctl.eval(x, &y);
    if !all_finite(&k1) {
        return Err(IntegratorError::NonFiniteRhs { x });
    }
    let mut h = ctl.initial_step(x, &y, &k1);
    let mut last_rejected = false;

    loop {
        if ctl.stats.accepted + ctl.stats.rejected >= config.max_steps {
            return Err(IntegratorError::MaxStepsExceeded {
                steps: config.max_steps,
                x,
            });
        }
        let mut reaches_end = false;
        if x + h >= X_END - 1e-15 * X_END.max(x.abs()) {
            h = X_END - x;
            reaches_end = true;
        }

        let k2 = ctl.eval(x + C2 * h, &combine(&y, h, &[(A21, &k1)]));
        let k3 = ctl.eval(x + C3 * h, &combine(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = ctl.eval(x + C4 * h, &combine(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = ctl.eval(
            x + C5 * h,
            &combine(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = ctl.eval(
            x + h,
            &combine(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = combine(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = ctl.eval(x + h, &y_new);
        let est: [f64; N] =
            std::array::from_fn(|i| h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]));
        let err = ctl.weighted_rms(&est, &y, &y_new);
        let finite_trial = all_finite(&y_new) && all_finite(&k7) && err.is_finite();

        if finite_trial && err <= 1.0 {
            ctl.stats.accepted += 1;
            let r2: [f64; N] = std::array::from_fn(|i| y_new[i] - y[i]);
            let r3: [f64; N] = std::array::from_fn(|i| h * k1[i] - r2[i]);
            let r4: [f64; N] = std::array::from_fn(|i| r2[i] - h * k7[i] - r3[i]);
            let r5: [f64; N] = std::array::from_fn(|i| {
                h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
            });
            let step = Step {
                x,
                h,
                coeffs: [y, r2, r3, r4, r5],
            };
            steps.push(step);
            x = if reaches_end { X_END } else { x + h };
            y = y_new;
            k1 = k7;

            if y[0].abs() > config.escape_bound {
                let x_esc = locate_escape(&step, config.escape_bound);
                let last = SystemState::new(x, y);
                return Ok(finish(steps, last, Status::Escaped { x: x_esc }, ctl.stats));
            }
            if reaches_end {
                let last = SystemState::new(X_END, y);
                return Ok(finish(steps, last, Status::Completed, ctl.stats));
            }

            let mut fac = (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h *= fac;
            last_rejected = false;
        } else {
            ctl.stats.rejected += 1;
            last_rejected = true;
            h *= if finite_trial {
                (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0)
            } else {
                NON_FINITE_SHRINK
            };
            if h < config.min_step {
                let last = SystemState::new(x, y);
                if y[0].abs() > 0.01 * config.escape_bound {
                    return Ok(finish(steps, last, Status::Escaped { x }, ctl.stats));
                }
                if !finite_trial {
                    return Err(IntegratorError::NonFiniteRhs { x });
                }
                return Ok(finish(steps, last, Status::StepUnderflow { x }, ctl.stats));
            }
        }
    }
}

/// First x in the step at which `|u|` exceeds `bound`, refined on the
/// continuous extension.
fn locate_escape<const N: usize>(step: &Step<N>, bound: f64) -> f64 {
    let end = step.end_x();
    if step.coeffs[0][0].abs() > bound {
        return step.x;
    }
    let (mut lo, mut hi) = (step.x, end);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if step.value(mid)[0].abs() > bound {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    fn second_order_zero(_x: f64, y: &[f64; 2]) -> [f64; 2] {
        [y[1], 0.0]
    }

    fn exponential(_x: f64, y: &[f64; 2]) -> [f64; 2] {
        [y[1], y[0]]
    }

    fn cubic(_x: f64, y: &[f64; 2]) -> [f64; 2] {
        [y[1], y[0].powi(3)]
    }

    fn blow_up_start() -> SystemState<2> {
        let s = std::f64::consts::SQRT_2;
        SystemState::new(0.0, [s / 0.5, s / 0.25])
    }

    #[test]
    fn linear_solution_is_exact() {
        let traj = integrate(
            second_order_zero,
            SystemState::new(0.0, [1.0, 1.0]),
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert_eq!(traj.status(), Status::Completed);
        let end = traj.last();
        assert_eq!(end.x, 1.0);
        assert!((end.y[0] - 2.0).abs() < 1e-13);
        assert!((end.y[1] - 1.0).abs() < 1e-13);
        let mid = traj.evaluate(0.5).unwrap();
        assert!((mid.y[0] - 1.5).abs() < 1e-13);
        assert!((mid.y[1] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn exponential_terminal_and_midpoint() {
        let traj = integrate(
            exponential,
            SystemState::new(0.0, [1.0, 1.0]),
            &IntegratorConfig::default(),
        )
        .unwrap();
        let e = std::f64::consts::E;
        let end = traj.last();
        assert!((end.y[0] - e).abs() < 1e-8);
        assert!((end.y[1] - e).abs() < 1e-8);
        let mid = traj.evaluate(0.5).unwrap();
        let sqrt_e = 0.5_f64.exp();
        assert!((mid.y[0] - sqrt_e).abs() < 1e-8, "{:?}", mid);
        assert!((mid.y[1] - sqrt_e).abs() < 1e-8);
    }

    #[test]
    fn stored_endpoints_are_reproduced() {
        let traj = integrate(
            exponential,
            SystemState::new(0.0, [1.0, 1.0]),
            &IntegratorConfig::default(),
        )
        .unwrap();
        for step in traj.steps() {
            let s = traj.evaluate(step.x).unwrap();
            assert_eq!(s.y, step.start().y);
        }
        assert_eq!(traj.evaluate(1.0).unwrap().y, traj.last().y);
        // interior ends agree with the next step's start to round-off
        for pair in traj.steps().windows(2) {
            let from_left = pair[0].value(pair[0].end_x());
            let right = pair[1].start().y;
            for i in 0..2 {
                assert!((from_left[i] - right[i]).abs() <= 1e-14 * right[i].abs().max(1.0));
            }
        }
    }

    #[test]
    fn steps_strictly_increase() {
        let traj = integrate(
            exponential,
            SystemState::new(0.0, [1.0, 1.0]),
            &IntegratorConfig::default(),
        )
        .unwrap();
        for pair in traj.steps().windows(2) {
            assert!(pair[0].x < pair[1].x);
        }
    }

    #[test]
    fn cubic_blow_up_escapes_near_half() {
        let traj = integrate(cubic, blow_up_start(), &IntegratorConfig::default()).unwrap();
        match traj.status() {
            Status::Escaped { x } => assert!((x - 0.5).abs() < 1e-3, "x_esc = {x}"),
            other => panic!("expected escape, got {other:?}"),
        }
    }

    #[test]
    fn escape_point_is_monotone_in_bound() {
        let mut previous = 0.0;
        for bound in [1e4, 1e6, 1e8, 1e10] {
            let config = IntegratorConfig {
                escape_bound: bound,
                ..IntegratorConfig::default()
            };
            let traj = integrate(cubic, blow_up_start(), &config).unwrap();
            let Status::Escaped { x } = traj.status() else {
                panic!("no escape at bound {bound}");
            };
            assert!(x >= previous, "bound {bound}: {x} < {previous}");
            previous = x;
        }
        assert!((previous - 0.5).abs() < 1e-3);
    }

    #[test]
    fn tightening_tolerance_reduces_error() {
        let e = std::f64::consts::E;
        let mut errors = Vec::new();
        let mut tol = 1e-6;
        for _ in 0..5 {
            let traj = integrate(
                exponential,
                SystemState::new(0.0, [1.0, 1.0]),
                &IntegratorConfig::with_tolerances(tol, tol),
            )
            .unwrap();
            errors.push((traj.last().y[0] - e).abs());
            tol *= 0.5;
        }
        for pair in errors.windows(2) {
            assert!(pair[1] < pair[0], "{errors:?}");
        }
    }

    #[test]
    fn deterministic_steps() {
        let run = || integrate(cubic, SystemState::new(0.0, [0.3, 0.1]), &IntegratorConfig::default()).unwrap();
        assert_eq!(run(), run());
    }

    #[test]
    fn residual_of_exact_solutions() {
        let traj = integrate(
            second_order_zero,
            SystemState::new(0.0, [1.0, 1.0]),
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert!(traj.residual_norm(second_order_zero, 100).unwrap() <= 1e-9);

        let traj = integrate(
            exponential,
            SystemState::new(0.0, [1.0, 1.0]),
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert!(traj.residual_norm(exponential, 1000).unwrap() <= 1e-6);
        assert_eq!(
            traj.residual_norm(exponential, 0),
            Err(IntegratorError::InvalidSampleCount)
        );
    }

    #[test]
    fn residual_needs_completion() {
        let traj = integrate(cubic, blow_up_start(), &IntegratorConfig::default()).unwrap();
        assert_eq!(traj.residual_norm(cubic, 10), Err(IntegratorError::NotCompleted));
    }

    #[test]
    fn evaluate_out_of_range() {
        let traj = integrate(
            exponential,
            SystemState::new(0.0, [1.0, 1.0]),
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert!(matches!(traj.evaluate(1.5), Err(IntegratorError::OutOfRange { .. })));
        assert!(traj.evaluate(-0.1).is_err());
    }

    #[test]
    fn nan_rhs_is_an_error() {
        let rhs = |x: f64, y: &[f64; 2]| {
            if x > 0.3 {
                [f64::NAN, y[0]]
            } else {
                [y[1], 0.0]
            }
        };
        let err = integrate(rhs, SystemState::new(0.0, [1.0, 0.0]), &IntegratorConfig::default()).unwrap_err();
        assert!(matches!(err, IntegratorError::NonFiniteRhs { .. }), "{err:?}");
    }

    #[test]
    fn max_steps_is_enforced() {
        let config = IntegratorConfig {
            max_steps: 3,
            ..IntegratorConfig::default()
        };
        let err = integrate(exponential, SystemState::new(0.0, [1.0, 1.0]), &config).unwrap_err();
        assert!(matches!(err, IntegratorError::MaxStepsExceeded { .. }));
    }

    #[test]
    fn quadrature_of_exponential() {
        let traj = integrate(
            exponential,
            SystemState::new(0.0, [1.0, 1.0]),
            &IntegratorConfig::default(),
        )
        .unwrap();
        let integral = traj.quadrature(|_, y| y[0]);
        assert!((integral - (std::f64::consts::E - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_config() {
        let config = IntegratorConfig {
            rel_tol: 1e-17,
            ..IntegratorConfig::default()
        };
        assert!(integrate(exponential, SystemState::new(0.0, [1.0, 1.0]), &config).is_err());
    }
}
