//! First eigenvalue of `-φ''` under `φ'(0) = a0 φ(0)`, `φ'(1) = a1 φ(1)`,
//! and the linearisation at zero of the shooting family.

use serde::Serialize;
use thiserror::Error;

use crate::integrator::{integrate, IntegratorConfig, IntegratorError, SystemState};
use crate::problem::{h9_on_grid, ProblemSpec, Witness};

/// Below this |μ| the trig/hyperbolic closed forms are replaced by series.
const SERIES_CUTOFF: f64 = 1e-8;
/// Grid for the (H9) check.
pub const H9_POINTS: usize = 256;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectrumError {
    #[error("parameter {name} must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("no positive eigenfunction found for mu in [{lo}, {hi}]")]
    NoEigenvalueInRange { lo: f64, hi: f64 },
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error("linearised solution escaped at x = {0}")]
    Escaped(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenShot {
    pub phi1: f64,
    pub dphi1: f64,
    pub zero_count: usize,
}

/// Closed-form solution of `φ'' = −μ φ`, `φ(0) = 1`, `φ'(0) = a0`, evaluated
/// at x = 1, with the number of sign changes of φ inside (0, 1).
pub fn eigen_shoot(a0: f64, mu: f64) -> EigenShot {
    if mu.abs() < SERIES_CUTOFF {
        let phi1 = 1.0 + a0 - mu * (0.5 + a0 / 6.0) + mu * mu * (1.0 / 24.0 + a0 / 120.0);
        let dphi1 = a0 - mu * (1.0 + 0.5 * a0) + mu * mu * (1.0 / 6.0 + a0 / 24.0);
        // 1 + a0 x stays positive on [0, 1]
        return EigenShot {
            phi1,
            dphi1,
            zero_count: 0,
        };
    }
    if mu < 0.0 {
        let k = (-mu).sqrt();
        let (s, c) = (k.sinh(), k.cosh());
        return EigenShot {
            phi1: c + a0 / k * s,
            dphi1: k * s + a0 * c,
            zero_count: 0,
        };
    }
    let k = mu.sqrt();
    let (s, c) = k.sin_cos();
    // φ(x) = R cos(kx − δ), δ ∈ (0, π/2); zeros at kx = δ + π/2 + nπ
    let delta = (a0 / k).atan();
    let first = delta + std::f64::consts::FRAC_PI_2;
    let zero_count = if k <= first {
        0
    } else {
        let n = ((k - first) / std::f64::consts::PI).floor() as usize;
        // a zero exactly at x = 1 is not interior
        let at_end = first + n as f64 * std::f64::consts::PI == k;
        n + 1 - usize::from(at_end)
    };
    EigenShot {
        phi1: c + a0 / k * s,
        dphi1: -k * s + a0 * c,
        zero_count,
    }
}

fn boundary_mismatch(a0: f64, a1: f64, mu: f64) -> f64 {
    let shot = eigen_shoot(a0, mu);
    shot.dphi1 - a1 * shot.phi1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenResult {
    pub lambda1: f64,
    pub phi1: f64,
    pub dphi1: f64,
    pub interior_zero_count: usize,
    pub boundary_residual: f64,
}

fn bisect_eigen(a0: f64, a1: f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = boundary_mismatch(a0, a1, lo);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = boundary_mismatch(a0, a1, mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    if boundary_mismatch(a0, a1, lo).abs() <= boundary_mismatch(a0, a1, hi).abs() {
        lo
    } else {
        hi
    }
}

/// Smallest eigenvalue: downward unit-step scan of the boundary mismatch
/// from `π² + a0² + a1²`, bisection on each sign change, accepted when the
/// eigenfunction has no interior zero.
pub fn first_eigenvalue(a0: f64, a1: f64) -> Result<EigenResult, SpectrumError> {
    for (name, value) in [("a0", a0), ("a1", a1)] {
        if !(value.is_finite() && value > 0.0) {
            return Err(SpectrumError::NonPositiveParameter { name, value });
        }
    }
    let top = std::f64::consts::PI.powi(2) + a0 * a0 + a1 * a1;
    let floor = -(4.0 * (a0 + a1).powi(2) + 100.0);
    let mut hi = top;
    let mut f_hi = boundary_mismatch(a0, a1, hi);
    while hi > floor {
        let lo = hi - 1.0;
        let f_lo = boundary_mismatch(a0, a1, lo);
        if f_hi == 0.0 || (f_lo < 0.0) != (f_hi < 0.0) {
            let mu = if f_hi == 0.0 { hi } else { bisect_eigen(a0, a1, lo, hi) };
            let shot = eigen_shoot(a0, mu);
            if shot.zero_count == 0 {
                return Ok(EigenResult {
                    lambda1: mu,
                    phi1: shot.phi1,
                    dphi1: shot.dphi1,
                    interior_zero_count: 0,
                    boundary_residual: (shot.dphi1 - a1 * shot.phi1).abs(),
                });
            }
        }
        hi = lo;
        f_hi = f_lo;
    }
    Err(SpectrumError::NoEigenvalueInRange { lo: floor, hi: top })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiResult {
    pub phi1: f64,
    pub dphi1: f64,
    /// `Φ'(1) < a1 Φ(1)`
    pub lemma_inequality_holds: bool,
    pub min_phi: f64,
}

/// Integrates `Φ'' = ∂g/∂u(x, 0) Φ`, `Φ(0) = 1`, `Φ'(0) = a0`.
pub fn phi_solution(prob: &ProblemSpec, config: &IntegratorConfig) -> Result<PhiResult, SpectrumError> {
    let traj = integrate(
        |x, y: &[f64; 2]| [y[1], prob.g_u(x, 0.0) * y[0]],
        SystemState::new(0.0, [1.0, prob.a0()]),
        config,
    )?;
    if !traj.is_completed() {
        return Err(SpectrumError::Escaped(traj.last().x));
    }
    let end = traj.last().y;
    let min_phi = (0..=256)
        .map(|i| traj.evaluate(i as f64 / 256.0).map(|s| s.y[0]))
        .try_fold(f64::INFINITY, |m, v| v.map(|v| m.min(v)))?;
    Ok(PhiResult {
        phi1: end[0],
        dphi1: end[1],
        lemma_inequality_holds: end[1] < prob.a1() * end[0],
        min_phi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct H9Check {
    pub holds: bool,
    pub lambda1: f64,
    pub witness: Option<Witness>,
    pub phi: PhiResult,
    /// The lemma inequality is backed by (H9) only when `holds` is true.
    pub hypothesis_established: bool,
}

/// `∂g/∂u(x, 0) ≤ −λ₁` on a 256-point grid, strictly at one point at least.
pub fn check_h9(prob: &ProblemSpec) -> Result<bool, SpectrumError> {
    let eigen = first_eigenvalue(prob.a0(), prob.a1())?;
    Ok(h9_on_grid(prob, eigen.lambda1, H9_POINTS).0)
}

/// (H9) verdict together with the `Φ'(1) < a1 Φ(1)` check.
pub fn h9_report(prob: &ProblemSpec, config: &IntegratorConfig) -> Result<H9Check, SpectrumError> {
    let eigen = first_eigenvalue(prob.a0(), prob.a1())?;
    let (holds, witness) = h9_on_grid(prob, eigen.lambda1, H9_POINTS);
    let phi = phi_solution(prob, config)?;
    Ok(H9Check {
        holds,
        lambda1: eigen.lambda1,
        witness,
        phi,
        hypothesis_established: holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{painleve_problem, PainleveParams};
    use std::f64::consts::{E, PI};

    #[test]
    fn shoot_closed_forms() {
        let s = eigen_shoot(1.0, -1.0);
        assert!((s.phi1 - E).abs() < 1e-14 && (s.dphi1 - E).abs() < 1e-14);
        assert_eq!(s.zero_count, 0);
        let s = eigen_shoot(1.0, 0.0);
        assert_eq!((s.phi1, s.dphi1, s.zero_count), (2.0, 1.0, 0));
        assert!(eigen_shoot(1.0, PI * PI).zero_count >= 1);
    }

    #[test]
    fn series_is_continuous_with_closed_forms() {
        for a0 in [0.3, 1.0, 4.0] {
            for mu in [SERIES_CUTOFF, -SERIES_CUTOFF] {
                let series = eigen_shoot(a0, mu * 0.999_999);
                let closed = eigen_shoot(a0, mu * 1.000_001);
                assert!((series.phi1 - closed.phi1).abs() < 1e-12);
                assert!((series.dphi1 - closed.dphi1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_count_matches_sampling() {
        for &(a0, mu) in &[(1.0, 5.0), (1.0, 30.0), (0.2, 100.0), (3.0, 400.0), (1.0, 9.0)] {
            let k: f64 = f64::sqrt(mu);
            let phi = |x: f64| (k * x).cos() + a0 / k * (k * x).sin();
            let n = 100_000;
            let changes = (1..n)
                .filter(|&i| phi((i - 1) as f64 / n as f64).signum() != phi(i as f64 / n as f64).signum())
                .count();
            assert_eq!(eigen_shoot(a0, mu).zero_count, changes, "a0={a0} mu={mu}");
        }
    }

    #[test]
    fn equal_coefficients_give_minus_one() {
        let r = first_eigenvalue(1.0, 1.0).unwrap();
        assert!((r.lambda1 + 1.0).abs() <= 1e-9, "{}", r.lambda1);
        assert_eq!(r.interior_zero_count, 0);
        assert!(r.boundary_residual <= 1e-10 * (1.0 + r.phi1.abs()));
    }

    #[test]
    fn threshold_gives_zero() {
        let r = first_eigenvalue(1.0, 0.5).unwrap();
        assert!(r.lambda1.abs() <= 1e-9, "{}", r.lambda1);
        assert!(first_eigenvalue(1.0, 0.4).unwrap().lambda1 > 0.0);
        assert!(first_eigenvalue(1.0, 2.0).unwrap().lambda1 < 0.0);
    }

    #[test]
    fn strictly_decreasing_in_a1() {
        let values: Vec<f64> = [0.25, 0.5, 1.0, 2.0, 4.0]
            .iter()
            .map(|&a1| first_eigenvalue(1.0, a1).unwrap().lambda1)
            .collect();
        for w in values.windows(2) {
            assert!(w[1] < w[0], "{values:?}");
        }
    }

    #[test]
    fn painleve_bound() {
        for (a0, a1) in [(1.0, 2.0), (1.0, 3.0), (2.0, 3.0)] {
            let l = first_eigenvalue(a0, a1).unwrap().lambda1;
            assert!(l < -a1 * a1, "a0={a0} a1={a1}: {l}");
        }
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(first_eigenvalue(0.0, 1.0).is_err());
        assert!(first_eigenvalue(1.0, -1.0).is_err());
    }

    #[test]
    fn phi_examples() {
        let cfg = IntegratorConfig::with_tolerances(1e-12, 1e-14);
        let cubic = ProblemSpec::custom("u^3", "1", 1.0, 2.0).unwrap();
        let phi = phi_solution(&cubic, &cfg).unwrap();
        assert!((phi.phi1 - 2.0).abs() < 1e-12 && (phi.dphi1 - 1.0).abs() < 1e-12);
        assert!(phi.lemma_inequality_holds);
        let lin = ProblemSpec::custom("u + u^3", "1", 1.0, 2.0).unwrap();
        let phi = phi_solution(&lin, &cfg).unwrap();
        assert!((phi.dphi1 / phi.phi1 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn h9_examples() {
        let p = |a, a0, a1| painleve_problem(PainleveParams { k: 1.0, a }, a0, a1).unwrap();
        let cfg = IntegratorConfig::default();
        let report = h9_report(&p(0.01, 1.0, 2.0), &cfg).unwrap();
        assert!(report.holds && report.phi.lemma_inequality_holds && report.phi.min_phi > 0.0);
        assert!(!check_h9(&p(0.01, 1.0, 1.0)).unwrap());
        let cubic = ProblemSpec::custom("u^3", "1", 1.0, 0.4).unwrap();
        assert!(!check_h9(&cubic).unwrap());
    }
}
