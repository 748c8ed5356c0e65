//! Enumeration of boundary value problem solutions through the root function
//! `R(λ) = u_λ'(1) − a1 u_λ(1)`, sign classification, verification,
//! certificates and parameter sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrator::{IntegratorError, Trajectory};
use crate::problem::{
    estimate_p0, golden_min, HypothesisReport, Interval, ProbeGrid, ProblemError, ProblemFile, ProblemSpec, Witness,
};
use crate::shooting::{
    a_min, clustered_points, find_domain, plain_rhs, plain_trajectory, shoot_plain, t_value, DomainInfo, ShootConfig,
    ShootingError,
};
use crate::spectrum::{first_eigenvalue, phi_solution, EigenResult, SpectrumError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Shooting(#[from] ShootingError),
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("ambiguous sign: u({x}) = {value:e} touches zero without crossing")]
    AmbiguousSign { x: f64, value: f64 },
    #[error("verification failed for lambda = {lambda}: {quantity} = {value:e} exceeds tolerance {tol:e}")]
    VerificationFailed {
        lambda: f64,
        quantity: Residual,
        value: f64,
        tol: f64,
    },
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Residual {
    BcLeft,
    BcRight,
    Ode,
}

impl std::fmt::Display for Residual {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Residual::BcLeft => "boundary residual at x = 0",
            Residual::BcRight => "boundary residual at x = 1",
            Residual::Ode => "ODE residual",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignClass {
    Negative,
    Positive,
    SignChanging,
    /// The profile touches zero without crossing; see [`SolverError::AmbiguousSign`].
    Ambiguous,
}

impl SignClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            SignClass::Negative => "negative",
            SignClass::Positive => "positive",
            SignClass::SignChanging => "sign_changing",
            SignClass::Ambiguous => "ambiguous",
        }
    }
}

impl std::str::FromStr for SignClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "negative" => Ok(SignClass::Negative),
            "positive" => Ok(SignClass::Positive),
            "sign_changing" => Ok(SignClass::SignChanging),
            "ambiguous" => Ok(SignClass::Ambiguous),
            other => Err(format!("unknown sign class {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub lambda: f64,
    pub sign_class: SignClass,
    pub u1: f64,
    pub du1: f64,
    /// `|u'(0) − a0 u(0)|`, `|u'(1) − a1 u(1)|`
    pub bc_residuals: [f64; 2],
    pub ode_residual: f64,
    pub zero_locations: Vec<f64>,
    pub tangency_flag: bool,
    pub min_u: f64,
    pub max_u: f64,
    /// `max |u| + max |u'| + max |u''|` on the classification grid.
    pub c2_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub shoot: ShootConfig,
    /// Scan points per domain component.
    pub base_points: usize,
    pub tangency_tol: f64,
    pub verify_tol: f64,
    pub residual_samples: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            shoot: ShootConfig::default(),
            base_points: 512,
            tangency_tol: 1e-8,
            verify_tol: 1e-6,
            residual_samples: 1024,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "warning", rename_all = "snake_case")]
pub enum SolveWarning {
    /// No escape below the search cap; roots beyond it cannot be excluded.
    DomainCapLimited { lower: bool, upper: bool, cap: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionSet {
    pub domain: DomainInfo,
    pub records: Vec<SolutionRecord>,
    pub warnings: Vec<SolveWarning>,
}

const CLASSIFY_POINTS: usize = 2048;
const ZERO_TOL: f64 = 1e-10;
const ROOT_TOL: f64 = 1e-11;

fn root_function(prob: &ProblemSpec, lambda: f64, config: &ShootConfig) -> Result<Option<f64>, ShootingError> {
    let shot = shoot_plain(prob, lambda, config)?;
    Ok(shot.is_defined().then(|| shot.du1 - prob.a1() * shot.u1))
}

fn bisect_root(
    prob: &ProblemSpec,
    mut lo: f64,
    mut hi: f64,
    mut r_lo: f64,
    config: &ShootConfig,
) -> Result<f64, SolverError> {
    while hi - lo > ROOT_TOL * (1.0 + lo.abs().max(hi.abs())) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let r = root_function(prob, mid, config)?.ok_or(ShootingError::OutsideDomain {
            lambda: mid,
            x: f64::NAN,
        })?;
        if r == 0.0 {
            return Ok(mid);
        }
        if (r < 0.0) == (r_lo < 0.0) {
            lo = mid;
            r_lo = r;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Extremum of `R` on `[a, b]` in the direction that approaches zero.
fn refine_extremum(prob: &ProblemSpec, a: f64, b: f64, sign: f64, config: &ShootConfig) -> (f64, f64) {
    let f = |l: f64| match root_function(prob, l, config) {
        Ok(Some(r)) => sign * r,
        _ => f64::INFINITY,
    };
    let (l, v) = golden_min(f, a, b);
    (l, sign * v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Root {
    lambda: f64,
    tangency: bool,
}

fn scan_roots(prob: &ProblemSpec, domain: &DomainInfo, opts: &SolveOptions) -> Result<Vec<Root>, SolverError> {
    let cfg = &opts.shoot;
    let mut grid = clustered_points(domain.lambda0, &domain.lower, opts.base_points);
    grid.push(domain.lambda0);
    grid.extend(clustered_points(domain.lambda0, &domain.upper, opts.base_points));
    let values: Vec<Option<f64>> = grid
        .par_iter()
        .map(|&l| root_function(prob, l, cfg).ok().flatten())
        .collect();
    let pts: Vec<(f64, f64)> = grid
        .iter()
        .zip(&values)
        .filter_map(|(&l, v)| v.map(|v| (l, v)))
        .collect();

    // crossings, keyed by the index of the left grid point; exact zeros sit on a grid point
    let mut roots: Vec<(usize, Root)> = Vec::new();
    for i in 0..pts.len() {
        let (l, r) = pts[i];
        if r == 0.0 {
            roots.push((
                i,
                Root {
                    lambda: l,
                    tangency: false,
                },
            ));
            continue;
        }
        if let Some(&(l_next, r_next)) = pts.get(i + 1) {
            if r_next != 0.0 && (r < 0.0) != (r_next < 0.0) {
                let lambda = bisect_root(prob, l, l_next, r, cfg)?;
                roots.push((
                    i,
                    Root {
                        lambda,
                        tangency: false,
                    },
                ));
            }
        }
    }

    // adjacent crossings around a grid point with |R| below the tangency tolerance: one double root
    let mut merged: Vec<Root> = Vec::new();
    let mut k = 0;
    while k < roots.len() {
        let (i, root) = roots[k];
        if let Some(&(j, next)) = roots.get(k + 1) {
            let shared = i + 1;
            if j == shared && pts[shared].1 != 0.0 && pts[shared].1.abs() < opts.tangency_tol {
                let sign = pts[shared].1.signum();
                let (lambda, _) = refine_extremum(prob, root.lambda, next.lambda, sign, cfg);
                merged.push(Root { lambda, tangency: true });
                k += 2;
                continue;
            }
        }
        merged.push(root);
        k += 1;
    }

    // near-tangencies without a sign change: local minima of |R| among same-sign neighbours
    for i in 1..pts.len().saturating_sub(1) {
        let (l_prev, r_prev) = pts[i - 1];
        let (_, r) = pts[i];
        let (l_next, r_next) = pts[i + 1];
        let same = r != 0.0 && r.signum() == r_prev.signum() && r.signum() == r_next.signum();
        if !(same && r.abs() < r_prev.abs() && r.abs() <= r_next.abs()) {
            continue;
        }
        let (lambda, value) = refine_extremum(prob, l_prev, l_next, r.signum(), cfg);
        if value.abs() < opts.tangency_tol && (value == 0.0 || value.signum() == r.signum()) {
            merged.push(Root { lambda, tangency: true });
        }
    }
    merged.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    merged.dedup_by(|b, a| {
        (a.lambda - b.lambda).abs() <= 1e-9 * (1.0 + a.lambda.abs()) && {
            a.tangency |= b.tangency;
            true
        }
    });
    Ok(merged)
}

/// Zeros of `u` from sign changes on a 2048-point grid, refined by bisection
/// on the dense output. Endpoint values within 1e-10 of zero count as zeros.
pub fn classify(traj: &Trajectory<2>) -> Result<(SignClass, Vec<f64>), SolverError> {
    let n = CLASSIFY_POINTS;
    let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let us: Vec<f64> = xs
        .iter()
        .map(|&x| traj.evaluate(x).map(|s| s.y[0]))
        .collect::<Result<_, _>>()?;
    let sign = |v: f64| {
        if v.abs() <= ZERO_TOL {
            0
        } else if v > 0.0 {
            1
        } else {
            -1
        }
    };
    let u_at = |x: f64| traj.evaluate(x).map(|s| s.y[0]);
    let refine = |mut lo: f64, mut hi: f64| -> Result<f64, IntegratorError> {
        let s_lo = u_at(lo)? < 0.0;
        while hi - lo > ZERO_TOL {
            let mid = 0.5 * (lo + hi);
            if (u_at(mid)? < 0.0) == s_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    };

    let mut zeros = Vec::new();
    if sign(us[0]) == 0 {
        zeros.push(0.0);
    }
    let mut i = 0;
    while i < n {
        if sign(us[i]) == 0 {
            // run of near-zero values
            let start = i;
            while i < n && sign(us[i]) == 0 {
                i += 1;
            }
            if start == 0 || i == n {
                continue;
            }
            let (before, after) = (sign(us[start - 1]), sign(us[i]));
            if before == after {
                let k = (start..i)
                    .min_by(|&a, &b| us[a].abs().total_cmp(&us[b].abs()))
                    .unwrap_or(start);
                return Err(SolverError::AmbiguousSign { x: xs[k], value: us[k] });
            }
            zeros.push(refine(xs[start - 1], xs[i])?);
            continue;
        }
        if i + 1 < n && sign(us[i + 1]) != 0 && sign(us[i + 1]) != sign(us[i]) {
            zeros.push(refine(xs[i], xs[i + 1])?);
        }
        i += 1;
    }
    if sign(us[n - 1]) == 0 {
        zeros.push(1.0);
    }
    zeros.dedup();

    let class = if !zeros.is_empty() {
        SignClass::SignChanging
    } else if us.iter().all(|&u| u < 0.0) {
        SignClass::Negative
    } else {
        SignClass::Positive
    };
    Ok((class, zeros))
}

/// Integrates the shot at `lambda` and fills in classification and residuals,
/// without accepting or rejecting the result.
pub fn build_record(
    prob: &ProblemSpec,
    lambda: f64,
    tangency: bool,
    opts: &SolveOptions,
) -> Result<SolutionRecord, SolverError> {
    let traj = plain_trajectory(prob, lambda, &opts.shoot.integrator)?;
    if let crate::integrator::Status::Escaped { x } = traj.status() {
        return Err(ShootingError::OutsideDomain { lambda, x }.into());
    }
    if !traj.is_completed() {
        return Err(IntegratorError::NotCompleted.into());
    }
    let (sign_class, zero_locations) = match classify(&traj) {
        Ok(c) => c,
        Err(SolverError::AmbiguousSign { .. }) => (SignClass::Ambiguous, Vec::new()),
        Err(e) => return Err(e),
    };
    let start = traj.initial().y;
    let [u1, du1] = traj.last().y;
    let ode_residual = traj.residual_norm(plain_rhs(prob), opts.residual_samples)?;

    let (mut min_u, mut max_u) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut max_du, mut max_ddu) = (0.0_f64, 0.0_f64);
    for i in 0..CLASSIFY_POINTS {
        let x = i as f64 / (CLASSIFY_POINTS - 1) as f64;
        let [u, du] = traj.evaluate(x)?.y;
        min_u = min_u.min(u);
        max_u = max_u.max(u);
        max_du = max_du.max(du.abs());
        max_ddu = max_ddu.max((prob.g(x, u) + prob.p(x)).abs());
    }
    Ok(SolutionRecord {
        lambda,
        sign_class,
        u1,
        du1,
        bc_residuals: [(start[1] - prob.a0() * start[0]).abs(), (du1 - prob.a1() * u1).abs()],
        ode_residual,
        zero_locations,
        tangency_flag: tangency,
        min_u,
        max_u,
        c2_norm: min_u.abs().max(max_u.abs()) + max_du + max_ddu,
    })
}

fn check_residuals(record: &SolutionRecord, tol: f64) -> Result<(), SolverError> {
    let parts = [
        (Residual::BcLeft, record.bc_residuals[0]),
        (Residual::BcRight, record.bc_residuals[1]),
        (Residual::Ode, record.ode_residual),
    ];
    let worst = parts
        .iter()
        .copied()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("three residuals");
    let failing = parts.iter().copied().find(|(_, v)| !(*v <= tol));
    match failing.or((!(tol > 0.0)).then_some(worst)) {
        None => Ok(()),
        Some((quantity, value)) => Err(SolverError::VerificationFailed {
            lambda: record.lambda,
            quantity,
            value,
            tol,
        }),
    }
}

/// Re-integrates the record's shot from scratch and accepts it iff every
/// residual is at most `tol`. A non-positive `tol` never accepts.
pub fn verify_solution(
    prob: &ProblemSpec,
    record: &SolutionRecord,
    tol: f64,
    opts: &SolveOptions,
) -> Result<SolutionRecord, SolverError> {
    let fresh = build_record(prob, record.lambda, record.tangency_flag, opts)?;
    check_residuals(&fresh, tol)?;
    Ok(fresh)
}

/// All roots of R on the numerical domain, each verified at `opts.verify_tol`.
pub fn find_solutions(prob: &ProblemSpec, opts: &SolveOptions) -> Result<SolutionSet, SolverError> {
    let domain = find_domain(prob, &opts.shoot)?;
    let roots = scan_roots(prob, &domain, opts)?;
    let records = roots
        .par_iter()
        .map(|root| {
            let record = build_record(prob, root.lambda, root.tangency, opts)?;
            check_residuals(&record, opts.verify_tol)?;
            Ok(record)
        })
        .collect::<Result<Vec<_>, SolverError>>()?;
    let mut warnings = Vec::new();
    if domain.any_cap_limited() {
        warnings.push(SolveWarning::DomainCapLimited {
            lower: domain.lower.cap_limited(),
            upper: domain.upper.cap_limited(),
            cap: domain.search_cap,
        });
    }
    Ok(SolutionSet {
        domain,
        records,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ClassCounts {
    pub negative: usize,
    pub sign_changing: usize,
    pub positive: usize,
    pub ambiguous: usize,
}

impl ClassCounts {
    pub fn of(records: &[SolutionRecord]) -> Self {
        let mut c = Self::default();
        for r in records {
            match r.sign_class {
                SignClass::Negative => c.negative += 1,
                SignClass::SignChanging => c.sign_changing += 1,
                SignClass::Positive => c.positive += 1,
                SignClass::Ambiguous => c.ambiguous += 1,
            }
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Inconsistent,
    /// Hypotheses hold on the evidence but the prediction depends on a
    /// threshold that cannot be computed, or the instance sits at a tangency.
    Inconclusive,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evidence {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

impl Evidence {
    fn new(name: &str, holds: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            holds,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolutionWitness {
    pub lambda: f64,
    pub sign_class: SignClass,
    pub min_u: f64,
    pub max_u: f64,
}

impl From<&SolutionRecord> for SolutionWitness {
    fn from(r: &SolutionRecord) -> Self {
        Self {
            lambda: r.lambda,
            sign_class: r.sign_class,
            min_u: r.min_u,
            max_u: r.max_u,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateEntry {
    pub id: String,
    pub hypotheses: Vec<Evidence>,
    pub applicable: bool,
    pub predicted: String,
    pub observed: String,
    pub verdict: Verdict,
    pub consistent: bool,
    pub witnesses: Vec<SolutionWitness>,
}

impl CertificateEntry {
    fn new(id: &str, hypotheses: Vec<Evidence>, predicted: impl Into<String>) -> Self {
        let applicable = hypotheses.iter().all(|h| h.holds);
        Self {
            id: id.to_string(),
            hypotheses,
            applicable,
            predicted: predicted.into(),
            observed: String::new(),
            verdict: Verdict::NotApplicable,
            consistent: true,
            witnesses: Vec::new(),
        }
    }

    fn conclude(mut self, observed: impl Into<String>, verdict: Verdict, witnesses: Vec<SolutionWitness>) -> Self {
        self.observed = observed.into();
        self.verdict = if self.applicable {
            verdict
        } else {
            Verdict::NotApplicable
        };
        self.consistent = self.verdict != Verdict::Inconsistent;
        self.witnesses = witnesses;
        self
    }
}

/// Evidence-consistency record for one problem instance. Entries never
/// claim proof: hypotheses are grid verdicts and observations are the
/// numerically found solution set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub problem: String,
    pub a0: f64,
    pub a1: f64,
    pub lambda1: f64,
    pub probe_grid: ProbeGrid,
    pub solution_count: usize,
    pub class_counts: ClassCounts,
    pub domain_cap_limited: bool,
    pub tangency: bool,
    /// Largest `‖u‖_{C²}` over the found solutions.
    pub max_c2_norm: Option<f64>,
    pub p0: Option<f64>,
    pub entries: Vec<CertificateEntry>,
}

impl Certificate {
    pub fn all_consistent(&self) -> bool {
        self.entries.iter().all(|e| e.consistent)
    }

    pub fn entry(&self, id: &str) -> Option<&CertificateEntry> {
        self.entries.iter().find(|e| e.id == id)
    }
}

fn describe_witness(w: &Option<Witness>) -> String {
    match w {
        Some(w) => format!("fails at x = {}, u = {} (value {})", w.x, w.u, w.value),
        None => "holds on the grid".to_string(),
    }
}

fn describe_interval(i: &Interval) -> String {
    format!("[{}, {}]", i.lo, i.hi)
}

/// Splits a run at zero; the sign-definite hypothesis needs `I ⊂ ℝ∖{0}`.
fn split_at_zero(i: &Interval) -> Vec<Interval> {
    if i.lo < 0.0 && i.hi > 0.0 {
        vec![Interval { lo: i.lo, hi: 0.0 }, Interval { lo: 0.0, hi: i.hi }]
    } else {
        vec![*i]
    }
}

fn at_most_one_in(id: &str, interval: &Interval, base: Vec<Evidence>, records: &[SolutionRecord]) -> CertificateEntry {
    let inside: Vec<SolutionWitness> = records
        .iter()
        .filter(|r| interval.contains_range(r.min_u, r.max_u))
        .map(SolutionWitness::from)
        .collect();
    let verdict = if inside.len() <= 1 {
        Verdict::Consistent
    } else {
        Verdict::Inconsistent
    };
    CertificateEntry::new(
        id,
        base,
        format!("at most one solution with range in {}", describe_interval(interval)),
    )
    .conclude(
        format!("{} solution(s) with range in the interval", inside.len()),
        verdict,
        inside,
    )
}

/// Samples of `sup_x (u ∂g/∂u − g)` at `u = −2^k`; bounded when the last
/// samples do not increase.
fn negative_tail_bounded(prob: &ProblemSpec) -> (bool, f64) {
    let xs: Vec<f64> = (0..65).map(|i| i as f64 / 64.0).collect();
    let sup = |u: f64| {
        xs.iter()
            .map(|&x| u * prob.g_u(x, u) - prob.g(x, u))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let samples: Vec<f64> = (0..=20).map(|k| sup(-(2f64.powi(k)))).collect();
    let tail = &samples[samples.len() - 6..];
    let bounded = tail.iter().all(|v| v.is_finite()) && tail.windows(2).all(|w| w[1] <= w[0]);
    (bounded, samples.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Sign-class summary of a solution set, e.g. `1 negative, 1 sign-changing`.
fn describe_counts(c: &ClassCounts) -> String {
    format!(
        "{} negative, {} sign-changing, {} positive, {} ambiguous",
        c.negative, c.sign_changing, c.positive, c.ambiguous
    )
}

/// Builds the certificate for `set`, which must come from `prob`.
pub fn certificate(
    prob: &ProblemSpec,
    set: &SolutionSet,
    eigen: &EigenResult,
    report: &HypothesisReport,
    opts: &SolveOptions,
) -> Certificate {
    let records = &set.records;
    let counts = ClassCounts::of(records);
    let count = records.len();
    let all: Vec<SolutionWitness> = records.iter().map(SolutionWitness::from).collect();
    let tangency = records.iter().any(|r| r.tangency_flag);
    let lambda1 = eigen.lambda1;

    let standing = vec![
        Evidence::new(
            "superlinearity",
            report.superlinear_trend,
            format!("min g/u grows across |u| = 1..{}", report.grid.u_max),
        ),
        Evidence::new(
            "g increasing in u",
            report.monotone_crec,
            describe_witness(&report.monotone_witness),
        ),
        Evidence::new(
            "p > 0",
            report.positivity_p,
            describe_witness(&report.positivity_witness),
        ),
    ];
    let superlinear = vec![standing[0].clone()];
    let mut entries = Vec::new();

    let max_c2_norm = records.iter().map(|r| r.c2_norm).reduce(f64::max);
    entries.push(
        CertificateEntry::new("boundedness", superlinear.clone(), "every solution has bounded C² norm").conclude(
            match max_c2_norm {
                Some(c) => format!("max C² norm over found solutions = {c}"),
                None => "no solutions found".to_string(),
            },
            if max_c2_norm.is_none_or(f64::is_finite) {
                Verdict::Consistent
            } else {
                Verdict::Inconsistent
            },
            all.clone(),
        ),
    );

    let negatives: Vec<SolutionWitness> = all
        .iter()
        .filter(|w| w.sign_class == SignClass::Negative)
        .copied()
        .collect();
    entries.push(
        CertificateEntry::new("negative_existence", standing.clone(), "at least one negative solution").conclude(
            describe_counts(&counts),
            if counts.negative >= 1 {
                Verdict::Consistent
            } else {
                Verdict::Inconsistent
            },
            if counts.negative >= 1 { negatives } else { all.clone() },
        ),
    );

    let h1_base = |i: &Interval| {
        vec![Evidence::new(
            "H1",
            true,
            format!(
                "∂g/∂u ≥ −λ₁ = {} on u ∈ {}, strict somewhere for each u",
                -lambda1,
                describe_interval(i)
            ),
        )]
    };
    if report.h1_holds_on.is_empty() {
        entries.push(
            CertificateEntry::new(
                "uniqueness_h1",
                vec![Evidence::new("H1", false, "fails at every u grid point")],
                "at most one solution with range in I",
            )
            .conclude("", Verdict::NotApplicable, Vec::new()),
        );
    }
    for i in &report.h1_holds_on {
        entries.push(at_most_one_in("uniqueness_h1", i, h1_base(i), records));
    }

    let h2_intervals: Vec<Interval> = report.h2_holds_on.iter().flat_map(split_at_zero).collect();
    if h2_intervals.is_empty() {
        entries.push(
            CertificateEntry::new(
                "uniqueness_h2",
                vec![Evidence::new("H2", false, "fails at every u grid point")],
                "at most one solution with range in I",
            )
            .conclude("", Verdict::NotApplicable, Vec::new()),
        );
    }
    for i in &h2_intervals {
        let base = vec![Evidence::new(
            "H2",
            true,
            format!("∂g/∂u > (g + p)/u on u ∈ {}", describe_interval(i)),
        )];
        entries.push(at_most_one_in("uniqueness_h2", i, base, records));
    }

    let (p_min, p_max) = prob.p_range(257);
    let p0 = estimate_p0(prob);
    let p0_value = p0.as_ref().ok().map(|e| e.p0);
    let mut hyp = superlinear.clone();
    hyp.push(match &p0 {
        Ok(e) => Evidence::new(
            "p ≥ p0",
            p_min >= e.p0,
            format!("min p = {p_min}, p0 = {} (N_M = {}, M = {})", e.p0, e.n_m, e.m),
        ),
        Err(err) => Evidence::new("p ≥ p0", false, err.to_string()),
    });
    let non_negative: Vec<SolutionWitness> = all
        .iter()
        .filter(|w| w.sign_class != SignClass::Negative)
        .copied()
        .collect();
    entries.push(
        CertificateEntry::new("negativity_large_p", hyp.clone(), "all solutions negative").conclude(
            describe_counts(&counts),
            if non_negative.is_empty() {
                Verdict::Consistent
            } else {
                Verdict::Inconsistent
            },
            if non_negative.is_empty() {
                all.clone()
            } else {
                non_negative
            },
        ),
    );

    // uniqueness of the negative solution for p beyond an uncomputed threshold
    let h1_tail = report
        .h1_holds_on
        .iter()
        .any(|i| i.lo == f64::NEG_INFINITY && i.hi > f64::NEG_INFINITY);
    let (tail_bounded, tail_sup) = negative_tail_bounded(prob);
    let mut hyp_tail = hyp;
    hyp_tail.push(Evidence::new(
        "H1 for u ≤ C or sup (u ∂g/∂u − g) < ∞ for u ≤ C",
        h1_tail || tail_bounded,
        format!("H1 on a left tail: {h1_tail}; sampled sup of u ∂g/∂u − g over u ∈ [−2^20, −1]: {tail_sup}"),
    ));
    let unique_negative = count == 1 && counts.negative == 1;
    entries.push(
        CertificateEntry::new(
            "uniqueness_large_p",
            hyp_tail,
            "a unique solution, negative, once p exceeds a threshold that is not computed",
        )
        .conclude(
            describe_counts(&counts),
            if unique_negative {
                Verdict::Consistent
            } else {
                Verdict::Inconclusive
            },
            all.clone(),
        ),
    );

    // multiplicity for small forcing, detected through λ* > 0 and T(0) < a1
    let a1 = prob.a1();
    let zero_defined = matches!(shoot_plain(prob, 0.0, &opts.shoot), Ok(s) if s.is_defined());
    let phi = phi_solution(prob, &opts.shoot.integrator).ok();
    let t0 = match t_value(prob, 0.0, &opts.shoot) {
        Ok(t) => Some(t),
        // λ0 = 0, T extends continuously by Φ'(1)/Φ(1)
        Err(ShootingError::AtPole { .. }) => phi.map(|p| p.dphi1 / p.phi1),
        Err(_) => None,
    };
    let mut hyp_multi = standing.clone();
    hyp_multi.push(Evidence::new(
        "H9",
        report.h9_holds,
        format!(
            "∂g/∂u(·, 0) ≤ −λ₁ = {}: {}",
            -lambda1,
            describe_witness(&report.h9_witness)
        ),
    ));
    hyp_multi.push(Evidence::new(
        "Φ'(1) < a1 Φ(1)",
        phi.is_some_and(|p| p.lemma_inequality_holds),
        match phi {
            Some(p) => format!("Φ(1) = {}, Φ'(1) = {}", p.phi1, p.dphi1),
            None => "Φ not computed".to_string(),
        },
    ));
    hyp_multi.push(Evidence::new(
        "small p: λ* > 0 and T(0) < a1",
        zero_defined && t0.is_some_and(|t| t < a1),
        format!(
            "shot at 0 defined: {zero_defined}; T(0) = {t0:?}; a1 = {a1}; ‖p‖ = {}",
            p_min.abs().max(p_max.abs())
        ),
    ));
    let three = counts.negative >= 1 && counts.sign_changing >= 1 && counts.positive >= 1;
    entries.push(
        CertificateEntry::new(
            "multiplicity",
            hyp_multi.clone(),
            "at least three solutions: one negative, one sign-changing, one positive",
        )
        .conclude(
            format!("{count} solution(s): {}", describe_counts(&counts)),
            if tangency {
                Verdict::Inconclusive
            } else if count >= 3 && three {
                Verdict::Consistent
            } else {
                Verdict::Inconsistent
            },
            all.clone(),
        ),
    );

    let mut hyp_exact = hyp_multi;
    hyp_exact.push(Evidence::new(
        "∂g/∂u > g/u for u ≠ 0",
        report.h2_without_p,
        describe_witness(&report.h2_without_p_witness),
    ));
    entries.push(
        CertificateEntry::new(
            "exact_three",
            hyp_exact,
            "exactly three solutions when ‖p‖ is below a threshold that is not computed",
        )
        .conclude(
            format!("{count} solution(s): {}", describe_counts(&counts)),
            if tangency || count != 3 || !three {
                Verdict::Inconclusive
            } else {
                Verdict::Consistent
            },
            all,
        ),
    );

    Certificate {
        problem: prob.label().to_string(),
        a0: prob.a0(),
        a1,
        lambda1,
        probe_grid: report.grid,
        solution_count: count,
        class_counts: counts,
        domain_cap_limited: set.domain.any_cap_limited(),
        tangency,
        max_c2_norm,
        p0: p0_value,
        entries,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    A1,
    /// Painlevé `A`; for custom problems the forcing is multiplied by the value.
    PAmplitude,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: f64,
    pub count: Option<usize>,
    pub n_neg: Option<usize>,
    pub n_sign: Option<usize>,
    pub n_pos: Option<usize>,
    pub lambda0: Option<f64>,
    pub a_min: Option<f64>,
    pub lambda1: Option<f64>,
    /// Largest value of a negative solution over `[0, 1]`.
    pub max_u_negative: Option<f64>,
    pub cap_limited: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transition {
    pub lo: f64,
    pub hi: f64,
    pub count_lo: usize,
    pub count_hi: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub family: ProblemFile,
    pub rows: Vec<SweepRow>,
    pub transitions: Vec<Transition>,
}

fn sweep_row(file: &ProblemFile, param: f64, opts: &SolveOptions) -> SweepRow {
    let mut row = SweepRow {
        param,
        count: None,
        n_neg: None,
        n_sign: None,
        n_pos: None,
        lambda0: None,
        a_min: None,
        lambda1: None,
        max_u_negative: None,
        cap_limited: false,
        error: None,
    };
    let result = (|| -> Result<(), SolverError> {
        let prob = file.to_spec()?;
        row.lambda1 = Some(first_eigenvalue(prob.a0(), prob.a1())?.lambda1);
        let set = find_solutions(&prob, opts)?;
        let counts = ClassCounts::of(&set.records);
        row.count = Some(set.records.len());
        row.n_neg = Some(counts.negative);
        row.n_sign = Some(counts.sign_changing);
        row.n_pos = Some(counts.positive);
        row.lambda0 = Some(set.domain.lambda0);
        row.cap_limited = set.domain.any_cap_limited();
        row.max_u_negative = set
            .records
            .iter()
            .filter(|r| r.sign_class == SignClass::Negative)
            .map(|r| r.max_u)
            .reduce(f64::max);
        row.a_min = a_min(&prob, &set.domain, &opts.shoot).ok().map(|(_, a)| a);
        Ok(())
    })();
    if let Err(e) = result {
        row.error = Some(e.to_string());
    }
    row
}

/// Solves the family at each parameter value. Rows run in parallel and come
/// back in parameter order; per-row failures are recorded in the row.
pub fn sweep(
    family: &ProblemFile,
    axis: SweepAxis,
    values: &[f64],
    opts: &SolveOptions,
) -> Result<SweepTable, SolverError> {
    if values.len() < 2 {
        return Err(SolverError::InvalidSweep(format!(
            "need at least two values, got {}",
            values.len()
        )));
    }
    if let Some(w) = values.windows(2).find(|w| !(w[0] < w[1])) {
        return Err(SolverError::InvalidSweep(format!(
            "values must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    let rows: Vec<SweepRow> = values
        .par_iter()
        .map(|&v| {
            let file = match axis {
                SweepAxis::A1 => family.with_a1(v),
                SweepAxis::PAmplitude => family.with_p_amplitude(v),
            };
            sweep_row(&file, v, opts)
        })
        .collect();
    let transitions = rows
        .windows(2)
        .filter_map(|w| match (w[0].count, w[1].count) {
            (Some(a), Some(b)) if a != b => Some(Transition {
                lo: w[0].param,
                hi: w[1].param,
                count_lo: a,
                count_hi: b,
            }),
            _ => None,
        })
        .collect();
    Ok(SweepTable {
        axis,
        family: family.clone(),
        rows,
        transitions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{integrate, IntegratorConfig, SystemState};
    use crate::problem::{painleve_problem, probe_hypotheses, PainleveParams};

    fn pain(a: f64, a0: f64, a1: f64) -> ProblemSpec {
        painleve_problem(PainleveParams { k: 1.0, a }, a0, a1).unwrap()
    }

    fn profile(u0: f64, du0: f64) -> Trajectory<2> {
        integrate(
            |_, y: &[f64; 2]| [y[1], 0.0],
            SystemState::new(0.0, [u0, du0]),
            &IntegratorConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn classify_linear_profiles() {
        assert_eq!(classify(&profile(-1.0, -1.0)).unwrap(), (SignClass::Negative, vec![]));
        let (class, zeros) = classify(&profile(-0.3, 1.0)).unwrap();
        assert_eq!(class, SignClass::SignChanging);
        assert_eq!(zeros.len(), 1);
        assert!((zeros[0] - 0.3).abs() <= 1e-10);
        assert_eq!(classify(&profile(0.5, 0.1)).unwrap().0, SignClass::Positive);
    }

    #[test]
    fn classify_endpoint_zero() {
        let (class, zeros) = classify(&profile(-1.0, 1.0)).unwrap();
        assert_eq!(class, SignClass::SignChanging);
        assert_eq!(zeros, vec![1.0]);
    }

    #[test]
    fn classify_flags_touching_profile() {
        // u = 1e-6 (x - 0.5)^2 dips within the zero tolerance near x = 0.5 without crossing
        let traj = integrate(
            |_, y: &[f64; 2]| [y[1], 2e-6],
            SystemState::new(0.0, [0.25e-6, -1e-6]),
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert!(matches!(classify(&traj), Err(SolverError::AmbiguousSign { .. })));
    }

    #[test]
    fn painleve_uniqueness_instance() {
        let set = find_solutions(&pain(1.0, 1.0, 1.0), &SolveOptions::default()).unwrap();
        assert_eq!(set.records.len(), 1);
        let r = &set.records[0];
        assert_eq!(r.sign_class, SignClass::Negative);
        assert!(r.bc_residuals[0] <= 1e-6 && r.bc_residuals[1] <= 1e-6 && r.ode_residual <= 1e-6);
    }

    /// Sign of `y'(1) − a1 y(1)` for `y'' = ∂g/∂u(x, 0) y + 1`, `y(0) = y'(0) = 0`:
    /// to first order in small constant p the middle root is `λ ≈ c p` with
    /// `c` of that sign, since `Φ'(1) < a1 Φ(1)`.
    fn middle_root_sign(prob: &ProblemSpec) -> f64 {
        let traj = integrate(
            |x, y: &[f64; 2]| [y[1], prob.g_u(x, 0.0) * y[0] + 1.0],
            SystemState::new(0.0, [0.0, 0.0]),
            &IntegratorConfig::default(),
        )
        .unwrap();
        let [y1, dy1] = traj.last().y;
        (dy1 - prob.a1() * y1).signum()
    }

    #[test]
    fn painleve_small_forcing_a1_2() {
        let prob = pain(0.01, 1.0, 2.0);
        assert_eq!(middle_root_sign(&prob), 1.0);
        let set = find_solutions(&prob, &SolveOptions::default()).unwrap();
        let classes: Vec<SignClass> = set.records.iter().map(|r| r.sign_class).collect();
        assert_eq!(
            classes,
            vec![SignClass::Negative, SignClass::Positive, SignClass::Positive]
        );
        assert!(set.records[0].lambda < set.domain.lambda0);
        assert!(set.records[1].lambda > 0.0 && set.records[1].lambda < 0.01);
        assert!(set.warnings.is_empty());
    }

    #[test]
    fn painleve_small_forcing_a1_5() {
        let prob = pain(0.01, 1.0, 5.0);
        assert_eq!(middle_root_sign(&prob), -1.0);
        let set = find_solutions(&prob, &SolveOptions::default()).unwrap();
        let classes: Vec<SignClass> = set.records.iter().map(|r| r.sign_class).collect();
        assert_eq!(
            classes,
            vec![SignClass::Negative, SignClass::SignChanging, SignClass::Positive]
        );
        let middle = &set.records[1];
        assert!(middle.lambda > set.domain.lambda0 && middle.lambda < 0.0);
        assert_eq!(middle.zero_locations.len(), 1);
        let z = middle.zero_locations[0];
        assert!(z > 0.0 && z < 1.0);
    }

    #[test]
    fn large_forcing_gives_negative_solutions() {
        let set = find_solutions(&pain(50.0, 1.0, 2.0), &SolveOptions::default()).unwrap();
        assert!(!set.records.is_empty());
        assert!(set.records.iter().all(|r| r.sign_class == SignClass::Negative));
    }

    #[test]
    fn verification_rejects_perturbed_and_zero_tolerance() {
        let prob = pain(1.0, 1.0, 1.0);
        let opts = SolveOptions::default();
        let set = find_solutions(&prob, &opts).unwrap();
        let good = &set.records[0];
        assert!(verify_solution(&prob, good, 1e-6, &opts).is_ok());
        let mut bad = good.clone();
        bad.lambda += 1e-2;
        assert!(matches!(
            verify_solution(&prob, &bad, 1e-6, &opts),
            Err(SolverError::VerificationFailed {
                quantity: Residual::BcRight,
                ..
            })
        ));
        assert!(matches!(
            verify_solution(&prob, good, 0.0, &opts),
            Err(SolverError::VerificationFailed { .. })
        ));
    }

    fn certify(prob: &ProblemSpec, set: &SolutionSet) -> Certificate {
        let eigen = first_eigenvalue(prob.a0(), prob.a1()).unwrap();
        let report = probe_hypotheses(prob, ProbeGrid::default(), eigen.lambda1);
        certificate(prob, set, &eigen, &report, &SolveOptions::default())
    }

    #[test]
    fn certificate_uniqueness_consistent() {
        let prob = pain(1.0, 1.0, 1.0);
        let set = find_solutions(&prob, &SolveOptions::default()).unwrap();
        let cert = certify(&prob, &set);
        let h1 = cert.entry("uniqueness_h1").unwrap();
        assert!(h1.applicable && h1.consistent);
        assert_eq!(h1.predicted, "at most one solution with range in [-inf, inf]");
        assert!(cert.all_consistent());
    }

    #[test]
    fn certificate_multiplicity_consistent() {
        let prob = pain(0.01, 1.0, 5.0);
        let set = find_solutions(&prob, &SolveOptions::default()).unwrap();
        let cert = certify(&prob, &set);
        let multi = cert.entry("multiplicity").unwrap();
        assert!(multi.applicable, "{multi:?}");
        assert_eq!(multi.verdict, Verdict::Consistent);
        assert_eq!(cert.entry("exact_three").unwrap().verdict, Verdict::Consistent);
        assert!(cert.all_consistent());
    }

    #[test]
    fn certificate_abstains_without_small_forcing_evidence() {
        let prob = pain(0.01, 1.0, 2.0);
        let set = find_solutions(&prob, &SolveOptions::default()).unwrap();
        let cert = certify(&prob, &set);
        let multi = cert.entry("multiplicity").unwrap();
        assert!(!multi.applicable);
        assert_eq!(multi.verdict, Verdict::NotApplicable);
        let h9 = multi.hypotheses.iter().find(|h| h.name == "H9").unwrap();
        assert!(h9.holds);
        assert!(cert.all_consistent());
    }

    #[test]
    fn certificate_flags_injected_contradiction() {
        let prob = pain(1.0, 1.0, 1.0);
        let mut set = find_solutions(&prob, &SolveOptions::default()).unwrap();
        let mut fake = set.records[0].clone();
        fake.lambda -= 0.5;
        fake.max_u -= 0.5;
        fake.min_u -= 0.5;
        set.records.push(fake);
        let cert = certify(&prob, &set);
        let h1 = cert.entry("uniqueness_h1").unwrap();
        assert!(!h1.consistent);
        assert_eq!(h1.witnesses.len(), 2);
        assert!(!cert.all_consistent());
    }

    #[test]
    fn sweep_rejects_bad_values() {
        let file = ProblemFile::Painleve {
            k: 1.0,
            a: 0.5,
            a0: 1.0,
            a1: 1.0,
        };
        let opts = SolveOptions::default();
        assert!(matches!(
            sweep(&file, SweepAxis::A1, &[1.0], &opts),
            Err(SolverError::InvalidSweep(_))
        ));
        assert!(matches!(
            sweep(&file, SweepAxis::A1, &[2.0, 1.0], &opts),
            Err(SolverError::InvalidSweep(_))
        ));
    }

    #[test]
    fn sweep_records_row_errors() {
        let file = ProblemFile::Painleve {
            k: 1.0,
            a: 0.5,
            a0: 1.0,
            a1: 1.0,
        };
        let table = sweep(&file, SweepAxis::A1, &[-1.0, 1.0], &SolveOptions::default()).unwrap();
        assert!(table.rows[0].error.is_some());
        assert_eq!(table.rows[1].count, Some(1));
        assert!(table.transitions.is_empty());
    }
}
