use num_complex::Complex64;
use rayon::prelude::*;

use super::{choose_truncation, BestHit, Diagnostics, ExperimentSpec, Mode, ScanMode, ScanResult, Thresholds, Truncation};
use crate::complexfn::{fit_polynomial, Domain, TargetPair};
use crate::dioph::{find_tau_lattice, scan_tau, PhaseTarget, Source, TauCandidate, MAX_LATTICE_DIM};
use crate::error::{Error, Result};
use crate::eulerfit::{greedy_fit, FitState};
use crate::zetaeval::zeta_many;

/// Joint pipeline output: the scan summary plus the intermediate artifacts.
#[derive(Debug, Clone)]
pub struct JointOutcome {
    pub result: ScanResult,
    pub fit: FitState,
    pub phase_target: PhaseTarget,
    pub truncation: Option<Truncation>,
}

/// Certification data for one candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointCertificate {
    /// Grid sup of max_c |zeta(s + i c tau) - f_c(s)|; only a lower bound
    /// when `screened_out`.
    pub error: f64,
    pub error_bound: f64,
    pub screened_out: bool,
}

impl JointCertificate {
    pub fn passes(&self, epsilon: f64) -> bool {
        !self.screened_out && self.error + self.error_bound < epsilon
    }
}

/// Evaluates max over c in {a, b} and s in the grid of |zeta(s + i c tau) - f_c(s)|.
/// The point `centre` is tried first and the rest skipped if it already fails.
#[allow(clippy::too_many_arguments)]
pub fn certify_joint(
    tau: f64,
    grid: &[Complex64],
    centre: usize,
    a: i64,
    b: i64,
    f_a: &[Complex64],
    f_b: &[Complex64],
    epsilon: f64,
    abs_err: f64,
) -> Result<JointCertificate> {
    let shift = |s: Complex64, c: i64| Complex64::new(s.re, s.im + c as f64 * tau);
    let s0 = grid[centre];
    let z0 = zeta_many(&[shift(s0, a), shift(s0, b)], abs_err)?;
    let e0 = (z0[0].value - f_a[centre]).norm().max((z0[1].value - f_b[centre]).norm());
    let b0 = z0[0].error_bound.max(z0[1].error_bound);
    if e0 + b0 >= epsilon {
        return Ok(JointCertificate { error: e0, error_bound: b0, screened_out: true });
    }
    let mut pts: Vec<Complex64> = grid.iter().map(|&s| shift(s, a)).collect();
    pts.extend(grid.iter().map(|&s| shift(s, b)));
    let z = zeta_many(&pts, abs_err)?;
    let n = grid.len();
    let mut error = 0.0f64;
    let mut bound = 0.0f64;
    for i in 0..n {
        error = error.max((z[i].value - f_a[i]).norm()).max((z[n + i].value - f_b[i]).norm());
        bound = bound.max(z[i].error_bound).max(z[n + i].error_bound);
    }
    Ok(JointCertificate { error, error_bound: bound, screened_out: false })
}

fn nearest(grid: &[Complex64], c: Complex64) -> usize {
    let mut best = 0;
    for (i, s) in grid.iter().enumerate() {
        if (s - c).norm() < (grid[best] - c).norm() {
            best = i;
        }
    }
    best
}

fn poly_sup(domain: &Domain, samples: &[Complex64], degree: usize) -> Option<f64> {
    (0..=degree)
        .rev()
        .find_map(|deg| fit_polynomial(&domain.grid_nodes, &domain.grid_weights, samples, deg).ok())
        .map(|f| f.sup_residual)
}

/// Fit, phase targeting, candidate search and certification for
/// max_c max_K |zeta(s + i c tau) - f_c(s)| < epsilon, c in {a, b}.
pub fn joint_search(spec: &ExperimentSpec) -> Result<JointOutcome> {
    spec.validate()?;
    let (a, b, f_a, f_b) = match &spec.mode {
        Mode::Joint { a, b, f_a, f_b } => (*a, *b, f_a.clone(), f_b.clone()),
        Mode::SelfApprox { .. } => return Err(Error::InvalidParameter("joint_search needs joint mode".into())),
    };
    if spec.hard_primes == 0 {
        return Err(Error::InvalidParameter("hard_primes must be >= 1".into()));
    }
    let domain = &spec.domain;
    let targets = TargetPair::new(domain, a, b, f_a.clone(), f_b.clone())?;
    let poly = match (
        poly_sup(domain, &targets.samples_a, spec.poly_degree),
        poly_sup(domain, &targets.samples_b, spec.poly_degree),
    ) {
        (Some(x), Some(y)) => Some([x, y]),
        _ => None,
    };
    let fit = greedy_fit(&targets, domain, &spec.fit)?;

    let truncation = match spec.delta {
        Some(_) => None,
        None => Some(choose_truncation(domain, &targets, spec.epsilon, spec.seed)?),
    };
    let delta = spec.delta.unwrap_or_else(|| truncation.as_ref().map(|t| t.delta).unwrap_or(0.0));

    // zeta(s + i c tau) follows the fitted product when tau log p / 2 pi ≡ -theta_p
    let count = spec.hard_primes.min(fit.phases.len());
    let l = fit.phases.denominator();
    let hard: Vec<u64> = fit.phases.primes()[..count].to_vec();
    let phases: Vec<f64> =
        fit.phases.numerators()[..count].iter().map(|&k| ((l - k) % l) as f64 / l as f64).collect();
    let target = PhaseTarget::new(hard.clone(), phases.clone(), delta)?;

    let phase_scan = scan_tau(&target, spec.t_max, spec.tau_step)?;
    let lattice: Vec<TauCandidate> = if spec.use_lattice && count <= MAX_LATTICE_DIM {
        find_tau_lattice(&target, spec.t_max)?
    } else {
        Vec::new()
    };

    let grid = domain.k_grid(spec.cert_refine);
    let centre = nearest(&grid, domain.k_centroid());
    let fa: Vec<Complex64> = grid.iter().map(|&s| f_a.eval(s)).collect();
    let fb: Vec<Complex64> = grid.iter().map(|&s| f_b.eval(s)).collect();
    let certify = |tau: f64| certify_joint(tau, &grid, centre, a, b, &fa, &fb, spec.epsilon, spec.target_abs_err);

    let mut scan_taus: Vec<f64> = phase_scan.candidates.iter().map(|c| c.tau).collect();
    let mut samples = phase_scan.samples;
    let mut t_eff = spec.t_max;
    let capped = scan_taus.len() > spec.max_certify;
    if capped {
        scan_taus.truncate(spec.max_certify);
        t_eff = *scan_taus.last().unwrap_or(&spec.tau_step);
        samples = (t_eff / spec.tau_step).round() as u64;
    }
    let scan_certs: Vec<Result<JointCertificate>> = scan_taus.par_iter().map(|&t| certify(t)).collect();
    let scan_certs: Vec<JointCertificate> = scan_certs.into_iter().collect::<Result<_>>()?;
    let lattice_certs: Vec<JointCertificate> =
        lattice.par_iter().map(|c| certify(c.tau)).collect::<Vec<_>>().into_iter().collect::<Result<_>>()?;

    let mut best: Vec<BestHit> = Vec::new();
    let mut hits = 0u64;
    for (tau, c) in scan_taus.iter().zip(&scan_certs) {
        if c.passes(spec.epsilon) {
            hits += 1;
            best.push(BestHit { tau: *tau, error: c.error, error_bound: c.error_bound, source: Source::Scan.as_str().into() });
        }
    }
    let mut lattice_hits = 0u64;
    for (cand, c) in lattice.iter().zip(&lattice_certs) {
        if c.passes(spec.epsilon) {
            lattice_hits += 1;
            best.push(BestHit {
                tau: cand.tau,
                error: c.error,
                error_bound: c.error_bound,
                source: Source::Lattice.as_str().into(),
            });
        }
    }
    best.sort_by(|x, y| x.error.total_cmp(&y.error).then(x.tau.total_cmp(&y.tau)));
    best.truncate(spec.best_count);

    let result = ScanResult {
        mode: ScanMode::Joint,
        a: Some(a),
        b: Some(b),
        d: None,
        epsilon: spec.epsilon,
        t_max: t_eff,
        step: spec.tau_step,
        samples,
        hits,
        density: hits as f64 / samples as f64,
        best,
        thresholds: Thresholds {
            delta: Some(delta),
            hard_primes: hard,
            target_phases: phases,
            scan_grid_points: grid.len(),
            cert_grid_points: grid.len(),
            target_abs_err: spec.target_abs_err,
            scan_abs_err: spec.target_abs_err,
        },
        trace: scan_taus.iter().zip(&scan_certs).map(|(t, c)| [*t, c.error]).collect(),
        diagnostics: Diagnostics {
            candidates: phase_scan.hits,
            certified_evaluations: scan_certs.iter().filter(|c| !c.screened_out).count() as u64,
            lattice_candidates: lattice.len() as u64,
            lattice_hits,
            effective_t: capped.then_some(t_eff),
            fit_sup: Some(fit.sup_residual),
            fit_success: Some(fit.success),
            fit_primes: Some(fit.phases.len()),
            poly_sup: poly,
            truncation: truncation.clone(),
            ..Diagnostics::default()
        },
    };
    Ok(JointOutcome { result, fit, phase_target: target, truncation })
}
