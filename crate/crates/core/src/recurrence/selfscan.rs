use num_complex::Complex64;
use rayon::prelude::*;

use super::{BestHit, Diagnostics, ExperimentSpec, Mode, ScanMode, ScanResult, Thresholds};
use crate::error::{Error, Result};
use crate::zetaeval::nufft::Plan;
use crate::zetaeval::progression::zeta_progression;
use crate::zetaeval::zeta_many;

/// Samples per transform chunk.
const CHUNK: usize = 1 << 14;
/// Samples per trace window.
const TRACE_WINDOW: usize = 64;

fn shifted(grid: &[Complex64], c: f64, tau: f64) -> Vec<Complex64> {
    grid.iter().map(|s| Complex64::new(s.re, s.im + c * tau)).collect()
}

/// E(tau_j) = max over the grid of |zeta(s + i tau_j) - zeta(s + i d tau_j)| for
/// tau_j = j step, j = 1..=samples, together with a bound on the evaluation error.
pub fn self_error_profile(grid: &[Complex64], d: f64, samples: u64, step: f64, abs_err: f64) -> Result<(Vec<f64>, f64)> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty K-grid".into()));
    }
    let samples = samples as usize;
    let chunks = samples.div_ceil(CHUNK);
    let full = Plan::new(CHUNK.min(samples.max(1)));
    let tail_len = samples - (chunks.saturating_sub(1)) * CHUNK;
    let tail = if tail_len != full.len() { Some(Plan::new(tail_len)) } else { None };
    let parts: Vec<Result<(Vec<f64>, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let plan = if c + 1 == chunks { tail.as_ref().unwrap_or(&full) } else { &full };
            let tau0 = (c * CHUNK + 1) as f64 * step;
            let v1 = zeta_progression(plan, grid, 1.0, tau0, step, 0.5 * abs_err)?;
            let vd = zeta_progression(plan, grid, d, tau0, step, 0.5 * abs_err)?;
            let e = (0..plan.len())
                .map(|j| v1.row(j).iter().zip(vd.row(j)).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max))
                .collect();
            Ok((e, v1.error_bound + vd.error_bound))
        })
        .collect();
    let mut out = Vec::with_capacity(samples);
    let mut bound = 0.0f64;
    for p in parts {
        let (e, b) = p?;
        out.extend(e);
        bound = bound.max(b);
    }
    Ok((out, bound))
}

/// Fresh sup of |zeta(s + i tau) - zeta(s + i d tau)| over the grid, and the
/// largest combined error bound.
pub fn certify_self(tau: f64, grid: &[Complex64], d: f64, abs_err: f64) -> Result<(f64, f64)> {
    let mut pts = shifted(grid, 1.0, tau);
    pts.extend(shifted(grid, d, tau));
    let z = zeta_many(&pts, abs_err)?;
    let n = grid.len();
    let mut err = 0.0f64;
    let mut bound = 0.0f64;
    for i in 0..n {
        err = err.max((z[i].value - z[n + i].value).norm());
        bound = bound.max(z[i].error_bound + z[n + i].error_bound);
    }
    Ok((err, bound))
}

/// max over the grid of |zeta(s - i tau) - conj zeta(conj(s) + i tau)|.
pub fn conjugation_residual(tau: f64, grid: &[Complex64], abs_err: f64) -> Result<f64> {
    let mut pts = shifted(grid, -1.0, tau);
    pts.extend(grid.iter().map(|s| s.conj() + Complex64::new(0.0, tau)));
    let z = zeta_many(&pts, abs_err)?;
    let n = grid.len();
    Ok((0..n).map(|i| (z[i].value - z[n + i].value.conj()).norm()).fold(0.0, f64::max))
}

fn reduction_residual(tau: f64, grid: &[Complex64], abs_err: f64) -> Result<f64> {
    let mut pts = shifted(grid, 1.0, tau);
    pts.extend(shifted(grid, -1.0, tau));
    pts.extend(grid.iter().map(|s| s.conj() + Complex64::new(0.0, tau)));
    let z = zeta_many(&pts, abs_err)?;
    let n = grid.len();
    let mut direct = 0.0f64;
    let mut reduced = 0.0f64;
    for i in 0..n {
        direct = direct.max((z[i].value - z[n + i].value).norm());
        reduced = reduced.max((z[i].value - z[2 * n + i].value.conj()).norm());
    }
    Ok((direct - reduced).abs())
}

/// Scan of tau in (0, T] for zeta(s + i tau) ≈ zeta(s + i d tau) on K.
pub fn self_approx_scan(spec: &ExperimentSpec) -> Result<ScanResult> {
    spec.validate()?;
    let d = match spec.mode {
        Mode::SelfApprox { d } => d,
        Mode::Joint { .. } => return Err(Error::InvalidParameter("self_approx_scan needs self mode".into())),
    };
    let samples = spec.samples();
    let scan_grid = spec.domain.k_grid(spec.scan_refine);
    let cert_grid = spec.domain.k_grid(spec.cert_refine);
    let thresholds = Thresholds {
        scan_grid_points: scan_grid.len(),
        cert_grid_points: cert_grid.len(),
        target_abs_err: spec.target_abs_err,
        scan_abs_err: spec.scan_abs_err,
        ..Thresholds::default()
    };
    let mut result = ScanResult {
        mode: ScanMode::SelfApprox,
        a: None,
        b: None,
        d: Some(d),
        epsilon: spec.epsilon,
        t_max: spec.t_max,
        step: spec.tau_step,
        samples,
        hits: 0,
        density: 0.0,
        best: Vec::new(),
        thresholds,
        trace: Vec::new(),
        diagnostics: Diagnostics::default(),
    };
    if d == 1.0 {
        result.hits = samples;
        result.density = 1.0;
        result.best = vec![BestHit { tau: spec.tau_step, error: 0.0, error_bound: 0.0, source: "identity".into() }];
        return Ok(result);
    }

    let (profile, _) = self_error_profile(&scan_grid, d, samples, spec.tau_step, spec.scan_abs_err)?;
    result.hits = profile.iter().filter(|&&e| e < spec.epsilon).count() as u64;
    result.density = result.hits as f64 / samples as f64;

    let mut windows: Vec<[f64; 2]> = profile
        .chunks(TRACE_WINDOW)
        .enumerate()
        .map(|(w, chunk)| {
            let (j, e) = chunk
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (j, &e)| if e < acc.1 { (j, e) } else { acc });
            [((w * TRACE_WINDOW + j + 1) as f64) * spec.tau_step, e]
        })
        .collect();
    result.trace = windows.clone();
    windows.sort_by(|x, y| x[1].total_cmp(&y[1]).then(x[0].total_cmp(&y[0])));
    let picks: Vec<f64> =
        windows.iter().filter(|w| w[1] < spec.epsilon).take(spec.best_count).map(|w| w[0]).collect();
    let certified: Vec<Result<(f64, (f64, f64))>> = picks
        .par_iter()
        .map(|&tau| certify_self(tau, &cert_grid, d, spec.target_abs_err).map(|r| (tau, r)))
        .collect();
    for c in certified {
        let (tau, (error, bound)) = c?;
        if error + bound < spec.epsilon {
            result.best.push(BestHit { tau, error, error_bound: bound, source: "scan".into() });
        }
    }
    result.best.sort_by(|x, y| x.error.total_cmp(&y.error).then(x.tau.total_cmp(&y.tau)));

    if d == -1.0 && spec.domain.k_is_symmetric() {
        let probes: Vec<f64> = if result.best.is_empty() {
            (1..=5).map(|k| k as f64 * spec.t_max / 5.0).collect()
        } else {
            result.best.iter().map(|h| h.tau).collect()
        };
        let mut conj = 0.0f64;
        let mut red = 0.0f64;
        for &tau in &probes {
            conj = conj.max(conjugation_residual(tau, &cert_grid, spec.target_abs_err)?);
            red = red.max(reduction_residual(tau, &cert_grid, spec.target_abs_err)?);
        }
        result.diagnostics.conjugation_residual = Some(conj);
        result.diagnostics.reduction_residual = Some(red);
    }
    Ok(result)
}
