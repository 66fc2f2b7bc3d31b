//! End-to-end pipelines: joint approximation of two targets by zeta(s + i a tau)
//! and zeta(s + i b tau), self-approximation zeta(s + i tau) ≈ zeta(s + i d tau),
//! truncation budgets and density reports.

mod joint;
mod selfscan;

pub use joint::{certify_joint, joint_search, JointOutcome};
pub use selfscan::{certify_self, conjugation_residual, self_approx_scan, self_error_profile};

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::complexfn::{validate_scales, Domain, TargetFn, TargetPair};
use crate::error::{Error, Result};
use crate::eulerfit::FitConfig;
use crate::primes::primes_up_to;
use crate::zetaeval::{tail_bound, zeta_many, MAX_HEIGHT};

/// Largest truncation height handled.
pub const MAX_TRUNCATION: f64 = 1e12;
/// Prime sums are exact up to here and bounded by an integral beyond.
const SIEVE_LIMIT: f64 = 1e8;
/// Largest z tried by the mean-square probe.
pub const MAX_PROBE_HEIGHT: f64 = 1e7;

#[derive(Debug, Clone)]
pub enum Mode {
    Joint { a: i64, b: i64, f_a: TargetFn, f_b: TargetFn },
    SelfApprox { d: f64 },
}

/// Everything one experiment needs.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub domain: Domain,
    pub mode: Mode,
    pub epsilon: f64,
    /// Scan window (0, T].
    pub t_max: f64,
    pub tau_step: f64,
    pub fit: FitConfig,
    /// Phase tolerance; derived from the continuity budget when absent.
    pub delta: Option<f64>,
    /// Number of fitted primes whose phases are imposed.
    pub hard_primes: usize,
    /// Degree of the polynomial surrogate fitted to each target.
    pub poly_degree: usize,
    /// Refinement of the K-grid used for certification.
    pub cert_refine: usize,
    /// Refinement of the K-grid used inside self-approximation scans.
    pub scan_refine: usize,
    /// Cap on full certifications in joint mode.
    pub max_certify: usize,
    /// Length of the best list.
    pub best_count: usize,
    /// Accuracy of certification zeta values.
    pub target_abs_err: f64,
    /// Accuracy of scan zeta values.
    pub scan_abs_err: f64,
    pub use_lattice: bool,
    pub seed: u64,
}

impl ExperimentSpec {
    /// Defaults for everything except the domain, mode and epsilon.
    pub fn new(domain: Domain, mode: Mode, epsilon: f64) -> Self {
        ExperimentSpec {
            domain,
            mode,
            epsilon,
            t_max: 1e4,
            tau_step: 0.05,
            fit: FitConfig { epsilon_fit: epsilon / 2.0, ..FitConfig::default() },
            delta: None,
            hard_primes: 3,
            poly_degree: 8,
            cert_refine: 3,
            scan_refine: 1,
            max_certify: 20_000,
            best_count: 20,
            target_abs_err: 1e-10,
            scan_abs_err: 1e-8,
            use_lattice: true,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!("epsilon = {} must be positive", self.epsilon)));
        }
        if !(self.tau_step > 0.0) || !(self.t_max >= self.tau_step) || !self.t_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "need 0 < step <= T, got step = {}, T = {}",
                self.tau_step, self.t_max
            )));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 0.5) {
                return Err(Error::InvalidParameter(format!("delta = {d} must lie in (0, 1/2)")));
            }
        }
        if self.cert_refine == 0 || self.scan_refine == 0 || self.best_count == 0 {
            return Err(Error::InvalidParameter("refinements and best_count must be >= 1".into()));
        }
        if !(self.target_abs_err >= crate::zetaeval::MIN_TARGET) || !(self.scan_abs_err >= crate::zetaeval::MIN_TARGET) {
            return Err(Error::InvalidParameter("zeta accuracy targets below 1e-13".into()));
        }
        let height = self.domain.t_lo.abs().max(self.domain.t_hi.abs());
        match &self.mode {
            Mode::Joint { a, b, .. } => {
                validate_scales(*a, *b)?;
                self.fit.validate()?;
                let c = a.unsigned_abs().max(b.unsigned_abs()) as f64;
                if c * self.t_max + height > MAX_HEIGHT {
                    return Err(Error::OutOfRange(format!("max(|a|,|b|) T exceeds {MAX_HEIGHT:e}")));
                }
            }
            Mode::SelfApprox { d } => {
                if *d == 0.0 || !d.is_finite() {
                    return Err(Error::InvalidParameter(format!("d = {d} must be a nonzero real")));
                }
                if d.abs().max(1.0) * self.t_max + height > MAX_HEIGHT {
                    return Err(Error::OutOfRange(format!("max(1,|d|) T exceeds {MAX_HEIGHT:e}")));
                }
            }
        }
        Ok(())
    }

    /// Scan samples tau_j = j step, j = 1..=samples.
    pub fn samples(&self) -> u64 {
        (self.t_max / self.tau_step * (1.0 + 1e-12)).floor() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScanMode {
    #[serde(rename = "joint")]
    Joint,
    #[serde(rename = "self")]
    SelfApprox,
}

impl ScanMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ScanMode::Joint => "joint",
            ScanMode::SelfApprox => "self",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "joint" => Ok(ScanMode::Joint),
            "self" => Ok(ScanMode::SelfApprox),
            _ => Err(Error::InvalidParameter(format!("unknown mode {s:?}"))),
        }
    }
}

/// A certified shift with its sup error over the certification grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestHit {
    pub tau: f64,
    pub error: f64,
    /// Sum of the zeta error bounds at the maximizing point.
    pub error_bound: f64,
    pub source: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub delta: Option<f64>,
    pub hard_primes: Vec<u64>,
    /// Target values of tau log p / 2 pi mod 1 for the hard primes.
    pub target_phases: Vec<f64>,
    pub scan_grid_points: usize,
    pub cert_grid_points: usize,
    pub target_abs_err: f64,
    pub scan_abs_err: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Phase-filter candidates on the scan grid.
    pub candidates: u64,
    /// Candidates fully certified (after centre screening).
    pub certified_evaluations: u64,
    pub lattice_candidates: u64,
    pub lattice_hits: u64,
    /// End of the window actually processed when the certification cap binds.
    pub effective_t: Option<f64>,
    pub fit_sup: Option<f64>,
    pub fit_success: Option<bool>,
    pub fit_primes: Option<usize>,
    pub poly_sup: Option<[f64; 2]>,
    pub truncation: Option<Truncation>,
    /// max |zeta(s - i tau) - conj zeta(conj(s) + i tau)| for d = -1 on symmetric K.
    pub conjugation_residual: Option<f64>,
    /// max |E_direct - E_reduced| for d = -1.
    pub reduction_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub mode: ScanMode,
    pub a: Option<i64>,
    pub b: Option<i64>,
    pub d: Option<f64>,
    pub epsilon: f64,
    #[serde(rename = "T")]
    pub t_max: f64,
    pub step: f64,
    pub samples: u64,
    pub hits: u64,
    pub density: f64,
    /// Sorted by error; errors are grid maxima on the certification grid.
    pub best: Vec<BestHit>,
    pub thresholds: Thresholds,
    /// (tau, E(tau)) series for plotting.
    pub trace: Vec<[f64; 2]>,
    pub diagnostics: Diagnostics,
}

impl ScanResult {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("bad scan result: {e}")))
    }
}

/// Truncation parameters: every prime up to `y` is fitted, `z` is where the
/// truncated product is close to zeta in mean square, `delta` the phase
/// tolerance from the Lipschitz budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub y: f64,
    pub z: f64,
    pub delta: f64,
    pub c_f: f64,
    /// Phase sensitivity L of the log product.
    pub lipschitz: f64,
    pub probe_mean_square: f64,
    /// Whether the probe reached (epsilon / 8)^2 before the height cap.
    pub carlson_ok: bool,
}

/// Smallest integer y >= 2 with tail_bound(y, sigma) <= (epsilon / (8 c_f))^2.
pub fn truncation_height(sigma: f64, epsilon: f64, c_f: f64) -> Result<f64> {
    if !(epsilon > 0.0) || !(c_f > 0.0) {
        return Err(Error::InvalidParameter("epsilon and C_f must be positive".into()));
    }
    tail_bound(2.0, sigma)?;
    let goal = (epsilon / (8.0 * c_f)).powi(2);
    let e = 2.0 * sigma - 1.0;
    let mut y = ((goal * e).ln() / -e).exp().ceil().max(2.0);
    if !y.is_finite() || y > MAX_TRUNCATION {
        return Err(Error::TruncationTooLarge { required: y, cap: MAX_TRUNCATION });
    }
    // guard the closed form against rounding at the boundary
    while y > 2.0 && tail_bound(y - 1.0, sigma)? <= goal {
        y -= 1.0;
    }
    while tail_bound(y, sigma)? > goal {
        y += 1.0;
    }
    Ok(y)
}

/// Worst-case phase sensitivity sum_{p <= y} 2 pi max(|a|,|b|) p^-sigma / (1 - p^-sigma)^2.
pub fn phase_lipschitz(y: f64, sigma: f64, a: i64, b: i64) -> f64 {
    let c = a.unsigned_abs().max(b.unsigned_abs()) as f64;
    let exact: f64 = primes_up_to(y.min(SIEVE_LIMIT) as u64)
        .into_iter()
        .map(|p| {
            let w = (p as f64).powf(-sigma);
            w / ((1.0 - w) * (1.0 - w))
        })
        .sum();
    // pi(x) < 1.26 x / ln x bounds the prime density by 1.26 / ln x
    let tail = if y > SIEVE_LIMIT {
        let w = SIEVE_LIMIT.powf(-sigma);
        1.26 / SIEVE_LIMIT.ln() * (y.powf(1.0 - sigma) - SIEVE_LIMIT.powf(1.0 - sigma)) / (1.0 - sigma)
            / ((1.0 - w) * (1.0 - w))
    } else {
        0.0
    };
    std::f64::consts::TAU * c * (exact + tail)
}

/// Truncation budget for the joint pipeline.
pub fn choose_truncation(domain: &Domain, targets: &TargetPair, epsilon: f64, seed: u64) -> Result<Truncation> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must be positive")));
    }
    let sigma = domain.sigma_lo;
    let c_f = targets.max_abs_on(&domain.k_grid(1)) + epsilon;
    let y = truncation_height(sigma, epsilon, c_f)?;
    let lipschitz = phase_lipschitz(y, sigma, targets.a, targets.b);
    let delta = (epsilon / (4.0 * lipschitz)).min(0.49);

    let goal = (epsilon / 8.0).powi(2);
    let (z, probe, ok) = carlson_probe(domain, y, goal, seed)?;
    Ok(Truncation { y, z, delta, c_f, lipschitz, probe_mean_square: probe, carlson_ok: ok })
}

/// Doubles z from y until the mean square of |zeta - zeta_z| over 100 random
/// shifts in (0, 10^4] at the centre and corners of K drops below `goal`.
fn carlson_probe(domain: &Domain, y: f64, goal: f64, seed: u64) -> Result<(f64, f64, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let taus: Vec<f64> = (0..100).map(|_| 1e4 * (1.0 - rng.gen::<f64>())).collect();
    let base = [
        domain.k_centroid(),
        Complex64::new(domain.sigma_lo, domain.t_lo),
        Complex64::new(domain.sigma_lo, domain.t_hi),
        Complex64::new(domain.sigma_hi, domain.t_lo),
        Complex64::new(domain.sigma_hi, domain.t_hi),
    ];
    let points: Vec<Complex64> =
        taus.iter().flat_map(|&t| base.iter().map(move |s| s + Complex64::new(0.0, t))).collect();
    let zetas: Vec<Complex64> = zeta_many(&points, 1e-10)?.into_iter().map(|z| z.value).collect();
    let mut logs = vec![Complex64::new(0.0, 0.0); points.len()];
    let mut z = y.max(2.0);
    let mut done = 0u64;
    let cap = MAX_PROBE_HEIGHT.max(z);
    let all = primes_up_to(cap.min(MAX_PROBE_HEIGHT) as u64);
    loop {
        for &p in all.iter().filter(|&&p| p > done && p as f64 <= z) {
            let lp = (p as f64).ln();
            for (lg, s) in logs.iter_mut().zip(&points) {
                let w = (-s * lp).exp();
                *lg += crate::zetaeval::neg_log_one_minus(w);
            }
        }
        done = z as u64;
        let ms = zetas.iter().zip(&logs).map(|(zv, lg)| (zv - lg.exp()).norm_sqr()).sum::<f64>() / points.len() as f64;
        if ms <= goal {
            return Ok((z, ms, true));
        }
        if 2.0 * z > MAX_PROBE_HEIGHT {
            return Ok((z, ms, false));
        }
        z *= 2.0;
    }
}

/// One row of the density table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub mode: ScanMode,
    pub a: Option<i64>,
    pub b: Option<i64>,
    pub d: Option<f64>,
    pub epsilon: f64,
    #[serde(rename = "T")]
    pub t_max: f64,
    pub step: f64,
    pub samples: u64,
    pub hits: u64,
    pub density: f64,
    pub best_tau: Option<f64>,
    pub best_err: Option<f64>,
}

pub const REPORT_HEADER: &str = "mode,a,b,d,epsilon,T,step,samples,hits,density,best_tau,best_err";

impl ReportRow {
    pub fn from_result(r: &ScanResult) -> Self {
        ReportRow {
            mode: r.mode,
            a: r.a,
            b: r.b,
            d: r.d,
            epsilon: r.epsilon,
            t_max: r.t_max,
            step: r.step,
            samples: r.samples,
            hits: r.hits,
            density: r.density,
            best_tau: r.best.first().map(|h| h.tau),
            best_err: r.best.first().map(|h| h.error),
        }
    }
}

/// Real in 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Summary table sorted by (mode, epsilon), ties broken by the remaining columns.
pub fn density_report(results: &[ScanResult]) -> Result<Vec<ReportRow>> {
    if results.is_empty() {
        return Err(Error::InvalidParameter("density report needs at least one result".into()));
    }
    let mut rows: Vec<ReportRow> = results.iter().map(ReportRow::from_result).collect();
    rows.sort_by(|x, y| {
        x.mode
            .cmp(&y.mode)
            .then(x.epsilon.total_cmp(&y.epsilon))
            .then(x.a.cmp(&y.a))
            .then(x.b.cmp(&y.b))
            .then(x.d.unwrap_or(0.0).total_cmp(&y.d.unwrap_or(0.0)))
            .then(x.t_max.total_cmp(&y.t_max))
            .then(x.step.total_cmp(&y.step))
    });
    Ok(rows)
}

pub fn report_csv(rows: &[ReportRow]) -> String {
    let opt_i = |v: Option<i64>| v.map(|x| x.to_string()).unwrap_or_default();
    let opt_f = |v: Option<f64>| v.map(fmt_real).unwrap_or_default();
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.mode.as_str(),
            opt_i(r.a),
            opt_i(r.b),
            opt_f(r.d),
            fmt_real(r.epsilon),
            fmt_real(r.t_max),
            fmt_real(r.step),
            r.samples,
            r.hits,
            fmt_real(r.density),
            opt_f(r.best_tau),
            opt_f(r.best_err),
        );
    }
    out
}

pub fn parse_report_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(REPORT_HEADER) {
        return Err(Error::InvalidParameter("missing or unexpected CSV header".into()));
    }
    let bad = |what: &str, v: &str| Error::InvalidParameter(format!("bad {what} field {v:?}"));
    let opt_i = |v: &str| -> Result<Option<i64>> {
        if v.is_empty() { Ok(None) } else { v.parse().map(Some).map_err(|_| bad("integer", v)) }
    };
    let opt_f = |v: &str| -> Result<Option<f64>> {
        if v.is_empty() { Ok(None) } else { v.parse().map(Some).map_err(|_| bad("real", v)) }
    };
    let real = |v: &str| -> Result<f64> { v.parse().map_err(|_| bad("real", v)) };
    let count = |v: &str| -> Result<u64> { v.parse().map_err(|_| bad("count", v)) };
    let mut rows = Vec::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            return Err(Error::InvalidParameter(format!("expected 12 fields, got {}", f.len())));
        }
        rows.push(ReportRow {
            mode: ScanMode::parse(f[0])?,
            a: opt_i(f[1])?,
            b: opt_i(f[2])?,
            d: opt_f(f[3])?,
            epsilon: real(f[4])?,
            t_max: real(f[5])?,
            step: real(f[6])?,
            samples: count(f[7])?,
            hits: count(f[8])?,
            density: real(f[9])?,
            best_tau: opt_f(f[10])?,
            best_err: opt_f(f[11])?,
        });
    }
    Ok(rows)
}

pub fn report_json(rows: &[ReportRow]) -> Result<String> {
    serde_json::to_string_pretty(rows).map_err(|e| Error::Internal(e.to_string()))
}

pub fn parse_report_json(text: &str) -> Result<Vec<ReportRow>> {
    serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("bad report JSON: {e}")))
}
