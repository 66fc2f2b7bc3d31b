//! Inhomogeneous Kronecker approximation for prime logarithms: verifying and
//! finding shifts tau with tau log p / 2 pi close to prescribed phases.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{lll_reduce, to_i128};
use crate::primes::is_prime;
use crate::zetaeval::ddlog::{ln_dd, turns_frac};

/// Largest prime set handled by the lattice method.
pub const MAX_LATTICE_DIM: usize = 12;
/// Scale at which prime logarithms are rounded into the lattice.
const LOG_SCALE: f64 = 1e15;
/// Solutions listed for a single prime.
const MAX_SINGLE_PRIME: usize = 64;
/// Scan chunk length in samples.
const SCAN_CHUNK: usize = 1 << 16;

/// Distance to the nearest integer.
pub fn dist_to_int(x: f64) -> f64 {
    (x - x.round()).abs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTarget {
    primes: Vec<u64>,
    theta: Vec<f64>,
    delta: f64,
}

impl PhaseTarget {
    /// Phases are reduced into [0, 1).
    pub fn new(primes: Vec<u64>, theta: Vec<f64>, delta: f64) -> Result<Self> {
        if primes.len() != theta.len() {
            return Err(Error::InvalidParameter(format!("{} primes but {} phases", primes.len(), theta.len())));
        }
        if primes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("primes must be strictly increasing".into()));
        }
        if let Some(p) = primes.iter().find(|&&p| !is_prime(p)) {
            return Err(Error::InvalidParameter(format!("{p} is not prime")));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidParameter(format!("delta = {delta} must be positive")));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter("non-finite phase".into()));
        }
        let theta = theta.into_iter().map(|t| t - t.floor()).map(|t| if t >= 1.0 { 0.0 } else { t }).collect();
        Ok(PhaseTarget { primes, theta, delta })
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// Limit density (2 delta)^|M| of the pass set, capped at 1.
    pub fn box_measure(&self) -> f64 {
        (2.0 * self.delta).min(1.0).powi(self.len() as i32)
    }

    /// Largest scan step that cannot jump over a pass interval.
    pub fn max_step(&self) -> f64 {
        match self.primes.last() {
            Some(&p) => self.delta.min(0.5) * TAU / (p as f64).ln(),
            None => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Lattice,
    Scan,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Lattice => "lattice",
            Source::Scan => "scan",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauCandidate {
    pub tau: f64,
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
    pub source: Source,
    pub pass: bool,
}

fn deviations(tau: f64, target: &PhaseTarget) -> Vec<f64> {
    target
        .primes
        .iter()
        .zip(&target.theta)
        .map(|(&p, &th)| dist_to_int(turns_frac(tau, ln_dd(p)) - th))
        .collect()
}

fn candidate(tau: f64, target: &PhaseTarget, source: Source) -> TauCandidate {
    let deviations = deviations(tau, target);
    let max_deviation = deviations.iter().cloned().fold(0.0, f64::max);
    TauCandidate { tau, deviations, max_deviation, source, pass: max_deviation < target.delta }
}

/// Deviations ‖tau log p / 2 pi − theta_p‖ for every prime of the target.
pub fn verify_phases(tau: f64, target: &PhaseTarget) -> Result<TauCandidate> {
    verify_as(tau, target, Source::Scan)
}

fn verify_as(tau: f64, target: &PhaseTarget, source: Source) -> Result<TauCandidate> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("tau = {tau} must be positive")));
    }
    Ok(candidate(tau, target, source))
}

/// Candidates with all phases within delta, tau in (0, tau_max], sorted by tau.
///
/// The phase of the first prime is matched exactly: tau = (theta_1 + q) 2 pi /
/// log p_1 for an integer q. The remaining primes give an inhomogeneous
/// simultaneous approximation problem in q, solved by LLL on its Kannan
/// embedding at several weightings of q. Every candidate is checked by
/// [`verify_phases`]; an empty list is a normal outcome.
pub fn find_tau_lattice(target: &PhaseTarget, tau_max: f64) -> Result<Vec<TauCandidate>> {
    let m = target.len();
    if m > MAX_LATTICE_DIM {
        return Err(Error::DimensionTooLarge(m));
    }
    if !(tau_max > 0.0) || !tau_max.is_finite() {
        return Err(Error::InvalidParameter(format!("tau_max = {tau_max} must be positive")));
    }
    if m == 0 {
        return Ok(Vec::new());
    }
    let ln1 = (target.primes[0] as f64).ln();
    let theta1 = target.theta[0];
    let tau_of = |q: i128| (theta1 + q as f64) * TAU / ln1;
    let q_max = (tau_max * ln1 / TAU - theta1).floor();
    if q_max < 0.0 {
        return Ok(Vec::new());
    }
    let q_max = q_max as i128;
    let q_min = if theta1 > 0.0 { 0 } else { 1 };

    let mut qs: Vec<i128> = Vec::new();
    if m == 1 {
        qs.extend((q_min..=q_max).take(MAX_SINGLE_PRIME));
    } else {
        let r: Vec<f64> = target.primes[1..].iter().map(|&p| (p as f64).ln() / ln1).collect();
        let c: Vec<f64> = r.iter().zip(&target.theta[1..]).map(|(ri, th)| theta1 * ri - th).collect();
        let s = LOG_SCALE;
        let delta = target.delta.min(0.5);
        let e = (s * delta).round() as i128;
        let mut q_eff = q_max.max(1) as f64;
        for _ in 0..8 {
            let w_q = ((s * delta / q_eff).round() as i128).max(1);
            let dim = m + 1;
            let mut rows: Vec<Vec<i128>> = Vec::with_capacity(dim);
            let mut row_q = vec![0i128; dim];
            row_q[0] = w_q;
            for i in 0..m - 1 {
                row_q[i + 1] = (s * r[i]).round() as i128;
            }
            rows.push(row_q);
            for i in 0..m - 1 {
                let mut row = vec![0i128; dim];
                row[i + 1] = -(s as i128);
                rows.push(row);
            }
            let mut emb = vec![0i128; dim];
            for i in 0..m - 1 {
                emb[i + 1] = (s * c[i]).round() as i128;
            }
            emb[m] = e;
            rows.push(emb);
            let big: Vec<Vec<BigInt>> = crate::lattice::to_big(&rows);
            let reduced = to_i128(&lll_reduce(&big, 99, 100)?)?;
            for v in small_combinations(&reduced) {
                let sign = if v[m] == e {
                    1
                } else if v[m] == -e {
                    -1
                } else {
                    continue;
                };
                if v[0] % w_q != 0 {
                    continue;
                }
                let q = sign * v[0] / w_q;
                if q >= q_min && q <= q_max && !qs.contains(&q) {
                    qs.push(q);
                }
            }
            q_eff /= 8.0;
            if q_eff < 1.0 {
                break;
            }
        }
    }
    let mut out: Vec<TauCandidate> = qs
        .into_iter()
        .filter_map(|q| verify_as(tau_of(q), target, Source::Lattice).ok())
        .filter(|c| c.pass && c.tau <= tau_max)
        .collect();
    out.sort_by(|a, b| a.tau.total_cmp(&b.tau));
    out.dedup_by(|a, b| a.tau == b.tau);
    Ok(out)
}

/// Combinations of reduced rows with small coefficients: all of {-2..2} in
/// low dimension, otherwise {-1, 0, 1} with at most three nonzero.
fn small_combinations(rows: &[Vec<i128>]) -> Vec<Vec<i128>> {
    let n = rows.len();
    let dim = rows[0].len();
    let mut out = Vec::new();
    let full_range: i128 = if 5usize.pow(n as u32) <= 400_000 {
        2
    } else if 3usize.pow(n as u32) <= 400_000 {
        1
    } else {
        0
    };
    if full_range > 0 {
        let base = (2 * full_range + 1) as usize;
        let total = base.pow(n as u32);
        for code in 1..total {
            let mut v = vec![0i128; dim];
            let mut c = code;
            for row in rows {
                let coef = (c % base) as i128 - full_range;
                c /= base;
                if coef != 0 {
                    for (x, y) in v.iter_mut().zip(row) {
                        *x += coef * y;
                    }
                }
            }
            out.push(v);
        }
    } else {
        for i in 0..n {
            for si in [-1i128, 1] {
                let vi: Vec<i128> = rows[i].iter().map(|x| si * x).collect();
                out.push(vi.clone());
                for j in i + 1..n {
                    for sj in [-1i128, 1] {
                        let vij: Vec<i128> = vi.iter().zip(&rows[j]).map(|(x, y)| x + sj * y).collect();
                        out.push(vij.clone());
                        for k in j + 1..n {
                            for sk in [-1i128, 1] {
                                out.push(vij.iter().zip(&rows[k]).map(|(x, y)| x + sk * y).collect());
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseScan {
    pub candidates: Vec<TauCandidate>,
    pub samples: u64,
    pub hits: u64,
    pub density: f64,
}

/// Samples tau = step, 2 step, ..., T and keeps those passing the target.
pub fn scan_tau(target: &PhaseTarget, t_max: f64, step: f64) -> Result<PhaseScan> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidParameter(format!("step = {step} must be positive")));
    }
    if step > target.max_step() * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "step {step} exceeds delta * 2 pi / log p_max = {}; pass intervals could be skipped",
            target.max_step()
        )));
    }
    if !(t_max >= 100.0 * step) {
        return Err(Error::InvalidParameter(format!("T = {t_max} must be at least 100 steps")));
    }
    let samples = (t_max / step * (1.0 + 1e-12)).floor() as u64;
    let logs: Vec<_> = target.primes.iter().map(|&p| ln_dd(p)).collect();
    let chunks = samples.div_ceil(SCAN_CHUNK as u64);
    let parts: Vec<Vec<TauCandidate>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * SCAN_CHUNK as u64 + 1;
            let hi = ((c + 1) * SCAN_CHUNK as u64).min(samples);
            let mut hits = Vec::new();
            for j in lo..=hi {
                let tau = j as f64 * step;
                let pass = logs
                    .iter()
                    .zip(&target.theta)
                    .all(|(l, th)| dist_to_int(turns_frac(tau, *l) - th) < target.delta);
                if pass {
                    hits.push(candidate(tau, target, Source::Scan));
                }
            }
            hits
        })
        .collect();
    let candidates: Vec<TauCandidate> = parts.into_iter().flatten().collect();
    let hits = candidates.len() as u64;
    Ok(PhaseScan { density: hits as f64 / samples as f64, candidates, samples, hits })
}

/// Result of searching for multiplicative relations among the inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub numbers: Vec<u64>,
    pub height: u64,
    /// Exact relation sum m_i log n_i = 0 with |m_i| <= height, if any.
    pub relation: Option<Vec<i64>>,
    /// Smallest |sum m_i log n_i| among nonzero reduced vectors within the height.
    pub smallest_form: Option<f64>,
}

impl IndependenceReport {
    pub fn none_found(&self) -> bool {
        self.relation.is_none()
    }
}

fn exact_relation(numbers: &[u64], m: &[i64]) -> bool {
    let mut lhs = BigUint::from(1u32);
    let mut rhs = BigUint::from(1u32);
    for (&n, &e) in numbers.iter().zip(m) {
        let p = BigUint::from(n).pow(e.unsigned_abs() as u32);
        if e > 0 {
            lhs *= p;
        } else if e < 0 {
            rhs *= p;
        }
    }
    lhs == rhs
}

/// LLL search for integer relations among the logarithms of the inputs.
///
/// Inputs need not be prime so the detector itself can be exercised; for
/// primes a relation would contradict unique factorization and is reported
/// as an internal error.
pub fn independence_check(numbers: &[u64], height: u64) -> Result<IndependenceReport> {
    if height < 10 {
        return Err(Error::InvalidParameter(format!("height {height} must be >= 10")));
    }
    if height > u32::MAX as u64 {
        return Err(Error::InvalidParameter(format!("height {height} too large")));
    }
    if numbers.len() < 2 || numbers.iter().any(|&n| n < 2) {
        return Err(Error::InvalidParameter("need at least two integers >= 2".into()));
    }
    let n = numbers.len();
    let scale = LOG_SCALE * (height as f64).max(1.0).powf(1.0 / n as f64).max(1.0);
    let rows: Vec<Vec<i128>> = (0..n)
        .map(|i| {
            let mut r = vec![0i128; n + 1];
            r[i] = 1;
            r[n] = (scale * (numbers[i] as f64).ln()).round() as i128;
            r
        })
        .collect();
    let reduced = to_i128(&lll_reduce(&crate::lattice::to_big(&rows), 99, 100)?)?;
    let mut relation = None;
    let mut smallest: Option<f64> = None;
    for v in &reduced {
        let m: Vec<i64> = v[..n].iter().map(|&x| x as i64).collect();
        if m.iter().all(|&x| x == 0) || m.iter().any(|x| x.unsigned_abs() > height) {
            continue;
        }
        let form: f64 = m.iter().zip(numbers).map(|(&mi, &ni)| mi as f64 * (ni as f64).ln()).sum::<f64>().abs();
        smallest = Some(smallest.map_or(form, |s: f64| s.min(form)));
        if relation.is_none() && form < 1e-6 && exact_relation(numbers, &m) {
            let sign = if m.iter().find(|&&x| x != 0).copied().unwrap_or(1) < 0 { -1 } else { 1 };
            relation = Some(m.iter().map(|x| sign * x).collect::<Vec<i64>>());
        }
    }
    if relation.is_some() && numbers.iter().all(|&p| is_prime(p)) {
        let mut sorted = numbers.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() == numbers.len() {
            return Err(Error::Internal(format!(
                "integer relation {:?} among logarithms of distinct primes {numbers:?}",
                relation
            )));
        }
    }
    Ok(IndependenceReport { numbers: numbers.to_vec(), height, relation, smallest_form: smallest })
}

/// CSV with header `tau,max_deviation,source`.
pub fn candidates_csv(candidates: &[TauCandidate]) -> String {
    let mut out = String::from("tau,max_deviation,source\n");
    for c in candidates {
        let _ = writeln!(out, "{:.16e},{:.16e},{}", c.tau, c.max_deviation, c.source.as_str());
    }
    out
}
