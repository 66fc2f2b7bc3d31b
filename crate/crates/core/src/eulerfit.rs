//! Fitting a pair of logarithm branches by truncated Euler products with
//! common-denominator phases: the two components use phases a k/l and b k/l
//! with the same numerators k.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::complexfn::{Domain, TargetPair};
use crate::error::{Error, Result};
use crate::primes::{first_primes, primes_up_to};
use crate::zetaeval::{log_euler_product, neg_log_one_minus, prime_power_neg, root_of_unity, PhaseAssignment};

/// Minimum decrease of the residual norm for accepting an augmenting prime.
pub const MIN_GAIN: f64 = 1e-14;
/// Stage 1 searches all phase tuples when l^{#primes} * nodes stays below this.
pub const EXHAUSTIVE_WORK: f64 = 2e9;

fn check_len(n: usize, fields: &[&[Complex64]]) -> Result<()> {
    for f in fields {
        if f.len() != n {
            return Err(Error::GridMismatch(format!("field of length {} on {} nodes", f.len(), n)));
        }
    }
    Ok(())
}

/// sum_j Re ∬_U phi_j conj(psi_j) by quadrature.
pub fn inner(phi: [&[Complex64]; 2], psi: [&[Complex64]; 2], domain: &Domain) -> Result<f64> {
    check_len(domain.len(), &[phi[0], phi[1], psi[0], psi[1]])?;
    let mut acc = 0.0;
    for j in 0..2 {
        for ((x, y), w) in phi[j].iter().zip(psi[j]).zip(&domain.grid_weights) {
            acc += w * (x.re * y.re + x.im * y.im);
        }
    }
    Ok(acc)
}

fn norm_sq(f: &[Complex64], w: &[f64]) -> f64 {
    f.iter().zip(w).map(|(z, w)| w * z.norm_sqr()).sum()
}

/// ∬_U p^{-s} conj(phi(s)) dσ dt by quadrature.
pub fn kernel(p: u64, phi: &[Complex64], domain: &Domain) -> Result<Complex64> {
    if p < 2 {
        return Err(Error::InvalidParameter(format!("kernel needs p >= 2, got {p}")));
    }
    check_len(domain.len(), &[phi])?;
    Ok(domain
        .grid_nodes
        .iter()
        .zip(phi)
        .zip(&domain.grid_weights)
        .map(|((s, f), w)| prime_power_neg(p, *s) * f.conj() * *w)
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Phase denominator.
    pub l: u64,
    /// Every prime up to `y` is fitted.
    pub y: f64,
    /// Augmentation considers primes up to the `max_primes`-th prime.
    pub max_primes: usize,
    /// Target sup-norm of both residuals on K.
    pub epsilon_fit: f64,
    /// Coordinate-descent passes over the primes up to `y`.
    pub sweeps: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { l: 16, y: 11.0, max_primes: 500, epsilon_fit: 0.05, sweeps: 4 }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.l < 2 {
            return Err(Error::InvalidParameter(format!("l = {} must be >= 2", self.l)));
        }
        if !(self.y >= 2.0) || !self.y.is_finite() {
            return Err(Error::InvalidParameter(format!("y = {} must be >= 2", self.y)));
        }
        if !(self.epsilon_fit > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon_fit = {} must be positive", self.epsilon_fit)));
        }
        if self.sweeps == 0 {
            return Err(Error::InvalidParameter("sweeps must be >= 1".into()));
        }
        Ok(())
    }
}

/// One step of the fit. Stage 1 records every coordinate visit, stage 2 every
/// prime tried.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitStep {
    pub step: usize,
    pub stage: u8,
    pub prime: u64,
    pub k: u64,
    /// Phase numerator maximizing the first-order kernel gain.
    pub predicted_k: u64,
    pub residual_norm: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitState {
    pub phases: PhaseAssignment,
    pub a: i64,
    pub b: i64,
    pub residual_a: Vec<Complex64>,
    pub residual_b: Vec<Complex64>,
    pub residual_norm: f64,
    pub history: Vec<FitStep>,
    /// Sup of both residuals over the quadrature nodes in K.
    pub sup_residual: f64,
    pub success: bool,
}

/// -Log(1 - e(j/l) p^{-s}) for all j and all nodes.
struct FactorTable {
    z: Vec<Complex64>,
    rows: Vec<Vec<Complex64>>,
}

impl FactorTable {
    fn new(p: u64, domain: &Domain, l: u64) -> Self {
        let z: Vec<Complex64> = domain.grid_nodes.iter().map(|&s| prime_power_neg(p, s)).collect();
        let rows = (0..l)
            .map(|j| {
                let e = root_of_unity(j, l);
                z.iter().map(|zi| neg_log_one_minus(e * zi)).collect()
            })
            .collect();
        FactorTable { z, rows }
    }

    fn row(&self, c: i64, k: u64) -> &[Complex64] {
        let l = self.rows.len() as i128;
        &self.rows[(c as i128 * k as i128).rem_euclid(l) as usize]
    }
}

struct Fitter<'a> {
    domain: &'a Domain,
    a: i64,
    b: i64,
    l: u64,
    r_a: Vec<Complex64>,
    r_b: Vec<Complex64>,
}

impl Fitter<'_> {
    fn norm(&self) -> f64 {
        (norm_sq(&self.r_a, &self.domain.grid_weights) + norm_sq(&self.r_b, &self.domain.grid_weights)).sqrt()
    }

    fn subtract(&mut self, t: &FactorTable, k: u64) {
        let (ua, ub) = (t.row(self.a, k), t.row(self.b, k));
        for i in 0..self.r_a.len() {
            self.r_a[i] -= ua[i];
            self.r_b[i] -= ub[i];
        }
    }

    fn add(&mut self, t: &FactorTable, k: u64) {
        let (ua, ub) = (t.row(self.a, k), t.row(self.b, k));
        for i in 0..self.r_a.len() {
            self.r_a[i] += ua[i];
            self.r_b[i] += ub[i];
        }
    }

    /// Exhaustive search over the phases of two factors; applies and returns
    /// the best pair if it improves on the current one.
    fn best_pair(&mut self, ti: &FactorTable, tj: &FactorTable, ki: u64, kj: u64) -> Option<(u64, u64)> {
        self.add(ti, ki);
        self.add(tj, kj);
        let w = &self.domain.grid_weights;
        let n = w.len();
        let mut best = (ki, kj);
        let mut best_val = f64::INFINITY;
        let mut current = f64::INFINITY;
        let mut da = vec![Complex64::new(0.0, 0.0); n];
        let mut db = vec![Complex64::new(0.0, 0.0); n];
        for p in 0..self.l {
            let (ua, ub) = (ti.row(self.a, p), ti.row(self.b, p));
            for i in 0..n {
                da[i] = self.r_a[i] - ua[i];
                db[i] = self.r_b[i] - ub[i];
            }
            for q in 0..self.l {
                let (va, vb) = (tj.row(self.a, q), tj.row(self.b, q));
                let mut acc = 0.0;
                for i in 0..n {
                    acc += w[i] * ((da[i] - va[i]).norm_sqr() + (db[i] - vb[i]).norm_sqr());
                }
                if acc < best_val {
                    best_val = acc;
                    best = (p, q);
                }
                if (p, q) == (ki, kj) {
                    current = acc;
                }
            }
        }
        let improved = best != (ki, kj) && best_val < current * (1.0 - 1e-12);
        let chosen = if improved { best } else { (ki, kj) };
        self.subtract(ti, chosen.0);
        self.subtract(tj, chosen.1);
        improved.then_some(chosen)
    }

    /// Global minimum over all phase tuples of the given factors, by
    /// depth-first enumeration; ties go to the lexicographically smallest
    /// tuple. The factors must not be present in the residual.
    fn exhaustive(&self, tables: &[FactorTable]) -> Vec<u64> {
        let m = tables.len();
        let n = self.r_a.len();
        let w = &self.domain.grid_weights;
        let mut stack_a = vec![self.r_a.clone()];
        let mut stack_b = vec![self.r_b.clone()];
        for _ in 1..m {
            stack_a.push(vec![Complex64::new(0.0, 0.0); n]);
            stack_b.push(vec![Complex64::new(0.0, 0.0); n]);
        }
        let mut cur = vec![0u64; m];
        let mut best = vec![0u64; m];
        let mut best_val = f64::INFINITY;
        let mut level = 0usize;
        loop {
            if level + 1 == m {
                let t = &tables[level];
                for k in 0..self.l {
                    let (ua, ub) = (t.row(self.a, k), t.row(self.b, k));
                    let (ra, rb) = (&stack_a[level], &stack_b[level]);
                    let mut acc = 0.0;
                    for i in 0..n {
                        acc += w[i] * ((ra[i] - ua[i]).norm_sqr() + (rb[i] - ub[i]).norm_sqr());
                    }
                    if acc < best_val {
                        best_val = acc;
                        cur[level] = k;
                        best.copy_from_slice(&cur);
                    }
                }
                // backtrack to the deepest level with phases left
                loop {
                    if level == 0 {
                        return best;
                    }
                    level -= 1;
                    cur[level] += 1;
                    if cur[level] < self.l {
                        break;
                    }
                }
            }
            let t = &tables[level];
            let (ua, ub) = (t.row(self.a, cur[level]), t.row(self.b, cur[level]));
            let (lo_a, hi_a) = stack_a.split_at_mut(level + 1);
            let (lo_b, hi_b) = stack_b.split_at_mut(level + 1);
            for i in 0..n {
                hi_a[0][i] = lo_a[level][i] - ua[i];
                hi_b[0][i] = lo_b[level][i] - ub[i];
            }
            level += 1;
            cur[level] = 0;
        }
    }

    fn sup_on(&self, idx: &[usize]) -> f64 {
        idx.iter().map(|&i| self.r_a[i].norm().max(self.r_b[i].norm())).fold(0.0, f64::max)
    }

    /// Squared norms for every k given the residual without the factor, plus
    /// the steering prediction.
    fn evaluate(&self, t: &FactorTable, base_a: &[Complex64], base_b: &[Complex64]) -> (Vec<f64>, u64) {
        let w = &self.domain.grid_weights;
        let evals = (0..self.l)
            .map(|k| {
                let ua = t.row(self.a, k);
                let ub = t.row(self.b, k);
                let mut acc = 0.0;
                for i in 0..w.len() {
                    acc += w[i] * ((base_a[i] - ua[i]).norm_sqr() + (base_b[i] - ub[i]).norm_sqr());
                }
                acc
            })
            .collect();
        let mut ka = Complex64::new(0.0, 0.0);
        let mut kb = Complex64::new(0.0, 0.0);
        for i in 0..w.len() {
            ka += t.z[i] * base_a[i].conj() * w[i];
            kb += t.z[i] * base_b[i].conj() * w[i];
        }
        let mut predicted = 0;
        let mut best = f64::NEG_INFINITY;
        for k in 0..self.l {
            let ea = root_of_unity((self.a as i128 * k as i128).rem_euclid(self.l as i128) as u64, self.l);
            let eb = root_of_unity((self.b as i128 * k as i128).rem_euclid(self.l as i128) as u64, self.l);
            let gain = (ea * ka + eb * kb).re;
            if gain > best {
                best = gain;
                predicted = k;
            }
        }
        (evals, predicted)
    }
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x < v[best] {
            best = i;
        }
    }
    best
}

/// Two-stage fit. Stage 1 places all primes up to `y`: by exhaustive search
/// over their phase tuples when affordable, otherwise by inserting them in
/// increasing order with their best phase. Coordinate descent follows,
/// falling back to joint moves of two phases when single moves stall. Stage 2
/// augments by increasing primes, keeping a prime only if it lowers the norm. Running out of budget
/// is not an error; check `success`.
pub fn greedy_fit(targets: &TargetPair, domain: &Domain, config: &FitConfig) -> Result<FitState> {
    config.validate()?;
    check_len(domain.len(), &[&targets.log_a, &targets.log_b])?;
    let k_idx = domain.k_subgrid();
    if k_idx.is_empty() {
        return Err(Error::InvalidParameter("no quadrature node inside K; increase the resolution".into()));
    }
    let l = config.l;
    let mut fit = Fitter {
        domain,
        a: targets.a,
        b: targets.b,
        l,
        r_a: targets.log_a.clone(),
        r_b: targets.log_b.clone(),
    };

    let mut primes: Vec<u64> = primes_up_to(config.y.floor() as u64);
    let mut ks: Vec<u64> = vec![0; primes.len()];
    let tables: Vec<FactorTable> = primes.iter().map(|&p| FactorTable::new(p, domain, l)).collect();
    let mut history = Vec::new();

    let work = (l as f64).powi(tables.len() as i32) * domain.len() as f64;
    if work <= EXHAUSTIVE_WORK {
        let best = fit.exhaustive(&tables);
        for (j, t) in tables.iter().enumerate() {
            ks[j] = best[j];
            fit.subtract(t, ks[j]);
        }
        let norm = fit.norm();
        for j in 0..tables.len() {
            history.push(FitStep {
                step: history.len(),
                stage: 1,
                prime: primes[j],
                k: ks[j],
                predicted_k: ks[j],
                residual_norm: norm,
                accepted: true,
            });
        }
    } else {
        // insertion pass: each prime joins with its best phase given the previous ones
        for (j, t) in tables.iter().enumerate() {
            let (evals, predicted) = fit.evaluate(t, &fit.r_a, &fit.r_b);
            ks[j] = argmin(&evals) as u64;
            fit.subtract(t, ks[j]);
            history.push(FitStep {
                step: history.len(),
                stage: 1,
                prime: primes[j],
                k: ks[j],
                predicted_k: predicted,
                residual_norm: fit.norm(),
                accepted: true,
            });
        }
    }
    let mut norm = fit.norm();

    for _ in 0..config.sweeps {
        let mut changed = false;
        for (j, t) in tables.iter().enumerate() {
            fit.add(t, ks[j]);
            let (evals, predicted) = fit.evaluate(t, &fit.r_a, &fit.r_b);
            let best = argmin(&evals) as u64;
            let old = ks[j];
            if best != old && evals[best as usize] < evals[old as usize] * (1.0 - 1e-12) {
                ks[j] = best;
                changed = true;
            }
            fit.subtract(t, ks[j]);
            if ks[j] != old {
                norm = fit.norm();
            }
            history.push(FitStep {
                step: history.len(),
                stage: 1,
                prime: primes[j],
                k: ks[j],
                predicted_k: predicted,
                residual_norm: norm,
                accepted: true,
            });
        }
        if !changed {
            // single-coordinate moves are exhausted; try joint moves of two phases
            for i in 0..tables.len() {
                for j in i + 1..tables.len() {
                    if let Some((ki, kj)) = fit.best_pair(&tables[i], &tables[j], ks[i], ks[j]) {
                        ks[i] = ki;
                        ks[j] = kj;
                        norm = fit.norm();
                        changed = true;
                        for (idx, k) in [(i, ki), (j, kj)] {
                            history.push(FitStep {
                                step: history.len(),
                                stage: 1,
                                prime: primes[idx],
                                k,
                                predicted_k: k,
                                residual_norm: norm,
                                accepted: true,
                            });
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut sup = fit.sup_on(&k_idx);
    let y_max = primes.last().copied().unwrap_or(1);
    if sup >= config.epsilon_fit {
        for p in first_primes(config.max_primes).into_iter().filter(|&p| p > y_max) {
            let t = FactorTable::new(p, domain, l);
            let (evals, predicted) = fit.evaluate(&t, &fit.r_a, &fit.r_b);
            let best = argmin(&evals) as u64;
            let accepted = norm - evals[best as usize].max(0.0).sqrt() >= MIN_GAIN;
            if accepted {
                fit.subtract(&t, best);
                primes.push(p);
                ks.push(best);
                norm = fit.norm();
                sup = fit.sup_on(&k_idx);
            }
            history.push(FitStep {
                step: history.len(),
                stage: 2,
                prime: p,
                k: best,
                predicted_k: predicted,
                residual_norm: norm,
                accepted,
            });
            if accepted && sup < config.epsilon_fit {
                break;
            }
        }
    }

    let phases = PhaseAssignment::new(primes, ks.iter().map(|&k| k as i64).collect(), l)?;
    Ok(FitState {
        phases,
        a: fit.a,
        b: fit.b,
        residual_norm: norm,
        success: sup < config.epsilon_fit,
        sup_residual: sup,
        residual_a: fit.r_a,
        residual_b: fit.r_b,
        history,
    })
}

/// Sup of the residual pair on K next to the Bergman-space estimate
/// ‖r‖ / (√π · margin).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualSup {
    pub sup: f64,
    pub bergman: f64,
}

pub fn residual_sup(residual_a: &[Complex64], residual_b: &[Complex64], domain: &Domain) -> Result<ResidualSup> {
    check_len(domain.len(), &[residual_a, residual_b])?;
    let sup = domain
        .k_subgrid()
        .into_iter()
        .map(|i| residual_a[i].norm().max(residual_b[i].norm()))
        .fold(0.0, f64::max);
    let norm = (norm_sq(residual_a, &domain.grid_weights) + norm_sq(residual_b, &domain.grid_weights)).sqrt();
    Ok(ResidualSup { sup, bergman: norm / (std::f64::consts::PI.sqrt() * domain.margin) })
}

impl FitState {
    pub fn residual_sup(&self, domain: &Domain) -> Result<ResidualSup> {
        residual_sup(&self.residual_a, &self.residual_b, domain)
    }

    /// Residuals recomputed from scratch from the stored phases.
    pub fn recompute_residuals(&self, targets: &TargetPair, domain: &Domain) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let pa = self.phases.scaled(self.a)?;
        let pb = self.phases.scaled(self.b)?;
        let mut ra = Vec::with_capacity(domain.len());
        let mut rb = Vec::with_capacity(domain.len());
        for (i, &s) in domain.grid_nodes.iter().enumerate() {
            ra.push(targets.log_a[i] - log_euler_product(s, &pa)?);
            rb.push(targets.log_b[i] - log_euler_product(s, &pb)?);
        }
        Ok((ra, rb))
    }

    pub fn record(&self) -> FitRecord {
        FitRecord {
            l: self.phases.denominator(),
            a: self.a,
            b: self.b,
            primes: self.phases.primes().to_vec(),
            k: self.phases.numerators().to_vec(),
            residual_norm: self.residual_norm,
            sup_residual: self.sup_residual,
            success: self.success,
            history: self.history.clone(),
        }
    }
}

/// Serializable summary of a fit: enough to rebuild the phases without refitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub l: u64,
    pub a: i64,
    pub b: i64,
    pub primes: Vec<u64>,
    pub k: Vec<u64>,
    pub residual_norm: f64,
    pub sup_residual: f64,
    pub success: bool,
    pub history: Vec<FitStep>,
}

impl FitRecord {
    pub fn phases(&self) -> Result<PhaseAssignment> {
        PhaseAssignment::new(self.primes.clone(), self.k.iter().map(|&k| k as i64).collect(), self.l)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("bad fit record: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexfn::{build_domain, TargetFn};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn one() -> TargetFn {
        TargetFn::constant(c(1.0, 0.0))
    }

    #[test]
    fn inner_basics() {
        let d = build_domain(0.7, 0.8, -0.1, 0.1, 10).unwrap();
        let ones = vec![c(1.0, 0.0); d.len()];
        let zeros = vec![c(0.0, 0.0); d.len()];
        assert!((inner([&ones, &zeros], [&ones, &zeros], &d).unwrap() - d.area_u()).abs() < 1e-14);
        let s: Vec<Complex64> = d.grid_nodes.clone();
        // ∬ sigma over [0.68,0.82]x[-0.12,0.12]
        let exact = 0.5 * (0.82f64.powi(2) - 0.68f64.powi(2)) * 0.24;
        assert!((inner([&s, &zeros], [&ones, &zeros], &d).unwrap() - exact).abs() < 1e-13);
        assert!(inner([&ones[..3], &zeros], [&ones, &zeros], &d).is_err());
    }

    #[test]
    fn inner_psd_and_symmetric() {
        let d = build_domain(0.6, 0.9, 0.0, 1.0, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut field = || -> Vec<Complex64> { (0..d.len()).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect() };
        for _ in 0..50 {
            let (x, y, u, v) = (field(), field(), field(), field());
            assert!(inner([&x, &y], [&x, &y], &d).unwrap() >= 0.0);
            let l = inner([&x, &y], [&u, &v], &d).unwrap();
            let r = inner([&u, &v], [&x, &y], &d).unwrap();
            assert!((l - r).abs() < 1e-14);
        }
    }

    #[test]
    fn kernel_closed_form_and_bound() {
        let d = build_domain(0.7, 0.8, -0.1, 0.1, 40).unwrap();
        let ones = vec![c(1.0, 0.0); d.len()];
        let zeros = vec![c(0.0, 0.0); d.len()];
        assert_eq!(kernel(3, &zeros, &d).unwrap(), c(0.0, 0.0));
        for p in [2u64, 3, 7, 31] {
            let lp = (p as f64).ln();
            let is = ((-lp * d.u_sigma_lo).exp() - (-lp * d.u_sigma_hi).exp()) / lp;
            let it = (Complex64::i() * -lp * d.u_t_hi).exp() - (Complex64::i() * -lp * d.u_t_lo).exp();
            let exact = it / (Complex64::i() * -lp) * is;
            let got = kernel(p, &ones, &d).unwrap();
            // midpoint rule error is O(h^2 log^2 p)
            assert!((got - exact).norm() < 1e-4 * exact.norm(), "p={p}: {got} vs {exact}");
            assert!(got.norm() <= (p as f64).powf(-d.u_sigma_lo) * d.area_u());
        }
        assert!(kernel(1, &ones, &d).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(FitConfig::default().validate().is_ok());
        assert!(FitConfig { l: 1, ..Default::default() }.validate().is_err());
        assert!(FitConfig { y: 1.5, ..Default::default() }.validate().is_err());
        assert!(FitConfig { epsilon_fit: 0.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn trivial_pair_single_prime() {
        let d = build_domain(0.7, 0.8, -0.1, 0.1, 10).unwrap();
        let t = TargetPair::new(&d, 1, 2, one(), one()).unwrap();
        let cfg = FitConfig { l: 2, y: 2.0, max_primes: 1, epsilon_fit: 1e-6, sweeps: 1 };
        let st = greedy_fit(&t, &d, &cfg).unwrap();
        assert_eq!(st.phases.primes(), &[2]);
        // brute force over both phases
        let w = &d.grid_weights;
        let mut norms = Vec::new();
        for k in 0..2u64 {
            let mut acc = 0.0;
            for (i, s) in d.grid_nodes.iter().enumerate() {
                let z = prime_power_neg(2, *s);
                for cc in [1u64, 2] {
                    acc += w[i] * neg_log_one_minus(root_of_unity(cc * k % 2, 2) * z).norm_sqr();
                }
            }
            norms.push(acc.sqrt());
        }
        let kbest = if norms[1] < norms[0] { 1 } else { 0 };
        assert_eq!(st.phases.numerators()[0], kbest);
        assert!((st.residual_norm - norms[kbest as usize]).abs() < 1e-12);
        assert!(st.residual_norm > 0.0 && !st.success);
    }

    fn representable(seed: u64, a: i64, b: i64) -> (Domain, TargetPair, PhaseAssignment) {
        let d = build_domain(0.72, 0.78, -0.05, 0.05, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ks: Vec<i64> = (0..4).map(|_| rng.gen_range(0..12)).collect();
        let ph = PhaseAssignment::new(vec![2, 3, 5, 7], ks, 12).unwrap();
        let (pa, pb) = (ph.scaled(a).unwrap(), ph.scaled(b).unwrap());
        let fa = TargetFn::custom("zeta_M a", move |s| log_euler_product(s, &pa).unwrap().exp());
        let fb = TargetFn::custom("zeta_M b", move |s| log_euler_product(s, &pb).unwrap().exp());
        let t = TargetPair::new(&d, a, b, fa, fb).unwrap();
        (d, t, ph)
    }

    #[test]
    fn recovers_representable_targets() {
        for (seed, a, b) in [(1, 1, 2), (2, 1, 2), (3, 2, 3), (4, 1, -3)] {
            let (d, t, _) = representable(seed, a, b);
            let cfg = FitConfig { l: 12, y: 7.0, max_primes: 10, epsilon_fit: 1e-9, sweeps: 6 };
            let st = greedy_fit(&t, &d, &cfg).unwrap();
            let rs = st.residual_sup(&d).unwrap();
            assert!(rs.sup < 1e-8, "seed {seed}: sup {}", rs.sup);
            assert!(st.success);
        }
    }

    #[test]
    fn recovers_phases_exactly_over_many_seeds() {
        for seed in 10..30u64 {
            let (a, b) = [(1, 2), (2, 3), (1, -3), (3, 5)][(seed % 4) as usize];
            let (d, t, ph) = representable(seed, a, b);
            let cfg = FitConfig { l: 12, y: 7.0, max_primes: 10, epsilon_fit: 1e-9, sweeps: 2 };
            let st = greedy_fit(&t, &d, &cfg).unwrap();
            assert!(st.sup_residual < 1e-8, "seed {seed}");
            assert_eq!(st.phases.numerators(), ph.numerators());
        }
    }

    #[test]
    fn constant_pair_regression() {
        let d = build_domain(0.72, 0.78, -0.05, 0.05, 16).unwrap();
        let t = TargetPair::new(&d, 1, 2, one(), TargetFn::constant(c(2.0, 0.0))).unwrap();
        let cfg = FitConfig { l: 16, y: 11.0, max_primes: 2000, epsilon_fit: 1e-3, sweeps: 3 };
        let st = greedy_fit(&t, &d, &cfg).unwrap();
        assert!(st.sup_residual < 0.25, "sup {}", st.sup_residual);
    }

    #[test]
    fn descent_fallback_is_monotone() {
        // too many primes for the exhaustive search
        let d = build_domain(0.6, 0.9, -0.5, 0.5, 12).unwrap();
        let fa = TargetFn::custom("1+s", |s| s + 1.0);
        let fb = TargetFn::custom("exp(s/2)", |s| (s * 0.5).exp());
        let t = TargetPair::new(&d, 1, 3, fa, fb).unwrap();
        let cfg = FitConfig { l: 16, y: 30.0, max_primes: 40, epsilon_fit: 1e-6, sweeps: 5 };
        let st = greedy_fit(&t, &d, &cfg).unwrap();
        let acc: Vec<f64> = st.history.iter().filter(|h| h.accepted).skip(10).map(|h| h.residual_norm).collect();
        assert!(acc.windows(2).all(|w| w[1] <= w[0]));
        let (ra, _) = st.recompute_residuals(&t, &d).unwrap();
        assert!(ra.iter().zip(&st.residual_a).all(|(x, y)| (x - y).norm() < 1e-10));
    }

    #[test]
    fn state_invariants() {
        let d = build_domain(0.72, 0.78, -0.05, 0.05, 12).unwrap();
        let fa = TargetFn::constant(c(1.0, 0.0));
        let fb = TargetFn::constant(c(2.0, 0.0));
        let t = TargetPair::new(&d, 1, 2, fa, fb).unwrap();
        let cfg = FitConfig { l: 16, y: 11.0, max_primes: 200, epsilon_fit: 1e-3, sweeps: 3 };
        let st = greedy_fit(&t, &d, &cfg).unwrap();
        let w = &d.grid_weights;
        let n2 = norm_sq(&st.residual_a, w) + norm_sq(&st.residual_b, w);
        assert!((st.residual_norm.powi(2) - n2).abs() < 1e-10);
        let (ra, rb) = st.recompute_residuals(&t, &d).unwrap();
        for i in 0..d.len() {
            assert!((ra[i] - st.residual_a[i]).norm() < 1e-10);
            assert!((rb[i] - st.residual_b[i]).norm() < 1e-10);
        }
        let acc: Vec<f64> = st.history.iter().filter(|h| h.accepted).map(|h| h.residual_norm).collect();
        assert!(acc.windows(2).all(|w| w[1] <= w[0]));
        assert!(st.phases.numerators().iter().all(|&k| k < 16));

        let rec = st.record();
        let back = FitRecord::from_json(&rec.to_json().unwrap()).unwrap();
        assert_eq!(back, rec);
        assert_eq!(back.phases().unwrap(), st.phases);
    }

    #[test]
    fn bergman_dominates_sup() {
        let d = build_domain(0.7, 0.8, -0.1, 0.1, 24).unwrap();
        let zero = vec![c(0.0, 0.0); d.len()];
        let r = residual_sup(&zero, &zero, &d).unwrap();
        assert_eq!((r.sup, r.bergman), (0.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let (x0, y0): (f64, f64) = (rng.gen_range(0.0..0.3), rng.gen_range(-0.5..0.5));
            let k: f64 = rng.gen_range(0.5..4.0);
            let fa: Vec<Complex64> = d.grid_nodes.iter().map(|s| ((s - c(x0, y0)) * k).exp()).collect();
            let fb: Vec<Complex64> = d.grid_nodes.iter().map(|s| (s * s * k).sin()).collect();
            let r = residual_sup(&fa, &fb, &d).unwrap();
            assert!(r.sup <= 1.5 * r.bergman);
        }
    }
}
