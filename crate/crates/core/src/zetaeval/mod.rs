//! Riemann zeta in the strip, finite Euler products with rational phase
//! twists, and the Dirichlet tail bound.

pub mod ddlog;
pub mod nufft;
pub mod progression;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primes::is_prime;
use ddlog::{ln_dd, log_table, reduced_phase, sin_cos_reduced, Dd};

/// Largest |Im s| accepted by [`zeta`].
pub const MAX_HEIGHT: f64 = 1.0e7;
/// Smallest accuracy request accepted by [`zeta`].
pub const MIN_TARGET: f64 = 1.0e-13;
/// Number of Euler-Maclaurin correction terms available (B_2 .. B_30).
pub const MAX_CORRECTIONS: usize = 14;

/// B_{2k} as exact rationals, k = 1..=15.
const BERNOULLI: [(f64, f64); 15] = [
    (1.0, 6.0),
    (-1.0, 30.0),
    (1.0, 42.0),
    (-1.0, 30.0),
    (5.0, 66.0),
    (-691.0, 2730.0),
    (7.0, 6.0),
    (-3617.0, 510.0),
    (43867.0, 798.0),
    (-174611.0, 330.0),
    (854513.0, 138.0),
    (-236364091.0, 2730.0),
    (8553103.0, 6.0),
    (-23749461029.0, 870.0),
    (8615841276005.0, 14322.0),
];

/// B_{2k} / (2k)! for k = 1..=15 (index k-1).
fn em_coefficients() -> &'static [f64; 15] {
    static COEF: std::sync::OnceLock<[f64; 15]> = std::sync::OnceLock::new();
    COEF.get_or_init(|| {
        let mut out = [0.0; 15];
        let mut fact = 1.0f64;
        for k in 1..=15usize {
            fact *= ((2 * k - 1) * (2 * k)) as f64;
            let (num, den) = BERNOULLI[k - 1];
            out[k - 1] = num / den / fact;
        }
        out
    })
}

/// A zeta value together with an absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaValue {
    pub value: Complex64,
    pub error_bound: f64,
    /// Length N of the direct sum.
    pub terms: usize,
    /// Number of Bernoulli corrections used.
    pub corrections: usize,
}

/// Euler-Maclaurin parameters shared by a batch of points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmPlan {
    pub n: usize,
    pub nu: usize,
    pub truncation_bound: f64,
}

fn check_point(s: Complex64) -> Result<()> {
    if !(s.re.is_finite() && s.im.is_finite()) {
        return Err(Error::OutOfRange(format!("non-finite argument {s}")));
    }
    if s.re == 1.0 && s.im == 0.0 {
        return Err(Error::Pole);
    }
    if !(0.5..=2.0).contains(&s.re) {
        return Err(Error::OutOfRange(format!(
            "Re s = {} outside [1/2, 2]",
            s.re
        )));
    }
    if s.im.abs() > MAX_HEIGHT {
        return Err(Error::OutOfRange(format!(
            "|Im s| = {:.3e} exceeds the supported height {:.0e}",
            s.im.abs(),
            MAX_HEIGHT
        )));
    }
    Ok(())
}

/// Remainder bound after `nu` corrections for each `nu` in 1..=14, at sum length `n`.
///
/// |R_nu| <= |s + 2nu + 1| / (sigma + 2nu + 1) * |T_{nu+1}|, where T_k is the
/// k-th correction term.
fn remainder_bounds(s: Complex64, n: usize) -> [f64; MAX_CORRECTIONS] {
    let coef = em_coefficients();
    let ln_n = (n as f64).ln();
    let sigma = s.re;
    let mut out = [f64::INFINITY; MAX_CORRECTIONS];
    // |s (s+1) ... (s + 2k - 2)|, tracked in log form to avoid overflow
    let mut log_poch = s.norm().ln();
    for k in 1..=15usize {
        if k >= 2 {
            log_poch += (s + (2 * k - 3) as f64).norm().ln() + (s + (2 * k - 2) as f64).norm().ln();
        }
        let log_term = coef[k - 1].abs().ln() + log_poch - (sigma + (2 * k - 1) as f64) * ln_n;
        if k >= 2 {
            let nu = k - 1;
            let factor = (s + (2 * nu + 1) as f64).norm() / (sigma + (2 * nu + 1) as f64);
            out[nu - 1] = factor * log_term.exp();
        }
    }
    out
}

/// Choose N and the number of corrections so that the truncation error at
/// every point is at most `budget`.
pub fn em_plan(points: &[Complex64], budget: f64) -> Result<EmPlan> {
    let max_h = points.iter().map(|s| s.norm()).fold(0.0, f64::max);
    let mut n = (max_h / std::f64::consts::TAU).ceil().max(20.0) as usize;
    let cap = (8.0 * MAX_HEIGHT) as usize;
    while n <= cap {
        let mut worst = [0.0f64; MAX_CORRECTIONS];
        for &s in points {
            let b = remainder_bounds(s, n);
            for (w, v) in worst.iter_mut().zip(b) {
                *w = w.max(v);
            }
        }
        if let Some(nu) = (0..MAX_CORRECTIONS).find(|&i| worst[i] <= budget) {
            return Ok(EmPlan { n, nu: nu + 1, truncation_bound: worst[nu] });
        }
        n = n + n / 8 + 1;
    }
    Err(Error::OutOfRange("no Euler-Maclaurin parameters reach the requested accuracy".into()))
}

/// N^{-s} with an accurate phase.
#[inline]
fn int_pow_neg(ln_n: Dd, s: Complex64) -> Complex64 {
    let mag = (-s.re * ln_n.hi).exp();
    let (sin, cos) = reduced_phase(s.im, ln_n).sin_cos();
    Complex64::new(mag * cos, -mag * sin)
}

/// N^{1-s}/(s-1) + N^{-s}/2 + sum_{k<=nu} B_2k/(2k)! (s)_{2k-1} N^{-s-2k+1}.
fn em_correction(s: Complex64, n: usize, nu: usize, ln_n: Dd) -> Complex64 {
    let coef = em_coefficients();
    let nf = n as f64;
    let n_pow = int_pow_neg(ln_n, s);
    let mut acc = n_pow * nf / (s - 1.0) + n_pow * 0.5;
    // (s)_{2k-1} N^{-s-2k+1}, updated by (s+2k-1)(s+2k)/N^2
    let mut poch = s * n_pow / nf;
    let inv_n2 = 1.0 / (nf * nf);
    for k in 1..=nu {
        acc += poch * coef[k - 1];
        poch = poch * (s + (2 * k - 1) as f64) * (s + (2 * k) as f64) * inv_n2;
    }
    acc
}

fn finish(
    s: Complex64,
    main: Complex64,
    abs_sum: f64,
    plan: &EmPlan,
    ln_n: Dd,
    target: f64,
) -> Result<ZetaValue> {
    let value = main + em_correction(s, plan.n, plan.nu, ln_n);
    let bound = remainder_bounds(s, plan.n)[plan.nu - 1];
    // per-term rounding is a few ulps of each summand
    let rounding = 8.0 * f64::EPSILON * (abs_sum + value.norm() + 1.0);
    let error_bound = bound + rounding;
    if error_bound > target {
        return Err(Error::Precision { requested: target, achievable: error_bound });
    }
    Ok(ZetaValue { value, error_bound, terms: plan.n, corrections: plan.nu })
}

/// Riemann zeta at `s` with an absolute error bound below `target_abs_err`.
pub fn zeta(s: Complex64, target_abs_err: f64) -> Result<ZetaValue> {
    Ok(zeta_many(&[s], target_abs_err)?[0])
}

/// Riemann zeta at several points sharing one sum length.
///
/// Powers `n^{-sigma}` and phases `n^{-it}` are computed once per distinct
/// real and imaginary part, so rectangular grids cost little more than a
/// single point per grid line.
pub fn zeta_many(points: &[Complex64], target_abs_err: f64) -> Result<Vec<ZetaValue>> {
    if points.is_empty() {
        return Ok(Vec::new());
    }
    if !(target_abs_err >= MIN_TARGET) {
        return Err(Error::InvalidParameter(format!(
            "target_abs_err {target_abs_err:.3e} below the supported {MIN_TARGET:.0e}"
        )));
    }
    for &s in points {
        check_point(s)?;
    }
    let plan = em_plan(points, 0.5 * target_abs_err)?;
    let table = log_table(plan.n);

    let mut sigmas: Vec<f64> = Vec::new();
    let mut heights: Vec<f64> = Vec::new();
    let index: Vec<(usize, usize)> = points
        .iter()
        .map(|s| {
            let i = position_or_push(&mut sigmas, s.re);
            let j = position_or_push(&mut heights, s.im);
            (i, j)
        })
        .collect();

    let m = points.len();
    let (ns, nh) = (sigmas.len(), heights.len());
    // a (sigma, height) accumulator per cell when the points nearly fill the tensor grid
    let dense = ns * nh <= 2 * m;
    let slots = if dense { ns * nh } else { m };
    let mut tot_re = vec![0.0f64; slots];
    let mut tot_im = vec![0.0f64; slots];
    let mut blk_re = vec![0.0f64; slots];
    let mut blk_im = vec![0.0f64; slots];
    let mut abs_sums = vec![0.0f64; ns];
    let mut mags = vec![0.0f64; ns];
    let mut ph_re = vec![0.0f64; nh];
    let mut ph_im = vec![0.0f64; nh];
    // smallest terms first, flushed in blocks
    for n in (1..plan.n).rev() {
        let l = table[n];
        for i in 0..ns {
            mags[i] = (-sigmas[i] * l.hi).exp();
            abs_sums[i] += mags[i];
        }
        for j in 0..nh {
            let (sin, cos) = sin_cos_reduced(reduced_phase(heights[j], l));
            ph_re[j] = cos;
            ph_im[j] = -sin;
        }
        if dense {
            for (i, &mag) in mags.iter().enumerate() {
                let row = i * nh..(i + 1) * nh;
                for ((br, bi), (pr, pi)) in
                    blk_re[row.clone()].iter_mut().zip(&mut blk_im[row]).zip(ph_re.iter().zip(&ph_im))
                {
                    *br += mag * pr;
                    *bi += mag * pi;
                }
            }
        } else {
            for (k, &(i, j)) in index.iter().enumerate() {
                blk_re[k] += mags[i] * ph_re[j];
                blk_im[k] += mags[i] * ph_im[j];
            }
        }
        if n % 256 == 0 {
            for k in 0..slots {
                tot_re[k] += blk_re[k];
                tot_im[k] += blk_im[k];
            }
            blk_re.fill(0.0);
            blk_im.fill(0.0);
        }
    }
    let ln_n = table[plan.n];
    points
        .iter()
        .zip(&index)
        .enumerate()
        .map(|(k, (&s, &(i, j)))| {
            let slot = if dense { i * nh + j } else { k };
            let main = Complex64::new(tot_re[slot] + blk_re[slot], tot_im[slot] + blk_im[slot]);
            finish(s, main, abs_sums[i], &plan, ln_n, target_abs_err)
        })
        .collect()
}

fn position_or_push(v: &mut Vec<f64>, x: f64) -> usize {
    match v.iter().position(|&y| y.to_bits() == x.to_bits()) {
        Some(i) => i,
        None => {
            v.push(x);
            v.len() - 1
        }
    }
}

/// Finite prime set with common-denominator rational phases k/l and an
/// integer scale c, standing for the twisted product with phases c k / l.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseAssignment {
    primes: Vec<u64>,
    numerators: Vec<u64>,
    denominator: u64,
    scale: i64,
}

impl PhaseAssignment {
    /// Phases `numerators[i] / denominator`, reduced modulo 1.
    pub fn new(primes: Vec<u64>, numerators: Vec<i64>, denominator: u64) -> Result<Self> {
        if denominator == 0 {
            return Err(Error::InvalidParameter("phase denominator must be >= 1".into()));
        }
        if primes.len() != numerators.len() {
            return Err(Error::InvalidParameter(format!(
                "{} primes but {} phases",
                primes.len(),
                numerators.len()
            )));
        }
        if primes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("primes must be strictly increasing".into()));
        }
        if let Some(&p) = primes.iter().find(|&&p| !is_prime(p)) {
            return Err(Error::InvalidParameter(format!("{p} is not prime")));
        }
        let l = denominator as i64;
        let numerators = numerators.iter().map(|k| k.rem_euclid(l) as u64).collect();
        Ok(PhaseAssignment { primes, numerators, denominator, scale: 1 })
    }

    /// All phases zero.
    pub fn zeros(primes: Vec<u64>) -> Result<Self> {
        let k = vec![0; primes.len()];
        Self::new(primes, k, 1)
    }

    pub fn empty() -> Self {
        PhaseAssignment { primes: Vec::new(), numerators: Vec::new(), denominator: 1, scale: 1 }
    }

    /// Same phases, scaled by `c`.
    pub fn scaled(&self, c: i64) -> Result<Self> {
        if c == 0 {
            return Err(Error::InvalidParameter("phase scale must be nonzero".into()));
        }
        let mut out = self.clone();
        out.scale = c;
        Ok(out)
    }

    /// Phases negated (numerators l - k).
    pub fn negated(&self) -> Self {
        let l = self.denominator;
        let mut out = self.clone();
        for k in &mut out.numerators {
            *k = (l - *k) % l;
        }
        out
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn numerators(&self) -> &[u64] {
        &self.numerators
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    pub fn scale(&self) -> i64 {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// theta_i = k_i / l in [0, 1).
    pub fn theta(&self, i: usize) -> f64 {
        self.numerators[i] as f64 / self.denominator as f64
    }

    /// Numerator of c theta_i reduced modulo l, exactly.
    pub fn scaled_numerator(&self, i: usize) -> u64 {
        let l = self.denominator as i128;
        ((self.scale as i128 * self.numerators[i] as i128).rem_euclid(l)) as u64
    }

    /// e(c theta_i) = exp(2 pi i c theta_i).
    pub fn unit(&self, i: usize) -> Complex64 {
        root_of_unity(self.scaled_numerator(i), self.denominator)
    }
}

/// exp(2 pi i j / l) for 0 <= j < l.
pub fn root_of_unity(j: u64, l: u64) -> Complex64 {
    let (sin, cos) = (std::f64::consts::TAU * (j as f64 / l as f64)).sin_cos();
    Complex64::new(cos, sin)
}

/// p^{-s} with a double-double phase.
pub fn prime_power_neg(p: u64, s: Complex64) -> Complex64 {
    int_pow_neg(ln_dd(p), s)
}

/// -Log(1 - w), principal branch, accurate for small |w|.
#[inline]
pub fn neg_log_one_minus(w: Complex64) -> Complex64 {
    let re = -0.5 * (-2.0 * w.re + w.norm_sqr()).ln_1p();
    let im = -(-w.im).atan2(1.0 - w.re);
    Complex64::new(re, im)
}

/// prod_{p in M} (1 - e(c theta_p) p^{-s})^{-1}.
pub fn euler_product(s: Complex64, phases: &PhaseAssignment) -> Result<Complex64> {
    if !(s.re > 0.0) {
        return Err(Error::OutOfRange(format!("Re s = {} must be positive", s.re)));
    }
    let mut acc = Complex64::new(1.0, 0.0);
    for i in 0..phases.len() {
        let w = phases.unit(i) * prime_power_neg(phases.primes[i], s);
        acc /= Complex64::new(1.0, 0.0) - w;
    }
    Ok(acc)
}

/// sum_{p in M} -Log(1 - e(c theta_p) p^{-s}), principal log per factor.
pub fn log_euler_product(s: Complex64, phases: &PhaseAssignment) -> Result<Complex64> {
    if !(s.re > 0.5) {
        return Err(Error::OutOfRange(format!("Re s = {} must exceed 1/2", s.re)));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..phases.len() {
        let w = phases.unit(i) * prime_power_neg(phases.primes[i], s);
        acc += neg_log_one_minus(w);
    }
    Ok(acc)
}

/// Closed-form bound sum_{n>y} n^{-exponent} <= y^{1-exponent} / (exponent - 1).
pub fn dirichlet_tail(y: f64, exponent: f64) -> Result<f64> {
    if !(y >= 1.0) {
        return Err(Error::InvalidParameter(format!("tail start y = {y} must be >= 1")));
    }
    if !(exponent > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "tail exponent {exponent} must exceed 1 (series diverges)"
        )));
    }
    Ok(y.powf(1.0 - exponent) / (exponent - 1.0))
}

/// Bound on sum_{n>y} n^{-2 sigma}, the mean-square tail of a truncated Euler product.
pub fn tail_bound(y: f64, sigma: f64) -> Result<f64> {
    if !(y >= 2.0) {
        return Err(Error::InvalidParameter(format!("y = {y} must be >= 2")));
    }
    if !(sigma > 0.5) {
        return Err(Error::InvalidParameter(format!(
            "sigma = {sigma} <= 1/2: the tail bound diverges"
        )));
    }
    if !(sigma < 1.0) {
        return Err(Error::InvalidParameter(format!("sigma = {sigma} outside the strip (1/2, 1)")));
    }
    dirichlet_tail(y, 2.0 * sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primes::primes_up_to;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zeta_two() {
        let z = zeta(c(2.0, 0.0), 1e-12).unwrap();
        assert!((z.value.re - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-12);
        assert!(z.value.im.abs() < 1e-15);
        assert!(z.error_bound <= 1e-12);
    }

    #[test]
    fn zeta_rejects_pole_and_range() {
        assert_eq!(zeta(c(1.0, 0.0), 1e-10), Err(Error::Pole));
        assert!(matches!(zeta(c(0.75, 2.0e7), 1e-10), Err(Error::OutOfRange(_))));
        assert!(matches!(zeta(c(0.3, 1.0), 1e-10), Err(Error::OutOfRange(_))));
        assert!(matches!(zeta(c(0.75, 1.0), 1e-15), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn batch_matches_single() {
        let pts = [c(0.7, 10.0), c(0.8, 10.0), c(0.7, 10.5), c(0.9, -3.0)];
        let many = zeta_many(&pts, 1e-12).unwrap();
        for (s, z) in pts.iter().zip(&many) {
            let single = zeta(*s, 1e-12).unwrap();
            assert!((single.value - z.value).norm() < 2e-12);
        }
    }

    #[test]
    fn euler_product_single_prime() {
        let p = PhaseAssignment::new(vec![2], vec![0], 1).unwrap();
        assert!((euler_product(c(1.0, 0.0), &p).unwrap() - c(2.0, 0.0)).norm() < 1e-15);
        let p = PhaseAssignment::new(vec![2], vec![1], 2).unwrap();
        assert!((euler_product(c(1.0, 0.0), &p).unwrap() - c(2.0 / 3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn log_euler_product_values() {
        assert_eq!(log_euler_product(c(2.0, 0.0), &PhaseAssignment::empty()).unwrap(), c(0.0, 0.0));
        let p = PhaseAssignment::zeros(vec![2]).unwrap();
        let v = log_euler_product(c(2.0, 0.0), &p).unwrap();
        // -ln(3/4), computed directly
        let direct = -(0.75f64).ln();
        assert!((v.re - direct).abs() < 1e-15 && v.im.abs() < 1e-16);
        assert!((v.re - 0.287_682_072_451_780_9).abs() < 1e-15);
    }

    #[test]
    fn euler_product_at_two_within_tail() {
        let p = PhaseAssignment::zeros(primes_up_to(10_000)).unwrap();
        let v = euler_product(c(2.0, 0.0), &p).unwrap();
        let gap = (v - c(std::f64::consts::PI.powi(2) / 6.0, 0.0)).norm();
        assert!(gap <= dirichlet_tail(1.0e4, 2.0).unwrap());
    }

    #[test]
    fn phase_periodicity_is_exact() {
        let a = PhaseAssignment::new(vec![2, 3, 5], vec![1, 5, 7], 8).unwrap();
        let b = PhaseAssignment::new(vec![2, 3, 5], vec![9, 13, 15], 8).unwrap();
        let s = c(0.7, 3.3);
        let d = (euler_product(s, &a).unwrap() - euler_product(s, &b).unwrap()).norm();
        assert!(d <= 1e-15);
        assert_eq!(a, b);
    }

    #[test]
    fn phase_assignment_validation() {
        assert!(PhaseAssignment::new(vec![3, 2], vec![0, 0], 2).is_err());
        assert!(PhaseAssignment::new(vec![2, 4], vec![0, 0], 2).is_err());
        assert!(PhaseAssignment::new(vec![2], vec![0, 1], 2).is_err());
        assert!(PhaseAssignment::new(vec![2], vec![0], 0).is_err());
        let p = PhaseAssignment::new(vec![2, 3], vec![-1, 5], 4).unwrap();
        assert_eq!(p.numerators(), &[3, 1]);
        let q = p.scaled(-3).unwrap();
        assert_eq!(q.scaled_numerator(0), 3); // -9 mod 4
        assert!(p.scaled(0).is_err());
    }

    #[test]
    fn tail_bound_closed_form() {
        assert!((tail_bound(100.0, 0.75).unwrap() - 0.2).abs() < 1e-15);
        assert!(tail_bound(1e4, 0.75).unwrap() < tail_bound(1e2, 0.75).unwrap());
        assert!(tail_bound(100.0, 0.5).is_err());
        assert!(tail_bound(1.0, 0.75).is_err());
    }

    #[test]
    fn tail_bound_dominates_partial_sums() {
        for &y in &[100.0f64, 1000.0] {
            for &sigma in &[0.6f64, 0.75, 0.9] {
                let partial: f64 = ((y as u64 + 1)..=1_000_000u64)
                    .map(|n| (n as f64).powf(-2.0 * sigma))
                    .sum();
                assert!(partial <= tail_bound(y, sigma).unwrap(), "y={y} sigma={sigma}");
            }
        }
    }
}
