//! Rectangular domains in the strip, their quadrature grids, target
//! functions, least-squares polynomial approximation and continuous
//! logarithm branches.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default distance between K and the boundary of the quadrature region U.
pub const DEFAULT_MARGIN: f64 = 0.02;
/// Condition-number ceiling for the least-squares fit.
pub const MAX_CONDITION: f64 = 1e12;

/// A compact rectangle K in 1/2 < Re s < 1 together with an enclosing
/// rectangle U carrying a tensor midpoint rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub u_sigma_lo: f64,
    pub u_sigma_hi: f64,
    pub u_t_lo: f64,
    pub u_t_hi: f64,
    /// Nodes per axis (sigma, t).
    pub resolution: usize,
    pub grid_nodes: Vec<Complex64>,
    pub grid_weights: Vec<f64>,
    /// Distance from K to the boundary of U.
    pub margin: f64,
}

/// Midpoint-rule domain with the default margin.
pub fn build_domain(sigma_lo: f64, sigma_hi: f64, t_lo: f64, t_hi: f64, resolution: usize) -> Result<Domain> {
    Domain::with_margin(sigma_lo, sigma_hi, t_lo, t_hi, resolution, DEFAULT_MARGIN)
}

impl Domain {
    pub fn with_margin(
        sigma_lo: f64,
        sigma_hi: f64,
        t_lo: f64,
        t_hi: f64,
        resolution: usize,
        margin: f64,
    ) -> Result<Domain> {
        if ![sigma_lo, sigma_hi, t_lo, t_hi, margin].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidDomain("non-finite bounds".into()));
        }
        if sigma_lo >= sigma_hi || t_lo >= t_hi {
            return Err(Error::EmptyInterior(format!(
                "K = [{sigma_lo}, {sigma_hi}] x [{t_lo}, {t_hi}]"
            )));
        }
        if sigma_lo <= 0.5 || sigma_hi >= 1.0 {
            return Err(Error::InvalidDomain(format!(
                "K = [{sigma_lo}, {sigma_hi}] must lie strictly inside 1/2 < Re s < 1"
            )));
        }
        if resolution < 4 {
            return Err(Error::InvalidParameter(format!("resolution {resolution} < 4")));
        }
        if !(margin > 0.0) {
            return Err(Error::InvalidParameter(format!("margin {margin} must be positive")));
        }
        // clip U halfway to the strip edges
        let u_sigma_lo = (sigma_lo - margin).max(0.5 * (sigma_lo + 0.5));
        let u_sigma_hi = (sigma_hi + margin).min(0.5 * (sigma_hi + 1.0));
        let u_t_lo = t_lo - margin;
        let u_t_hi = t_hi + margin;
        let actual_margin = (sigma_lo - u_sigma_lo)
            .min(u_sigma_hi - sigma_hi)
            .min(t_lo - u_t_lo)
            .min(u_t_hi - t_hi);

        let hs = (u_sigma_hi - u_sigma_lo) / resolution as f64;
        let ht = (u_t_hi - u_t_lo) / resolution as f64;
        let mut grid_nodes = Vec::with_capacity(resolution * resolution);
        for iy in 0..resolution {
            let t = u_t_lo + (iy as f64 + 0.5) * ht;
            for ix in 0..resolution {
                let sigma = u_sigma_lo + (ix as f64 + 0.5) * hs;
                grid_nodes.push(Complex64::new(sigma, t));
            }
        }
        let grid_weights = vec![hs * ht; grid_nodes.len()];
        Ok(Domain {
            sigma_lo,
            sigma_hi,
            t_lo,
            t_hi,
            u_sigma_lo,
            u_sigma_hi,
            u_t_lo,
            u_t_hi,
            resolution,
            grid_nodes,
            grid_weights,
            margin: actual_margin,
        })
    }

    pub fn len(&self) -> usize {
        self.grid_nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid_nodes.is_empty()
    }

    pub fn area_u(&self) -> f64 {
        (self.u_sigma_hi - self.u_sigma_lo) * (self.u_t_hi - self.u_t_lo)
    }

    pub fn k_centroid(&self) -> Complex64 {
        Complex64::new(0.5 * (self.sigma_lo + self.sigma_hi), 0.5 * (self.t_lo + self.t_hi))
    }

    pub fn contains_k(&self, s: Complex64) -> bool {
        (self.sigma_lo..=self.sigma_hi).contains(&s.re) && (self.t_lo..=self.t_hi).contains(&s.im)
    }

    /// K symmetric about the real axis.
    pub fn k_is_symmetric(&self) -> bool {
        (self.t_lo + self.t_hi).abs() <= 1e-15 * (self.t_hi - self.t_lo).abs()
    }

    /// Indices of grid nodes lying in K.
    pub fn k_subgrid(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.contains_k(self.grid_nodes[i])).collect()
    }

    /// Quadrature-node neighbours (4-connectivity).
    pub fn neighbors(&self, idx: usize) -> impl Iterator<Item = usize> {
        let r = self.resolution;
        let (ix, iy) = (idx % r, idx / r);
        let mut out = [usize::MAX; 4];
        if ix > 0 {
            out[0] = idx - 1;
        }
        if ix + 1 < r {
            out[1] = idx + 1;
        }
        if iy > 0 {
            out[2] = idx - r;
        }
        if iy + 1 < r {
            out[3] = idx + r;
        }
        out.into_iter().filter(|&i| i != usize::MAX)
    }

    /// Node closest to the centroid of K; ties go to the lowest index.
    pub fn anchor_index(&self) -> usize {
        let c = self.k_centroid();
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, s) in self.grid_nodes.iter().enumerate() {
            let d = (s - c).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Uniform grid on closed K, corners included. The base spacing follows
    /// the quadrature nodes that fall in K; `refine` subdivides it, and
    /// coarser grids are subsets of finer ones.
    pub fn k_grid(&self, refine: usize) -> Vec<Complex64> {
        let refine = refine.max(1);
        let hs = (self.u_sigma_hi - self.u_sigma_lo) / self.resolution as f64;
        let ht = (self.u_t_hi - self.u_t_lo) / self.resolution as f64;
        let base_s = (((self.sigma_hi - self.sigma_lo) / hs).round() as usize).max(1);
        let base_t = (((self.t_hi - self.t_lo) / ht).round() as usize).max(1);
        let ns = base_s * refine + 1;
        let nt = base_t * refine + 1;
        let mut out = Vec::with_capacity(ns * nt);
        for iy in 0..nt {
            let t = lerp(self.t_lo, self.t_hi, iy, nt);
            for ix in 0..ns {
                let sigma = lerp(self.sigma_lo, self.sigma_hi, ix, ns);
                out.push(Complex64::new(sigma, t));
            }
        }
        out
    }

    /// Weighted integral of samples over U.
    pub fn integrate(&self, values: &[Complex64]) -> Result<Complex64> {
        if values.len() != self.len() {
            return Err(Error::GridMismatch(format!("{} samples for {} nodes", values.len(), self.len())));
        }
        Ok(values.iter().zip(&self.grid_weights).map(|(v, w)| v * *w).sum())
    }

    /// Samples of `f` at the quadrature nodes.
    pub fn sample<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Vec<Complex64> {
        self.grid_nodes.iter().map(|&s| f(s)).collect()
    }
}

fn lerp(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    if i + 1 == n {
        hi
    } else {
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    }
}

/// Polynomial in the scaled variable `(s - center) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub center: Complex64,
    pub scale: f64,
    pub coeffs: Vec<Complex64>,
}

impl Polynomial {
    pub fn constant(c: Complex64) -> Self {
        Polynomial { center: Complex64::new(0.0, 0.0), scale: 1.0, coeffs: vec![c] }
    }

    /// From coefficients of 1, s, s^2, ...
    pub fn from_monomial(coeffs: Vec<Complex64>) -> Self {
        Polynomial { center: Complex64::new(0.0, 0.0), scale: 1.0, coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        let w = (s - self.center) / self.scale;
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * w + c)
    }

    /// Coefficients of 1, s, s^2, ... (binomial expansion of the scaled form).
    pub fn monomial_coefficients(&self) -> Vec<Complex64> {
        let d = self.coeffs.len();
        let mut out = vec![Complex64::new(0.0, 0.0); d];
        let shift = -self.center;
        for (k, ck) in self.coeffs.iter().enumerate() {
            // ck / scale^k * (s + shift)^k
            let lead = ck / self.scale.powi(k as i32);
            let mut binom = 1.0f64;
            for j in 0..=k {
                // coefficient of s^j in (s + shift)^k is C(k, j) shift^{k-j}
                out[j] += lead * binom * shift.powu((k - j) as u32);
                binom = binom * (k - j) as f64 / (j + 1) as f64;
            }
        }
        out
    }
}

/// Result of a least-squares polynomial fit.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyFit {
    pub poly: Polynomial,
    /// sqrt(sum_i w_i |P(s_i) - f_i|^2)
    pub l2_residual: f64,
    pub sup_residual: f64,
    pub condition: f64,
}

impl PolyFit {
    pub fn coefficients(&self) -> Vec<Complex64> {
        self.poly.monomial_coefficients()
    }
}

/// Weighted least-squares polynomial of the given degree through the samples.
pub fn fit_polynomial(
    nodes: &[Complex64],
    weights: &[f64],
    samples: &[Complex64],
    degree: usize,
) -> Result<PolyFit> {
    if nodes.len() != samples.len() || nodes.len() != weights.len() {
        return Err(Error::GridMismatch(format!(
            "{} nodes, {} weights, {} samples",
            nodes.len(),
            weights.len(),
            samples.len()
        )));
    }
    if nodes.len() < degree + 1 {
        return Err(Error::InvalidParameter(format!(
            "degree {degree} needs at least {} samples, got {}",
            degree + 1,
            nodes.len()
        )));
    }
    let wsum: f64 = weights.iter().sum();
    let center = nodes.iter().zip(weights).map(|(s, w)| s * *w).sum::<Complex64>() / wsum;
    let scale = nodes.iter().map(|s| (s - center).norm()).fold(0.0, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };

    let rows = nodes.len();
    let cols = degree + 1;
    let mut a = DMatrix::<Complex64>::zeros(rows, cols);
    let mut rhs = DVector::<Complex64>::zeros(rows);
    for i in 0..rows {
        let sw = weights[i].sqrt();
        let w = (nodes[i] - center) / scale;
        let mut p = Complex64::new(sw, 0.0);
        for k in 0..cols {
            a[(i, k)] = p;
            p *= w;
        }
        rhs[i] = samples[i] * sw;
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let x = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::Internal(format!("least-squares solve failed: {e}")))?;
    let poly = Polynomial { center, scale, coeffs: x.iter().cloned().collect() };
    let mut l2 = 0.0;
    let mut sup = 0.0f64;
    for i in 0..rows {
        let r = (poly.eval(nodes[i]) - samples[i]).norm();
        l2 += weights[i] * r * r;
        sup = sup.max(r);
    }
    Ok(PolyFit { poly, l2_residual: l2.sqrt(), sup_residual: sup, condition })
}

/// Continuous logarithm of non-vanishing samples on the domain grid.
///
/// The branch is anchored at the principal logarithm of the node nearest to
/// the centroid of K and continued breadth-first across neighbouring nodes.
/// Every grid edge is then checked: a phase change of pi or more means the
/// grid is too coarse or the samples wind around zero.
pub fn log_branch(domain: &Domain, samples: &[Complex64]) -> Result<Vec<Complex64>> {
    if samples.len() != domain.len() {
        return Err(Error::GridMismatch(format!("{} samples for {} nodes", samples.len(), domain.len())));
    }
    if let Some(i) = samples.iter().position(|f| !(f.norm() > 0.0) || !f.is_finite()) {
        return Err(Error::VanishingTarget(i));
    }
    let n = samples.len();
    let anchor = domain.anchor_index();
    let mut g = vec![Complex64::new(f64::NAN, f64::NAN); n];
    let mut seen = vec![false; n];
    g[anchor] = samples[anchor].ln();
    seen[anchor] = true;
    let mut queue = VecDeque::from([anchor]);
    while let Some(u) = queue.pop_front() {
        for v in domain.neighbors(u) {
            if seen[v] {
                continue;
            }
            let step = (samples[v] / samples[u]).arg();
            g[v] = Complex64::new(samples[v].norm().ln(), g[u].im + step);
            seen[v] = true;
            queue.push_back(v);
        }
    }
    for u in 0..n {
        for v in domain.neighbors(u) {
            let jump = (g[v].im - g[u].im).abs();
            if jump >= std::f64::consts::PI * (1.0 - 1e-12) {
                return Err(Error::BranchJump { from: u, to: v, jump });
            }
        }
    }
    Ok(g)
}

/// A target function on the domain.
#[derive(Clone)]
pub enum TargetFn {
    Polynomial(Polynomial),
    Custom { name: String, f: Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync> },
}

impl fmt::Debug for TargetFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetFn::Polynomial(p) => f.debug_tuple("Polynomial").field(&p.monomial_coefficients()).finish(),
            TargetFn::Custom { name, .. } => f.debug_struct("Custom").field("name", name).finish(),
        }
    }
}

impl TargetFn {
    pub fn constant(c: Complex64) -> Self {
        TargetFn::Polynomial(Polynomial::constant(c))
    }

    pub fn custom<F>(name: &str, f: F) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        TargetFn::Custom { name: name.to_string(), f: Arc::new(f) }
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        match self {
            TargetFn::Polynomial(p) => p.eval(s),
            TargetFn::Custom { f, .. } => f(s),
        }
    }

    pub fn label(&self) -> String {
        match self {
            TargetFn::Polynomial(p) => {
                let cs: Vec<String> =
                    p.monomial_coefficients().iter().map(|c| format!("{}{:+}i", c.re, c.im)).collect();
                format!("poly[{}]", cs.join(";"))
            }
            TargetFn::Custom { name, .. } => name.clone(),
        }
    }
}

/// Reject scale pairs the joint theorem excludes.
pub fn validate_scales(a: i64, b: i64) -> Result<()> {
    if a == 0 || b == 0 || a == b || a == -b {
        return Err(Error::DegenerateScales { a, b });
    }
    Ok(())
}

/// Two targets with their samples and logarithm branches on the domain grid.
#[derive(Debug, Clone)]
pub struct TargetPair {
    pub a: i64,
    pub b: i64,
    pub f_a: TargetFn,
    pub f_b: TargetFn,
    pub samples_a: Vec<Complex64>,
    pub samples_b: Vec<Complex64>,
    pub log_a: Vec<Complex64>,
    pub log_b: Vec<Complex64>,
}

impl TargetPair {
    pub fn new(domain: &Domain, a: i64, b: i64, f_a: TargetFn, f_b: TargetFn) -> Result<Self> {
        validate_scales(a, b)?;
        let samples_a = domain.sample(|s| f_a.eval(s));
        let samples_b = domain.sample(|s| f_b.eval(s));
        let log_a = log_branch(domain, &samples_a)?;
        let log_b = log_branch(domain, &samples_b)?;
        Ok(TargetPair { a, b, f_a, f_b, samples_a, samples_b, log_a, log_b })
    }

    pub fn target(&self, which: Which) -> &TargetFn {
        match which {
            Which::A => &self.f_a,
            Which::B => &self.f_b,
        }
    }

    pub fn scale(&self, which: Which) -> i64 {
        match which {
            Which::A => self.a,
            Which::B => self.b,
        }
    }

    /// max |f_c| over the given points, both targets.
    pub fn max_abs_on(&self, points: &[Complex64]) -> f64 {
        points
            .iter()
            .map(|&s| self.f_a.eval(s).norm().max(self.f_b.eval(s).norm()))
            .fold(0.0, f64::max)
    }

    /// Samples and logs in the plain-text exchange layout.
    pub fn export(&self, domain: &Domain) -> TargetSamples {
        let pairs = |v: &[Complex64]| v.iter().map(|z| [z.re, z.im]).collect();
        TargetSamples {
            a: self.a,
            b: self.b,
            label_a: self.f_a.label(),
            label_b: self.f_b.label(),
            nodes: pairs(&domain.grid_nodes),
            weights: domain.grid_weights.clone(),
            f_a: pairs(&self.samples_a),
            f_b: pairs(&self.samples_b),
            g_a: pairs(&self.log_a),
            g_b: pairs(&self.log_b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    A,
    B,
}

/// Target samples as arrays of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSamples {
    pub a: i64,
    pub b: i64,
    pub label_a: String,
    pub label_b: String,
    pub nodes: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub f_a: Vec<[f64; 2]>,
    pub f_b: Vec<[f64; 2]>,
    pub g_a: Vec<[f64; 2]>,
    pub g_b: Vec<[f64; 2]>,
}
