//! Zeta along arithmetic progressions of vertical shifts.
//!
//! Scans need `zeta(s_p + i c tau_j)` for many points `s_p` and a long run of
//! equally spaced `tau_j = tau0 + j h`. The Euler-Maclaurin main sum over
//! `n < N` is a trigonometric sum in `j` with frequencies `c h ln n`, which a
//! type-1 NUFFT evaluates for a whole chunk at once; the correction terms are
//! added per sample.

use num_complex::Complex64;

use super::ddlog::{log_table, reduced_phase};
use super::nufft::{self, Plan};
use super::{check_point, em_correction, em_plan};
use crate::error::{Error, Result};

/// Values on a chunk: `value(j, p)` for sample j and point p.
#[derive(Debug, Clone)]
pub struct ProgressionValues {
    values: Vec<Complex64>,
    points: usize,
    pub error_bound: f64,
}

impl ProgressionValues {
    pub fn value(&self, j: usize, p: usize) -> Complex64 {
        self.values[j * self.points + p]
    }

    pub fn samples(&self) -> usize {
        self.values.len() / self.points.max(1)
    }

    pub fn row(&self, j: usize) -> &[Complex64] {
        &self.values[j * self.points..(j + 1) * self.points]
    }
}

/// `zeta(s_p + i c (tau0 + j h))` for `j in 0..plan.len()` and every point.
pub fn zeta_progression(
    plan: &Plan,
    points: &[Complex64],
    c: f64,
    tau0: f64,
    h: f64,
    target_abs_err: f64,
) -> Result<ProgressionValues> {
    let len = plan.len();
    if points.is_empty() {
        return Err(Error::InvalidParameter("no evaluation points".into()));
    }
    let shift = |s: Complex64, tau: f64| Complex64::new(s.re, s.im + c * tau);
    let tau_end = tau0 + (len - 1) as f64 * h;
    let extremes: Vec<Complex64> = points
        .iter()
        .flat_map(|&s| [shift(s, tau0), shift(s, tau_end)])
        .collect();
    for &s in &extremes {
        check_point(s)?;
    }
    let em = em_plan(&extremes, 0.5 * target_abs_err)?;
    let table = log_table(em.n);

    let mut sigmas: Vec<f64> = Vec::new();
    let mut heights: Vec<f64> = Vec::new();
    let index: Vec<(usize, usize)> = points
        .iter()
        .map(|s| {
            let i = super::position_or_push(&mut sigmas, s.re);
            let j = super::position_or_push(&mut heights, s.im + c * tau0);
            (i, j)
        })
        .collect();

    let mut spreader = plan.spreader(points.len());
    let mut mags = vec![0.0; sigmas.len()];
    let mut phasors = vec![Complex64::new(0.0, 0.0); heights.len()];
    let mut coef = vec![Complex64::new(0.0, 0.0); points.len()];
    let mut abs_sum = 0.0f64;
    let step = c * h;
    for n in 1..em.n {
        let l = table[n];
        for (m, &sg) in mags.iter_mut().zip(&sigmas) {
            *m = (-sg * l.hi).exp();
        }
        for (ph, &t) in phasors.iter_mut().zip(&heights) {
            let (sin, cos) = reduced_phase(t, l).sin_cos();
            *ph = Complex64::new(cos, -sin);
        }
        for (k, &(i, j)) in index.iter().enumerate() {
            coef[k] = phasors[j] * mags[i];
        }
        abs_sum += mags.iter().cloned().fold(0.0, f64::max);
        let mut x = reduced_phase(step, l);
        if x < 0.0 {
            x += std::f64::consts::TAU;
        }
        spreader.add(x, &coef);
    }
    let sums = spreader.finish();

    let ln_n = table[em.n];
    let mut values = Vec::with_capacity(len * points.len());
    for j in 0..len {
        let tau = tau0 + j as f64 * h;
        for (p, &s) in points.iter().enumerate() {
            let sj = shift(s, tau);
            values.push(sums[p][j] + em_correction(sj, em.n, em.nu, ln_n));
        }
    }
    let spread_err = 10f64.powi(2 - nufft::WIDTH as i32) * abs_sum;
    Ok(ProgressionValues {
        values,
        points: points.len(),
        error_bound: em.truncation_bound + spread_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zetaeval::zeta;

    #[test]
    fn progression_matches_direct_evaluation() {
        let plan = Plan::new(512);
        let points = [Complex64::new(0.73, -0.03), Complex64::new(0.77, 0.03)];
        for &(c, tau0) in &[(1.0, 1000.0), (2.0, 3000.0), (-1.0, 250.0), (0.5, 10.0)] {
            let vals = zeta_progression(&plan, &points, c, tau0, 0.05, 1e-10).unwrap();
            assert!(vals.error_bound < 1e-9);
            for &j in &[0usize, 1, 255, 511] {
                for (p, s) in points.iter().enumerate() {
                    let t = s.im + c * (tau0 + j as f64 * 0.05);
                    let direct = zeta(Complex64::new(s.re, t), 1e-11).unwrap().value;
                    let d = (vals.value(j, p) - direct).norm();
                    assert!(d < 1e-9, "c={c} tau0={tau0} j={j} p={p} d={d:e}");
                }
            }
        }
    }
}
