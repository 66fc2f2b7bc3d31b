//! Type-1 non-uniform FFT on the circle.
//!
//! Computes `F_j = sum_n a_n exp(-i j x_n)` for `j = 0..len` and arbitrary
//! frequencies `x_n` in `[0, 2 pi)`, by spreading onto an oversampled uniform
//! grid with an "exponential of semicircle" kernel, one FFT, and a diagonal
//! correction. Several coefficient streams that share the same frequencies
//! reuse one set of kernel weights.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Kernel width in fine-grid points; relative accuracy is about 10^(1 - WIDTH).
pub const WIDTH: usize = 13;
const BETA_PER_WIDTH: f64 = 2.30;

pub struct Plan {
    len: usize,
    fine: usize,
    beta: f64,
    half_width: f64,
    grid_step: f64,
    /// hg / phi_hat(k) for k = -len/2 .. len/2, indexed by j = k + len/2
    correction: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

/// Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

impl Plan {
    /// Plan for `len` output modes (`len` even).
    pub fn new(len: usize) -> Self {
        assert!(len >= 2 && len % 2 == 0, "output length must be even");
        let fine = (2 * len).next_power_of_two().max(2 * WIDTH);
        let beta = BETA_PER_WIDTH * WIDTH as f64;
        let grid_step = TAU / fine as f64;
        let half_width = WIDTH as f64 * grid_step / 2.0;
        let (nodes, weights) = gauss_legendre(4 * WIDTH + 20);
        let kernel: Vec<f64> = nodes
            .iter()
            .map(|z| (beta * ((1.0 - z * z).sqrt() - 1.0)).exp())
            .collect();
        let correction = (0..len)
            .map(|j| {
                let k = j as f64 - (len / 2) as f64;
                let ft: f64 = nodes
                    .iter()
                    .zip(&weights)
                    .zip(&kernel)
                    .map(|((z, w), kv)| w * kv * (k * half_width * z).cos())
                    .sum::<f64>()
                    * half_width;
                grid_step / ft
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(fine);
        Plan { len, fine, beta, half_width, grid_step, correction, fft }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Accumulator for `streams` coefficient sets.
    pub fn spreader(&self, streams: usize) -> Spreader<'_> {
        Spreader { plan: self, grids: vec![vec![Complex64::new(0.0, 0.0); self.fine]; streams] }
    }
}

pub struct Spreader<'a> {
    plan: &'a Plan,
    grids: Vec<Vec<Complex64>>,
}

impl Spreader<'_> {
    /// Add one frequency `x` in [0, 2 pi) with coefficient `coef[p]` for stream p.
    pub fn add(&mut self, x: f64, coef: &[Complex64]) {
        let plan = self.plan;
        let half = (plan.len / 2) as f64;
        // shift so that outputs j = 0..len map to centred modes
        let (sin, cos) = (-(half * x) % TAU).sin_cos();
        let shift = Complex64::new(cos, sin);
        let first = ((x - plan.half_width) / plan.grid_step).ceil() as i64;
        let mut weights = [0.0f64; WIDTH + 1];
        let mut count = 0;
        for (i, w) in weights.iter_mut().enumerate() {
            let z = ((first + i as i64) as f64 * plan.grid_step - x) / plan.half_width;
            if z.abs() >= 1.0 {
                break;
            }
            *w = (plan.beta * ((1.0 - z * z).sqrt() - 1.0)).exp();
            count = i + 1;
        }
        let fine = plan.fine as i64;
        for (grid, &a) in self.grids.iter_mut().zip(coef) {
            let a = a * shift;
            for (i, &w) in weights[..count].iter().enumerate() {
                let idx = (first + i as i64).rem_euclid(fine) as usize;
                grid[idx] += a * w;
            }
        }
    }

    /// Outputs `F_j` for each stream.
    pub fn finish(self) -> Vec<Vec<Complex64>> {
        let plan = self.plan;
        let half = plan.len / 2;
        self.grids
            .into_iter()
            .map(|mut grid| {
                plan.fft.process(&mut grid);
                (0..plan.len)
                    .map(|j| {
                        let idx = if j >= half { j - half } else { plan.fine + j - half };
                        grid[idx] * plan.correction[j]
                    })
                    .collect()
            })
            .collect()
    }
}
