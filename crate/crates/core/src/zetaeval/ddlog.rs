//! Natural logarithms of integers in double-double precision.
//!
//! At height |t| ~ 10^6 the phase `t ln n` of a Dirichlet term loses about
//! nine digits if `ln n` is only known to binary64 precision. The table here
//! stores `ln n` as an unevaluated sum `hi + lo`, which keeps the reduced
//! phase accurate to a few ulps of pi.

use std::sync::{Arc, OnceLock, RwLock};

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

pub const TWO_PI_HI: f64 = std::f64::consts::TAU;
pub const TWO_PI_LO: f64 = 2.449_293_598_294_706_4e-16;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }

    pub fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p) + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn mul_f64(self, b: f64) -> Dd {
        let p = self.hi * b;
        let e = self.hi.mul_add(b, -p) + self.lo * b;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn div_f64(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        // remainder self - q1*b, exactly up to the lo part
        let p = q1 * b;
        let pe = q1.mul_add(b, -p);
        let r = ((self.hi - p) - pe) + self.lo;
        let q2 = r / b;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }
    }
}

/// `2 atanh(x)` for small positive `x`, in double-double.
fn two_atanh(x: Dd) -> Dd {
    let x2 = x.mul(x);
    let mut power = x;
    let mut sum = x;
    let mut k = 1u32;
    loop {
        power = power.mul(x2);
        let term = power.div_f64((2 * k + 1) as f64);
        sum = sum.add(term);
        if term.hi.abs() < 1e-34 * sum.hi.abs() {
            break;
        }
        k += 1;
    }
    sum.mul_f64(2.0)
}

fn build(len: usize, prefix: &[Dd]) -> Vec<Dd> {
    let mut table = Vec::with_capacity(len);
    table.extend_from_slice(prefix);
    if table.is_empty() {
        table.push(Dd::ZERO); // index 0 unused
    }
    if table.len() == 1 && len > 1 {
        table.push(Dd::ZERO); // ln 1
    }
    // smallest-prime-factor sieve over the whole range
    let mut spf = vec![0u32; len];
    for i in 2..len {
        if spf[i] == 0 {
            let mut j = i;
            while j < len {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
    }
    for n in table.len()..len {
        let q = spf[n] as usize;
        let v = if q == n {
            // ln p = ln(p-1) + 2 atanh(1/(2p-1))
            let x = Dd::from_f64(1.0).div_f64((2 * n - 1) as f64);
            table[n - 1].add(two_atanh(x))
        } else {
            table[q].add(table[n / q])
        };
        table.push(v);
    }
    table
}

fn slot() -> &'static RwLock<Arc<Vec<Dd>>> {
    static TABLE: OnceLock<RwLock<Arc<Vec<Dd>>>> = OnceLock::new();
    TABLE.get_or_init(|| RwLock::new(Arc::new(build(1 << 12, &[]))))
}

/// Shared table of `ln n` for `0 <= n <= max_n` (entry 0 is a placeholder).
pub fn log_table(max_n: usize) -> Arc<Vec<Dd>> {
    {
        let cur = slot().read().expect("log table lock poisoned");
        if cur.len() > max_n {
            return Arc::clone(&cur);
        }
    }
    let mut guard = slot().write().expect("log table lock poisoned");
    if guard.len() <= max_n {
        let want = (max_n + 1).max(guard.len() * 3 / 2);
        let grown = build(want, &guard);
        *guard = Arc::new(grown);
    }
    Arc::clone(&guard)
}

/// `ln n` in double-double.
pub fn ln_dd(n: u64) -> Dd {
    log_table(n as usize)[n as usize]
}

/// `t * l` reduced modulo 2 pi into (-pi, pi].
#[inline]
pub fn reduced_phase(t: f64, l: Dd) -> f64 {
    let p = t * l.hi;
    let e = t.mul_add(l.hi, -p) + t * l.lo;
    let k = (p / TWO_PI_HI).round();
    let r = (-k).mul_add(TWO_PI_HI, p);
    r - k * TWO_PI_LO + e
}

const FRAC_PI_2_HI: f64 = std::f64::consts::FRAC_PI_2;
const FRAC_PI_2_LO: f64 = 6.123_233_995_736_766e-17;
const SIN_COEFFS: [f64; 8] = [
    -1.0 / 6.0,
    1.0 / 120.0,
    -1.0 / 5040.0,
    1.0 / 362_880.0,
    -1.0 / 39_916_800.0,
    1.0 / 6_227_020_800.0,
    -1.0 / 1_307_674_368_000.0,
    1.0 / 355_687_428_096_000.0,
];
const COS_COEFFS: [f64; 8] = [
    1.0 / 24.0,
    -1.0 / 720.0,
    1.0 / 40_320.0,
    -1.0 / 3_628_800.0,
    1.0 / 479_001_600.0,
    -1.0 / 87_178_291_200.0,
    1.0 / 20_922_789_888_000.0,
    -1.0 / 6_402_373_705_728_000.0,
];

/// `(sin x, cos x)` for a phase already reduced to about [-pi, pi], within a
/// few ulps of the correctly rounded values.
#[inline]
pub fn sin_cos_reduced(x: f64) -> (f64, f64) {
    let q = (x * std::f64::consts::FRAC_2_PI).round();
    // |q| <= 2, so q * FRAC_PI_2_HI is exact
    let r = (x - q * FRAC_PI_2_HI) - q * FRAC_PI_2_LO;
    let r2 = r * r;
    let mut ps = SIN_COEFFS[7];
    let mut pc = COS_COEFFS[7];
    for k in (0..7).rev() {
        ps = ps * r2 + SIN_COEFFS[k];
        pc = pc * r2 + COS_COEFFS[k];
    }
    let sin = r + r * r2 * ps;
    let cos = (1.0 - 0.5 * r2) + r2 * r2 * pc;
    match (q as i64) & 3 {
        0 => (sin, cos),
        1 => (cos, -sin),
        2 => (-sin, -cos),
        _ => (-cos, sin),
    }
}

/// Fractional part of `t * l / (2 pi)`, in [0, 1).
pub fn turns_frac(t: f64, l: Dd) -> f64 {
    let f = reduced_phase(t, l) / TWO_PI_HI;
    let f = f - f.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_logs_match_f64() {
        let tab = log_table(5000);
        for n in 2..5000usize {
            let exact = (n as f64).ln();
            assert!((tab[n].to_f64() - exact).abs() <= 2.0 * f64::EPSILON * exact);
        }
    }

    #[test]
    fn ln2_to_double_double() {
        // ln 2 = 0.693147180559945309417232121458176568...
        let l = ln_dd(2);
        assert_eq!(l.hi, std::f64::consts::LN_2);
        let lo_ref = 2.319_046_813_846_299_6e-17;
        assert!((l.lo - lo_ref).abs() < 1e-30);
    }

    #[test]
    fn large_phase_reduction() {
        // 10^6 * ln 10 = 2302585.092994045684017991454684364...
        let l = ln_dd(10);
        let r = reduced_phase(1.0e6, l);
        // 2302585.0929940456840179914546843642 mod 2pi
        let k = (2_302_585.092_994_045_684_f64 / std::f64::consts::TAU).round();
        let approx = 2_302_585.092_994_045_684_f64 - k * std::f64::consts::TAU;
        assert!((r - approx).abs() < 1e-9);
        assert!(r.abs() <= std::f64::consts::PI + 1e-12);
    }

    #[test]
    fn sin_cos_kernel_matches_libm() {
        let mut worst = 0.0f64;
        for i in 0..=200_000 {
            let x = -3.3 + 6.6 * i as f64 / 200_000.0;
            let (s, c) = sin_cos_reduced(x);
            worst = worst.max((s - x.sin()).abs()).max((c - x.cos()).abs());
        }
        assert!(worst < 4.0 * f64::EPSILON, "{worst:e}");
    }

    #[test]
    fn table_growth_is_consistent() {
        let a = log_table(100)[97];
        let _ = log_table(300_000);
        let b = log_table(100)[97];
        assert_eq!(a, b);
        let t = log_table(300_000);
        let n = 299_999usize;
        assert!((t[n].to_f64() - (n as f64).ln()).abs() < 1e-14);
    }
}
