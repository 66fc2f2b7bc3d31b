//! LLL reduction over exact integers (integral variant: all Gram–Schmidt data
//! kept as integer subdeterminants, no rational arithmetic).

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Nearest integer to n / d for d > 0, halves rounded up.
fn round_div(n: &BigInt, d: &BigInt) -> BigInt {
    let two = BigInt::from(2);
    (n * &two + d).div_floor(&(d * &two))
}

/// LLL-reduce the rows of `basis` with Lovász parameter `num/den`.
///
/// Rows must be linearly independent. The result spans the same lattice.
pub fn lll_reduce(basis: &[Vec<BigInt>], num: u32, den: u32) -> Result<Vec<Vec<BigInt>>> {
    let n = basis.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let dim = basis[0].len();
    if basis.iter().any(|r| r.len() != dim) {
        return Err(Error::InvalidParameter("basis rows differ in length".into()));
    }
    if !(4 * num > den && num <= den) {
        return Err(Error::InvalidParameter(format!("Lovász parameter {num}/{den} outside (1/4, 1]")));
    }
    let mut b: Vec<Vec<BigInt>> = basis.to_vec();
    // d[i + 1] is the Gram determinant of the first i + 1 rows; d[0] = 1
    let mut d = vec![BigInt::zero(); n + 1];
    let mut lam = vec![vec![BigInt::zero(); n]; n];
    d[0] = BigInt::from(1);
    d[1] = dot(&b[0], &b[0]);
    if d[1].is_zero() {
        return Err(Error::InvalidParameter("zero basis vector".into()));
    }
    let (num, den) = (BigInt::from(num), BigInt::from(den));
    let mut k = 1usize;
    let mut kmax = 0usize;

    let red = |b: &mut Vec<Vec<BigInt>>, lam: &mut Vec<Vec<BigInt>>, d: &[BigInt], k: usize, l: usize| {
        let two_abs = lam[k][l].abs() * 2;
        if two_abs > d[l + 1] {
            let q = round_div(&lam[k][l], &d[l + 1]);
            let bl = b[l].clone();
            for (x, y) in b[k].iter_mut().zip(&bl) {
                *x -= &q * y;
            }
            lam[k][l] -= &q * &d[l + 1];
            for i in 0..l {
                let t = &q * &lam[l][i];
                lam[k][i] -= t;
            }
        }
    };

    while k < n {
        if k > kmax {
            kmax = k;
            for j in 0..=k {
                let mut u = dot(&b[k], &b[j]);
                for i in 0..j {
                    u = (&d[i + 1] * &u - &lam[k][i] * &lam[j][i]) / &d[i];
                }
                if j < k {
                    lam[k][j] = u;
                } else {
                    if u.is_zero() {
                        return Err(Error::InvalidParameter("basis rows are linearly dependent".into()));
                    }
                    d[k + 1] = u;
                }
            }
        }
        red(&mut b, &mut lam, &d, k, k - 1);
        // Lovász: d_k d_{k-2} >= c d_{k-1}^2 - lambda^2
        let lhs = &den * &d[k + 1] * &d[k - 1];
        let rhs = &num * &d[k] * &d[k] - &den * &lam[k][k - 1] * &lam[k][k - 1];
        if lhs < rhs {
            b.swap(k, k - 1);
            for j in 0..k - 1 {
                let t = lam[k][j].clone();
                lam[k][j] = lam[k - 1][j].clone();
                lam[k - 1][j] = t;
            }
            let l = lam[k][k - 1].clone();
            let bb = (&d[k - 1] * &d[k + 1] + &l * &l) / &d[k];
            for i in k + 1..=kmax {
                let t = lam[i][k].clone();
                lam[i][k] = (&d[k + 1] * &lam[i][k - 1] - &l * &t) / &d[k];
                lam[i][k - 1] = (&bb * &t + &l * &lam[i][k]) / &d[k + 1];
            }
            d[k] = bb;
            if k > 1 {
                k -= 1;
            }
        } else {
            for l in (0..k - 1).rev() {
                red(&mut b, &mut lam, &d, k, l);
            }
            k += 1;
        }
    }
    Ok(b)
}

/// Rows of small integers as big integers.
pub fn to_big(rows: &[Vec<i128>]) -> Vec<Vec<BigInt>> {
    rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
}

/// Convert back, failing if an entry does not fit.
pub fn to_i128(rows: &[Vec<BigInt>]) -> Result<Vec<Vec<i128>>> {
    rows.iter()
        .map(|r| {
            r.iter()
                .map(|x| i128::try_from(x).map_err(|_| Error::Internal("reduced entry exceeds i128".into())))
                .collect()
        })
        .collect()
}
