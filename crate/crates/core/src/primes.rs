//! Small prime utilities.

/// All primes `<= limit`, by an odd-only sieve of Eratosthenes.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let limit = limit as usize;
    // index i stands for 2i+1
    let half = limit / 2 + 1;
    let mut composite = vec![false; half];
    let mut i = 1;
    while (2 * i + 1) * (2 * i + 1) <= limit {
        if !composite[i] {
            let p = 2 * i + 1;
            let mut j = p * p / 2;
            while j < half {
                composite[j] = true;
                j += p;
            }
        }
        i += 1;
    }
    let mut out = vec![2u64];
    out.extend(
        (1..half)
            .filter(|&i| !composite[i] && 2 * i + 1 <= limit)
            .map(|i| (2 * i + 1) as u64),
    );
    out
}

/// The first `count` primes.
pub fn first_primes(count: usize) -> Vec<u64> {
    if count == 0 {
        return Vec::new();
    }
    // p_n < n (ln n + ln ln n) for n >= 6
    let n = count.max(6) as f64;
    let bound = (n * (n.ln() + n.ln().ln())).ceil() as u64 + 10;
    let mut ps = primes_up_to(bound);
    ps.truncate(count);
    ps
}

/// Smallest prime strictly greater than `n`.
pub fn next_prime(n: u64) -> u64 {
    let mut c = n + 1;
    while !is_prime(c) {
        c += 1;
    }
    c
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sieve() {
        assert_eq!(primes_up_to(30), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert!(primes_up_to(1).is_empty());
        assert_eq!(primes_up_to(2), vec![2]);
    }

    #[test]
    fn prime_counts() {
        assert_eq!(primes_up_to(10_000).len(), 1229);
        assert_eq!(first_primes(2000).len(), 2000);
        assert_eq!(first_primes(2000)[1999], 17389);
        assert_eq!(next_prime(11), 13);
        assert_eq!(next_prime(1), 2);
    }

    #[test]
    fn sieve_agrees_with_trial_division() {
        let ps = primes_up_to(5000);
        let td: Vec<u64> = (0..=5000).filter(|&n| is_prime(n)).collect();
        assert_eq!(ps, td);
    }
}
