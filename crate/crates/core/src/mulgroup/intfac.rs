//! Integer factorization with certified primality, bounded for desk scale.
//!
//! Trial division by a sieved prime table, then Brent's cycle-finding rho
//! with a deterministic parameter schedule, so results are reproducible
//! without an RNG. Primality is certified by deterministic Miller–Rabin
//! below the published 12-base bound (~3.3e24); anything larger fails
//! loudly instead of returning an uncertified answer.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Bounds for factorization; exceeding any of them is a loud error rather
/// than a wrong answer.
#[derive(Clone, Debug)]
pub struct FactorConfig {
    /// Trial-divide by primes up to this bound.
    pub trial_bound: u64,
    /// Refuse to work on cofactors larger than this many bits.
    pub max_factor_bits: u64,
    /// Total rho iteration budget per factor call.
    pub rho_max_iters: u64,
}

impl Default for FactorConfig {
    fn default() -> Self {
        FactorConfig {
            trial_bound: 1_000_000,
            max_factor_bits: 192,
            rho_max_iters: 4_000_000,
        }
    }
}

fn sieve_primes() -> &'static Vec<u32> {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let limit = 1_000_000usize;
        let mut composite = vec![false; limit + 1];
        let mut primes = Vec::new();
        for n in 2..=limit {
            if composite[n] {
                continue;
            }
            primes.push(n as u32);
            let mut m = n * n;
            while m <= limit {
                composite[m] = true;
                m += n;
            }
        }
        primes
    })
}

fn mulmod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn powmod_u64(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod_u64(acc, base, m);
        }
        base = mulmod_u64(base, base, m);
        exp >>= 1;
    }
    acc
}

const MR_BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Deterministic Miller–Rabin for n < 2^64.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'bases: for &a in &MR_BASES {
        let mut x = powmod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod_u64(x, x, n);
            if x == n - 1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

/// The largest n for which the 12 fixed Miller–Rabin bases are proven
/// deterministic: 3,317,044,064,679,887,385,961,981.
fn deterministic_mr_bound() -> &'static BigUint {
    static BOUND: OnceLock<BigUint> = OnceLock::new();
    BOUND.get_or_init(|| "3317044064679887385961981".parse().unwrap())
}

fn miller_rabin_big(n: &BigUint, base: u64) -> bool {
    // true = probably prime for this base
    let one = BigUint::one();
    let n_minus_1 = n - &one;
    let mut d = n_minus_1.clone();
    let mut s = 0u64;
    while d.is_even() {
        d >>= 1;
        s += 1;
    }
    let mut x = BigUint::from(base).modpow(&d, n);
    if x == one || x == n_minus_1 {
        return true;
    }
    for _ in 1..s {
        x = (&x * &x) % n;
        if x == n_minus_1 {
            return true;
        }
    }
    false
}

/// Certified primality: deterministic below the 12-base Miller–Rabin bound,
/// an error above it (composites are still detected soundly first).
pub fn is_prime_certified(n: &BigUint) -> Result<bool> {
    if let Some(small) = n.to_u64() {
        return Ok(is_prime_u64(small));
    }
    if n.is_even() {
        return Ok(false);
    }
    for &a in &MR_BASES {
        if !miller_rabin_big(n, a) {
            return Ok(false);
        }
    }
    if n < deterministic_mr_bound() {
        Ok(true)
    } else {
        Err(Error::FactorBound(format!(
            "cannot certify primality of a {}-bit candidate deterministically",
            n.bits()
        )))
    }
}

/// Brent's variant of Pollard rho for u64, deterministic schedule over c.
fn rho_u64(n: u64) -> u64 {
    debug_assert!(n > 1 && !is_prime_u64(n) && n % 2 == 1);
    for c in 1u64.. {
        let f = |x: u64| (mulmod_u64(x, x, n) + c) % n;
        let mut x = 2u64;
        let mut y = 2u64;
        let mut d = 1u64;
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd_u64(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
    }
    unreachable!()
}

fn gcd_u64(a: u64, b: u64) -> u64 {
    if a == 0 {
        b
    } else {
        gcd_u64(b % a, a)
    }
}

fn factor_u64_into(n: u64, out: &mut BTreeMap<BigUint, u32>) {
    let mut n = n;
    for small in [2u64, 3, 5] {
        while n.is_multiple_of(small) {
            *out.entry(BigUint::from(small)).or_insert(0) += 1;
            n /= small;
        }
    }
    let mut stack = vec![n];
    while let Some(m) = stack.pop() {
        if m == 1 {
            continue;
        }
        if is_prime_u64(m) {
            *out.entry(BigUint::from(m)).or_insert(0) += 1;
            continue;
        }
        let mut d = rho_u64(m);
        // rho can return either factor order; normalize the recursion.
        if d > m / d {
            d = m / d;
        }
        stack.push(d);
        stack.push(m / d);
    }
}

fn rho_big(n: &BigUint, budget: &mut u64) -> Option<BigUint> {
    let one = BigUint::one();
    let mut c = BigUint::one();
    while *budget > 0 {
        let f = |x: &BigUint| (x * x + &c) % n;
        let mut x = BigUint::from(2u32);
        let mut y = x.clone();
        loop {
            if *budget == 0 {
                return None;
            }
            *budget -= 1;
            x = f(&x);
            y = f(&f(&y));
            let diff = if x > y { &x - &y } else { &y - &x };
            let d = diff.gcd(n);
            if d == one {
                continue;
            }
            if &d == n {
                break; // retry with next c
            }
            return Some(d);
        }
        c += 1u32;
    }
    None
}

/// Complete factorization of n ≥ 1 into certified primes.
pub fn factor_integer(n: &BigUint, cfg: &FactorConfig) -> Result<BTreeMap<BigUint, u32>> {
    if n.is_zero() {
        return Err(Error::ZeroInput);
    }
    let mut out = BTreeMap::new();
    if let Some(small) = n.to_u64() {
        factor_u64_into(small, &mut out);
        out.remove(&BigUint::one());
        return Ok(out);
    }

    let mut rest = n.clone();
    for &p in sieve_primes() {
        let p = p as u64;
        if p > cfg.trial_bound {
            break;
        }
        if &BigUint::from(p) * &BigUint::from(p) > rest {
            break;
        }
        while (&rest % p).is_zero() {
            *out.entry(BigUint::from(p)).or_insert(0) += 1;
            rest /= p;
        }
        if let Some(small) = rest.to_u64() {
            factor_u64_into(small, &mut out);
            out.remove(&BigUint::one());
            return Ok(out);
        }
    }

    let mut budget = cfg.rho_max_iters;
    let mut stack = vec![rest];
    while let Some(m) = stack.pop() {
        if m.is_one() {
            continue;
        }
        if let Some(small) = m.to_u64() {
            factor_u64_into(small, &mut out);
            continue;
        }
        if m.bits() > cfg.max_factor_bits {
            return Err(Error::FactorBound(format!(
                "cofactor of {} bits exceeds the configured {}-bit bound",
                m.bits(),
                cfg.max_factor_bits
            )));
        }
        if is_prime_certified(&m)? {
            *out.entry(m).or_insert(0) += 1;
            continue;
        }
        match rho_big(&m, &mut budget) {
            Some(d) => {
                stack.push(&m / &d);
                stack.push(d);
            }
            None => {
                return Err(Error::FactorBound(format!(
                    "rho budget exhausted on a {}-bit cofactor",
                    m.bits()
                )))
            }
        }
    }
    out.remove(&BigUint::one());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_roundtrip(n: u64) {
        let cfg = FactorConfig::default();
        let factors = factor_integer(&BigUint::from(n), &cfg).unwrap();
        let mut prod = BigUint::one();
        for (p, e) in &factors {
            assert!(is_prime_certified(p).unwrap(), "{p} not prime");
            prod *= p.pow(*e);
        }
        assert_eq!(prod, BigUint::from(n));
    }

    #[test]
    fn factor_small_numbers() {
        for n in 1..500u64 {
            check_roundtrip(n);
        }
        check_roundtrip(2u64.pow(20));
        check_roundtrip(600851475143); // 71 * 839 * 1471 * 6857
        check_roundtrip(u64::MAX);
    }

    #[test]
    fn factor_big_smooth() {
        let n = BigUint::from(2u32).pow(100) * BigUint::from(3u32).pow(40);
        let factors = factor_integer(&n, &FactorConfig::default()).unwrap();
        assert_eq!(factors.get(&BigUint::from(2u32)), Some(&100));
        assert_eq!(factors.get(&BigUint::from(3u32)), Some(&40));
    }

    #[test]
    fn factor_big_semiprime() {
        // two ~40-bit primes found by the (deterministic) u64 test itself
        let p = (1_099_511_627_776u64..).find(|&n| is_prime_u64(n)).unwrap();
        let q = (p + 1..).find(|&n| is_prime_u64(n)).unwrap();
        let (p, q) = (BigUint::from(p), BigUint::from(q));
        let n = &p * &q;
        let factors = factor_integer(&n, &FactorConfig::default()).unwrap();
        assert_eq!(factors.len(), 2);
        assert_eq!(factors.get(&p), Some(&1));
        assert_eq!(factors.get(&q), Some(&1));
    }

    #[test]
    fn oversized_cofactor_fails_loudly() {
        // A 256-bit probable prime times itself will exceed max_factor_bits
        // long before rho could succeed.
        let p: BigUint =
            "115792089237316195423570985008687907853269984665640564039457584007913129639747"
                .parse()
                .unwrap();
        let cfg = FactorConfig {
            max_factor_bits: 128,
            ..FactorConfig::default()
        };
        assert!(matches!(
            factor_integer(&p, &cfg),
            Err(Error::FactorBound(_))
        ));
    }

    #[test]
    fn primality_bounds() {
        assert!(is_prime_u64(2));
        assert!(is_prime_u64((1u64 << 61) - 1));
        assert!(!is_prime_u64(561)); // Carmichael
        // Certification works between 2^64 and the deterministic bound...
        let base: BigUint = BigUint::from(10u32).pow(23);
        let certified = (0u32..200)
            .filter(|k| is_prime_certified(&(&base + k)).unwrap())
            .count();
        assert!(certified > 0);
        // ...and fails loudly beyond it (2^127 - 1 is prime, but too big
        // to certify with fixed bases).
        let beyond: BigUint = "170141183460469231731687303715884105727".parse().unwrap();
        assert!(is_prime_certified(&beyond).is_err());
    }
}
