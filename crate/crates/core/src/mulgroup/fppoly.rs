//! Dense univariate polynomials over a prime field F_p (p ≤ 2^31), with
//! complete factorization: square-free decomposition (characteristic p,
//! including p-th-root descent), distinct-degree splitting, then
//! equal-degree splitting. The equal-degree stage consumes pseudorandom
//! polynomials from a splitmix64 stream, so runs are reproducible from a
//! caller-supplied seed.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{Error, Result};

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powmod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1u64 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, p);
        }
        base = mulmod(base, base, p);
        exp >>= 1;
    }
    acc
}

fn invmod(a: u64, p: u64) -> u64 {
    debug_assert!(!a.is_multiple_of(p));
    powmod(a, p - 2, p)
}

/// A polynomial over F_p, little-endian coefficients with no trailing zeros;
/// the empty vector is the zero polynomial.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FpPoly {
    p: u64,
    coeffs: Vec<u64>,
}

impl FpPoly {
    pub fn new(p: u64, mut coeffs: Vec<u64>) -> Self {
        for c in &mut coeffs {
            *c %= p;
        }
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        FpPoly { p, coeffs }
    }

    pub fn zero(p: u64) -> Self {
        FpPoly { p, coeffs: vec![] }
    }

    pub fn constant(p: u64, c: u64) -> Self {
        FpPoly::new(p, vec![c])
    }

    pub fn one(p: u64) -> Self {
        FpPoly::constant(p, 1)
    }

    /// The variable t.
    pub fn t(p: u64) -> Self {
        FpPoly::new(p, vec![0, 1])
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs == [1]
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn deg(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> u64 {
        *self.coeffs.last().unwrap_or(&0)
    }

    pub fn is_monic(&self) -> bool {
        self.leading() == 1
    }

    fn assert_same_field(&self, other: &FpPoly) {
        assert_eq!(self.p, other.p, "mixed characteristics");
    }

    pub fn add(&self, other: &FpPoly) -> FpPoly {
        self.assert_same_field(other);
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![0u64; n];
        for (i, o) in out.iter_mut().enumerate() {
            let a = self.coeffs.get(i).copied().unwrap_or(0);
            let b = other.coeffs.get(i).copied().unwrap_or(0);
            *o = (a + b) % self.p;
        }
        FpPoly::new(self.p, out)
    }

    pub fn neg(&self) -> FpPoly {
        let out = self
            .coeffs
            .iter()
            .map(|&c| if c == 0 { 0 } else { self.p - c })
            .collect();
        FpPoly::new(self.p, out)
    }

    pub fn sub(&self, other: &FpPoly) -> FpPoly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &FpPoly) -> FpPoly {
        self.assert_same_field(other);
        if self.is_zero() || other.is_zero() {
            return FpPoly::zero(self.p);
        }
        let mut out = vec![0u64; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] = (out[i + j] + mulmod(a, b, self.p)) % self.p;
            }
        }
        FpPoly::new(self.p, out)
    }

    pub fn mul_scalar(&self, c: u64) -> FpPoly {
        let c = c % self.p;
        FpPoly::new(self.p, self.coeffs.iter().map(|&a| mulmod(a, c, self.p)).collect())
    }

    pub fn pow(&self, e: u64) -> FpPoly {
        let mut acc = FpPoly::one(self.p);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Quotient and remainder; the divisor must be nonzero.
    pub fn divrem(&self, divisor: &FpPoly) -> (FpPoly, FpPoly) {
        self.assert_same_field(divisor);
        assert!(!divisor.is_zero(), "polynomial division by zero");
        let dd = divisor.deg().unwrap();
        let Some(nd) = self.deg() else {
            return (FpPoly::zero(self.p), FpPoly::zero(self.p));
        };
        if nd < dd {
            return (FpPoly::zero(self.p), self.clone());
        }
        let lead_inv = invmod(divisor.leading(), self.p);
        let mut rem = self.coeffs.clone();
        let mut quot = vec![0u64; nd - dd + 1];
        for k in (0..=nd - dd).rev() {
            let coef = mulmod(rem[k + dd], lead_inv, self.p);
            if coef == 0 {
                continue;
            }
            quot[k] = coef;
            for (i, &dc) in divisor.coeffs.iter().enumerate() {
                let sub = mulmod(coef, dc, self.p);
                rem[k + i] = (rem[k + i] + self.p - sub) % self.p;
            }
        }
        (FpPoly::new(self.p, quot), FpPoly::new(self.p, rem))
    }

    pub fn rem(&self, divisor: &FpPoly) -> FpPoly {
        self.divrem(divisor).1
    }

    pub fn div_exact(&self, divisor: &FpPoly) -> FpPoly {
        let (q, r) = self.divrem(divisor);
        debug_assert!(r.is_zero(), "inexact polynomial division");
        q
    }

    pub fn divides(&self, other: &FpPoly) -> bool {
        !self.is_zero() && other.rem(self).is_zero()
    }

    /// Monic gcd.
    pub fn gcd(&self, other: &FpPoly) -> FpPoly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn monic(&self) -> FpPoly {
        if self.is_zero() || self.is_monic() {
            return self.clone();
        }
        self.mul_scalar(invmod(self.leading(), self.p))
    }

    pub fn derivative(&self) -> FpPoly {
        if self.coeffs.len() <= 1 {
            return FpPoly::zero(self.p);
        }
        let out = self.coeffs[1..]
            .iter()
            .enumerate()
            .map(|(i, &c)| mulmod(c, (i as u64 + 1) % self.p, self.p))
            .collect();
        FpPoly::new(self.p, out)
    }

    pub fn pow_mod(&self, e: u64, modulus: &FpPoly) -> FpPoly {
        let mut acc = FpPoly::one(self.p);
        let mut base = self.rem(modulus);
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base).rem(modulus);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base).rem(modulus);
            }
        }
        acc
    }

    pub fn pow_mod_big(&self, e: &BigUint, modulus: &FpPoly) -> FpPoly {
        let mut acc = FpPoly::one(self.p);
        let mut base = self.rem(modulus);
        for i in 0..e.bits() {
            if e.bit(i) {
                acc = acc.mul(&base).rem(modulus);
            }
            if i + 1 < e.bits() {
                base = base.mul(&base).rem(modulus);
            }
        }
        acc
    }

    pub fn eval(&self, x: u64) -> u64 {
        let mut acc = 0u64;
        for &c in self.coeffs.iter().rev() {
            acc = (mulmod(acc, x, self.p) + c) % self.p;
        }
        acc
    }

    /// p-th root of a polynomial whose only monomials are t^{kp}; valid over
    /// the prime field where Frobenius fixes coefficients.
    fn pth_root(&self) -> FpPoly {
        let p = self.p as usize;
        let mut out = Vec::with_capacity(self.coeffs.len() / p + 1);
        for (i, &c) in self.coeffs.iter().enumerate() {
            if i % p == 0 {
                out.push(c);
            } else {
                debug_assert_eq!(c, 0, "not a p-th power");
            }
        }
        FpPoly::new(self.p, out)
    }

    /// Deterministic Rabin irreducibility test.
    pub fn is_irreducible(&self) -> bool {
        let Some(d) = self.deg() else { return false };
        if d == 0 {
            return false;
        }
        if d == 1 {
            return true;
        }
        let f = self.monic();
        let t = FpPoly::t(self.p);
        // x^(p^d) ≡ x (mod f)
        let mut frob = t.clone();
        for _ in 0..d {
            frob = frob.pow_mod(self.p, &f);
        }
        if frob != t.rem(&f) {
            return false;
        }
        // gcd(x^(p^(d/r)) - x, f) = 1 for each prime r | d
        let mut m = d;
        let mut prime_divs = Vec::new();
        let mut q = 2;
        while q * q <= m {
            if m % q == 0 {
                prime_divs.push(q);
                while m % q == 0 {
                    m /= q;
                }
            }
            q += 1;
        }
        if m > 1 {
            prime_divs.push(m);
        }
        for r in prime_divs {
            let e = d / r;
            let mut fr = t.clone();
            for _ in 0..e {
                fr = fr.pow_mod(self.p, &f);
            }
            if f.gcd(&fr.sub(&t)).deg() != Some(0) {
                return false;
            }
        }
        true
    }
}

impl std::fmt::Debug for FpPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FpPoly(p={}, {})", self.p, self)
    }
}

impl std::fmt::Display for FpPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match (i, c) {
                (0, _) => write!(f, "{c}")?,
                (1, 1) => write!(f, "t")?,
                (1, _) => write!(f, "{c}*t")?,
                (_, 1) => write!(f, "t^{i}")?,
                (_, _) => write!(f, "{c}*t^{i}")?,
            }
        }
        Ok(())
    }
}

/// Degree-first ordering (then coefficients from the top); gives supports a
/// stable, human-sensible sort.
impl Ord for FpPoly {
    fn cmp(&self, other: &Self) -> Ordering {
        self.coeffs
            .len()
            .cmp(&other.coeffs.len())
            .then_with(|| self.coeffs.iter().rev().cmp(other.coeffs.iter().rev()))
    }
}

impl PartialOrd for FpPoly {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The k-th monic polynomial of the given degree, counting through the
/// lower coefficients in base p. Used to enumerate fresh irreducibles.
pub fn nth_monic(p: u64, degree: usize, index: u64) -> FpPoly {
    let mut coeffs = vec![0u64; degree + 1];
    coeffs[degree] = 1;
    let mut k = index;
    for c in coeffs.iter_mut().take(degree) {
        *c = k % p;
        k /= p;
    }
    FpPoly::new(p, coeffs)
}

struct SplitMix64(u64);

impl SplitMix64 {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }
}

fn pseudo_random_poly(p: u64, max_deg: usize, rng: &mut SplitMix64) -> FpPoly {
    let coeffs = (0..=max_deg).map(|_| rng.next() % p).collect();
    FpPoly::new(p, coeffs)
}

/// Square-free decomposition of a monic polynomial in characteristic p;
/// returns pairwise-coprime monic square-free parts with multiplicities.
fn squarefree_decomposition(f: &FpPoly) -> Vec<(FpPoly, u32)> {
    let p = f.modulus();
    debug_assert!(f.is_monic());
    if f.deg() == Some(0) {
        return vec![];
    }
    let mut out = Vec::new();
    let deriv = f.derivative();
    let mut c = f.gcd(&deriv);
    let mut w = f.div_exact(&c);
    let mut i = 1u32;
    while !w.is_one() {
        let y = w.gcd(&c);
        let fac = w.div_exact(&y);
        if fac.deg().unwrap_or(0) > 0 {
            out.push((fac, i));
        }
        w = y.clone();
        c = c.div_exact(&y);
        i += 1;
    }
    if !c.is_one() {
        // The remaining part is a p-th power.
        let root = c.pth_root();
        for (g, m) in squarefree_decomposition(&root.monic()) {
            out.push((g, m * p as u32));
        }
    }
    out
}

/// Distinct-degree splitting of a monic square-free polynomial: pairs
/// (product of irreducible factors of degree d, d).
fn distinct_degree(f: &FpPoly) -> Vec<(FpPoly, usize)> {
    let p = f.modulus();
    let t = FpPoly::t(p);
    let mut out = Vec::new();
    let mut fstar = f.clone();
    let mut h = t.rem(&fstar);
    let mut d = 0usize;
    while fstar.deg().unwrap_or(0) >= 2 * (d + 1) {
        d += 1;
        h = h.pow_mod(p, &fstar);
        let g = fstar.gcd(&h.sub(&t));
        if g.deg().unwrap_or(0) > 0 {
            fstar = fstar.div_exact(&g);
            h = h.rem(&fstar);
            out.push((g, d));
        }
    }
    if fstar.deg().unwrap_or(0) > 0 {
        let deg = fstar.deg().unwrap();
        out.push((fstar, deg));
    }
    out
}

/// Equal-degree splitting (Cantor–Zassenhaus; trace variant for p = 2).
fn equal_degree(f: &FpPoly, d: usize, rng: &mut SplitMix64) -> Vec<FpPoly> {
    let p = f.modulus();
    let deg = f.deg().unwrap();
    if deg == d {
        return vec![f.monic()];
    }
    loop {
        let a = pseudo_random_poly(p, deg - 1, rng);
        if a.deg().unwrap_or(0) == 0 {
            continue;
        }
        let g = if p == 2 {
            // trace map T(a) = a + a^2 + ... + a^(2^(d-1))
            let mut acc = a.rem(f);
            let mut pw = a.rem(f);
            for _ in 1..d {
                pw = pw.mul(&pw).rem(f);
                acc = acc.add(&pw);
            }
            f.gcd(&acc)
        } else {
            let e = (BigUint::from(p).pow(d as u32) - BigUint::one()) >> 1;
            let b = a.pow_mod_big(&e, f);
            f.gcd(&b.sub(&FpPoly::one(p)))
        };
        let gd = g.deg().unwrap_or(0);
        if gd > 0 && gd < deg {
            let mut left = equal_degree(&g, d, rng);
            let right = equal_degree(&f.div_exact(&g).monic(), d, rng);
            left.extend(right);
            return left;
        }
    }
}

/// Complete factorization of a nonzero polynomial: the unit (leading
/// coefficient) and monic irreducible factors with multiplicities.
pub fn factor_poly(f: &FpPoly, seed: u64) -> Result<(u64, BTreeMap<FpPoly, u32>)> {
    if f.is_zero() {
        return Err(Error::ZeroInput);
    }
    let unit = f.leading();
    let monic = f.monic();
    let mut rng = SplitMix64(seed ^ 0xa076_1d64_78bd_642f);
    let mut out = BTreeMap::new();
    for (part, mult) in squarefree_decomposition(&monic) {
        for (prod, d) in distinct_degree(&part) {
            for irr in equal_degree(&prod, d, &mut rng) {
                *out.entry(irr).or_insert(0) += mult;
            }
        }
    }
    Ok((unit, out))
}

/// A rational function num/den over F_p, kept reduced with monic denominator.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FpRatFun {
    num: FpPoly,
    den: FpPoly,
}

impl FpRatFun {
    pub fn new(num: FpPoly, den: FpPoly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidArgument(
                "rational function with zero denominator".into(),
            ));
        }
        let p = num.modulus();
        if num.is_zero() {
            return Ok(FpRatFun {
                num,
                den: FpPoly::one(p),
            });
        }
        let g = num.gcd(&den);
        let mut num = num.div_exact(&g);
        let mut den = den.div_exact(&g);
        let lead_inv = invmod(den.leading(), p);
        num = num.mul_scalar(lead_inv);
        den = den.mul_scalar(lead_inv);
        Ok(FpRatFun { num, den })
    }

    pub fn from_poly(p: FpPoly) -> Self {
        let modulus = p.modulus();
        FpRatFun {
            num: p,
            den: FpPoly::one(modulus),
        }
    }

    pub fn zero(p: u64) -> Self {
        FpRatFun::from_poly(FpPoly::zero(p))
    }

    pub fn one(p: u64) -> Self {
        FpRatFun::from_poly(FpPoly::one(p))
    }

    pub fn modulus(&self) -> u64 {
        self.num.modulus()
    }

    pub fn num(&self) -> &FpPoly {
        &self.num
    }

    pub fn den(&self) -> &FpPoly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn add(&self, other: &FpRatFun) -> FpRatFun {
        let num = self.num.mul(&other.den).add(&other.num.mul(&self.den));
        let den = self.den.mul(&other.den);
        FpRatFun::new(num, den).expect("nonzero denominator")
    }

    pub fn neg(&self) -> FpRatFun {
        FpRatFun {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, other: &FpRatFun) -> FpRatFun {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &FpRatFun) -> FpRatFun {
        let num = self.num.mul(&other.num);
        let den = self.den.mul(&other.den);
        FpRatFun::new(num, den).expect("nonzero denominator")
    }

    pub fn div(&self, other: &FpRatFun) -> Result<FpRatFun> {
        if other.is_zero() {
            return Err(Error::InvalidArgument("division by zero".into()));
        }
        FpRatFun::new(self.num.mul(&other.den), self.den.mul(&other.num))
    }

    pub fn inv(&self) -> Result<FpRatFun> {
        FpRatFun::one(self.modulus()).div(self)
    }
}

impl std::fmt::Display for FpRatFun {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}
