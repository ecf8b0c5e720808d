//! Multiplicative groups of Q* and F_p(t)* through unique factorization.
//!
//! Nonzero field elements are stored as a unit times a finite product of
//! primes (over Q) or monic irreducibles (over F_p(t)) with integer
//! exponents. Finitely generated subgroups freeze their support at
//! construction and embed into [`crate::fgab`] ambients
//! (unit group ⊕ Z^|support|), where membership is a lattice solve.

pub mod fppoly;
pub mod intfac;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::fgab::{self, FgAmbient, GroupVector, MembershipSolver, SubgroupBasis};

pub use fppoly::{factor_poly, nth_monic, FpPoly, FpRatFun};
pub use intfac::{factor_integer, is_prime_certified, is_prime_u64, FactorConfig};

/// The coefficient field: Q or F_p(t) for a prime p (desk scale: p < 2^31).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldSpec {
    Rationals,
    FunctionField { p: u64 },
}

impl FieldSpec {
    pub fn function_field(p: u64) -> Result<FieldSpec> {
        if p > (1 << 31) {
            return Err(Error::InvalidArgument(format!(
                "characteristic {p} exceeds the 2^31 desk-scale bound"
            )));
        }
        if !is_prime_u64(p) {
            return Err(Error::InvalidArgument(format!("{p} is not prime")));
        }
        Ok(FieldSpec::FunctionField { p })
    }

    /// Order of the unit group: 2 for Q (signs), p-1 for F_p(t)*
    /// constants.
    pub fn unit_order(&self) -> u64 {
        match self {
            FieldSpec::Rationals => 2,
            FieldSpec::FunctionField { p } => p - 1,
        }
    }

    pub fn one_value(&self) -> FieldValue {
        match self {
            FieldSpec::Rationals => FieldValue::Rational(BigRational::one()),
            FieldSpec::FunctionField { p } => FieldValue::RationalFunction(FpRatFun::one(*p)),
        }
    }

    pub fn zero_value(&self) -> FieldValue {
        match self {
            FieldSpec::Rationals => FieldValue::Rational(BigRational::zero()),
            FieldSpec::FunctionField { p } => FieldValue::RationalFunction(FpRatFun::zero(*p)),
        }
    }

    pub fn value_from_bigint(&self, n: &BigInt) -> FieldValue {
        match self {
            FieldSpec::Rationals => FieldValue::Rational(BigRational::from(n.clone())),
            FieldSpec::FunctionField { p } => {
                let r = n.mod_floor(&BigInt::from(*p)).to_u64().unwrap();
                FieldValue::RationalFunction(FpRatFun::from_poly(FpPoly::constant(*p, r)))
            }
        }
    }
}

impl std::fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FieldSpec::Rationals => write!(f, "Q"),
            FieldSpec::FunctionField { p } => write!(f, "F_{p}(t)"),
        }
    }
}

/// An exact element of the field: a rational number or a rational function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FieldValue {
    Rational(BigRational),
    RationalFunction(FpRatFun),
}

impl FieldValue {
    pub fn field(&self) -> FieldSpec {
        match self {
            FieldValue::Rational(_) => FieldSpec::Rationals,
            FieldValue::RationalFunction(r) => FieldSpec::FunctionField { p: r.modulus() },
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            FieldValue::Rational(q) => q.is_zero(),
            FieldValue::RationalFunction(r) => r.is_zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            FieldValue::Rational(q) => q.is_one(),
            FieldValue::RationalFunction(r) => r.is_one(),
        }
    }

    fn pair<'a>(&'a self, other: &'a FieldValue) -> (&'a FieldValue, &'a FieldValue) {
        assert_eq!(self.field(), other.field(), "mixed fields in arithmetic");
        (self, other)
    }

    pub fn add(&self, other: &FieldValue) -> FieldValue {
        match self.pair(other) {
            (FieldValue::Rational(a), FieldValue::Rational(b)) => FieldValue::Rational(a + b),
            (FieldValue::RationalFunction(a), FieldValue::RationalFunction(b)) => {
                FieldValue::RationalFunction(a.add(b))
            }
            _ => unreachable!(),
        }
    }

    pub fn sub(&self, other: &FieldValue) -> FieldValue {
        match self.pair(other) {
            (FieldValue::Rational(a), FieldValue::Rational(b)) => FieldValue::Rational(a - b),
            (FieldValue::RationalFunction(a), FieldValue::RationalFunction(b)) => {
                FieldValue::RationalFunction(a.sub(b))
            }
            _ => unreachable!(),
        }
    }

    pub fn mul(&self, other: &FieldValue) -> FieldValue {
        match self.pair(other) {
            (FieldValue::Rational(a), FieldValue::Rational(b)) => FieldValue::Rational(a * b),
            (FieldValue::RationalFunction(a), FieldValue::RationalFunction(b)) => {
                FieldValue::RationalFunction(a.mul(b))
            }
            _ => unreachable!(),
        }
    }

    pub fn neg(&self) -> FieldValue {
        match self {
            FieldValue::Rational(a) => FieldValue::Rational(-a),
            FieldValue::RationalFunction(a) => FieldValue::RationalFunction(a.neg()),
        }
    }

    pub fn div(&self, other: &FieldValue) -> Result<FieldValue> {
        if other.is_zero() {
            return Err(Error::InvalidArgument("division by zero".into()));
        }
        Ok(match self.pair(other) {
            (FieldValue::Rational(a), FieldValue::Rational(b)) => FieldValue::Rational(a / b),
            (FieldValue::RationalFunction(a), FieldValue::RationalFunction(b)) => {
                FieldValue::RationalFunction(a.div(b)?)
            }
            _ => unreachable!(),
        })
    }

    /// Approximate size in bits; used by height caps.
    pub fn size_bits(&self) -> u64 {
        match self {
            FieldValue::Rational(q) => q.numer().bits() + q.denom().bits(),
            FieldValue::RationalFunction(r) => {
                let nd = r.num().deg().map_or(0, |d| d as u64 + 1);
                let dd = r.den().deg().map_or(0, |d| d as u64 + 1);
                (nd + dd) * 64u64.saturating_sub((r.modulus() - 1).leading_zeros() as u64 + 1).max(1)
            }
        }
    }
}

impl std::fmt::Display for FieldValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FieldValue::Rational(q) => write!(f, "{q}"),
            FieldValue::RationalFunction(r) => write!(f, "{r}"),
        }
    }
}

/// A prime of Z or a monic irreducible of F_p\[t\]; the keys of a
/// factorization.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Irreducible {
    Prime(BigUint),
    Poly(FpPoly),
}

impl std::fmt::Display for Irreducible {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Irreducible::Prime(p) => write!(f, "{p}"),
            Irreducible::Poly(q) => write!(f, "{q}"),
        }
    }
}

/// The unit part of a factorization: a sign over Q, a nonzero constant of
/// F_p over a function field.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Unit {
    /// true means -1.
    Sign(bool),
    Constant(u64),
}

/// A nonzero field element as unit · Π key^exponent; exponents are nonzero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactoredElement {
    field: FieldSpec,
    unit: Unit,
    exponents: BTreeMap<Irreducible, BigInt>,
}

impl FactoredElement {
    pub fn one(field: FieldSpec) -> Self {
        let unit = match field {
            FieldSpec::Rationals => Unit::Sign(false),
            FieldSpec::FunctionField { .. } => Unit::Constant(1),
        };
        FactoredElement {
            field,
            unit,
            exponents: BTreeMap::new(),
        }
    }

    pub fn from_parts(
        field: FieldSpec,
        unit: Unit,
        exponents: BTreeMap<Irreducible, BigInt>,
    ) -> Result<Self> {
        match (&field, &unit) {
            (FieldSpec::Rationals, Unit::Sign(_)) => {}
            (FieldSpec::FunctionField { p }, Unit::Constant(c)) => {
                if *c == 0 || *c >= *p {
                    return Err(Error::InvalidArgument(format!(
                        "unit {c} out of range for F_{p}"
                    )));
                }
            }
            _ => {
                return Err(Error::FieldMismatch(
                    "unit kind does not match the field".into(),
                ))
            }
        }
        let exponents: BTreeMap<Irreducible, BigInt> = exponents
            .into_iter()
            .filter(|(_, e)| !e.is_zero())
            .collect();
        for key in exponents.keys() {
            match (&field, key) {
                (FieldSpec::Rationals, Irreducible::Prime(_)) => {}
                (FieldSpec::FunctionField { p }, Irreducible::Poly(q))
                    if q.modulus() == *p && q.is_monic() => {}
                _ => {
                    return Err(Error::FieldMismatch(
                        "factor key does not match the field".into(),
                    ))
                }
            }
        }
        Ok(FactoredElement {
            field,
            unit,
            exponents,
        })
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn unit(&self) -> &Unit {
        &self.unit
    }

    pub fn exponents(&self) -> &BTreeMap<Irreducible, BigInt> {
        &self.exponents
    }

    pub fn support(&self) -> impl Iterator<Item = &Irreducible> {
        self.exponents.keys()
    }

    pub fn is_one(&self) -> bool {
        self.exponents.is_empty()
            && match &self.unit {
                Unit::Sign(neg) => !neg,
                Unit::Constant(c) => *c == 1,
            }
    }

    fn combine_units(&self, other: &Unit) -> Unit {
        match (&self.unit, other) {
            (Unit::Sign(a), Unit::Sign(b)) => Unit::Sign(a ^ b),
            (Unit::Constant(a), Unit::Constant(b)) => {
                let p = match self.field {
                    FieldSpec::FunctionField { p } => p,
                    FieldSpec::Rationals => unreachable!(),
                };
                Unit::Constant(((*a as u128 * *b as u128) % p as u128) as u64)
            }
            _ => panic!("mixed unit kinds"),
        }
    }

    pub fn mul(&self, other: &FactoredElement) -> Result<FactoredElement> {
        if self.field != other.field {
            return Err(Error::FieldMismatch(format!(
                "{} vs {}",
                self.field, other.field
            )));
        }
        let mut exponents = self.exponents.clone();
        for (k, e) in &other.exponents {
            let entry = exponents.entry(k.clone()).or_insert_with(BigInt::zero);
            *entry += e;
        }
        exponents.retain(|_, e| !e.is_zero());
        Ok(FactoredElement {
            field: self.field,
            unit: self.combine_units(&other.unit),
            exponents,
        })
    }

    pub fn inv(&self) -> FactoredElement {
        self.pow(&BigInt::from(-1))
    }

    pub fn div(&self, other: &FactoredElement) -> Result<FactoredElement> {
        self.mul(&other.inv())
    }

    pub fn pow(&self, k: &BigInt) -> FactoredElement {
        let unit = match &self.unit {
            Unit::Sign(neg) => Unit::Sign(*neg && k.is_odd()),
            Unit::Constant(c) => {
                let p = match self.field {
                    FieldSpec::FunctionField { p } => p,
                    FieldSpec::Rationals => unreachable!(),
                };
                // c has order dividing p-1
                let e = if p == 2 {
                    0
                } else {
                    k.mod_floor(&BigInt::from(p - 1)).to_u64().unwrap()
                };
                Unit::Constant(pow_mod_u64(*c, e, p))
            }
        };
        let exponents = self
            .exponents
            .iter()
            .filter(|_| !k.is_zero())
            .map(|(key, e)| (key.clone(), e * k))
            .collect();
        FactoredElement {
            field: self.field,
            unit,
            exponents,
        }
    }

    /// Multiplies the factorization back out. Guarded: refuses when the
    /// expansion would be astronomically large.
    pub fn expand(&self) -> Result<FieldValue> {
        const MAX_EXP: u64 = 1 << 20;
        match self.field {
            FieldSpec::Rationals => {
                let mut num = BigUint::one();
                let mut den = BigUint::one();
                for (key, e) in &self.exponents {
                    let Irreducible::Prime(p) = key else {
                        unreachable!()
                    };
                    let mag = e.magnitude().to_u64().filter(|&m| m <= MAX_EXP).ok_or_else(
                        || Error::ResourceBound("exponent too large to expand".into()),
                    )?;
                    let power = p.pow(mag as u32);
                    if e.is_positive() {
                        num *= &power;
                    } else {
                        den *= &power;
                    }
                }
                let mut q = BigRational::new(BigInt::from(num), BigInt::from(den));
                if matches!(self.unit, Unit::Sign(true)) {
                    q = -q;
                }
                Ok(FieldValue::Rational(q))
            }
            FieldSpec::FunctionField { p } => {
                let mut num = FpPoly::one(p);
                let mut den = FpPoly::one(p);
                for (key, e) in &self.exponents {
                    let Irreducible::Poly(q) = key else {
                        unreachable!()
                    };
                    let mag = e.magnitude().to_u64().filter(|&m| m <= MAX_EXP).ok_or_else(
                        || Error::ResourceBound("exponent too large to expand".into()),
                    )?;
                    let deg = q.deg().unwrap_or(0) as u64;
                    if deg * mag > MAX_EXP {
                        return Err(Error::ResourceBound(
                            "expansion degree exceeds the cap".into(),
                        ));
                    }
                    let power = q.pow(mag);
                    if e.is_positive() {
                        num = num.mul(&power);
                    } else {
                        den = den.mul(&power);
                    }
                }
                let Unit::Constant(c) = self.unit else {
                    unreachable!()
                };
                num = num.mul_scalar(c);
                Ok(FieldValue::RationalFunction(FpRatFun::new(num, den)?))
            }
        }
    }
}

impl std::fmt::Display for FactoredElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let unit_str = match &self.unit {
            Unit::Sign(false) => None,
            Unit::Sign(true) => Some("-1".to_string()),
            Unit::Constant(1) => None,
            Unit::Constant(c) => Some(c.to_string()),
        };
        let mut parts: Vec<String> = unit_str.into_iter().collect();
        for (key, e) in &self.exponents {
            if e.is_one() {
                parts.push(format!("({key})"));
            } else {
                parts.push(format!("({key})^{e}"));
            }
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("*"))
        }
    }
}

fn pow_mod_u64(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = ((acc as u128 * base as u128) % m as u128) as u64;
        }
        base = ((base as u128 * base as u128) % m as u128) as u64;
        exp >>= 1;
    }
    acc
}

/// Smallest primitive root modulo p.
pub fn primitive_root(p: u64) -> u64 {
    if p == 2 {
        return 1;
    }
    let phi = p - 1;
    let mut prime_divs = Vec::new();
    let mut m = phi;
    let mut q = 2u64;
    while q * q <= m {
        if m.is_multiple_of(q) {
            prime_divs.push(q);
            while m.is_multiple_of(q) {
                m /= q;
            }
        }
        q += 1;
    }
    if m > 1 {
        prime_divs.push(m);
    }
    (2..p)
        .find(|&g| prime_divs.iter().all(|&r| pow_mod_u64(g, phi / r, p) != 1))
        .expect("primitive root exists")
}

/// Baby-step giant-step discrete logarithm of target base g in F_p*.
fn discrete_log(p: u64, g: u64, target: u64) -> u64 {
    debug_assert!(!target.is_multiple_of(p));
    if p == 2 {
        return 0;
    }
    let order = p - 1;
    let m = (order as f64).sqrt().ceil() as u64 + 1;
    let mut table = HashMap::new();
    let mut cur = 1u64;
    for j in 0..m {
        table.entry(cur).or_insert(j);
        cur = ((cur as u128 * g as u128) % p as u128) as u64;
    }
    // g^{-m}
    let gm_inv = pow_mod_u64(pow_mod_u64(g, m, p), p - 2, p);
    let mut gamma = target % p;
    for i in 0..=m {
        if let Some(j) = table.get(&gamma) {
            return (i * m + j) % order;
        }
        gamma = ((gamma as u128 * gm_inv as u128) % p as u128) as u64;
    }
    unreachable!("dlog of a unit always exists")
}

/// Factors a nonzero field element completely.
pub fn factor(value: &FieldValue, cfg: &FactorConfig, seed: u64) -> Result<FactoredElement> {
    if value.is_zero() {
        return Err(Error::ZeroInput);
    }
    match value {
        FieldValue::Rational(q) => {
            let negative = q.numer().sign() == Sign::Minus;
            let mut exponents: BTreeMap<Irreducible, BigInt> = BTreeMap::new();
            for (p, e) in factor_integer(q.numer().magnitude(), cfg)? {
                exponents.insert(Irreducible::Prime(p), BigInt::from(e));
            }
            for (p, e) in factor_integer(q.denom().magnitude(), cfg)? {
                let entry = exponents
                    .entry(Irreducible::Prime(p))
                    .or_insert_with(BigInt::zero);
                *entry -= BigInt::from(e);
            }
            FactoredElement::from_parts(FieldSpec::Rationals, Unit::Sign(negative), exponents)
        }
        FieldValue::RationalFunction(r) => {
            let p = r.modulus();
            let (unit_num, num_factors) = factor_poly(r.num(), seed)?;
            let (unit_den, den_factors) = factor_poly(r.den(), seed)?;
            let unit =
                ((unit_num as u128 * pow_mod_u64(unit_den, p - 2, p) as u128) % p as u128) as u64;
            let mut exponents: BTreeMap<Irreducible, BigInt> = BTreeMap::new();
            for (q, e) in num_factors {
                exponents.insert(Irreducible::Poly(q), BigInt::from(e));
            }
            for (q, e) in den_factors {
                let entry = exponents
                    .entry(Irreducible::Poly(q))
                    .or_insert_with(BigInt::zero);
                *entry -= BigInt::from(e);
            }
            FactoredElement::from_parts(
                FieldSpec::FunctionField { p },
                Unit::Constant(unit),
                exponents,
            )
        }
    }
}

/// Embedding of a family of factored elements into an fgab ambient over the
/// union of their supports: free coordinates are the exponents (in support
/// order), and one torsion coordinate of order |unit group| carries the
/// discrete log of the unit (omitted when the unit group is trivial).
pub fn embed(elements: &[FactoredElement]) -> Result<(FgAmbient, Vec<GroupVector>)> {
    let field = match elements.first() {
        Some(e) => e.field(),
        None => {
            return Ok((FgAmbient::trivial(), Vec::new()));
        }
    };
    let mut support: BTreeSet<Irreducible> = BTreeSet::new();
    for e in elements {
        if e.field() != field {
            return Err(Error::FieldMismatch("mixed fields in embed".into()));
        }
        support.extend(e.support().cloned());
    }
    let support: Vec<Irreducible> = support.into_iter().collect();
    let embedding = Embedding::new(field, support)?;
    let coords = elements
        .iter()
        .map(|e| embedding.coordinates(e))
        .collect::<Result<Vec<_>>>()?;
    Ok((embedding.ambient, coords))
}

/// A frozen support together with its ambient; converts factored elements
/// to coordinates.
#[derive(Clone, Debug)]
pub(crate) struct Embedding {
    pub field: FieldSpec,
    pub support: Vec<Irreducible>,
    pub ambient: FgAmbient,
    unit_gen: u64,
}

impl Embedding {
    pub fn new(field: FieldSpec, support: Vec<Irreducible>) -> Result<Embedding> {
        let unit_order = field.unit_order();
        let torsion = if unit_order >= 2 {
            vec![BigInt::from(unit_order)]
        } else {
            vec![]
        };
        let ambient = FgAmbient::new(support.len(), torsion)?;
        let unit_gen = match field {
            FieldSpec::Rationals => 0,
            FieldSpec::FunctionField { p } => primitive_root(p),
        };
        Ok(Embedding {
            field,
            support,
            ambient,
            unit_gen,
        })
    }

    fn unit_dlog(&self, unit: &Unit) -> BigInt {
        match (self.field, unit) {
            (FieldSpec::Rationals, Unit::Sign(neg)) => BigInt::from(*neg as u8),
            (FieldSpec::FunctionField { p }, Unit::Constant(c)) => {
                if p == 2 {
                    BigInt::zero()
                } else {
                    BigInt::from(discrete_log(p, self.unit_gen, *c))
                }
            }
            _ => panic!("unit kind does not match embedding field"),
        }
    }

    /// Coordinates of x in the ambient, or None if x uses primes outside
    /// the frozen support.
    pub fn try_coordinates(&self, x: &FactoredElement) -> Result<Option<GroupVector>> {
        if x.field() != self.field {
            return Err(Error::FieldMismatch("element field mismatch".into()));
        }
        let mut free = vec![BigInt::zero(); self.support.len()];
        for (key, e) in x.exponents() {
            match self.support.binary_search(key) {
                Ok(i) => free[i] = e.clone(),
                Err(_) => return Ok(None),
            }
        }
        let torsion = if self.ambient.torsion_count() == 1 {
            vec![self.unit_dlog(x.unit())]
        } else {
            vec![]
        };
        Ok(Some(self.ambient.vector(free, torsion)?))
    }

    pub fn coordinates(&self, x: &FactoredElement) -> Result<GroupVector> {
        self.try_coordinates(x)?.ok_or_else(|| {
            Error::Invariant("element support escapes its own embedding".into())
        })
    }
}

/// A finitely generated subgroup of the multiplicative group, with its
/// support and lattice realization frozen at construction.
#[derive(Clone, Debug)]
pub struct MulSubgroup {
    field: FieldSpec,
    generators: Vec<FactoredElement>,
    embedding: Embedding,
    lattice: SubgroupBasis,
}

impl MulSubgroup {
    pub fn new(field: FieldSpec, generators: Vec<FactoredElement>) -> Result<Self> {
        let mut support: BTreeSet<Irreducible> = BTreeSet::new();
        for g in &generators {
            if g.field() != field {
                return Err(Error::FieldMismatch(
                    "generator field does not match the subgroup field".into(),
                ));
            }
            support.extend(g.support().cloned());
        }
        let embedding = Embedding::new(field, support.into_iter().collect())?;
        let coords = generators
            .iter()
            .map(|g| embedding.coordinates(g))
            .collect::<Result<Vec<_>>>()?;
        let lattice = SubgroupBasis::new(embedding.ambient.clone(), coords)?;
        Ok(MulSubgroup {
            field,
            generators,
            embedding,
            lattice,
        })
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn generators(&self) -> &[FactoredElement] {
        &self.generators
    }

    pub fn support(&self) -> &[Irreducible] {
        &self.embedding.support
    }

    pub fn ambient(&self) -> &FgAmbient {
        &self.embedding.ambient
    }

    pub fn lattice(&self) -> &SubgroupBasis {
        &self.lattice
    }

    /// Coordinates of x in the frozen embedding; None when x involves a
    /// prime outside the support (hence cannot be a member).
    pub fn embed_element(&self, x: &FactoredElement) -> Result<Option<GroupVector>> {
        self.embedding.try_coordinates(x)
    }

    /// Membership with witness exponents on the generators.
    pub fn member(&self, x: &FactoredElement) -> Result<Option<Vec<BigInt>>> {
        if x.field() != self.field {
            return Err(Error::FieldMismatch(format!(
                "{} vs {}",
                x.field(),
                self.field
            )));
        }
        match self.embed_element(x)? {
            None => Ok(None),
            Some(coords) => fgab::membership(&coords, &self.lattice),
        }
    }

    /// A reusable membership tester (precomputes the lattice solver).
    pub fn member_solver(&self) -> MulMemberSolver<'_> {
        MulMemberSolver {
            group: self,
            solver: MembershipSolver::new(&self.lattice),
        }
    }

    /// The power product of the generators with the given exponents.
    pub fn power_product(&self, k: &[BigInt]) -> Result<FactoredElement> {
        if k.len() != self.generators.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} exponents for {} generators",
                k.len(),
                self.generators.len()
            )));
        }
        let mut acc = FactoredElement::one(self.field);
        for (g, e) in self.generators.iter().zip(k) {
            acc = acc.mul(&g.pow(e))?;
        }
        Ok(acc)
    }
}

pub struct MulMemberSolver<'a> {
    group: &'a MulSubgroup,
    solver: MembershipSolver,
}

impl MulMemberSolver<'_> {
    pub fn member(&self, x: &FactoredElement) -> Result<Option<Vec<BigInt>>> {
        match self.group.embed_element(x)? {
            None => Ok(None),
            Some(coords) => self.solver.witness(&coords),
        }
    }
}
