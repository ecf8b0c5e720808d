//! Linear recurrence sequences over Z and over finitely generated abelian
//! groups, with zero-set decompositions into certified arithmetic
//! progressions plus a bounded sporadic search.
//!
//! Certification of an AP {k·n + ℓ} rests on the fact that the subsequence
//! u_{kn+ℓ} satisfies a monic integer recurrence of order ≤ order(u) (the
//! characteristic polynomial of the k-th companion power), so order-many
//! initial zeros force the whole subsequence to vanish. Sporadic-zero
//! finiteness is generally undecidable here; reports carry an explicit
//! status instead of overclaiming.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::fgab::{self, FgAmbient, GroupVector, SubgroupBasis};
use crate::matrix::{char_poly, IntMat};

/// u_{n+k} = Σ_{i=1..k} coeffs[i-1] · u_{n+k-i}, with initial terms
/// u_0..u_{k-1}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegerLRS {
    coeffs: Vec<BigInt>,
    initial: Vec<BigInt>,
}

impl IntegerLRS {
    pub fn new(coeffs: Vec<BigInt>, initial: Vec<BigInt>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() != initial.len() {
            return Err(Error::InvalidArgument(format!(
                "recurrence needs order >= 1 with matching initial terms (got {} coefficients, {} initial terms)",
                coeffs.len(),
                initial.len()
            )));
        }
        Ok(IntegerLRS { coeffs, initial })
    }

    pub fn from_i64(coeffs: &[i64], initial: &[i64]) -> Result<Self> {
        IntegerLRS::new(
            coeffs.iter().map(|&c| BigInt::from(c)).collect(),
            initial.iter().map(|&u| BigInt::from(u)).collect(),
        )
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn initial(&self) -> &[BigInt] {
        &self.initial
    }

    /// Exact n-th term by sequential recursion.
    pub fn term_at(&self, n: u64) -> BigInt {
        let k = self.order();
        if (n as usize) < k {
            return self.initial[n as usize].clone();
        }
        let mut window = self.initial.clone();
        for _ in k as u64..=n {
            let next = self.next_term(&window);
            window.rotate_left(1);
            window[k - 1] = next;
        }
        window[k - 1].clone()
    }

    fn next_term(&self, window: &[BigInt]) -> BigInt {
        let k = self.order();
        let mut next = BigInt::zero();
        for (i, c) in self.coeffs.iter().enumerate() {
            // coeffs[i] = c_{i+1} multiplies u_{n+k-(i+1)} = window[k-1-i]
            next += c * &window[k - 1 - i];
        }
        next
    }

    /// Terms u_0..=u_n, with an optional cap on term bit size.
    pub fn terms_up_to(&self, n: u64, bit_cap: Option<u64>) -> Result<Vec<BigInt>> {
        let k = self.order();
        let mut out = Vec::with_capacity((n + 1) as usize);
        out.extend(self.initial.iter().cloned());
        while (out.len() as u64) <= n {
            let window = &out[out.len() - k..];
            let next = self.next_term(window);
            if let Some(cap) = bit_cap {
                if next.bits() > cap {
                    return Err(Error::ResourceBound(format!(
                        "term at index {} exceeds the {cap}-bit cap",
                        out.len()
                    )));
                }
            }
            out.push(next);
        }
        out.truncate((n + 1) as usize);
        Ok(out)
    }

    /// The independent evaluation route: binary powering of the companion
    /// matrix.
    pub fn term_at_companion(&self, n: u64) -> BigInt {
        let k = self.order();
        if (n as usize) < k {
            return self.initial[n as usize].clone();
        }
        let power = pow_matrix(&self.companion_matrix(), n);
        // state_n = C^n · (u_0,…,u_{k-1}); u_n is its first entry.
        (0..k).map(|j| power.at(0, j) * &self.initial[j]).sum()
    }

    /// Companion matrix C with state transition
    /// (u_n,…,u_{n+k-1}) ↦ (u_{n+1},…,u_{n+k}).
    pub fn companion_matrix(&self) -> IntMat {
        let k = self.order();
        let mut m = IntMat::zero(k, k);
        for i in 0..k.saturating_sub(1) {
            m.set(i, i + 1, BigInt::one());
        }
        for (i, c) in self.coeffs.iter().enumerate() {
            // last row: u_{n+k} = c_1 u_{n+k-1} + … + c_k u_n
            m.set(k - 1, k - 1 - i, c.clone());
        }
        m
    }

    /// The reindexed sequence n ↦ u_{stride·n + offset}, as an LRS of the
    /// same order built from the characteristic polynomial of the
    /// stride-th companion power.
    pub fn subsequence(&self, stride: u64, offset: u64) -> Result<IntegerLRS> {
        if stride == 0 {
            return Err(Error::InvalidArgument("stride must be >= 1".into()));
        }
        let k = self.order();
        let power = pow_matrix(&self.companion_matrix(), stride);
        let coeffs = coeffs_from_char(&char_poly(&power));
        let initial = (0..k as u64)
            .map(|j| self.term_at(stride * j + offset))
            .collect();
        IntegerLRS::new(coeffs, initial)
    }

    /// The sequence u_n - c, of order +1 (used to reduce level sets to
    /// zero sets).
    pub fn minus_constant(&self, c: &BigInt) -> IntegerLRS {
        let char_u = char_from_coeffs(&self.coeffs);
        // multiply by (x - 1)
        let shifted = poly_mul(&char_u, &[-BigInt::one(), BigInt::one()]);
        let coeffs = coeffs_from_char(&shifted);
        let mut initial: Vec<BigInt> = self.initial.iter().map(|u| u - c).collect();
        initial.push(self.term_at(self.order() as u64) - c);
        IntegerLRS {
            coeffs,
            initial,
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        self.initial.iter().all(Zero::is_zero)
    }
}

fn pow_matrix(m: &IntMat, mut e: u64) -> IntMat {
    let mut acc = IntMat::identity(m.rows());
    let mut base = m.clone();
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

/// Low-to-high polynomial product.
fn poly_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// x^k - c_1 x^{k-1} - … - c_k from recurrence coefficients (low-to-high).
fn char_from_coeffs(coeffs: &[BigInt]) -> Vec<BigInt> {
    let k = coeffs.len();
    let mut out = vec![BigInt::zero(); k + 1];
    out[k] = BigInt::one();
    for (i, c) in coeffs.iter().enumerate() {
        out[k - 1 - i] = -c;
    }
    out
}

/// Recurrence coefficients from a monic characteristic polynomial.
fn coeffs_from_char(poly: &[BigInt]) -> Vec<BigInt> {
    let g = poly.len() - 1;
    debug_assert!(poly[g].is_one());
    (1..=g).map(|i| -poly[g - i].clone()).collect()
}

/// Common recurrence satisfied by all of the given sequences: the product
/// of their characteristic polynomials.
pub fn common_recurrence(sequences: &[IntegerLRS]) -> Result<Vec<BigInt>> {
    if sequences.is_empty() {
        return Err(Error::InvalidArgument(
            "no sequences to combine".into(),
        ));
    }
    let mut prod = vec![BigInt::one()];
    for l in sequences {
        prod = poly_mul(&prod, &char_from_coeffs(&l.coeffs));
    }
    Ok(coeffs_from_char(&prod))
}

/// Decides whether u_{kn+ℓ} = 0 for every n ≥ 0, by checking the first
/// order-many terms of the subsequence (sufficient by Cayley–Hamilton).
/// Offsets ℓ ≥ k are allowed and describe progressions starting at ℓ.
pub fn certified_ap_zero(l: &IntegerLRS, modulus: u64, offset: u64) -> Result<bool> {
    if modulus == 0 {
        return Err(Error::InvalidArgument("modulus must be >= 1".into()));
    }
    let k = l.order() as u64;
    let top = modulus * (k - 1) + offset;
    let terms = l.terms_up_to(top, None)?;
    Ok((0..k).all(|j| terms[(modulus * j + offset) as usize].is_zero()))
}

/// One certified arithmetic progression {modulus·n + offset : n ≥ 0};
/// verified_terms records how many initial subsequence terms were checked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertifiedAp {
    pub modulus: u64,
    pub offset: u64,
    pub verified_terms: u64,
}

impl CertifiedAp {
    pub fn contains(&self, n: u64) -> bool {
        n >= self.offset && (n - self.offset).is_multiple_of(self.modulus)
    }

    /// Is every member of `self` a member of `other`?
    pub fn subset_of(&self, other: &CertifiedAp) -> bool {
        self.modulus.is_multiple_of(other.modulus)
            && self.offset >= other.offset
            && (self.offset - other.offset).is_multiple_of(other.modulus)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertStatus {
    /// The report describes the zero set completely.
    Exact,
    /// Complete only up to search_bound.
    Bounded,
}

#[derive(Clone, Debug)]
pub struct ZeroSetReport {
    pub certified_aps: Vec<CertifiedAp>,
    pub sporadic: Vec<u64>,
    pub search_bound: u64,
    pub status: CertStatus,
}

impl ZeroSetReport {
    pub fn in_certified_ap(&self, n: u64) -> bool {
        self.certified_aps.iter().any(|ap| ap.contains(n))
    }

    /// Membership for n ≤ search_bound (and, when exact, for all n).
    pub fn contains(&self, n: u64) -> bool {
        self.in_certified_ap(n) || self.sporadic.binary_search(&n).is_ok()
    }

    fn push_pruned(aps: &mut Vec<CertifiedAp>, ap: CertifiedAp) {
        if !aps.iter().any(|prev| ap.subset_of(prev)) {
            aps.push(ap);
        }
    }
}

#[derive(Clone, Debug)]
pub struct ZeroSetParams {
    pub k_max: u64,
    pub n_max: u64,
    /// Bail out when terms outgrow this many bits.
    pub term_bit_cap: u64,
    /// Cap on the lcm of certified moduli used for per-class growth
    /// certification.
    pub class_lcm_cap: u64,
}

impl ZeroSetParams {
    pub fn new(k_max: u64, n_max: u64) -> Self {
        ZeroSetParams {
            k_max,
            n_max,
            term_bit_cap: 1 << 20,
            class_lcm_cap: 64,
        }
    }
}

/// Zero-set decomposition of an integer LRS: certified APs (modulus ≤
/// k_max, residue classes), sporadic zeros ≤ n_max, and an honest status.
pub fn zero_set(l: &IntegerLRS, k_max: u64, n_max: u64) -> Result<ZeroSetReport> {
    zero_set_with(l, &ZeroSetParams::new(k_max, n_max))
}

pub fn zero_set_with(l: &IntegerLRS, params: &ZeroSetParams) -> Result<ZeroSetReport> {
    if params.k_max == 0 || params.n_max == 0 {
        return Err(Error::InvalidArgument(
            "k_max and n_max must be >= 1".into(),
        ));
    }
    let order = l.order() as u64;
    if l.is_identically_zero() {
        return Ok(ZeroSetReport {
            certified_aps: vec![CertifiedAp {
                modulus: 1,
                offset: 0,
                verified_terms: order,
            }],
            sporadic: vec![],
            search_bound: params.n_max,
            status: CertStatus::Exact,
        });
    }

    // Enough terms for both the n_max scan and every certification check.
    let top = params.n_max.max(params.k_max * order);
    let terms = l.terms_up_to(top, Some(params.term_bit_cap))?;

    let mut aps: Vec<CertifiedAp> = Vec::new();
    for k in 1..=params.k_max {
        for residue in 0..k {
            let candidate = CertifiedAp {
                modulus: k,
                offset: residue,
                verified_terms: order,
            };
            if aps.iter().any(|prev| candidate.subset_of(prev)) {
                continue;
            }
            if (0..order).all(|j| terms[(k * j + residue) as usize].is_zero()) {
                aps.push(candidate);
            }
        }
    }

    let sporadic: Vec<u64> = (0..=params.n_max)
        .filter(|&n| terms[n as usize].is_zero() && !aps.iter().any(|ap| ap.contains(n)))
        .collect();

    let status = if residual_classes_certified(l, &terms, &aps, &sporadic, params)? {
        CertStatus::Exact
    } else {
        CertStatus::Bounded
    };

    Ok(ZeroSetReport {
        certified_aps: aps,
        sporadic,
        search_bound: params.n_max,
        status,
    })
}

/// The cheap non-vanishing certificate: for every residue class mod the lcm
/// of the certified moduli that is not inside a certified AP, the sequence
/// along that class must (a) show strict |u| growth on the whole verified
/// window past its last zero, and (b) admit a verified recurrence whose
/// lead dominates the rest, |c_1| ≥ 1 + Σ_{i≥2} |c_i| (which pins a single
/// dominant real root and forces |u| to keep growing from a positive,
/// non-decreasing window). Sound but deliberately conservative.
fn residual_classes_certified(
    l: &IntegerLRS,
    terms: &[BigInt],
    aps: &[CertifiedAp],
    sporadic: &[u64],
    params: &ZeroSetParams,
) -> Result<bool> {
    let mut class_lcm: u64 = 1;
    for ap in aps {
        class_lcm = class_lcm.lcm(&ap.modulus);
        if class_lcm > params.class_lcm_cap {
            return Ok(false);
        }
    }
    let order = l.order();
    for residue in 0..class_lcm {
        if aps.iter().any(|ap| class_contained(class_lcm, residue, ap)) {
            continue;
        }
        // Terms along this class up to n_max.
        let class_terms: Vec<BigInt> = (residue..=params.n_max)
            .step_by(class_lcm as usize)
            .map(|n| terms[n as usize].clone())
            .collect();
        if class_terms.len() < 2 * order + 2 {
            return Ok(false);
        }
        // The class is itself an LRS of order ≤ order(l); find its minimal
        // recurrence and check dominance.
        let Some(coeffs) = minimal_recurrence(&class_terms, order) else {
            return Ok(false);
        };
        let dominance = coeffs[0].abs()
            - coeffs[1..]
                .iter()
                .map(|c| c.abs())
                .fold(BigRational::zero(), |a, b| a + b);
        if dominance < BigRational::one() {
            return Ok(false);
        }
        // Strict |u| growth on the whole window past the last zero.
        let last_zero = class_terms.iter().rposition(Zero::is_zero);
        let start = last_zero.map_or(0, |i| i + 1);
        let window = &class_terms[start..];
        if window.len() < coeffs.len() + 2 {
            return Ok(false);
        }
        if !window.windows(2).all(|w| w[1].abs() > w[0].abs()) {
            return Ok(false);
        }
    }
    // All residual zeros must have been listed (they are, by construction,
    // but a sporadic beyond a certified class would falsify exactness).
    debug_assert!(sporadic.iter().all(|&n| n <= params.n_max));
    Ok(true)
}

/// Minimal recurrence (rational coefficients) of an integer sequence known
/// to satisfy one of order ≤ max_order, found by solving Hankel systems of
/// increasing size. A candidate of order h is verified on max_order + h
/// consecutive positions, which suffices: the discrepancy sequence is a
/// linear combination of shifts of the input, hence itself satisfies a
/// recurrence of order ≤ max_order, and that many initial zeros force it
/// to vanish identically. Returns c with v_{n+h} = Σ c_i · v_{n+h-i}.
fn minimal_recurrence(terms: &[BigInt], max_order: usize) -> Option<Vec<BigRational>> {
    let needed = 2 * max_order + 1;
    if terms.len() < needed {
        return None;
    }
    let rational: Vec<BigRational> = terms[..needed.max(2 * max_order)]
        .iter()
        .map(|t| BigRational::from(t.clone()))
        .collect();
    'orders: for h in 1..=max_order {
        // rows n = 0..h: v_{n+h} = Σ_{i=1..h} c_i v_{n+h-i}
        let mut aug: Vec<Vec<BigRational>> = (0..h)
            .map(|n| {
                let mut row: Vec<BigRational> =
                    (1..=h).map(|i| rational[n + h - i].clone()).collect();
                row.push(rational[n + h].clone());
                row
            })
            .collect();
        let Some(coeffs) = solve_rational(&mut aug, h) else {
            continue 'orders;
        };
        let checks = (max_order + h).min(rational.len() - h);
        for n in 0..checks {
            let mut acc = BigRational::zero();
            for (i, c) in coeffs.iter().enumerate() {
                acc += c * &rational[n + h - 1 - i];
            }
            if acc != rational[n + h] {
                continue 'orders;
            }
        }
        return Some(coeffs);
    }
    None
}

/// Gaussian elimination on an augmented h×(h+1) system; None when singular.
fn solve_rational(aug: &mut [Vec<BigRational>], h: usize) -> Option<Vec<BigRational>> {
    for col in 0..h {
        let pivot_row = (col..h).find(|&r| !aug[r][col].is_zero())?;
        aug.swap(col, pivot_row);
        let pivot = aug[col][col].clone();
        for entry in aug[col].iter_mut() {
            *entry /= &pivot;
        }
        for r in 0..h {
            if r != col && !aug[r][col].is_zero() {
                let factor = aug[r][col].clone();
                let pivot_row = aug[col].clone();
                for (entry, p) in aug[r].iter_mut().zip(&pivot_row) {
                    *entry -= &factor * p;
                }
            }
        }
    }
    Some((0..h).map(|r| aug[r][h].clone()).collect())
}

/// Is the class {lcm·n + residue} contained in the given AP?
fn class_contained(class_mod: u64, residue: u64, ap: &CertifiedAp) -> bool {
    CertifiedAp {
        modulus: class_mod,
        offset: residue,
        verified_terms: 0,
    }
    .subset_of(ap)
}

/// A linear recurrence with values in an fgab ambient.
#[derive(Clone, Debug)]
pub struct GroupLRS {
    ambient: FgAmbient,
    coeffs: Vec<BigInt>,
    initial: Vec<GroupVector>,
}

impl GroupLRS {
    pub fn new(ambient: FgAmbient, coeffs: Vec<BigInt>, initial: Vec<GroupVector>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() != initial.len() {
            return Err(Error::InvalidArgument(
                "group recurrence needs order >= 1 with matching initial terms".into(),
            ));
        }
        for x in &initial {
            if x.dims() != ambient.dims() {
                return Err(Error::AmbientMismatch(
                    "initial term does not lie in the ambient".into(),
                ));
            }
        }
        Ok(GroupLRS {
            ambient,
            coeffs,
            initial,
        })
    }

    pub fn ambient(&self) -> &FgAmbient {
        &self.ambient
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn initial(&self) -> &[GroupVector] {
        &self.initial
    }

    fn next_term(&self, window: &[GroupVector]) -> GroupVector {
        let k = self.order();
        let mut acc = self.ambient.zero();
        for (i, c) in self.coeffs.iter().enumerate() {
            let scaled = self.ambient.scale(c, &window[k - 1 - i]);
            acc = self.ambient.add(&acc, &scaled);
        }
        acc
    }

    pub fn terms_up_to(&self, n: u64) -> Vec<GroupVector> {
        let k = self.order();
        let mut out = self.initial.clone();
        while (out.len() as u64) <= n {
            let next = self.next_term(&out[out.len() - k..]);
            out.push(next);
        }
        out.truncate((n + 1) as usize);
        out
    }

    pub fn term_at(&self, n: u64) -> GroupVector {
        self.terms_up_to(n).pop().unwrap()
    }
}

/// Minimal preperiod and period of the state sequence of an LRS over a
/// finite ambient.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EventualPeriod {
    pub preperiod: u64,
    pub period: u64,
}

const EVENTUAL_PERIOD_STEP_CAP: u64 = 1 << 21;

/// Cycle detection on the finite state space (the ambient must have free
/// rank 0). The first repeated state yields the minimal (preperiod, period).
pub fn eventual_period(l: &GroupLRS) -> Result<EventualPeriod> {
    if !l.ambient().is_finite() {
        return Err(Error::Precondition(
            "eventual_period needs a finite ambient (free rank 0)".into(),
        ));
    }
    let k = l.order();
    let mut seen: HashMap<Vec<GroupVector>, u64> = HashMap::new();
    let mut state: Vec<GroupVector> = l.initial.clone();
    let mut n = 0u64;
    loop {
        if let Some(&first) = seen.get(&state) {
            return Ok(EventualPeriod {
                preperiod: first,
                period: n - first,
            });
        }
        seen.insert(state.clone(), n);
        let next = l.next_term(&state);
        state.rotate_left(1);
        state[k - 1] = next;
        n += 1;
        if n > EVENTUAL_PERIOD_STEP_CAP {
            return Err(Error::ResourceBound(
                "state space too large for cycle detection".into(),
            ));
        }
    }
}

/// Exact description of an eventually periodic subset of N.
#[derive(Clone, Debug)]
struct PeriodicSet {
    preperiod: u64,
    period: u64,
    /// members < preperiod
    head: Vec<u64>,
    /// member offsets within the cycle, in [0, period)
    cycle: Vec<u64>,
}

impl PeriodicSet {
    fn contains(&self, n: u64) -> bool {
        if n < self.preperiod {
            self.head.binary_search(&n).is_ok()
        } else {
            self.cycle
                .binary_search(&((n - self.preperiod) % self.period))
                .is_ok()
        }
    }

    fn all_of() -> PeriodicSet {
        PeriodicSet {
            preperiod: 0,
            period: 1,
            head: vec![],
            cycle: vec![0],
        }
    }
}

/// Zero-membership data for one cyclic piece of the quotient.
enum FactorZeros {
    Periodic(PeriodicSet),
    Reported {
        lrs: IntegerLRS,
        report: ZeroSetReport,
    },
}

impl FactorZeros {
    fn contains(&self, n: u64) -> bool {
        match self {
            FactorZeros::Periodic(p) => p.contains(n),
            FactorZeros::Reported { report, .. } => report.contains(n),
        }
    }

    fn is_exact(&self) -> bool {
        match self {
            FactorZeros::Periodic(_) => true,
            FactorZeros::Reported { report, .. } => report.status == CertStatus::Exact,
        }
    }

    /// (preperiod bound, period) of the membership pattern, valid only when
    /// exact.
    fn periodicity(&self) -> (u64, u64) {
        match self {
            FactorZeros::Periodic(p) => (p.preperiod, p.period),
            FactorZeros::Reported { report, .. } => {
                let mut period = 1u64;
                let mut bound = 0u64;
                for ap in &report.certified_aps {
                    period = period.lcm(&ap.modulus);
                    bound = bound.max(ap.offset);
                }
                for &s in &report.sporadic {
                    bound = bound.max(s + 1);
                }
                (bound, period)
            }
        }
    }
}

/// The set {n : x_n ∈ Γ} for a group-valued LRS, via the quotient by Γ:
/// finite cyclic factors are handled exactly by cycle detection, infinite
/// ones by the integer zero-set machinery; the per-factor sets are then
/// intersected.
pub fn group_zero_set(
    l: &GroupLRS,
    gamma: &SubgroupBasis,
    k_max: u64,
    n_max: u64,
) -> Result<ZeroSetReport> {
    if gamma.ambient() != l.ambient() {
        return Err(Error::AmbientMismatch(
            "subgroup ambient does not match the sequence ambient".into(),
        ));
    }
    if k_max == 0 || n_max == 0 {
        return Err(Error::InvalidArgument(
            "k_max and n_max must be >= 1".into(),
        ));
    }
    let (quotient_ambient, projection) = fgab::quotient(gamma)?;
    let order = l.order() as u64;

    if quotient_ambient.is_trivial() {
        // Γ is the whole ambient: every index is a member.
        return Ok(ZeroSetReport {
            certified_aps: vec![CertifiedAp {
                modulus: 1,
                offset: 0,
                verified_terms: order,
            }],
            sporadic: vec![],
            search_bound: n_max,
            status: CertStatus::Exact,
        });
    }

    let projected: Vec<GroupVector> = l
        .initial
        .iter()
        .map(|x| projection.apply(x))
        .collect::<Result<Vec<_>>>()?;

    let mut factors: Vec<FactorZeros> = Vec::new();

    // Free coordinates, one integer LRS each.
    for j in 0..quotient_ambient.free_rank() {
        let initial: Vec<BigInt> = projected.iter().map(|y| y.free_part()[j].clone()).collect();
        let lrs = IntegerLRS::new(l.coeffs.clone(), initial)?;
        let report = zero_set(&lrs, k_max, n_max)?;
        factors.push(FactorZeros::Reported { lrs, report });
    }

    // All torsion coordinates together, by cycle detection.
    if quotient_ambient.torsion_count() > 0 {
        let torsion_ambient = FgAmbient::new(0, quotient_ambient.torsion_orders().to_vec())?;
        let initial: Vec<GroupVector> = projected
            .iter()
            .map(|y| torsion_ambient.vector(vec![], y.torsion_part().to_vec()))
            .collect::<Result<Vec<_>>>()?;
        let tl = GroupLRS::new(torsion_ambient, l.coeffs.clone(), initial)?;
        let ep = eventual_period(&tl)?;
        let total = ep.preperiod + ep.period;
        let terms = tl.terms_up_to(total.max(1) - 1);
        let head = (0..ep.preperiod)
            .filter(|&n| terms[n as usize].is_zero())
            .collect();
        let cycle = (0..ep.period)
            .filter(|&i| terms[(ep.preperiod + i) as usize].is_zero())
            .collect();
        factors.push(FactorZeros::Periodic(PeriodicSet {
            preperiod: ep.preperiod,
            period: ep.period,
            head,
            cycle,
        }));
    }

    if factors.is_empty() {
        factors.push(FactorZeros::Periodic(PeriodicSet::all_of()));
    }

    let all_exact = factors.iter().all(FactorZeros::is_exact);

    // Joint certification of small-modulus classes, sound regardless of
    // per-factor status.
    let mut aps: Vec<CertifiedAp> = Vec::new();
    for k in 1..=k_max {
        'residues: for residue in 0..k {
            let candidate = CertifiedAp {
                modulus: k,
                offset: residue,
                verified_terms: order,
            };
            if aps.iter().any(|prev| candidate.subset_of(prev)) {
                continue;
            }
            for f in &factors {
                match f {
                    FactorZeros::Reported { lrs, .. } => {
                        if !certified_ap_zero(lrs, k, residue)? {
                            continue 'residues;
                        }
                    }
                    FactorZeros::Periodic(p) => {
                        // Check one full combined cycle of the class; skip
                        // certification (conservatively) when the cycle is
                        // too long to scan.
                        let window_end = p.preperiod + p.period.lcm(&k) + residue;
                        if window_end > (1 << 24) {
                            continue 'residues;
                        }
                        let mut n = residue;
                        while n <= window_end {
                            if !p.contains(n) {
                                continue 'residues;
                            }
                            n += k;
                        }
                    }
                }
            }
            aps.push(candidate);
        }
    }

    let mut status = CertStatus::Bounded;
    let mut search_bound = n_max;

    if all_exact {
        // Combine the factors into one eventually periodic set and list its
        // tail classes as (possibly offset) certified progressions.
        let mut bound = 0u64;
        let mut period_ticks: u64 = 1;
        let mut feasible = true;
        for f in &factors {
            let (b, m) = f.periodicity();
            bound = bound.max(b);
            match period_ticks.checked_mul(m / period_ticks.gcd(&m)) {
                Some(v) if v <= (1 << 22) => period_ticks = v,
                _ => {
                    feasible = false;
                    break;
                }
            }
        }
        if feasible {
            for start in bound..bound + period_ticks {
                if !factors.iter().all(|f| f.contains(start)) {
                    continue;
                }
                let tail = CertifiedAp {
                    modulus: period_ticks,
                    offset: start,
                    verified_terms: order,
                };
                ZeroSetReport::push_pruned(&mut aps, tail);
            }
            search_bound = n_max.max(bound + period_ticks);
            status = CertStatus::Exact;
        }
    }

    let sporadic: Vec<u64> = (0..=search_bound)
        .filter(|&n| {
            factors.iter().all(|f| f.contains(n)) && !aps.iter().any(|ap| ap.contains(n))
        })
        .collect();

    Ok(ZeroSetReport {
        certified_aps: aps,
        sporadic,
        search_bound,
        status,
    })
}
