//! Structure detection on return-set bitmaps: arithmetic progressions,
//! residual sets, and window density profiles.
//!
//! A window profile at a finite bound is a stand-in for an asymptotic
//! density; verdicts therefore carry every threshold they used, so that no
//! finite computation silently poses as a limit.

use num_rational::Ratio;

use crate::error::{Error, Result};

/// Membership bits for 0..=n_max.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bitmap {
    n_max: u64,
    bits: Vec<u64>,
}

impl Bitmap {
    pub fn new(n_max: u64) -> Self {
        Bitmap {
            n_max,
            bits: vec![0; (n_max as usize + 64) / 64],
        }
    }

    pub fn from_fn(n_max: u64, mut f: impl FnMut(u64) -> bool) -> Self {
        let mut b = Bitmap::new(n_max);
        for n in 0..=n_max {
            if f(n) {
                b.set(n);
            }
        }
        b
    }

    pub fn from_members(n_max: u64, members: impl IntoIterator<Item = u64>) -> Self {
        let mut b = Bitmap::new(n_max);
        for n in members {
            if n <= n_max {
                b.set(n);
            }
        }
        b
    }

    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    pub fn set(&mut self, n: u64) {
        assert!(n <= self.n_max);
        self.bits[(n / 64) as usize] |= 1 << (n % 64);
    }

    pub fn clear(&mut self, n: u64) {
        assert!(n <= self.n_max);
        self.bits[(n / 64) as usize] &= !(1 << (n % 64));
    }

    pub fn get(&self, n: u64) -> bool {
        n <= self.n_max && self.bits[(n / 64) as usize] >> (n % 64) & 1 == 1
    }

    pub fn count(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn members(&self) -> impl Iterator<Item = u64> + '_ {
        (0..=self.n_max).filter(|&n| self.get(n))
    }

    pub fn and(&self, other: &Bitmap) -> Bitmap {
        assert_eq!(self.n_max, other.n_max, "bitmap range mismatch");
        Bitmap {
            n_max: self.n_max,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }
}

/// One arithmetic progression {start + modulus·t : t ≥ 0}; start ≡ residue
/// (mod modulus).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ap {
    pub modulus: u64,
    pub residue: u64,
    pub start: u64,
}

impl Ap {
    pub fn contains(&self, n: u64) -> bool {
        n >= self.start && n % self.modulus == self.residue
    }

    /// Is every member of self a member of other?
    pub fn subset_of(&self, other: &Ap) -> bool {
        self.modulus.is_multiple_of(other.modulus)
            && self.residue % other.modulus == other.residue
            && self.start >= other.start
    }
}

pub type ApSet = Vec<Ap>;

/// Minimum members a class must show in [burn_in, n_max] before it counts
/// as a detected progression.
const MIN_CLASS_MEMBERS: u64 = 3;

/// All residue classes (modulus ≤ k_max) fully contained in the bitmap on
/// [burn_in, n_max], pruned so no listed progression lies inside another;
/// start is the least covered index ≥ burn_in.
pub fn detect_aps(b: &Bitmap, k_max: u64, burn_in: u64) -> Result<ApSet> {
    if burn_in >= b.n_max() {
        return Err(Error::InvalidArgument(format!(
            "burn_in {} must be below n_max {}",
            burn_in,
            b.n_max()
        )));
    }
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be >= 1".into()));
    }
    let mut out: ApSet = Vec::new();
    for k in 1..=k_max {
        for residue in 0..k {
            let mut n = burn_in + (k + residue - burn_in % k) % k;
            let start = n;
            if n > b.n_max() || (b.n_max() - n) / k + 1 < MIN_CLASS_MEMBERS {
                continue;
            }
            let candidate = Ap {
                modulus: k,
                residue,
                start,
            };
            if out.iter().any(|prev| candidate.subset_of(prev)) {
                continue;
            }
            let mut full = true;
            while n <= b.n_max() {
                if !b.get(n) {
                    full = false;
                    break;
                }
                n += k;
            }
            if full {
                out.push(candidate);
            }
        }
    }
    Ok(out)
}

/// b minus all progression members.
pub fn residual(b: &Bitmap, aps: &ApSet) -> Bitmap {
    let mut out = b.clone();
    for ap in aps {
        let mut n = ap.start;
        while n <= out.n_max() {
            out.clear(n);
            n += ap.modulus;
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfileEntry {
    pub window: u64,
    pub max_count: u64,
    /// max_count / window, exact.
    pub value: Ratio<u64>,
}

/// Exact maxima of |b ∩ J| / |J| over all length-L windows J ⊆ [0, n_max].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityProfile {
    pub entries: Vec<ProfileEntry>,
}

pub fn banach_profile(b: &Bitmap, lengths: &[u64]) -> Result<DensityProfile> {
    let n = b.n_max();
    let mut prefix = Vec::with_capacity(n as usize + 2);
    prefix.push(0u64);
    let mut acc = 0u64;
    for i in 0..=n {
        acc += b.get(i) as u64;
        prefix.push(acc);
    }
    let mut entries = Vec::new();
    for &len in lengths {
        if len == 0 || len > n + 1 {
            return Err(Error::InvalidArgument(format!(
                "window length {len} out of range 1..={}",
                n + 1
            )));
        }
        let mut max_count = 0u64;
        for j in 0..=(n + 1 - len) {
            let count = prefix[(j + len) as usize] - prefix[j as usize];
            max_count = max_count.max(count);
        }
        entries.push(ProfileEntry {
            window: len,
            max_count,
            value: Ratio::new(max_count, len),
        });
    }
    Ok(DensityProfile { entries })
}

/// Default window lengths: powers of 2 from 16 up to n_max/4.
pub fn default_lengths(n_max: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut len = 16u64;
    while len <= n_max / 4 {
        out.push(len);
        len *= 2;
    }
    if out.is_empty() && n_max >= 1 {
        out.push((n_max / 2).max(1));
    }
    out
}

pub fn default_burn_in(n_max: u64) -> u64 {
    n_max / 10
}

pub const DEFAULT_K_MAX: u64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    ApPlusFinite,
    ApPlusSparse,
    DenseResidual,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::ApPlusFinite => "AP_plus_finite",
            Verdict::ApPlusSparse => "AP_plus_sparse",
            Verdict::DenseResidual => "dense_residual",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Thresholds used by [`verdict`]; always reported alongside the verdict.
#[derive(Clone, Debug)]
pub struct VerdictConfig {
    /// Residual members at or below this index count as "finite head".
    pub finite_cutoff: u64,
    pub sparse_threshold: Ratio<u64>,
    pub dense_threshold: Ratio<u64>,
}

impl VerdictConfig {
    pub fn for_bound(n_max: u64, burn_in: u64) -> Self {
        VerdictConfig {
            finite_cutoff: burn_in.max(n_max / 2),
            sparse_threshold: Ratio::new(1, 50),
            dense_threshold: Ratio::new(1, 4),
        }
    }
}

/// Empirical classification of a decomposition. The residual profile must
/// be the profile of `residual(b, aps)`.
pub fn verdict(
    b: &Bitmap,
    aps: &ApSet,
    residual_profile: &DensityProfile,
    config: &VerdictConfig,
) -> Verdict {
    let res = residual(b, aps);
    if res.members().all(|n| n <= config.finite_cutoff) {
        return Verdict::ApPlusFinite;
    }
    let mut entries: Vec<&ProfileEntry> = residual_profile.entries.iter().collect();
    entries.sort_by_key(|e| e.window);
    if entries.len() >= 3 {
        let top = &entries[entries.len() - 3..];
        let decreasing = top.windows(2).all(|w| w[1].value < w[0].value);
        if decreasing && top[2].value <= config.sparse_threshold {
            return Verdict::ApPlusSparse;
        }
    }
    if let Some(last) = entries.last() {
        if last.value >= config.dense_threshold {
            return Verdict::DenseResidual;
        }
    }
    Verdict::Inconclusive
}
