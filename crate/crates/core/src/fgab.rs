//! Exact algebra of finitely generated abelian groups.
//!
//! An ambient group Z^r ⊕ Z/d_1 ⊕ … ⊕ Z/d_s is represented by its free rank
//! and torsion orders; subgroups are given by generator lists. Torsion is
//! handled uniformly by adjoining the relation columns d_i·e_i to generator
//! matrices, so membership, intersection and quotients are pure lattice
//! computations over Z.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::matrix::{self, IntMat, SmithDecomposition};

pub use crate::matrix::smith_normal_form;

/// The ambient group Z^free_rank ⊕ Z/d_1 ⊕ … ⊕ Z/d_s.
///
/// Torsion orders must be ≥ 2 but are otherwise arbitrary; ambients produced
/// by [`quotient`] always come out in divisibility-sorted normal form
/// d_1 | d_2 | … | d_s. Mixed products (unit groups glued onto exponent
/// lattices) are allowed to break the chain, so constructors do not force it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FgAmbient {
    free_rank: usize,
    torsion_orders: Vec<BigInt>,
}

impl FgAmbient {
    pub fn new(free_rank: usize, torsion_orders: Vec<BigInt>) -> Result<Self> {
        for d in &torsion_orders {
            if *d < BigInt::from(2) {
                return Err(Error::InvalidArgument(format!(
                    "torsion order {d} is not >= 2"
                )));
            }
        }
        Ok(FgAmbient {
            free_rank,
            torsion_orders,
        })
    }

    pub fn free(rank: usize) -> Self {
        FgAmbient {
            free_rank: rank,
            torsion_orders: Vec::new(),
        }
    }

    pub fn trivial() -> Self {
        FgAmbient::free(0)
    }

    pub fn free_rank(&self) -> usize {
        self.free_rank
    }

    pub fn torsion_orders(&self) -> &[BigInt] {
        &self.torsion_orders
    }

    pub fn torsion_count(&self) -> usize {
        self.torsion_orders.len()
    }

    /// Total coordinate count (free + torsion).
    pub fn dims(&self) -> usize {
        self.free_rank + self.torsion_orders.len()
    }

    pub fn is_finite(&self) -> bool {
        self.free_rank == 0
    }

    pub fn is_trivial(&self) -> bool {
        self.dims() == 0
    }

    /// True when the torsion orders form the chain d_1 | d_2 | … | d_s.
    pub fn is_divisibility_sorted(&self) -> bool {
        self.torsion_orders
            .windows(2)
            .all(|w| w[1].is_multiple_of(&w[0]))
    }

    pub fn zero(&self) -> GroupVector {
        GroupVector {
            free: vec![BigInt::zero(); self.free_rank],
            torsion: vec![BigInt::zero(); self.torsion_orders.len()],
        }
    }

    pub fn vector(&self, free: Vec<BigInt>, torsion: Vec<BigInt>) -> Result<GroupVector> {
        if free.len() != self.free_rank || torsion.len() != self.torsion_orders.len() {
            return Err(Error::DimensionMismatch(format!(
                "vector ({}, {}) does not fit ambient ({}, {})",
                free.len(),
                torsion.len(),
                self.free_rank,
                self.torsion_orders.len()
            )));
        }
        let torsion = torsion
            .into_iter()
            .zip(&self.torsion_orders)
            .map(|(x, d)| x.mod_floor(d))
            .collect();
        Ok(GroupVector { free, torsion })
    }

    pub fn vector_from_i64(&self, free: &[i64], torsion: &[i64]) -> Result<GroupVector> {
        self.vector(
            free.iter().map(|&x| BigInt::from(x)).collect(),
            torsion.iter().map(|&x| BigInt::from(x)).collect(),
        )
    }

    /// Rebuilds a vector from stacked coordinates (free first, then torsion),
    /// reducing torsion entries.
    pub fn vector_from_coords(&self, coords: &[BigInt]) -> Result<GroupVector> {
        if coords.len() != self.dims() {
            return Err(Error::DimensionMismatch(format!(
                "{} coordinates for ambient of dimension {}",
                coords.len(),
                self.dims()
            )));
        }
        self.vector(
            coords[..self.free_rank].to_vec(),
            coords[self.free_rank..].to_vec(),
        )
    }

    /// The i-th standard generator (free generators first).
    pub fn basis_vector(&self, i: usize) -> GroupVector {
        assert!(i < self.dims());
        let mut v = self.zero();
        if i < self.free_rank {
            v.free[i] = BigInt::one();
        } else {
            v.torsion[i - self.free_rank] = BigInt::one();
        }
        v
    }

    pub fn add(&self, a: &GroupVector, b: &GroupVector) -> GroupVector {
        let free = a.free.iter().zip(&b.free).map(|(x, y)| x + y).collect();
        let torsion = a
            .torsion
            .iter()
            .zip(&b.torsion)
            .zip(&self.torsion_orders)
            .map(|((x, y), d)| (x + y).mod_floor(d))
            .collect();
        GroupVector { free, torsion }
    }

    pub fn neg(&self, a: &GroupVector) -> GroupVector {
        let free = a.free.iter().map(|x| -x).collect();
        let torsion = a
            .torsion
            .iter()
            .zip(&self.torsion_orders)
            .map(|(x, d)| (-x).mod_floor(d))
            .collect();
        GroupVector { free, torsion }
    }

    pub fn sub(&self, a: &GroupVector, b: &GroupVector) -> GroupVector {
        self.add(a, &self.neg(b))
    }

    pub fn scale(&self, k: &BigInt, a: &GroupVector) -> GroupVector {
        let free = a.free.iter().map(|x| k * x).collect();
        let torsion = a
            .torsion
            .iter()
            .zip(&self.torsion_orders)
            .map(|(x, d)| (k * x).mod_floor(d))
            .collect();
        GroupVector { free, torsion }
    }

    /// Columns d_i · e_{free_rank + i} spanning the torsion relations.
    fn relation_columns(&self) -> Vec<Vec<BigInt>> {
        let dims = self.dims();
        self.torsion_orders
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let mut col = vec![BigInt::zero(); dims];
                col[self.free_rank + i] = d.clone();
                col
            })
            .collect()
    }

    /// Cardinality of a finite ambient; None when free_rank > 0.
    pub fn cardinality(&self) -> Option<BigInt> {
        if self.free_rank > 0 {
            return None;
        }
        Some(self.torsion_orders.iter().product())
    }
}

/// An element of an [`FgAmbient`]; torsion coordinates are kept reduced
/// into [0, d_i).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupVector {
    free: Vec<BigInt>,
    torsion: Vec<BigInt>,
}

impl GroupVector {
    pub fn free_part(&self) -> &[BigInt] {
        &self.free
    }

    pub fn torsion_part(&self) -> &[BigInt] {
        &self.torsion
    }

    pub fn is_zero(&self) -> bool {
        self.free.iter().all(Zero::is_zero) && self.torsion.iter().all(Zero::is_zero)
    }

    /// Stacked coordinates, free first.
    pub fn coords(&self) -> Vec<BigInt> {
        let mut out = self.free.clone();
        out.extend(self.torsion.iter().cloned());
        out
    }

    pub fn dims(&self) -> usize {
        self.free.len() + self.torsion.len()
    }
}

/// A subgroup given by a generator list; the empty list is the trivial
/// subgroup.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubgroupBasis {
    ambient: FgAmbient,
    generators: Vec<GroupVector>,
}

impl SubgroupBasis {
    pub fn new(ambient: FgAmbient, generators: Vec<GroupVector>) -> Result<Self> {
        for g in &generators {
            if g.free.len() != ambient.free_rank || g.torsion.len() != ambient.torsion_count() {
                return Err(Error::DimensionMismatch(
                    "generator does not lie in the ambient".into(),
                ));
            }
        }
        Ok(SubgroupBasis {
            ambient,
            generators,
        })
    }

    pub fn trivial(ambient: FgAmbient) -> Self {
        SubgroupBasis {
            ambient,
            generators: Vec::new(),
        }
    }

    /// The full ambient as a subgroup of itself.
    pub fn full(ambient: FgAmbient) -> Self {
        let generators = (0..ambient.dims()).map(|i| ambient.basis_vector(i)).collect();
        SubgroupBasis {
            ambient,
            generators,
        }
    }

    pub fn ambient(&self) -> &FgAmbient {
        &self.ambient
    }

    pub fn generators(&self) -> &[GroupVector] {
        &self.generators
    }

    /// ⟨self, extra⟩.
    pub fn join(&self, extra: &[GroupVector]) -> Result<SubgroupBasis> {
        let mut gens = self.generators.clone();
        gens.extend(extra.iter().cloned());
        SubgroupBasis::new(self.ambient.clone(), gens)
    }

    /// Generators followed by the torsion relation columns, as a matrix.
    fn augmented_matrix(&self) -> IntMat {
        let dims = self.ambient.dims();
        let mut cols: Vec<Vec<BigInt>> = self.generators.iter().map(GroupVector::coords).collect();
        cols.extend(self.ambient.relation_columns());
        IntMat::from_cols(dims, &cols)
    }
}

fn check_same_ambient(a: &FgAmbient, b: &FgAmbient) -> Result<()> {
    if a != b {
        return Err(Error::AmbientMismatch(format!(
            "Z^{} x {:?} vs Z^{} x {:?}",
            a.free_rank, a.torsion_orders, b.free_rank, b.torsion_orders
        )));
    }
    Ok(())
}

/// Reusable membership solver for one subgroup; precomputes the Smith form
/// of the augmented generator matrix.
pub struct MembershipSolver {
    n_generators: usize,
    snf: SmithDecomposition,
    dims: usize,
}

impl MembershipSolver {
    pub fn new(subgroup: &SubgroupBasis) -> Self {
        let m = subgroup.augmented_matrix();
        MembershipSolver {
            n_generators: subgroup.generators.len(),
            dims: subgroup.ambient.dims(),
            snf: matrix::smith_normal_form(&m),
        }
    }

    /// Coefficients on the generators when v lies in the subgroup.
    pub fn witness(&self, v: &GroupVector) -> Result<Option<Vec<BigInt>>> {
        if v.dims() != self.dims {
            return Err(Error::AmbientMismatch(
                "query vector does not lie in the subgroup's ambient".into(),
            ));
        }
        let solution = matrix::solve_with(&self.snf, &v.coords());
        Ok(solution.map(|x| x[..self.n_generators].to_vec()))
    }

    pub fn contains(&self, v: &GroupVector) -> Result<bool> {
        Ok(self.witness(v)?.is_some())
    }
}

/// Membership with witness: coefficients k with Σ k_i·gen_i = v, or None.
pub fn membership(v: &GroupVector, subgroup: &SubgroupBasis) -> Result<Option<Vec<BigInt>>> {
    if v.dims() != subgroup.ambient.dims() {
        return Err(Error::AmbientMismatch(
            "query vector does not lie in the subgroup's ambient".into(),
        ));
    }
    MembershipSolver::new(subgroup).witness(v)
}

/// Coset membership: is v ∈ translate + S? Returns the witness for
/// v - translate when so.
pub fn coset_member(
    v: &GroupVector,
    translate: &GroupVector,
    subgroup: &SubgroupBasis,
) -> Result<Option<Vec<BigInt>>> {
    let shifted = subgroup.ambient.sub(v, translate);
    membership(&shifted, subgroup)
}

/// Recombines a membership witness; used to check soundness.
pub fn recombine(subgroup: &SubgroupBasis, witness: &[BigInt]) -> Result<GroupVector> {
    if witness.len() != subgroup.generators.len() {
        return Err(Error::DimensionMismatch(
            "witness length does not match generator count".into(),
        ));
    }
    let mut acc = subgroup.ambient.zero();
    for (k, g) in witness.iter().zip(&subgroup.generators) {
        acc = subgroup.ambient.add(&acc, &subgroup.ambient.scale(k, g));
    }
    Ok(acc)
}

/// Generators of S1 ∩ S2 via the kernel of [L1 | -L2].
pub fn intersect(s1: &SubgroupBasis, s2: &SubgroupBasis) -> Result<SubgroupBasis> {
    check_same_ambient(&s1.ambient, &s2.ambient)?;
    let a = s1.augmented_matrix();
    let b = s2.augmented_matrix();
    let dims = s1.ambient.dims();
    let mut cols: Vec<Vec<BigInt>> = (0..a.cols()).map(|j| a.column(j)).collect();
    for j in 0..b.cols() {
        cols.push(b.column(j).into_iter().map(|x| -x).collect());
    }
    let combined = IntMat::from_cols(dims, &cols);
    let kernel = matrix::kernel_basis(&combined);
    let mut generators = Vec::new();
    for k in kernel {
        // The A-part of each kernel vector maps into L1 ∩ L2.
        let x = &k[..a.cols()];
        let mut coords = vec![BigInt::zero(); dims];
        for (j, xj) in x.iter().enumerate() {
            if xj.is_zero() {
                continue;
            }
            for (i, coord) in coords.iter_mut().enumerate() {
                *coord += xj * a.at(i, j);
            }
        }
        let v = s1.ambient.vector_from_coords(&coords)?;
        if !v.is_zero() && !generators.contains(&v) {
            generators.push(v);
        }
    }
    SubgroupBasis::new(s1.ambient.clone(), generators)
}

/// Presentation of ambient/S in divisibility-sorted form, with the
/// canonical projection. v ∈ S iff projection(v) = 0.
pub fn quotient(subgroup: &SubgroupBasis) -> Result<(FgAmbient, GroupHom)> {
    let ambient = &subgroup.ambient;
    let dims = ambient.dims();
    let m = subgroup.augmented_matrix();
    let snf = matrix::smith_normal_form(&m);
    let min = dims.min(m.cols());

    let mut torsion_rows = Vec::new();
    let mut free_rows = Vec::new();
    for i in 0..dims {
        let diag = if i < min {
            snf.d.at(i, i).clone()
        } else {
            BigInt::zero()
        };
        if diag.is_zero() {
            free_rows.push(i);
        } else if diag > BigInt::one() {
            torsion_rows.push((i, diag));
        } // diag == 1 contributes nothing
    }

    let orders: Vec<BigInt> = torsion_rows.iter().map(|(_, d)| d.clone()).collect();
    let quotient_ambient = FgAmbient::new(free_rows.len(), orders)?;

    let mut rows = Vec::new();
    for &i in &free_rows {
        rows.push(snf.u.row(i));
    }
    for (i, _) in &torsion_rows {
        rows.push(snf.u.row(*i));
    }
    let matrix = if rows.is_empty() {
        IntMat::zero(0, dims)
    } else {
        IntMat::from_rows(rows)
    };
    let projection = GroupHom::new(ambient.clone(), quotient_ambient.clone(), matrix)?;
    Ok((quotient_ambient, projection))
}

/// True iff the only integer combination of zs lying in S is the zero one.
pub fn independent_wrt(zs: &[GroupVector], subgroup: &SubgroupBasis) -> Result<bool> {
    let ambient = &subgroup.ambient;
    let dims = ambient.dims();
    for z in zs {
        if z.dims() != dims {
            return Err(Error::AmbientMismatch(
                "element does not lie in the subgroup's ambient".into(),
            ));
        }
    }
    if zs.is_empty() {
        return Ok(true);
    }
    let mut cols: Vec<Vec<BigInt>> = zs.iter().map(GroupVector::coords).collect();
    let aug = subgroup.augmented_matrix();
    for j in 0..aug.cols() {
        cols.push(aug.column(j));
    }
    let m = IntMat::from_cols(dims, &cols);
    // A combination Σ k_i z_i lies in S exactly when (k, -y) is in the kernel
    // of [Z | L]; independence says every kernel vector has k = 0.
    let kernel = matrix::kernel_basis(&m);
    Ok(kernel.iter().all(|v| v[..zs.len()].iter().all(Zero::is_zero)))
}

/// Subgroup equality by mutual membership of generators.
pub fn subgroups_equal(s1: &SubgroupBasis, s2: &SubgroupBasis) -> Result<bool> {
    check_same_ambient(&s1.ambient, &s2.ambient)?;
    let solver1 = MembershipSolver::new(s1);
    let solver2 = MembershipSolver::new(s2);
    for g in &s1.generators {
        if !solver2.contains(g)? {
            return Ok(false);
        }
    }
    for g in &s2.generators {
        if !solver1.contains(g)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Checks the subgroup-intersection law behind the double-lift argument:
/// with Γ₁ = ⟨Γ, ys⟩ and Γ₁' = ⟨Γ, ys + zs⟩ for zs independent with respect
/// to Γ₁, the intersection Γ₁ ∩ Γ₁' must equal Γ. Returns the comparison
/// outcome; a false return always indicates an implementation bug.
pub fn verify_prop_fg(
    gamma: &SubgroupBasis,
    ys: &[GroupVector],
    zs: &[GroupVector],
) -> Result<bool> {
    if ys.len() != zs.len() {
        return Err(Error::DimensionMismatch(
            "ys and zs must have the same length".into(),
        ));
    }
    let gamma1 = gamma.join(ys)?;
    if !independent_wrt(zs, &gamma1)? {
        return Err(Error::Precondition(
            "zs are not independent with respect to <gamma, ys>".into(),
        ));
    }
    let ys_prime: Vec<GroupVector> = ys
        .iter()
        .zip(zs)
        .map(|(y, z)| gamma.ambient.add(y, z))
        .collect();
    let gamma1_prime = gamma.join(&ys_prime)?;
    let inter = intersect(&gamma1, &gamma1_prime)?;
    subgroups_equal(&inter, gamma)
}

/// A homomorphism between ambients, given by its integer matrix on stacked
/// coordinates (free first, torsion second). Well-definedness on torsion is
/// checked eagerly: the image of a torsion generator of order d must be
/// killed by d in the codomain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupHom {
    domain: FgAmbient,
    codomain: FgAmbient,
    matrix: IntMat,
}

impl GroupHom {
    pub fn new(domain: FgAmbient, codomain: FgAmbient, matrix: IntMat) -> Result<Self> {
        if matrix.rows() != codomain.dims() || matrix.cols() != domain.dims() {
            return Err(Error::DimensionMismatch(format!(
                "hom matrix is {}x{}, expected {}x{}",
                matrix.rows(),
                matrix.cols(),
                codomain.dims(),
                domain.dims()
            )));
        }
        let hom = GroupHom {
            domain,
            codomain,
            matrix,
        };
        hom.check_well_defined()?;
        Ok(hom)
    }

    pub fn identity(ambient: FgAmbient) -> Self {
        let n = ambient.dims();
        GroupHom {
            domain: ambient.clone(),
            codomain: ambient,
            matrix: IntMat::identity(n),
        }
    }

    fn check_well_defined(&self) -> Result<()> {
        let r = self.domain.free_rank;
        for (j, d) in self.domain.torsion_orders.iter().enumerate() {
            let col = self.matrix.column(r + j);
            let scaled: Vec<BigInt> = col.iter().map(|x| d * x).collect();
            let image = self.codomain.vector_from_coords(&scaled)?;
            if !image.is_zero() {
                return Err(Error::InvalidArgument(format!(
                    "hom not well-defined: order-{d} torsion generator {j} has image of infinite or incompatible order"
                )));
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> &FgAmbient {
        &self.domain
    }

    pub fn codomain(&self) -> &FgAmbient {
        &self.codomain
    }

    pub fn matrix(&self) -> &IntMat {
        &self.matrix
    }

    pub fn is_endomorphism(&self) -> bool {
        self.domain == self.codomain
    }

    pub fn apply(&self, v: &GroupVector) -> Result<GroupVector> {
        if v.dims() != self.domain.dims() {
            return Err(Error::AmbientMismatch(
                "vector does not lie in the hom's domain".into(),
            ));
        }
        let raw = self.matrix.mul_vec(&v.coords());
        self.codomain.vector_from_coords(&raw)
    }

    pub fn compose(&self, inner: &GroupHom) -> Result<GroupHom> {
        check_same_ambient(&inner.codomain, &self.domain)?;
        GroupHom::new(
            inner.domain.clone(),
            self.codomain.clone(),
            self.matrix.mul(&inner.matrix),
        )
    }
}


#[cfg(test)]
mod tests {
    use super::test_support::membership_bruteforce;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn z(n: usize) -> FgAmbient {
        FgAmbient::free(n)
    }

    #[test]
    fn membership_diagonal_line() {
        let ambient = z(2);
        let g = ambient.vector_from_i64(&[1, 1], &[]).unwrap();
        let s = SubgroupBasis::new(ambient.clone(), vec![g]).unwrap();

        let v = ambient.vector_from_i64(&[2, 2], &[]).unwrap();
        assert_eq!(membership(&v, &s).unwrap(), Some(vec![BigInt::from(2)]));

        let w = ambient.vector_from_i64(&[1, 0], &[]).unwrap();
        assert_eq!(membership(&w, &s).unwrap(), None);

        let zero = ambient.zero();
        let witness = membership(&zero, &s).unwrap().unwrap();
        assert_eq!(recombine(&s, &witness).unwrap(), zero);
    }

    #[test]
    fn membership_ambient_mismatch() {
        let s = SubgroupBasis::trivial(z(2));
        let v = z(3).zero();
        assert!(matches!(
            membership(&v, &s),
            Err(Error::AmbientMismatch(_))
        ));
    }

    #[test]
    fn membership_with_torsion() {
        // Z/2 ⊕ Z, subgroup generated by (1, 2).
        let ambient = FgAmbient::new(1, vec![BigInt::from(2)]).unwrap();
        let g = ambient.vector_from_i64(&[2], &[1]).unwrap();
        let s = SubgroupBasis::new(ambient.clone(), vec![g]).unwrap();
        // 2*(1,2) = (0,4) because the torsion coordinate wraps.
        let v = ambient.vector_from_i64(&[4], &[0]).unwrap();
        let witness = membership(&v, &s).unwrap().unwrap();
        assert_eq!(witness, vec![BigInt::from(2)]);
        assert_eq!(recombine(&s, &witness).unwrap(), v);
        // (1,2) itself.
        let v1 = ambient.vector_from_i64(&[2], &[1]).unwrap();
        assert!(membership(&v1, &s).unwrap().is_some());
        // (1,1) is not in the subgroup.
        let w = ambient.vector_from_i64(&[1], &[1]).unwrap();
        assert!(membership(&w, &s).unwrap().is_none());
    }

    #[test]
    fn membership_agrees_with_bruteforce() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0010);
        for _ in 0..60 {
            let free = rng.gen_range(0..=2usize);
            let torsion_count = rng.gen_range(0..=(3 - free).min(2));
            let orders: Vec<BigInt> = (0..torsion_count)
                .map(|_| BigInt::from(rng.gen_range(2i64..=6)))
                .collect();
            let ambient = FgAmbient::new(free, orders).unwrap();
            let n_gens = rng.gen_range(0..=2usize);
            let gens: Vec<GroupVector> = (0..n_gens)
                .map(|_| {
                    let f: Vec<BigInt> =
                        (0..free).map(|_| BigInt::from(rng.gen_range(-3i64..=3))).collect();
                    let t: Vec<BigInt> = (0..torsion_count)
                        .map(|_| BigInt::from(rng.gen_range(-3i64..=3)))
                        .collect();
                    ambient.vector(f, t).unwrap()
                })
                .collect();
            let s = SubgroupBasis::new(ambient.clone(), gens).unwrap();
            for _ in 0..6 {
                let f: Vec<BigInt> =
                    (0..free).map(|_| BigInt::from(rng.gen_range(-6i64..=6))).collect();
                let t: Vec<BigInt> = (0..torsion_count)
                    .map(|_| BigInt::from(rng.gen_range(-6i64..=6)))
                    .collect();
                let v = ambient.vector(f, t).unwrap();
                let fast = membership(&v, &s).unwrap();
                let slow = membership_bruteforce(&v, &s, 20);
                assert_eq!(fast.is_some(), slow.is_some(), "disagree on {v:?} in {s:?}");
                if let Some(w) = fast {
                    assert_eq!(recombine(&s, &w).unwrap(), v);
                }
            }
        }
    }

    #[test]
    fn intersect_multiples() {
        let ambient = z(1);
        let s4 = SubgroupBasis::new(
            ambient.clone(),
            vec![ambient.vector_from_i64(&[4], &[]).unwrap()],
        )
        .unwrap();
        let s6 = SubgroupBasis::new(
            ambient.clone(),
            vec![ambient.vector_from_i64(&[6], &[]).unwrap()],
        )
        .unwrap();
        let inter = intersect(&s4, &s6).unwrap();
        let s12 = SubgroupBasis::new(
            ambient.clone(),
            vec![ambient.vector_from_i64(&[12], &[]).unwrap()],
        )
        .unwrap();
        assert!(subgroups_equal(&inter, &s12).unwrap());
    }

    #[test]
    fn intersect_idempotent_and_axes() {
        let ambient = z(2);
        let s = SubgroupBasis::new(
            ambient.clone(),
            vec![
                ambient.vector_from_i64(&[1, 2], &[]).unwrap(),
                ambient.vector_from_i64(&[0, 5], &[]).unwrap(),
            ],
        )
        .unwrap();
        assert!(subgroups_equal(&intersect(&s, &s).unwrap(), &s).unwrap());

        let x_axis = SubgroupBasis::new(
            ambient.clone(),
            vec![ambient.vector_from_i64(&[1, 0], &[]).unwrap()],
        )
        .unwrap();
        let y_axis = SubgroupBasis::new(
            ambient.clone(),
            vec![ambient.vector_from_i64(&[0, 1], &[]).unwrap()],
        )
        .unwrap();
        let inter = intersect(&x_axis, &y_axis).unwrap();
        assert!(subgroups_equal(&inter, &SubgroupBasis::trivial(ambient)).unwrap());
    }

    #[test]
    fn quotient_full_subgroup() {
        let ambient = z(2);
        let s = SubgroupBasis::full(ambient);
        let (q, _proj) = quotient(&s).unwrap();
        assert!(q.is_trivial());
    }

    #[test]
    fn quotient_cyclic() {
        let ambient = z(1);
        let s = SubgroupBasis::new(
            ambient.clone(),
            vec![ambient.vector_from_i64(&[5], &[]).unwrap()],
        )
        .unwrap();
        let (q, proj) = quotient(&s).unwrap();
        assert_eq!(q.free_rank(), 0);
        assert_eq!(q.torsion_orders(), &[BigInt::from(5)]);
        let v = ambient.vector_from_i64(&[10], &[]).unwrap();
        assert!(proj.apply(&v).unwrap().is_zero());
        let w = ambient.vector_from_i64(&[3], &[]).unwrap();
        assert!(!proj.apply(&w).unwrap().is_zero());
    }

    #[test]
    fn quotient_normalizes_to_z6() {
        let ambient = z(2);
        let s = SubgroupBasis::new(
            ambient.clone(),
            vec![
                ambient.vector_from_i64(&[2, 0], &[]).unwrap(),
                ambient.vector_from_i64(&[0, 3], &[]).unwrap(),
            ],
        )
        .unwrap();
        let (q, proj) = quotient(&s).unwrap();
        assert_eq!(q.free_rank(), 0);
        assert_eq!(q.torsion_orders(), &[BigInt::from(6)]);
        assert!(q.is_divisibility_sorted());
        // projection(v) = 0  <=>  v in S
        let solver = MembershipSolver::new(&s);
        for a in -4i64..=4 {
            for b in -4i64..=4 {
                let v = ambient.vector_from_i64(&[a, b], &[]).unwrap();
                assert_eq!(
                    proj.apply(&v).unwrap().is_zero(),
                    solver.contains(&v).unwrap()
                );
            }
        }
    }

    #[test]
    fn quotient_vs_membership_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0011);
        for _ in 0..40 {
            let free = rng.gen_range(0..=3usize);
            let torsion_count = rng.gen_range(0..=1usize);
            let orders: Vec<BigInt> = (0..torsion_count)
                .map(|_| BigInt::from(rng.gen_range(2i64..=6)))
                .collect();
            let ambient = FgAmbient::new(free, orders).unwrap();
            let gens: Vec<GroupVector> = (0..rng.gen_range(0..=3usize))
                .map(|_| {
                    let f: Vec<BigInt> =
                        (0..free).map(|_| BigInt::from(rng.gen_range(-4i64..=4))).collect();
                    let t: Vec<BigInt> = (0..torsion_count)
                        .map(|_| BigInt::from(rng.gen_range(0i64..=5)))
                        .collect();
                    ambient.vector(f, t).unwrap()
                })
                .collect();
            let s = SubgroupBasis::new(ambient.clone(), gens).unwrap();
            let (_, proj) = quotient(&s).unwrap();
            let solver = MembershipSolver::new(&s);
            for _ in 0..10 {
                let f: Vec<BigInt> =
                    (0..free).map(|_| BigInt::from(rng.gen_range(-8i64..=8))).collect();
                let t: Vec<BigInt> = (0..torsion_count)
                    .map(|_| BigInt::from(rng.gen_range(0i64..=5)))
                    .collect();
                let v = ambient.vector(f, t).unwrap();
                assert_eq!(
                    proj.apply(&v).unwrap().is_zero(),
                    solver.contains(&v).unwrap()
                );
            }
        }
    }

    #[test]
    fn independence_basics() {
        let ambient = z(2);
        let s = SubgroupBasis::new(
            ambient.clone(),
            vec![ambient.vector_from_i64(&[1, 0], &[]).unwrap()],
        )
        .unwrap();
        // (0,1) is independent of the x-axis.
        let e2 = ambient.vector_from_i64(&[0, 1], &[]).unwrap();
        assert!(independent_wrt(&[e2], &s).unwrap());
        // A nonzero element of S is dependent.
        let v = ambient.vector_from_i64(&[3, 0], &[]).unwrap();
        assert!(!independent_wrt(std::slice::from_ref(&v), &s).unwrap());
        // Any list containing zero is dependent.
        assert!(!independent_wrt(&[ambient.zero()], &s).unwrap());
        // Empty list is vacuously independent.
        assert!(independent_wrt(&[], &s).unwrap());
    }

    #[test]
    fn prop_fg_explicit_instance() {
        let ambient = z(3);
        let gamma = SubgroupBasis::new(
            ambient.clone(),
            vec![ambient.vector_from_i64(&[1, 0, 0], &[]).unwrap()],
        )
        .unwrap();
        let ys = vec![ambient.vector_from_i64(&[0, 1, 0], &[]).unwrap()];
        let zs = vec![ambient.vector_from_i64(&[0, 0, 1], &[]).unwrap()];
        assert!(verify_prop_fg(&gamma, &ys, &zs).unwrap());
    }

    #[test]
    fn prop_fg_empty_data() {
        let ambient = z(2);
        let gamma = SubgroupBasis::new(
            ambient.clone(),
            vec![ambient.vector_from_i64(&[2, 0], &[]).unwrap()],
        )
        .unwrap();
        assert!(verify_prop_fg(&gamma, &[], &[]).unwrap());
    }

    #[test]
    fn prop_fg_rejects_dependent_zs() {
        let ambient = z(2);
        let gamma = SubgroupBasis::new(
            ambient.clone(),
            vec![ambient.vector_from_i64(&[1, 0], &[]).unwrap()],
        )
        .unwrap();
        let ys = vec![ambient.vector_from_i64(&[0, 1], &[]).unwrap()];
        // z = y is inside Γ₁ = Z², hence dependent.
        let zs = vec![ambient.vector_from_i64(&[0, 1], &[]).unwrap()];
        assert!(matches!(
            verify_prop_fg(&gamma, &ys, &zs),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn intersect_vs_membership_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0012);
        for _ in 0..30 {
            let free = rng.gen_range(1..=3usize);
            let ambient = FgAmbient::free(free);
            let make = |rng: &mut ChaCha8Rng| {
                let gens: Vec<GroupVector> = (0..rng.gen_range(1..=2usize))
                    .map(|_| {
                        let f: Vec<BigInt> =
                            (0..free).map(|_| BigInt::from(rng.gen_range(-4i64..=4))).collect();
                        ambient.vector(f, vec![]).unwrap()
                    })
                    .collect();
                SubgroupBasis::new(ambient.clone(), gens).unwrap()
            };
            let s1 = make(&mut rng);
            let s2 = make(&mut rng);
            let inter = intersect(&s1, &s2).unwrap();
            let solver1 = MembershipSolver::new(&s1);
            let solver2 = MembershipSolver::new(&s2);
            let solver_i = MembershipSolver::new(&inter);
            for _ in 0..20 {
                let f: Vec<BigInt> =
                    (0..free).map(|_| BigInt::from(rng.gen_range(-10i64..=10))).collect();
                let v = ambient.vector(f, vec![]).unwrap();
                let both = solver1.contains(&v).unwrap() && solver2.contains(&v).unwrap();
                assert_eq!(solver_i.contains(&v).unwrap(), both);
            }
        }
    }

    #[test]
    fn hom_well_definedness_is_checked() {
        // Z/2 -> Z by 1 is not well-defined.
        let domain = FgAmbient::new(0, vec![BigInt::from(2)]).unwrap();
        let codomain = z(1);
        let m = IntMat::from_i64(&[&[1]]);
        assert!(GroupHom::new(domain.clone(), codomain, m).is_err());
        // Z/2 -> Z/4 by 2 is well-defined.
        let codomain = FgAmbient::new(0, vec![BigInt::from(4)]).unwrap();
        let m = IntMat::from_i64(&[&[2]]);
        let hom = GroupHom::new(domain.clone(), codomain, m).unwrap();
        let x = domain.vector_from_i64(&[], &[1]).unwrap();
        assert_eq!(hom.apply(&x).unwrap().torsion_part(), &[BigInt::from(2)]);
    }

    #[test]
    fn coset_membership() {
        let ambient = z(1);
        let s = SubgroupBasis::new(
            ambient.clone(),
            vec![ambient.vector_from_i64(&[3], &[]).unwrap()],
        )
        .unwrap();
        let translate = ambient.vector_from_i64(&[1], &[]).unwrap();
        let v = ambient.vector_from_i64(&[7], &[]).unwrap();
        assert!(coset_member(&v, &translate, &s).unwrap().is_some());
        let w = ambient.vector_from_i64(&[8], &[]).unwrap();
        assert!(coset_member(&w, &translate, &s).unwrap().is_none());
    }
}
