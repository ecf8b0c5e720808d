//! The split model G = torus × abelian-model and the executable pipeline
//! that checks the subgroup constructions behind return-set analysis on
//! concrete instances: the base recurrence, the block endomorphism on
//! m-tuples, lifted points β_i, the enlarged subgroup Γ₁, its torus part
//! H = Γ₁ ∩ torus, the entry group E, and the equality of the direct and
//! reformulated return-set scans, together with the perturbed second lift
//! Γ₁' and the intersection law Γ₁ ∩ Γ₁' = Γ.

use std::collections::BTreeSet;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::decomp::Bitmap;
use crate::dynamics::{
    self, AffineSelfMap, IterateConfig, RationalTorusMap, ReturnSetKind,
};
use crate::error::{Error, Result};
use crate::fgab::{self, FgAmbient, GroupHom, GroupVector, MembershipSolver, SubgroupBasis};
use crate::lrs::{self, GroupLRS, IntegerLRS, ZeroSetReport};
use crate::matrix::IntMat;
use crate::mulgroup::{
    self, factor, FactoredElement, FieldSpec, Irreducible, MulSubgroup, Unit,
};

/// The split model: an N-torus over the field times an abstract finitely
/// generated abelian group standing in for the abelian part. The pipeline
/// needs N ≥ 1 (the torus-free case is already covered by the affine
/// return-set machinery).
#[derive(Clone, Debug)]
pub struct SplitModel {
    field: FieldSpec,
    torus_rank: usize,
    abelian_model: FgAmbient,
}

impl SplitModel {
    pub fn new(field: FieldSpec, torus_rank: usize, abelian_model: FgAmbient) -> Result<Self> {
        if torus_rank == 0 {
            return Err(Error::InvalidArgument(
                "split model needs torus rank >= 1; use the affine machinery directly for rank 0"
                    .into(),
            ));
        }
        Ok(SplitModel {
            field,
            torus_rank,
            abelian_model,
        })
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn torus_rank(&self) -> usize {
        self.torus_rank
    }

    pub fn abelian_model(&self) -> &FgAmbient {
        &self.abelian_model
    }

    pub fn point(&self, torus: Vec<FactoredElement>, base: GroupVector) -> Result<ModelPoint> {
        if torus.len() != self.torus_rank {
            return Err(Error::DimensionMismatch(format!(
                "{} torus coordinates for rank {}",
                torus.len(),
                self.torus_rank
            )));
        }
        for x in &torus {
            if x.field() != self.field {
                return Err(Error::FieldMismatch(
                    "torus coordinate field mismatch".into(),
                ));
            }
        }
        if base.dims() != self.abelian_model.dims() {
            return Err(Error::AmbientMismatch(
                "base coordinate does not lie in the abelian model".into(),
            ));
        }
        Ok(ModelPoint { torus, base })
    }

    pub fn identity(&self) -> ModelPoint {
        ModelPoint {
            torus: vec![FactoredElement::one(self.field); self.torus_rank],
            base: self.abelian_model.zero(),
        }
    }

    pub fn add(&self, p: &ModelPoint, q: &ModelPoint) -> Result<ModelPoint> {
        let torus = p
            .torus
            .iter()
            .zip(&q.torus)
            .map(|(a, b)| a.mul(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(ModelPoint {
            torus,
            base: self.abelian_model.add(&p.base, &q.base),
        })
    }

    pub fn neg(&self, p: &ModelPoint) -> ModelPoint {
        ModelPoint {
            torus: p.torus.iter().map(FactoredElement::inv).collect(),
            base: self.abelian_model.neg(&p.base),
        }
    }

    pub fn sub(&self, p: &ModelPoint, q: &ModelPoint) -> Result<ModelPoint> {
        self.add(p, &self.neg(q))
    }

    pub fn scale(&self, k: &BigInt, p: &ModelPoint) -> ModelPoint {
        ModelPoint {
            torus: p.torus.iter().map(|x| x.pow(k)).collect(),
            base: self.abelian_model.scale(k, &p.base),
        }
    }
}

/// A point of the split model: N nonzero torus coordinates (kept factored)
/// and a base coordinate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelPoint {
    torus: Vec<FactoredElement>,
    base: GroupVector,
}

impl ModelPoint {
    pub fn torus(&self) -> &[FactoredElement] {
        &self.torus
    }

    pub fn base(&self) -> &GroupVector {
        &self.base
    }
}

/// The projection G → A onto the base coordinate.
pub fn project(p: &ModelPoint) -> GroupVector {
    p.base.clone()
}

/// A self-map in product form: a rational torus map times an affine base
/// map.
#[derive(Clone, Debug)]
pub struct ModelMap {
    torus_map: RationalTorusMap,
    base_map: AffineSelfMap,
}

impl ModelMap {
    pub fn new(model: &SplitModel, torus_map: RationalTorusMap, base_map: AffineSelfMap) -> Result<Self> {
        if torus_map.dim() != model.torus_rank {
            return Err(Error::DimensionMismatch(
                "torus map dimension does not match the model".into(),
            ));
        }
        if torus_map.field() != model.field {
            return Err(Error::FieldMismatch(
                "torus map field does not match the model".into(),
            ));
        }
        if base_map.ambient() != model.abelian_model() {
            return Err(Error::AmbientMismatch(
                "base map ambient does not match the abelian model".into(),
            ));
        }
        Ok(ModelMap {
            torus_map,
            base_map,
        })
    }

    pub fn torus_map(&self) -> &RationalTorusMap {
        &self.torus_map
    }

    pub fn base_map(&self) -> &AffineSelfMap {
        &self.base_map
    }
}

/// The base-map recurrence: m and integers c with Φ̄^m = Σ_j c_j Φ̄^{m-j}
/// as affine maps. Pure endomorphisms keep their own integral relation;
/// genuine translations pass through the orbit-recurrence transform
/// (order g+1). Verified as a map identity on generators and a few
/// combination points.
pub fn base_recurrence(base_map: &AffineSelfMap) -> Result<(usize, Vec<BigInt>)> {
    let ambient = base_map.ambient().clone();
    let coeffs = if ambient.dims() == 0 || base_map.translation().is_zero() {
        dynamics::integral_relation(base_map.endo())?.coeffs
    } else {
        dynamics::orbit_recurrence(base_map)?
    };
    let m = coeffs.len();

    // Verify Φ̄^m(a) = Σ c_j Φ̄^{m-j}(a) on generators and sums of pairs.
    let mut probes = vec![ambient.zero()];
    for i in 0..ambient.dims() {
        probes.push(ambient.basis_vector(i));
        for j in 0..i {
            probes.push(ambient.add(&ambient.basis_vector(i), &ambient.basis_vector(j)));
        }
    }
    for a in &probes {
        let mut iterates = vec![a.clone()];
        for _ in 0..m {
            iterates.push(base_map.apply(iterates.last().unwrap())?);
        }
        let mut rhs = ambient.zero();
        for (j, c) in coeffs.iter().enumerate() {
            rhs = ambient.add(&rhs, &ambient.scale(c, &iterates[m - 1 - j]));
        }
        if iterates[m] != rhs {
            return Err(Error::Invariant(
                "base recurrence fails as a map identity".into(),
            ));
        }
    }
    Ok((m, coeffs))
}

/// The block shift-and-combine endomorphism on m-tuples:
/// (y_1,…,y_m) ↦ (y_2,…,y_m, Σ_j c_j y_{m+1-j}).
#[derive(Clone, Debug)]
pub struct PsiMap {
    coeffs: Vec<BigInt>,
}

pub fn build_psi(coeffs: Vec<BigInt>) -> Result<PsiMap> {
    if coeffs.is_empty() {
        return Err(Error::InvalidArgument("psi needs m >= 1".into()));
    }
    Ok(PsiMap { coeffs })
}

impl PsiMap {
    pub fn block_count(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn apply(&self, model: &SplitModel, tuple: &[ModelPoint]) -> Result<Vec<ModelPoint>> {
        let m = self.coeffs.len();
        if tuple.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "{}-tuple for a {m}-block endomorphism",
                tuple.len()
            )));
        }
        let mut out: Vec<ModelPoint> = tuple[1..].to_vec();
        let mut last = model.identity();
        for (j, c) in self.coeffs.iter().enumerate() {
            // c_j multiplies y_{m+1-j}; with 1-based j, index m-1-j 0-based.
            let y = &tuple[m - 1 - j];
            last = model.add(&last, &model.scale(c, y))?;
        }
        out.push(last);
        Ok(out)
    }
}

/// Lifting strategy for the β_i.
#[derive(Clone, Debug)]
pub enum LiftStrategy {
    /// Trivial torus coordinates: β_i = (1,…,1; Φ̄^i(ᾱ)).
    Canonical,
    /// Multiply the torus coordinates of β_i by the given ε_i ∈ torus.
    Perturbed(Vec<Vec<FactoredElement>>),
}

/// Model points β_0,…,β_{m-1} with π(β_i) = Φ̄^i(π(α)). When a perturbed
/// lift is requested and a reference subgroup is supplied, the ε are
/// certified independent with respect to it.
pub fn lift_betas(
    model: &SplitModel,
    alpha: &ModelPoint,
    base_map: &AffineSelfMap,
    m: usize,
    strategy: &LiftStrategy,
    independence_reference: Option<&ModelSubgroup>,
) -> Result<Vec<ModelPoint>> {
    let mut base_iterates = vec![alpha.base.clone()];
    for _ in 1..m {
        base_iterates.push(base_map.apply(base_iterates.last().unwrap())?);
    }
    let epsilons = match strategy {
        LiftStrategy::Canonical => None,
        LiftStrategy::Perturbed(eps) => {
            if eps.len() != m {
                return Err(Error::DimensionMismatch(format!(
                    "{} perturbations for m = {m}",
                    eps.len()
                )));
            }
            if let Some(reference) = independence_reference {
                let flat: Vec<Vec<FactoredElement>> = eps.clone();
                if !epsilons_independent(reference, &flat)? {
                    return Err(Error::Precondition(
                        "perturbations are not independent with respect to the reference subgroup"
                            .into(),
                    ));
                }
            }
            Some(eps)
        }
    };
    let mut out = Vec::with_capacity(m);
    for (i, base) in base_iterates.into_iter().enumerate() {
        let torus = match &epsilons {
            None => vec![FactoredElement::one(model.field); model.torus_rank],
            Some(eps) => {
                let row = &eps[i];
                if row.len() != model.torus_rank {
                    return Err(Error::DimensionMismatch(
                        "perturbation is not a full torus tuple".into(),
                    ));
                }
                row.clone()
            }
        };
        out.push(model.point(torus, base)?);
    }
    Ok(out)
}

/// Checks that the torus tuples ε_i are jointly independent with respect to
/// the subgroup, inside an embedding extended by the ε supports.
pub fn epsilons_independent(
    subgroup: &ModelSubgroup,
    epsilons: &[Vec<FactoredElement>],
) -> Result<bool> {
    let mut extra: BTreeSet<Irreducible> = BTreeSet::new();
    for row in epsilons {
        for x in row {
            extra.extend(x.support().cloned());
        }
    }
    let extended = subgroup.with_extra_support(extra)?;
    let eps_points: Vec<GroupVector> = epsilons
        .iter()
        .map(|row| {
            let p = extended.model.point(row.clone(), extended.model.abelian_model.zero())?;
            extended
                .embed_point(&p)?
                .ok_or_else(|| Error::Invariant("extended embedding lost a perturbation".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    fgab::independent_wrt(&eps_points, &extended.lattice)
}

/// The coordinate layout of a product embedding: for each of the N torus
/// coordinates a block of exponent coordinates over the frozen support,
/// then the base's free part; torsion is one unit-group coordinate per
/// torus coordinate (when the unit group is nontrivial) followed by the
/// base torsion.
#[derive(Clone, Debug)]
struct ProductLayout {
    support: Vec<Irreducible>,
    torus_rank: usize,
    unit_order: u64,
    unit_gen: u64,
    base: FgAmbient,
    ambient: FgAmbient,
}

impl ProductLayout {
    fn new(model: &SplitModel, support: Vec<Irreducible>) -> Result<ProductLayout> {
        let n = model.torus_rank;
        let s = support.len();
        let unit_order = model.field.unit_order();
        let base = model.abelian_model.clone();
        let free_rank = n * s + base.free_rank();
        let mut torsion: Vec<BigInt> = Vec::new();
        if unit_order >= 2 {
            torsion.extend(std::iter::repeat_n(BigInt::from(unit_order), n));
        }
        torsion.extend(base.torsion_orders().iter().cloned());
        let ambient = FgAmbient::new(free_rank, torsion)?;
        let unit_gen = match model.field {
            FieldSpec::Rationals => 0,
            FieldSpec::FunctionField { p } => mulgroup::primitive_root(p),
        };
        Ok(ProductLayout {
            support,
            torus_rank: n,
            unit_order,
            unit_gen,
            base,
            ambient,
        })
    }

    fn unit_dlog(&self, field: FieldSpec, unit: &Unit) -> BigInt {
        match (field, unit) {
            (FieldSpec::Rationals, Unit::Sign(neg)) => BigInt::from(*neg as u8),
            (FieldSpec::FunctionField { p }, Unit::Constant(c)) => {
                if p == 2 {
                    BigInt::zero()
                } else {
                    BigInt::from(dlog_bsgs(p, self.unit_gen, *c))
                }
            }
            _ => panic!("unit kind does not match field"),
        }
    }

    fn unit_from_dlog(&self, field: FieldSpec, k: &BigInt) -> Unit {
        match field {
            FieldSpec::Rationals => Unit::Sign(k.is_odd()),
            FieldSpec::FunctionField { p } => {
                if p == 2 {
                    Unit::Constant(1)
                } else {
                    let e = k.mod_floor(&BigInt::from(p - 1)).to_u64().unwrap();
                    Unit::Constant(pow_mod_u64(self.unit_gen, e, p))
                }
            }
        }
    }

    fn coordinates(&self, field: FieldSpec, p: &ModelPoint) -> Result<Option<GroupVector>> {
        let s = self.support.len();
        let mut free = vec![BigInt::zero(); self.ambient.free_rank()];
        for (i, x) in p.torus.iter().enumerate() {
            for (key, e) in x.exponents() {
                match self.support.binary_search(key) {
                    Ok(idx) => free[i * s + idx] = e.clone(),
                    Err(_) => return Ok(None),
                }
            }
        }
        for (j, b) in p.base.free_part().iter().enumerate() {
            free[self.torus_rank * s + j] = b.clone();
        }
        let mut torsion = Vec::new();
        if self.unit_order >= 2 {
            for x in &p.torus {
                torsion.push(self.unit_dlog(field, x.unit()));
            }
        }
        torsion.extend(p.base.torsion_part().iter().cloned());
        Ok(Some(self.ambient.vector(free, torsion)?))
    }

    /// Reconstructs a model point from embedded coordinates.
    fn point_from_coordinates(&self, field: FieldSpec, v: &GroupVector) -> Result<ModelPoint> {
        let s = self.support.len();
        let mut torus = Vec::with_capacity(self.torus_rank);
        for i in 0..self.torus_rank {
            let mut exponents = std::collections::BTreeMap::new();
            for (idx, key) in self.support.iter().enumerate() {
                let e = &v.free_part()[i * s + idx];
                if !e.is_zero() {
                    exponents.insert(key.clone(), e.clone());
                }
            }
            let unit = if self.unit_order >= 2 {
                self.unit_from_dlog(field, &v.torsion_part()[i])
            } else {
                match field {
                    FieldSpec::Rationals => Unit::Sign(false),
                    FieldSpec::FunctionField { .. } => Unit::Constant(1),
                }
            };
            torus.push(FactoredElement::from_parts(field, unit, exponents)?);
        }
        let base_free = v.free_part()[self.torus_rank * s..].to_vec();
        let unit_coords = if self.unit_order >= 2 { self.torus_rank } else { 0 };
        let base_torsion = v.torsion_part()[unit_coords..].to_vec();
        let base = self.base.vector(base_free, base_torsion)?;
        Ok(ModelPoint { torus, base })
    }

    /// The subgroup of the ambient spanned by all torus coordinates.
    fn torus_block_subgroup(&self) -> Result<SubgroupBasis> {
        let s = self.support.len();
        let mut gens = Vec::new();
        for i in 0..self.torus_rank * s {
            gens.push(self.ambient.basis_vector(i));
        }
        if self.unit_order >= 2 {
            let free = self.ambient.free_rank();
            for i in 0..self.torus_rank {
                gens.push(self.ambient.basis_vector(free + i));
            }
        }
        SubgroupBasis::new(self.ambient.clone(), gens)
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

fn dlog_bsgs(p: u64, g: u64, target: u64) -> u64 {
    if p == 2 {
        return 0;
    }
    let order = p - 1;
    let m = (order as f64).sqrt().ceil() as u64 + 1;
    let mut table = std::collections::HashMap::new();
    let mut cur = 1u64;
    for j in 0..m {
        table.entry(cur).or_insert(j);
        cur = ((cur as u128 * g as u128) % p as u128) as u64;
    }
    let gm_inv = pow_mod_u64(pow_mod_u64(g, m, p), p - 2, p);
    let mut gamma = target % p;
    for i in 0..=m {
        if let Some(j) = table.get(&gamma) {
            return (i * m + j) % order;
        }
        gamma = ((gamma as u128 * gm_inv as u128) % p as u128) as u64;
    }
    unreachable!()
}

/// A finitely generated subgroup of the split model, realized as a lattice
/// in the product embedding over its frozen support.
#[derive(Clone, Debug)]
pub struct ModelSubgroup {
    model: SplitModel,
    generators: Vec<ModelPoint>,
    layout: ProductLayout,
    lattice: SubgroupBasis,
}

impl ModelSubgroup {
    pub fn new(model: &SplitModel, generators: Vec<ModelPoint>) -> Result<Self> {
        Self::with_support(model, generators, BTreeSet::new())
    }

    pub fn with_support(
        model: &SplitModel,
        generators: Vec<ModelPoint>,
        extra_support: BTreeSet<Irreducible>,
    ) -> Result<Self> {
        let mut support = extra_support;
        for g in &generators {
            for x in &g.torus {
                if x.field() != model.field {
                    return Err(Error::FieldMismatch(
                        "generator field does not match the model".into(),
                    ));
                }
                support.extend(x.support().cloned());
            }
        }
        let layout = ProductLayout::new(model, support.into_iter().collect())?;
        let coords = generators
            .iter()
            .map(|g| {
                layout
                    .coordinates(model.field, g)?
                    .ok_or_else(|| Error::Invariant("generator escapes its own support".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        let lattice = SubgroupBasis::new(layout.ambient.clone(), coords)?;
        Ok(ModelSubgroup {
            model: model.clone(),
            generators,
            layout,
            lattice,
        })
    }

    /// The same subgroup re-embedded with additional support primes.
    pub fn with_extra_support(&self, extra: BTreeSet<Irreducible>) -> Result<ModelSubgroup> {
        let mut support: BTreeSet<Irreducible> = self.layout.support.iter().cloned().collect();
        support.extend(extra);
        ModelSubgroup::with_support(&self.model, self.generators.clone(), support)
    }

    pub fn model(&self) -> &SplitModel {
        &self.model
    }

    pub fn generators(&self) -> &[ModelPoint] {
        &self.generators
    }

    pub fn support(&self) -> &[Irreducible] {
        &self.layout.support
    }

    pub fn ambient(&self) -> &FgAmbient {
        &self.layout.ambient
    }

    pub fn lattice(&self) -> &SubgroupBasis {
        &self.lattice
    }

    pub fn embed_point(&self, p: &ModelPoint) -> Result<Option<GroupVector>> {
        self.layout.coordinates(self.model.field, p)
    }

    pub fn member(&self, p: &ModelPoint) -> Result<Option<Vec<BigInt>>> {
        match self.embed_point(p)? {
            None => Ok(None),
            Some(coords) => fgab::membership(&coords, &self.lattice),
        }
    }

    pub fn member_solver(&self) -> ModelMemberSolver<'_> {
        ModelMemberSolver {
            group: self,
            solver: MembershipSolver::new(&self.lattice),
        }
    }
}

pub struct ModelMemberSolver<'a> {
    group: &'a ModelSubgroup,
    solver: MembershipSolver,
}

impl ModelMemberSolver<'_> {
    pub fn member(&self, p: &ModelPoint) -> Result<Option<Vec<BigInt>>> {
        match self.group.embed_point(p)? {
            None => Ok(None),
            Some(coords) => self.solver.witness(&coords),
        }
    }
}

/// Γ₁ = ⟨Γ, β_0, …, β_{m-1}⟩.
pub fn gamma1(
    model: &SplitModel,
    gamma_generators: &[ModelPoint],
    betas: &[ModelPoint],
) -> Result<ModelSubgroup> {
    let mut gens = gamma_generators.to_vec();
    gens.extend(betas.iter().cloned());
    ModelSubgroup::new(model, gens)
}

/// Θ(x, y_1, …, y_m) = (x - y_1, y_1, …, y_m).
pub fn theta(model: &SplitModel, tuple: &[ModelPoint]) -> Result<Vec<ModelPoint>> {
    let Some((x, rest)) = tuple.split_first() else {
        return Err(Error::DimensionMismatch("theta needs a nonempty tuple".into()));
    };
    let Some(y1) = rest.first() else {
        return Err(Error::DimensionMismatch(
            "theta needs at least one trailing block".into(),
        ));
    };
    let mut out = Vec::with_capacity(tuple.len());
    out.push(model.sub(x, y1)?);
    out.extend(rest.iter().cloned());
    Ok(out)
}

/// H = Γ₁ ∩ torus, as a sublattice of Γ₁'s product embedding.
pub fn torus_coset_h(g1: &ModelSubgroup) -> Result<SubgroupBasis> {
    let torus_block = g1.layout.torus_block_subgroup()?;
    fgab::intersect(&g1.lattice, &torus_block)
}

/// Decodes the generators of H back into torus tuples; their entries span
/// the group E.
pub fn h_generator_points(g1: &ModelSubgroup, h: &SubgroupBasis) -> Result<Vec<ModelPoint>> {
    h.generators()
        .iter()
        .map(|v| g1.layout.point_from_coordinates(g1.model.field, v))
        .collect()
}

/// The subgroup E of the multiplicative group spanned by all entries of
/// the generators of H.
pub fn entry_group(model: &SplitModel, h_points: &[ModelPoint]) -> Result<MulSubgroup> {
    let mut entries = Vec::new();
    for p in h_points {
        for x in &p.torus {
            if !x.is_one() {
                entries.push(x.clone());
            }
        }
    }
    MulSubgroup::new(model.field, entries)
}

/// Membership of an exponent-lattice linear recurrence in a subgroup along
/// an arithmetic progression: the per-coordinate integer recurrences are
/// merged under a common recurrence and handed to the group zero-set
/// machinery. The caller supplies the recurrences; maps whose exponent
/// sequences are not linear recurrences are inapplicable here.
pub fn exponent_membership_on_ap(
    coordinate_lrs: &[IntegerLRS],
    h: &SubgroupBasis,
    k_max: u64,
    n_max: u64,
) -> Result<ZeroSetReport> {
    let dims = h.ambient().dims();
    if coordinate_lrs.len() != dims {
        return Err(Error::DimensionMismatch(format!(
            "{} coordinate recurrences for an ambient of dimension {dims}",
            coordinate_lrs.len()
        )));
    }
    if dims == 0 {
        return Err(Error::Inapplicable(
            "empty exponent ambient has no membership content".into(),
        ));
    }
    let coeffs = lrs::common_recurrence(coordinate_lrs)?;
    let order = coeffs.len() as u64;
    let ambient = h.ambient().clone();
    let initial: Vec<GroupVector> = (0..order)
        .map(|n| {
            let coords: Vec<BigInt> = coordinate_lrs.iter().map(|l| l.term_at(n)).collect();
            ambient.vector_from_coords(&coords)
        })
        .collect::<Result<Vec<_>>>()?;
    let group_lrs = GroupLRS::new(ambient, coeffs, initial)?;
    lrs::group_zero_set(&group_lrs, h, k_max, n_max)
}

/// Fresh multiplicative generators outside the given support: successive
/// primes over Q, successive monic irreducibles over F_p(t).
pub fn fresh_torus_elements(
    field: FieldSpec,
    count: usize,
    exclude: &BTreeSet<Irreducible>,
) -> Vec<FactoredElement> {
    let mut out = Vec::with_capacity(count);
    match field {
        FieldSpec::Rationals => {
            let mut candidate = 2u64;
            while out.len() < count {
                if mulgroup::is_prime_u64(candidate) {
                    let key = Irreducible::Prime(BigUint::from(candidate));
                    if !exclude.contains(&key) {
                        let mut exps = std::collections::BTreeMap::new();
                        exps.insert(key, BigInt::one());
                        out.push(
                            FactoredElement::from_parts(field, Unit::Sign(false), exps).unwrap(),
                        );
                    }
                }
                candidate += 1;
            }
        }
        FieldSpec::FunctionField { p } => {
            let mut degree = 1usize;
            'outer: loop {
                let total = p.pow(degree as u32);
                for index in 0..total {
                    let poly = mulgroup::nth_monic(p, degree, index);
                    if poly.is_irreducible() {
                        let key = Irreducible::Poly(poly);
                        if !exclude.contains(&key) {
                            let mut exps = std::collections::BTreeMap::new();
                            exps.insert(key, BigInt::one());
                            out.push(
                                FactoredElement::from_parts(field, Unit::Constant(1), exps)
                                    .unwrap(),
                            );
                            if out.len() == count {
                                break 'outer;
                            }
                        }
                    }
                }
                degree += 1;
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PipelineStrategy {
    Canonical,
    /// Also run the second, perturbed lift with auto-generated fresh
    /// perturbations and check the intersection law.
    Perturbed,
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub n_max: u64,
    pub k_max: u64,
    pub strategy: PipelineStrategy,
    pub iterate: IterateConfig,
    /// How far the block-endomorphism projection identity is spot-checked.
    pub psi_check_depth: u64,
}

impl PipelineConfig {
    pub fn new(n_max: u64, strategy: PipelineStrategy) -> Self {
        PipelineConfig {
            n_max,
            k_max: 64,
            strategy,
            iterate: IterateConfig::default(),
            psi_check_depth: 100,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AssertionRecord {
    pub name: &'static str,
    pub pass: bool,
    pub detail: Option<String>,
}

#[derive(Clone, Debug)]
pub struct PerturbedArtifacts {
    pub epsilons: Vec<Vec<FactoredElement>>,
    pub gamma1_prime: ModelSubgroup,
    pub r1_prime: Bitmap,
    pub r_gamma: Bitmap,
}

#[derive(Clone, Debug)]
pub struct PipelineArtifacts {
    pub m: usize,
    pub coeffs: Vec<BigInt>,
    pub betas: Vec<ModelPoint>,
    pub gamma1: ModelSubgroup,
    pub h_basis: SubgroupBasis,
    pub h_points: Vec<ModelPoint>,
    pub entry_group: MulSubgroup,
    /// δ_n = Φ^n(α) - β_n, the first coordinate of Θ on the orbit tuples.
    pub theta_first_coords: Vec<ModelPoint>,
    pub r1: Bitmap,
    pub r1_tilde: Bitmap,
    pub u_bitmaps: Vec<Bitmap>,
    /// Structural decomposition of the Γ₁ return set when the torus map is
    /// monomial (exponent dynamics are affine); None otherwise.
    pub exact_r1: Option<ZeroSetReport>,
    pub perturbed: Option<PerturbedArtifacts>,
    pub assertions: Vec<AssertionRecord>,
}

impl PipelineArtifacts {
    pub fn all_assertions_pass(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }
}

fn record(assertions: &mut Vec<AssertionRecord>, name: &'static str, pass: bool, detail: Option<String>) {
    assertions.push(AssertionRecord { name, pass, detail });
}

/// Runs the whole verification pipeline on one instance. Assertion
/// outcomes are recorded, not thrown; hard errors (undefined orbit,
/// resource bounds) still propagate.
pub fn run_pipeline(
    model: &SplitModel,
    map: &ModelMap,
    alpha: &ModelPoint,
    gamma_generators: &[ModelPoint],
    cfg: &PipelineConfig,
) -> Result<PipelineArtifacts> {
    let mut assertions = Vec::new();
    let n_max = cfg.n_max;

    // Base recurrence and the block endomorphism.
    let (m, coeffs) = base_recurrence(map.base_map())?;
    let psi = build_psi(coeffs.clone())?;

    // Canonical lifts.
    let betas0 = lift_betas(model, alpha, map.base_map(), m, &LiftStrategy::Canonical, None)?;

    // Full-model orbit.
    let torus_orbit =
        dynamics::rational_orbit(map.torus_map(), alpha.torus(), n_max, &cfg.iterate)?;
    let mut orbit = Vec::with_capacity(n_max as usize + 1);
    let mut base_cur = alpha.base.clone();
    for (n, torus) in torus_orbit.into_iter().enumerate() {
        orbit.push(model.point(torus, base_cur.clone())?);
        if (n as u64) < n_max {
            base_cur = map.base_map().apply(&base_cur)?;
        }
    }

    // β_n via the block endomorphism, kept alongside the orbit.
    let mut beta_seq = Vec::with_capacity(n_max as usize + 1);
    let mut tuple = betas0.clone();
    for _ in 0..=n_max {
        beta_seq.push(tuple[0].clone());
        tuple = psi.apply(model, &tuple)?;
    }

    // Spot-check the projection identity for the block endomorphism.
    {
        let depth = cfg.psi_check_depth.min(n_max);
        let mut base_iterates = vec![alpha.base.clone()];
        for _ in 0..(depth as usize + m) {
            base_iterates.push(map.base_map().apply(base_iterates.last().unwrap())?);
        }
        let mut tuple = betas0.clone();
        let mut ok = true;
        'outer: for n in 0..=depth {
            for (j, y) in tuple.iter().enumerate() {
                if y.base != base_iterates[n as usize + j] {
                    ok = false;
                    break 'outer;
                }
            }
            tuple = psi.apply(model, &tuple)?;
        }
        record(&mut assertions, "psi_projection", ok, None);
    }

    // π(Φ^n(α)) = π(β_n) for every computed n.
    {
        let ok = orbit
            .iter()
            .zip(&beta_seq)
            .all(|(x, b)| x.base == b.base);
        record(&mut assertions, "beta_projection", ok, None);
    }

    // Γ₁ and the torus part H.
    let g1 = gamma1(model, gamma_generators, &betas0)?;
    let h_basis = torus_coset_h(&g1)?;
    let h_points = h_generator_points(&g1, &h_basis)?;
    let e_group = entry_group(model, &h_points)?;

    // δ_n = Φ^n(α) - β_n; its base part must vanish.
    let mut deltas = Vec::with_capacity(orbit.len());
    let mut theta_base_trivial = true;
    for (x, b) in orbit.iter().zip(&beta_seq) {
        let d = model.sub(x, b)?;
        if !d.base.is_zero() {
            theta_base_trivial = false;
        }
        deltas.push(d);
    }
    record(&mut assertions, "theta_base_trivial", theta_base_trivial, None);

    // The two return-set scans.
    let g1_solver = g1.member_solver();
    let h_solver = MembershipSolver::new(&h_basis);
    let mut r1 = Bitmap::new(n_max);
    let mut r1_tilde = Bitmap::new(n_max);
    for (n, (x, d)) in orbit.iter().zip(&deltas).enumerate() {
        if g1_solver.member(x)?.is_some() {
            r1.set(n as u64);
        }
        let in_h = match g1.embed_point(d)? {
            None => false,
            Some(coords) => h_solver.witness(&coords)?.is_some(),
        };
        if in_h {
            r1_tilde.set(n as u64);
        }
    }
    record(
        &mut assertions,
        "bitmap_equality",
        r1 == r1_tilde,
        (r1 != r1_tilde).then(|| {
            let diff: Vec<u64> = (0..=n_max)
                .filter(|&n| r1.get(n) != r1_tilde.get(n))
                .take(8)
                .collect();
            format!("first differing indices {diff:?}")
        }),
    );

    // Coordinate scans against the entry group: R̃₁ ⊆ ∩ U_i.
    let e_solver = e_group.member_solver();
    let mut u_bitmaps = vec![Bitmap::new(n_max); model.torus_rank];
    for (n, d) in deltas.iter().enumerate() {
        for (i, coord) in d.torus.iter().enumerate() {
            if e_solver.member(coord)?.is_some() {
                u_bitmaps[i].set(n as u64);
            }
        }
    }
    {
        let ok = (0..=n_max).all(|n| {
            !r1_tilde.get(n) || u_bitmaps.iter().all(|u| u.get(n))
        });
        record(&mut assertions, "r1_inside_entry_scans", ok, None);
    }

    // Exact decomposition through exponent dynamics for monomial torus maps.
    let exact_r1 = exact_monomial_return_set(model, map, alpha, &g1, cfg)?;
    if let Some(report) = &exact_r1 {
        let ok = (0..=n_max).all(|n| report.contains(n) == r1.get(n));
        record(&mut assertions, "exact_matches_scan", ok, None);
    }

    // Perturbed second lift.
    let perturbed = if cfg.strategy == PipelineStrategy::Perturbed {
        let mut exclude: BTreeSet<Irreducible> = g1.support().iter().cloned().collect();
        for x in alpha.torus() {
            exclude.extend(x.support().cloned());
        }
        for d in &deltas {
            for x in &d.torus {
                exclude.extend(x.support().cloned());
            }
        }
        let fresh = fresh_torus_elements(model.field, m, &exclude);
        let epsilons: Vec<Vec<FactoredElement>> = fresh
            .into_iter()
            .map(|f| {
                let mut row = vec![FactoredElement::one(model.field); model.torus_rank];
                row[0] = f;
                row
            })
            .collect();
        let independent = epsilons_independent(&g1, &epsilons)?;
        record(&mut assertions, "epsilon_independent", independent, None);
        if !independent {
            return Err(Error::Precondition(
                "fresh perturbations failed the independence certificate".into(),
            ));
        }
        let betas_prime = lift_betas(
            model,
            alpha,
            map.base_map(),
            m,
            &LiftStrategy::Perturbed(epsilons.clone()),
            Some(&g1),
        )?;
        let g1_prime = gamma1(model, gamma_generators, &betas_prime)?;

        // Γ₁ ∩ Γ₁' = Γ in a common embedding.
        let mut union_support: BTreeSet<Irreducible> = g1.support().iter().cloned().collect();
        union_support.extend(g1_prime.support().iter().cloned());
        let g1_ext = g1.with_extra_support(union_support.clone())?;
        let g1_prime_ext = g1_prime.with_extra_support(union_support.clone())?;
        let gamma_ext =
            ModelSubgroup::with_support(model, gamma_generators.to_vec(), union_support)?;
        let inter = fgab::intersect(g1_ext.lattice(), g1_prime_ext.lattice())?;
        let intersection_ok = fgab::subgroups_equal(&inter, gamma_ext.lattice())?;
        record(&mut assertions, "gamma_intersection", intersection_ok, None);

        // R = R₁ ∧ R₁'.
        let g1p_solver = g1_prime.member_solver();
        let gamma_sub = ModelSubgroup::new(model, gamma_generators.to_vec())?;
        let gamma_solver = gamma_sub.member_solver();
        let mut r1_prime = Bitmap::new(n_max);
        let mut r_gamma = Bitmap::new(n_max);
        for (n, x) in orbit.iter().enumerate() {
            if g1p_solver.member(x)?.is_some() {
                r1_prime.set(n as u64);
            }
            if gamma_solver.member(x)?.is_some() {
                r_gamma.set(n as u64);
            }
        }
        let intersect_ok = r_gamma == r1.and(&r1_prime);
        record(&mut assertions, "return_set_intersection", intersect_ok, None);

        Some(PerturbedArtifacts {
            epsilons,
            gamma1_prime: g1_prime,
            r1_prime,
            r_gamma,
        })
    } else {
        None
    };

    Ok(PipelineArtifacts {
        m,
        coeffs,
        betas: betas0,
        gamma1: g1,
        h_basis,
        h_points,
        entry_group: e_group,
        theta_first_coords: deltas,
        r1,
        r1_tilde,
        u_bitmaps,
        exact_r1,
        perturbed,
        assertions,
    })
}

/// For monomial torus maps the exponent vectors evolve affinely, so the
/// whole model orbit is an affine orbit in one fgab ambient and the Γ₁
/// return set has an exact decomposition.
#[allow(clippy::needless_range_loop)]
fn exact_monomial_return_set(
    model: &SplitModel,
    map: &ModelMap,
    alpha: &ModelPoint,
    g1: &ModelSubgroup,
    cfg: &PipelineConfig,
) -> Result<Option<ZeroSetReport>> {
    let Some((exp_matrix, coeff_values)) = map.torus_map().as_monomial_map() else {
        return Ok(None);
    };
    let coeffs_factored: Vec<FactoredElement> = {
        let mut out = Vec::with_capacity(coeff_values.len());
        for v in &coeff_values {
            out.push(factor(v, &cfg.iterate.factor, cfg.iterate.seed)?);
        }
        out
    };
    // Support: Γ₁'s frozen support plus α's and the coefficients'.
    let mut support: BTreeSet<Irreducible> = g1.support().iter().cloned().collect();
    for x in alpha.torus() {
        support.extend(x.support().cloned());
    }
    for c in &coeffs_factored {
        support.extend(c.support().cloned());
    }
    let g1_ext = g1.with_extra_support(support)?;
    let layout = &g1_ext.layout;
    let field = model.field;

    let n = model.torus_rank;
    let s = layout.support.len();
    let base = &layout.base;
    let dims = layout.ambient.dims();
    let free = layout.ambient.free_rank();
    let unit_coords = if layout.unit_order >= 2 { n } else { 0 };

    // Endomorphism matrix on the exponent ambient.
    let mut em = IntMat::zero(dims, dims);
    for i in 0..n {
        for j in 0..n {
            let a = BigInt::from(exp_matrix[i][j]);
            for k in 0..s {
                em.set(i * s + k, j * s + k, a.clone());
            }
            if layout.unit_order >= 2 {
                em.set(free + i, free + j, a.clone());
            }
        }
    }
    // Base block.
    let base_free = base.free_rank();
    let base_endo = map.base_map().endo().matrix();
    let base_dims = base.dims();
    for i in 0..base_dims {
        for j in 0..base_dims {
            let row = if i < base_free { n * s + i } else { free + unit_coords + (i - base_free) };
            let col = if j < base_free { n * s + j } else { free + unit_coords + (j - base_free) };
            em.set(row, col, base_endo.at(i, j).clone());
        }
    }
    let endo = GroupHom::new(layout.ambient.clone(), layout.ambient.clone(), em)?;

    // Translation: coefficient exponents, units, and the base translation.
    let mut tr_free = vec![BigInt::zero(); free];
    let mut tr_torsion = vec![BigInt::zero(); layout.ambient.torsion_count()];
    for (i, c) in coeffs_factored.iter().enumerate() {
        for (key, e) in c.exponents() {
            let idx = layout
                .support
                .binary_search(key)
                .map_err(|_| Error::Invariant("coefficient prime escaped the support".into()))?;
            tr_free[i * s + idx] = e.clone();
        }
        if layout.unit_order >= 2 {
            tr_torsion[i] = layout.unit_dlog(field, c.unit());
        }
    }
    for (j, b) in map.base_map().translation().free_part().iter().enumerate() {
        tr_free[n * s + j] = b.clone();
    }
    for (j, b) in map.base_map().translation().torsion_part().iter().enumerate() {
        tr_torsion[unit_coords + j] = b.clone();
    }
    let translation = layout.ambient.vector(tr_free, tr_torsion)?;
    let exp_map = AffineSelfMap::new(endo, translation)?;

    let alpha_coords = g1_ext
        .embed_point(alpha)?
        .ok_or_else(|| Error::Invariant("alpha escapes the extended support".into()))?;

    let result = dynamics::return_set_regular(
        &exp_map,
        &alpha_coords,
        g1_ext.lattice(),
        cfg.k_max,
        cfg.n_max,
    )?;
    match result.kind {
        ReturnSetKind::Exact(report) => Ok(Some(report)),
        ReturnSetKind::Empirical(_) => Ok(None),
    }
}
