//! Self-maps and orbits: affine maps on finitely generated models with an
//! exact return-set decomposition, and rational self-maps of the torus with
//! exact iteration and bounded empirical scans.

use num_bigint::BigInt;
use num_traits::One;

use crate::decomp::Bitmap;
use crate::error::{Error, Result};
use crate::expr::RatFun;
use crate::fgab::{FgAmbient, GroupHom, GroupVector, SubgroupBasis};
use crate::lrs::{self, GroupLRS, ZeroSetReport};
use crate::matrix::{self, IntMat};
use crate::mulgroup::{
    factor, FactorConfig, FactoredElement, FieldSpec, FieldValue, MulSubgroup,
};

/// Φ(x) = Ψ(x) + β: a group endomorphism composed with a translation.
#[derive(Clone, Debug)]
pub struct AffineSelfMap {
    endo: GroupHom,
    translation: GroupVector,
}

impl AffineSelfMap {
    pub fn new(endo: GroupHom, translation: GroupVector) -> Result<Self> {
        if !endo.is_endomorphism() {
            return Err(Error::DimensionMismatch(
                "affine map needs a square endomorphism".into(),
            ));
        }
        if translation.dims() != endo.domain().dims() {
            return Err(Error::AmbientMismatch(
                "translation does not lie in the map's ambient".into(),
            ));
        }
        Ok(AffineSelfMap { endo, translation })
    }

    pub fn translation_on(ambient: FgAmbient, translation: GroupVector) -> Result<Self> {
        AffineSelfMap::new(GroupHom::identity(ambient), translation)
    }

    pub fn ambient(&self) -> &FgAmbient {
        self.endo.domain()
    }

    pub fn endo(&self) -> &GroupHom {
        &self.endo
    }

    pub fn translation(&self) -> &GroupVector {
        &self.translation
    }

    pub fn apply(&self, x: &GroupVector) -> Result<GroupVector> {
        let image = self.endo.apply(x)?;
        Ok(self.ambient().add(&image, &self.translation))
    }

    /// The affine map as an augmented (d+1)×(d+1) integer matrix acting on
    /// (coords, 1).
    fn augmented_matrix(&self) -> IntMat {
        let d = self.ambient().dims();
        let mut m = IntMat::zero(d + 1, d + 1);
        for i in 0..d {
            for j in 0..d {
                m.set(i, j, self.endo.matrix().at(i, j).clone());
            }
        }
        for (i, b) in self.translation.coords().iter().enumerate() {
            m.set(i, d, b.clone());
        }
        m.set(d, d, BigInt::one());
        m
    }
}

/// A monic integer relation Ψ^g = Σ_{i=1..g} coeffs[i-1] · Ψ^{g-i}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegralRelation {
    pub coeffs: Vec<BigInt>,
}

impl IntegralRelation {
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }
}

fn matrix_power_table(m: &IntMat, up_to: usize) -> Vec<IntMat> {
    let mut out = vec![IntMat::identity(m.rows())];
    for _ in 0..up_to {
        let next = m.mul(out.last().unwrap());
        out.push(next);
    }
    out
}

fn vectorize(m: &IntMat) -> Vec<BigInt> {
    let mut out = Vec::with_capacity(m.rows() * m.cols());
    for i in 0..m.rows() {
        out.extend(m.row(i));
    }
    out
}

/// The minimal-order monic integer relation satisfied by the endomorphism,
/// found by integer linear solves against increasing powers (Cayley–Hamilton
/// guarantees success at g = dims). Verified on all ambient generators.
pub fn integral_relation(endo: &GroupHom) -> Result<IntegralRelation> {
    if !endo.is_endomorphism() {
        return Err(Error::DimensionMismatch(
            "integral relation needs a square endomorphism".into(),
        ));
    }
    let d = endo.domain().dims();
    if d == 0 {
        return Ok(IntegralRelation {
            coeffs: vec![BigInt::one()],
        });
    }
    let powers = matrix_power_table(endo.matrix(), d);
    for g in 1..=d {
        // columns vec(Ψ^{g-1}), …, vec(Ψ^0); rhs vec(Ψ^g)
        let cols: Vec<Vec<BigInt>> = (0..g).map(|i| vectorize(&powers[g - 1 - i])).collect();
        let system = IntMat::from_cols(d * d, &cols);
        if let Some(e) = matrix::solve(&system, &vectorize(&powers[g])) {
            let relation = IntegralRelation { coeffs: e };
            verify_relation(endo, &relation)?;
            return Ok(relation);
        }
    }
    Err(Error::Invariant(
        "no monic integer relation found up to the dimension".into(),
    ))
}

fn verify_relation(endo: &GroupHom, relation: &IntegralRelation) -> Result<()> {
    let ambient = endo.domain().clone();
    let g = relation.order();
    let powers = matrix_power_table(endo.matrix(), g);
    for k in 0..ambient.dims() {
        let v = ambient.basis_vector(k);
        let lhs = ambient.vector_from_coords(&powers[g].mul_vec(&v.coords()))?;
        let mut rhs = ambient.zero();
        for (i, e) in relation.coeffs.iter().enumerate() {
            let term = ambient.vector_from_coords(&powers[g - 1 - i].mul_vec(&v.coords()))?;
            rhs = ambient.add(&rhs, &ambient.scale(e, &term));
        }
        if lhs != rhs {
            return Err(Error::Invariant(format!(
                "integral relation fails on generator {k}"
            )));
        }
    }
    Ok(())
}

/// Coefficients (of order g+1) of the linear recurrence satisfied by every
/// orbit n ↦ Φ^n(α): (e_1+1, e_2-e_1, …, e_g-e_{g-1}, -e_g).
pub fn orbit_recurrence(map: &AffineSelfMap) -> Result<Vec<BigInt>> {
    let relation = integral_relation(&map.endo)?;
    let e = &relation.coeffs;
    let g = e.len();
    let mut coeffs = Vec::with_capacity(g + 1);
    coeffs.push(&e[0] + 1u8);
    for i in 1..g {
        coeffs.push(&e[i] - &e[i - 1]);
    }
    coeffs.push(-e[g - 1].clone());
    Ok(coeffs)
}

/// Φ^n(α) by sequential application.
pub fn iterate_regular(map: &AffineSelfMap, alpha: &GroupVector, n: u64) -> Result<GroupVector> {
    let mut x = alpha.clone();
    for _ in 0..n {
        x = map.apply(&x)?;
    }
    Ok(x)
}

/// Φ^n(α) through the closed form Ψ^n(α) + Σ_{j<n} Ψ^j(β), computed as an
/// augmented-matrix power; the independent route for cross-checks.
pub fn iterate_regular_closed(
    map: &AffineSelfMap,
    alpha: &GroupVector,
    n: u64,
) -> Result<GroupVector> {
    let d = map.ambient().dims();
    let mut aug = alpha.coords();
    aug.push(BigInt::one());
    let power = pow_matrix(&map.augmented_matrix(), n);
    let image = power.mul_vec(&aug);
    map.ambient().vector_from_coords(&image[..d])
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

/// The finitely generated subgroup ⟨Γ, Φ^0(α), …, Φ^g(α)⟩ containing the
/// whole forward orbit.
pub fn orbit_fg_closure(
    map: &AffineSelfMap,
    alpha: &GroupVector,
    gamma: &SubgroupBasis,
) -> Result<SubgroupBasis> {
    if gamma.ambient() != map.ambient() {
        return Err(Error::AmbientMismatch(
            "subgroup ambient does not match the map's".into(),
        ));
    }
    let g = integral_relation(&map.endo)?.order();
    let mut extra = Vec::with_capacity(g + 1);
    let mut x = alpha.clone();
    for _ in 0..=g {
        extra.push(x.clone());
        x = map.apply(&x)?;
    }
    gamma.join(&extra)
}

/// The orbit of α as a group-valued linear recurrence (order g+1).
pub fn orbit_lrs(map: &AffineSelfMap, alpha: &GroupVector) -> Result<GroupLRS> {
    let coeffs = orbit_recurrence(map)?;
    let order = coeffs.len();
    let mut initial = Vec::with_capacity(order);
    let mut x = alpha.clone();
    for _ in 0..order {
        initial.push(x.clone());
        x = map.apply(&x)?;
    }
    GroupLRS::new(map.ambient().clone(), coeffs, initial)
}

#[derive(Clone, Debug)]
pub enum ReturnSetKind {
    /// Structural decomposition through the group zero-set machinery.
    Exact(ZeroSetReport),
    /// Membership bitmap from a bounded scan.
    Empirical(Bitmap),
}

#[derive(Clone, Debug)]
pub struct ReturnSetResult {
    pub kind: ReturnSetKind,
    pub n_max: u64,
    pub k_max: Option<u64>,
}

impl ReturnSetResult {
    /// Membership bitmap on [0, n_max], whichever representation is held.
    pub fn bitmap(&self) -> Bitmap {
        match &self.kind {
            ReturnSetKind::Empirical(b) => b.clone(),
            ReturnSetKind::Exact(report) => {
                Bitmap::from_fn(self.n_max, |n| report.contains(n))
            }
        }
    }
}

/// Structural decomposition of {n : Φ^n(α) ∈ Γ} for an affine map.
pub fn return_set_regular(
    map: &AffineSelfMap,
    alpha: &GroupVector,
    gamma: &SubgroupBasis,
    k_max: u64,
    n_max: u64,
) -> Result<ReturnSetResult> {
    if gamma.ambient() != map.ambient() {
        return Err(Error::AmbientMismatch(
            "subgroup ambient does not match the map's".into(),
        ));
    }
    let orbit = orbit_lrs(map, alpha)?;
    let report = lrs::group_zero_set(&orbit, gamma, k_max, n_max)?;
    Ok(ReturnSetResult {
        kind: ReturnSetKind::Exact(report),
        n_max,
        k_max: Some(k_max),
    })
}

/// A rational self-map of the N-torus: N coordinate functions in x1..xN.
#[derive(Clone, Debug)]
pub struct RationalTorusMap {
    field: FieldSpec,
    coords: Vec<RatFun>,
}

impl RationalTorusMap {
    pub fn new(coords: Vec<RatFun>) -> Result<Self> {
        let Some(first) = coords.first() else {
            return Err(Error::InvalidArgument(
                "a torus map needs at least one coordinate".into(),
            ));
        };
        let field = first.field();
        let n = coords.len();
        for c in &coords {
            if c.field() != field {
                return Err(Error::FieldMismatch(
                    "mixed fields across coordinates".into(),
                ));
            }
            if c.nvars() != n {
                return Err(Error::DimensionMismatch(format!(
                    "coordinate in {} variables for a {}-dimensional map",
                    c.nvars(),
                    n
                )));
            }
        }
        Ok(RationalTorusMap { field, coords })
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[RatFun] {
        &self.coords
    }

    /// When every coordinate is a constant times a monomial, the exponent
    /// matrix A (rows = output coordinates) and the coefficients.
    pub fn as_monomial_map(&self) -> Option<(Vec<Vec<i64>>, Vec<FieldValue>)> {
        let mut matrix = Vec::with_capacity(self.dim());
        let mut coeffs = Vec::with_capacity(self.dim());
        for c in &self.coords {
            let (coeff, exps) = c.as_monomial()?;
            matrix.push(exps);
            coeffs.push(coeff);
        }
        Some((matrix, coeffs))
    }
}

/// Bounds and reproducibility knobs for exact rational iteration.
#[derive(Clone, Debug)]
pub struct IterateConfig {
    /// Abort when any coordinate's exact representation would exceed this
    /// many bits.
    pub height_cap_bits: u64,
    pub factor: FactorConfig,
    pub seed: u64,
}

impl Default for IterateConfig {
    fn default() -> Self {
        IterateConfig {
            height_cap_bits: 1 << 20,
            factor: FactorConfig::default(),
            seed: 0,
        }
    }
}

enum StepPlan {
    Monomial {
        matrix: Vec<Vec<i64>>,
        coeffs: Vec<FactoredElement>,
    },
    General,
}

fn plan_steps(map: &RationalTorusMap, cfg: &IterateConfig) -> Result<StepPlan> {
    if let Some((matrix, coeffs)) = map.as_monomial_map() {
        let factored: Result<Vec<FactoredElement>> = coeffs
            .iter()
            .map(|c| factor(c, &cfg.factor, cfg.seed))
            .collect();
        if let Ok(coeffs) = factored {
            return Ok(StepPlan::Monomial { matrix, coeffs });
        }
    }
    Ok(StepPlan::General)
}

fn orbit_step(
    map: &RationalTorusMap,
    plan: &StepPlan,
    point: &[FactoredElement],
    step: u64,
    cfg: &IterateConfig,
) -> Result<Vec<FactoredElement>> {
    match plan {
        StepPlan::Monomial { matrix, coeffs } => {
            let mut out = Vec::with_capacity(map.dim());
            for (row, c) in matrix.iter().zip(coeffs) {
                let mut acc = c.clone();
                for (x, &e) in point.iter().zip(row) {
                    acc = acc.mul(&x.pow(&BigInt::from(e)))?;
                }
                for exp in acc.exponents().values() {
                    if exp.bits() > cfg.height_cap_bits {
                        return Err(Error::ResourceBound(format!(
                            "exponent size cap exceeded at step {step}"
                        )));
                    }
                }
                out.push(acc);
            }
            Ok(out)
        }
        StepPlan::General => {
            let mut values = Vec::with_capacity(point.len());
            for x in point {
                let v = x.expand().map_err(|_| {
                    Error::ResourceBound(format!("coordinate size cap exceeded at step {step}"))
                })?;
                if v.size_bits() > cfg.height_cap_bits {
                    return Err(Error::ResourceBound(format!(
                        "coordinate size cap exceeded at step {step}"
                    )));
                }
                values.push(v);
            }
            let mut out = Vec::with_capacity(map.dim());
            for (i, f) in map.coords().iter().enumerate() {
                let Some(value) = f.eval(&values) else {
                    return Err(Error::UndefinedOrbit {
                        step,
                        reason: format!("denominator of coordinate {} vanished", i + 1),
                    });
                };
                if value.is_zero() {
                    return Err(Error::UndefinedOrbit {
                        step,
                        reason: format!("coordinate {} left the torus (became 0)", i + 1),
                    });
                }
                if value.size_bits() > cfg.height_cap_bits {
                    return Err(Error::ResourceBound(format!(
                        "coordinate size cap exceeded at step {step}"
                    )));
                }
                out.push(factor(&value, &cfg.factor, cfg.seed)?);
            }
            Ok(out)
        }
    }
}

fn check_start(map: &RationalTorusMap, start: &[FactoredElement]) -> Result<()> {
    if start.len() != map.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}-dimensional start point for a {}-dimensional map",
            start.len(),
            map.dim()
        )));
    }
    for x in start {
        if x.field() != map.field() {
            return Err(Error::FieldMismatch(
                "start point field does not match the map".into(),
            ));
        }
    }
    Ok(())
}

/// All iterates F^0(x), …, F^{n_max}(x) with exact factored coordinates.
/// Undefined orbits (vanishing denominator, or a coordinate leaving the
/// torus) report the first bad step.
pub fn rational_orbit(
    map: &RationalTorusMap,
    start: &[FactoredElement],
    n_max: u64,
    cfg: &IterateConfig,
) -> Result<Vec<Vec<FactoredElement>>> {
    check_start(map, start)?;
    let plan = plan_steps(map, cfg)?;
    let mut orbit = Vec::with_capacity(n_max as usize + 1);
    orbit.push(start.to_vec());
    for n in 1..=n_max {
        let next = orbit_step(map, &plan, orbit.last().unwrap(), n, cfg)?;
        orbit.push(next);
    }
    Ok(orbit)
}

/// The n-th exact iterate.
pub fn iterate_rational(
    map: &RationalTorusMap,
    start: &[FactoredElement],
    n: u64,
    cfg: &IterateConfig,
) -> Result<Vec<FactoredElement>> {
    Ok(rational_orbit(map, start, n, cfg)?.pop().unwrap())
}

/// Membership bitmap of {n ≤ n_max : F^n(α) ∈ Γ} for a one-dimensional
/// torus map; higher-dimensional products go through the split-model
/// pipeline.
pub fn return_set_empirical(
    map: &RationalTorusMap,
    start: &[FactoredElement],
    gamma: &MulSubgroup,
    n_max: u64,
    cfg: &IterateConfig,
) -> Result<ReturnSetResult> {
    if map.dim() != 1 {
        return Err(Error::Inapplicable(
            "empirical scans against a MulSubgroup are one-dimensional; use the split model for products"
                .into(),
        ));
    }
    if gamma.field() != map.field() {
        return Err(Error::FieldMismatch(
            "subgroup field does not match the map".into(),
        ));
    }
    let orbit = rational_orbit(map, start, n_max, cfg)?;
    let solver = gamma.member_solver();
    let mut bitmap = Bitmap::new(n_max);
    for (n, point) in orbit.iter().enumerate() {
        if solver.member(&point[0])?.is_some() {
            bitmap.set(n as u64);
        }
    }
    Ok(ReturnSetResult {
        kind: ReturnSetKind::Empirical(bitmap),
        n_max,
        k_max: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expression, standard_vars};
    use crate::lrs::CertStatus;
    use num_rational::BigRational;
    use num_traits::Zero;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn z(n: usize) -> FgAmbient {
        FgAmbient::free(n)
    }

    fn hom(ambient: &FgAmbient, rows: &[&[i64]]) -> GroupHom {
        GroupHom::new(ambient.clone(), ambient.clone(), IntMat::from_i64(rows)).unwrap()
    }

    #[test]
    fn integral_relation_examples() {
        let ambient = z(2);
        let identity = GroupHom::identity(ambient.clone());
        let rel = integral_relation(&identity).unwrap();
        assert_eq!(rel.coeffs, vec![BigInt::one()]);

        let fib = hom(&ambient, &[&[0, 1], &[1, 1]]);
        let rel = integral_relation(&fib).unwrap();
        assert_eq!(rel.coeffs, vec![BigInt::one(), BigInt::one()]);

        let ambient1 = z(1);
        let doubling = hom(&ambient1, &[&[2]]);
        let rel = integral_relation(&doubling).unwrap();
        assert_eq!(rel.coeffs, vec![BigInt::from(2)]);
    }

    #[test]
    fn orbit_recurrence_examples() {
        let ambient = z(1);
        // Φ(x) = 2x + 1
        let double_shift = AffineSelfMap::new(
            hom(&ambient, &[&[2]]),
            ambient.vector_from_i64(&[1], &[]).unwrap(),
        )
        .unwrap();
        assert_eq!(
            orbit_recurrence(&double_shift).unwrap(),
            vec![BigInt::from(3), BigInt::from(-2)]
        );
        // orbit from 0: 0,1,3,7,15 with 7 = 3*3 - 2*1
        let orbit: Vec<BigInt> = (0..5)
            .map(|n| {
                iterate_regular(&double_shift, &ambient.zero(), n).unwrap().free_part()[0].clone()
            })
            .collect();
        assert_eq!(
            orbit,
            [0, 1, 3, 7, 15].map(BigInt::from).to_vec()
        );

        // Φ(x) = x + 1
        let shift = AffineSelfMap::translation_on(
            ambient.clone(),
            ambient.vector_from_i64(&[1], &[]).unwrap(),
        )
        .unwrap();
        assert_eq!(
            orbit_recurrence(&shift).unwrap(),
            vec![BigInt::from(2), BigInt::from(-1)]
        );

        // Ψ = [[0,1],[1,1]], β = 0
        let ambient2 = z(2);
        let fib_map =
            AffineSelfMap::new(hom(&ambient2, &[&[0, 1], &[1, 1]]), ambient2.zero()).unwrap();
        assert_eq!(
            orbit_recurrence(&fib_map).unwrap(),
            vec![BigInt::from(2), BigInt::zero(), BigInt::from(-1)]
        );
    }

    #[test]
    fn orbit_recurrence_holds_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0050);
        let mut checked = 0;
        while checked < 100 {
            let free = rng.gen_range(0..=2usize);
            let torsion_count = rng.gen_range(0..=(3usize - free).min(2));
            let orders: Vec<BigInt> = (0..torsion_count)
                .map(|_| BigInt::from(rng.gen_range(2i64..=6)))
                .collect();
            let ambient = FgAmbient::new(free, orders).unwrap();
            let d = ambient.dims();
            if d == 0 {
                continue;
            }
            let mut m = IntMat::zero(d, d);
            for i in 0..d {
                for j in 0..d {
                    m.set(i, j, BigInt::from(rng.gen_range(-3i64..=3)));
                }
            }
            let Ok(endo) = GroupHom::new(ambient.clone(), ambient.clone(), m) else {
                continue; // not well-defined on torsion; try again
            };
            let translation = {
                let f: Vec<BigInt> =
                    (0..free).map(|_| BigInt::from(rng.gen_range(-3i64..=3))).collect();
                let t: Vec<BigInt> = (0..torsion_count)
                    .map(|_| BigInt::from(rng.gen_range(0i64..=5)))
                    .collect();
                ambient.vector(f, t).unwrap()
            };
            let map = AffineSelfMap::new(endo, translation).unwrap();
            let coeffs = orbit_recurrence(&map).unwrap();
            let order = coeffs.len();

            let alpha = {
                let f: Vec<BigInt> =
                    (0..free).map(|_| BigInt::from(rng.gen_range(-3i64..=3))).collect();
                let t: Vec<BigInt> = (0..torsion_count)
                    .map(|_| BigInt::from(rng.gen_range(0i64..=5)))
                    .collect();
                ambient.vector(f, t).unwrap()
            };
            let orbit: Vec<GroupVector> = {
                let mut out = vec![alpha.clone()];
                for _ in 0..(50 + order) {
                    out.push(map.apply(out.last().unwrap()).unwrap());
                }
                out
            };
            for n in 0..=50usize {
                let mut rhs = ambient.zero();
                for (i, c) in coeffs.iter().enumerate() {
                    rhs = ambient.add(&rhs, &ambient.scale(c, &orbit[n + order - 1 - i]));
                }
                assert_eq!(orbit[n + order], rhs, "recurrence fails at n={n}");
            }
            checked += 1;
        }
    }

    #[test]
    fn iterate_examples() {
        let ambient = z(1);
        let double_shift = AffineSelfMap::new(
            hom(&ambient, &[&[2]]),
            ambient.vector_from_i64(&[1], &[]).unwrap(),
        )
        .unwrap();
        let alpha = ambient.zero();
        assert_eq!(iterate_regular(&double_shift, &alpha, 0).unwrap(), alpha);
        assert_eq!(
            iterate_regular(&double_shift, &alpha, 5).unwrap(),
            ambient.vector_from_i64(&[31], &[]).unwrap()
        );

        // translation by (1,1) on Z/2 ⊕ Z
        let mixed = FgAmbient::new(1, vec![BigInt::from(2)]).unwrap();
        let translation = mixed.vector_from_i64(&[1], &[1]).unwrap();
        let map = AffineSelfMap::translation_on(mixed.clone(), translation).unwrap();
        let x3 = iterate_regular(&map, &mixed.zero(), 3).unwrap();
        assert_eq!(x3, mixed.vector_from_i64(&[3], &[1]).unwrap());
    }

    #[test]
    fn closed_form_matches_sequential() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0051);
        for _ in 0..25 {
            let free = rng.gen_range(1..=2usize);
            let ambient = FgAmbient::free(free);
            let mut m = IntMat::zero(free, free);
            for i in 0..free {
                for j in 0..free {
                    m.set(i, j, BigInt::from(rng.gen_range(-2i64..=2)));
                }
            }
            let endo = GroupHom::new(ambient.clone(), ambient.clone(), m).unwrap();
            let translation = ambient
                .vector(
                    (0..free).map(|_| BigInt::from(rng.gen_range(-2i64..=2))).collect(),
                    vec![],
                )
                .unwrap();
            let map = AffineSelfMap::new(endo, translation).unwrap();
            let alpha = ambient
                .vector(
                    (0..free).map(|_| BigInt::from(rng.gen_range(-2i64..=2))).collect(),
                    vec![],
                )
                .unwrap();
            let mut x = alpha.clone();
            for n in 0..=40u64 {
                assert_eq!(iterate_regular_closed(&map, &alpha, n).unwrap(), x);
                x = map.apply(&x).unwrap();
            }
        }
    }

    #[test]
    fn orbit_closure_contains_orbit() {
        let ambient = z(1);
        // Φ(x) = 2x, α = 1, Γ trivial: closure is ⟨1, 2⟩ = Z
        let doubling = AffineSelfMap::new(hom(&ambient, &[&[2]]), ambient.zero()).unwrap();
        let alpha = ambient.vector_from_i64(&[1], &[]).unwrap();
        let gamma = SubgroupBasis::trivial(ambient.clone());
        let closure = orbit_fg_closure(&doubling, &alpha, &gamma).unwrap();
        let solver = crate::fgab::MembershipSolver::new(&closure);
        let mut x = alpha.clone();
        for _ in 0..=200 {
            assert!(solver.contains(&x).unwrap());
            x = doubling.apply(&x).unwrap();
        }
        assert!(solver
            .contains(&ambient.vector_from_i64(&[1], &[]).unwrap())
            .unwrap());

        // Φ(x) = x + 1, α = 0, Γ = 2Z: closure is all of Z
        let shift = AffineSelfMap::translation_on(
            ambient.clone(),
            ambient.vector_from_i64(&[1], &[]).unwrap(),
        )
        .unwrap();
        let gamma2 = SubgroupBasis::new(
            ambient.clone(),
            vec![ambient.vector_from_i64(&[2], &[]).unwrap()],
        )
        .unwrap();
        let closure = orbit_fg_closure(&shift, &ambient.zero(), &gamma2).unwrap();
        assert!(crate::fgab::subgroups_equal(&closure, &SubgroupBasis::full(ambient)).unwrap());
    }

    #[test]
    fn return_set_regular_examples() {
        let ambient = z(1);
        // Φ(x) = x + 2, α = 0, Γ = 3Z → AP (3,0), exact
        let map = AffineSelfMap::translation_on(
            ambient.clone(),
            ambient.vector_from_i64(&[2], &[]).unwrap(),
        )
        .unwrap();
        let gamma = SubgroupBasis::new(
            ambient.clone(),
            vec![ambient.vector_from_i64(&[3], &[]).unwrap()],
        )
        .unwrap();
        let result = return_set_regular(&map, &ambient.zero(), &gamma, 8, 500).unwrap();
        let ReturnSetKind::Exact(report) = &result.kind else {
            panic!("expected exact kind")
        };
        assert_eq!(report.status, CertStatus::Exact);
        for n in 0..=500u64 {
            assert_eq!(report.contains(n), n % 3 == 0);
        }

        // Φ(x) = -x, α = 1, Γ = 2Z → empty, exact
        let neg = AffineSelfMap::new(hom(&ambient, &[&[-1]]), ambient.zero()).unwrap();
        let gamma2 = SubgroupBasis::new(
            ambient.clone(),
            vec![ambient.vector_from_i64(&[2], &[]).unwrap()],
        )
        .unwrap();
        let alpha = ambient.vector_from_i64(&[1], &[]).unwrap();
        let result = return_set_regular(&neg, &alpha, &gamma2, 8, 300).unwrap();
        let ReturnSetKind::Exact(report) = &result.kind else {
            panic!("expected exact kind")
        };
        assert_eq!(report.status, CertStatus::Exact);
        assert!((0..=300u64).all(|n| !report.contains(n)));

        // identity with α ∈ Γ → AP (1,0)
        let ident = AffineSelfMap::translation_on(ambient.clone(), ambient.zero()).unwrap();
        let result = return_set_regular(
            &ident,
            &ambient.vector_from_i64(&[3], &[]).unwrap(),
            &gamma,
            8,
            100,
        )
        .unwrap();
        let ReturnSetKind::Exact(report) = &result.kind else {
            panic!("expected exact kind")
        };
        assert!(report
            .certified_aps
            .iter()
            .any(|ap| ap.modulus == 1 && ap.offset == 0));
    }

    #[test]
    fn return_set_regular_matches_bruteforce_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0052);
        let mut done = 0;
        while done < 20 {
            let free = rng.gen_range(1..=2usize);
            let ambient = FgAmbient::free(free);
            let mut m = IntMat::zero(free, free);
            for i in 0..free {
                for j in 0..free {
                    m.set(i, j, BigInt::from(rng.gen_range(-2i64..=2)));
                }
            }
            let endo = GroupHom::new(ambient.clone(), ambient.clone(), m).unwrap();
            let translation = ambient
                .vector(
                    (0..free).map(|_| BigInt::from(rng.gen_range(-2i64..=2))).collect(),
                    vec![],
                )
                .unwrap();
            let map = AffineSelfMap::new(endo, translation).unwrap();
            let alpha = ambient
                .vector(
                    (0..free).map(|_| BigInt::from(rng.gen_range(-2i64..=2))).collect(),
                    vec![],
                )
                .unwrap();
            let gens: Vec<GroupVector> = (0..rng.gen_range(0..=2usize))
                .map(|_| {
                    ambient
                        .vector(
                            (0..free).map(|_| BigInt::from(rng.gen_range(-3i64..=3))).collect(),
                            vec![],
                        )
                        .unwrap()
                })
                .collect();
            let gamma = SubgroupBasis::new(ambient.clone(), gens).unwrap();
            let n_max = 300u64;
            let Ok(result) = return_set_regular(&map, &alpha, &gamma, 8, n_max) else {
                continue; // term-size bound on wild instances
            };
            let bitmap = result.bitmap();
            let solver = crate::fgab::MembershipSolver::new(&gamma);
            let mut x = alpha.clone();
            for n in 0..=n_max {
                assert_eq!(
                    bitmap.get(n),
                    solver.contains(&x).unwrap(),
                    "mismatch at n={n}"
                );
                x = map.apply(&x).unwrap();
            }
            done += 1;
        }
    }

    fn qfac(n: i64) -> FactoredElement {
        factor(
            &FieldValue::Rational(BigRational::from(BigInt::from(n))),
            &FactorConfig::default(),
            0,
        )
        .unwrap()
    }

    #[test]
    fn iterate_rational_shift_over_q() {
        let field = FieldSpec::Rationals;
        let map = RationalTorusMap::new(vec![parse_expression(
            "x1 + 1",
            &standard_vars(1),
            field,
        )
        .unwrap()])
        .unwrap();
        let cfg = IterateConfig::default();
        let out = iterate_rational(&map, &[qfac(1)], 4, &cfg).unwrap();
        assert_eq!(out[0], qfac(5));
    }

    #[test]
    fn iterate_rational_function_field() {
        let field = FieldSpec::function_field(2).unwrap();
        let map = RationalTorusMap::new(vec![parse_expression(
            "t*x1 - t + 1",
            &standard_vars(1),
            field,
        )
        .unwrap()])
        .unwrap();
        let cfg = IterateConfig::default();
        let t_plus_1 = factor(
            &FieldValue::RationalFunction(crate::mulgroup::FpRatFun::from_poly(
                crate::mulgroup::FpPoly::new(2, vec![1, 1]),
            )),
            &cfg.factor,
            0,
        )
        .unwrap();
        let out = iterate_rational(&map, &[t_plus_1], 3, &cfg).unwrap();
        // Φ^3(t+1) = t^4 + 1
        let expected = FieldValue::RationalFunction(crate::mulgroup::FpRatFun::from_poly(
            crate::mulgroup::FpPoly::new(2, vec![1, 0, 0, 0, 1]),
        ));
        assert_eq!(out[0].expand().unwrap(), expected);
    }

    #[test]
    fn iterate_rational_undefined_orbit() {
        let field = FieldSpec::Rationals;
        let map = RationalTorusMap::new(vec![parse_expression(
            "1/(x1 - 1)",
            &standard_vars(1),
            field,
        )
        .unwrap()])
        .unwrap();
        let cfg = IterateConfig::default();
        let one_step = iterate_rational(&map, &[qfac(2)], 1, &cfg).unwrap();
        assert_eq!(one_step[0], qfac(1));
        let err = iterate_rational(&map, &[qfac(2)], 2, &cfg).unwrap_err();
        match err {
            Error::UndefinedOrbit { step, .. } => assert_eq!(step, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn iterate_rational_rescan_consistency() {
        // Re-evaluation from scratch at sampled n agrees with the running
        // orbit.
        let field = FieldSpec::Rationals;
        let map = RationalTorusMap::new(vec![parse_expression(
            "2*x1",
            &standard_vars(1),
            field,
        )
        .unwrap()])
        .unwrap();
        let cfg = IterateConfig::default();
        let orbit = rational_orbit(&map, &[qfac(3)], 64, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0053);
        for _ in 0..10 {
            let n = rng.gen_range(0..=64u64);
            let fresh = iterate_rational(&map, &[qfac(3)], n, &cfg).unwrap();
            assert_eq!(fresh, orbit[n as usize]);
        }
    }

    #[test]
    fn empirical_example_one_pattern() {
        // x ↦ x+1 from 1, members of <2>: n with n+1 a power of 2.
        let field = FieldSpec::Rationals;
        let map = RationalTorusMap::new(vec![parse_expression(
            "x1 + 1",
            &standard_vars(1),
            field,
        )
        .unwrap()])
        .unwrap();
        let gamma = MulSubgroup::new(field, vec![qfac(2)]).unwrap();
        let cfg = IterateConfig::default();
        let result = return_set_empirical(&map, &[qfac(1)], &gamma, 1023, &cfg).unwrap();
        let bitmap = result.bitmap();
        for n in 0..=1023u64 {
            assert_eq!(bitmap.get(n), (n + 1).is_power_of_two(), "at n={n}");
        }
    }

    #[test]
    fn empirical_squaring_stays_inside() {
        let field = FieldSpec::Rationals;
        let map = RationalTorusMap::new(vec![parse_expression(
            "x1^2",
            &standard_vars(1),
            field,
        )
        .unwrap()])
        .unwrap();
        let gamma = MulSubgroup::new(field, vec![qfac(2)]).unwrap();
        let cfg = IterateConfig::default();
        let result = return_set_empirical(&map, &[qfac(2)], &gamma, 40, &cfg).unwrap();
        let bitmap = result.bitmap();
        assert!((0..=40u64).all(|n| bitmap.get(n)));
    }

    #[test]
    fn monomial_fast_path_matches_expansion() {
        let field = FieldSpec::Rationals;
        let monomial = RationalTorusMap::new(vec![parse_expression(
            "6*x1^2",
            &standard_vars(1),
            field,
        )
        .unwrap()])
        .unwrap();
        assert!(monomial.as_monomial_map().is_some());
        let cfg = IterateConfig::default();
        let fast = rational_orbit(&monomial, &[qfac(2)], 6, &cfg).unwrap();
        // Naive route: expand, evaluate the coordinate function, compare.
        let f = &monomial.coords()[0];
        let mut value = FieldValue::Rational(BigRational::from(BigInt::from(2)));
        for point in &fast {
            assert_eq!(point[0].expand().unwrap(), value);
            value = f.eval(std::slice::from_ref(&value)).unwrap();
        }
    }
}
