//! Instance parsing, command dispatch, and report emission.
//!
//! Instances and reports are JSON documents with a versioned `schema`
//! field; integers that may exceed 64 bits travel as decimal strings, and
//! exact rationals as "a/b" strings. Reports are byte-stable for a fixed
//! instance and seed (wall-clock timings are only attached on request).
//!
//! Exit codes: 0 success, 1 parse/schema error, 2 undefined orbit,
//! 3 resource bound exceeded, 4 internal invariant violation.

use std::collections::BTreeSet;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::decomp::{self, Ap, Bitmap, DensityProfile, VerdictConfig};
use crate::dynamics::{AffineSelfMap, IterateConfig, RationalTorusMap, ReturnSetKind};
use crate::error::{Error, Result};
use crate::fgab::{self, FgAmbient, GroupVector, SubgroupBasis};
use crate::lrs::{self, CertStatus, IntegerLRS, ZeroSetReport};
use crate::matrix::IntMat;
use crate::mulgroup::{factor, FactorConfig, FactoredElement, FieldSpec, FieldValue};
use crate::semiabelian::{
    self, ModelMap, ModelPoint, ModelSubgroup, PipelineConfig, PipelineStrategy, SplitModel,
};

pub use crate::expr::{parse_expression, standard_vars};

pub const INSTANCE_SCHEMA: &str = "returnset-instance/1";
pub const REPORT_SCHEMA: &str = "returnset-report/1";

// ---------------------------------------------------------------------------
// instance documents

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct InstanceDoc {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<PointDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<PointDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lrs: Option<LrsDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fgab: Option<FgabDoc>,
    #[serde(default)]
    pub params: ParamsDoc,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldDoc {
    Rationals,
    FunctionField { p: u64 },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ModelDoc {
    pub torus_rank: usize,
    #[serde(default)]
    pub base_free_rank: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub base_torsion: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapDoc {
    /// Pure base map (torus_rank must be 0).
    Affine {
        matrix: Vec<Vec<String>>,
        translation: VectorDoc,
    },
    /// Pure torus map (base must be trivial).
    Rational { coords: Vec<String> },
    /// Product form: torus map times affine base map.
    Product {
        torus_coords: Vec<String>,
        base_matrix: Vec<Vec<String>>,
        base_translation: VectorDoc,
    },
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct VectorDoc {
    #[serde(default)]
    pub free: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub torsion: Vec<String>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct PointDoc {
    #[serde(default)]
    pub torus: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<VectorDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LrsDoc {
    pub coefficients: Vec<String>,
    pub initial: Vec<String>,
    /// Report the level set {n : u_n = constant} instead of the zero set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum FgabDoc {
    Snf {
        matrix: Vec<Vec<String>>,
    },
    Membership {
        ambient: AmbientDoc,
        generators: Vec<VectorDoc>,
        element: VectorDoc,
    },
    Quotient {
        ambient: AmbientDoc,
        generators: Vec<VectorDoc>,
    },
    Intersect {
        ambient: AmbientDoc,
        left: Vec<VectorDoc>,
        right: Vec<VectorDoc>,
    },
    Independent {
        ambient: AmbientDoc,
        generators: Vec<VectorDoc>,
        elements: Vec<VectorDoc>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AmbientDoc {
    pub free_rank: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub torsion: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ParamsDoc {
    #[serde(default = "default_n_max")]
    pub n_max: u64,
    #[serde(default = "default_k_max")]
    pub k_max: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_lengths: Option<Vec<u64>>,
    #[serde(default = "default_height_cap")]
    pub height_cap_bits: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub term_bit_cap: Option<u64>,
    #[serde(default = "default_strategy")]
    pub strategy: String,
}

fn default_n_max() -> u64 {
    1024
}
fn default_k_max() -> u64 {
    decomp::DEFAULT_K_MAX
}
fn default_height_cap() -> u64 {
    1 << 20
}
fn default_strategy() -> String {
    "perturbed".into()
}

impl Default for ParamsDoc {
    fn default() -> Self {
        ParamsDoc {
            n_max: default_n_max(),
            k_max: default_k_max(),
            burn_in: None,
            window_lengths: None,
            height_cap_bits: default_height_cap(),
            seed: 0,
            term_bit_cap: None,
            strategy: default_strategy(),
        }
    }
}

// ---------------------------------------------------------------------------
// report documents

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportDoc {
    pub schema: String,
    pub command: String,
    pub instance: InstanceDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<ResultDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zero_set: Option<ZeroSetDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fgab: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pipeline: Option<PipelineDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assertions: Vec<AssertionDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<serde_json::Value>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResultDoc {
    pub kind: String,
    pub n_max: u64,
    pub member_count: u64,
    pub aps: Vec<ApDoc>,
    pub residual: ResidualDoc,
    pub profile: Vec<ProfileEntryDoc>,
    pub verdict: VerdictDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certified: Option<ZeroSetDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ApDoc {
    pub modulus: u64,
    pub residue: u64,
    pub start: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidualDoc {
    pub count: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elements: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<ResidualSummaryDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidualSummaryDoc {
    pub min: u64,
    pub max: u64,
    pub head: Vec<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileEntryDoc {
    pub window: u64,
    pub max_count: u64,
    pub value: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerdictDoc {
    pub kind: String,
    pub sparse_threshold: String,
    pub dense_threshold: String,
    pub finite_cutoff: u64,
    pub burn_in: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZeroSetDoc {
    pub status: String,
    pub search_bound: u64,
    pub certified_aps: Vec<CertifiedApDoc>,
    pub sporadic: Vec<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertifiedApDoc {
    pub modulus: u64,
    pub offset: u64,
    pub verified_terms: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AssertionDoc {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineDoc {
    pub m: usize,
    pub base_coefficients: Vec<String>,
    pub gamma1_support: Vec<String>,
    pub h_generator_count: usize,
    pub entry_group_generators: Vec<String>,
    pub r1: ResultDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_r1: Option<ZeroSetDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbed: Option<PerturbedDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerturbedDoc {
    pub epsilons: Vec<Vec<String>>,
    pub r_gamma_count: u64,
    pub r1_prime_count: u64,
}

// ---------------------------------------------------------------------------
// builders: documents -> domain objects

fn parse_bigint(s: &str) -> Result<BigInt> {
    BigInt::from_str(s.trim())
        .map_err(|_| Error::Schema(format!("'{s}' is not a decimal integer")))
}

fn parse_bigints(ss: &[String]) -> Result<Vec<BigInt>> {
    ss.iter().map(|s| parse_bigint(s)).collect()
}

fn build_field(doc: &Option<FieldDoc>) -> Result<FieldSpec> {
    match doc {
        None => Err(Error::Schema("missing 'field' section".into())),
        Some(FieldDoc::Rationals) => Ok(FieldSpec::Rationals),
        Some(FieldDoc::FunctionField { p }) => FieldSpec::function_field(*p),
    }
}

fn build_ambient(free_rank: usize, torsion: &[String]) -> Result<FgAmbient> {
    FgAmbient::new(free_rank, parse_bigints(torsion)?)
}

fn build_vector(ambient: &FgAmbient, doc: &VectorDoc) -> Result<GroupVector> {
    ambient.vector(parse_bigints(&doc.free)?, parse_bigints(&doc.torsion)?)
}

fn build_matrix(rows: &[Vec<String>]) -> Result<IntMat> {
    let parsed: Result<Vec<Vec<BigInt>>> = rows.iter().map(|r| parse_bigints(r)).collect();
    let parsed = parsed?;
    if let Some(first) = parsed.first() {
        if parsed.iter().any(|r| r.len() != first.len()) {
            return Err(Error::Schema("ragged matrix".into()));
        }
    }
    Ok(IntMat::from_rows(parsed))
}

/// Parses a constant field element written in the expression grammar.
fn parse_constant(s: &str, field: FieldSpec) -> Result<FieldValue> {
    let f = parse_expression(s, &[], field)?;
    f.as_constant()
        .ok_or_else(|| Error::Schema(format!("'{s}' is not a constant field element")))
}

struct BuiltInstance {
    model: SplitModel,
    map: ModelMap,
    alpha: ModelPoint,
    gamma: Vec<ModelPoint>,
}

fn factor_cfg(_params: &ParamsDoc) -> FactorConfig {
    FactorConfig::default()
}

fn iterate_cfg(params: &ParamsDoc) -> IterateConfig {
    IterateConfig {
        height_cap_bits: params.height_cap_bits,
        factor: factor_cfg(params),
        seed: params.seed,
    }
}

fn build_affine(base: &FgAmbient, matrix: &[Vec<String>], translation: &VectorDoc) -> Result<AffineSelfMap> {
    let m = build_matrix(matrix)?;
    let endo = fgab::GroupHom::new(base.clone(), base.clone(), m)?;
    AffineSelfMap::new(endo, build_vector(base, translation)?)
}

fn build_point(
    model: &SplitModel,
    doc: &PointDoc,
    params: &ParamsDoc,
) -> Result<ModelPoint> {
    if doc.torus.len() != model.torus_rank() {
        return Err(Error::Schema(format!(
            "point has {} torus coordinates; model torus rank is {}",
            doc.torus.len(),
            model.torus_rank()
        )));
    }
    let cfg = factor_cfg(params);
    let torus: Result<Vec<FactoredElement>> = doc
        .torus
        .iter()
        .map(|s| {
            let v = parse_constant(s, model.field())?;
            if v.is_zero() {
                return Err(Error::Schema(format!("torus coordinate '{s}' is zero")));
            }
            factor(&v, &cfg, params.seed)
        })
        .collect();
    let base = match &doc.base {
        Some(v) => build_vector(model.abelian_model(), v)?,
        None => model.abelian_model().zero(),
    };
    model.point(torus?, base)
}

/// Assembles the split model, map, starting point and subgroup from an
/// instance; `affine_only` selects the torus-free route.
fn build_instance(doc: &InstanceDoc) -> Result<BuiltInstance> {
    let field = build_field(&doc.field)?;
    let model_doc = doc
        .model
        .as_ref()
        .ok_or_else(|| Error::Schema("missing 'model' section".into()))?;
    let base = build_ambient(model_doc.base_free_rank, &model_doc.base_torsion)?;
    if model_doc.torus_rank == 0 {
        return Err(Error::Schema(
            "torus rank 0: use the affine route (map kind 'affine')".into(),
        ));
    }
    let model = SplitModel::new(field, model_doc.torus_rank, base.clone())?;
    let vars = standard_vars(model_doc.torus_rank);
    let (torus_coords, base_map) = match doc
        .map
        .as_ref()
        .ok_or_else(|| Error::Schema("missing 'map' section".into()))?
    {
        MapDoc::Rational { coords } => {
            if base.dims() != 0 {
                return Err(Error::Schema(
                    "map kind 'rational' needs a trivial base; use 'product'".into(),
                ));
            }
            let identity = AffineSelfMap::translation_on(base.clone(), base.zero())?;
            (coords.clone(), identity)
        }
        MapDoc::Product {
            torus_coords,
            base_matrix,
            base_translation,
        } => (
            torus_coords.clone(),
            build_affine(&base, base_matrix, base_translation)?,
        ),
        MapDoc::Affine { .. } => {
            return Err(Error::Schema(
                "map kind 'affine' requires torus_rank 0".into(),
            ))
        }
    };
    let parsed: Result<Vec<_>> = torus_coords
        .iter()
        .map(|s| parse_expression(s, &vars, field))
        .collect();
    let torus_map = RationalTorusMap::new(parsed?)?;
    let map = ModelMap::new(&model, torus_map, base_map)?;
    let params = &doc.params;
    let alpha = build_point(
        &model,
        doc.alpha
            .as_ref()
            .ok_or_else(|| Error::Schema("missing 'alpha' section".into()))?,
        params,
    )?;
    let gamma_docs = doc
        .gamma
        .as_ref()
        .ok_or_else(|| Error::Schema("missing 'gamma' section".into()))?;
    let gamma: Result<Vec<ModelPoint>> = gamma_docs
        .iter()
        .map(|g| build_point(&model, g, params))
        .collect();
    Ok(BuiltInstance {
        model,
        map,
        alpha,
        gamma: gamma?,
    })
}

// ---------------------------------------------------------------------------
// report assembly helpers

fn ratio_string(r: &Ratio<u64>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn zero_set_doc(report: &ZeroSetReport) -> ZeroSetDoc {
    ZeroSetDoc {
        status: match report.status {
            CertStatus::Exact => "exact".into(),
            CertStatus::Bounded => "bounded".into(),
        },
        search_bound: report.search_bound,
        certified_aps: report
            .certified_aps
            .iter()
            .map(|ap| CertifiedApDoc {
                modulus: ap.modulus,
                offset: ap.offset,
                verified_terms: ap.verified_terms,
            })
            .collect(),
        sporadic: report.sporadic.clone(),
    }
}

fn residual_doc(residual: &Bitmap) -> ResidualDoc {
    let members: Vec<u64> = residual.members().collect();
    let count = members.len() as u64;
    if count <= 10_000 {
        ResidualDoc {
            count,
            elements: Some(members),
            summary: None,
        }
    } else {
        ResidualDoc {
            count,
            elements: None,
            summary: Some(ResidualSummaryDoc {
                min: members[0],
                max: *members.last().unwrap(),
                head: members.into_iter().take(32).collect(),
            }),
        }
    }
}

fn profile_doc(profile: &DensityProfile) -> Vec<ProfileEntryDoc> {
    profile
        .entries
        .iter()
        .map(|e| ProfileEntryDoc {
            window: e.window,
            max_count: e.max_count,
            value: ratio_string(&e.value),
        })
        .collect()
}

/// Decomposition of a membership bitmap: detected APs, residual, window
/// profile, verdict.
fn decompose_bitmap(
    bitmap: &Bitmap,
    params: &ParamsDoc,
    kind: &str,
    certified: Option<ZeroSetDoc>,
    aps_override: Option<Vec<Ap>>,
) -> Result<ResultDoc> {
    let n_max = bitmap.n_max();
    let burn_in = params.burn_in.unwrap_or_else(|| decomp::default_burn_in(n_max));
    let aps = match aps_override {
        Some(aps) => aps,
        None => decomp::detect_aps(bitmap, params.k_max, burn_in)?,
    };
    let residual = decomp::residual(bitmap, &aps);
    let lengths = params
        .window_lengths
        .clone()
        .unwrap_or_else(|| decomp::default_lengths(n_max));
    let profile = decomp::banach_profile(&residual, &lengths)?;
    let vcfg = VerdictConfig::for_bound(n_max, burn_in);
    let verdict = decomp::verdict(bitmap, &aps, &profile, &vcfg);
    Ok(ResultDoc {
        kind: kind.into(),
        n_max,
        member_count: bitmap.count(),
        aps: aps
            .iter()
            .map(|ap| ApDoc {
                modulus: ap.modulus,
                residue: ap.residue,
                start: ap.start,
            })
            .collect(),
        residual: residual_doc(&residual),
        profile: profile_doc(&profile),
        verdict: VerdictDoc {
            kind: verdict.as_str().into(),
            sparse_threshold: ratio_string(&vcfg.sparse_threshold),
            dense_threshold: ratio_string(&vcfg.dense_threshold),
            finite_cutoff: vcfg.finite_cutoff,
            burn_in,
        },
        certified,
    })
}

fn report_skeleton(command: &str, instance: &InstanceDoc) -> ReportDoc {
    ReportDoc {
        schema: REPORT_SCHEMA.into(),
        command: command.into(),
        instance: instance.clone(),
        result: None,
        zero_set: None,
        fgab: None,
        pipeline: None,
        assertions: Vec::new(),
        notes: instance.notes.clone(),
        timings_ms: None,
    }
}

// ---------------------------------------------------------------------------
// commands

fn check_schema(doc: &InstanceDoc) -> Result<()> {
    if doc.schema != INSTANCE_SCHEMA {
        return Err(Error::Schema(format!(
            "unsupported instance schema '{}' (expected '{INSTANCE_SCHEMA}')",
            doc.schema
        )));
    }
    Ok(())
}

/// `analyze`: the return set of the instance plus its decomposition.
/// Affine instances (torus rank 0) get the exact structural route; models
/// with a torus get a bounded scan.
pub fn cmd_analyze(doc: &InstanceDoc) -> Result<ReportDoc> {
    check_schema(doc)?;
    let mut report = report_skeleton("analyze", doc);
    let params = &doc.params;
    let model_doc = doc
        .model
        .as_ref()
        .ok_or_else(|| Error::Schema("missing 'model' section".into()))?;

    if model_doc.torus_rank == 0 {
        // Exact affine route.
        let base = build_ambient(model_doc.base_free_rank, &model_doc.base_torsion)?;
        let MapDoc::Affine { matrix, translation } = doc
            .map
            .as_ref()
            .ok_or_else(|| Error::Schema("missing 'map' section".into()))?
        else {
            return Err(Error::Schema(
                "torus rank 0 requires map kind 'affine'".into(),
            ));
        };
        let map = build_affine(&base, matrix, translation)?;
        let alpha_doc = doc
            .alpha
            .as_ref()
            .ok_or_else(|| Error::Schema("missing 'alpha' section".into()))?;
        let alpha = match &alpha_doc.base {
            Some(v) => build_vector(&base, v)?,
            None => base.zero(),
        };
        let gamma_docs = doc
            .gamma
            .as_ref()
            .ok_or_else(|| Error::Schema("missing 'gamma' section".into()))?;
        let gens: Result<Vec<GroupVector>> = gamma_docs
            .iter()
            .map(|g| match &g.base {
                Some(v) => build_vector(&base, v),
                None => Ok(base.zero()),
            })
            .collect();
        let gamma = SubgroupBasis::new(base.clone(), gens?)?;
        let result =
            crate::dynamics::return_set_regular(&map, &alpha, &gamma, params.k_max, params.n_max)?;
        let ReturnSetKind::Exact(zero_report) = &result.kind else {
            unreachable!("affine route is structural");
        };
        let bitmap = result.bitmap();
        let aps: Vec<Ap> = zero_report
            .certified_aps
            .iter()
            .map(|ap| Ap {
                modulus: ap.modulus,
                residue: ap.offset % ap.modulus,
                start: ap.offset,
            })
            .collect();
        report.result = Some(decompose_bitmap(
            &bitmap,
            params,
            "exact",
            Some(zero_set_doc(zero_report)),
            Some(aps),
        )?);
        return Ok(report);
    }

    let built = build_instance(doc)?;
    let sub = ModelSubgroup::new(&built.model, built.gamma.clone())?;
    let solver = sub.member_solver();
    let cfg = iterate_cfg(params);
    let torus_orbit = crate::dynamics::rational_orbit(
        built.map.torus_map(),
        built.alpha.torus(),
        params.n_max,
        &cfg,
    )?;
    let mut bitmap = Bitmap::new(params.n_max);
    let mut base_cur = built.alpha.base().clone();
    for (n, torus) in torus_orbit.into_iter().enumerate() {
        let point = built.model.point(torus, base_cur.clone())?;
        if solver.member(&point)?.is_some() {
            bitmap.set(n as u64);
        }
        if (n as u64) < params.n_max {
            base_cur = built.map.base_map().apply(&base_cur)?;
        }
    }
    report.result = Some(decompose_bitmap(&bitmap, params, "empirical", None, None)?);
    Ok(report)
}

/// `zeroset`: the raw zero set (or level set) of an integer linear
/// recurrence.
pub fn cmd_zeroset(doc: &InstanceDoc) -> Result<ReportDoc> {
    check_schema(doc)?;
    let mut report = report_skeleton("zeroset", doc);
    let lrs_doc = doc
        .lrs
        .as_ref()
        .ok_or_else(|| Error::Schema("missing 'lrs' section".into()))?;
    let mut l = IntegerLRS::new(
        parse_bigints(&lrs_doc.coefficients)?,
        parse_bigints(&lrs_doc.initial)?,
    )?;
    if let Some(c) = &lrs_doc.constant {
        l = l.minus_constant(&parse_bigint(c)?);
    }
    let mut zs_params = lrs::ZeroSetParams::new(doc.params.k_max, doc.params.n_max);
    if let Some(cap) = doc.params.term_bit_cap {
        zs_params.term_bit_cap = cap;
    }
    let zero_report = lrs::zero_set_with(&l, &zs_params)?;
    report.zero_set = Some(zero_set_doc(&zero_report));
    Ok(report)
}

/// `pipeline`: the full split-model verification run.
pub fn cmd_pipeline(doc: &InstanceDoc) -> Result<ReportDoc> {
    check_schema(doc)?;
    let mut report = report_skeleton("pipeline", doc);
    let built = build_instance(doc)?;
    let params = &doc.params;
    let strategy = match params.strategy.as_str() {
        "canonical" => PipelineStrategy::Canonical,
        "perturbed" => PipelineStrategy::Perturbed,
        other => {
            return Err(Error::Schema(format!(
                "unknown strategy '{other}' (expected 'canonical' or 'perturbed')"
            )))
        }
    };
    let cfg = PipelineConfig {
        n_max: params.n_max,
        k_max: params.k_max,
        strategy,
        iterate: iterate_cfg(params),
        psi_check_depth: 100,
    };
    let artifacts =
        semiabelian::run_pipeline(&built.model, &built.map, &built.alpha, &built.gamma, &cfg)?;
    report.assertions = artifacts
        .assertions
        .iter()
        .map(|a| AssertionDoc {
            name: a.name.into(),
            pass: a.pass,
            detail: a.detail.clone(),
        })
        .collect();
    let r1_result = decompose_bitmap(&artifacts.r1, params, "empirical", None, None)?;
    report.pipeline = Some(PipelineDoc {
        m: artifacts.m,
        base_coefficients: artifacts.coeffs.iter().map(|c| c.to_string()).collect(),
        gamma1_support: artifacts
            .gamma1
            .support()
            .iter()
            .map(|k| k.to_string())
            .collect(),
        h_generator_count: artifacts.h_basis.generators().len(),
        entry_group_generators: artifacts
            .entry_group
            .generators()
            .iter()
            .map(|g| g.to_string())
            .collect(),
        r1: r1_result,
        exact_r1: artifacts.exact_r1.as_ref().map(zero_set_doc),
        perturbed: artifacts.perturbed.as_ref().map(|p| PerturbedDoc {
            epsilons: p
                .epsilons
                .iter()
                .map(|row| row.iter().map(|e| e.to_string()).collect())
                .collect(),
            r_gamma_count: p.r_gamma.count(),
            r1_prime_count: p.r1_prime.count(),
        }),
    });
    Ok(report)
}

/// `fgab`: normal-form utilities on explicit groups and matrices.
pub fn cmd_fgab(doc: &InstanceDoc) -> Result<ReportDoc> {
    check_schema(doc)?;
    let mut report = report_skeleton("fgab", doc);
    let fg = doc
        .fgab
        .as_ref()
        .ok_or_else(|| Error::Schema("missing 'fgab' section".into()))?;
    let value = match fg {
        FgabDoc::Snf { matrix } => {
            let m = build_matrix(matrix)?;
            let snf = fgab::smith_normal_form(&m);
            let dump = |mat: &IntMat| -> Vec<Vec<String>> {
                (0..mat.rows())
                    .map(|i| (0..mat.cols()).map(|j| mat.at(i, j).to_string()).collect())
                    .collect()
            };
            serde_json::json!({
                "u": dump(&snf.u),
                "d": dump(&snf.d),
                "v": dump(&snf.v),
                "diagonal": snf.diagonal().iter().map(|d| d.to_string()).collect::<Vec<_>>(),
            })
        }
        FgabDoc::Membership {
            ambient,
            generators,
            element,
        } => {
            let amb = build_ambient(ambient.free_rank, &ambient.torsion)?;
            let gens: Result<Vec<GroupVector>> =
                generators.iter().map(|g| build_vector(&amb, g)).collect();
            let sub = SubgroupBasis::new(amb.clone(), gens?)?;
            let v = build_vector(&amb, element)?;
            match fgab::membership(&v, &sub)? {
                Some(w) => serde_json::json!({
                    "member": true,
                    "witness": w.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                }),
                None => serde_json::json!({ "member": false }),
            }
        }
        FgabDoc::Quotient { ambient, generators } => {
            let amb = build_ambient(ambient.free_rank, &ambient.torsion)?;
            let gens: Result<Vec<GroupVector>> =
                generators.iter().map(|g| build_vector(&amb, g)).collect();
            let sub = SubgroupBasis::new(amb.clone(), gens?)?;
            let (q, proj) = fgab::quotient(&sub)?;
            serde_json::json!({
                "free_rank": q.free_rank(),
                "torsion": q.torsion_orders().iter().map(|d| d.to_string()).collect::<Vec<_>>(),
                "projection_rows": (0..proj.matrix().rows()).map(|i| {
                    (0..proj.matrix().cols()).map(|j| proj.matrix().at(i, j).to_string()).collect::<Vec<_>>()
                }).collect::<Vec<_>>(),
            })
        }
        FgabDoc::Intersect { ambient, left, right } => {
            let amb = build_ambient(ambient.free_rank, &ambient.torsion)?;
            let lg: Result<Vec<GroupVector>> = left.iter().map(|g| build_vector(&amb, g)).collect();
            let rg: Result<Vec<GroupVector>> =
                right.iter().map(|g| build_vector(&amb, g)).collect();
            let l = SubgroupBasis::new(amb.clone(), lg?)?;
            let r = SubgroupBasis::new(amb.clone(), rg?)?;
            let inter = fgab::intersect(&l, &r)?;
            serde_json::json!({
                "generators": inter.generators().iter().map(|g| {
                    serde_json::json!({
                        "free": g.free_part().iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                        "torsion": g.torsion_part().iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                    })
                }).collect::<Vec<_>>(),
            })
        }
        FgabDoc::Independent {
            ambient,
            generators,
            elements,
        } => {
            let amb = build_ambient(ambient.free_rank, &ambient.torsion)?;
            let gens: Result<Vec<GroupVector>> =
                generators.iter().map(|g| build_vector(&amb, g)).collect();
            let sub = SubgroupBasis::new(amb.clone(), gens?)?;
            let els: Result<Vec<GroupVector>> =
                elements.iter().map(|g| build_vector(&amb, g)).collect();
            serde_json::json!({ "independent": fgab::independent_wrt(&els?, &sub)? })
        }
    };
    report.fgab = Some(value);
    Ok(report)
}

/// `verify-paper-examples`: the built-in instances with their expected
/// return sets, plus the closed-form iterate identity over F_p(t).
pub fn cmd_verify_examples() -> Result<ReportDoc> {
    let instance = builtin_instance("example1").unwrap();
    let mut report = report_skeleton("verify-paper-examples", &instance);
    report.notes.clear();
    let mut assertions = Vec::new();

    // Example 1: x -> x+1 from 1 against <2>; members are n = 2^k - 1.
    {
        let doc = builtin_instance("example1").unwrap();
        let analyzed = cmd_analyze(&doc)?;
        let result = analyzed.result.unwrap();
        let expected: BTreeSet<u64> = (0u32..=12).map(|k| (1u64 << k) - 1).collect();
        let got: BTreeSet<u64> = result
            .residual
            .elements
            .clone()
            .unwrap_or_default()
            .into_iter()
            .collect();
        let pass = result.aps.is_empty() && got == expected;
        assertions.push(AssertionDoc {
            name: "example1_return_set".into(),
            pass,
            detail: (!pass).then(|| format!("got {got:?}")),
        });
        report.notes.extend(doc.notes.clone());
    }

    // Example 2 over F_2 and F_3: members are n = p^k - 1.
    for (name, p, n_max) in [("example2-p2", 2u64, 256u64), ("example2-p3", 3, 243)] {
        let doc = builtin_instance(name).unwrap();
        let analyzed = cmd_analyze(&doc)?;
        let result = analyzed.result.unwrap();
        let expected: BTreeSet<u64> = (0u32..)
            .map(|k| p.pow(k) - 1)
            .take_while(|&n| n <= n_max)
            .collect();
        let got: BTreeSet<u64> = result
            .residual
            .elements
            .clone()
            .unwrap_or_default()
            .into_iter()
            .collect();
        let pass = result.aps.is_empty() && got == expected;
        assertions.push(AssertionDoc {
            name: format!("{name}_return_set"),
            pass,
            detail: (!pass).then(|| format!("got {got:?}")),
        });
    }

    // Iterate identity over F_2(t): Φ^n(t+1) = t^{n+1} + 1 for n ≤ 200.
    {
        let field = FieldSpec::function_field(2)?;
        let map = RationalTorusMap::new(vec![parse_expression(
            "t*x1 - t + 1",
            &standard_vars(1),
            field,
        )?])?;
        let cfg = IterateConfig::default();
        let start = factor(&parse_constant("t + 1", field)?, &cfg.factor, 0)?;
        let orbit = crate::dynamics::rational_orbit(&map, &[start], 200, &cfg)?;
        let mut pass = true;
        for (n, point) in orbit.iter().enumerate() {
            let expanded = point[0].expand()?;
            let expected = {
                let mut coeffs = vec![0u64; n + 2];
                coeffs[0] = 1;
                coeffs[n + 1] = 1;
                FieldValue::RationalFunction(crate::mulgroup::FpRatFun::from_poly(
                    crate::mulgroup::FpPoly::new(2, coeffs),
                ))
            };
            if expanded != expected {
                pass = false;
                break;
            }
        }
        assertions.push(AssertionDoc {
            name: "example2_iterate_identity".into(),
            pass,
            detail: None,
        });
    }

    report.assertions = assertions;
    Ok(report)
}

// ---------------------------------------------------------------------------
// built-in instances

pub fn builtin_instance(name: &str) -> Option<InstanceDoc> {
    let mk = |field: FieldDoc,
              coords: Vec<&str>,
              alpha: &str,
              gamma: Vec<&str>,
              n_max: u64,
              notes: Vec<String>| InstanceDoc {
        schema: INSTANCE_SCHEMA.into(),
        name: Some(name.to_string()),
        field: Some(field),
        model: Some(ModelDoc {
            torus_rank: 1,
            base_free_rank: 0,
            base_torsion: vec![],
        }),
        map: Some(MapDoc::Rational {
            coords: coords.into_iter().map(String::from).collect(),
        }),
        alpha: Some(PointDoc {
            torus: vec![alpha.to_string()],
            base: None,
        }),
        gamma: Some(
            gamma
                .into_iter()
                .map(|g| PointDoc {
                    torus: vec![g.to_string()],
                    base: None,
                })
                .collect(),
        ),
        lrs: None,
        fgab: None,
        params: ParamsDoc {
            n_max,
            ..ParamsDoc::default()
        },
        notes,
    };
    match name {
        "example1" => Some(mk(
            FieldDoc::Rationals,
            vec!["x1 + 1"],
            "1",
            vec!["2"],
            4095,
            vec![
                "The source text displays this return set as {0} U {2^n : n >= 0}; \
                 the computed set is {2^k - 1 : k >= 0}, since the n-th iterate of 1 is n+1."
                    .into(),
            ],
        )),
        "example2-p2" => Some(mk(
            FieldDoc::FunctionField { p: 2 },
            vec!["t*x1 - t + 1"],
            "t + 1",
            vec!["t + 1"],
            256,
            vec![],
        )),
        "example2-p3" => Some(mk(
            FieldDoc::FunctionField { p: 3 },
            vec!["t*x1 - t + 1"],
            "t + 1",
            vec!["t + 1"],
            243,
            vec![],
        )),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// top-level driver

pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } | Error::Schema(_) => 1,
        Error::UndefinedOrbit { .. } => 2,
        Error::ResourceBound(_) | Error::FactorBound(_) => 3,
        Error::Invariant(_) => 4,
        _ => 1,
    }
}

#[derive(Clone, Debug)]
pub struct CliOptions {
    pub command: String,
    pub instance: Option<String>,
    pub n_max: Option<u64>,
    pub k_max: Option<u64>,
    pub burn_in: Option<u64>,
    pub seed: Option<u64>,
    pub height_cap_bits: Option<u64>,
    pub output: Option<String>,
    pub format: String,
    pub timings: bool,
}

fn load_instance(opts: &CliOptions) -> Result<InstanceDoc> {
    let source = opts
        .instance
        .as_ref()
        .ok_or_else(|| Error::Schema("--instance is required for this command".into()))?;
    let mut doc = if let Some(builtin) = builtin_instance(source) {
        builtin
    } else {
        let text = std::fs::read_to_string(source)
            .map_err(|e| Error::Schema(format!("cannot read '{source}': {e}")))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Schema(format!("invalid instance JSON: {e}")))?
    };
    if let Some(n) = opts.n_max {
        doc.params.n_max = n;
    }
    if let Some(k) = opts.k_max {
        doc.params.k_max = k;
    }
    if let Some(b) = opts.burn_in {
        doc.params.burn_in = Some(b);
    }
    if let Some(s) = opts.seed {
        doc.params.seed = s;
    }
    if let Some(h) = opts.height_cap_bits {
        doc.params.height_cap_bits = h;
    }
    Ok(doc)
}

fn render_text(report: &ReportDoc) -> String {
    let mut out = String::new();
    out.push_str(&format!("command: {}\n", report.command));
    if let Some(result) = &report.result {
        out.push_str(&format!(
            "kind: {}  members: {} of [0, {}]\n",
            result.kind, result.member_count, result.n_max
        ));
        for ap in &result.aps {
            out.push_str(&format!(
                "AP modulus {} residue {} start {}\n",
                ap.modulus, ap.residue, ap.start
            ));
        }
        out.push_str(&format!("residual count: {}\n", result.residual.count));
        if let Some(elements) = &result.residual.elements {
            if elements.len() <= 64 {
                out.push_str(&format!("residual: {elements:?}\n"));
            }
        }
        for e in &result.profile {
            out.push_str(&format!(
                "profile L={} max {} value {}\n",
                e.window, e.max_count, e.value
            ));
        }
        out.push_str(&format!("verdict: {}\n", result.verdict.kind));
        if let Some(cert) = &result.certified {
            out.push_str(&format!("certified status: {}\n", cert.status));
        }
    }
    if let Some(zs) = &report.zero_set {
        out.push_str(&format!(
            "zero set: status {} search_bound {}\n",
            zs.status, zs.search_bound
        ));
        for ap in &zs.certified_aps {
            out.push_str(&format!(
                "certified AP modulus {} offset {}\n",
                ap.modulus, ap.offset
            ));
        }
        out.push_str(&format!("sporadic: {:?}\n", zs.sporadic));
    }
    if let Some(p) = &report.pipeline {
        out.push_str(&format!(
            "pipeline: m={} coefficients {:?}\n",
            p.m, p.base_coefficients
        ));
        out.push_str(&format!(
            "R1 members: {}  verdict {}\n",
            p.r1.member_count, p.r1.verdict.kind
        ));
    }
    for a in &report.assertions {
        out.push_str(&format!(
            "assert {}: {}\n",
            a.name,
            if a.pass { "pass" } else { "FAIL" }
        ));
    }
    for n in &report.notes {
        out.push_str(&format!("note: {n}\n"));
    }
    out
}

/// Runs one command against an instance; returns the report and exit code.
pub fn run(opts: &CliOptions) -> (Option<ReportDoc>, i32) {
    let started = std::time::Instant::now();
    let outcome: Result<ReportDoc> = (|| match opts.command.as_str() {
        "analyze" => cmd_analyze(&load_instance(opts)?),
        "zeroset" => cmd_zeroset(&load_instance(opts)?),
        "pipeline" => cmd_pipeline(&load_instance(opts)?),
        "fgab" => cmd_fgab(&load_instance(opts)?),
        "verify-paper-examples" => cmd_verify_examples(),
        other => Err(Error::Schema(format!("unknown command '{other}'"))),
    })();
    match outcome {
        Ok(mut report) => {
            if opts.timings {
                report.timings_ms = Some(serde_json::json!({
                    "total": started.elapsed().as_millis() as u64,
                }));
            }
            let code = report_exit_code(&report);
            (Some(report), code)
        }
        Err(err) => {
            eprintln!("error: {err}");
            (None, exit_code_for(&err))
        }
    }
}

/// A report with any failed assertion is an internal invariant violation.
pub fn report_exit_code(report: &ReportDoc) -> i32 {
    if report.assertions.iter().any(|a| !a.pass) {
        4
    } else {
        0
    }
}

/// Full CLI entry point; returns the process exit code.
pub fn main_with_args<I: IntoIterator<Item = String>>(args: I) -> i32 {
    use clap::{Arg, ArgAction, Command};
    let cmd = Command::new("returnset")
        .about("Exact return-set computation for self-maps of split torus-by-abelian models")
        .subcommand_required(true)
        .subcommands(
            ["analyze", "zeroset", "pipeline", "fgab", "verify-paper-examples"].map(|name| {
                let mut sub = Command::new(name);
                if name != "verify-paper-examples" {
                    sub = sub.arg(
                        Arg::new("instance")
                            .long("instance")
                            .required(true)
                            .help("Instance JSON path, or a built-in name: example1, example2-p2, example2-p3"),
                    );
                }
                sub.arg(Arg::new("n-max").long("n-max").value_parser(clap::value_parser!(u64)))
                    .arg(Arg::new("k-max").long("k-max").value_parser(clap::value_parser!(u64)))
                    .arg(Arg::new("burn-in").long("burn-in").value_parser(clap::value_parser!(u64)))
                    .arg(Arg::new("seed").long("seed").value_parser(clap::value_parser!(u64)))
                    .arg(
                        Arg::new("height-cap-bits")
                            .long("height-cap-bits")
                            .value_parser(clap::value_parser!(u64)),
                    )
                    .arg(Arg::new("output").long("output"))
                    .arg(
                        Arg::new("format")
                            .long("format")
                            .value_parser(["json", "text"])
                            .default_value("json"),
                    )
                    .arg(Arg::new("timings").long("timings").action(ArgAction::SetTrue))
            }),
        );
    let matches = match cmd.try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let opts = CliOptions {
        command: name.to_string(),
        instance: sub
            .try_get_one::<String>("instance")
            .ok()
            .flatten()
            .cloned(),
        n_max: sub.get_one::<u64>("n-max").copied(),
        k_max: sub.get_one::<u64>("k-max").copied(),
        burn_in: sub.get_one::<u64>("burn-in").copied(),
        seed: sub.get_one::<u64>("seed").copied(),
        height_cap_bits: sub.get_one::<u64>("height-cap-bits").copied(),
        output: sub.get_one::<String>("output").cloned(),
        format: sub
            .get_one::<String>("format")
            .cloned()
            .unwrap_or_else(|| "json".into()),
        timings: sub.get_flag("timings"),
    };
    let (report, code) = run(&opts);
    if let Some(report) = report {
        let rendered = if opts.format == "text" {
            render_text(&report)
        } else {
            let mut s = serde_json::to_string_pretty(&report).expect("report serialization");
            s.push('\n');
            s
        };
        match &opts.output {
            Some(path) => {
                if let Err(e) = std::fs::write(path, rendered) {
                    eprintln!("error: cannot write '{path}': {e}");
                    return 1;
                }
            }
            None => print!("{rendered}"),
        }
    }
    code
}
