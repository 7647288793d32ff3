//! Local similarity measures derived from data spread, and their weighted-sum
//! aggregation into a global similarity.
//!
//! Numeric attributes use a polynomial decay over distance,
//!
//! ```text
//! y(d) = max(0, 1 - d / anchor_range) ^ degree
//! ```
//!
//! where `anchor_range` is the attribute's range, so `y` reaches zero exactly
//! at the range, and `degree` is chosen so that `y(iqr)` equals a target
//! similarity (0.30 by default). Ordinal attributes use an equidistant table
//! spanning `[0, 1]`; unordered categories use exact match.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    labels_equivalent, AttributeKind, AttributeSpec, AttributeValue, Case, CaseBase, Query,
    Schema,
};
use crate::profiler::{categorical_profile, numeric_profile, Profile, StatsProfile};

pub const DEFAULT_TARGET_AT_IQR: f64 = 0.30;
pub const DEFAULT_DEGREE: f64 = 1.0;
pub const MIN_DEGREE: f64 = 0.1;
pub const MAX_DEGREE: f64 = 64.0;
/// Keeps `iqr / range` away from 0 and 1, where the degree diverges.
pub const RATIO_EPSILON: f64 = 1e-6;

fn check_target(target: f64) -> Result<()> {
    if target > 0.0 && target < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "target similarity at the IQR must lie in (0, 1), got {target}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeNote {
    /// IQR or range is zero; the default degree was used.
    DegenerateSpread,
    /// The closed-form degree fell outside `[MIN_DEGREE, MAX_DEGREE]`.
    Clamped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeFit {
    pub degree: f64,
    pub note: Option<DegreeNote>,
}

/// Degree `p` such that `(1 - iqr / range) ^ p = target`.
pub fn derive_degree(iqr: f64, range: f64, target: f64) -> Result<DegreeFit> {
    check_target(target)?;
    if !(iqr.is_finite() && range.is_finite()) || iqr <= 0.0 || range <= 0.0 {
        return Ok(DegreeFit {
            degree: DEFAULT_DEGREE,
            note: Some(DegreeNote::DegenerateSpread),
        });
    }
    let ratio = (iqr / range).clamp(RATIO_EPSILON, 1.0 - RATIO_EPSILON);
    let raw = target.ln() / (1.0 - ratio).ln();
    let degree = raw.clamp(MIN_DEGREE, MAX_DEGREE);
    Ok(DegreeFit {
        degree,
        note: (degree != raw).then_some(DegreeNote::Clamped),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolynomialMeasure {
    degree: f64,
    anchor_range: f64,
    target_at_iqr: f64,
}

impl PolynomialMeasure {
    /// The degree is clamped into `[MIN_DEGREE, MAX_DEGREE]`.
    pub fn new(degree: f64, anchor_range: f64, target_at_iqr: f64) -> Result<Self> {
        if !(anchor_range.is_finite() && anchor_range > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "anchor range must be positive, got {anchor_range}"
            )));
        }
        if !degree.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "degree must be finite, got {degree}"
            )));
        }
        check_target(target_at_iqr)?;
        Ok(Self {
            degree: degree.clamp(MIN_DEGREE, MAX_DEGREE),
            anchor_range,
            target_at_iqr,
        })
    }

    pub fn degree(&self) -> f64 {
        self.degree
    }

    pub fn anchor_range(&self) -> f64 {
        self.anchor_range
    }

    pub fn target_at_iqr(&self) -> f64 {
        self.target_at_iqr
    }

    /// Similarity at distance `d >= 0`.
    pub fn decay(&self, distance: f64) -> f64 {
        if distance >= self.anchor_range {
            return 0.0;
        }
        (1.0 - distance / self.anchor_range)
            .max(0.0)
            .powf(self.degree)
            .min(1.0)
    }

    pub fn similarity(&self, query: f64, case: f64) -> f64 {
        self.decay((query - case).abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrdinalTableMeasure {
    levels: Vec<String>,
}

impl OrdinalTableMeasure {
    pub fn new(levels: Vec<String>) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::InvalidArgument(
                "an ordinal table needs at least two levels".into(),
            ));
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.levels
            .iter()
            .position(|l| l == label)
            .or_else(|| self.levels.iter().position(|l| labels_equivalent(l, label)))
            .ok_or_else(|| Error::UnknownLevel {
                label: label.to_string(),
            })
    }

    /// `1 - |i - j| / (k - 1)` over level indices.
    pub fn similarity(&self, a: &str, b: &str) -> Result<f64> {
        let i = self.index_of(a)?;
        let j = self.index_of(b)?;
        Ok(1.0 - i.abs_diff(j) as f64 / (self.levels.len() - 1) as f64)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactMatchMeasure;

impl ExactMatchMeasure {
    pub fn similarity(&self, a: &str, b: &str) -> f64 {
        if labels_equivalent(a, b) {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LocalMeasure {
    Polynomial(PolynomialMeasure),
    Ordinal(OrdinalTableMeasure),
    ExactMatch,
}

impl LocalMeasure {
    pub fn kind_name(&self) -> &'static str {
        match self {
            LocalMeasure::Polynomial(_) => "polynomial",
            LocalMeasure::Ordinal(_) => "ordinal",
            LocalMeasure::ExactMatch => "exact-match",
        }
    }

    pub fn similarity(&self, query: &AttributeValue, case: &AttributeValue) -> Result<f64> {
        use AttributeValue::{Label, Number};
        match (self, query, case) {
            (LocalMeasure::Polynomial(m), Number(q), Number(c)) => Ok(m.similarity(*q, *c)),
            (LocalMeasure::Ordinal(m), Label(q), Label(c)) => m.similarity(q, c),
            (LocalMeasure::ExactMatch, Label(q), Label(c)) => Ok(ExactMatchMeasure.similarity(q, c)),
            _ => Err(Error::InvalidArgument(format!(
                "{} measure cannot compare `{query}` with `{case}`",
                self.kind_name()
            ))),
        }
    }

    fn fits(&self, spec: &AttributeSpec) -> bool {
        match (self, &spec.kind) {
            (LocalMeasure::Polynomial(_), AttributeKind::Numeric { .. }) => true,
            (LocalMeasure::Ordinal(m), AttributeKind::Ordinal { levels }) => m.levels() == levels,
            (LocalMeasure::ExactMatch, AttributeKind::Categorical { .. }) => true,
            _ => false,
        }
    }
}

/// Profile, measure and weight of one attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeModel {
    pub profile: Profile,
    pub measure: LocalMeasure,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalScore {
    pub attribute: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalScore {
    pub similarity: f64,
    pub breakdown: Vec<LocalScore>,
}

/// Schema plus one [`AttributeModel`] per attribute, in schema order.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityModel {
    schema: Schema,
    attributes: Vec<AttributeModel>,
}

impl SimilarityModel {
    pub fn new(schema: Schema, attributes: Vec<AttributeModel>) -> Result<Self> {
        if attributes.len() != schema.len() {
            return Err(Error::InvalidArgument(format!(
                "{} attribute models for {} schema attributes",
                attributes.len(),
                schema.len()
            )));
        }
        for (spec, attr) in schema.attributes().iter().zip(&attributes) {
            if !attr.measure.fits(spec) {
                return Err(Error::InvalidArgument(format!(
                    "`{}`: {} measure does not fit the attribute kind",
                    spec.name,
                    attr.measure.kind_name()
                )));
            }
            let profile_fits = matches!(
                (&attr.profile, spec.is_numeric()),
                (Profile::Numeric(_), true) | (Profile::Categorical(_), false)
            );
            if !profile_fits {
                return Err(Error::InvalidArgument(format!(
                    "`{}`: profile does not fit the attribute kind",
                    spec.name
                )));
            }
            if !(attr.weight.is_finite() && attr.weight >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "`{}`: weight must be finite and non-negative, got {}",
                    spec.name, attr.weight
                )));
            }
        }
        if !attributes.iter().any(|a| a.weight > 0.0) {
            return Err(Error::InvalidArgument(
                "at least one weight must be positive".into(),
            ));
        }
        Ok(Self { schema, attributes })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn attributes(&self) -> &[AttributeModel] {
        &self.attributes
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeModel> {
        self.schema.index_of(name).map(|i| &self.attributes[i])
    }

    /// Copy of the model with new weights, keyed by attribute name.
    pub fn with_weights(&self, weights: &BTreeMap<String, f64>) -> Result<Self> {
        let mut attributes = self.attributes.clone();
        for (name, &w) in weights {
            let i = self
                .schema
                .index_of(name)
                .ok_or_else(|| Error::UnknownAttribute { name: name.clone() })?;
            attributes[i].weight = w;
        }
        Self::new(self.schema.clone(), attributes)
    }

    /// Local similarities of every attribute present in the query.
    fn local_scores(&self, query: &Query, case: &Case) -> Result<Vec<(usize, f64)>> {
        query
            .values()
            .iter()
            .enumerate()
            .filter_map(|(i, q)| q.as_ref().map(|q| (i, q)))
            .map(|(i, q)| {
                let s = self.attributes[i].measure.similarity(q, &case.values[i])?;
                Ok((i, s))
            })
            .collect()
    }

    fn aggregate(&self, locals: &[(usize, f64)]) -> Result<f64> {
        let mut numerator = 0.0;
        let mut denominator = 0.0;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &(i, s) in locals {
            let w = self.attributes[i].weight;
            if w > 0.0 {
                numerator += w * s;
                denominator += w;
                lo = lo.min(s);
                hi = hi.max(s);
            }
        }
        if denominator <= 0.0 {
            return Err(Error::NoUsableAttributes);
        }
        // Rounding can push the ratio a hair outside the convex hull.
        Ok((numerator / denominator).clamp(lo, hi))
    }

    /// Global similarity only, without the per-attribute breakdown.
    pub fn score(&self, query: &Query, case: &Case) -> Result<f64> {
        self.aggregate(&self.local_scores(query, case)?)
    }

    /// Weighted mean of local similarities over the attributes present in
    /// the query, with weights renormalized over those attributes.
    pub fn global_similarity(&self, query: &Query, case: &Case) -> Result<GlobalScore> {
        let locals = self.local_scores(query, case)?;
        let similarity = self.aggregate(&locals)?;
        let breakdown = locals
            .into_iter()
            .map(|(i, s)| LocalScore {
                attribute: self.schema.attributes()[i].name.clone(),
                similarity: s,
            })
            .collect();
        Ok(GlobalScore {
            similarity,
            breakdown,
        })
    }
}

/// Where the polynomial decay reaches zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorPolicy {
    /// Observed `max - min` of the column.
    #[default]
    Observed,
    /// Span of the attribute's declared bounds, when present.
    Declared,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisOptions {
    pub target_at_iqr: f64,
    pub anchor: AnchorPolicy,
    /// Missing attributes get weight 1.0.
    pub weights: BTreeMap<String, f64>,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            target_at_iqr: DEFAULT_TARGET_AT_IQR,
            anchor: AnchorPolicy::Observed,
            weights: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SynthesisWarning {
    Degree {
        attribute: String,
        note: DegreeNote,
    },
    /// Declared anchor requested but the attribute has no bounds.
    NoDeclaredBounds { attribute: String },
    /// Zero anchor distance replaced by a unit range.
    UnitAnchor { attribute: String },
}

impl fmt::Display for SynthesisWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthesisWarning::Degree {
                attribute,
                note: DegreeNote::DegenerateSpread,
            } => write!(
                f,
                "`{attribute}`: degenerate spread (IQR or range is 0), using degree {DEFAULT_DEGREE}"
            ),
            SynthesisWarning::Degree {
                attribute,
                note: DegreeNote::Clamped,
            } => write!(
                f,
                "`{attribute}`: degree clamped to [{MIN_DEGREE}, {MAX_DEGREE}]"
            ),
            SynthesisWarning::NoDeclaredBounds { attribute } => write!(
                f,
                "`{attribute}`: no declared bounds, anchoring on the observed range"
            ),
            SynthesisWarning::UnitAnchor { attribute } => write!(
                f,
                "`{attribute}`: zero range, anchoring the decay on a unit distance"
            ),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Synthesis {
    pub model: SimilarityModel,
    pub warnings: Vec<SynthesisWarning>,
}

fn numeric_measure(
    spec: &AttributeSpec,
    profile: &StatsProfile,
    options: &SynthesisOptions,
    warnings: &mut Vec<SynthesisWarning>,
) -> Result<PolynomialMeasure> {
    let declared = match &spec.kind {
        AttributeKind::Numeric { bounds } => bounds.map(|b| b.span()),
        _ => None,
    };
    let mut anchor = match (options.anchor, declared) {
        (AnchorPolicy::Declared, Some(span)) => span,
        (AnchorPolicy::Declared, None) => {
            warnings.push(SynthesisWarning::NoDeclaredBounds {
                attribute: spec.name.clone(),
            });
            profile.range
        }
        (AnchorPolicy::Observed, _) => profile.range,
    };
    let fit = derive_degree(profile.iqr, anchor, options.target_at_iqr)?;
    if let Some(note) = fit.note {
        warnings.push(SynthesisWarning::Degree {
            attribute: spec.name.clone(),
            note,
        });
    }
    if anchor <= 0.0 {
        anchor = match declared {
            Some(span) => span,
            None => {
                warnings.push(SynthesisWarning::UnitAnchor {
                    attribute: spec.name.clone(),
                });
                1.0
            }
        };
    }
    PolynomialMeasure::new(fit.degree, anchor, options.target_at_iqr)
}

/// Profiles every attribute of the case base and derives its local measure.
pub fn synthesize_model(casebase: &CaseBase, options: &SynthesisOptions) -> Result<Synthesis> {
    if casebase.is_empty() {
        return Err(Error::EmptyCaseBase);
    }
    check_target(options.target_at_iqr)?;
    let schema = casebase.schema();
    for name in options.weights.keys() {
        if schema.index_of(name).is_none() {
            return Err(Error::UnknownAttribute { name: name.clone() });
        }
    }

    let mut warnings = Vec::new();
    let mut attributes = Vec::with_capacity(schema.len());
    for (i, spec) in schema.attributes().iter().enumerate() {
        let weight = options.weights.get(&spec.name).copied().unwrap_or(1.0);
        let (profile, measure) = match &spec.kind {
            AttributeKind::Numeric { .. } => {
                let column: Vec<f64> = casebase.column(i).filter_map(|v| v.as_number()).collect();
                let profile = numeric_profile(&column)?;
                let measure = numeric_measure(spec, &profile, options, &mut warnings)?;
                (Profile::Numeric(profile), LocalMeasure::Polynomial(measure))
            }
            AttributeKind::Ordinal { levels } => {
                if levels.is_empty() {
                    return Err(Error::MissingOrdinalOrder {
                        attribute: spec.name.clone(),
                    });
                }
                let inventory = categorical_profile(casebase.column(i).filter_map(|v| v.as_label()));
                let measure = OrdinalTableMeasure::new(levels.clone())?;
                (Profile::Categorical(inventory), LocalMeasure::Ordinal(measure))
            }
            AttributeKind::Categorical { .. } => {
                let inventory = categorical_profile(casebase.column(i).filter_map(|v| v.as_label()));
                (Profile::Categorical(inventory), LocalMeasure::ExactMatch)
            }
        };
        attributes.push(AttributeModel {
            profile,
            measure,
            weight,
        });
    }
    let model = SimilarityModel::new(schema.clone(), attributes)?;
    Ok(Synthesis { model, warnings })
}
