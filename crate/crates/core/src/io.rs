//! CSV ingestion, schema inference and configuration, and the JSON model
//! file.
//!
//! A model file bundles the schema, one entry per attribute (profile, measure
//! parameters, weight) and the cases to search, so it can be queried without
//! the original data:
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "id_column": null,
//!   "schema": [{ "name": "STG", "kind": { "type": "numeric" } }, ...],
//!   "attributes": [{
//!     "name": "STG",
//!     "weight": 1.0,
//!     "profile": { "type": "numeric", "count": 403, "mean": 0.35, ... },
//!     "measure": { "type": "polynomial", "degree": 3.1, "anchor_range": 0.99, "target_at_iqr": 0.3 }
//!   }, ...],
//!   "cases": [{ "id": 0, "values": [0.0, 0.0, 0.0, 0.0, 0.0, "Very Low"] }, ...]
//! }
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    normalize_label, AttributeKind, AttributeSpec, Bounds, Case, CaseBase, Query, Record, Schema,
};
use crate::profiler::Profile;
use crate::similarity::{
    AnchorPolicy, AttributeModel, LocalMeasure, PolynomialMeasure, SimilarityModel,
    SynthesisOptions, DEFAULT_TARGET_AT_IQR,
};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindOverride {
    Numeric,
    Ordinal,
    Categorical,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeConfig {
    #[serde(default)]
    pub kind: Option<KindOverride>,
    /// Level order, lowest first. Implies `ordinal` when `kind` is omitted.
    #[serde(default)]
    pub levels: Option<Vec<String>>,
    #[serde(default)]
    pub weight: Option<f64>,
    #[serde(default)]
    pub bounds: Option<[f64; 2]>,
}

/// Per-attribute overrides and global synthesis options.
///
/// ```json
/// {
///   "target_at_iqr": 0.3,
///   "anchor": "observed",
///   "attributes": {
///     "UNS": { "kind": "ordinal", "levels": ["Very Low", "Low", "Middle", "High"] },
///     "PEG": { "weight": 2.0, "bounds": [0.0, 1.0] }
///   }
/// }
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaConfig {
    #[serde(default)]
    pub id_column: Option<String>,
    #[serde(default)]
    pub target_at_iqr: Option<f64>,
    #[serde(default)]
    pub anchor: Option<AnchorPolicy>,
    #[serde(default)]
    pub attributes: BTreeMap<String, AttributeConfig>,
}

impl SchemaConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn synthesis_options(&self) -> SynthesisOptions {
        SynthesisOptions {
            target_at_iqr: self.target_at_iqr.unwrap_or(DEFAULT_TARGET_AT_IQR),
            anchor: self.anchor.unwrap_or_default(),
            weights: self
                .attributes
                .iter()
                .filter_map(|(name, a)| a.weight.map(|w| (name.clone(), w)))
                .collect(),
        }
    }

    /// Applies the overrides on top of an inferred schema.
    pub fn apply(&self, inferred: &Schema) -> Result<Schema> {
        for name in self.attributes.keys() {
            if inferred.index_of(name).is_none() {
                return Err(Error::UnknownAttribute { name: name.clone() });
            }
        }
        let attributes = inferred
            .attributes()
            .iter()
            .map(|spec| match self.attributes.get(&spec.name) {
                Some(config) => configure(spec, config),
                None => Ok(spec.clone()),
            })
            .collect::<Result<Vec<_>>>()?;
        Schema::new(attributes)
    }
}

fn configure(spec: &AttributeSpec, config: &AttributeConfig) -> Result<AttributeSpec> {
    let kind = config.kind.unwrap_or(match (&config.levels, &spec.kind) {
        (Some(_), _) => KindOverride::Ordinal,
        (None, AttributeKind::Numeric { .. }) => KindOverride::Numeric,
        (None, AttributeKind::Ordinal { .. }) => KindOverride::Ordinal,
        (None, AttributeKind::Categorical { .. }) => KindOverride::Categorical,
    });
    if config.bounds.is_some() && kind != KindOverride::Numeric {
        return Err(Error::InvalidSchema(format!(
            "`{}`: bounds apply to numeric attributes only",
            spec.name
        )));
    }
    let kind = match kind {
        KindOverride::Numeric => AttributeKind::Numeric {
            bounds: config.bounds.map(|[min, max]| Bounds { min, max }),
        },
        KindOverride::Ordinal => AttributeKind::Ordinal {
            levels: config.levels.clone().ok_or_else(|| Error::MissingOrdinalOrder {
                attribute: spec.name.clone(),
            })?,
        },
        KindOverride::Categorical => AttributeKind::Categorical {
            categories: match &spec.kind {
                AttributeKind::Categorical { categories } => categories.clone(),
                _ => Vec::new(),
            },
        },
    };
    Ok(AttributeSpec {
        name: spec.name.clone(),
        kind,
    })
}

/// Parsed rows of a CSV file together with the schema describing them.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: Vec<String>,
    pub records: Vec<Record>,
    pub schema: Schema,
    pub id_column: Option<String>,
}

/// Reads header and rows. Header names and cells are trimmed.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Record>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(file);
    let mut rows = reader.records();
    let header: Vec<String> = match rows.next() {
        None => return Err(Error::EmptyFile),
        Some(row) => row?.iter().map(|h| h.trim().to_string()).collect(),
    };
    if header.iter().all(String::is_empty) {
        return Err(Error::EmptyFile);
    }
    let mut seen = HashSet::new();
    for name in &header {
        if name.is_empty() || !seen.insert(name.as_str()) {
            return Err(Error::InvalidSchema(format!(
                "header has an empty or duplicate column name `{name}`"
            )));
        }
    }
    let mut records = Vec::new();
    for (row, fields) in rows.enumerate() {
        let fields = fields?;
        if fields.len() == 1 && fields[0].trim().is_empty() && header.len() > 1 {
            continue;
        }
        if fields.len() != header.len() {
            return Err(Error::MalformedRow {
                row,
                expected: header.len(),
                found: fields.len(),
            });
        }
        records.push(
            header
                .iter()
                .zip(fields.iter())
                .map(|(h, v)| (h.clone(), v.trim().to_string()))
                .collect(),
        );
    }
    Ok((header, records))
}

/// Loads a CSV file and resolves its schema from inference plus `config`.
pub fn ingest_csv(path: &Path, config: Option<&SchemaConfig>) -> Result<Dataset> {
    let (header, records) = read_csv(path)?;
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let id_column = config.and_then(|c| c.id_column.clone());
    if let Some(id) = &id_column {
        if !header.contains(id) {
            return Err(Error::UnknownAttribute { name: id.clone() });
        }
    }
    let columns: Vec<&str> = header
        .iter()
        .map(String::as_str)
        .filter(|h| Some(*h) != id_column.as_deref())
        .collect();
    let inferred = infer_schema(&columns, &records)?;
    let schema = match config {
        Some(config) => config.apply(&inferred)?,
        None => inferred,
    };
    Ok(Dataset {
        header,
        records,
        schema,
        id_column,
    })
}

/// A column is numeric iff every non-empty cell parses as a finite number.
/// Anything else is an unordered categorical over the labels seen.
pub fn infer_schema(columns: &[&str], records: &[Record]) -> Result<Schema> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let attributes = columns
        .iter()
        .map(|&name| {
            let cells = || {
                records
                    .iter()
                    .filter_map(move |r| r.get(name))
                    .map(|v| v.trim())
                    .filter(|v| !v.is_empty())
            };
            let numeric = cells().next().is_some()
                && cells().all(|v| v.parse::<f64>().is_ok_and(f64::is_finite));
            if numeric {
                AttributeSpec::numeric(name)
            } else {
                let mut seen = HashSet::new();
                let categories: Vec<&str> = cells().filter(|v| seen.insert(normalize_label(v))).collect();
                AttributeSpec::categorical(name, categories)
            }
        })
        .collect();
    Schema::new(attributes)
}

/// Reads a query file: a CSV whose header names a subset of the schema
/// attributes. Empty cells are absent attributes. Each row parses
/// independently.
pub fn read_queries(path: &Path, schema: &Schema) -> Result<Vec<Result<Query>>> {
    let (header, records) = read_csv(path)?;
    for name in &header {
        if schema.index_of(name).is_none() {
            return Err(Error::UnknownAttribute { name: name.clone() });
        }
    }
    Ok(records
        .iter()
        .map(|r| Query::from_record(r, schema))
        .collect())
}

/// A similarity model together with the cases it searches.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredModel {
    pub model: SimilarityModel,
    pub casebase: CaseBase,
    pub id_column: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct AttributeEntry {
    name: String,
    weight: f64,
    profile: Profile,
    measure: LocalMeasure,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u64,
    #[serde(default)]
    id_column: Option<String>,
    schema: Vec<AttributeSpec>,
    attributes: Vec<AttributeEntry>,
    cases: Vec<Case>,
}

pub fn model_to_json(stored: &StoredModel) -> Result<String> {
    let schema = stored.model.schema();
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        id_column: stored.id_column.clone(),
        schema: schema.attributes().to_vec(),
        attributes: schema
            .attributes()
            .iter()
            .zip(stored.model.attributes())
            .map(|(spec, a)| AttributeEntry {
                name: spec.name.clone(),
                weight: a.weight,
                profile: a.profile.clone(),
                measure: a.measure.clone(),
            })
            .collect(),
        cases: stored.casebase.cases().to_vec(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn save_model(stored: &StoredModel, path: &Path) -> Result<()> {
    let json = model_to_json(stored)?;
    std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

fn corrupt(err: impl std::fmt::Display) -> Error {
    Error::SchemaCorruption(err.to_string())
}

pub fn model_from_json(text: &str) -> Result<StoredModel> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let version = value
        .get("format_version")
        .ok_or_else(|| corrupt("missing format_version"))?
        .as_u64()
        .ok_or_else(|| corrupt("format_version is not an unsigned integer"))?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let file: ModelFile = serde_json::from_value(value).map_err(corrupt)?;

    let schema = Schema::new(file.schema).map_err(corrupt)?;
    if file.attributes.len() != schema.len() {
        return Err(corrupt("attribute entries do not match the schema"));
    }
    let mut attributes = Vec::with_capacity(schema.len());
    for (spec, entry) in schema.attributes().iter().zip(file.attributes) {
        if entry.name != spec.name {
            return Err(corrupt(format!(
                "attribute entry `{}` out of schema order (expected `{}`)",
                entry.name, spec.name
            )));
        }
        if let Profile::Numeric(p) = &entry.profile {
            p.check()
                .map_err(|e| corrupt(format!("`{}`: {e}", spec.name)))?;
        }
        if let LocalMeasure::Polynomial(m) = &entry.measure {
            let rebuilt = PolynomialMeasure::new(m.degree(), m.anchor_range(), m.target_at_iqr())
                .map_err(|e| corrupt(format!("`{}`: {e}", spec.name)))?;
            if &rebuilt != m {
                return Err(corrupt(format!(
                    "`{}`: degree outside the permitted range",
                    spec.name
                )));
            }
        }
        attributes.push(AttributeModel {
            profile: entry.profile,
            measure: entry.measure,
            weight: entry.weight,
        });
    }
    let model = SimilarityModel::new(schema.clone(), attributes).map_err(corrupt)?;
    let casebase = CaseBase::new(schema, file.cases).map_err(corrupt)?;
    Ok(StoredModel {
        model,
        casebase,
        id_column: file.id_column,
    })
}

pub fn load_model(path: &Path) -> Result<StoredModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text)
}
