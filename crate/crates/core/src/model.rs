//! Case schema, cases, queries and the case base.
//!
//! Cases store their values positionally, aligned with the attribute order of
//! the [`Schema`] they were validated against. Queries use the same layout
//! with absent attributes left as `None`.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A raw, unparsed record: column name to cell text.
pub type Record = HashMap<String, String>;

/// Canonical comparison key for a category label.
///
/// Labels compare equal when they match after trimming, lowercasing, treating
/// `_` as a space and collapsing runs of whitespace. `"very_low"` and
/// `"Very Low"` share the key `"very low"`.
pub fn normalize_label(label: &str) -> String {
    label
        .replace('_', " ")
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// True when two labels are the same category under [`normalize_label`].
pub fn labels_equivalent(a: &str, b: &str) -> bool {
    a == b || normalize_label(a) == normalize_label(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: f64,
    pub max: f64,
}

impl Bounds {
    pub fn span(&self) -> f64 {
        self.max - self.min
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AttributeKind {
    Numeric {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bounds: Option<Bounds>,
    },
    /// Categories with an inherent order, lowest first.
    Ordinal { levels: Vec<String> },
    /// Categories without order. An empty list accepts any label.
    Categorical {
        #[serde(default)]
        categories: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttributeKind,
}

impl AttributeSpec {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Numeric { bounds: None },
        }
    }

    pub fn bounded(name: impl Into<String>, min: f64, max: f64) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Numeric {
                bounds: Some(Bounds { min, max }),
            },
        }
    }

    pub fn ordinal<S: Into<String>>(
        name: impl Into<String>,
        levels: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Ordinal {
                levels: levels.into_iter().map(Into::into).collect(),
            },
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        categories: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Categorical {
                categories: categories.into_iter().map(Into::into).collect(),
            },
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, AttributeKind::Numeric { .. })
    }

    pub fn is_categorical(&self) -> bool {
        !self.is_numeric()
    }

    fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::InvalidSchema("attribute with empty name".into()));
        }
        match &self.kind {
            AttributeKind::Numeric { bounds: Some(b) } => {
                if !(b.min.is_finite() && b.max.is_finite() && b.min < b.max) {
                    return Err(Error::InvalidSchema(format!(
                        "`{}`: declared bounds [{}, {}] must satisfy min < max",
                        self.name, b.min, b.max
                    )));
                }
            }
            AttributeKind::Numeric { bounds: None } => {}
            AttributeKind::Ordinal { levels } => {
                if levels.is_empty() {
                    return Err(Error::MissingOrdinalOrder {
                        attribute: self.name.clone(),
                    });
                }
                if levels.len() < 2 {
                    return Err(Error::InvalidSchema(format!(
                        "`{}`: an ordinal attribute needs at least two levels",
                        self.name
                    )));
                }
                check_distinct_labels(&self.name, levels)?;
            }
            AttributeKind::Categorical { categories } => {
                check_distinct_labels(&self.name, categories)?;
            }
        }
        Ok(())
    }

    /// Parses and normalizes one raw cell for this attribute.
    pub fn parse_value(&self, raw: &str) -> Result<AttributeValue> {
        match &self.kind {
            AttributeKind::Numeric { .. } => {
                let text = raw.trim();
                let value: f64 = text.parse().map_err(|_| Error::NonNumeric {
                    attribute: self.name.clone(),
                    value: raw.to_string(),
                })?;
                if !value.is_finite() {
                    return Err(Error::NonFiniteValue {
                        attribute: self.name.clone(),
                        value: raw.to_string(),
                    });
                }
                Ok(AttributeValue::Number(value))
            }
            AttributeKind::Ordinal { levels } => self.canonical_label(levels, raw, false),
            AttributeKind::Categorical { categories } => {
                self.canonical_label(categories, raw, categories.is_empty())
            }
        }
    }

    fn canonical_label(
        &self,
        known: &[String],
        raw: &str,
        open: bool,
    ) -> Result<AttributeValue> {
        let key = normalize_label(raw);
        if let Some(label) = known.iter().find(|l| normalize_label(l) == key) {
            return Ok(AttributeValue::Label(label.clone()));
        }
        if open && !key.is_empty() {
            return Ok(AttributeValue::Label(raw.trim().to_string()));
        }
        Err(Error::UnknownCategory {
            attribute: self.name.clone(),
            label: raw.to_string(),
        })
    }

    /// Checks that an already parsed value is valid and canonical.
    pub fn check_value(&self, value: &AttributeValue) -> Result<()> {
        match (&self.kind, value) {
            (AttributeKind::Numeric { .. }, AttributeValue::Number(x)) => {
                if x.is_finite() {
                    Ok(())
                } else {
                    Err(Error::NonFiniteValue {
                        attribute: self.name.clone(),
                        value: x.to_string(),
                    })
                }
            }
            (AttributeKind::Numeric { .. }, AttributeValue::Label(l)) => Err(Error::NonNumeric {
                attribute: self.name.clone(),
                value: l.clone(),
            }),
            (_, AttributeValue::Number(x)) => Err(Error::UnknownCategory {
                attribute: self.name.clone(),
                label: x.to_string(),
            }),
            (AttributeKind::Ordinal { levels }, AttributeValue::Label(l))
            | (AttributeKind::Categorical { categories: levels }, AttributeValue::Label(l)) => {
                if levels.iter().any(|known| known == l)
                    || (levels.is_empty() && !l.trim().is_empty())
                {
                    Ok(())
                } else {
                    Err(Error::UnknownCategory {
                        attribute: self.name.clone(),
                        label: l.clone(),
                    })
                }
            }
        }
    }
}

fn check_distinct_labels(attribute: &str, labels: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for label in labels {
        let key = normalize_label(label);
        if key.is_empty() {
            return Err(Error::InvalidSchema(format!(
                "`{attribute}`: empty category label"
            )));
        }
        if !seen.insert(key) {
            return Err(Error::InvalidSchema(format!(
                "`{attribute}`: duplicate category label `{label}`"
            )));
        }
    }
    Ok(())
}

/// Ordered list of attribute specifications describing a case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<AttributeSpec>", into = "Vec<AttributeSpec>")]
pub struct Schema {
    attributes: Vec<AttributeSpec>,
}

impl Schema {
    pub fn new(attributes: Vec<AttributeSpec>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::InvalidSchema("schema has no attributes".into()));
        }
        let mut names = HashSet::new();
        for attr in &attributes {
            attr.validate()?;
            if !names.insert(attr.name.as_str()) {
                return Err(Error::InvalidSchema(format!(
                    "duplicate attribute name `{}`",
                    attr.name
                )));
            }
        }
        Ok(Self { attributes })
    }

    pub fn attributes(&self) -> &[AttributeSpec] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&AttributeSpec> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|a| a.name.as_str())
    }
}

impl TryFrom<Vec<AttributeSpec>> for Schema {
    type Error = Error;

    fn try_from(attributes: Vec<AttributeSpec>) -> Result<Self> {
        Schema::new(attributes)
    }
}

impl From<Schema> for Vec<AttributeSpec> {
    fn from(schema: Schema) -> Self {
        schema.attributes
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttributeValue {
    Number(f64),
    Label(String),
}

impl AttributeValue {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            AttributeValue::Number(x) => Some(*x),
            AttributeValue::Label(_) => None,
        }
    }

    pub fn as_label(&self) -> Option<&str> {
        match self {
            AttributeValue::Label(l) => Some(l),
            AttributeValue::Number(_) => None,
        }
    }
}

impl fmt::Display for AttributeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttributeValue::Number(x) => write!(f, "{x}"),
            AttributeValue::Label(l) => f.write_str(l),
        }
    }
}

/// Case identifier. Row indices sort before user-supplied keys.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CaseId {
    Index(usize),
    Key(String),
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaseId::Index(i) => write!(f, "{i}"),
            CaseId::Key(k) => f.write_str(k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub id: CaseId,
    pub values: Vec<AttributeValue>,
}

impl Case {
    pub fn value<'a>(&'a self, schema: &Schema, name: &str) -> Option<&'a AttributeValue> {
        schema.index_of(name).and_then(|i| self.values.get(i))
    }
}

/// Parses a raw record into a full case.
///
/// Extra keys in the record are ignored; every schema attribute must be
/// present and non-empty.
pub fn validate_case(record: &Record, schema: &Schema, id: CaseId) -> Result<Case> {
    let values = schema
        .attributes()
        .iter()
        .map(|attr| {
            let raw = record
                .get(&attr.name)
                .filter(|raw| !raw.trim().is_empty())
                .ok_or_else(|| Error::MissingAttribute {
                    attribute: attr.name.clone(),
                })?;
            attr.parse_value(raw)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Case { id, values })
}

/// A possibly partial case used to search the case base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    values: Vec<Option<AttributeValue>>,
}

impl Query {
    /// Builds a query from named raw values. Empty cells count as absent.
    pub fn from_pairs<'a, I>(pairs: I, schema: &Schema) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut values = vec![None; schema.len()];
        for (name, raw) in pairs {
            let index = schema.index_of(name.trim()).ok_or_else(|| Error::UnknownAttribute {
                name: name.to_string(),
            })?;
            if raw.trim().is_empty() {
                continue;
            }
            values[index] = Some(schema.attributes()[index].parse_value(raw)?);
        }
        Self::from_values(values, schema)
    }

    pub fn from_record(record: &Record, schema: &Schema) -> Result<Self> {
        Self::from_pairs(record.iter().map(|(k, v)| (k.as_str(), v.as_str())), schema)
    }

    /// Query with every attribute of `case`.
    pub fn from_case(case: &Case) -> Self {
        Self {
            values: case.values.iter().cloned().map(Some).collect(),
        }
    }

    /// Query with every attribute of `case` except those listed.
    pub fn from_case_without(case: &Case, schema: &Schema, omit: &[&str]) -> Result<Self> {
        let values = case
            .values
            .iter()
            .zip(schema.attributes())
            .map(|(v, a)| (!omit.contains(&a.name.as_str())).then(|| v.clone()))
            .collect();
        Self::from_values(values, schema)
    }

    pub fn from_values(values: Vec<Option<AttributeValue>>, schema: &Schema) -> Result<Self> {
        if values.len() != schema.len() {
            return Err(Error::InvalidArgument(format!(
                "query has {} slots, schema has {} attributes",
                values.len(),
                schema.len()
            )));
        }
        if values.iter().all(Option::is_none) {
            return Err(Error::EmptyQuery);
        }
        for (value, attr) in values.iter().zip(schema.attributes()) {
            if let Some(v) = value {
                attr.check_value(v)?;
            }
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[Option<AttributeValue>] {
        &self.values
    }

    pub fn value(&self, index: usize) -> Option<&AttributeValue> {
        self.values.get(index).and_then(Option::as_ref)
    }
}

/// Immutable collection of validated cases.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseBase {
    schema: Schema,
    cases: Vec<Case>,
}

impl CaseBase {
    pub fn new(schema: Schema, cases: Vec<Case>) -> Result<Self> {
        let mut ids = HashSet::with_capacity(cases.len());
        for (row, case) in cases.iter().enumerate() {
            if case.values.len() != schema.len() {
                return Err(Error::InvalidArgument(format!(
                    "case `{}` has {} values, schema has {} attributes",
                    case.id,
                    case.values.len(),
                    schema.len()
                ))
                .at_row(row));
            }
            for (value, attr) in case.values.iter().zip(schema.attributes()) {
                attr.check_value(value).map_err(|e| e.at_row(row))?;
            }
            if !ids.insert(&case.id) {
                return Err(Error::DuplicateId {
                    id: case.id.to_string(),
                });
            }
        }
        Ok(Self { schema, cases })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn cases(&self) -> &[Case] {
        &self.cases
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn get(&self, id: &CaseId) -> Option<&Case> {
        self.cases.iter().find(|c| &c.id == id)
    }

    /// All values of one attribute, in case order.
    pub fn column(&self, index: usize) -> impl Iterator<Item = &AttributeValue> {
        self.cases.iter().map(move |c| &c.values[index])
    }
}

/// Validates every record and assembles a case base.
///
/// Ids are 0-based row indices unless `id_column` names a column of the
/// records, in which case its trimmed text becomes the id.
pub fn build_casebase(
    records: &[Record],
    schema: Schema,
    id_column: Option<&str>,
) -> Result<CaseBase> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut cases = Vec::with_capacity(records.len());
    for (row, record) in records.iter().enumerate() {
        let id = match id_column {
            None => CaseId::Index(row),
            Some(column) => {
                let key = record
                    .get(column)
                    .map(|s| s.trim())
                    .filter(|s| !s.is_empty())
                    .ok_or_else(|| {
                        Error::MissingAttribute {
                            attribute: column.to_string(),
                        }
                        .at_row(row)
                    })?;
                CaseId::Key(key.to_string())
            }
        };
        cases.push(validate_case(record, &schema, id).map_err(|e| e.at_row(row))?);
    }
    CaseBase::new(schema, cases)
}
