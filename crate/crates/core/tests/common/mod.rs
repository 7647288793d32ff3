#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;

use casesim::io::{ingest_csv, SchemaConfig};
use casesim::model::{
    build_casebase, AttributeKind, AttributeSpec, AttributeValue, Case, CaseBase, CaseId, Query,
    Record, Schema,
};
use casesim::similarity::{synthesize_model, LocalMeasure, SimilarityModel, SynthesisOptions};

pub const UKM_NUMERIC: [&str; 5] = ["STG", "SCG", "STR", "LPR", "PEG"];
pub const UKM_LEVELS: [&str; 4] = ["Very Low", "Low", "Middle", "High"];

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn ukm_data_path() -> PathBuf {
    workspace_root().join("data/user_knowledge.csv")
}

pub fn ukm_schema_path() -> PathBuf {
    workspace_root().join("data/user_knowledge_schema.json")
}

/// The combined 403-row User Knowledge Modeling table, if it has been
/// converted into `data/`.
pub fn ukm_casebase() -> Option<CaseBase> {
    let path = ukm_data_path();
    if !path.exists() {
        return None;
    }
    let config = SchemaConfig::load(&ukm_schema_path()).expect("schema config");
    let data = ingest_csv(&path, Some(&config)).expect("ingest UCI table");
    Some(build_casebase(&data.records, data.schema, None).expect("UCI case base"))
}

pub fn ukm_missing_message() -> String {
    format!(
        "{} not found; convert the UCI spreadsheet with scripts/convert_uci.py",
        ukm_data_path().display()
    )
}

/// Random schema of 1-3 numeric, 0-2 ordinal and 0-2 categorical attributes.
pub fn random_schema<R: Rng>(rng: &mut R) -> Schema {
    let mut attrs = Vec::new();
    for i in 0..rng.gen_range(1..=3) {
        attrs.push(AttributeSpec::numeric(format!("n{i}")));
    }
    for i in 0..rng.gen_range(0..=2) {
        let k = rng.gen_range(2..=5);
        attrs.push(AttributeSpec::ordinal(
            format!("o{i}"),
            (0..k).map(|l| format!("L{l}")),
        ));
    }
    for i in 0..rng.gen_range(0..=2) {
        let k = rng.gen_range(2..=4);
        attrs.push(AttributeSpec::categorical(
            format!("c{i}"),
            (0..k).map(|l| format!("C{l}")),
        ));
    }
    attrs.shuffle(rng);
    Schema::new(attrs).unwrap()
}

/// A random value for `spec`. With `coarse`, numbers sit on a 0.25 grid so
/// duplicates and exact score ties are common.
pub fn random_value<R: Rng>(rng: &mut R, spec: &AttributeSpec, coarse: bool) -> AttributeValue {
    match &spec.kind {
        AttributeKind::Numeric { .. } => {
            if coarse {
                AttributeValue::Number(rng.gen_range(0..8) as f64 * 0.25)
            } else {
                AttributeValue::Number(rng.gen_range(-5.0..5.0))
            }
        }
        AttributeKind::Ordinal { levels } | AttributeKind::Categorical { categories: levels } => {
            AttributeValue::Label(levels.choose(rng).unwrap().clone())
        }
    }
}

pub fn random_casebase<R: Rng>(rng: &mut R, max_cases: usize) -> CaseBase {
    let schema = random_schema(rng);
    let n = rng.gen_range(1..=max_cases);
    let coarse = rng.gen_bool(0.5);
    let cases = (0..n)
        .map(|i| Case {
            id: CaseId::Index(i),
            values: schema
                .attributes()
                .iter()
                .map(|a| random_value(rng, a, coarse))
                .collect(),
        })
        .collect();
    CaseBase::new(schema, cases).unwrap()
}

/// Random non-empty partial query. Numeric values may fall outside the
/// observed range.
pub fn random_query<R: Rng>(rng: &mut R, schema: &Schema) -> Query {
    loop {
        let values: Vec<_> = schema
            .attributes()
            .iter()
            .map(|a| {
                if rng.gen_bool(0.7) {
                    let coarse = rng.gen_bool(0.5);
                    Some(random_value(rng, a, coarse))
                } else {
                    None
                }
            })
            .collect();
        if let Ok(q) = Query::from_values(values, schema) {
            return q;
        }
    }
}

pub fn random_weights<R: Rng>(rng: &mut R, schema: &Schema, allow_zero: bool) -> BTreeMap<String, f64> {
    let mut weights: BTreeMap<String, f64> = schema
        .names()
        .map(|n| {
            let w = if allow_zero && rng.gen_bool(0.15) {
                0.0
            } else {
                rng.gen_range(0.1..5.0)
            };
            (n.to_string(), w)
        })
        .collect();
    if weights.values().all(|&w| w == 0.0) {
        *weights.values_mut().next().unwrap() = 1.0;
    }
    weights
}

pub fn random_model<R: Rng>(rng: &mut R, casebase: &CaseBase, allow_zero: bool) -> SimilarityModel {
    let options = SynthesisOptions {
        target_at_iqr: rng.gen_range(0.05..0.95),
        weights: random_weights(rng, casebase.schema(), allow_zero),
        ..Default::default()
    };
    synthesize_model(casebase, &options).unwrap().model
}

/// Local similarity recomputed from the measure parameters alone.
pub fn oracle_local(measure: &LocalMeasure, q: &AttributeValue, c: &AttributeValue) -> f64 {
    match (measure, q, c) {
        (LocalMeasure::Polynomial(m), AttributeValue::Number(q), AttributeValue::Number(c)) => {
            let d = (q - c).abs();
            if d >= m.anchor_range() {
                0.0
            } else {
                (1.0 - d / m.anchor_range()).max(0.0).powf(m.degree()).min(1.0)
            }
        }
        (LocalMeasure::Ordinal(m), AttributeValue::Label(q), AttributeValue::Label(c)) => {
            let i = m.levels().iter().position(|l| l == q).unwrap();
            let j = m.levels().iter().position(|l| l == c).unwrap();
            1.0 - (i as f64 - j as f64).abs() / (m.levels().len() - 1) as f64
        }
        (LocalMeasure::ExactMatch, AttributeValue::Label(q), AttributeValue::Label(c)) => {
            if q.to_lowercase() == c.to_lowercase() {
                1.0
            } else {
                0.0
            }
        }
        _ => panic!("value kinds do not match the measure"),
    }
}

/// Global similarity by brute force, `None` if no usable attribute.
pub fn oracle_global(model: &SimilarityModel, query: &Query, case: &Case) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, attr) in model.attributes().iter().enumerate() {
        let Some(q) = query.value(i) else { continue };
        if attr.weight <= 0.0 {
            continue;
        }
        let s = oracle_local(&attr.measure, q, &case.values[i]);
        num += attr.weight * s;
        den += attr.weight;
        lo = lo.min(s);
        hi = hi.max(s);
    }
    (den > 0.0).then(|| (num / den).clamp(lo, hi))
}

/// Scores every case, then stable-sorts by similarity descending. Cases are
/// visited in ascending id order so ties keep ascending ids.
pub fn oracle_ranking(model: &SimilarityModel, casebase: &CaseBase, query: &Query, k: usize) -> Option<Vec<(CaseId, f64)>> {
    let mut cases: Vec<&Case> = casebase.cases().iter().collect();
    cases.sort_by(|a, b| a.id.cmp(&b.id));
    let mut scored = Vec::with_capacity(cases.len());
    for c in cases {
        scored.push((c.id.clone(), oracle_global(model, query, c)?));
    }
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    scored.truncate(k);
    Some(scored)
}

/// A 403-case table shaped like the User Knowledge Modeling data: five
/// numeric attributes in [0, 1) and an ordinal label loosely driven by them.
pub fn synthetic_ukm<R: Rng>(rng: &mut R) -> CaseBase {
    let mut attrs: Vec<_> = UKM_NUMERIC.iter().map(|n| AttributeSpec::numeric(*n)).collect();
    attrs.push(AttributeSpec::ordinal("UNS", UKM_LEVELS));
    let schema = Schema::new(attrs).unwrap();
    let records: Vec<Record> = (0..403)
        .map(|_| {
            let values: Vec<f64> = (0..5).map(|_| (rng.gen_range(0.0..0.99f64) * 100.0).round() / 100.0).collect();
            let score = 0.3 * values[3] + 0.7 * values[4] + rng.gen_range(-0.1..0.1);
            let level = ((score * 4.0).floor() as isize).clamp(0, 3) as usize;
            let mut r: Record = UKM_NUMERIC
                .iter()
                .zip(&values)
                .map(|(n, v)| (n.to_string(), v.to_string()))
                .collect();
            r.insert("UNS".into(), UKM_LEVELS[level].to_string());
            r
        })
        .collect();
    build_casebase(&records, schema, None).unwrap()
}
