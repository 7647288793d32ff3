//! Leave-one-out comparison of the synthesized model against an unweighted
//! Euclidean nearest-neighbour baseline.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{labels_equivalent, Case, CaseBase, CaseId, Query};
use crate::retrieval::rank_cases;
use crate::similarity::SimilarityModel;

/// Euclidean distance over numeric attributes, each scaled to `[0, 1]` by
/// its observed range in the case base.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanBaseline {
    /// `(min, range)` per schema attribute, `None` for categorical ones.
    scales: Vec<Option<(f64, f64)>>,
}

impl EuclideanBaseline {
    pub fn fit(casebase: &CaseBase) -> Result<Self> {
        if casebase.is_empty() {
            return Err(Error::EmptyCaseBase);
        }
        let scales: Vec<_> = casebase
            .schema()
            .attributes()
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                spec.is_numeric().then(|| {
                    let (lo, hi) = casebase
                        .column(i)
                        .filter_map(|v| v.as_number())
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                            (lo.min(x), hi.max(x))
                        });
                    (lo, hi - lo)
                })
            })
            .collect();
        if scales.iter().all(Option::is_none) {
            return Err(Error::NoNumericAttributes);
        }
        Ok(Self { scales })
    }

    /// Number of numeric attributes the query contributes to the distance.
    pub fn dimensions(&self, query: &Query) -> usize {
        self.scales
            .iter()
            .enumerate()
            .filter(|(i, s)| s.is_some() && query.value(*i).and_then(|v| v.as_number()).is_some())
            .count()
    }

    pub fn distance(&self, query: &Query, case: &Case) -> Result<f64> {
        let mut sum = 0.0;
        let mut used = 0;
        for (i, scale) in self.scales.iter().enumerate() {
            let (Some((_, range)), Some(q)) = (scale, query.value(i).and_then(|v| v.as_number()))
            else {
                continue;
            };
            let c = case.values[i]
                .as_number()
                .ok_or_else(|| Error::InvalidArgument("case does not match the schema".into()))?;
            used += 1;
            if *range > 0.0 {
                let d = (q - c) / range;
                sum += d * d;
            }
        }
        if used == 0 {
            return Err(Error::NoNumericAttributes);
        }
        Ok(sum.sqrt())
    }

    /// The `k` nearest cases, ascending distance, ties by ascending id.
    pub fn rank<'a, I>(&self, cases: I, query: &Query, k: usize) -> Result<Vec<(f64, &'a Case)>>
    where
        I: IntoIterator<Item = &'a Case>,
    {
        let mut scored = cases
            .into_iter()
            .map(|c| Ok((self.distance(query, c)?, c)))
            .collect::<Result<Vec<_>>>()?;
        scored.sort_unstable_by(nearest_first);
        scored.truncate(k);
        Ok(scored)
    }
}

fn nearest_first(a: &(f64, &Case), b: &(f64, &Case)) -> Ordering {
    a.0.total_cmp(&b.0).then_with(|| a.1.id.cmp(&b.1.id))
}

/// Ranks the case base by the Euclidean baseline.
pub fn euclidean_baseline(casebase: &CaseBase, query: &Query, k: usize) -> Result<Vec<(CaseId, f64)>> {
    let baseline = EuclideanBaseline::fit(casebase)?;
    Ok(baseline
        .rank(casebase.cases(), query, k)?
        .into_iter()
        .map(|(d, c)| (c.id.clone(), d))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    /// Fraction of held-out cases whose nearest neighbour has the same label.
    pub top1_agreement: f64,
    /// Mean similarity of the nearest neighbour. For the baseline this is
    /// `1 - d / sqrt(m)` over `m` normalized dimensions.
    pub mean_top1_similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbour {
    pub case_id: CaseId,
    pub label: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeldOutRecord {
    pub case_id: CaseId,
    pub label: String,
    pub cbr: Vec<Neighbour>,
    pub baseline: Vec<Neighbour>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub label_attribute: String,
    pub cases: usize,
    pub k: usize,
    pub cbr: MethodSummary,
    pub baseline: MethodSummary,
    pub queries: Vec<HeldOutRecord>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn label_of(case: &Case, index: usize) -> String {
    case.values[index].as_label().unwrap_or_default().to_string()
}

/// Holds out each case in turn, queries with its non-label attributes
/// against the rest, and checks whether the top neighbour shares its label.
///
/// `k` is clamped to `n - 1`.
pub fn loo_eval(
    model: &SimilarityModel,
    casebase: &CaseBase,
    k: usize,
    label_attr: &str,
) -> Result<EvalReport> {
    let schema = casebase.schema();
    if schema != model.schema() {
        return Err(Error::InvalidArgument(
            "case base schema differs from the model schema".into(),
        ));
    }
    let label_index = schema
        .index_of(label_attr)
        .filter(|&i| schema.attributes()[i].is_categorical())
        .ok_or_else(|| Error::LabelMissing {
            attribute: label_attr.to_string(),
        })?;
    if casebase.len() < 2 {
        return Err(Error::InvalidArgument(
            "leave-one-out needs at least two cases".into(),
        ));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let k = k.min(casebase.len() - 1);
    let baseline = EuclideanBaseline::fit(casebase)?;

    let queries = casebase
        .cases()
        .par_iter()
        .map(|held_out| {
            let query = Query::from_case_without(held_out, schema, &[label_attr])?;
            let others = || casebase.cases().iter().filter(|c| c.id != held_out.id);
            let cbr = rank_cases(model, others(), &query, k)?
                .into_iter()
                .map(|(s, c)| Neighbour {
                    case_id: c.id.clone(),
                    label: label_of(c, label_index),
                    score: s,
                })
                .collect();
            let dims = baseline.dimensions(&query) as f64;
            let nearest = baseline
                .rank(others(), &query, k)?
                .into_iter()
                .map(|(d, c)| Neighbour {
                    case_id: c.id.clone(),
                    label: label_of(c, label_index),
                    score: (1.0 - d / dims.sqrt()).max(0.0),
                })
                .collect();
            Ok(HeldOutRecord {
                case_id: held_out.id.clone(),
                label: label_of(held_out, label_index),
                cbr,
                baseline: nearest,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let summarize = |method: &str, pick: fn(&HeldOutRecord) -> &[Neighbour]| {
        let n = queries.len() as f64;
        let (hits, total) = queries.iter().fold((0usize, 0.0), |(hits, total), q| {
            let top = &pick(q)[0];
            (
                hits + usize::from(labels_equivalent(&top.label, &q.label)),
                total + top.score,
            )
        });
        MethodSummary {
            method: method.to_string(),
            top1_agreement: hits as f64 / n,
            mean_top1_similarity: total / n,
        }
    };
    let cbr = summarize("cbr", |q| &q.cbr);
    let base = summarize("euclidean", |q| &q.baseline);
    Ok(EvalReport {
        label_attribute: label_attr.to_string(),
        cases: casebase.len(),
        k,
        cbr,
        baseline: base,
        queries,
    })
}
