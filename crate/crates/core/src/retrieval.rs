//! Top-k retrieval by global similarity over a full scan of the case base.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Case, CaseBase, CaseId, Query};
use crate::similarity::{LocalScore, SimilarityModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCase {
    pub case_id: CaseId,
    pub similarity: f64,
    pub breakdown: Vec<LocalScore>,
}

/// Entries sorted by similarity descending, ties by ascending case id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub query: Query,
    pub entries: Vec<RankedCase>,
}

/// Ranking order: higher similarity first, then smaller id.
pub fn rank_order(a: (f64, &CaseId), b: (f64, &CaseId)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1))
}

/// Scores the given cases and keeps the best `k`, ordered by [`rank_order`].
pub fn rank_cases<'a, I>(model: &SimilarityModel, cases: I, query: &Query, k: usize) -> Result<Vec<(f64, &'a Case)>>
where
    I: IntoIterator<Item = &'a Case>,
{
    let mut scored = cases
        .into_iter()
        .map(|case| Ok((model.score(query, case)?, case)))
        .collect::<Result<Vec<_>>>()?;
    let by_rank = |a: &(f64, &Case), b: &(f64, &Case)| rank_order((a.0, &a.1.id), (b.0, &b.1.id));
    if k < scored.len() {
        scored.select_nth_unstable_by(k, by_rank);
        scored.truncate(k);
    }
    scored.sort_unstable_by(by_rank);
    Ok(scored)
}

fn check_query(model: &SimilarityModel, query: &Query) -> Result<()> {
    if query.values().len() != model.schema().len() {
        return Err(Error::InvalidArgument(
            "query does not match the model schema".into(),
        ));
    }
    let usable = query
        .values()
        .iter()
        .zip(model.attributes())
        .any(|(v, a)| v.is_some() && a.weight > 0.0);
    if usable {
        Ok(())
    } else {
        Err(Error::NoUsableAttributes)
    }
}

/// Ranks every case against `query` and returns the `k` most similar.
pub fn retrieve(
    model: &SimilarityModel,
    casebase: &CaseBase,
    query: &Query,
    k: usize,
) -> Result<RetrievalResult> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if casebase.is_empty() {
        return Err(Error::EmptyCaseBase);
    }
    check_query(model, query)?;
    let top = rank_cases(model, casebase.cases(), query, k)?;
    let entries = top
        .into_iter()
        .map(|(similarity, case)| {
            let breakdown = model.global_similarity(query, case)?.breakdown;
            Ok(RankedCase {
                case_id: case.id.clone(),
                similarity,
                breakdown,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RetrievalResult {
        query: query.clone(),
        entries,
    })
}

#[derive(Debug)]
pub struct BatchError {
    pub index: usize,
    pub error: Error,
}

/// Runs [`retrieve`] for each query in parallel. Results keep query order;
/// a failing query does not stop the others.
pub fn retrieve_batch(
    model: &SimilarityModel,
    casebase: &CaseBase,
    queries: &[Query],
    k: usize,
) -> Vec<std::result::Result<RetrievalResult, BatchError>> {
    queries
        .par_iter()
        .enumerate()
        .map(|(index, q)| retrieve(model, casebase, q, k).map_err(|error| BatchError { index, error }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_casebase, AttributeSpec, Record, Schema};
    use crate::similarity::{synthesize_model, SynthesisOptions};

    fn three_cases() -> (SimilarityModel, CaseBase) {
        let schema = Schema::new(vec![
            AttributeSpec::numeric("x"),
            AttributeSpec::ordinal("lvl", ["Low", "Mid", "High"]),
        ])
        .unwrap();
        let records: Vec<Record> = [("0", "Low"), ("0.5", "High"), ("1", "Mid")]
            .iter()
            .map(|(x, l)| {
                Record::from([("x".to_string(), x.to_string()), ("lvl".to_string(), l.to_string())])
            })
            .collect();
        let cb = build_casebase(&records, schema, None).unwrap();
        let model = synthesize_model(&cb, &SynthesisOptions::default()).unwrap().model;
        (model, cb)
    }

    #[test]
    fn hand_computed_ranking() {
        let (model, cb) = three_cases();
        // n = 3: q1 = 0.25, q3 = 0.75, range 1 -> degree ln(0.3)/ln(0.5)
        let p = 0.3f64.ln() / 0.5f64.ln();
        let q = Query::from_pairs([("x", "0.4"), ("lvl", "Mid")], cb.schema()).unwrap();
        let expected = [
            (0, ((1.0f64 - 0.4).powf(p) + 0.5) / 2.0),
            (1, ((1.0f64 - 0.1).powf(p) + 0.5) / 2.0),
            (2, ((1.0f64 - 0.6).powf(p) + 1.0) / 2.0),
        ];
        let mut sorted = expected.to_vec();
        sorted.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());

        let result = retrieve(&model, &cb, &q, 3).unwrap();
        let got: Vec<_> = result
            .entries
            .iter()
            .map(|e| (e.case_id.clone(), e.similarity))
            .collect();
        for ((id, s), (eid, es)) in got.iter().zip(&sorted) {
            assert_eq!(id, &CaseId::Index(*eid));
            assert!((s - es).abs() < 1e-12);
        }
    }

    #[test]
    fn reflexive_and_truncation() {
        let (model, cb) = three_cases();
        for case in cb.cases() {
            let r = retrieve(&model, &cb, &Query::from_case(case), 1).unwrap();
            assert_eq!(r.entries[0].case_id, case.id);
            assert_eq!(r.entries[0].similarity, 1.0);
        }
        let q = Query::from_pairs([("x", "0.9")], cb.schema()).unwrap();
        let all = retrieve(&model, &cb, &q, 50).unwrap();
        assert_eq!(all.entries.len(), 3);
        let two = retrieve(&model, &cb, &q, 2).unwrap();
        assert_eq!(two.entries[..], all.entries[..2]);
        assert!(retrieve(&model, &cb, &q, 0).is_err());
    }

    #[test]
    fn ties_break_by_ascending_id() {
        let (model, cb) = three_cases();
        let q = Query::from_pairs([("lvl", "Mid")], cb.schema()).unwrap();
        let r = retrieve(&model, &cb, &q, 3).unwrap();
        let ids: Vec<_> = r.entries.iter().map(|e| e.case_id.clone()).collect();
        // Mid vs Low and Mid vs High both score 0.5
        assert_eq!(ids, vec![CaseId::Index(2), CaseId::Index(0), CaseId::Index(1)]);
    }

    #[test]
    fn batch_matches_sequential() {
        let (model, cb) = three_cases();
        assert!(retrieve_batch(&model, &cb, &[], 2).is_empty());
        let queries: Vec<_> = ["0.1", "0.6", "0.95"]
            .iter()
            .map(|x| Query::from_pairs([("x", *x)], cb.schema()).unwrap())
            .collect();
        let batch = retrieve_batch(&model, &cb, &queries, 2);
        for (q, r) in queries.iter().zip(batch) {
            assert_eq!(r.unwrap(), retrieve(&model, &cb, q, 2).unwrap());
        }
    }

    #[test]
    fn batch_reports_failing_index() {
        let (model, cb) = three_cases();
        let zeroed = model
            .with_weights(&[("lvl".to_string(), 0.0)].into_iter().collect())
            .unwrap();
        let queries = vec![
            Query::from_pairs([("x", "0.1")], cb.schema()).unwrap(),
            Query::from_pairs([("lvl", "Low")], cb.schema()).unwrap(),
        ];
        let batch = retrieve_batch(&zeroed, &cb, &queries, 1);
        assert!(batch[0].is_ok());
        let err = batch[1].as_ref().unwrap_err();
        assert_eq!(err.index, 1);
        assert!(matches!(err.error, Error::NoUsableAttributes));
    }
}
