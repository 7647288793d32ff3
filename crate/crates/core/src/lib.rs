//! Case retrieval with local similarity measures derived from the data.
//!
//! Numeric attributes get a polynomial distance decay whose degree is fitted
//! from the column's interquartile range and range; ordinal attributes get an
//! equidistant similarity table; unordered categories use exact match. Local
//! similarities combine into a weighted mean, and retrieval returns the top-k
//! cases by that global similarity.
//!
//! ```
//! use casesim::model::{build_casebase, AttributeSpec, Query, Record, Schema};
//! use casesim::retrieval::retrieve;
//! use casesim::similarity::{synthesize_model, SynthesisOptions};
//!
//! let schema = Schema::new(vec![
//!     AttributeSpec::numeric("x"),
//!     AttributeSpec::ordinal("level", ["Low", "Middle", "High"]),
//! ])?;
//! let records: Vec<Record> = [("0.1", "Low"), ("0.5", "Middle"), ("0.9", "High")]
//!     .iter()
//!     .map(|(x, l)| Record::from([("x".into(), x.to_string()), ("level".into(), l.to_string())]))
//!     .collect();
//! let casebase = build_casebase(&records, schema, None)?;
//! let model = synthesize_model(&casebase, &SynthesisOptions::default())?.model;
//!
//! let query = Query::from_pairs([("x", "0.45")], casebase.schema())?;
//! let result = retrieve(&model, &casebase, &query, 2)?;
//! assert_eq!(result.entries[0].case_id.to_string(), "1");
//! # Ok::<(), casesim::Error>(())
//! ```

pub mod cli;
pub mod error;
pub mod eval;
pub mod io;
pub mod model;
pub mod profiler;
pub mod retrieval;
pub mod similarity;

pub use error::{Error, Result};
