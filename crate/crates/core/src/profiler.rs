//! Descriptive statistics per attribute: the box-plot quantities that feed
//! similarity synthesis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Summary of one numeric column.
///
/// `iqr` is the interquartile range `q3 - q1` and `range` is `max - min`;
/// the two distances that shape the polynomial similarity of the column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsProfile {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub range: f64,
}

impl StatsProfile {
    /// True when the column has no spread to derive a decay from.
    pub fn is_degenerate(&self) -> bool {
        self.iqr == 0.0 || self.range == 0.0
    }

    pub fn check(&self) -> std::result::Result<(), String> {
        let fields = [
            self.mean, self.min, self.max, self.q1, self.q3, self.iqr, self.range,
        ];
        if fields.iter().any(|x| !x.is_finite()) {
            return Err("non-finite statistic".into());
        }
        if self.count == 0 {
            return Err("profile over zero values".into());
        }
        if !(self.min <= self.q1 && self.q1 <= self.q3 && self.q3 <= self.max) {
            return Err(format!(
                "expected min <= q1 <= q3 <= max, got {} {} {} {}",
                self.min, self.q1, self.q3, self.max
            ));
        }
        if self.iqr != self.q3 - self.q1 {
            return Err(format!("iqr {} differs from q3 - q1", self.iqr));
        }
        if self.range != self.max - self.min {
            return Err(format!("range {} differs from max - min", self.range));
        }
        if !(self.min <= self.mean && self.mean <= self.max) {
            return Err(format!("mean {} outside [min, max]", self.mean));
        }
        Ok(())
    }
}

/// Distinct labels of a categorical column with their counts, in first-seen
/// order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryInventory {
    pub labels: Vec<LabelCount>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCount {
    pub label: String,
    pub count: usize,
}

impl CategoryInventory {
    pub fn total(&self) -> usize {
        self.labels.iter().map(|l| l.count).sum()
    }

    pub fn count_of(&self, label: &str) -> usize {
        self.labels
            .iter()
            .find(|l| l.label == label)
            .map_or(0, |l| l.count)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Per-attribute profile stored alongside its measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Profile {
    Numeric(StatsProfile),
    Categorical(CategoryInventory),
}

/// Linearly interpolated quantile with `h = (n - 1) * prob`.
pub fn quantile(values: &[f64], prob: f64) -> Result<f64> {
    let sorted = sorted_finite(values)?;
    quantile_sorted(&sorted, prob)
}

fn sorted_finite(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted)
}

fn quantile_sorted(sorted: &[f64], prob: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&prob) {
        return Err(Error::InvalidProbability(prob));
    }
    let h = (sorted.len() - 1) as f64 * prob;
    let lower = h.floor() as usize;
    let frac = h - h.floor();
    let lo = sorted[lower];
    match sorted.get(lower + 1) {
        Some(&hi) if frac > 0.0 => Ok((lo + frac * (hi - lo)).clamp(lo, hi)),
        _ => Ok(lo),
    }
}

pub fn numeric_profile(values: &[f64]) -> Result<StatsProfile> {
    let sorted = sorted_finite(values)?;
    let count = sorted.len();
    let min = sorted[0];
    let max = sorted[count - 1];
    let mean = (values.iter().sum::<f64>() / count as f64).clamp(min, max);
    let q1 = quantile_sorted(&sorted, 0.25)?;
    let q3 = quantile_sorted(&sorted, 0.75)?;
    Ok(StatsProfile {
        count,
        mean,
        min,
        max,
        q1,
        q3,
        iqr: q3 - q1,
        range: max - min,
    })
}

pub fn categorical_profile<'a, I>(labels: I) -> CategoryInventory
where
    I: IntoIterator<Item = &'a str>,
{
    let mut inventory = CategoryInventory::default();
    for label in labels {
        match inventory.labels.iter_mut().find(|l| l.label == label) {
            Some(entry) => entry.count += 1,
            None => inventory.labels.push(LabelCount {
                label: label.to_string(),
                count: 1,
            }),
        }
    }
    inventory
}
