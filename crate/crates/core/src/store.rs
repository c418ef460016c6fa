//! Observed points, their labels, and per-leaf label statistics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Class(u32),
    Real(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "lowercase")]
pub enum Labels {
    None,
    Class(Vec<u32>),
    Real(Vec<f64>),
}

impl Labels {
    fn len(&self) -> Option<usize> {
        match self {
            Labels::None => None,
            Labels::Class(v) => Some(v.len()),
            Labels::Real(v) => Some(v.len()),
        }
    }
}

/// Row-major storage of `d`-dimensional points addressed by insertion id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointStore {
    d: usize,
    coords: Vec<f64>,
    labels: Labels,
}

impl PointStore {
    pub fn unlabeled(d: usize) -> Self {
        Self { d, coords: Vec::new(), labels: Labels::None }
    }

    pub fn with_labels(d: usize, labels: Labels) -> Self {
        let labels = match labels {
            Labels::Class(mut v) => {
                v.clear();
                Labels::Class(v)
            }
            Labels::Real(mut v) => {
                v.clear();
                Labels::Real(v)
            }
            Labels::None => Labels::None,
        };
        Self { d, coords: Vec::new(), labels }
    }

    /// Unlabeled store holding `rows` in order.
    pub fn from_rows<R: AsRef<[f64]>>(d: usize, rows: &[R]) -> Result<Self> {
        let mut store = Self::unlabeled(d);
        for r in rows {
            store.push(r.as_ref(), None)?;
        }
        Ok(store)
    }

    pub(crate) fn from_parts(d: usize, coords: Vec<f64>, labels: Labels) -> Result<Self> {
        if d == 0 || !coords.len().is_multiple_of(d) {
            return Err(Error::MalformedModel("point coordinates do not match dimension".into()));
        }
        let n = coords.len() / d;
        if labels.len().is_some_and(|m| m != n) {
            return Err(Error::MalformedModel("label count does not match point count".into()));
        }
        Ok(Self { d, coords, labels })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.d.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, id: usize) -> &[f64] {
        &self.coords[id * self.d..(id + 1) * self.d]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    /// Appends a point and returns its id.
    pub fn push(&mut self, x: &[f64], label: Option<Label>) -> Result<usize> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: x.len() });
        }
        match (&mut self.labels, label) {
            (Labels::None, None) => {}
            (Labels::Class(v), Some(Label::Class(c))) => v.push(c),
            (Labels::Real(v), Some(Label::Real(y))) => v.push(y),
            _ => return Err(Error::LabelMismatch),
        }
        let id = self.len();
        self.coords.extend_from_slice(x);
        Ok(id)
    }
}

/// Empirical label distribution of one leaf.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LeafStats {
    Empty,
    Classes {
        #[serde(with = "count_pairs")]
        counts: BTreeMap<u32, u64>,
    },
    Regression { count: u64, sum: f64, sum_sq: f64 },
}

impl LeafStats {
    pub fn from_ids(ids: &[usize], labels: &Labels) -> Self {
        match labels {
            Labels::None => LeafStats::Empty,
            Labels::Class(v) => {
                let mut counts = BTreeMap::new();
                for &i in ids {
                    *counts.entry(v[i]).or_insert(0) += 1;
                }
                LeafStats::Classes { counts }
            }
            Labels::Real(v) => {
                let (mut sum, mut sum_sq) = (0.0, 0.0);
                for &i in ids {
                    sum += v[i];
                    sum_sq += v[i] * v[i];
                }
                LeafStats::Regression { count: ids.len() as u64, sum, sum_sq }
            }
        }
    }

    pub fn count(&self) -> u64 {
        match self {
            LeafStats::Empty => 0,
            LeafStats::Classes { counts } => counts.values().sum(),
            LeafStats::Regression { count, .. } => *count,
        }
    }

    pub fn mean(&self) -> Option<f64> {
        match self {
            LeafStats::Regression { count, sum, .. } if *count > 0 => Some(sum / *count as f64),
            _ => None,
        }
    }

    /// Most frequent class; ties go to the smallest class id.
    pub fn majority_class(&self) -> Option<u32> {
        match self {
            LeafStats::Classes { counts } => {
                let mut best: Option<(u32, u64)> = None;
                for (&c, &n) in counts {
                    if best.is_none_or(|(_, m)| n > m) {
                        best = Some((c, n));
                    }
                }
                best.map(|(c, _)| c)
            }
            _ => None,
        }
    }
}

/// Class histograms as `[[class, count], ...]`: JSON object keys are strings,
/// and the tagged `LeafStats` representation cannot turn them back into ids.
mod count_pairs {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(counts: &BTreeMap<u32, u64>, s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<(u32, u64)> = counts.iter().map(|(&c, &n)| (c, n)).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<u32, u64>, D::Error> {
        Ok(Vec::<(u32, u64)>::deserialize(d)?.into_iter().collect())
    }
}
