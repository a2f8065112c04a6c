use serde::{Deserialize, Serialize};

use super::vectors::dot;
use super::{GeometryError, ValueVector, WeightVector};
use crate::scalar::Scalar;

/// One member of an undominated set: a value vector plus an opaque tag that
/// identifies the policy (or candidate) that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Member<T> {
    pub value: ValueVector<T>,
    pub tag: u64,
}

/// Partial or complete undominated set together with the weights at which
/// it was probed and the payoffs observed there.
#[derive(Debug, Clone, PartialEq)]
pub struct UndominatedSet<T> {
    dim: usize,
    members: Vec<Member<T>>,
    explored: Vec<(WeightVector<T>, T)>,
}

impl<T: Scalar> UndominatedSet<T> {
    pub fn new(dim: usize) -> Self {
        Self { dim, members: Vec::new(), explored: Vec::new() }
    }

    /// Builds a set from value vectors, tagging each with its position.
    /// Duplicates (within tolerance) are collapsed; no dominance filtering.
    pub fn from_values(values: Vec<ValueVector<T>>) -> Result<Self, GeometryError> {
        let dim = values.first().map(|v| v.dim()).ok_or(GeometryError::EmptySet)?;
        let mut set = Self::new(dim);
        for (tag, v) in values.into_iter().enumerate() {
            set.insert(v, tag as u64)?;
        }
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Member<T>] {
        &self.members
    }

    pub fn values(&self) -> impl Iterator<Item = &ValueVector<T>> {
        self.members.iter().map(|m| &m.value)
    }

    pub fn explored(&self) -> &[(WeightVector<T>, T)] {
        &self.explored
    }

    pub fn contains(&self, v: &ValueVector<T>) -> bool {
        self.members.iter().any(|m| m.value.approx_eq(v))
    }

    /// Inserts `v` unless an equal vector is present. Returns whether the set grew.
    pub fn insert(&mut self, v: ValueVector<T>, tag: u64) -> Result<bool, GeometryError> {
        if v.dim() != self.dim {
            return Err(GeometryError::DimensionMismatch { expected: self.dim, found: v.dim() });
        }
        if self.contains(&v) {
            return Ok(false);
        }
        self.members.push(Member { value: v, tag });
        Ok(true)
    }

    pub fn record_explored(&mut self, w: WeightVector<T>, payoff: T) -> Result<(), GeometryError> {
        if w.dim() != self.dim {
            return Err(GeometryError::DimensionMismatch { expected: self.dim, found: w.dim() });
        }
        self.explored.push((w, payoff));
        Ok(())
    }

    pub fn is_explored(&self, w: &WeightVector<T>) -> bool {
        self.explored.iter().any(|(x, _)| x.approx_eq(w))
    }

    /// `V*_S(w)` and the lowest index attaining it.
    pub fn max_scalarized(&self, w: &WeightVector<T>) -> Result<(T, usize), GeometryError> {
        if self.members.is_empty() {
            return Err(GeometryError::EmptySet);
        }
        if w.dim() != self.dim {
            return Err(GeometryError::DimensionMismatch { expected: self.dim, found: w.dim() });
        }
        let mut best = (T::neg_infinity(), 0);
        for (k, m) in self.members.iter().enumerate() {
            let s = dot(w.as_slice(), m.value.as_slice());
            if s > best.0 {
                best = (s, k);
            }
        }
        Ok(best)
    }

    /// Corner weights of the upper surface `V*_S`.
    pub fn marginal_weights(&self) -> Result<Vec<WeightVector<T>>, GeometryError> {
        let values: Vec<ValueVector<T>> = self.values().cloned().collect();
        super::envelope::corner_weights(&values)
    }

    pub fn to_document(&self) -> SetDocument {
        SetDocument {
            members: self.members.iter().map(|m| m.value.to_f64()).collect(),
            explored: self
                .explored
                .iter()
                .map(|(w, u)| ExploredWeight { w: w.to_f64(), u: u.as_f64() })
                .collect(),
            tags: Some(self.members.iter().map(|m| m.tag).collect()),
        }
    }

    pub fn from_document(doc: &SetDocument) -> Result<Self, GeometryError> {
        let dim = doc
            .members
            .first()
            .map(Vec::len)
            .or_else(|| doc.explored.first().map(|e| e.w.len()))
            .ok_or(GeometryError::EmptySet)?;
        let mut set = Self::new(dim);
        for (k, m) in doc.members.iter().enumerate() {
            let tag = doc.tags.as_ref().and_then(|t| t.get(k).copied()).unwrap_or(k as u64);
            set.insert(ValueVector::new(m.iter().map(|x| T::lit(*x)).collect()), tag)?;
        }
        for e in &doc.explored {
            let w = WeightVector::new(e.w.iter().map(|x| T::lit(*x)).collect())?;
            set.record_explored(w, T::lit(e.u))?;
        }
        Ok(set)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("document serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, GeometryError> {
        let doc: SetDocument = serde_json::from_str(text)
            .map_err(|e| GeometryError::InvalidArgument(format!("malformed set document: {e}")))?;
        Self::from_document(&doc)
    }
}

/// JSON layout: `{"members": [[..], ..], "explored": [{"w": [..], "u": f}, ..]}`.
/// `tags` is optional and defaults to member positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetDocument {
    pub members: Vec<Vec<f64>>,
    #[serde(default)]
    pub explored: Vec<ExploredWeight>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tags: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploredWeight {
    pub w: Vec<f64>,
    pub u: f64,
}

/// Free-function form of [`UndominatedSet::max_scalarized`].
pub fn max_scalarized<T: Scalar>(
    s: &UndominatedSet<T>,
    w: &WeightVector<T>,
) -> Result<(T, usize), GeometryError> {
    s.max_scalarized(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(vs: &[&[f64]]) -> UndominatedSet<f64> {
        UndominatedSet::from_values(vs.iter().map(|v| ValueVector::new(v.to_vec())).collect()).unwrap()
    }

    fn w(x: &[f64]) -> WeightVector<f64> {
        WeightVector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn max_scalarized_examples() {
        assert_eq!(set(&[&[1.0, 0.0], &[0.0, 1.0]]).max_scalarized(&w(&[0.5, 0.5])).unwrap(), (0.5, 0));
        let (value, idx) = set(&[&[1.0, 0.0], &[0.0, 1.0], &[0.6, 0.6]])
            .max_scalarized(&w(&[0.5, 0.5]))
            .unwrap();
        assert!((value - 0.6).abs() < 1e-12);
        assert_eq!(idx, 2);
        let (value, idx) = set(&[&[1.0, 0.0]]).max_scalarized(&w(&[0.3, 0.7])).unwrap();
        assert!((value - 0.3).abs() < 1e-12);
        assert_eq!(idx, 0);
    }

    #[test]
    fn max_scalarized_empty_set() {
        let empty = UndominatedSet::<f64>::new(2);
        assert_eq!(empty.max_scalarized(&w(&[0.5, 0.5])), Err(GeometryError::EmptySet));
    }

    #[test]
    fn insert_deduplicates() {
        let mut s = set(&[&[1.0, 0.0]]);
        assert!(!s.insert(ValueVector::new(vec![1.0 + 1e-12, 0.0]), 7).unwrap());
        assert!(s.insert(ValueVector::new(vec![0.0, 1.0]), 7).unwrap());
        assert_eq!(s.len(), 2);
        assert!(s.insert(ValueVector::new(vec![0.0]), 1).is_err());
    }

    #[test]
    fn json_layout() {
        let mut s = set(&[&[1.0, 0.0], &[0.0, 1.0]]);
        s.record_explored(w(&[1.0, 0.0]), 1.0).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(doc["members"], serde_json::json!([[1.0, 0.0], [0.0, 1.0]]));
        assert_eq!(doc["explored"][0]["w"], serde_json::json!([1.0, 0.0]));
        assert_eq!(doc["explored"][0]["u"], serde_json::json!(1.0));
        let back = UndominatedSet::<f64>::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        // Minimal documents without explored/tags parse too.
        let bare = UndominatedSet::<f64>::from_json(r#"{"members": [[2.0, 2.0]]}"#).unwrap();
        assert_eq!(bare.len(), 1);
        assert!(UndominatedSet::<f64>::from_json("{not json").is_err());
    }
}
