//! Domain types shared by every scorer.
//!
//! All types validate their invariants on construction and are immutable
//! afterwards, so they can be shared freely between threads.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a vocabulary item.
pub type TermId = u32;

fn check_weight(weight: f64, what: &str) -> Result<()> {
    if !weight.is_finite() || weight < 0.0 {
        return Err(Error::Validation(format!(
            "{what}: weight {weight} must be finite and non-negative"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryTerm {
    pub term_id: TermId,
    pub weight: f64,
}

/// Encoded query: one weighted vocabulary item per query token, in token order.
///
/// Term ids may repeat; every occurrence keeps its own weight.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryRep {
    query_id: String,
    terms: Vec<QueryTerm>,
}

impl QueryRep {
    pub fn new(query_id: impl Into<String>, terms: impl IntoIterator<Item = (TermId, f64)>) -> Result<Self> {
        let query_id = query_id.into();
        let terms = terms
            .into_iter()
            .map(|(term_id, weight)| {
                check_weight(weight, &format!("query `{query_id}` term {term_id}"))?;
                Ok(QueryTerm { term_id, weight })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { query_id, terms })
    }

    pub fn query_id(&self) -> &str {
        &self.query_id
    }

    pub fn terms(&self) -> &[QueryTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when some term id occurs more than once.
    pub fn has_repeated_terms(&self) -> bool {
        let mut ids: Vec<TermId> = self.terms.iter().map(|t| t.term_id).collect();
        ids.sort_unstable();
        ids.windows(2).any(|w| w[0] == w[1])
    }
}

/// One non-zero cell of a segment's positional logit matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub position: u32,
    pub term_id: TermId,
    pub weight: f64,
}

/// Sparse positional weight matrix of one encoded document segment.
///
/// Entries are kept sorted by `(position, term_id)`. Weights are the encoder's
/// already log-scaled, non-negative outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentRep {
    doc_id: String,
    seg_index: u32,
    length: u32,
    entries: Vec<Entry>,
    tokens: Option<Vec<TermId>>,
}

impl SegmentRep {
    pub fn new(
        doc_id: impl Into<String>,
        seg_index: u32,
        length: u32,
        entries: impl IntoIterator<Item = Entry>,
        tokens: Option<Vec<TermId>>,
    ) -> Result<Self> {
        let doc_id = doc_id.into();
        let mut entries: Vec<Entry> = entries.into_iter().collect();
        entries.sort_by_key(|e| (e.position, e.term_id));
        for e in &entries {
            if e.position >= length {
                return Err(Error::Validation(format!(
                    "document `{doc_id}` segment {seg_index}: entry position {} >= length {length}",
                    e.position
                )));
            }
            check_weight(
                e.weight,
                &format!(
                    "document `{doc_id}` segment {seg_index} position {} term {}",
                    e.position, e.term_id
                ),
            )?;
        }
        if let Some(w) = entries
            .windows(2)
            .find(|w| (w[0].position, w[0].term_id) == (w[1].position, w[1].term_id))
        {
            return Err(Error::Validation(format!(
                "document `{doc_id}` segment {seg_index}: duplicate entry for position {} term {}",
                w[0].position, w[0].term_id
            )));
        }
        if let Some(tokens) = &tokens {
            if tokens.len() != length as usize {
                return Err(Error::Validation(format!(
                    "document `{doc_id}` segment {seg_index}: {} tokens for length {length}",
                    tokens.len()
                )));
            }
        }
        Ok(Self {
            doc_id,
            seg_index,
            length,
            entries,
            tokens,
        })
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn seg_index(&self) -> u32 {
        self.seg_index
    }

    pub fn length(&self) -> u32 {
        self.length
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn tokens(&self) -> Option<&[TermId]> {
        self.tokens.as_deref()
    }

    /// Copy of this segment keeping only entries accepted by `keep`.
    pub fn filter_entries(&self, mut keep: impl FnMut(&Entry) -> bool) -> SegmentRep {
        SegmentRep {
            doc_id: self.doc_id.clone(),
            seg_index: self.seg_index,
            length: self.length,
            entries: self.entries.iter().copied().filter(|e| keep(e)).collect(),
            tokens: self.tokens.clone(),
        }
    }

    pub(crate) fn with_seg_index(mut self, seg_index: u32) -> Self {
        self.seg_index = seg_index;
        self
    }
}

/// A document as the ordered list of its encoded segments.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentRep {
    doc_id: String,
    segments: Vec<SegmentRep>,
}

impl DocumentRep {
    /// Segments must be numbered `0..n` in order and share `doc_id`.
    pub fn new(doc_id: impl Into<String>, segments: Vec<SegmentRep>) -> Result<Self> {
        let doc_id = doc_id.into();
        for (i, seg) in segments.iter().enumerate() {
            if seg.doc_id != doc_id {
                return Err(Error::Validation(format!(
                    "segment of `{}` placed in document `{doc_id}`",
                    seg.doc_id
                )));
            }
            if seg.seg_index as usize != i {
                return Err(Error::Validation(format!(
                    "document `{doc_id}`: expected segment {i}, found {}",
                    seg.seg_index
                )));
            }
        }
        Ok(Self { doc_id, segments })
    }

    /// Builds a document from segments in any order, renumbering nothing:
    /// the indices must still form `0..n` once sorted.
    pub fn from_unordered(doc_id: impl Into<String>, mut segments: Vec<SegmentRep>) -> Result<Self> {
        segments.sort_by_key(|s| s.seg_index);
        if let Some(w) = segments.windows(2).find(|w| w[0].seg_index == w[1].seg_index) {
            return Err(Error::Validation(format!(
                "duplicate segment {} for document `{}`",
                w[0].seg_index, w[0].doc_id
            )));
        }
        Self::new(doc_id, segments)
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn segments(&self) -> &[SegmentRep] {
        &self.segments
    }

    pub fn num_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn has_tokens(&self) -> bool {
        self.segments.iter().all(|s| s.tokens.is_some())
    }

    /// The document cut down to its first `n` segments.
    pub fn truncated(&self, n: usize) -> DocumentRep {
        DocumentRep {
            doc_id: self.doc_id.clone(),
            segments: self.segments.iter().take(n).cloned().collect(),
        }
    }

    /// Appends a segment, renumbering it to the next index.
    pub fn push_segment(&mut self, segment: SegmentRep) -> Result<()> {
        if segment.doc_id != self.doc_id {
            return Err(Error::Validation(format!(
                "segment of `{}` pushed onto document `{}`",
                segment.doc_id, self.doc_id
            )));
        }
        let next = self.segments.len() as u32;
        self.segments.push(segment.with_seg_index(next));
        Ok(())
    }
}

/// Sparse term-weight vector in canonical form (no explicit zeros).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector(BTreeMap<TermId, f64>);

impl SparseVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Later pairs for the same term overwrite earlier ones; zeros are dropped.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (TermId, f64)>) -> Result<Self> {
        let mut v = Self::new();
        for (term, weight) in pairs {
            check_weight(weight, &format!("sparse vector term {term}"))?;
            v.set(term, weight);
        }
        Ok(v)
    }

    pub fn get(&self, term: TermId) -> f64 {
        self.0.get(&term).copied().unwrap_or(0.0)
    }

    pub(crate) fn set(&mut self, term: TermId, weight: f64) {
        if weight == 0.0 {
            self.0.remove(&term);
        } else {
            self.0.insert(term, weight);
        }
    }

    /// Raises the weight of `term` to at least `weight`.
    pub(crate) fn raise(&mut self, term: TermId, weight: f64) {
        if weight > self.get(term) {
            self.0.insert(term, weight);
        }
    }

    pub(crate) fn add(&mut self, term: TermId, weight: f64) {
        let w = self.get(term) + weight;
        self.set(term, w);
    }

    pub fn iter(&self) -> impl Iterator<Item = (TermId, f64)> + '_ {
        self.0.iter().map(|(&t, &w)| (t, w))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    /// Document terms translate only to themselves (no expansion).
    Exact,
    /// Expansion entries of the logit matrix participate in matching.
    Soft,
}

impl FromStr for MatchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(MatchMode::Exact),
            "soft" => Ok(MatchMode::Soft),
            other => Err(Error::InvalidArgument(format!(
                "unknown match mode `{other}` (expected exact or soft)"
            ))),
        }
    }
}

impl fmt::Display for MatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatchMode::Exact => "exact",
            MatchMode::Soft => "soft",
        })
    }
}

/// Which query term spans the unordered-window potential is summed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpanMode {
    /// The same consecutive n-gram spans as the ordered potential.
    #[default]
    Consecutive,
    /// A single span covering the whole query.
    Full,
    /// Consecutive spans plus the full-query span.
    Both,
}

impl FromStr for SpanMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consecutive" => Ok(SpanMode::Consecutive),
            "full" => Ok(SpanMode::Full),
            "both" => Ok(SpanMode::Both),
            other => Err(Error::InvalidArgument(format!(
                "unknown span mode `{other}` (expected consecutive, full or both)"
            ))),
        }
    }
}

/// Weights and shape of the sequential dependence scorers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdmParams {
    pub lambda_t: f64,
    pub lambda_o: f64,
    pub lambda_u: f64,
    pub ngram_order: usize,
    pub window_size: usize,
    pub mode: MatchMode,
    #[serde(default)]
    pub spans: SpanMode,
}

impl SdmParams {
    pub const DEFAULT_LAMBDAS: [f64; 3] = [0.85, 0.10, 0.05];

    pub fn new(mode: MatchMode) -> Self {
        let [lambda_t, lambda_o, lambda_u] = Self::DEFAULT_LAMBDAS;
        Self {
            lambda_t,
            lambda_o,
            lambda_u,
            ngram_order: 2,
            window_size: 8,
            mode,
            spans: SpanMode::Consecutive,
        }
    }

    pub fn with_lambdas(mut self, lambda_t: f64, lambda_o: f64, lambda_u: f64) -> Self {
        self.lambda_t = lambda_t;
        self.lambda_o = lambda_o;
        self.lambda_u = lambda_u;
        self
    }

    pub fn lambdas(&self) -> [f64; 3] {
        [self.lambda_t, self.lambda_o, self.lambda_u]
    }

    pub fn validate(&self) -> Result<()> {
        if self.ngram_order < 2 {
            return Err(Error::InvalidArgument(format!(
                "ngram order must be >= 2, got {}",
                self.ngram_order
            )));
        }
        if self.window_size < 1 {
            return Err(Error::InvalidArgument("window size must be >= 1".into()));
        }
        if self.lambdas().iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidArgument("lambda weights must be finite".into()));
        }
        Ok(())
    }
}

impl Default for SdmParams {
    fn default() -> Self {
        Self::new(MatchMode::Exact)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(position: u32, term_id: TermId, weight: f64) -> Entry {
        Entry {
            position,
            term_id,
            weight,
        }
    }

    #[test]
    fn query_rejects_negative_weight() {
        assert!(QueryRep::new("q", [(1, -0.5)]).is_err());
        assert!(QueryRep::new("q", [(1, f64::NAN)]).is_err());
        let q = QueryRep::new("q", [(7, 2.0), (7, 0.5)]).unwrap();
        assert!(q.has_repeated_terms());
    }

    #[test]
    fn segment_invariants() {
        assert!(SegmentRep::new("d", 0, 3, [entry(3, 1, 1.0)], None).is_err());
        assert!(SegmentRep::new("d", 0, 3, [entry(0, 1, -1.0)], None).is_err());
        assert!(SegmentRep::new("d", 0, 3, [entry(1, 1, 1.0), entry(1, 1, 2.0)], None).is_err());
        assert!(SegmentRep::new("d", 0, 3, [], Some(vec![1, 2])).is_err());
        let s = SegmentRep::new("d", 0, 3, [entry(2, 1, 1.0), entry(0, 5, 1.0)], None).unwrap();
        assert_eq!(s.entries()[0].position, 0);
    }

    #[test]
    fn document_requires_consecutive_segments() {
        let s0 = SegmentRep::new("d", 0, 1, [], None).unwrap();
        let s2 = SegmentRep::new("d", 2, 1, [], None).unwrap();
        assert!(DocumentRep::new("d", vec![s0.clone(), s2]).is_err());
        let s1 = SegmentRep::new("d", 1, 1, [], None).unwrap();
        let doc = DocumentRep::from_unordered("d", vec![s1.clone(), s0.clone()]).unwrap();
        assert_eq!(doc.num_segments(), 2);
        assert!(DocumentRep::from_unordered("d", vec![s0.clone(), s0.clone()]).is_err());
        let other = SegmentRep::new("e", 0, 1, [], None).unwrap();
        assert!(DocumentRep::new("d", vec![other]).is_err());
    }

    #[test]
    fn sparse_vector_is_canonical() {
        let v = SparseVector::from_pairs([(1, 0.0), (2, 1.0)]).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.get(1), 0.0);
    }
}
