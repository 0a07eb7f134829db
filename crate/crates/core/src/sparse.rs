//! Sparse-vector primitives every scorer builds on.

use crate::repr::{QueryRep, SegmentRep, SparseVector};

/// Dot product over the shared terms of two sparse vectors.
///
/// Products are accumulated in ascending term order whichever argument is
/// smaller, so the result is bitwise symmetric.
pub fn dot(a: &SparseVector, b: &SparseVector) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut acc = 0.0;
    for (term, w) in small.iter() {
        let other = large.get(term);
        if other != 0.0 {
            acc += w * other;
        }
    }
    acc
}

/// Collapses a segment's positional matrix to one weight per term (max over positions).
pub fn max_pool(segment: &SegmentRep) -> SparseVector {
    let mut v = SparseVector::new();
    for e in segment.entries() {
        v.raise(e.term_id, e.weight);
    }
    v
}

/// Bag-of-words view of a query; repeated terms keep their largest weight.
pub fn query_to_vector(query: &QueryRep) -> SparseVector {
    let mut v = SparseVector::new();
    for t in query.terms() {
        v.raise(t.term_id, t.weight);
    }
    v
}
