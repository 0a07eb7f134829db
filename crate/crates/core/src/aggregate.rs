//! Document-level scores from per-segment representations or per-segment scores.
//!
//! Sum and mean are single strategies: a dot product distributes over
//! coordinate-wise addition, so pooling representations or scores gives the
//! same result.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::repr::{DocumentRep, QueryRep, SparseVector};
use crate::sparse::{dot, max_pool, query_to_vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AggregationStrategy {
    RepMax,
    ScoreMax,
    Sum,
    Mean,
}

impl AggregationStrategy {
    pub const ALL: [AggregationStrategy; 4] = [
        AggregationStrategy::RepMax,
        AggregationStrategy::ScoreMax,
        AggregationStrategy::Sum,
        AggregationStrategy::Mean,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AggregationStrategy::RepMax => "rep-max",
            AggregationStrategy::ScoreMax => "score-max",
            AggregationStrategy::Sum => "sum",
            AggregationStrategy::Mean => "mean",
        }
    }
}

impl fmt::Display for AggregationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AggregationStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "unknown aggregation `{s}` (expected rep-max, score-max, sum or mean)"
            ))
        })
    }
}

fn non_empty(doc: &DocumentRep) -> Result<()> {
    if doc.num_segments() == 0 {
        return Err(Error::EmptyDocument(doc.doc_id().to_string()));
    }
    Ok(())
}

/// Coordinate-wise max over the max-pooled segments.
pub fn aggregate_rep_max(doc: &DocumentRep) -> Result<SparseVector> {
    non_empty(doc)?;
    let mut out = SparseVector::new();
    for seg in doc.segments() {
        for e in seg.entries() {
            out.raise(e.term_id, e.weight);
        }
    }
    Ok(out)
}

/// Coordinate-wise sum of the max-pooled segments.
pub fn aggregate_sum(doc: &DocumentRep) -> Result<SparseVector> {
    non_empty(doc)?;
    let mut out = SparseVector::new();
    for seg in doc.segments() {
        for (t, w) in max_pool(seg).iter() {
            out.add(t, w);
        }
    }
    Ok(out)
}

/// Per-segment dot products with the query's bag-of-words vector.
pub fn segment_scores(query: &QueryRep, doc: &DocumentRep) -> Vec<f64> {
    let q = query_to_vector(query);
    doc.segments().iter().map(|s| dot(&q, &max_pool(s))).collect()
}

pub fn score_rep_max(query: &QueryRep, doc: &DocumentRep) -> Result<f64> {
    Ok(dot(&query_to_vector(query), &aggregate_rep_max(doc)?))
}

pub fn score_max(query: &QueryRep, doc: &DocumentRep) -> Result<f64> {
    non_empty(doc)?;
    Ok(segment_scores(query, doc).into_iter().fold(0.0, f64::max))
}

pub fn score_sum(query: &QueryRep, doc: &DocumentRep) -> Result<f64> {
    non_empty(doc)?;
    Ok(segment_scores(query, doc).into_iter().sum())
}

/// Sum divided by the number of segments.
pub fn score_mean(query: &QueryRep, doc: &DocumentRep) -> Result<f64> {
    Ok(score_sum(query, doc)? / doc.num_segments() as f64)
}

pub fn score(strategy: AggregationStrategy, query: &QueryRep, doc: &DocumentRep) -> Result<f64> {
    match strategy {
        AggregationStrategy::RepMax => score_rep_max(query, doc),
        AggregationStrategy::ScoreMax => score_max(query, doc),
        AggregationStrategy::Sum => score_sum(query, doc),
        AggregationStrategy::Mean => score_mean(query, doc),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repr::{Entry, SegmentRep};

    /// One segment per pooled vector; each term gets its own position.
    fn doc(pooled: &[&[(u32, f64)]]) -> DocumentRep {
        let segments = pooled
            .iter()
            .enumerate()
            .map(|(i, terms)| {
                let entries = terms.iter().enumerate().map(|(p, &(term_id, weight))| Entry {
                    position: p as u32,
                    term_id,
                    weight,
                });
                SegmentRep::new("d", i as u32, terms.len() as u32, entries, None).unwrap()
            })
            .collect();
        DocumentRep::new("d", segments).unwrap()
    }

    fn q(terms: &[(u32, f64)]) -> QueryRep {
        QueryRep::new("q", terms.iter().copied()).unwrap()
    }

    fn sv(pairs: &[(u32, f64)]) -> SparseVector {
        SparseVector::from_pairs(pairs.iter().copied()).unwrap()
    }

    #[test]
    fn rep_max_examples() {
        let d = doc(&[&[(1, 1.0), (2, 2.0)], &[(1, 3.0)]]);
        assert_eq!(aggregate_rep_max(&d).unwrap(), sv(&[(1, 3.0), (2, 2.0)]));
        let d = doc(&[&[(1, 1.0), (2, 2.0)]]);
        assert_eq!(aggregate_rep_max(&d).unwrap(), sv(&[(1, 1.0), (2, 2.0)]));
        let d = doc(&[&[(1, 1.0)], &[(1, 2.0)], &[(1, 0.5)]]);
        assert_eq!(aggregate_rep_max(&d).unwrap(), sv(&[(1, 2.0)]));
    }

    #[test]
    fn score_rep_max_examples() {
        let d = doc(&[&[(7, 2.0)], &[(7, 5.0)]]);
        assert_eq!(score_rep_max(&q(&[(7, 1.0)]), &d).unwrap(), 5.0);
        assert_eq!(score_rep_max(&q(&[]), &d).unwrap(), 0.0);
        let d = doc(&[&[(7, 1.0)], &[(9, 3.0)]]);
        assert_eq!(score_rep_max(&q(&[(7, 2.0), (9, 1.0)]), &d).unwrap(), 5.0);
    }

    #[test]
    fn score_max_examples() {
        let d = doc(&[&[(1, 3.0)], &[(1, 5.0)], &[(1, 1.0)]]);
        assert_eq!(score_max(&q(&[(1, 1.0)]), &d).unwrap(), 5.0);
        let d = doc(&[&[(1, 3.0)]]);
        assert_eq!(score_max(&q(&[(1, 1.0)]), &d).unwrap(), 3.0);
        let d = doc(&[&[(7, 4.0)], &[(7, 1.0), (9, 2.0)]]);
        assert_eq!(score_max(&q(&[(7, 1.0), (9, 1.0)]), &d).unwrap(), 4.0);
    }

    #[test]
    fn sum_and_mean_examples() {
        let query = q(&[(1, 1.0)]);
        let d = doc(&[&[(1, 3.0)], &[(1, 5.0)]]);
        assert_eq!(score_sum(&query, &d).unwrap(), 8.0);
        assert_eq!(score_mean(&query, &d).unwrap(), 4.0);
        let d = doc(&[&[(1, 3.0)]]);
        assert_eq!(score_sum(&query, &d).unwrap(), 3.0);
        assert_eq!(score_mean(&query, &d).unwrap(), 3.0);

        let mut d = doc(&[&[(1, 3.0)], &[(1, 5.0)]]);
        let before = (score_sum(&query, &d).unwrap(), score_mean(&query, &d).unwrap());
        d.push_segment(
            SegmentRep::new(
                "d",
                0,
                1,
                [Entry {
                    position: 0,
                    term_id: 2,
                    weight: 1.0,
                }],
                None,
            )
            .unwrap(),
        )
        .unwrap();
        assert_eq!(score_sum(&query, &d).unwrap(), before.0);
        assert!(score_mean(&query, &d).unwrap() < before.1);
    }

    #[test]
    fn zero_segments_rejected() {
        let d = DocumentRep::new("d", vec![]).unwrap();
        let query = q(&[(1, 1.0)]);
        for s in AggregationStrategy::ALL {
            assert!(matches!(score(s, &query, &d), Err(Error::EmptyDocument(_))));
        }
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in AggregationStrategy::ALL {
            assert_eq!(s.name().parse::<AggregationStrategy>().unwrap(), s);
        }
        assert!("max".parse::<AggregationStrategy>().is_err());
    }
}
