//! Grid search for the three SDM weights over pairwise triplet accuracy.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::Index;
use crate::ingest::TripletRecord;
use crate::repr::{QueryRep, SdmParams};
use crate::sdm::{sdm_components, SdmComponents};

pub const DEFAULT_GRID_STEP: f64 = 0.05;

/// Candidate weight vectors. A step grid covers the simplex and always holds
/// the default weights; explicit points are normalized to sum to one and
/// used as given.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    Step(f64),
    Points(Vec<[f64; 3]>),
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Step(DEFAULT_GRID_STEP)
    }
}

fn normalize(l: [f64; 3]) -> Result<[f64; 3]> {
    let total: f64 = l.iter().sum();
    if l.iter().any(|x| !x.is_finite() || *x < 0.0) || total <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "grid point {l:?} must be non-negative with a positive sum"
        )));
    }
    Ok(l.map(|x| x / total))
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<[f64; 3]>> {
        let out = match self {
            GridSpec::Step(step) => {
                if !(step.is_finite() && *step > 0.0 && *step <= 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "grid step {step} must be in (0, 1]"
                    )));
                }
                let n = (1.0 / step).round() as usize;
                if ((n as f64) * step - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidArgument(format!("grid step {step} must divide 1")));
                }
                let mut pts = Vec::new();
                for i in (0..=n).rev() {
                    for j in (0..=n - i).rev() {
                        let k = n - i - j;
                        pts.push([i as f64 / n as f64, j as f64 / n as f64, k as f64 / n as f64]);
                    }
                }
                let default = normalize(SdmParams::DEFAULT_LAMBDAS)?;
                if !pts.iter().any(|p| same_point(p, &default)) {
                    pts.push(default);
                }
                pts
            }
            GridSpec::Points(p) => {
                if p.is_empty() {
                    return Err(Error::InvalidArgument("grid has no points".into()));
                }
                p.iter().map(|&l| normalize(l)).collect::<Result<_>>()?
            }
        };
        Ok(out)
    }
}

fn same_point(a: &[f64; 3], b: &[f64; 3]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub lambdas: [f64; 3],
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub mode: String,
    pub ngram_order: usize,
    pub window_size: usize,
    pub num_triplets: usize,
    pub best: GridResult,
    pub default: GridResult,
    pub grid: Vec<GridResult>,
}

/// Accuracy first, then larger λ_T, then larger λ_O, then larger λ_U.
fn preference(a: &GridResult, b: &GridResult) -> Ordering {
    a.accuracy
        .total_cmp(&b.accuracy)
        .then(a.lambdas[0].total_cmp(&b.lambdas[0]))
        .then(a.lambdas[1].total_cmp(&b.lambdas[1]))
        .then(a.lambdas[2].total_cmp(&b.lambdas[2]))
}

/// Potentials of every triplet's positive and negative document.
pub fn triplet_components(
    triplets: &[TripletRecord],
    queries: &[QueryRep],
    index: &Index,
    params: &SdmParams,
) -> Result<Vec<(SdmComponents, SdmComponents)>> {
    if triplets.is_empty() {
        return Err(Error::InvalidArgument("no training triplets".into()));
    }
    params.validate()?;
    let by_id: HashMap<&str, &QueryRep> = queries.iter().map(|q| (q.query_id(), q)).collect();
    let mut missing = BTreeSet::new();
    for t in triplets {
        if !by_id.contains_key(t.query_id.as_str()) {
            missing.insert(format!("query {}", t.query_id));
        }
        for d in [&t.positive_doc_id, &t.negative_doc_id] {
            if index.document(d).is_none() {
                missing.insert(format!("document {d}"));
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::Unresolved(missing.into_iter().collect()));
    }
    triplets
        .par_iter()
        .map(|t| {
            let q = by_id[t.query_id.as_str()];
            let pos = sdm_components(q, index.document(&t.positive_doc_id).unwrap(), params)?;
            let neg = sdm_components(q, index.document(&t.negative_doc_id).unwrap(), params)?;
            Ok((pos, neg))
        })
        .collect()
}

/// Fraction of pairs whose positive strictly outscores the negative.
pub fn pairwise_accuracy(pairs: &[(SdmComponents, SdmComponents)], lambdas: [f64; 3]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let wins = pairs
        .iter()
        .filter(|(p, n)| p.combine(lambdas) > n.combine(lambdas))
        .count();
    wins as f64 / pairs.len() as f64
}

/// Picks the grid point with the best pairwise accuracy. The returned
/// parameters keep the shape and mode of `params`.
pub fn tune_lambdas(
    triplets: &[TripletRecord],
    queries: &[QueryRep],
    index: &Index,
    params: &SdmParams,
    grid: &GridSpec,
) -> Result<(SdmParams, TuneReport)> {
    let points = grid.points()?;
    let pairs = triplet_components(triplets, queries, index, params)?;
    let results: Vec<GridResult> = points
        .par_iter()
        .map(|&lambdas| GridResult {
            lambdas,
            accuracy: pairwise_accuracy(&pairs, lambdas),
        })
        .collect();
    let best = *results
        .iter()
        .max_by(|a, b| preference(a, b))
        .expect("grid is non-empty");
    let default_l = normalize(SdmParams::DEFAULT_LAMBDAS)?;
    let default = GridResult {
        lambdas: default_l,
        accuracy: pairwise_accuracy(&pairs, default_l),
    };
    let [t, o, u] = best.lambdas;
    let tuned = params.with_lambdas(t, o, u);
    let report = TuneReport {
        mode: params.mode.to_string(),
        ngram_order: params.ngram_order,
        window_size: params.window_size,
        num_triplets: triplets.len(),
        best,
        default,
        grid: results,
    };
    Ok((tuned, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repr::MatchMode;
    use crate::synthetic::gen_proximity_set;

    #[test]
    fn step_grid_covers_simplex() {
        let pts = GridSpec::Step(0.05).points().unwrap();
        assert_eq!(pts.len(), 231);
        assert!(pts.iter().all(|p| (p.iter().sum::<f64>() - 1.0).abs() < 1e-12));
        assert!(pts.iter().any(|p| same_point(p, &[0.85, 0.10, 0.05])));
        assert_eq!(GridSpec::Step(0.5).points().unwrap().len(), 7);
        assert_eq!(GridSpec::Step(1.0).points().unwrap().len(), 4);
        assert!(GridSpec::Step(0.3).points().is_err());
        assert!(GridSpec::Step(0.0).points().is_err());
        assert!(GridSpec::Points(vec![]).points().is_err());
        assert!(GridSpec::Points(vec![[0.0, 0.0, 0.0]]).points().is_err());
    }

    fn fixture() -> (Index, Vec<QueryRep>, Vec<TripletRecord>) {
        let set = gen_proximity_set(30, 3, 5).unwrap();
        (
            Index::build(set.segments.into_iter().map(Ok)).unwrap(),
            set.queries,
            set.triplets,
        )
    }

    #[test]
    fn proximity_triplets_need_dependence_weight() {
        let (index, queries, triplets) = fixture();
        for mode in [MatchMode::Exact, MatchMode::Soft] {
            let (tuned, report) = tune_lambdas(
                &triplets,
                &queries,
                &index,
                &SdmParams::new(mode),
                &GridSpec::default(),
            )
            .unwrap();
            assert_eq!(report.best.accuracy, 1.0);
            assert!(tuned.lambda_o > 0.0);
            assert_eq!(tuned.lambdas(), [0.95, 0.05, 0.0]);
            let unigram = report.grid.iter().find(|r| r.lambdas == [1.0, 0.0, 0.0]).unwrap();
            assert_eq!(unigram.accuracy, 0.0);
            assert!(report.best.accuracy >= report.default.accuracy);
        }
    }

    #[test]
    fn single_point_grid_returns_it() {
        let (index, queries, triplets) = fixture();
        let grid = GridSpec::Points(vec![[2.0, 1.0, 1.0]]);
        let (tuned, report) =
            tune_lambdas(&triplets, &queries, &index, &SdmParams::default(), &grid).unwrap();
        assert_eq!(report.grid.len(), 1);
        assert_eq!(tuned.lambdas(), [0.5, 0.25, 0.25]);
    }

    #[test]
    fn identical_documents_give_zero_accuracy() {
        let (index, queries, triplets) = fixture();
        let same: Vec<_> = triplets
            .iter()
            .map(|t| TripletRecord {
                negative_doc_id: t.positive_doc_id.clone(),
                ..t.clone()
            })
            .collect();
        let (tuned, report) = tune_lambdas(
            &same,
            &queries,
            &index,
            &SdmParams::default(),
            &GridSpec::default(),
        )
        .unwrap();
        assert!(report.grid.iter().all(|r| r.accuracy == 0.0));
        assert_eq!(tuned.lambdas(), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn errors_list_unresolved_ids() {
        let (index, queries, _) = fixture();
        let bad = vec![TripletRecord::new("nope", "d-missing", "q0000-adjacent").unwrap()];
        match tune_lambdas(
            &bad,
            &queries,
            &index,
            &SdmParams::default(),
            &GridSpec::default(),
        ) {
            Err(Error::Unresolved(ids)) => assert_eq!(ids, ["document d-missing", "query nope"]),
            other => panic!("unexpected {other:?}"),
        }
        assert!(tune_lambdas(&[], &queries, &index, &SdmParams::default(), &GridSpec::default()).is_err());
    }
}
