//! MRR@k, NDCG@k and Recall@k over run files and graded judgments.
//!
//! Every query in the qrels with at least one relevant document (relevance of
//! at least 1) is scored; a query missing from the run scores 0. Queries without any
//! relevant document are left out of the mean and counted in `excluded`.
//! Unjudged documents are non-relevant.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{Qrels, RunEntry, RunList};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Mrr,
    Ndcg,
    Recall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Metric {
    pub kind: MetricKind,
    pub cutoff: usize,
}

impl Metric {
    pub const MRR_10: Metric = Metric {
        kind: MetricKind::Mrr,
        cutoff: 10,
    };
    pub const NDCG_10: Metric = Metric {
        kind: MetricKind::Ndcg,
        cutoff: 10,
    };
    pub const RECALL_1000: Metric = Metric {
        kind: MetricKind::Recall,
        cutoff: 1000,
    };
    pub const DEFAULTS: [Metric; 3] = [Self::MRR_10, Self::NDCG_10, Self::RECALL_1000];

    pub fn evaluate(&self, run: &RunList, qrels: &Qrels) -> MetricReport {
        match self.kind {
            MetricKind::Mrr => mrr_at_k(run, qrels, self.cutoff),
            MetricKind::Ndcg => ndcg_at_k(run, qrels, self.cutoff),
            MetricKind::Recall => recall_at_k(run, qrels, self.cutoff),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.kind {
            MetricKind::Mrr => "mrr",
            MetricKind::Ndcg => "ndcg",
            MetricKind::Recall => "recall",
        };
        write!(f, "{name}@{}", self.cutoff)
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidArgument(format!(
                "bad metric `{s}` (expected mrr@k, ndcg@k or recall@k with k >= 1)"
            ))
        };
        let (name, k) = s.split_once('@').ok_or_else(bad)?;
        let cutoff: usize = k.parse().map_err(|_| bad())?;
        if cutoff == 0 {
            return Err(bad());
        }
        let kind = match name.to_ascii_lowercase().as_str() {
            "mrr" => MetricKind::Mrr,
            "ndcg" => MetricKind::Ndcg,
            "recall" => MetricKind::Recall,
            _ => return Err(bad()),
        };
        Ok(Metric { kind, cutoff })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub metric: String,
    pub cutoff: usize,
    pub per_query: BTreeMap<String, f64>,
    pub mean: f64,
    pub num_queries: usize,
    pub excluded: usize,
}

fn report(
    metric: Metric,
    run: &RunList,
    qrels: &Qrels,
    per_query_value: impl Fn(&[&RunEntry], &BTreeMap<String, u32>) -> f64,
) -> MetricReport {
    let ranked = run.by_query();
    let mut per_query = BTreeMap::new();
    let mut excluded = 0;
    for qid in qrels.query_ids() {
        if qrels.num_relevant(qid) == 0 {
            excluded += 1;
            continue;
        }
        let judged = qrels.judgments(qid).expect("query id comes from qrels");
        let top: &[&RunEntry] = ranked.get(qid).map_or(&[], |v| {
            let k = metric.cutoff.min(v.len());
            &v[..k]
        });
        per_query.insert(qid.to_string(), per_query_value(top, judged));
    }
    let mean = if per_query.is_empty() {
        0.0
    } else {
        per_query.values().sum::<f64>() / per_query.len() as f64
    };
    MetricReport {
        metric: metric.to_string(),
        cutoff: metric.cutoff,
        num_queries: per_query.len(),
        per_query,
        mean,
        excluded,
    }
}

fn rel(judged: &BTreeMap<String, u32>, doc: &str) -> u32 {
    judged.get(doc).copied().unwrap_or(0)
}

pub fn mrr_at_k(run: &RunList, qrels: &Qrels, k: usize) -> MetricReport {
    report(
        Metric {
            kind: MetricKind::Mrr,
            cutoff: k,
        },
        run,
        qrels,
        |top, judged| {
            top.iter()
                .position(|e| rel(judged, &e.doc_id) >= 1)
                .map_or(0.0, |i| 1.0 / (i + 1) as f64)
        },
    )
}

fn dcg(gains: impl Iterator<Item = u32>) -> f64 {
    gains
        .enumerate()
        .map(|(i, r)| (2f64.powi(r as i32) - 1.0) / ((i + 2) as f64).log2())
        .sum()
}

/// Gain `2^rel - 1`, discount `1 / log2(rank + 1)`.
pub fn ndcg_at_k(run: &RunList, qrels: &Qrels, k: usize) -> MetricReport {
    report(
        Metric {
            kind: MetricKind::Ndcg,
            cutoff: k,
        },
        run,
        qrels,
        |top, judged| {
            let mut ideal: Vec<u32> = judged.values().copied().filter(|&r| r > 0).collect();
            ideal.sort_unstable_by(|a, b| b.cmp(a));
            let idcg = dcg(ideal.into_iter().take(k));
            if idcg == 0.0 {
                return 0.0;
            }
            dcg(top.iter().map(|e| rel(judged, &e.doc_id))) / idcg
        },
    )
}

pub fn recall_at_k(run: &RunList, qrels: &Qrels, k: usize) -> MetricReport {
    report(
        Metric {
            kind: MetricKind::Recall,
            cutoff: k,
        },
        run,
        qrels,
        |top, judged| {
            let relevant = judged.values().filter(|&&r| r > 0).count();
            let found = top.iter().filter(|e| rel(judged, &e.doc_id) > 0).count();
            found as f64 / relevant as f64
        },
    )
}

/// Aligns two reports on the queries both evaluated, in query-id order.
pub fn paired_values(a: &MetricReport, b: &MetricReport) -> (Vec<f64>, Vec<f64>) {
    a.per_query
        .iter()
        .filter_map(|(q, va)| b.per_query.get(q).map(|vb| (*va, *vb)))
        .unzip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::QrelRecord;

    fn qrels(records: &[(&str, &str, u32)]) -> Qrels {
        let mut q = Qrels::new();
        for &(query_id, doc_id, relevance) in records {
            q.insert(QrelRecord {
                query_id: query_id.into(),
                doc_id: doc_id.into(),
                relevance,
            })
            .unwrap();
        }
        q
    }

    fn run(query: &str, docs: &[&str]) -> RunList {
        let mut r = RunList::new();
        let n = docs.len() as f64;
        r.push_query(
            query,
            docs.iter()
                .enumerate()
                .map(|(i, d)| (d.to_string(), n - i as f64))
                .collect(),
        );
        r
    }

    #[test]
    fn mrr_examples() {
        let q = qrels(&[("q1", "d2", 1), ("q1", "d1", 0)]);
        assert_eq!(mrr_at_k(&run("q1", &["d1", "d2"]), &q, 10).mean, 0.5);
        let many: Vec<String> = (0..11).map(|i| format!("x{i}")).collect();
        let mut docs: Vec<&str> = many.iter().map(String::as_str).collect();
        docs.push("d2");
        assert_eq!(mrr_at_k(&run("q1", &docs), &q, 10).mean, 0.0);

        let q = qrels(&[("q1", "a", 1), ("q2", "b", 1)]);
        let mut r = run("q1", &["a"]);
        r.extend(run("q2", &["x", "y", "z", "b"]));
        assert_eq!(mrr_at_k(&r, &q, 10).mean, 0.625);
    }

    #[test]
    fn ndcg_examples() {
        let q = qrels(&[("q1", "d1", 1)]);
        assert_eq!(ndcg_at_k(&run("q1", &["d1", "x"]), &q, 10).mean, 1.0);
        let v = ndcg_at_k(&run("q1", &["x", "d1"]), &q, 10).mean;
        assert!((v - 1.0 / 3f64.log2()).abs() < 1e-12);
        assert!((v - 0.63093).abs() < 1e-5);
        assert_eq!(ndcg_at_k(&run("q1", &["x", "y"]), &q, 10).mean, 0.0);
    }

    #[test]
    fn ndcg_graded_gain() {
        let q = qrels(&[("q", "a", 2), ("q", "b", 1)]);
        let v = ndcg_at_k(&run("q", &["b", "a"]), &q, 10).mean;
        let dcg = 1.0 + 3.0 / 3f64.log2();
        let idcg = 3.0 + 1.0 / 3f64.log2();
        assert!((v - dcg / idcg).abs() < 1e-12);
    }

    #[test]
    fn recall_examples() {
        let q = qrels(&[("q", "a", 1), ("q", "b", 1), ("q", "c", 1), ("q", "d", 1)]);
        assert_eq!(recall_at_k(&run("q", &["a", "x", "b", "c"]), &q, 1000).mean, 0.75);
        assert_eq!(recall_at_k(&run("q", &["d", "c", "b", "a"]), &q, 1000).mean, 1.0);
        assert!(recall_at_k(&run("q", &["x", "y", "a", "b", "c", "d"]), &q, 4).mean < 1.0);
    }

    #[test]
    fn queries_without_relevant_are_excluded() {
        let q = qrels(&[("q1", "a", 1), ("q2", "b", 0)]);
        let r = mrr_at_k(&run("q1", &["a"]), &q, 10);
        assert_eq!((r.num_queries, r.excluded, r.mean), (1, 1, 1.0));
        // judged query absent from the run scores zero
        let q = qrels(&[("q1", "a", 1), ("q3", "c", 1)]);
        assert_eq!(mrr_at_k(&run("q1", &["a"]), &q, 10).mean, 0.5);
    }

    #[test]
    fn metric_parsing() {
        assert_eq!("mrr@10".parse::<Metric>().unwrap(), Metric::MRR_10);
        assert_eq!("recall@1000".parse::<Metric>().unwrap(), Metric::RECALL_1000);
        assert!("map@10".parse::<Metric>().is_err());
        assert!("ndcg@0".parse::<Metric>().is_err());
        assert!("ndcg".parse::<Metric>().is_err());
        assert_eq!(Metric::NDCG_10.to_string(), "ndcg@10");
    }
}
