//! Metric as a function of the number of leading segments kept per document.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::Metric;
use crate::index::{Index, Scorer};
use crate::ingest::Qrels;
use crate::repr::QueryRep;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scorer: String,
    pub segments: usize,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn value(&self, scorer: &str, segments: usize, metric: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.scorer == scorer && r.segments == segments && r.metric == metric)
            .map(|r| r.value)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "scorer,segments,metric,value")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{:.6}", r.scorer, r.segments, r.metric, r.value)?;
        }
        Ok(())
    }
}

pub struct SweepConfig<'a> {
    pub max_segments: usize,
    pub scorers: &'a [Scorer],
    pub metrics: &'a [Metric],
    pub k: usize,
    pub candidate_pool: usize,
}

/// For s = 1..=max_segments, truncates every document to its first s
/// segments and evaluates each scorer.
pub fn sweep(
    index: &Index,
    queries: &[QueryRep],
    qrels: &Qrels,
    config: &SweepConfig,
) -> Result<SweepReport> {
    if config.max_segments == 0 {
        return Err(Error::InvalidArgument("max segments must be >= 1".into()));
    }
    if config.scorers.is_empty() || config.metrics.is_empty() {
        return Err(Error::InvalidArgument(
            "sweep needs at least one scorer and one metric".into(),
        ));
    }
    let mut report = SweepReport::default();
    for s in 1..=config.max_segments {
        let truncated = index.truncated(s)?;
        for scorer in config.scorers {
            let run = truncated.search(queries, config.k, scorer, config.candidate_pool)?;
            for metric in config.metrics {
                report.rows.push(SweepRow {
                    scorer: scorer.name(),
                    segments: s,
                    metric: metric.to_string(),
                    value: metric.evaluate(&run, qrels).mean,
                });
            }
        }
    }
    Ok(report)
}
