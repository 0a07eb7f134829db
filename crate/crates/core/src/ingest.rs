//! On-disk formats: encoded segments and queries (JSONL), TREC run files,
//! qrels and training triplets.
//!
//! Readers are streaming iterators over any `BufRead`; errors carry the
//! source name and 1-based line number.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Lines, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::repr::{DocumentRep, Entry, QueryRep, SegmentRep, TermId};

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Non-blank lines of a reader, numbered from 1.
struct NumberedLines<R> {
    lines: Lines<R>,
    line_no: usize,
    source: String,
}

impl<R: BufRead> NumberedLines<R> {
    fn new(reader: R, source: &str) -> Self {
        Self {
            lines: reader.lines(),
            line_no: 0,
            source: source.to_string(),
        }
    }
}

impl<R: BufRead> Iterator for NumberedLines<R> {
    type Item = Result<(usize, String)>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = self.lines.next()?;
            self.line_no += 1;
            match line {
                Ok(l) if l.trim().is_empty() => continue,
                Ok(l) => return Some(Ok((self.line_no, l))),
                Err(e) => return Some(Err(Error::io(&self.source, e))),
            }
        }
    }
}

fn locate(source: &str, line: usize, err: Error) -> Error {
    match err {
        Error::Validation(msg) => Error::Validation(format!("{source}:{line}: {msg}")),
        other => other,
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SegmentLine {
    doc_id: String,
    seg: u32,
    len: u32,
    entries: Vec<(u32, TermId, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tokens: Option<Vec<TermId>>,
}

/// Streams `SegmentRep`s from JSONL, one object per line.
pub struct SegmentReader<R> {
    lines: NumberedLines<R>,
}

impl SegmentReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Ok(Self::new(open(path)?, &path.display().to_string()))
    }
}

impl<R: BufRead> SegmentReader<R> {
    pub fn new(reader: R, source: &str) -> Self {
        Self {
            lines: NumberedLines::new(reader, source),
        }
    }
}

impl<R: BufRead> Iterator for SegmentReader<R> {
    type Item = Result<SegmentRep>;

    fn next(&mut self) -> Option<Self::Item> {
        let (line_no, line) = match self.lines.next()? {
            Ok(x) => x,
            Err(e) => return Some(Err(e)),
        };
        let source = &self.lines.source;
        let parsed: SegmentLine = match serde_json::from_str(&line) {
            Ok(p) => p,
            Err(e) => return Some(Err(Error::parse(source, line_no, e.to_string()))),
        };
        let entries = parsed
            .entries
            .into_iter()
            .map(|(position, term_id, weight)| Entry {
                position,
                term_id,
                weight,
            });
        Some(
            SegmentRep::new(parsed.doc_id, parsed.seg, parsed.len, entries, parsed.tokens)
                .map_err(|e| locate(source, line_no, e)),
        )
    }
}

pub fn read_encoded_segments(path: impl AsRef<Path>) -> Result<SegmentReader<BufReader<File>>> {
    SegmentReader::open(path)
}

pub fn write_encoded_segments<'a, W: Write>(
    mut out: W,
    segments: impl IntoIterator<Item = &'a SegmentRep>,
) -> std::io::Result<()> {
    for s in segments {
        let line = SegmentLine {
            doc_id: s.doc_id().to_string(),
            seg: s.seg_index(),
            len: s.length(),
            entries: s
                .entries()
                .iter()
                .map(|e| (e.position, e.term_id, e.weight))
                .collect(),
            tokens: s.tokens().map(<[TermId]>::to_vec),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Groups a segment stream into documents. Segments of one document must be
/// contiguous in the stream; within a document they may come in any order.
pub struct DocumentGrouper<I> {
    inner: I,
    pending: Option<SegmentRep>,
    seen: HashSet<String>,
    done: bool,
}

impl<I: Iterator<Item = Result<SegmentRep>>> DocumentGrouper<I> {
    pub fn new(inner: I) -> Self {
        Self {
            inner,
            pending: None,
            seen: HashSet::new(),
            done: false,
        }
    }
}

impl<I: Iterator<Item = Result<SegmentRep>>> Iterator for DocumentGrouper<I> {
    type Item = Result<DocumentRep>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let first = match self.pending.take() {
            Some(s) => s,
            None => match self.inner.next() {
                None => {
                    self.done = true;
                    return None;
                }
                Some(Err(e)) => {
                    self.done = true;
                    return Some(Err(e));
                }
                Some(Ok(s)) => s,
            },
        };
        let doc_id = first.doc_id().to_string();
        if !self.seen.insert(doc_id.clone()) {
            self.done = true;
            return Some(Err(Error::Validation(format!(
                "segments of document `{doc_id}` are not contiguous in the stream"
            ))));
        }
        let mut segments = vec![first];
        loop {
            match self.inner.next() {
                None => break,
                Some(Err(e)) => {
                    self.done = true;
                    return Some(Err(e));
                }
                Some(Ok(s)) if s.doc_id() == doc_id => segments.push(s),
                Some(Ok(s)) => {
                    self.pending = Some(s);
                    break;
                }
            }
        }
        let doc = DocumentRep::from_unordered(doc_id, segments);
        if doc.is_err() {
            self.done = true;
        }
        Some(doc)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct QueryLine {
    query_id: String,
    terms: Vec<(TermId, f64)>,
}

/// Streams `QueryRep`s from JSONL.
pub struct QueryReader<R> {
    lines: NumberedLines<R>,
}

impl QueryReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Ok(Self::new(open(path)?, &path.display().to_string()))
    }
}

impl<R: BufRead> QueryReader<R> {
    pub fn new(reader: R, source: &str) -> Self {
        Self {
            lines: NumberedLines::new(reader, source),
        }
    }
}

impl<R: BufRead> Iterator for QueryReader<R> {
    type Item = Result<QueryRep>;

    fn next(&mut self) -> Option<Self::Item> {
        let (line_no, line) = match self.lines.next()? {
            Ok(x) => x,
            Err(e) => return Some(Err(e)),
        };
        let source = &self.lines.source;
        Some(
            serde_json::from_str::<QueryLine>(&line)
                .map_err(|e| Error::parse(source, line_no, e.to_string()))
                .and_then(|q| QueryRep::new(q.query_id, q.terms).map_err(|e| locate(source, line_no, e))),
        )
    }
}

pub fn read_encoded_queries(path: impl AsRef<Path>) -> Result<QueryReader<BufReader<File>>> {
    QueryReader::open(path)
}

pub fn write_encoded_queries<'a, W: Write>(
    mut out: W,
    queries: impl IntoIterator<Item = &'a QueryRep>,
) -> std::io::Result<()> {
    for q in queries {
        let line = QueryLine {
            query_id: q.query_id().to_string(),
            terms: q.terms().iter().map(|t| (t.term_id, t.weight)).collect(),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunEntry {
    pub query_id: String,
    pub doc_id: String,
    pub rank: u32,
    pub score: f64,
}

/// Ranked retrieval output for a set of queries, grouped by query in
/// insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunList {
    entries: Vec<RunEntry>,
}

/// Descending score, ties broken by ascending doc id.
pub fn rank_order(a: &(String, f64), b: &(String, f64)) -> std::cmp::Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0))
}

impl RunList {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends one query's results, ranking them 1..n by [`rank_order`].
    pub fn push_query(&mut self, query_id: &str, mut scored: Vec<(String, f64)>) {
        scored.sort_by(rank_order);
        self.entries.extend(
            scored
                .into_iter()
                .enumerate()
                .map(|(i, (doc_id, score))| RunEntry {
                    query_id: query_id.to_string(),
                    doc_id,
                    rank: i as u32 + 1,
                    score,
                }),
        );
    }

    pub fn extend(&mut self, other: RunList) {
        self.entries.extend(other.entries);
    }

    pub fn entries(&self) -> &[RunEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries of each query, sorted by rank.
    pub fn by_query(&self) -> BTreeMap<&str, Vec<&RunEntry>> {
        let mut out: BTreeMap<&str, Vec<&RunEntry>> = BTreeMap::new();
        for e in &self.entries {
            out.entry(e.query_id.as_str()).or_default().push(e);
        }
        for list in out.values_mut() {
            list.sort_by_key(|e| e.rank);
        }
        out
    }
}

pub fn write_run<W: Write>(mut out: W, run: &RunList, tag: &str) -> std::io::Result<()> {
    for e in &run.entries {
        writeln!(
            out,
            "{} Q0 {} {} {:.6} {}",
            e.query_id, e.doc_id, e.rank, e.score, tag
        )?;
    }
    out.flush()
}

pub fn write_run_file(path: impl AsRef<Path>, run: &RunList, tag: &str) -> Result<()> {
    let path = path.as_ref();
    write_run(create(path)?, run, tag).map_err(|e| Error::io(path, e))
}

pub fn parse_run<R: BufRead>(reader: R, source: &str) -> Result<RunList> {
    let mut entries = Vec::new();
    let mut last_rank: BTreeMap<String, u32> = BTreeMap::new();
    for item in NumberedLines::new(reader, source) {
        let (line_no, line) = item?;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 6 {
            return Err(Error::parse(
                source,
                line_no,
                format!("expected 6 columns, found {}", cols.len()),
            ));
        }
        let rank: u32 = cols[3]
            .parse()
            .map_err(|_| Error::parse(source, line_no, format!("bad rank `{}`", cols[3])))?;
        let score: f64 = cols[4]
            .parse()
            .map_err(|_| Error::parse(source, line_no, format!("bad score `{}`", cols[4])))?;
        let prev = last_rank.insert(cols[0].to_string(), rank).unwrap_or(0);
        if rank <= prev {
            return Err(Error::Validation(format!(
                "{source}:{line_no}: rank {rank} for query `{}` does not follow rank {prev}",
                cols[0]
            )));
        }
        entries.push(RunEntry {
            query_id: cols[0].to_string(),
            doc_id: cols[2].to_string(),
            rank,
            score,
        });
    }
    Ok(RunList { entries })
}

pub fn read_run(path: impl AsRef<Path>) -> Result<RunList> {
    let path = path.as_ref();
    parse_run(open(path)?, &path.display().to_string())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QrelRecord {
    pub query_id: String,
    pub doc_id: String,
    pub relevance: u32,
}

/// Graded judgments: query id -> doc id -> relevance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, record: QrelRecord) -> Result<()> {
        let per_query = self.judgments.entry(record.query_id.clone()).or_default();
        if per_query.contains_key(&record.doc_id) {
            return Err(Error::Validation(format!(
                "duplicate judgment for query `{}` document `{}`",
                record.query_id, record.doc_id
            )));
        }
        per_query.insert(record.doc_id, record.relevance);
        Ok(())
    }

    pub fn relevance(&self, query_id: &str, doc_id: &str) -> u32 {
        self.judgments
            .get(query_id)
            .and_then(|m| m.get(doc_id))
            .copied()
            .unwrap_or(0)
    }

    pub fn judgments(&self, query_id: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(query_id)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn num_relevant(&self, query_id: &str) -> usize {
        self.judgments
            .get(query_id)
            .map_or(0, |m| m.values().filter(|&&r| r > 0).count())
    }

    pub fn records(&self) -> impl Iterator<Item = QrelRecord> + '_ {
        self.judgments.iter().flat_map(|(q, m)| {
            m.iter().map(move |(d, &r)| QrelRecord {
                query_id: q.clone(),
                doc_id: d.clone(),
                relevance: r,
            })
        })
    }
}

pub fn parse_qrels<R: BufRead>(reader: R, source: &str) -> Result<Qrels> {
    let mut qrels = Qrels::new();
    for item in NumberedLines::new(reader, source) {
        let (line_no, line) = item?;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 4 {
            return Err(Error::parse(
                source,
                line_no,
                format!("expected 4 columns, found {}", cols.len()),
            ));
        }
        let relevance: u32 = cols[3].parse().map_err(|_| {
            Error::parse(
                source,
                line_no,
                format!("relevance `{}` is not a non-negative integer", cols[3]),
            )
        })?;
        qrels
            .insert(QrelRecord {
                query_id: cols[0].to_string(),
                doc_id: cols[2].to_string(),
                relevance,
            })
            .map_err(|e| locate(source, line_no, e))?;
    }
    Ok(qrels)
}

pub fn read_qrels(path: impl AsRef<Path>) -> Result<Qrels> {
    let path = path.as_ref();
    parse_qrels(open(path)?, &path.display().to_string())
}

pub fn write_qrels<W: Write>(mut out: W, qrels: &Qrels) -> std::io::Result<()> {
    for r in qrels.records() {
        writeln!(out, "{} 0 {} {}", r.query_id, r.doc_id, r.relevance)?;
    }
    out.flush()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripletRecord {
    pub query_id: String,
    pub positive_doc_id: String,
    pub negative_doc_id: String,
}

impl TripletRecord {
    pub fn new(
        query_id: impl Into<String>,
        positive_doc_id: impl Into<String>,
        negative_doc_id: impl Into<String>,
    ) -> Result<Self> {
        let t = Self {
            query_id: query_id.into(),
            positive_doc_id: positive_doc_id.into(),
            negative_doc_id: negative_doc_id.into(),
        };
        if t.positive_doc_id == t.negative_doc_id {
            return Err(Error::Validation(format!(
                "triplet for query `{}` uses `{}` as both positive and negative",
                t.query_id, t.positive_doc_id
            )));
        }
        Ok(t)
    }
}

/// Streams tab-separated `query_id  positive  negative` triplets.
pub struct TripletReader<R> {
    lines: NumberedLines<R>,
}

impl<R: BufRead> TripletReader<R> {
    pub fn new(reader: R, source: &str) -> Self {
        Self {
            lines: NumberedLines::new(reader, source),
        }
    }
}

impl<R: BufRead> Iterator for TripletReader<R> {
    type Item = Result<TripletRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        let (line_no, line) = match self.lines.next()? {
            Ok(x) => x,
            Err(e) => return Some(Err(e)),
        };
        let source = &self.lines.source;
        let cols: Vec<&str> = line.trim_end_matches(['\r', '\n']).split('\t').collect();
        if cols.len() != 3 {
            return Some(Err(Error::parse(
                source,
                line_no,
                format!("expected 3 tab-separated columns, found {}", cols.len()),
            )));
        }
        Some(TripletRecord::new(cols[0], cols[1], cols[2]).map_err(|e| locate(source, line_no, e)))
    }
}

pub fn read_triplets(path: impl AsRef<Path>) -> Result<TripletReader<BufReader<File>>> {
    let path = path.as_ref();
    Ok(TripletReader::new(open(path)?, &path.display().to_string()))
}

pub fn write_triplets<'a, W: Write>(
    mut out: W,
    triplets: impl IntoIterator<Item = &'a TripletRecord>,
) -> std::io::Result<()> {
    for t in triplets {
        writeln!(
            out,
            "{}\t{}\t{}",
            t.query_id, t.positive_doc_id, t.negative_doc_id
        )?;
    }
    out.flush()
}
