//! Positional impact index over encoded segments.
//!
//! Retrieval runs in two stages. Stage one traverses the posting lists of the
//! query terms document-at-a-time and scores every matching document with
//! rep-max (query weight times the document's maximum weight per term).
//! Stage two rescores the best `candidate_pool` candidates with the requested
//! scorer from the forward store. Rep-max bounds score-max and mean from
//! above, so with a pool as large as the corpus the result is exact for every
//! scorer; for sum and the dependence models a smaller pool is a heuristic cut.
//!
//! On disk an index is a directory holding `manifest.json`, `postings.bin` and
//! `forward.bin`; binary files are little-endian and start with a magic tag and
//! the format version.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::aggregate::{self, AggregationStrategy};
use crate::error::{Error, Result};
use crate::ingest::{self, rank_order, DocumentGrouper, RunList};
use crate::repr::{DocumentRep, Entry, MatchMode, QueryRep, SdmParams, SegmentRep, TermId};
use crate::sdm;
use crate::sparse::query_to_vector;

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_CANDIDATE_POOL: usize = 1000;

const POSTINGS_MAGIC: &[u8; 4] = b"LSRP";
const FORWARD_MAGIC: &[u8; 4] = b"LSRF";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posting {
    pub doc: u32,
    pub seg: u32,
    pub position: u32,
    pub weight: f64,
}

/// Document scorer used for stage-two rescoring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scorer {
    Aggregate(AggregationStrategy),
    Sdm(SdmParams),
}

impl Scorer {
    pub fn score(&self, query: &QueryRep, doc: &DocumentRep) -> Result<f64> {
        match self {
            Scorer::Aggregate(a) => aggregate::score(*a, query, doc),
            Scorer::Sdm(p) => sdm::sdm_score(query, doc, p),
        }
    }

    /// Scoring without any shared fast path: SDM via the nested-loop oracle.
    pub fn reference_score(&self, query: &QueryRep, doc: &DocumentRep) -> Result<f64> {
        match self {
            Scorer::Aggregate(a) => aggregate::score(*a, query, doc),
            Scorer::Sdm(p) => sdm::brute_force_score(query, doc, p),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Scorer::Aggregate(a) => a.name().to_string(),
            Scorer::Sdm(p) => format!("{}-sdm", p.mode),
        }
    }

    /// Parses a scorer name; SDM names take their weights and shape from `sdm`.
    pub fn parse(name: &str, sdm: SdmParams) -> Result<Self> {
        match name {
            "exact-sdm" => Ok(Scorer::Sdm(SdmParams {
                mode: MatchMode::Exact,
                ..sdm
            })),
            "soft-sdm" => Ok(Scorer::Sdm(SdmParams {
                mode: MatchMode::Soft,
                ..sdm
            })),
            other => other.parse().map(Scorer::Aggregate).map_err(|_| {
                Error::InvalidArgument(format!(
                    "unknown scorer `{other}` (valid: {})",
                    Self::NAMES.join(", ")
                ))
            }),
        }
    }

    pub const NAMES: [&'static str; 6] = ["rep-max", "score-max", "sum", "mean", "exact-sdm", "soft-sdm"];
}

impl fmt::Display for Scorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Scorer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scorer::parse(s, SdmParams::default())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub num_docs: u64,
    pub num_segments: u64,
    pub num_entries: u64,
    pub num_terms: u64,
    pub has_tokens: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Index {
    postings: BTreeMap<TermId, Vec<Posting>>,
    docs: Vec<DocumentRep>,
    ordinals: HashMap<String, u32>,
}

impl Index {
    /// Builds from a segment stream in which each document's segments are contiguous.
    pub fn build<I>(segments: I) -> Result<Self>
    where
        I: IntoIterator<Item = Result<SegmentRep>>,
    {
        Self::from_documents(DocumentGrouper::new(segments.into_iter()))
    }

    pub fn from_documents<I>(docs: I) -> Result<Self>
    where
        I: IntoIterator<Item = Result<DocumentRep>>,
    {
        let mut index = Index::default();
        for doc in docs {
            index.add(doc?)?;
        }
        Ok(index)
    }

    fn add(&mut self, doc: DocumentRep) -> Result<()> {
        let ordinal = self.docs.len() as u32;
        if self.ordinals.insert(doc.doc_id().to_string(), ordinal).is_some() {
            return Err(Error::Validation(format!(
                "document `{}` occurs twice",
                doc.doc_id()
            )));
        }
        for seg in doc.segments() {
            for e in seg.entries() {
                self.postings.entry(e.term_id).or_default().push(Posting {
                    doc: ordinal,
                    seg: seg.seg_index(),
                    position: e.position,
                    weight: e.weight,
                });
            }
        }
        self.docs.push(doc);
        Ok(())
    }

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn documents(&self) -> &[DocumentRep] {
        &self.docs
    }

    pub fn document(&self, doc_id: &str) -> Option<&DocumentRep> {
        self.ordinals.get(doc_id).map(|&o| &self.docs[o as usize])
    }

    pub fn postings(&self, term: TermId) -> &[Posting] {
        self.postings.get(&term).map_or(&[], Vec::as_slice)
    }

    pub fn has_tokens(&self) -> bool {
        self.docs.iter().all(DocumentRep::has_tokens)
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            format_version: FORMAT_VERSION,
            num_docs: self.docs.len() as u64,
            num_segments: self.docs.iter().map(|d| d.num_segments() as u64).sum(),
            num_entries: self.postings.values().map(|p| p.len() as u64).sum(),
            num_terms: self.postings.len() as u64,
            has_tokens: self.has_tokens(),
        }
    }

    /// Rebuilds with every document cut to its first `n` segments.
    pub fn truncated(&self, n: usize) -> Result<Index> {
        Index::from_documents(self.docs.iter().map(|d| Ok(d.truncated(n))))
    }

    /// Stage one: rep-max scores of every document holding a query term, in ordinal order.
    pub fn candidates(&self, query: &QueryRep) -> Vec<(u32, f64)> {
        let qvec = query_to_vector(query);
        let mut cursors: Vec<(f64, &[Posting])> = qvec
            .iter()
            .map(|(t, w)| (w, self.postings(t)))
            .filter(|(_, p)| !p.is_empty())
            .collect();
        let mut out = Vec::new();
        while let Some(doc) = cursors.iter().filter_map(|(_, p)| p.first().map(|x| x.doc)).min() {
            let mut score = 0.0;
            for (w, list) in cursors.iter_mut() {
                let run = list.iter().take_while(|p| p.doc == doc).count();
                if run > 0 {
                    let best = list[..run].iter().map(|p| p.weight).fold(0.0, f64::max);
                    score += *w * best;
                    *list = &list[run..];
                }
            }
            out.push((doc, score));
        }
        out
    }

    pub fn retrieve(
        &self,
        query: &QueryRep,
        k: usize,
        scorer: &Scorer,
        candidate_pool: usize,
    ) -> Result<Vec<ScoredDoc>> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be positive".into()));
        }
        if candidate_pool < k {
            return Err(Error::InvalidArgument(format!(
                "candidate pool {candidate_pool} is smaller than k = {k}"
            )));
        }
        if let Scorer::Sdm(p) = scorer {
            p.validate()?;
            if p.mode == MatchMode::Exact && !self.has_tokens() {
                return Err(Error::InvalidArgument(
                    "exact SDM needs token sequences, but this index was built without them; \
                     use --sdm soft or rebuild from segments carrying `tokens`"
                        .into(),
                ));
            }
        }
        let mut stage1: Vec<(String, f64)> = self
            .candidates(query)
            .into_iter()
            .map(|(o, s)| (self.docs[o as usize].doc_id().to_string(), s))
            .collect();
        stage1.sort_by(rank_order);
        stage1.truncate(candidate_pool);
        let mut rescored = stage1
            .into_iter()
            .map(|(doc_id, _)| {
                let doc = self.document(&doc_id).expect("candidate comes from this index");
                Ok((doc_id, scorer.score(query, doc)?))
            })
            .collect::<Result<Vec<_>>>()?;
        rescored.sort_by(rank_order);
        rescored.truncate(k);
        Ok(rescored
            .into_iter()
            .map(|(doc_id, score)| ScoredDoc { doc_id, score })
            .collect())
    }

    /// Runs every query, in parallel, keeping the input query order in the run.
    pub fn search(
        &self,
        queries: &[QueryRep],
        k: usize,
        scorer: &Scorer,
        candidate_pool: usize,
    ) -> Result<RunList> {
        use rayon::prelude::*;
        let per_query = queries
            .par_iter()
            .map(|q| self.retrieve(q, k, scorer, candidate_pool))
            .collect::<Result<Vec<_>>>()?;
        let mut run = RunList::new();
        for (q, hits) in queries.iter().zip(per_query) {
            run.push_query(
                q.query_id(),
                hits.into_iter().map(|h| (h.doc_id, h.score)).collect(),
            );
        }
        Ok(run)
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<Manifest> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let path = dir.join("postings.bin");
        let mut w = ingest::create(&path)?;
        self.write_postings(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&path, e))?;

        let path = dir.join("forward.bin");
        let mut w = ingest::create(&path)?;
        self.write_forward(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&path, e))?;

        let manifest = self.manifest();
        let path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }

    fn write_postings(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(POSTINGS_MAGIC)?;
        put_u32(w, FORMAT_VERSION)?;
        put_u32(w, self.postings.len() as u32)?;
        for (&term, list) in &self.postings {
            put_u32(w, term)?;
            put_u32(w, list.len() as u32)?;
            for p in list {
                put_u32(w, p.doc)?;
                put_u32(w, p.seg)?;
                put_u32(w, p.position)?;
                w.write_all(&p.weight.to_le_bytes())?;
            }
        }
        Ok(())
    }

    fn write_forward(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(FORWARD_MAGIC)?;
        put_u32(w, FORMAT_VERSION)?;
        put_u32(w, self.docs.len() as u32)?;
        for doc in &self.docs {
            put_u32(w, doc.doc_id().len() as u32)?;
            w.write_all(doc.doc_id().as_bytes())?;
            put_u32(w, doc.num_segments() as u32)?;
            for seg in doc.segments() {
                put_u32(w, seg.length())?;
                put_u32(w, seg.entries().len() as u32)?;
                for e in seg.entries() {
                    put_u32(w, e.position)?;
                    put_u32(w, e.term_id)?;
                    w.write_all(&e.weight.to_le_bytes())?;
                }
                match seg.tokens() {
                    Some(tokens) => {
                        w.write_all(&[1])?;
                        for &t in tokens {
                            put_u32(w, t)?;
                        }
                    }
                    None => w.write_all(&[0])?,
                }
            }
        }
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join("manifest.json");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported format version {} (expected {FORMAT_VERSION})",
                manifest.format_version
            )));
        }

        let path = dir.join("forward.bin");
        let mut r = ingest::open(&path)?;
        let docs = read_forward(&mut r).map_err(|e| wrap_format(&path, e))?;
        let mut index = Index::from_documents(docs.into_iter().map(Ok))?;

        let path = dir.join("postings.bin");
        let mut r = ingest::open(&path)?;
        let postings = read_postings(&mut r).map_err(|e| wrap_format(&path, e))?;
        if postings != index.postings {
            return Err(Error::Format(format!(
                "{} disagrees with the forward store",
                path.display()
            )));
        }
        index.postings = postings;
        if index.manifest() != manifest {
            return Err(Error::Format(
                "manifest counts do not match index contents".into(),
            ));
        }
        Ok(index)
    }
}

fn wrap_format(path: &Path, e: Error) -> Error {
    match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    }
}

fn put_u32(w: &mut impl Write, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn get_bytes<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Format("truncated file".into())
        } else {
            Error::io("", e)
        }
    })?;
    Ok(buf)
}

fn get_u32(r: &mut impl Read) -> Result<u32> {
    Ok(u32::from_le_bytes(get_bytes(r)?))
}

fn get_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_le_bytes(get_bytes(r)?))
}

fn check_header(r: &mut impl Read, magic: &[u8; 4]) -> Result<()> {
    if &get_bytes::<4>(r)? != magic {
        return Err(Error::Format("bad magic tag".into()));
    }
    let version = get_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    Ok(())
}

fn check_eof(r: &mut impl Read) -> Result<()> {
    let mut probe = [0u8; 1];
    match r.read(&mut probe) {
        Ok(0) => Ok(()),
        Ok(_) => Err(Error::Format("trailing bytes".into())),
        Err(e) => Err(Error::io("", e)),
    }
}

fn read_postings(r: &mut impl Read) -> Result<BTreeMap<TermId, Vec<Posting>>> {
    check_header(r, POSTINGS_MAGIC)?;
    let terms = get_u32(r)?;
    let mut out = BTreeMap::new();
    for _ in 0..terms {
        let term = get_u32(r)?;
        let n = get_u32(r)?;
        let mut list = Vec::with_capacity(n.min(1 << 20) as usize);
        for _ in 0..n {
            list.push(Posting {
                doc: get_u32(r)?,
                seg: get_u32(r)?,
                position: get_u32(r)?,
                weight: get_f64(r)?,
            });
        }
        out.insert(term, list);
    }
    check_eof(r)?;
    Ok(out)
}

fn read_forward(r: &mut impl Read) -> Result<Vec<DocumentRep>> {
    check_header(r, FORWARD_MAGIC)?;
    let num_docs = get_u32(r)?;
    let mut docs = Vec::with_capacity(num_docs.min(1 << 20) as usize);
    for _ in 0..num_docs {
        let len = get_u32(r)? as usize;
        let mut id = vec![0u8; len];
        r.read_exact(&mut id)
            .map_err(|_| Error::Format("truncated file".into()))?;
        let doc_id = String::from_utf8(id).map_err(|_| Error::Format("doc id is not UTF-8".into()))?;
        let num_segs = get_u32(r)?;
        let mut segments = Vec::with_capacity(num_segs.min(1 << 16) as usize);
        for seg_index in 0..num_segs {
            let length = get_u32(r)?;
            let n = get_u32(r)?;
            let mut entries = Vec::with_capacity(n.min(1 << 20) as usize);
            for _ in 0..n {
                entries.push(Entry {
                    position: get_u32(r)?,
                    term_id: get_u32(r)?,
                    weight: get_f64(r)?,
                });
            }
            let tokens = match get_bytes::<1>(r)?[0] {
                0 => None,
                1 => Some((0..length).map(|_| get_u32(r)).collect::<Result<Vec<_>>>()?),
                other => return Err(Error::Format(format!("bad token flag {other}"))),
            };
            segments.push(SegmentRep::new(
                doc_id.clone(),
                seg_index,
                length,
                entries,
                tokens,
            )?);
        }
        docs.push(DocumentRep::new(doc_id, segments)?);
    }
    check_eof(r)?;
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(doc: &str, i: u32, cells: &[(u32, u32, f64)]) -> Result<SegmentRep> {
        let len = cells.iter().map(|c| c.0 + 1).max().unwrap_or(0);
        let entries = cells.iter().map(|&(position, term_id, weight)| Entry {
            position,
            term_id,
            weight,
        });
        let tokens = (0..len)
            .map(|p| cells.iter().find(|c| c.0 == p).map_or(999, |c| c.1))
            .collect();
        SegmentRep::new(doc, i, len, entries, Some(tokens))
    }

    fn two_by_two() -> Vec<Result<SegmentRep>> {
        vec![
            seg("a", 0, &[(0, 1, 1.0), (1, 2, 0.5), (2, 3, 0.2)]),
            seg("a", 1, &[(0, 1, 2.0), (1, 4, 0.5), (2, 5, 0.2)]),
            seg("b", 0, &[(0, 2, 1.0), (1, 2, 0.7), (2, 3, 0.9)]),
            seg("b", 1, &[(0, 6, 1.0), (1, 1, 0.1), (2, 7, 0.3)]),
        ]
    }

    #[test]
    fn build_counts_every_entry_once() {
        let index = Index::build(two_by_two()).unwrap();
        let m = index.manifest();
        assert_eq!(m.num_entries, 12);
        assert_eq!(m.num_docs, 2);
        assert_eq!(m.num_segments, 4);
        assert_eq!(index.postings(1).len(), 3);
        assert!(index
            .postings(1)
            .windows(2)
            .all(|w| (w[0].doc, w[0].seg, w[0].position) < (w[1].doc, w[1].seg, w[1].position)));
    }

    #[test]
    fn empty_stream_gives_empty_index() {
        let index = Index::build(Vec::new()).unwrap();
        assert_eq!(index.num_docs(), 0);
        let q = QueryRep::new("q", [(1, 1.0)]).unwrap();
        let hits = index
            .retrieve(&q, 10, &Scorer::Aggregate(AggregationStrategy::Sum), 10)
            .unwrap();
        assert!(hits.is_empty());
    }

    #[test]
    fn build_rejects_bad_streams() {
        let mut s = two_by_two();
        s.push(seg("a", 2, &[(0, 1, 1.0)]));
        assert!(Index::build(s).is_err());
        let s = vec![seg("a", 0, &[(0, 1, 1.0)]), seg("a", 0, &[(0, 2, 1.0)])];
        assert!(Index::build(s).is_err());
    }

    #[test]
    fn stage_one_is_rep_max() {
        let index = Index::build(two_by_two()).unwrap();
        let q = QueryRep::new("q", [(1, 1.0), (2, 2.0)]).unwrap();
        for (o, s) in index.candidates(&q) {
            let expected = aggregate::score_rep_max(&q, &index.docs[o as usize]).unwrap();
            assert_eq!(s, expected);
        }
    }

    #[test]
    fn retrieve_errors_and_edge_cases() {
        let index = Index::build(two_by_two()).unwrap();
        let q = QueryRep::new("q", [(1, 1.0)]).unwrap();
        let agg = Scorer::Aggregate(AggregationStrategy::ScoreMax);
        assert!(index.retrieve(&q, 0, &agg, 10).is_err());
        assert!(index.retrieve(&q, 5, &agg, 2).is_err());
        let none = QueryRep::new("q", [(42, 1.0)]).unwrap();
        assert!(index.retrieve(&none, 5, &agg, 5).unwrap().is_empty());

        let no_tokens = Index::build(vec![SegmentRep::new(
            "x",
            0,
            1,
            [Entry {
                position: 0,
                term_id: 1,
                weight: 1.0,
            }],
            None,
        )])
        .unwrap();
        let exact = Scorer::Sdm(SdmParams::new(MatchMode::Exact));
        assert!(matches!(
            no_tokens.retrieve(&q, 1, &exact, 1),
            Err(Error::InvalidArgument(_))
        ));
        let soft = Scorer::Sdm(SdmParams::new(MatchMode::Soft));
        assert_eq!(no_tokens.retrieve(&q, 1, &soft, 1).unwrap().len(), 1);
    }

    #[test]
    fn dominant_document_wins_top_one() {
        let mut s = two_by_two();
        s.push(seg("c", 0, &[(0, 1, 5.0), (1, 2, 5.0)]));
        let index = Index::build(s).unwrap();
        let q = QueryRep::new("q", [(1, 1.0), (2, 1.0)]).unwrap();
        for name in Scorer::NAMES {
            let scorer = Scorer::parse(name, SdmParams::default()).unwrap();
            let hits = index.retrieve(&q, 1, &scorer, 3).unwrap();
            assert_eq!(hits[0].doc_id, "c", "{name}");
        }
    }

    #[test]
    fn persistence_round_trip() {
        let index = Index::build(two_by_two()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        index.save(dir.path()).unwrap();
        let loaded = Index::load(dir.path()).unwrap();
        assert_eq!(loaded.docs, index.docs);
        assert_eq!(loaded.postings, index.postings);

        let bytes = std::fs::read(dir.path().join("postings.bin")).unwrap();
        std::fs::write(dir.path().join("postings.bin"), &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(Index::load(dir.path()), Err(Error::Format(_))));
    }

    #[test]
    fn scorer_names() {
        for name in Scorer::NAMES {
            assert_eq!(Scorer::parse(name, SdmParams::default()).unwrap().name(), name);
        }
        let err = Scorer::parse("bm25", SdmParams::default())
            .unwrap_err()
            .to_string();
        assert!(err.contains("rep-max") && err.contains("soft-sdm"));
    }
}
