//! Deterministic synthetic corpora, queries, judgments and triplets.
//!
//! Every generator is a pure function of its spec and seed. Entry weights are
//! drawn uniformly from [`WEIGHT_RANGE`] unless a generator needs tighter
//! bands to guarantee its ordering properties.

use std::collections::HashSet;
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{QrelRecord, Qrels, TripletRecord};
use crate::repr::{DocumentRep, Entry, QueryRep, SegmentRep, TermId};

pub const WEIGHT_RANGE: Range<f64> = 0.1..3.0;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub num_docs: usize,
    pub segs_per_doc: usize,
    pub vocab_size: u32,
    /// Token positions per segment; each position carries its self-translation entry.
    pub entries_per_seg: usize,
    /// Extra expansion entries per segment (term differs from the token at that position).
    #[serde(default)]
    pub expansion_entries: usize,
    pub seed: u64,
    #[serde(default)]
    pub allow_empty_docs: bool,
}

impl CorpusSpec {
    pub fn new(
        num_docs: usize,
        segs_per_doc: usize,
        vocab_size: u32,
        entries_per_seg: usize,
        seed: u64,
    ) -> Self {
        Self {
            num_docs,
            segs_per_doc,
            vocab_size,
            entries_per_seg,
            expansion_entries: 0,
            seed,
            allow_empty_docs: false,
        }
    }
}

pub fn doc_id(i: usize) -> String {
    format!("d{i:04}")
}

fn random_segment(
    rng: &mut ChaCha8Rng,
    doc: &str,
    seg_index: u32,
    length: usize,
    vocab: u32,
    expansions: usize,
) -> Result<SegmentRep> {
    let tokens: Vec<TermId> = (0..length).map(|_| rng.gen_range(0..vocab)).collect();
    let mut entries: Vec<Entry> = tokens
        .iter()
        .enumerate()
        .map(|(p, &t)| Entry {
            position: p as u32,
            term_id: t,
            weight: rng.gen_range(WEIGHT_RANGE),
        })
        .collect();
    let mut taken: HashSet<(u32, TermId)> = entries.iter().map(|e| (e.position, e.term_id)).collect();
    if length > 0 && vocab > 1 {
        for _ in 0..expansions {
            let position = rng.gen_range(0..length as u32);
            let term_id = rng.gen_range(0..vocab);
            if term_id != tokens[position as usize] && taken.insert((position, term_id)) {
                entries.push(Entry {
                    position,
                    term_id,
                    weight: rng.gen_range(WEIGHT_RANGE),
                });
            }
        }
    }
    SegmentRep::new(doc, seg_index, length as u32, entries, Some(tokens))
}

/// Random segments with token sequences, grouped by document in order.
pub fn gen_corpus(spec: &CorpusSpec) -> Result<Vec<SegmentRep>> {
    if spec.num_docs == 0 || spec.entries_per_seg == 0 {
        return Err(Error::InvalidArgument(
            "num_docs and entries_per_seg must be >= 1".into(),
        ));
    }
    if spec.segs_per_doc == 0 && !spec.allow_empty_docs {
        return Err(Error::InvalidArgument(
            "segs_per_doc must be >= 1 unless empty documents are allowed".into(),
        ));
    }
    let required = if spec.expansion_entries > 0 { 2 } else { 1 };
    if spec.vocab_size < required {
        return Err(Error::InvalidArgument(format!(
            "vocab_size {} is below the {required} distinct terms required",
            spec.vocab_size
        )));
    }
    let mut rng = rng(spec.seed);
    let mut out = Vec::with_capacity(spec.num_docs * spec.segs_per_doc);
    for d in 0..spec.num_docs {
        let id = doc_id(d);
        for s in 0..spec.segs_per_doc {
            out.push(random_segment(
                &mut rng,
                &id,
                s as u32,
                spec.entries_per_seg,
                spec.vocab_size,
                spec.expansion_entries,
            )?);
        }
    }
    Ok(out)
}

/// Random queries over `0..vocab_size` with lengths in `len`.
pub fn gen_queries(num: usize, len: Range<usize>, vocab_size: u32, seed: u64) -> Result<Vec<QueryRep>> {
    if vocab_size == 0 || len.is_empty() {
        return Err(Error::InvalidArgument(
            "need a non-empty vocabulary and length range".into(),
        ));
    }
    let mut rng = rng(seed);
    (0..num)
        .map(|i| {
            let n = rng.gen_range(len.clone());
            let terms: Vec<(TermId, f64)> = (0..n)
                .map(|_| (rng.gen_range(0..vocab_size), rng.gen_range(WEIGHT_RANGE)))
                .collect();
            QueryRep::new(format!("q{i:04}"), terms)
        })
        .collect()
}

/// Groups a segment list whose documents are contiguous into documents.
pub fn into_documents(segments: Vec<SegmentRep>) -> Result<Vec<DocumentRep>> {
    crate::ingest::DocumentGrouper::new(segments.into_iter().map(Ok)).collect()
}

fn filler_segment(
    rng: &mut ChaCha8Rng,
    doc: &str,
    seg_index: u32,
    length: usize,
    fillers: &Range<TermId>,
    placed: &[(usize, TermId, f64)],
) -> Result<SegmentRep> {
    let mut tokens: Vec<TermId> = (0..length).map(|_| rng.gen_range(fillers.clone())).collect();
    for &(p, t, _) in placed {
        tokens[p] = t;
    }
    let mut entries = Vec::with_capacity(length + 2);
    for (p, &t) in tokens.iter().enumerate() {
        let weight = placed
            .iter()
            .find(|x| x.0 == p)
            .map_or_else(|| rng.gen_range(WEIGHT_RANGE), |x| x.2);
        entries.push(Entry {
            position: p as u32,
            term_id: t,
            weight,
        });
        // soft-mode expansion, always to another filler term
        if rng.gen_bool(0.3) {
            let alt = rng.gen_range(fillers.clone());
            if alt != t {
                entries.push(Entry {
                    position: p as u32,
                    term_id: alt,
                    weight: rng.gen_range(WEIGHT_RANGE),
                });
            }
        }
    }
    SegmentRep::new(doc, seg_index, length as u32, entries, Some(tokens))
}

fn filler_range(query: &QueryRep) -> Range<TermId> {
    let base = query.terms().iter().map(|t| t.term_id).max().map_or(0, |m| m + 1);
    base..base + 64
}

/// Two documents holding identical query-term entries: in the first the
/// query terms are consecutive inside one segment; in the second each term
/// sits in its own segment. Filler tokens and their expansions use ids above
/// every query term.
///
/// For queries with distinct term ids any dependence scorer with a positive
/// phrase or window weight prefers the adjacent document, while
/// position-agnostic scorers tie. Repeated ids void the guarantee: a lone
/// occurrence can fill the phrase slot with the larger query weight.
pub fn gen_proximity_pair(query: &QueryRep, seed: u64) -> Result<(DocumentRep, DocumentRep)> {
    proximity_pair(query, seed, filler_range(query))
}

fn proximity_pair(query: &QueryRep, seed: u64, fillers: Range<TermId>) -> Result<(DocumentRep, DocumentRep)> {
    if query.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "query `{}` needs at least 2 terms",
            query.query_id()
        )));
    }
    let mut rng = rng(seed);
    let weights: Vec<f64> = query
        .terms()
        .iter()
        .map(|_| rng.gen_range(WEIGHT_RANGE))
        .collect();
    let n = query.len();

    let adj_id = format!("{}-adjacent", query.query_id());
    let pad = rng.gen_range(1..6);
    let placed: Vec<(usize, TermId, f64)> = query
        .terms()
        .iter()
        .enumerate()
        .map(|(i, t)| (pad + i, t.term_id, weights[i]))
        .collect();
    let mut adjacent = DocumentRep::new(adj_id.clone(), vec![])?;
    let len = pad + n + rng.gen_range(1..6);
    adjacent.push_segment(filler_segment(&mut rng, &adj_id, 0, len, &fillers, &placed)?)?;
    for s in 1..n {
        let len = rng.gen_range(4..16);
        adjacent.push_segment(filler_segment(&mut rng, &adj_id, s as u32, len, &fillers, &[])?)?;
    }

    let sct_id = format!("{}-scattered", query.query_id());
    let mut scattered = DocumentRep::new(sct_id.clone(), vec![])?;
    for (i, t) in query.terms().iter().enumerate() {
        let len = rng.gen_range(4..16);
        let pos = rng.gen_range(0..len);
        scattered.push_segment(filler_segment(
            &mut rng,
            &sct_id,
            i as u32,
            len,
            &fillers,
            &[(pos, t.term_id, weights[i])],
        )?)?;
    }
    Ok((adjacent, scattered))
}

/// Queries of `len` distinct terms drawn from `0..vocab_size`.
pub fn gen_distinct_queries(num: usize, len: usize, vocab_size: u32, seed: u64) -> Result<Vec<QueryRep>> {
    if (vocab_size as usize) < len {
        return Err(Error::InvalidArgument(format!(
            "vocab_size {vocab_size} cannot supply {len} distinct terms"
        )));
    }
    let mut rng = rng(seed);
    let vocab: Vec<TermId> = (0..vocab_size).collect();
    (0..num)
        .map(|i| {
            let terms: Vec<(TermId, f64)> = vocab
                .choose_multiple(&mut rng, len)
                .map(|&t| (t, rng.gen_range(WEIGHT_RANGE)))
                .collect();
            QueryRep::new(format!("q{i:04}"), terms)
        })
        .collect()
}

/// A complete retrieval fixture.
#[derive(Debug, Clone)]
pub struct SyntheticSet {
    pub segments: Vec<SegmentRep>,
    pub queries: Vec<QueryRep>,
    pub qrels: Qrels,
    pub triplets: Vec<TripletRecord>,
}

/// One proximity pair per query: the adjacent document is relevant, the
/// scattered one is the triplet negative. Query `i` owns the term ids
/// `i * query_len .. (i + 1) * query_len` in shuffled order, and fillers lie
/// above all of them, so no document matches another pair's query.
pub fn gen_proximity_set(num_queries: usize, query_len: usize, seed: u64) -> Result<SyntheticSet> {
    let mut rng = rng(seed);
    let width = query_len as TermId;
    let queries: Vec<QueryRep> = (0..num_queries as TermId)
        .map(|i| {
            let mut ids: Vec<TermId> = (i * width..(i + 1) * width).collect();
            ids.shuffle(&mut rng);
            QueryRep::new(
                format!("q{i:04}"),
                ids.into_iter().map(|t| (t, rng.gen_range(WEIGHT_RANGE))),
            )
        })
        .collect::<Result<_>>()?;
    let base = num_queries as TermId * width;
    let fillers = base..base + 64;
    let mut set = SyntheticSet {
        segments: Vec::new(),
        queries: Vec::new(),
        qrels: Qrels::new(),
        triplets: Vec::new(),
    };
    for (i, q) in queries.into_iter().enumerate() {
        let (adj, sct) = proximity_pair(&q, seed.wrapping_add(1 + i as u64), fillers.clone())?;
        set.qrels.insert(QrelRecord {
            query_id: q.query_id().to_string(),
            doc_id: adj.doc_id().to_string(),
            relevance: 1,
        })?;
        set.triplets
            .push(TripletRecord::new(q.query_id(), adj.doc_id(), sct.doc_id())?);
        set.segments.extend(adj.segments().iter().cloned());
        set.segments.extend(sct.segments().iter().cloned());
        set.queries.push(q);
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialSpec {
    pub num_queries: usize,
    pub query_len: usize,
    pub noise_segments: usize,
    /// How many other queries each noise segment carries a term of.
    pub overlap: usize,
    /// Filler tokens between placed noise terms; keep above the window size.
    pub noise_gap: usize,
    pub seed: u64,
}

impl Default for AdversarialSpec {
    fn default() -> Self {
        Self {
            num_queries: 50,
            query_len: 4,
            noise_segments: 4,
            overlap: 2,
            noise_gap: 10,
            seed: 7,
        }
    }
}

const QUERY_WEIGHTS: Range<f64> = 0.95..1.05;
const SIGNAL_WEIGHTS: Range<f64> = 1.2..1.4;
const NOISE_WEIGHTS: Range<f64> = 1.6..1.8;

/// Corpus where one document per query holds the whole query as a phrase in
/// its first segment, and every later segment scatters single terms of
/// `overlap` other queries with higher weights than the signal.
///
/// With the weight bands used here a query-term-per-segment never outscores a
/// full phrase match, but the noise of all later segments together outweighs
/// it under summing, and a phrase always outscores a scattered match.
pub fn gen_adversarial(spec: &AdversarialSpec) -> Result<SyntheticSet> {
    let m = spec.num_queries;
    if m < 2 || spec.query_len < 2 || spec.overlap == 0 || spec.overlap >= m {
        return Err(Error::InvalidArgument(
            "need >= 2 queries of >= 2 terms and 1 <= overlap < num_queries".into(),
        ));
    }
    let mut rng = rng(spec.seed);
    let l = spec.query_len as TermId;
    let queries: Vec<QueryRep> = (0..m)
        .map(|i| {
            let terms: Vec<(TermId, f64)> = (0..l)
                .map(|j| (i as TermId * l + j, rng.gen_range(QUERY_WEIGHTS)))
                .collect();
            QueryRep::new(format!("q{i:04}"), terms)
        })
        .collect::<Result<_>>()?;
    let base = m as TermId * l;
    let fillers = base..base + 500;

    let mut set = SyntheticSet {
        segments: Vec::new(),
        queries: Vec::new(),
        qrels: Qrels::new(),
        triplets: Vec::new(),
    };
    for (i, query) in queries.iter().enumerate() {
        let id = doc_id(i);
        let pad = rng.gen_range(3..10);
        let placed: Vec<_> = query
            .terms()
            .iter()
            .enumerate()
            .map(|(j, t)| (pad + j, t.term_id, rng.gen_range(SIGNAL_WEIGHTS)))
            .collect();
        let len = pad + spec.query_len + rng.gen_range(3..10);
        set.segments
            .push(filler_segment(&mut rng, &id, 0, len, &fillers, &placed)?);

        for s in 1..=spec.noise_segments {
            let term_slot = (s - 1) % spec.query_len;
            let mut placed = Vec::new();
            let mut pos = rng.gen_range(0..spec.noise_gap);
            for c in 1..=spec.overlap {
                let other = &queries[(i + c) % m];
                placed.push((
                    pos,
                    other.terms()[term_slot].term_id,
                    rng.gen_range(NOISE_WEIGHTS),
                ));
                pos += spec.noise_gap + 1;
            }
            let len = pos + rng.gen_range(0..spec.noise_gap);
            set.segments
                .push(filler_segment(&mut rng, &id, s as u32, len, &fillers, &placed)?);
        }

        set.qrels.insert(QrelRecord {
            query_id: query.query_id().to_string(),
            doc_id: id.clone(),
            relevance: 1,
        })?;
        for c in 1..=spec.overlap {
            let distractor = doc_id((i + m - c) % m);
            set.triplets
                .push(TripletRecord::new(query.query_id(), &id, distractor)?);
        }
        let random_neg = loop {
            let j = rng.gen_range(0..m);
            if j != i {
                break doc_id(j);
            }
        };
        set.triplets
            .push(TripletRecord::new(query.query_id(), &id, random_neg)?);
    }
    set.queries = queries;
    Ok(set)
}
