//! Sequential dependence scoring over learned sparse representations.
//!
//! Three potential families are summed over a query:
//!
//! * unigram: `λ_T · w_i · max_r W[r, q_i]` over every position of every segment;
//! * ordered n-gram: `λ_O · max_r Σ_l w_{s+l} · W[r+l, q_{s+l}]`, phrases
//!   anchored inside one segment;
//! * unordered window: `λ_U · max_r Σ_h w_h · max_{r<=l<r+p} W[l, q_h]`, windows
//!   inside one segment and clipped at its end.
//!
//! Potentials live in weight space with no smoothing: missing cells count as 0.
//! In [`MatchMode::Exact`] every segment is first cut down to its
//! self-translation entries, which requires token sequences.
//!
//! [`brute_force_score`] evaluates the same sums with plain nested loops and
//! serves as the reference for the table-based scorer.

use std::borrow::Cow;
use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::repr::{DocumentRep, MatchMode, QueryRep, SdmParams, SegmentRep, SpanMode, TermId};

/// Keeps only entries where the document term translates to itself.
pub fn restrict_to_exact(segment: &SegmentRep) -> Result<SegmentRep> {
    let tokens = segment.tokens().ok_or_else(|| Error::MissingTokens {
        doc_id: segment.doc_id().to_string(),
        seg_index: segment.seg_index(),
    })?;
    Ok(segment.filter_entries(|e| tokens[e.position as usize] == e.term_id))
}

/// Document after applying the match mode.
pub fn prepare_document<'a>(doc: &'a DocumentRep, mode: MatchMode) -> Result<Cow<'a, DocumentRep>> {
    match mode {
        MatchMode::Soft => Ok(Cow::Borrowed(doc)),
        MatchMode::Exact => {
            let segments = doc
                .segments()
                .iter()
                .map(restrict_to_exact)
                .collect::<Result<Vec<_>>>()?;
            Ok(Cow::Owned(DocumentRep::new(doc.doc_id(), segments)?))
        }
    }
}

/// Query spans `(start, len)` of the ordered potential.
pub fn ordered_spans(query_len: usize, params: &SdmParams) -> Vec<(usize, usize)> {
    let n = params.ngram_order;
    if query_len < n {
        return Vec::new();
    }
    (0..=query_len - n).map(|s| (s, n)).collect()
}

/// Query spans `(start, len)` of the unordered-window potential.
pub fn unordered_spans(query_len: usize, params: &SdmParams) -> Vec<(usize, usize)> {
    let mut spans = match params.spans {
        SpanMode::Consecutive | SpanMode::Both => ordered_spans(query_len, params),
        SpanMode::Full => Vec::new(),
    };
    if matches!(params.spans, SpanMode::Full | SpanMode::Both)
        && query_len > 0
        && !spans.contains(&(0, query_len))
    {
        spans.push((0, query_len));
    }
    spans
}

/// Dense per-position weights of the query terms within one segment.
struct SegmentTable {
    len: usize,
    /// Indexed by query-term slot; `None` when the term has no entry here.
    rows: Vec<Option<Vec<f64>>>,
    row_max: Vec<f64>,
}

impl SegmentTable {
    fn build(segment: &SegmentRep, slot_of: &HashMap<TermId, usize>, slots: usize) -> Self {
        let len = segment.length() as usize;
        let mut rows: Vec<Option<Vec<f64>>> = vec![None; slots];
        let mut row_max = vec![0.0f64; slots];
        for e in segment.entries() {
            if let Some(&slot) = slot_of.get(&e.term_id) {
                let row = rows[slot].get_or_insert_with(|| vec![0.0; len]);
                row[e.position as usize] = e.weight;
                row_max[slot] = row_max[slot].max(e.weight);
            }
        }
        Self { len, rows, row_max }
    }

    fn at(&self, slot: usize, pos: usize) -> f64 {
        self.rows[slot].as_ref().map_or(0.0, |row| row[pos])
    }
}

/// `out[r] = max(row[r .. min(r + p, len)])`.
fn sliding_max(row: &[f64], p: usize) -> Vec<f64> {
    let n = row.len();
    let mut out = vec![0.0; n];
    let mut window: VecDeque<usize> = VecDeque::new();
    for r in (0..n).rev() {
        while window.back().is_some_and(|&b| row[b] <= row[r]) {
            window.pop_back();
        }
        window.push_back(r);
        while window.front().is_some_and(|&f| f >= r + p) {
            window.pop_front();
        }
        out[r] = row[*window.front().expect("window holds r")];
    }
    out
}

/// Unweighted sums of the three potential families.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SdmComponents {
    pub unigram: f64,
    pub ordered: f64,
    pub unordered: f64,
}

impl SdmComponents {
    pub fn combine(&self, lambdas: [f64; 3]) -> f64 {
        lambdas[0] * self.unigram + lambdas[1] * self.ordered + lambdas[2] * self.unordered
    }
}

/// A query, a prepared document and scoring parameters.
pub struct MatchContext<'a> {
    query: &'a QueryRep,
    doc: Cow<'a, DocumentRep>,
    params: SdmParams,
    slot: Vec<usize>,
    tables: Vec<SegmentTable>,
}

impl<'a> MatchContext<'a> {
    pub fn new(query: &'a QueryRep, doc: &'a DocumentRep, params: SdmParams) -> Result<Self> {
        params.validate()?;
        let doc = prepare_document(doc, params.mode)?;
        let mut slot_of: HashMap<TermId, usize> = HashMap::new();
        let slot: Vec<usize> = query
            .terms()
            .iter()
            .map(|t| {
                let next = slot_of.len();
                *slot_of.entry(t.term_id).or_insert(next)
            })
            .collect();
        let tables = doc
            .segments()
            .iter()
            .map(|s| SegmentTable::build(s, &slot_of, slot_of.len()))
            .collect();
        Ok(Self {
            query,
            doc,
            params,
            slot,
            tables,
        })
    }

    pub fn document(&self) -> &DocumentRep {
        &self.doc
    }

    pub fn params(&self) -> &SdmParams {
        &self.params
    }

    fn weight(&self, i: usize) -> f64 {
        self.query.terms()[i].weight
    }

    fn unigram(&self, i: usize) -> f64 {
        let slot = self.slot[i];
        let best = self.tables.iter().map(|t| t.row_max[slot]).fold(0.0, f64::max);
        self.weight(i) * best
    }

    fn ordered(&self, start: usize) -> f64 {
        let k = self.params.ngram_order - 1;
        let mut best = 0.0f64;
        for table in &self.tables {
            if table.len <= k {
                continue;
            }
            if (start..=start + k).all(|i| table.rows[self.slot[i]].is_none()) {
                continue;
            }
            for r in 0..table.len - k {
                let mut s = 0.0;
                for l in 0..=k {
                    s += self.weight(start + l) * table.at(self.slot[start + l], r + l);
                }
                best = best.max(s);
            }
        }
        best
    }

    fn unordered(&self, start: usize, span: usize) -> f64 {
        let p = self.params.window_size;
        let mut best = 0.0f64;
        for table in &self.tables {
            let mut sums = vec![0.0; table.len];
            let mut any = false;
            for h in start..start + span {
                if let Some(row) = &table.rows[self.slot[h]] {
                    any = true;
                    let w = self.weight(h);
                    for (acc, m) in sums.iter_mut().zip(sliding_max(row, p)) {
                        *acc += w * m;
                    }
                }
            }
            if any {
                best = sums.into_iter().fold(best, f64::max);
            }
        }
        best
    }

    /// Individual term potential for query position `i`. Panics if `i` is out of range.
    pub fn psi_st(&self, i: usize) -> f64 {
        self.params.lambda_t * self.unigram(i)
    }

    /// Ordered phrase potential for the n-gram starting at query position `start`.
    pub fn psi_so(&self, start: usize) -> f64 {
        assert!(start + self.params.ngram_order <= self.query.len());
        self.params.lambda_o * self.ordered(start)
    }

    /// Unordered window potential for query positions `start..start + span`.
    pub fn psi_su(&self, start: usize, span: usize) -> f64 {
        assert!(start + span <= self.query.len());
        self.params.lambda_u * self.unordered(start, span)
    }

    pub fn components(&self) -> SdmComponents {
        let n = self.query.len();
        SdmComponents {
            unigram: (0..n).map(|i| self.unigram(i)).sum(),
            ordered: ordered_spans(n, &self.params)
                .into_iter()
                .map(|(s, _)| self.ordered(s))
                .sum(),
            unordered: unordered_spans(n, &self.params)
                .into_iter()
                .map(|(s, len)| self.unordered(s, len))
                .sum(),
        }
    }

    pub fn score(&self) -> f64 {
        let n = self.query.len();
        let unigram: f64 = (0..n).map(|i| self.psi_st(i)).sum();
        let ordered: f64 = ordered_spans(n, &self.params)
            .into_iter()
            .map(|(s, _)| self.psi_so(s))
            .sum();
        let unordered: f64 = unordered_spans(n, &self.params)
            .into_iter()
            .map(|(s, len)| self.psi_su(s, len))
            .sum();
        unigram + ordered + unordered
    }
}

pub fn sdm_score(query: &QueryRep, doc: &DocumentRep, params: &SdmParams) -> Result<f64> {
    Ok(MatchContext::new(query, doc, *params)?.score())
}

pub fn sdm_components(query: &QueryRep, doc: &DocumentRep, params: &SdmParams) -> Result<SdmComponents> {
    Ok(MatchContext::new(query, doc, *params)?.components())
}

type RawSegment = (usize, Vec<(usize, TermId, f64)>);

/// Reference evaluation of [`sdm_score`] by direct nested loops over raw entries.
pub fn brute_force_score(query: &QueryRep, doc: &DocumentRep, params: &SdmParams) -> Result<f64> {
    params.validate()?;
    let exact = params.mode == MatchMode::Exact;
    let mut segs: Vec<RawSegment> = Vec::new();
    for seg in doc.segments() {
        let tokens = match (exact, seg.tokens()) {
            (true, None) => {
                return Err(Error::MissingTokens {
                    doc_id: seg.doc_id().to_string(),
                    seg_index: seg.seg_index(),
                })
            }
            (_, t) => t,
        };
        let cells = seg
            .entries()
            .iter()
            .filter(|e| !exact || tokens.is_some_and(|t| t[e.position as usize] == e.term_id))
            .map(|e| (e.position as usize, e.term_id, e.weight))
            .collect();
        segs.push((seg.length() as usize, cells));
    }
    let lookup = |cells: &[(usize, TermId, f64)], pos: usize, term: TermId| -> f64 {
        cells
            .iter()
            .find(|&&(p, t, _)| p == pos && t == term)
            .map_or(0.0, |c| c.2)
    };
    let terms = query.terms();
    let n = terms.len();

    let mut unigram = 0.0;
    for t in terms {
        let mut best = 0.0f64;
        for (len, cells) in &segs {
            for pos in 0..*len {
                best = best.max(lookup(cells, pos, t.term_id));
            }
        }
        unigram += params.lambda_t * (t.weight * best);
    }

    let mut ordered = 0.0;
    for (start, span) in ordered_spans(n, params) {
        let mut best = 0.0f64;
        for (len, cells) in &segs {
            for r in 0..*len {
                if r + span > *len {
                    break;
                }
                let mut s = 0.0;
                for l in 0..span {
                    let t = terms[start + l];
                    s += t.weight * lookup(cells, r + l, t.term_id);
                }
                best = best.max(s);
            }
        }
        ordered += params.lambda_o * best;
    }

    let mut unordered = 0.0;
    for (start, span) in unordered_spans(n, params) {
        let mut best = 0.0f64;
        for (len, cells) in &segs {
            for r in 0..*len {
                let mut s = 0.0;
                for t in &terms[start..start + span] {
                    let mut m = 0.0f64;
                    for l in r..(r + params.window_size).min(*len) {
                        m = m.max(lookup(cells, l, t.term_id));
                    }
                    s += t.weight * m;
                }
                best = best.max(s);
            }
        }
        unordered += params.lambda_u * best;
    }

    Ok(unigram + ordered + unordered)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregate::{score_max, score_rep_max};
    use crate::repr::Entry;
    use proptest::prelude::*;

    fn seg(index: u32, len: u32, cells: &[(u32, u32, f64)]) -> SegmentRep {
        let entries = cells.iter().map(|&(position, term_id, weight)| Entry {
            position,
            term_id,
            weight,
        });
        SegmentRep::new("d", index, len, entries, None).unwrap()
    }

    fn doc(segments: Vec<SegmentRep>) -> DocumentRep {
        DocumentRep::new("d", segments).unwrap()
    }

    fn query(terms: &[(u32, f64)]) -> QueryRep {
        QueryRep::new("q", terms.iter().copied()).unwrap()
    }

    fn soft(l: [f64; 3]) -> SdmParams {
        SdmParams::new(MatchMode::Soft).with_lambdas(l[0], l[1], l[2])
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn restrict_examples() {
        let s = SegmentRep::new(
            "d",
            0,
            2,
            [
                Entry {
                    position: 1,
                    term_id: 7,
                    weight: 1.5,
                },
                Entry {
                    position: 1,
                    term_id: 9,
                    weight: 0.8,
                },
            ],
            Some(vec![3, 7]),
        )
        .unwrap();
        let r = restrict_to_exact(&s).unwrap();
        assert_eq!(
            r.entries(),
            &[Entry {
                position: 1,
                term_id: 7,
                weight: 1.5
            }]
        );
        assert_eq!(r.tokens(), s.tokens());
        assert_eq!(r.length(), 2);

        let same = SegmentRep::new(
            "d",
            0,
            1,
            [Entry {
                position: 0,
                term_id: 4,
                weight: 1.0,
            }],
            Some(vec![4]),
        )
        .unwrap();
        assert_eq!(restrict_to_exact(&same).unwrap(), same);

        let expansion = SegmentRep::new(
            "d",
            0,
            1,
            [Entry {
                position: 0,
                term_id: 9,
                weight: 2.0,
            }],
            Some(vec![7]),
        )
        .unwrap();
        assert!(restrict_to_exact(&expansion).unwrap().entries().is_empty());

        assert!(matches!(
            restrict_to_exact(&seg(0, 1, &[])),
            Err(Error::MissingTokens { .. })
        ));
    }

    #[test]
    fn psi_st_examples() {
        let q = query(&[(7, 2.0), (8, 1.0)]);
        let d = doc(vec![seg(0, 4, &[(1, 7, 0.5), (3, 7, 1.5)])]);
        let ctx = MatchContext::new(&q, &d, soft([1.0, 0.0, 0.0])).unwrap();
        assert_eq!(ctx.psi_st(0), 3.0);
        assert_eq!(ctx.psi_st(1), 0.0);

        let q = query(&[(7, 1.0)]);
        let d = doc(vec![seg(0, 2, &[(0, 7, 1.5)]), seg(1, 2, &[(1, 7, 2.5)])]);
        let ctx = MatchContext::new(&q, &d, soft([1.0, 0.0, 0.0])).unwrap();
        assert_eq!(ctx.psi_st(0), 2.5);
    }

    fn phrase_segment() -> SegmentRep {
        seg(0, 7, &[(1, 7, 1.0), (2, 9, 2.0), (5, 7, 3.0), (6, 9, 0.5)])
    }

    #[test]
    fn psi_so_examples() {
        let q = query(&[(7, 1.0), (9, 1.0)]);
        let d = doc(vec![phrase_segment()]);
        let ctx = MatchContext::new(&q, &d, soft([0.0, 1.0, 0.0])).unwrap();
        assert_eq!(ctx.psi_so(0), 3.5);

        let absent = doc(vec![seg(0, 5, &[(0, 1, 1.0)])]);
        let ctx = MatchContext::new(&q, &absent, soft([0.0, 1.0, 0.0])).unwrap();
        assert_eq!(ctx.psi_so(0), 0.0);

        // 7 ends segment 0, 9 starts segment 1: never scored as one phrase.
        let p = soft([0.0, 1.0, 0.0]);
        let straddle = doc(vec![seg(0, 3, &[(2, 7, 1.25)]), seg(1, 3, &[(0, 9, 0.75)])]);
        let ctx = MatchContext::new(&q, &straddle, p).unwrap();
        let per_segment = straddle
            .segments()
            .iter()
            .map(|s| {
                let mut single = doc(vec![]);
                single.push_segment(s.clone()).unwrap();
                brute_force_score(&q, &single, &p).unwrap()
            })
            .fold(0.0, f64::max);
        assert_eq!(ctx.psi_so(0), per_segment);
        let joined = doc(vec![seg(0, 6, &[(2, 7, 1.25), (3, 9, 0.75)])]);
        assert_eq!(sdm_score(&q, &joined, &p).unwrap(), 2.0);
        assert!(ctx.psi_so(0) < 2.0);
    }

    #[test]
    fn psi_su_examples() {
        let q = query(&[(7, 1.0), (9, 1.0)]);
        let d = doc(vec![seg(0, 6, &[(1, 7, 2.0), (4, 9, 1.0)])]);
        let mut p = soft([0.0, 0.0, 1.0]);
        p.window_size = 4;
        assert_eq!(MatchContext::new(&q, &d, p).unwrap().psi_su(0, 2), 3.0);
        p.window_size = 2;
        assert_eq!(MatchContext::new(&q, &d, p).unwrap().psi_su(0, 2), 2.0);

        let empty = doc(vec![]);
        assert_eq!(MatchContext::new(&q, &empty, p).unwrap().psi_su(0, 2), 0.0);
        assert_eq!(sdm_score(&q, &empty, &p).unwrap(), 0.0);
    }

    #[test]
    fn sdm_score_examples() {
        let empty_q = query(&[]);
        let d = doc(vec![phrase_segment()]);
        assert_eq!(sdm_score(&empty_q, &d, &soft([0.85, 0.1, 0.05])).unwrap(), 0.0);

        // Phrase segment, p = 4: unigram maxima 3.0 + 2.0; best bigram 3.5 at r=5;
        // best window [2, 6) holds 9@2 (2.0) and 7@5 (3.0) = 5.0.
        let q = query(&[(7, 1.0), (9, 1.0)]);
        let mut p = soft([0.8, 0.1, 0.1]);
        p.window_size = 4;
        let expected = 0.8 * 5.0 + 0.1 * 3.5 + 0.1 * 5.0;
        assert!(close(sdm_score(&q, &d, &p).unwrap(), expected));

        // Window segment: unigram 2.0 + 1.0; bigram best 2.0; window best 3.0.
        let d = doc(vec![seg(0, 6, &[(1, 7, 2.0), (4, 9, 1.0)])]);
        let expected = 0.8 * 3.0 + 0.1 * 2.0 + 0.1 * 3.0;
        assert!(close(sdm_score(&q, &d, &p).unwrap(), expected));
        assert!(close(brute_force_score(&q, &d, &p).unwrap(), expected));
    }

    #[test]
    fn exact_mode_needs_tokens() {
        let q = query(&[(7, 1.0)]);
        let d = doc(vec![seg(0, 1, &[(0, 7, 1.0)])]);
        let p = SdmParams::new(MatchMode::Exact);
        assert!(matches!(sdm_score(&q, &d, &p), Err(Error::MissingTokens { .. })));
        assert!(matches!(
            brute_force_score(&q, &d, &p),
            Err(Error::MissingTokens { .. })
        ));
    }

    #[test]
    fn span_construction() {
        let mut p = SdmParams::default();
        assert_eq!(unordered_spans(3, &p), vec![(0, 2), (1, 2)]);
        assert!(ordered_spans(1, &p).is_empty());
        p.spans = SpanMode::Full;
        assert_eq!(unordered_spans(3, &p), vec![(0, 3)]);
        assert_eq!(unordered_spans(1, &p), vec![(0, 1)]);
        p.spans = SpanMode::Both;
        assert_eq!(unordered_spans(3, &p), vec![(0, 2), (1, 2), (0, 3)]);
        assert_eq!(unordered_spans(2, &p), vec![(0, 2)]);
    }

    #[test]
    fn sliding_max_clips_at_end() {
        assert_eq!(sliding_max(&[1.0, 3.0, 2.0, 0.0], 2), vec![3.0, 3.0, 2.0, 0.0]);
        assert_eq!(sliding_max(&[1.0, 3.0, 2.0], 10), vec![3.0, 3.0, 2.0]);
        assert_eq!(sliding_max(&[1.0, 3.0, 2.0], 1), vec![1.0, 3.0, 2.0]);
    }

    fn arb_doc() -> impl Strategy<Value = DocumentRep> {
        let cell = (0u32..12, 0u32..6, 0.1f64..3.0);
        let segment = (1u32..12, proptest::collection::vec(cell, 0..15));
        proptest::collection::vec(segment, 1..4).prop_map(|segs| {
            let segments = segs
                .into_iter()
                .enumerate()
                .map(|(i, (len, cells))| {
                    let mut seen = std::collections::HashSet::new();
                    let cells: Vec<_> = cells
                        .into_iter()
                        .map(|(p, t, w)| (p % len, t, w))
                        .filter(|&(p, t, _)| seen.insert((p, t)))
                        .collect();
                    let tokens = (0..len).map(|p| (p * 7 + i as u32) % 6).collect();
                    let entries = cells.iter().map(|&(position, term_id, weight)| Entry {
                        position,
                        term_id,
                        weight,
                    });
                    SegmentRep::new("d", i as u32, len, entries, Some(tokens)).unwrap()
                })
                .collect();
            DocumentRep::new("d", segments).unwrap()
        })
    }

    fn arb_query() -> impl Strategy<Value = QueryRep> {
        proptest::collection::vec((0u32..6, 0.1f64..2.0), 0..5).prop_map(|t| QueryRep::new("q", t).unwrap())
    }

    fn arb_params() -> impl Strategy<Value = SdmParams> {
        (
            0.0f64..1.0,
            0.0f64..1.0,
            0.0f64..1.0,
            2usize..4,
            1usize..10,
            prop_oneof![Just(MatchMode::Exact), Just(MatchMode::Soft)],
            prop_oneof![
                Just(SpanMode::Consecutive),
                Just(SpanMode::Full),
                Just(SpanMode::Both)
            ],
        )
            .prop_map(|(t, o, u, n, p, mode, spans)| SdmParams {
                lambda_t: t,
                lambda_o: o,
                lambda_u: u,
                ngram_order: n,
                window_size: p,
                mode,
                spans,
            })
    }

    proptest! {
        #[test]
        fn matches_brute_force(q in arb_query(), d in arb_doc(), p in arb_params()) {
            let fast = sdm_score(&q, &d, &p).unwrap();
            let slow = brute_force_score(&q, &d, &p).unwrap();
            prop_assert!(close(fast, slow), "{fast} vs {slow}");
            let combined = sdm_components(&q, &d, &p).unwrap().combine(p.lambdas());
            prop_assert!(close(fast, combined));
        }

        #[test]
        fn unigram_reduction(q in arb_query(), d in arb_doc()) {
            prop_assume!(!q.has_repeated_terms());
            let s = sdm_score(&q, &d, &soft([1.0, 0.0, 0.0])).unwrap();
            prop_assert!(close(s, score_rep_max(&q, &d).unwrap()));
        }

        #[test]
        fn score_max_recovery(q in arb_query(), d in arb_doc()) {
            prop_assume!(!q.has_repeated_terms());
            let mut p = soft([0.0, 0.0, 1.0]);
            p.spans = SpanMode::Full;
            p.window_size = d.segments().iter().map(|s| s.length() as usize).max().unwrap();
            let s = sdm_score(&q, &d, &p).unwrap();
            prop_assert!(close(s, score_max(&q, &d).unwrap()));
        }

        #[test]
        fn adding_a_segment_never_lowers_potentials(
            q in arb_query(), d in arb_doc(), extra in arb_doc(), p in arb_params()
        ) {
            let mut bigger = d.clone();
            for s in extra.segments() {
                bigger.push_segment(s.clone()).unwrap();
            }
            let a = sdm_components(&q, &d, &p).unwrap();
            let b = sdm_components(&q, &bigger, &p).unwrap();
            prop_assert!(b.unigram >= a.unigram && b.ordered >= a.ordered && b.unordered >= a.unordered);
        }

        #[test]
        fn lambda_scaling(q in arb_query(), d in arb_doc(), p in arb_params(), c in 0.1f64..10.0) {
            let scaled = p.with_lambdas(c * p.lambda_t, c * p.lambda_o, c * p.lambda_u);
            let a = sdm_score(&q, &d, &p).unwrap();
            let b = sdm_score(&q, &d, &scaled).unwrap();
            prop_assert!(close(c * a, b));
        }

        #[test]
        fn exact_never_exceeds_soft(q in arb_query(), d in arb_doc(), p in arb_params()) {
            let mut e = p;
            e.mode = MatchMode::Exact;
            let mut s = p;
            s.mode = MatchMode::Soft;
            let ce = sdm_components(&q, &d, &e).unwrap();
            let cs = sdm_components(&q, &d, &s).unwrap();
            prop_assert!(ce.unigram <= cs.unigram && ce.ordered <= cs.ordered && ce.unordered <= cs.unordered);
            for seg in d.segments() {
                let r = restrict_to_exact(seg).unwrap();
                prop_assert!(r.entries().iter().all(|e| seg.entries().contains(e)));
            }
        }

        #[test]
        fn window_nesting(q in arb_query(), d in arb_doc(), p in arb_params()) {
            let mut wider = p;
            wider.window_size += 1;
            let a = sdm_components(&q, &d, &p).unwrap().unordered;
            let b = sdm_components(&q, &d, &wider).unwrap().unordered;
            prop_assert!(b >= a);
        }
    }
}
