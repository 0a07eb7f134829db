//! Lexical baselines over raw token corpora: BM25 and the original
//! sequential dependence model with log-smoothed potentials.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::segmenter::Tokenizer;

/// Collection statistics plus the token sequences needed to count phrase and
/// window frequencies on demand.
#[derive(Debug, Clone)]
pub struct CorpusStats {
    docs: Vec<(String, Vec<String>)>,
    doc_index: HashMap<String, usize>,
    total_tokens: u64,
    term_cf: HashMap<String, u64>,
    doc_freq: HashMap<String, u64>,
}

impl CorpusStats {
    pub fn build(docs: impl IntoIterator<Item = (String, Vec<String>)>) -> Result<Self> {
        let mut stats = CorpusStats {
            docs: Vec::new(),
            doc_index: HashMap::new(),
            total_tokens: 0,
            term_cf: HashMap::new(),
            doc_freq: HashMap::new(),
        };
        for (doc_id, tokens) in docs {
            if stats.doc_index.insert(doc_id.clone(), stats.docs.len()).is_some() {
                return Err(Error::Validation(format!("duplicate document `{doc_id}`")));
            }
            stats.total_tokens += tokens.len() as u64;
            let mut seen = std::collections::HashSet::new();
            for t in &tokens {
                *stats.term_cf.entry(t.clone()).or_default() += 1;
                if seen.insert(t.as_str()) {
                    *stats.doc_freq.entry(t.clone()).or_default() += 1;
                }
            }
            stats.docs.push((doc_id, tokens));
        }
        Ok(stats)
    }

    pub fn doc_count(&self) -> usize {
        self.docs.len()
    }

    /// |C|
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn avg_doc_length(&self) -> f64 {
        if self.docs.is_empty() {
            0.0
        } else {
            self.total_tokens as f64 / self.docs.len() as f64
        }
    }

    pub fn docs(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.docs.iter().map(|(id, t)| (id.as_str(), t.as_slice()))
    }

    pub fn doc_tokens(&self, doc_id: &str) -> Option<&[String]> {
        self.doc_index.get(doc_id).map(|&i| self.docs[i].1.as_slice())
    }

    pub fn cf(&self, term: &str) -> u64 {
        self.term_cf.get(term).copied().unwrap_or(0)
    }

    pub fn df(&self, term: &str) -> u64 {
        self.doc_freq.get(term).copied().unwrap_or(0)
    }

    pub fn ngram_cf(&self, ngram: &[String]) -> u64 {
        self.docs.iter().map(|(_, d)| count_phrase(d, ngram)).sum()
    }

    pub fn window_cf(&self, terms: &[String], window: usize) -> u64 {
        self.docs
            .iter()
            .map(|(_, d)| count_unordered_windows(d, terms, window))
            .sum()
    }
}

/// Exact consecutive occurrences of `ngram` (`#1`).
pub fn count_phrase(doc: &[String], ngram: &[String]) -> u64 {
    if ngram.is_empty() || ngram.len() > doc.len() {
        return 0;
    }
    doc.windows(ngram.len()).filter(|w| *w == ngram).count() as u64
}

/// Unordered-window occurrences (`#uwN`): the number of distinct minimal
/// spans of at most `window` positions that contain every term of `terms`
/// (as a multiset) in any order.
pub fn count_unordered_windows(doc: &[String], terms: &[String], window: usize) -> u64 {
    if terms.is_empty() {
        return 0;
    }
    let mut need: HashMap<&str, usize> = HashMap::new();
    for t in terms {
        *need.entry(t.as_str()).or_default() += 1;
    }
    let mut have: HashMap<&str, usize> = HashMap::new();
    let mut satisfied = 0usize;
    let mut end = 0usize;
    let mut count = 0u64;
    for start in 0..doc.len() {
        while satisfied < need.len() && end < doc.len() {
            let t = doc[end].as_str();
            if let Some(&n) = need.get(t) {
                let h = have.entry(t).or_default();
                *h += 1;
                if *h == n {
                    satisfied += 1;
                }
            }
            end += 1;
        }
        if satisfied < need.len() {
            break;
        }
        // [start, end) is the shortest satisfying span starting here; it is
        // minimal iff dropping doc[start] breaks it.
        let t = doc[start].as_str();
        if let Some(&n) = need.get(t) {
            let h = have.get_mut(t).expect("counted when entering the span");
            if *h == n {
                if end - start <= window {
                    count += 1;
                }
                satisfied -= 1;
            }
            *h -= 1;
        }
    }
    count
}

/// A potential value; `floored` marks a zero document and collection frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potential {
    pub value: f64,
    pub floored: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicParams {
    pub lambda_t: f64,
    pub lambda_o: f64,
    pub lambda_u: f64,
    pub ngram_order: usize,
    pub window: usize,
    /// Dirichlet prior: `α_D = μ / (|D| + μ)`.
    pub mu: f64,
    /// Collection mass substituted when both frequencies are zero.
    pub floor_mass: f64,
}

impl Default for ClassicParams {
    fn default() -> Self {
        Self {
            lambda_t: 0.85,
            lambda_o: 0.10,
            lambda_u: 0.05,
            ngram_order: 2,
            window: 8,
            mu: 2500.0,
            floor_mass: 0.5,
        }
    }
}

pub fn dirichlet_alpha(doc_len: usize, mu: f64) -> f64 {
    mu / (doc_len as f64 + mu)
}

fn smoothed(
    tf: u64,
    doc_len: usize,
    cf: u64,
    stats: &CorpusStats,
    alpha: f64,
    lambda: f64,
    floor_mass: f64,
) -> Result<Potential> {
    if doc_len == 0 {
        return Err(Error::InvalidArgument("document length must be positive".into()));
    }
    let total = stats.total_tokens();
    if total == 0 {
        return Err(Error::InvalidArgument("collection is empty".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "smoothing factor {alpha} must lie in (0, 1)"
        )));
    }
    if lambda == 0.0 {
        return Ok(Potential {
            value: 0.0,
            floored: false,
        });
    }
    let floored = tf == 0 && cf == 0;
    let p = if floored {
        alpha * floor_mass / total as f64
    } else {
        (1.0 - alpha) * tf as f64 / doc_len as f64 + alpha * cf as f64 / total as f64
    };
    Ok(Potential {
        value: lambda * p.ln(),
        floored,
    })
}

pub fn classic_psi_t(
    term: &str,
    doc: &[String],
    stats: &CorpusStats,
    alpha: f64,
    lambda: f64,
) -> Result<Potential> {
    let tf = doc.iter().filter(|t| *t == term).count() as u64;
    smoothed(
        tf,
        doc.len(),
        stats.cf(term),
        stats,
        alpha,
        lambda,
        ClassicParams::default().floor_mass,
    )
}

pub fn classic_psi_o(
    ngram: &[String],
    doc: &[String],
    stats: &CorpusStats,
    alpha: f64,
    lambda: f64,
) -> Result<Potential> {
    let tf = count_phrase(doc, ngram);
    smoothed(
        tf,
        doc.len(),
        stats.ngram_cf(ngram),
        stats,
        alpha,
        lambda,
        ClassicParams::default().floor_mass,
    )
}

pub fn classic_psi_u(
    terms: &[String],
    window: usize,
    doc: &[String],
    stats: &CorpusStats,
    alpha: f64,
    lambda: f64,
) -> Result<Potential> {
    let tf = count_unordered_windows(doc, terms, window);
    smoothed(
        tf,
        doc.len(),
        stats.window_cf(terms, window),
        stats,
        alpha,
        lambda,
        ClassicParams::default().floor_mass,
    )
}

/// Scores documents for one query, caching the collection frequencies of
/// the query's phrases and windows.
pub struct ClassicSdmScorer<'a> {
    query: Vec<String>,
    stats: &'a CorpusStats,
    params: ClassicParams,
    phrase_cf: Vec<u64>,
    window_cf: Vec<u64>,
}

impl<'a> ClassicSdmScorer<'a> {
    pub fn new(query: &[String], stats: &'a CorpusStats, params: ClassicParams) -> Result<Self> {
        if params.ngram_order < 2 || params.window < 1 {
            return Err(Error::InvalidArgument(
                "ngram order must be >= 2 and window >= 1".into(),
            ));
        }
        let spans: Vec<&[String]> = query.windows(params.ngram_order).collect();
        Ok(Self {
            phrase_cf: spans.iter().map(|s| stats.ngram_cf(s)).collect(),
            window_cf: spans.iter().map(|s| stats.window_cf(s, params.window)).collect(),
            query: query.to_vec(),
            stats,
            params,
        })
    }

    pub fn score(&self, doc: &[String]) -> Result<f64> {
        let p = &self.params;
        let alpha = dirichlet_alpha(doc.len(), p.mu);
        let mut total = 0.0;
        for term in &self.query {
            let tf = doc.iter().filter(|t| *t == term).count() as u64;
            total += smoothed(
                tf,
                doc.len(),
                self.stats.cf(term),
                self.stats,
                alpha,
                p.lambda_t,
                p.floor_mass,
            )?
            .value;
        }
        for (i, span) in self.query.windows(p.ngram_order).enumerate() {
            let tf = count_phrase(doc, span);
            total += smoothed(
                tf,
                doc.len(),
                self.phrase_cf[i],
                self.stats,
                alpha,
                p.lambda_o,
                p.floor_mass,
            )?
            .value;
            let tf = count_unordered_windows(doc, span, p.window);
            total += smoothed(
                tf,
                doc.len(),
                self.window_cf[i],
                self.stats,
                alpha,
                p.lambda_u,
                p.floor_mass,
            )?
            .value;
        }
        Ok(total)
    }
}

pub fn classic_sdm_score(
    query: &[String],
    doc: &[String],
    stats: &CorpusStats,
    params: &ClassicParams,
) -> Result<f64> {
    ClassicSdmScorer::new(query, stats, *params)?.score(doc)
}

/// Robertson BM25 with `idf = ln((N - df + 0.5) / (df + 0.5) + 1)`.
pub fn bm25_score(query: &[String], doc: &[String], stats: &CorpusStats, k1: f64, b: f64) -> f64 {
    let n = stats.doc_count() as f64;
    let avgdl = stats.avg_doc_length();
    let norm = if avgdl > 0.0 {
        1.0 - b + b * doc.len() as f64 / avgdl
    } else {
        1.0
    };
    query
        .iter()
        .map(|term| {
            let tf = doc.iter().filter(|t| *t == term).count() as f64;
            if tf == 0.0 {
                return 0.0;
            }
            let df = stats.df(term) as f64;
            let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
            idf * tf * (k1 + 1.0) / (tf + k1 * norm)
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassicModel {
    Bm25 { k1: f64, b: f64 },
    Sdm(ClassicParams),
}

impl ClassicModel {
    pub const BM25_DEFAULT: ClassicModel = ClassicModel::Bm25 { k1: 0.9, b: 0.4 };
}

/// Scores every non-empty document of the corpus for `query`.
pub fn score_corpus(
    query: &[String],
    stats: &CorpusStats,
    model: &ClassicModel,
) -> Result<Vec<(String, f64)>> {
    let sdm = match model {
        ClassicModel::Sdm(p) => Some(ClassicSdmScorer::new(query, stats, *p)?),
        ClassicModel::Bm25 { .. } => None,
    };
    stats
        .docs()
        .filter(|(_, d)| !d.is_empty())
        .map(|(id, d)| {
            let s = match (model, &sdm) {
                (ClassicModel::Bm25 { k1, b }, _) => bm25_score(query, d, stats, *k1, *b),
                (_, Some(scorer)) => scorer.score(d)?,
                _ => unreachable!(),
            };
            Ok((id.to_string(), s))
        })
        .collect()
}

#[derive(Deserialize)]
struct TextLine {
    #[serde(alias = "query_id")]
    doc_id: String,
    #[serde(default)]
    tokens: Option<Vec<String>>,
    #[serde(default)]
    text: Option<String>,
}

/// Reads JSONL lines `{"doc_id", "tokens": [...]}` or `{"doc_id", "text"}`
/// (`query_id` is accepted in place of `doc_id`); raw text goes through `tokenizer`.
pub fn read_token_lines(path: &Path, tokenizer: &dyn Tokenizer) -> Result<Vec<(String, Vec<String>)>> {
    let source = path.display().to_string();
    let reader = crate::ingest::open(path)?;
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: TextLine =
            serde_json::from_str(&line).map_err(|e| Error::parse(&source, i + 1, e.to_string()))?;
        let tokens = match (parsed.tokens, parsed.text) {
            (Some(t), _) => t,
            (None, Some(text)) => tokenizer.tokenize(&text),
            (None, None) => return Err(Error::parse(&source, i + 1, "line needs `tokens` or `text`")),
        };
        out.push((parsed.doc_id, tokens));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    /// Enumerates every span and checks minimality directly.
    fn brute_windows(doc: &[String], terms: &[String], window: usize) -> u64 {
        let contains = |i: usize, j: usize| -> bool {
            if i > j {
                return false;
            }
            let mut pool: Vec<&String> = doc[i..=j].iter().collect();
            for t in terms {
                match pool.iter().position(|p| *p == t) {
                    Some(k) => {
                        pool.swap_remove(k);
                    }
                    None => return false,
                }
            }
            true
        };
        let mut n = 0;
        for i in 0..doc.len() {
            for j in i..doc.len() {
                if j - i < window
                    && contains(i, j)
                    && !(j > i && contains(i + 1, j))
                    && !(j > i && contains(i, j - 1))
                {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn frequency_examples() {
        assert_eq!(count_phrase(&toks("a b c a b"), &toks("a b")), 2);
        assert_eq!(count_unordered_windows(&toks("a c b"), &toks("a b"), 3), 1);
        assert_eq!(count_unordered_windows(&toks("a c b"), &toks("a b"), 2), 0);
        assert_eq!(count_unordered_windows(&toks("b a b"), &toks("a b"), 8), 2);
        assert_eq!(count_unordered_windows(&toks("a x a"), &toks("a a"), 8), 1);
        assert_eq!(count_phrase(&toks("x y"), &toks("a b")), 0);
    }

    #[test]
    fn psi_t_examples() {
        // |C| = 1000 with cf(a) = 5.
        let mut corpus = vec![("d".to_string(), vec!["a".to_string(); 5])];
        corpus.push(("filler".to_string(), vec!["z".to_string(); 995]));
        let stats = CorpusStats::build(corpus).unwrap();
        assert_eq!(stats.total_tokens(), 1000);
        let mut doc = vec!["a".to_string(); 2];
        doc.extend(vec!["z".to_string(); 8]);
        let p = classic_psi_t("a", &doc, &stats, 0.5, 1.0).unwrap();
        assert!((p.value - 0.1025f64.ln()).abs() < 1e-12);
        assert!((p.value - (-2.2779)).abs() < 1e-4);
        let none = vec!["z".to_string(); 10];
        let p = classic_psi_t("a", &none, &stats, 0.5, 1.0).unwrap();
        assert!((p.value - 0.0025f64.ln()).abs() < 1e-12);
        assert_eq!(classic_psi_t("a", &doc, &stats, 0.5, 0.0).unwrap().value, 0.0);

        let p = classic_psi_t("unseen", &doc, &stats, 0.5, 1.0).unwrap();
        assert!(p.floored);
        assert!((p.value - (0.5 * 0.5 / 1000.0f64).ln()).abs() < 1e-12);

        assert!(classic_psi_t("a", &[], &stats, 0.5, 1.0).is_err());
        assert!(classic_psi_t("a", &doc, &stats, 1.0, 1.0).is_err());
    }

    #[test]
    fn phrase_and_window_potentials_fall_back_to_collection() {
        let stats = CorpusStats::build([
            ("d1".to_string(), toks("a b c a b")),
            ("d2".to_string(), toks("a c b x")),
        ])
        .unwrap();
        assert_eq!(stats.ngram_cf(&toks("a b")), 2);
        assert_eq!(stats.window_cf(&toks("a b"), 3), 4);
        let doc = toks("x x x x");
        let alpha = 0.5;
        let p = classic_psi_o(&toks("a b"), &doc, &stats, alpha, 1.0).unwrap();
        assert!((p.value - (alpha * 2.0 / 9.0f64).ln()).abs() < 1e-12);
        let p = classic_psi_u(&toks("a b"), 3, &doc, &stats, alpha, 1.0).unwrap();
        assert!((p.value - (alpha * 4.0 / 9.0f64).ln()).abs() < 1e-12);
    }

    fn small_corpus() -> CorpusStats {
        CorpusStats::build([
            (
                "d1".to_string(),
                toks("the quick brown fox jumps over the lazy dog"),
            ),
            ("d2".to_string(), toks("quick fox quick fox brown dog")),
            ("d3".to_string(), toks("a lazy brown dog sleeps")),
            ("d4".to_string(), toks("fox news on the brown bear")),
        ])
        .unwrap()
    }

    #[test]
    fn single_term_query_reduces_to_unigram_potential() {
        let stats = small_corpus();
        let q = toks("fox");
        let params = ClassicParams::default();
        for (_, d) in stats.docs() {
            let alpha = dirichlet_alpha(d.len(), params.mu);
            let expected = classic_psi_t("fox", d, &stats, alpha, params.lambda_t)
                .unwrap()
                .value;
            assert_eq!(classic_sdm_score(&q, d, &stats, &params).unwrap(), expected);
        }
    }

    /// Nested-loop evaluation of the full ranking function.
    fn oracle_sdm(q: &[String], d: &[String], stats: &CorpusStats, p: &ClassicParams) -> f64 {
        let dl = d.len() as f64;
        let c = stats.total_tokens() as f64;
        let a = p.mu / (dl + p.mu);
        let pot = |tf: f64, cf: f64, l: f64| {
            if l == 0.0 {
                0.0
            } else if tf == 0.0 && cf == 0.0 {
                l * (a * p.floor_mass / c).ln()
            } else {
                l * ((1.0 - a) * tf / dl + a * cf / c).ln()
            }
        };
        let mut s = 0.0;
        for t in q {
            let tf = d.iter().filter(|x| *x == t).count() as f64;
            let cf: usize = stats
                .docs()
                .map(|(_, x)| x.iter().filter(|y| *y == t).count())
                .sum();
            s += pot(tf, cf as f64, p.lambda_t);
        }
        for i in 0..q.len().saturating_sub(1) {
            let bg = &q[i..i + 2];
            let tf = (0..d.len().saturating_sub(1))
                .filter(|&j| d[j..j + 2] == *bg)
                .count() as f64;
            let cf: usize = stats
                .docs()
                .map(|(_, x)| {
                    (0..x.len().saturating_sub(1))
                        .filter(|&j| x[j..j + 2] == *bg)
                        .count()
                })
                .sum();
            s += pot(tf, cf as f64, p.lambda_o);
            let tfu = brute_windows(d, bg, p.window) as f64;
            let cfu: u64 = stats.docs().map(|(_, x)| brute_windows(x, bg, p.window)).sum();
            s += pot(tfu, cfu as f64, p.lambda_u);
        }
        s
    }

    #[test]
    fn sdm_agrees_with_nested_loop_oracle_on_random_corpora() {
        use rand::{Rng, SeedableRng};
        let vocab = ["a", "b", "c", "d", "e", "f"];
        for seed in 0..20u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let docs: Vec<(String, Vec<String>)> = (0..10)
                .map(|i| {
                    let len = rng.gen_range(1..30);
                    let t = (0..len)
                        .map(|_| vocab[rng.gen_range(0..vocab.len())].to_string())
                        .collect();
                    (format!("d{i}"), t)
                })
                .collect();
            let stats = CorpusStats::build(docs).unwrap();
            let q: Vec<String> = (0..rng.gen_range(1..5))
                .map(|_| vocab[rng.gen_range(0..vocab.len())].to_string())
                .collect();
            let p = ClassicParams {
                window: rng.gen_range(2..9),
                ..ClassicParams::default()
            };
            for (_, d) in stats.docs() {
                let a = classic_sdm_score(&q, d, &stats, &p).unwrap();
                let b = oracle_sdm(&q, d, &stats, &p);
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn unigram_sdm_ranks_like_dirichlet_query_likelihood() {
        let stats = small_corpus();
        let q = toks("brown fox dog");
        let p = ClassicParams {
            lambda_t: 1.0,
            lambda_o: 0.0,
            lambda_u: 0.0,
            ..ClassicParams::default()
        };
        let c = stats.total_tokens() as f64;
        let rank = |f: &dyn Fn(&[String]) -> f64| {
            let mut v: Vec<(String, f64)> = stats.docs().map(|(id, d)| (id.to_string(), f(d))).collect();
            v.sort_by(crate::ingest::rank_order);
            v.into_iter().map(|x| x.0).collect::<Vec<_>>()
        };
        let sdm = rank(&|d| classic_sdm_score(&q, d, &stats, &p).unwrap());
        let ql = rank(&|d| {
            q.iter()
                .map(|t| {
                    let tf = d.iter().filter(|x| *x == t).count() as f64;
                    ((tf + p.mu * stats.cf(t) as f64 / c) / (d.len() as f64 + p.mu)).ln()
                })
                .sum()
        });
        assert_eq!(sdm, ql);
    }

    #[test]
    fn bm25_examples() {
        let stats = small_corpus();
        assert_eq!(
            bm25_score(&toks("zebra"), &toks("the lazy dog"), &stats, 0.9, 0.4),
            0.0
        );

        let single = CorpusStats::build([("d".to_string(), toks("fox"))]).unwrap();
        let idf = ((1.0 - 1.0 + 0.5) / (1.0 + 0.5) + 1.0f64).ln();
        let s = bm25_score(&toks("fox"), &toks("fox"), &single, 0.9, 0.4);
        assert!((s - idf * 1.9 / 1.9).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn window_count_matches_enumeration(
            doc in proptest::collection::vec(0u8..4, 0..25),
            terms in proptest::collection::vec(0u8..4, 1..4),
            window in 1usize..10,
        ) {
            let doc: Vec<String> = doc.iter().map(|t| t.to_string()).collect();
            let terms: Vec<String> = terms.iter().map(|t| t.to_string()).collect();
            prop_assert_eq!(count_unordered_windows(&doc, &terms, window), brute_windows(&doc, &terms, window));
        }

        #[test]
        fn potentials_and_bm25_monotone_in_tf(extra in 0usize..6) {
            let stats = small_corpus();
            let base = toks("x y z fox w v u t s r q p");
            let mut more = base.clone();
            for slot in more.iter_mut().take(extra + 1).skip(1) {
                *slot = "fox".to_string();
            }
            let alpha = 0.3;
            let a = classic_psi_t("fox", &base, &stats, alpha, 1.0).unwrap().value;
            let b = classic_psi_t("fox", &more, &stats, alpha, 1.0).unwrap().value;
            prop_assert!(b >= a);
            let q = toks("fox");
            prop_assert!(bm25_score(&q, &more, &stats, 0.9, 0.4) >= bm25_score(&q, &base, &stats, 0.9, 0.4));
        }
    }
}
