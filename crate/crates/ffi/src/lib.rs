//! C ABI over `lsrlong`.
//!
//! Handles are opaque pointers owned by the caller and released with the
//! matching `*_free` function. Every fallible call returns an [`LsrStatus`];
//! on failure [`lsr_last_error`] describes the most recent error on the
//! calling thread. Strings passed in must be NUL-terminated UTF-8.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use lsrlong::aggregate::AggregationStrategy;
use lsrlong::eval::Metric;
use lsrlong::index::{Index, ScoredDoc, Scorer};
use lsrlong::ingest::{read_encoded_queries, read_encoded_segments, read_qrels, read_run, write_run_file};
use lsrlong::{Error, MatchMode, QueryRep, SdmParams, SpanMode};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidData = 5,
    InvalidArgument = 6,
    MissingTokens = 7,
    Format = 8,
    OutOfRange = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsrScorerKind {
    RepMax = 0,
    ScoreMax = 1,
    Sum = 2,
    Mean = 3,
    ExactSdm = 4,
    SoftSdm = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsrSpanMode {
    Consecutive = 0,
    Full = 1,
    Both = 2,
}

/// Scorer selection. `kind` holds an [`LsrScorerKind`] value and `spans` an
/// [`LsrSpanMode`] value; SDM fields are ignored by the aggregation kinds.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LsrScorerConfig {
    pub kind: u32,
    pub lambda_t: f64,
    pub lambda_o: f64,
    pub lambda_u: f64,
    pub ngram_order: u32,
    pub window_size: u32,
    pub spans: u32,
}

impl LsrScorerKind {
    const ALL: [LsrScorerKind; 6] = [
        LsrScorerKind::RepMax,
        LsrScorerKind::ScoreMax,
        LsrScorerKind::Sum,
        LsrScorerKind::Mean,
        LsrScorerKind::ExactSdm,
        LsrScorerKind::SoftSdm,
    ];

    fn from_raw(v: u32) -> Result<Self, Failure> {
        Self::ALL
            .get(v as usize)
            .copied()
            .ok_or_else(|| Failure(LsrStatus::InvalidArgument, format!("unknown scorer kind {v}")))
    }
}

pub struct LsrIndex(Index);

pub struct LsrResults {
    docs: Vec<(CString, f64)>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("NUL bytes replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(LsrStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => LsrStatus::Io,
            Error::Parse { .. } => LsrStatus::Parse,
            Error::Validation(_) | Error::EmptyDocument(_) | Error::Unresolved(_) => LsrStatus::InvalidData,
            Error::MissingTokens { .. } => LsrStatus::MissingTokens,
            Error::InvalidArgument(_) => LsrStatus::InvalidArgument,
            Error::Format(_) => LsrStatus::Format,
        };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LsrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            LsrStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            LsrStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(LsrStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(LsrStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Failure> {
    str_arg(p, what).map(PathBuf::from)
}

unsafe fn index_arg<'a>(p: *const LsrIndex) -> Result<&'a Index, Failure> {
    p.as_ref().map(|i| &i.0).ok_or_else(|| null("index"))
}

impl LsrScorerConfig {
    fn to_scorer(self) -> Result<Scorer, Failure> {
        let agg = |a| Ok(Scorer::Aggregate(a));
        let mode = match LsrScorerKind::from_raw(self.kind)? {
            LsrScorerKind::RepMax => return agg(AggregationStrategy::RepMax),
            LsrScorerKind::ScoreMax => return agg(AggregationStrategy::ScoreMax),
            LsrScorerKind::Sum => return agg(AggregationStrategy::Sum),
            LsrScorerKind::Mean => return agg(AggregationStrategy::Mean),
            LsrScorerKind::ExactSdm => MatchMode::Exact,
            LsrScorerKind::SoftSdm => MatchMode::Soft,
        };
        let params = SdmParams {
            ngram_order: self.ngram_order as usize,
            window_size: self.window_size as usize,
            spans: match self.spans {
                x if x == LsrSpanMode::Consecutive as u32 => SpanMode::Consecutive,
                x if x == LsrSpanMode::Full as u32 => SpanMode::Full,
                x if x == LsrSpanMode::Both as u32 => SpanMode::Both,
                other => {
                    return Err(Failure(
                        LsrStatus::InvalidArgument,
                        format!("unknown span mode {other}"),
                    ))
                }
            },
            ..SdmParams::new(mode)
        }
        .with_lambdas(self.lambda_t, self.lambda_o, self.lambda_u);
        params.validate()?;
        Ok(Scorer::Sdm(params))
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next `lsr_*` call on the same thread.
#[no_mangle]
pub extern "C" fn lsr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn lsr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default configuration for `kind` (weights 0.85/0.10/0.05, bigrams,
/// window 8, consecutive spans).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lsr_scorer_config_default(kind: u32, out: *mut LsrScorerConfig) -> LsrStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        LsrScorerKind::from_raw(kind)?;
        let d = SdmParams::default();
        *out = LsrScorerConfig {
            kind,
            lambda_t: d.lambda_t,
            lambda_o: d.lambda_o,
            lambda_u: d.lambda_u,
            ngram_order: d.ngram_order as u32,
            window_size: d.window_size as u32,
            spans: LsrSpanMode::Consecutive as u32,
        };
        Ok(())
    })
}

/// Loads a saved index directory into `*out`.
///
/// # Safety
/// `dir` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lsr_index_open(dir: *const c_char, out: *mut *mut LsrIndex) -> LsrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let index = Index::load(path_arg(dir, "dir")?)?;
        *out = Box::into_raw(Box::new(LsrIndex(index)));
        Ok(())
    })
}

/// Builds an in-memory index from an encoded-segments JSONL file.
///
/// # Safety
/// `segments_path` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lsr_index_build(segments_path: *const c_char, out: *mut *mut LsrIndex) -> LsrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let index = Index::build(read_encoded_segments(path_arg(segments_path, "segments_path")?)?)?;
        *out = Box::into_raw(Box::new(LsrIndex(index)));
        Ok(())
    })
}

/// Writes the index to `dir`.
///
/// # Safety
/// `index` must come from this library; `dir` must be a valid C string.
#[no_mangle]
pub unsafe extern "C" fn lsr_index_save(index: *const LsrIndex, dir: *const c_char) -> LsrStatus {
    guard(|| {
        index_arg(index)?.save(path_arg(dir, "dir")?)?;
        Ok(())
    })
}

/// # Safety
/// `index` must be NULL or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lsr_index_free(index: *mut LsrIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}

/// Number of documents, 0 for NULL.
///
/// # Safety
/// `index` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn lsr_index_num_docs(index: *const LsrIndex) -> usize {
    index.as_ref().map_or(0, |i| i.0.num_docs())
}

/// Whether every segment carries tokens (needed for exact SDM).
///
/// # Safety
/// `index` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn lsr_index_has_tokens(index: *const LsrIndex) -> bool {
    index.as_ref().is_some_and(|i| i.0.has_tokens())
}

/// Top-`k` documents for one query given as parallel arrays of term ids and
/// weights, in query order.
///
/// # Safety
/// `term_ids` and `weights` must each hold `len` elements; `config` and
/// `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn lsr_search(
    index: *const LsrIndex,
    term_ids: *const u32,
    weights: *const f64,
    len: usize,
    k: usize,
    candidate_pool: usize,
    config: *const LsrScorerConfig,
    out: *mut *mut LsrResults,
) -> LsrStatus {
    guard(|| {
        let index = index_arg(index)?;
        let config = config.as_ref().ok_or_else(|| null("config"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if len > 0 && (term_ids.is_null() || weights.is_null()) {
            return Err(null("term_ids/weights"));
        }
        let (ids, ws) = if len == 0 {
            (&[][..], &[][..])
        } else {
            (
                std::slice::from_raw_parts(term_ids, len),
                std::slice::from_raw_parts(weights, len),
            )
        };
        let query = QueryRep::new("q", ids.iter().copied().zip(ws.iter().copied()))?;
        let hits = index.retrieve(&query, k, &config.to_scorer()?, candidate_pool)?;
        let docs = hits
            .into_iter()
            .map(|ScoredDoc { doc_id, score }| {
                CString::new(doc_id)
                    .map(|c| (c, score))
                    .map_err(|_| Failure(LsrStatus::InvalidData, "doc id contains NUL".into()))
            })
            .collect::<Result<_, _>>()?;
        *out = Box::into_raw(Box::new(LsrResults { docs }));
        Ok(())
    })
}

/// Runs every query of a JSONL file and writes a TREC run file.
///
/// # Safety
/// Path and tag arguments must be valid C strings; `config` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lsr_search_file(
    index: *const LsrIndex,
    queries_path: *const c_char,
    k: usize,
    candidate_pool: usize,
    config: *const LsrScorerConfig,
    run_path: *const c_char,
    tag: *const c_char,
) -> LsrStatus {
    guard(|| {
        let index = index_arg(index)?;
        let config = config.as_ref().ok_or_else(|| null("config"))?;
        let queries: Vec<QueryRep> =
            read_encoded_queries(path_arg(queries_path, "queries_path")?)?.collect::<Result<_, _>>()?;
        let run = index.search(&queries, k, &config.to_scorer()?, candidate_pool)?;
        write_run_file(path_arg(run_path, "run_path")?, &run, str_arg(tag, "tag")?)?;
        Ok(())
    })
}

/// # Safety
/// `results` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn lsr_results_len(results: *const LsrResults) -> usize {
    results.as_ref().map_or(0, |r| r.docs.len())
}

/// Document id at rank `i` (0-based), or NULL when out of range. Valid
/// until the results are freed.
///
/// # Safety
/// `results` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn lsr_results_doc_id(results: *const LsrResults, i: usize) -> *const c_char {
    results
        .as_ref()
        .and_then(|r| r.docs.get(i))
        .map_or(ptr::null(), |(id, _)| id.as_ptr())
}

/// Score at rank `i` (0-based).
///
/// # Safety
/// `results` must be NULL or come from this library; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lsr_results_score(results: *const LsrResults, i: usize, out: *mut f64) -> LsrStatus {
    guard(|| {
        let r = results.as_ref().ok_or_else(|| null("results"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let (_, score) = r
            .docs
            .get(i)
            .ok_or_else(|| Failure(LsrStatus::OutOfRange, format!("rank {i} of {}", r.docs.len())))?;
        *out = *score;
        Ok(())
    })
}

/// # Safety
/// `results` must be NULL or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lsr_results_free(results: *mut LsrResults) {
    if !results.is_null() {
        drop(Box::from_raw(results));
    }
}

/// Mean of `metric` (for example "ndcg@10") for a run file against qrels.
///
/// # Safety
/// String arguments must be valid C strings; `out_mean` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lsr_eval(
    run_path: *const c_char,
    qrels_path: *const c_char,
    metric: *const c_char,
    out_mean: *mut f64,
) -> LsrStatus {
    guard(|| {
        let out = out_mean.as_mut().ok_or_else(|| null("out_mean"))?;
        let metric: Metric = str_arg(metric, "metric")?.parse()?;
        let run = read_run(path_arg(run_path, "run_path")?)?;
        let qrels = read_qrels(path_arg(qrels_path, "qrels_path")?)?;
        *out = metric.evaluate(&run, &qrels).mean;
        Ok(())
    })
}
