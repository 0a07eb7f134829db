//! Sentence splitting and token-budgeted segment packing for raw documents.

/// Counts and produces tokens for budgeting segments and building token corpora.
pub trait Tokenizer: Send + Sync {
    fn tokenize(&self, text: &str) -> Vec<String>;

    fn count(&self, text: &str) -> usize {
        self.tokenize(text).len()
    }
}

/// Whitespace word tokenizer. `tokenize` lowercases and strips surrounding
/// punctuation; `count` is a plain whitespace word count.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn tokenize(&self, text: &str) -> Vec<String> {
        text.split_whitespace()
            .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
            .filter(|w| !w.is_empty())
            .collect()
    }

    fn count(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }
}

pub struct SegmenterConfig {
    pub max_tokens: usize,
    pub tokenizer: Box<dyn Tokenizer>,
}

impl SegmenterConfig {
    pub const DEFAULT_MAX_TOKENS: usize = 400;

    pub fn new(max_tokens: usize) -> crate::Result<Self> {
        if max_tokens == 0 {
            return Err(crate::Error::InvalidArgument("max_tokens must be >= 1".into()));
        }
        Ok(Self {
            max_tokens,
            tokenizer: Box::new(WhitespaceTokenizer),
        })
    }

    pub fn with_tokenizer(mut self, tokenizer: impl Tokenizer + 'static) -> Self {
        self.tokenizer = Box::new(tokenizer);
        self
    }
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        Self::new(Self::DEFAULT_MAX_TOKENS).expect("default budget is positive")
    }
}

impl std::fmt::Debug for SegmenterConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SegmenterConfig")
            .field("max_tokens", &self.max_tokens)
            .finish_non_exhaustive()
    }
}

/// Splits after `.`, `!` or `?` when followed by whitespace or end of text.
/// Whitespace inside each sentence is collapsed to single spaces.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for word in text.split_whitespace() {
        current.push(word);
        if word.ends_with(['.', '!', '?']) {
            sentences.push(current.join(" "));
            current.clear();
        }
    }
    if !current.is_empty() {
        sentences.push(current.join(" "));
    }
    sentences
}

/// Greedy in-order packing of whole sentences into segments of at most
/// `cfg.max_tokens` tokens. A sentence longer than the budget becomes a
/// segment on its own.
pub fn group_segments<S: AsRef<str>>(sentences: &[S], cfg: &SegmenterConfig) -> Vec<String> {
    let mut segments = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    let mut used = 0usize;
    for sentence in sentences {
        let sentence = sentence.as_ref();
        let n = cfg.tokenizer.count(sentence);
        if !current.is_empty() && used + n > cfg.max_tokens {
            segments.push(current.join(" "));
            current.clear();
            used = 0;
        }
        current.push(sentence);
        used += n;
    }
    if !current.is_empty() {
        segments.push(current.join(" "));
    }
    segments
}

pub fn segment_text(text: &str, cfg: &SegmenterConfig) -> Vec<String> {
    group_segments(&split_sentences(text), cfg)
}
