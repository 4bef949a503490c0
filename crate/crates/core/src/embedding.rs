//! Sentence segmentation and text embeddings.
//!
//! The built-in embedder is lexical: tokens are lowercased, identifiers are
//! split on camel case and underscores, each token is weighted by TF·IDF and
//! feature-hashed into a fixed number of signed buckets. The IDF table is built
//! once per generation run from every sentence that will be compared.
//!
//! A remote backend can stand in for a neural sentence encoder; see
//! `docs/wire-protocols.md` for the exact request/response shape.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::markdown::strip_inline;
use crate::remote;

pub const DEFAULT_DIMENSION: usize = 256;
pub const HASH_FUNCTION: &str = "fnv1a64";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbedError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("remote embedder unavailable: {0}")]
    RemoteUnavailable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SentenceOrigin {
    Query,
    Markdown,
    Comment,
    Identifier,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub origin: SentenceOrigin,
}

const ABBREVIATIONS: &[&str] = &[
    "e.g.", "i.e.", "fig.", "figs.", "vs.", "etc.", "cf.", "al.", "eq.", "no.", "approx.", "dr.",
    "mr.", "mrs.", "ms.", "st.", "resp.",
];

/// Split prose into sentences on `.`, `!`, `?` (when followed by whitespace or
/// the end of the line) and on newlines. Common abbreviations do not end a
/// sentence. Markdown syntax is stripped first.
pub fn segment_sentences(text: &str) -> Vec<Sentence> {
    segment_with_origin(text, SentenceOrigin::Markdown)
}

pub fn segment_with_origin(text: &str, origin: SentenceOrigin) -> Vec<Sentence> {
    let cleaned = strip_inline(text);
    let mut out = Vec::new();
    for line in cleaned.lines() {
        let chars: Vec<char> = line.chars().collect();
        let mut start = 0;
        for i in 0..chars.len() {
            if !matches!(chars[i], '.' | '!' | '?') {
                continue;
            }
            let at_break = chars.get(i + 1).is_none_or(|c| c.is_whitespace());
            if !at_break || (chars[i] == '.' && ends_with_abbreviation(&chars[start..=i])) {
                continue;
            }
            push_sentence(&mut out, &chars[start..=i], origin);
            start = i + 1;
        }
        push_sentence(&mut out, &chars[start..], origin);
    }
    out
}

fn ends_with_abbreviation(chars: &[char]) -> bool {
    let word: String = chars
        .iter()
        .rev()
        .take_while(|c| !c.is_whitespace())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    let word = word
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase();
    ABBREVIATIONS.contains(&word.as_str())
}

fn push_sentence(out: &mut Vec<Sentence>, chars: &[char], origin: SentenceOrigin) {
    let s: String = chars.iter().collect();
    let s = s.trim();
    if s.chars().any(char::is_alphanumeric) {
        out.push(Sentence {
            text: s.to_string(),
            origin,
        });
    }
}

const STOPWORDS: &[&str] = &[
    "a", "an", "the", "and", "or", "of", "to", "in", "on", "for", "with", "by", "from", "at", "as",
    "is", "are", "was", "were", "be", "been", "being", "this", "that", "these", "those", "it",
    "its", "we", "our", "you", "your", "i", "my", "they", "their", "them", "he", "she", "will",
    "can", "do", "does", "did", "has", "have", "had", "not", "but", "if", "then", "so", "into",
    "than", "also", "here", "there", "what", "which", "who", "how", "all", "each", "let", "lets",
    "us", "some", "any", "now", "just", "very", "more", "most", "such",
];

/// Lowercased alphanumeric tokens with identifiers split on underscores and
/// camel case (`trainModel`, `train_model` and `TrainModel` all give
/// `train`, `model`). Stopwords are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for run in text.split(|c: char| !c.is_alphanumeric()) {
        if run.is_empty() {
            continue;
        }
        for piece in split_camel(run) {
            let lower = piece.to_lowercase();
            if !STOPWORDS.contains(&lower.as_str()) {
                tokens.push(lower);
            }
        }
    }
    tokens
}

fn split_camel(run: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = run.char_indices().collect();
    let mut parts = Vec::new();
    let mut start = 0;
    for w in 1..chars.len() {
        let (idx, c) = chars[w];
        let prev = chars[w - 1].1;
        let next = chars.get(w + 1).map(|&(_, c)| c);
        let boundary = (prev.is_lowercase() && c.is_uppercase())
            || (prev.is_uppercase() && c.is_uppercase() && next.is_some_and(char::is_lowercase));
        if boundary {
            parts.push(&run[start..idx]);
            start = idx;
        }
    }
    parts.push(&run[start..]);
    parts
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Document frequencies over the sentences of one generation run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IdfTable {
    docs: usize,
    df: HashMap<String, usize>,
}

impl IdfTable {
    pub fn build<'a>(sentences: impl IntoIterator<Item = &'a str>) -> Self {
        let mut table = IdfTable::default();
        for s in sentences {
            table.docs += 1;
            let unique: HashSet<String> = tokenize(s).into_iter().collect();
            for t in unique {
                *table.df.entry(t).or_default() += 1;
            }
        }
        table
    }

    /// Smoothed: `ln((1 + N) / (1 + df)) + 1`.
    pub fn weight(&self, token: &str) -> f64 {
        let df = self.df.get(token).copied().unwrap_or(0) as f64;
        ((1.0 + self.docs as f64) / (1.0 + df)).ln() + 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector(pub Vec<f64>);

impl EmbeddingVector {
    pub fn zeros(dimension: usize) -> Self {
        EmbeddingVector(vec![0.0; dimension])
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|x| *x == 0.0)
    }

    /// Scale to unit length; the zero vector is left as is.
    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            for x in &mut self.0 {
                *x /= n;
            }
        }
        self
    }
}

/// Cosine similarity in [-1, 1]; 0 when either side is the zero vector.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbedError> {
    if a.dimension() != b.dimension() {
        return Err(EmbedError::DimensionMismatch {
            left: a.dimension(),
            right: b.dimension(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedBackend {
    BuiltinLexical,
    Remote,
}

/// Serializable description of which embedder to use.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedderHandle {
    pub backend: EmbedBackend,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    pub dimension: usize,
}

impl EmbedderHandle {
    pub fn builtin() -> Self {
        EmbedderHandle {
            backend: EmbedBackend::BuiltinLexical,
            endpoint: None,
            dimension: DEFAULT_DIMENSION,
        }
    }

    /// Change the vector dimension if this is the builtin backend.
    pub fn set_builtin_dimension(&mut self, dimension: usize) {
        if self.backend == EmbedBackend::BuiltinLexical {
            self.dimension = dimension.max(1);
        }
    }

    /// Dimension 0 means "whatever the server declares".
    pub fn remote(endpoint: impl Into<String>) -> Self {
        EmbedderHandle {
            backend: EmbedBackend::Remote,
            endpoint: Some(endpoint.into()),
            dimension: 0,
        }
    }

    /// Instantiate the embedder. For the built-in backend the IDF table is
    /// computed from `corpus`; the remote backend ignores it.
    pub fn instantiate<'a>(
        &self,
        corpus: impl IntoIterator<Item = &'a str>,
    ) -> Result<Embedder, EmbedError> {
        match self.backend {
            EmbedBackend::BuiltinLexical => Ok(Embedder::Lexical(LexicalEmbedder {
                dimension: if self.dimension == 0 {
                    DEFAULT_DIMENSION
                } else {
                    self.dimension
                },
                idf: Arc::new(IdfTable::build(corpus)),
            })),
            EmbedBackend::Remote => {
                let endpoint = self.endpoint.clone().ok_or_else(|| {
                    EmbedError::RemoteUnavailable("no endpoint configured".into())
                })?;
                Ok(Embedder::Remote(RemoteEmbedder {
                    endpoint,
                    dimension: self.dimension,
                }))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct LexicalEmbedder {
    dimension: usize,
    idf: Arc<IdfTable>,
}

impl LexicalEmbedder {
    pub fn new(dimension: usize, idf: IdfTable) -> Self {
        LexicalEmbedder {
            dimension,
            idf: Arc::new(idf),
        }
    }

    pub fn embed_text(&self, text: &str) -> EmbeddingVector {
        let mut tf: HashMap<String, f64> = HashMap::new();
        for t in tokenize(text) {
            *tf.entry(t).or_default() += 1.0;
        }
        let mut v = vec![0.0; self.dimension];
        // fixed iteration order keeps float sums bit-identical across runs
        let mut terms: Vec<_> = tf.into_iter().collect();
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        for (token, count) in terms {
            let h = fnv1a64(token.as_bytes());
            let bucket = (h % self.dimension as u64) as usize;
            let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
            v[bucket] += sign * count * self.idf.weight(&token);
        }
        EmbeddingVector(v).normalized()
    }
}

#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    endpoint: String,
    dimension: usize,
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    dimension: usize,
    vectors: Vec<Vec<f64>>,
}

const REMOTE_BATCH: usize = 128;

impl RemoteEmbedder {
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let mut out = Vec::with_capacity(texts.len());
        let mut declared = self.dimension;
        for chunk in texts.chunks(REMOTE_BATCH) {
            let resp: EmbedResponse =
                remote::post_json(&self.endpoint, &EmbedRequest { texts: chunk })
                    .map_err(EmbedError::RemoteUnavailable)?;
            if declared != 0 && resp.dimension != declared {
                return Err(EmbedError::RemoteUnavailable(format!(
                    "server declared dimension {}, expected {declared}",
                    resp.dimension
                )));
            }
            declared = resp.dimension;
            if resp.vectors.len() != chunk.len() {
                return Err(EmbedError::RemoteUnavailable(format!(
                    "sent {} texts, got {} vectors",
                    chunk.len(),
                    resp.vectors.len()
                )));
            }
            for v in resp.vectors {
                if v.len() != declared {
                    return Err(EmbedError::RemoteUnavailable(format!(
                        "vector of length {} does not match declared dimension {declared}",
                        v.len()
                    )));
                }
                out.push(EmbeddingVector(v).normalized());
            }
        }
        Ok(out)
    }
}

/// A ready-to-use embedder.
#[derive(Debug, Clone)]
pub enum Embedder {
    Lexical(LexicalEmbedder),
    Remote(RemoteEmbedder),
}

impl Embedder {
    pub fn embed(&self, sentence: &Sentence) -> Result<EmbeddingVector, EmbedError> {
        match self {
            Embedder::Lexical(e) => Ok(e.embed_text(&sentence.text)),
            Embedder::Remote(e) => e
                .embed_batch(std::slice::from_ref(&sentence.text))
                .map(|mut v| v.remove(0)),
        }
    }

    /// Vectors in input order.
    pub fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        match self {
            Embedder::Lexical(e) => Ok(texts.iter().map(|t| e.embed_text(t)).collect()),
            Embedder::Remote(e) => e.embed_batch(texts),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Embedder::Lexical(e) => e.dimension,
            Embedder::Remote(e) => e.dimension,
        }
    }
}

pub fn embed(embedder: &Embedder, sentence: &Sentence) -> Result<EmbeddingVector, EmbedError> {
    embedder.embed(sentence)
}
