//! Bullet text for an assigned code cell.
//!
//! The built-in summarizer is rule based. It prefers the cell's own first
//! comment or docstring line, then the nearest markdown context sentence, and
//! finally a clause synthesized from the called names ("Calls fit, predict on
//! model"). Bullets shorter than the requested minimum are extended with the
//! next evidence fragments in the same priority order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::{analyze, code_only};
use crate::remote;
use crate::tree::MarkdownContext;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SummarizeError {
    #[error("cell has no code, comments or markdown context to summarize")]
    EmptyEvidence,
    #[error("remote summarizer unavailable: {0}")]
    RemoteUnavailable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRequest {
    pub source: String,
    pub comments: Vec<String>,
    pub context: MarkdownContext,
    pub min_tokens: usize,
}

impl SummaryRequest {
    fn has_evidence(&self) -> bool {
        !self.source.trim().is_empty() || !self.comments.is_empty() || !self.context.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub text: String,
    /// Evidence ran out before reaching `min_tokens`.
    pub short: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummarizeBackend {
    BuiltinHeuristic,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummarizerHandle {
    pub backend: SummarizeBackend,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
}

impl SummarizerHandle {
    pub fn builtin() -> Self {
        SummarizerHandle {
            backend: SummarizeBackend::BuiltinHeuristic,
            endpoint: None,
        }
    }

    pub fn remote(endpoint: impl Into<String>) -> Self {
        SummarizerHandle {
            backend: SummarizeBackend::Remote,
            endpoint: Some(endpoint.into()),
        }
    }
}

/// Whitespace-separated words that contain at least one letter or digit.
pub fn token_count(text: &str) -> usize {
    text.split_whitespace()
        .filter(|w| w.chars().any(char::is_alphanumeric))
        .count()
}

fn tidy(fragment: &str) -> String {
    let collapsed = fragment.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed
        .trim_start_matches(|c: char| {
            matches!(c, '#' | '>' | '-' | '*' | '+' | '|') || c.is_whitespace()
        })
        .trim_end_matches(|c: char| matches!(c, '.' | ':' | ';' | ',') || c.is_whitespace())
        .to_string()
}

fn sentence_case(text: &str) -> String {
    let mut chars = text.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Lowercase the first letter unless the word looks like an acronym.
fn continuation(text: &str) -> String {
    let mut chars = text.chars();
    match (chars.next(), chars.next()) {
        (Some(_), Some(b)) if b.is_uppercase() => text.to_string(),
        (Some(a), _) => a.to_lowercase().chain(text.chars().skip(1)).collect(),
        _ => String::new(),
    }
}

/// "Calls f, g on x" from the most frequent called names; falls back to the
/// assigned names or the first line of code.
pub fn calls_clause(source: &str) -> Option<String> {
    let facts = analyze(source);
    if !facts.calls.is_empty() {
        let names = facts
            .calls
            .iter()
            .take(3)
            .cloned()
            .collect::<Vec<_>>()
            .join(", ");
        let target = facts.receiver.or_else(|| facts.assigned.first().cloned());
        return Some(match target {
            Some(t) => format!("Calls {names} on {t}"),
            None => format!("Calls {names}"),
        });
    }
    if !facts.assigned.is_empty() {
        return Some(format!(
            "Assigns {}",
            facts
                .assigned
                .iter()
                .take(3)
                .cloned()
                .collect::<Vec<_>>()
                .join(", ")
        ));
    }
    let code = code_only(source);
    let line = code
        .lines()
        .map(str::trim)
        .find(|l| l.chars().any(char::is_alphanumeric))?;
    let line: String = line.chars().take(60).collect();
    Some(format!("Shows {line}"))
}

/// Evidence fragments in priority order: comments, context sentences, then
/// the calls clause. Empty and duplicate fragments are dropped.
fn evidence(req: &SummaryRequest) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let candidates = req
        .comments
        .iter()
        .cloned()
        .chain(req.context.sentences().map(|(s, _)| s.to_string()))
        .chain(calls_clause(&req.source));
    for c in candidates {
        let t = tidy(&c);
        if !t.is_empty() && !out.iter().any(|o| o.eq_ignore_ascii_case(&t)) {
            out.push(t);
        }
    }
    out
}

/// Extend `text` with further evidence until it has `min_tokens` tokens.
pub fn enforce_min_length(text: &str, min_tokens: usize, req: &SummaryRequest) -> Summary {
    let mut out = tidy(text);
    if token_count(&out) >= min_tokens {
        return Summary {
            text: out,
            short: false,
        };
    }
    for fragment in evidence(req) {
        if out.to_lowercase().contains(&fragment.to_lowercase()) {
            continue;
        }
        out = format!("{out}, {}", continuation(&fragment));
        if token_count(&out) >= min_tokens {
            return Summary {
                text: out,
                short: false,
            };
        }
    }
    Summary {
        text: out,
        short: true,
    }
}

fn builtin_summary(req: &SummaryRequest) -> Result<Summary, SummarizeError> {
    if !req.has_evidence() {
        return Err(SummarizeError::EmptyEvidence);
    }
    let base = evidence(req)
        .into_iter()
        .next()
        .ok_or(SummarizeError::EmptyEvidence)?;
    let mut summary = enforce_min_length(&base, req.min_tokens, req);
    summary.text = sentence_case(&summary.text);
    Ok(summary)
}

#[derive(Serialize)]
struct Snippet<'a> {
    code: &'a str,
    doc: String,
    min_tokens: usize,
}

#[derive(Serialize)]
struct SummarizeRequestBody<'a> {
    snippets: Vec<Snippet<'a>>,
}

#[derive(Deserialize)]
struct SummarizeResponseBody {
    summaries: Vec<String>,
}

fn remote_summaries(
    endpoint: &str,
    reqs: &[SummaryRequest],
) -> Result<Vec<Summary>, SummarizeError> {
    if reqs.is_empty() {
        return Ok(Vec::new());
    }
    let body = SummarizeRequestBody {
        snippets: reqs
            .iter()
            .map(|r| Snippet {
                code: &r.source,
                doc: r
                    .comments
                    .iter()
                    .map(String::as_str)
                    .chain(r.context.sentences().map(|(s, _)| s))
                    .collect::<Vec<_>>()
                    .join("\n"),
                min_tokens: r.min_tokens,
            })
            .collect(),
    };
    let resp: SummarizeResponseBody =
        remote::post_json(endpoint, &body).map_err(SummarizeError::RemoteUnavailable)?;
    if resp.summaries.len() != reqs.len() {
        return Err(SummarizeError::RemoteUnavailable(format!(
            "sent {} snippets, got {} summaries",
            reqs.len(),
            resp.summaries.len()
        )));
    }
    resp.summaries
        .iter()
        .zip(reqs)
        .map(|(text, req)| {
            if tidy(text).is_empty() {
                return Err(SummarizeError::RemoteUnavailable(
                    "empty summary returned".into(),
                ));
            }
            let mut s = enforce_min_length(text, req.min_tokens, req);
            s.text = sentence_case(&s.text);
            Ok(s)
        })
        .collect()
}

pub fn summarize_cell(
    handle: &SummarizerHandle,
    req: &SummaryRequest,
) -> Result<Summary, SummarizeError> {
    summarize_batch(handle, std::slice::from_ref(req)).map(|mut v| v.remove(0))
}

/// Summaries in request order. The remote backend receives one request for
/// the whole batch.
pub fn summarize_batch(
    handle: &SummarizerHandle,
    reqs: &[SummaryRequest],
) -> Result<Vec<Summary>, SummarizeError> {
    match handle.backend {
        SummarizeBackend::BuiltinHeuristic => reqs.iter().map(builtin_summary).collect(),
        SummarizeBackend::Remote => {
            if reqs.iter().any(|r| !r.has_evidence()) {
                return Err(SummarizeError::EmptyEvidence);
            }
            let endpoint = handle.endpoint.as_deref().ok_or_else(|| {
                SummarizeError::RemoteUnavailable("no endpoint configured".into())
            })?;
            remote_summaries(endpoint, reqs)
        }
    }
}
