//! Lexical scanning of code cells. No parsing: cell language is not
//! guaranteed, so everything here works on `#` comments, triple-quoted
//! docstrings and `name(` call patterns, which covers Python, R and Julia
//! notebooks reasonably well.

use std::collections::HashMap;
use std::sync::LazyLock;

use regex::Regex;

static CODE_LIKE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^(?:(?:import|from)\s+\w|[A-Za-z_][\w.]*(?:\[[^\]]*\])*\s*[+\-*/]?=[^=]|[A-Za-z_][\w.]*\(.*\)\s*;?$|print\s*\(|return\b|def\s+\w+\(|for\s+\w+\s+in\s)",
    )
    .unwrap()
});

/// True for comments that are most likely commented-out code.
pub fn looks_like_code(comment: &str) -> bool {
    CODE_LIKE.is_match(comment.trim())
}

/// Natural-language comments of a cell in source order: `#` line comments
/// (shebangs, magics and commented-out code skipped) and the lines of
/// triple-quoted docstrings.
pub fn extract_comments(source: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut in_doc: Option<&str> = None;
    for line in source.lines() {
        let trimmed = line.trim();
        if let Some(delim) = in_doc {
            let (body, closed) = match trimmed.find(delim) {
                Some(pos) => (&trimmed[..pos], true),
                None => (trimmed, false),
            };
            push_comment(&mut out, body);
            if closed {
                in_doc = None;
            }
            continue;
        }
        for delim in ["\"\"\"", "'''"] {
            let Some(rest) = trimmed
                .strip_prefix(delim)
                .or_else(|| trimmed.strip_prefix(&format!("r{delim}")))
            else {
                continue;
            };
            match rest.find(delim) {
                Some(pos) => push_comment(&mut out, &rest[..pos]),
                None => {
                    push_comment(&mut out, rest);
                    in_doc = Some(delim);
                }
            }
        }
        if trimmed.starts_with("\"\"\"") || trimmed.starts_with("'''") || in_doc.is_some() {
            continue;
        }
        if let Some(pos) = comment_start(line) {
            let text = &line[pos..];
            if text.starts_with("#!") {
                continue;
            }
            let body = text.trim_start_matches('#').trim();
            if !looks_like_code(body) {
                push_comment(&mut out, body);
            }
        }
    }
    out
}

fn push_comment(out: &mut Vec<String>, text: &str) {
    let t = text
        .trim()
        .trim_matches(|c: char| c == '#' || c == '-' || c == '=' || c == '*')
        .trim();
    if t.chars().any(char::is_alphabetic) {
        out.push(t.to_string());
    }
}

/// Byte offset of a `#` comment outside string literals.
fn comment_start(line: &str) -> Option<usize> {
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '\'' | '"' => quote = Some(c),
            '#' => return Some(i),
            _ => {}
        }
    }
    None
}

/// Source with comments removed and string literal contents blanked, so that
/// call scanning does not pick up names mentioned in strings.
pub fn code_only(source: &str) -> String {
    let mut out = String::with_capacity(source.len());
    let chars: Vec<char> = source.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '"' || c == '\'' {
            let triple = i + 2 < chars.len() && chars[i + 1] == c && chars[i + 2] == c;
            let width = if triple { 3 } else { 1 };
            out.push_str(&c.to_string().repeat(width));
            i += width;
            while i < chars.len() {
                if chars[i] == '\\' {
                    i += 2;
                    continue;
                }
                let closes = if triple {
                    i + 2 < chars.len() && chars[i] == c && chars[i + 1] == c && chars[i + 2] == c
                } else {
                    chars[i] == c || chars[i] == '\n'
                };
                if closes {
                    break;
                }
                if chars[i] == '\n' {
                    out.push('\n');
                }
                i += 1;
            }
            if i < chars.len() && chars[i] != '\n' {
                out.push_str(&c.to_string().repeat(width));
                i += width;
            }
            continue;
        }
        out.push(c);
        i += 1;
    }
    out
}

static CALL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?:\b(def|class)\s+)?((?:[A-Za-z_]\w*\.)*)([A-Za-z_]\w*)\s*\(").unwrap()
});
static ASSIGN: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?m)^[ \t]*([A-Za-z_]\w*(?:[ \t]*,[ \t]*[A-Za-z_]\w*)*)[ \t]*(?:\[[^\]\n]*\])?[ \t]*[+\-*/]?=(?:[^=]|$)")
        .unwrap()
});
static IMPORT_ALIAS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)\bimport\s+[\w.]+(?:\s+as\s+(\w+))?|\bas\s+(\w+)").unwrap());

const IGNORED_CALLS: &[&str] = &[
    "if",
    "elif",
    "while",
    "for",
    "in",
    "not",
    "and",
    "or",
    "return",
    "with",
    "lambda",
    "print",
    "len",
    "range",
    "str",
    "int",
    "float",
    "list",
    "dict",
    "set",
    "tuple",
    "type",
    "isinstance",
    "enumerate",
    "zip",
    "super",
    "format",
    "display",
    "round",
    "abs",
    "sorted",
    "min",
    "max",
    "sum",
    "map",
    "filter",
    "bool",
    "assert",
    "yield",
    "except",
    "del",
];

const MODULE_ALIASES: &[&str] = &[
    "pd", "np", "plt", "sns", "sklearn", "tf", "torch", "os", "sys", "math", "re", "px", "go",
    "stats", "scipy", "sm", "json", "time", "random", "warnings", "keras", "xgb", "lgb", "nn", "F",
    "self", "cv2", "pathlib", "datetime",
];

/// Lexical facts about a code cell used for scoring and summarization.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CodeFacts {
    /// Called function/method names, most frequent first, ties by first use.
    pub calls: Vec<String>,
    /// Most frequent receiver of method calls that is not a module alias.
    pub receiver: Option<String>,
    /// Assigned names in source order, deduplicated.
    pub assigned: Vec<String>,
}

pub fn analyze(source: &str) -> CodeFacts {
    let code = code_only(source);
    let mut aliases: Vec<String> = MODULE_ALIASES.iter().map(|s| s.to_string()).collect();
    for caps in IMPORT_ALIAS.captures_iter(&code) {
        if let Some(m) = caps.get(1).or_else(|| caps.get(2)) {
            aliases.push(m.as_str().to_string());
        }
    }

    let mut call_counts: HashMap<String, (usize, usize)> = HashMap::new();
    let mut recv_counts: HashMap<String, (usize, usize)> = HashMap::new();
    for (order, caps) in CALL.captures_iter(&code).enumerate() {
        if caps.get(1).is_some() {
            continue;
        }
        let name = caps[3].to_string();
        if IGNORED_CALLS.contains(&name.as_str()) {
            continue;
        }
        call_counts.entry(name).or_insert((0, order)).0 += 1;
        let prefix = caps.get(2).map(|m| m.as_str()).unwrap_or("");
        if let Some(recv) = prefix
            .trim_end_matches('.')
            .rsplit('.')
            .next()
            .filter(|r| !r.is_empty())
        {
            let root = prefix.split('.').next().unwrap_or("");
            if !aliases.iter().any(|a| a == recv || a == root) {
                recv_counts.entry(recv.to_string()).or_insert((0, order)).0 += 1;
            }
        }
    }

    let mut assigned = Vec::new();
    for caps in ASSIGN.captures_iter(&code) {
        for name in caps[1].split(',') {
            let name = name.trim().to_string();
            if !name.is_empty() && !assigned.contains(&name) && name != "_" {
                assigned.push(name);
            }
        }
    }

    CodeFacts {
        calls: by_frequency(call_counts),
        receiver: by_frequency(recv_counts).into_iter().next(),
        assigned,
    }
}

fn by_frequency(counts: HashMap<String, (usize, usize)>) -> Vec<String> {
    let mut v: Vec<_> = counts.into_iter().collect();
    v.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then(a.1 .1.cmp(&b.1 .1)));
    v.into_iter().map(|(name, _)| name).collect()
}
