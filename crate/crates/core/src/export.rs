//! Deck serialization.
//!
//! The canonical JSON form is the interchange format between the service, the
//! CLI and the UI: keys sorted, two-space indentation, every non-integer
//! number written with exactly six decimals. Equal decks therefore serialize
//! to identical bytes. Markdown and HTML exports are for presenting and drop
//! provenance.

use std::fmt::Write as _;

use serde_json::Value;
use thiserror::Error;

use crate::deck::{SlideDeck, SlideOrigin, DECK_SCHEMA_VERSION};
use crate::notebook::ArtifactKind;
use crate::template::TEMPLATE_VERSION;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExportError {
    #[error("malformed deck: {0}")]
    MalformedDeck(String),
    #[error("deck version {found} is not supported (expected {expected})")]
    VersionMismatch { found: String, expected: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeckFormat {
    CanonicalJson,
    Markdown,
    HtmlSlideshow,
}

impl DeckFormat {
    pub fn content_type(self) -> &'static str {
        match self {
            DeckFormat::CanonicalJson => "application/json",
            DeckFormat::Markdown => "text/markdown; charset=utf-8",
            DeckFormat::HtmlSlideshow => "text/html; charset=utf-8",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            DeckFormat::CanonicalJson => "json",
            DeckFormat::Markdown => "md",
            DeckFormat::HtmlSlideshow => "html",
        }
    }
}

impl std::str::FromStr for DeckFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(DeckFormat::CanonicalJson),
            "md" | "markdown" => Ok(DeckFormat::Markdown),
            "html" => Ok(DeckFormat::HtmlSlideshow),
            other => Err(format!(
                "unknown format {other:?} (expected json, md or html)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeckArchive {
    pub format: DeckFormat,
    pub payload: Vec<u8>,
}

pub fn export_deck(deck: &SlideDeck, format: DeckFormat) -> DeckArchive {
    let payload = match format {
        DeckFormat::CanonicalJson => to_canonical_json(deck).into_bytes(),
        DeckFormat::Markdown => to_markdown(deck).into_bytes(),
        DeckFormat::HtmlSlideshow => to_html(deck).into_bytes(),
    };
    DeckArchive { format, payload }
}

pub fn to_canonical_json(deck: &SlideDeck) -> String {
    let value = serde_json::to_value(deck).expect("decks serialize");
    canonical_json(&value)
}

/// Canonical text for any JSON value.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, value: &Value, indent: usize) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                write!(out, "{i}").unwrap();
            } else if let Some(u) = n.as_u64() {
                write!(out, "{u}").unwrap();
            } else {
                write!(out, "{:.6}", n.as_f64().unwrap_or(0.0)).unwrap();
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).unwrap()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, indent + 1);
                write_value(out, item, indent + 1);
                if i + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, key) in keys.iter().enumerate() {
                pad(out, indent + 1);
                out.push_str(&serde_json::to_string(key).unwrap());
                out.push_str(": ");
                write_value(out, &map[*key], indent + 1);
                if i + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

fn pad(out: &mut String, indent: usize) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}

/// Rebuild a deck from canonical JSON.
pub fn import_deck(payload: &[u8]) -> Result<SlideDeck, ExportError> {
    let value: Value =
        serde_json::from_slice(payload).map_err(|e| ExportError::MalformedDeck(e.to_string()))?;
    let meta = value
        .get("generator_metadata")
        .ok_or_else(|| ExportError::MalformedDeck("missing generator_metadata".into()))?;
    for (key, expected) in [
        ("schema_version", DECK_SCHEMA_VERSION),
        ("template_version", TEMPLATE_VERSION),
    ] {
        let found = meta.get(key).and_then(Value::as_str).ok_or_else(|| {
            ExportError::MalformedDeck(format!("missing generator_metadata.{key}"))
        })?;
        if found != expected {
            return Err(ExportError::VersionMismatch {
                found: found.into(),
                expected: expected.into(),
            });
        }
    }
    serde_json::from_value(value).map_err(|e| ExportError::MalformedDeck(e.to_string()))
}

/// One `---`-separated block per slide.
pub fn to_markdown(deck: &SlideDeck) -> String {
    let blocks: Vec<String> = deck
        .slides
        .iter()
        .map(|slide| {
            let mut block = format!("# {}\n", slide.title.trim());
            if !slide.bullets.is_empty() {
                block.push('\n');
                for b in &slide.bullets {
                    block.push_str(&format!("- {}\n", b.text));
                }
            }
            if slide.empty_auto {
                block.push_str("\n_No matching notebook content was located for this section._\n");
            }
            for a in &slide.attachments {
                match a.kind {
                    ArtifactKind::Image => block.push_str(&format!(
                        "\n![output of cell {}]({})\n",
                        a.cell_index,
                        data_uri(&a.mime, &a.data)
                    )),
                    _ => block.push_str(&format!("\n{}\n", a.data.trim())),
                }
            }
            block
        })
        .collect();
    blocks.join("\n---\n\n")
}

fn data_uri(mime: &str, data: &str) -> String {
    let compact: String = data.chars().filter(|c| !c.is_whitespace()).collect();
    if mime == "image/svg+xml" {
        // svg payloads are text
        format!("data:{mime};utf8,{}", percent_encode(data))
    } else {
        format!("data:{mime};base64,{compact}")
    }
}

fn percent_encode(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        match b {
            b'A'..=b'Z'
            | b'a'..=b'z'
            | b'0'..=b'9'
            | b'-'
            | b'_'
            | b'.'
            | b'~'
            | b' '
            | b'='
            | b':'
            | b'/' => out.push(b as char),
            _ => write!(out, "%{b:02X}").unwrap(),
        }
    }
    out
}

pub fn html_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// Render the inline bullet grammar (`**bold**`, `*italic*`/`_italic_`,
/// `` `code` ``) to escaped HTML.
pub fn render_inline(text: &str) -> String {
    let mut out = String::new();
    let mut rest = text;
    while !rest.is_empty() {
        let (marker, open, close) = if rest.starts_with("**") {
            ("**", "<strong>", "</strong>")
        } else if rest.starts_with('`') {
            ("`", "<code>", "</code>")
        } else if rest.starts_with('*') {
            ("*", "<em>", "</em>")
        } else if rest.starts_with('_') && out_is_boundary(&out) {
            ("_", "<em>", "</em>")
        } else {
            let c = rest.chars().next().unwrap();
            out.push_str(&html_escape(&c.to_string()));
            rest = &rest[c.len_utf8()..];
            continue;
        };
        let after = &rest[marker.len()..];
        match after.find(marker).filter(|&i| i > 0) {
            Some(end) => {
                let inner = &after[..end];
                out.push_str(open);
                if marker == "`" {
                    out.push_str(&html_escape(inner));
                } else {
                    out.push_str(&render_inline(inner));
                }
                out.push_str(close);
                rest = &after[end + marker.len()..];
            }
            None => {
                out.push_str(&html_escape(marker));
                rest = after;
            }
        }
    }
    out
}

fn out_is_boundary(out: &str) -> bool {
    out.chars().last().is_none_or(|c| !c.is_alphanumeric())
}

const HTML_STYLE: &str = r#"
body { margin: 0; font-family: "Helvetica Neue", Arial, sans-serif; background: #222; }
.slide { display: none; box-sizing: border-box; width: 100vw; height: 100vh; padding: 6vh 8vw; background: #fff; overflow: auto; }
.slide.active { display: block; }
.slide h1 { font-size: 2.4em; margin: 0 0 .2em; }
.slide .group { color: #777; text-transform: uppercase; letter-spacing: .08em; font-size: .9em; }
.slide li { font-size: 1.4em; margin: .35em 0; }
.slide .example { border-left: 4px solid #e0a800; padding-left: .8em; color: #6a5000; }
.slide .empty { color: #999; font-style: italic; }
.slide img { max-width: 45%; max-height: 45vh; margin: 1em 1em 0 0; }
.slide table { border-collapse: collapse; font-size: .9em; }
.slide td, .slide th { border: 1px solid #ccc; padding: 2px 6px; }
.title-page { display: none; }
.title-page.active { display: flex; flex-direction: column; justify-content: center; }
.counter { position: fixed; right: 1em; bottom: .6em; color: #999; font-size: .8em; }
"#;

const HTML_SCRIPT: &str = r#"
(function () {
  var slides = document.querySelectorAll('.slide');
  var counter = document.getElementById('counter');
  var current = 0;
  function show(i) {
    current = Math.max(0, Math.min(slides.length - 1, i));
    slides.forEach(function (s, j) { s.classList.toggle('active', j === current); });
    counter.textContent = (current + 1) + ' / ' + slides.length;
  }
  document.addEventListener('keydown', function (e) {
    if (e.key === 'ArrowRight' || e.key === 'PageDown' || e.key === ' ') show(current + 1);
    if (e.key === 'ArrowLeft' || e.key === 'PageUp') show(current - 1);
    if (e.key === 'Home') show(0);
    if (e.key === 'End') show(slides.length - 1);
  });
  document.addEventListener('click', function () { show(current + 1); });
  show(0);
})();
"#;

/// A single self-contained HTML file; images are inlined as data URIs and no
/// external resources are referenced.
pub fn to_html(deck: &SlideDeck) -> String {
    let mut body = String::new();
    for slide in &deck.slides {
        let mut classes = String::from("slide");
        if slide.origin == SlideOrigin::TitlePage {
            classes.push_str(" title-page");
        }
        writeln!(
            body,
            "<section class=\"{classes}\" id=\"{}\">",
            html_escape(&slide.id)
        )
        .unwrap();
        if !slide.group.is_empty() {
            writeln!(
                body,
                "<div class=\"group\">{}</div>",
                html_escape(&slide.group)
            )
            .unwrap();
        }
        writeln!(body, "<h1>{}</h1>", render_inline(&slide.title)).unwrap();
        if !slide.bullets.is_empty() {
            let class = if slide.example_prompt {
                " class=\"example\""
            } else {
                ""
            };
            writeln!(body, "<ul{class}>").unwrap();
            for b in &slide.bullets {
                writeln!(body, "<li>{}</li>", render_inline(&b.text)).unwrap();
            }
            body.push_str("</ul>\n");
        }
        if slide.empty_auto {
            body.push_str("<p class=\"empty\">No matching notebook content was located for this section.</p>\n");
        }
        for a in &slide.attachments {
            match a.kind {
                ArtifactKind::Image => writeln!(
                    body,
                    "<img alt=\"output of cell {}\" src=\"{}\">",
                    a.cell_index,
                    html_escape(&data_uri(&a.mime, &a.data))
                )
                .unwrap(),
                ArtifactKind::Table => writeln!(
                    body,
                    "<div class=\"table\">{}</div>",
                    strip_remote_refs(&a.data)
                )
                .unwrap(),
                ArtifactKind::Text => {
                    writeln!(body, "<pre>{}</pre>", html_escape(&a.data)).unwrap()
                }
            }
        }
        body.push_str("</section>\n");
    }
    format!(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>{}</title>\n<style>{HTML_STYLE}</style>\n</head>\n<body>\n{body}<div class=\"counter\" id=\"counter\"></div>\n<script>{HTML_SCRIPT}</script>\n</body>\n</html>\n",
        html_escape(&deck.config.title)
    )
}

/// Drop `<script>`/`<link>`/`<img>` elements and `src`/`href` pointing off the
/// page from notebook HTML so the export stays offline.
fn strip_remote_refs(html: &str) -> String {
    use std::sync::LazyLock;

    use regex::Regex;

    static ELEMENTS: LazyLock<Regex> = LazyLock::new(|| {
        Regex::new(r"(?is)<script\b.*?</script>|<(?:link|img|iframe)\b[^>]*>").unwrap()
    });
    static ATTRS: LazyLock<Regex> = LazyLock::new(|| {
        Regex::new(r#"(?i)\s(?:src|href)\s*=\s*("[^"]*"|'[^']*'|[^\s>]+)"#).unwrap()
    });
    let s = ELEMENTS.replace_all(html, "");
    ATTRS.replace_all(&s, "").into_owned()
}
