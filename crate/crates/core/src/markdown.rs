//! Just enough markdown handling for outline building: heading detection
//! (ATX, with setext headings rewritten to ATX) and stripping of inline
//! syntax before sentence segmentation.

use std::sync::LazyLock;

use regex::Regex;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Block {
    Heading { level: u8, title: String },
    Prose(String),
}

static ATX: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^ {0,3}(#{1,6})(?:[ \t]+(.*?))?(?:[ \t]+#+)?[ \t]*$").unwrap());
static SETEXT_1: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^ {0,3}=+[ \t]*$").unwrap());
static SETEXT_2: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^ {0,3}-+[ \t]*$").unwrap());
static FENCE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^ {0,3}(```|~~~)").unwrap());
static LIST_ITEM: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^ {0,3}([-+*]|\d+[.)])[ \t]").unwrap());

/// Rewrite setext headings (`Title` over `===` or `---`) to ATX form. Fenced
/// code is left alone and `---` after a blank line stays a thematic break.
pub fn normalize_setext(source: &str) -> String {
    let lines: Vec<&str> = source.lines().collect();
    let mut out: Vec<String> = Vec::with_capacity(lines.len());
    let mut in_fence = false;
    for (i, line) in lines.iter().enumerate() {
        if FENCE.is_match(line) {
            in_fence = !in_fence;
            out.push(line.to_string());
            continue;
        }
        if !in_fence && i > 0 {
            let level = if SETEXT_1.is_match(line) {
                Some(1)
            } else if SETEXT_2.is_match(line) {
                Some(2)
            } else {
                None
            };
            let prev = lines[i - 1];
            let prev_is_paragraph = !prev.trim().is_empty()
                && !ATX.is_match(prev)
                && !LIST_ITEM.is_match(prev)
                && !FENCE.is_match(prev)
                && out.last().map(|l| l.as_str()) == Some(prev);
            if let (Some(level), true) = (level, prev_is_paragraph) {
                let title = prev.trim().to_string();
                out.pop();
                out.push(format!("{} {}", "#".repeat(level), title));
                continue;
            }
        }
        out.push(line.to_string());
    }
    out.join("\n")
}

/// Split a markdown cell into headings and the prose between them. Blank
/// prose runs are dropped, so a cell without content yields no blocks.
pub fn split_blocks(source: &str) -> Vec<Block> {
    let normalized = normalize_setext(source);
    let mut blocks = Vec::new();
    let mut prose: Vec<&str> = Vec::new();
    let mut in_fence = false;

    let flush = |prose: &mut Vec<&str>, blocks: &mut Vec<Block>| {
        let text = prose.join("\n");
        if !text.trim().is_empty() {
            blocks.push(Block::Prose(text.trim().to_string()));
        }
        prose.clear();
    };

    for line in normalized.lines() {
        if FENCE.is_match(line) {
            in_fence = !in_fence;
            prose.push(line);
            continue;
        }
        if !in_fence {
            if let Some(caps) = ATX.captures(line) {
                flush(&mut prose, &mut blocks);
                let level = caps[1].len() as u8;
                let title = caps.get(2).map(|m| m.as_str().trim()).unwrap_or("");
                blocks.push(Block::Heading {
                    level,
                    title: strip_inline(title),
                });
                continue;
            }
        }
        prose.push(line);
    }
    flush(&mut prose, &mut blocks);
    blocks
}

static IMAGE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"!\[([^\]]*)\]\([^)]*\)").unwrap());
static LINK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\[([^\]]*)\]\([^)]*\)").unwrap());
static TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[^>\n]+>").unwrap());
static LINE_MARKERS: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?m)^[ \t]*(?:#{1,6}[ \t]+|>[ \t]?|[-+*][ \t]+|\d+[.)][ \t]+)").unwrap()
});

/// Remove markdown syntax characters while keeping the words.
pub fn strip_inline(text: &str) -> String {
    let s = IMAGE.replace_all(text, "$1");
    let s = LINK.replace_all(&s, "$1");
    let s = TAG.replace_all(&s, " ");
    let s = LINE_MARKERS.replace_all(&s, "");
    let s = s
        .replace("&nbsp;", " ")
        .replace("&amp;", "&")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("__", "")
        .replace("~~", "");
    s.chars()
        .filter(|c| !matches!(c, '*' | '`' | '#'))
        .collect::<String>()
        .trim()
        .to_string()
}
