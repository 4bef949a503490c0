//! Parsing of `.ipynb` files (nbformat 4) into an immutable [`NotebookDocument`].
//!
//! Only what the deck pipeline needs survives parsing: cell kind, joined
//! source text and the rich outputs of code cells. Execution counts, kernel
//! metadata and cell metadata are dropped.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NotebookError {
    #[error("malformed notebook: {0}")]
    MalformedNotebook(String),
    #[error("unsupported notebook format version {0} (expected major version 4)")]
    UnsupportedVersion(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Markdown,
    Code,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    Image,
    Table,
    Text,
}

/// One rich output of a code cell. Image payloads stay base64 text exactly as
/// they appear in the notebook file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputArtifact {
    pub kind: ArtifactKind,
    pub mime: String,
    pub data: String,
    pub cell_index: usize,
}

impl OutputArtifact {
    pub fn is_visual(&self) -> bool {
        matches!(self.kind, ArtifactKind::Image | ArtifactKind::Table)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub index: usize,
    pub kind: CellKind,
    pub source: String,
    pub outputs: Vec<OutputArtifact>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NotebookDocument {
    pub cells: Vec<Cell>,
    pub source_path: String,
    pub format_version: String,
}

impl NotebookDocument {
    pub fn code_cells(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(|c| c.kind == CellKind::Code)
    }

    pub fn cell(&self, index: usize) -> Option<&Cell> {
        self.cells.get(index)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Parse notebook file text. `source_path` is recorded verbatim and is only
/// informational.
pub fn parse_notebook(raw: &str, source_path: &str) -> Result<NotebookDocument, NotebookError> {
    let root: Value = serde_json::from_str(raw)
        .map_err(|e| NotebookError::MalformedNotebook(format!("not valid JSON: {e}")))?;
    let obj = root
        .as_object()
        .ok_or_else(|| NotebookError::MalformedNotebook("top level is not an object".into()))?;

    let major = match obj.get("nbformat") {
        Some(v) => v
            .as_u64()
            .ok_or_else(|| NotebookError::MalformedNotebook("nbformat is not an integer".into()))?,
        None => return Err(NotebookError::MalformedNotebook("missing nbformat".into())),
    };
    let minor = obj
        .get("nbformat_minor")
        .and_then(Value::as_u64)
        .unwrap_or(0);
    if major != 4 {
        return Err(NotebookError::UnsupportedVersion(format!(
            "{major}.{minor}"
        )));
    }

    let raw_cells = obj
        .get("cells")
        .and_then(Value::as_array)
        .ok_or_else(|| NotebookError::MalformedNotebook("missing cells list".into()))?;

    let mut cells = Vec::with_capacity(raw_cells.len());
    for (index, raw_cell) in raw_cells.iter().enumerate() {
        cells.push(parse_cell(index, raw_cell)?);
    }

    Ok(NotebookDocument {
        cells,
        source_path: source_path.to_string(),
        format_version: format!("{major}.{minor}"),
    })
}

fn parse_cell(index: usize, raw: &Value) -> Result<Cell, NotebookError> {
    let obj = raw.as_object().ok_or_else(|| {
        NotebookError::MalformedNotebook(format!("cell {index} is not an object"))
    })?;
    let cell_type = obj
        .get("cell_type")
        .and_then(Value::as_str)
        .ok_or_else(|| {
            NotebookError::MalformedNotebook(format!("cell {index} has no cell_type"))
        })?;
    // raw cells are carried as markdown prose
    let kind = match cell_type {
        "code" => CellKind::Code,
        "markdown" | "raw" => CellKind::Markdown,
        other => {
            return Err(NotebookError::MalformedNotebook(format!(
                "cell {index} has unknown cell_type {other:?}"
            )))
        }
    };
    let source = match obj.get("source") {
        Some(v) => multiline_text(v).ok_or_else(|| {
            NotebookError::MalformedNotebook(format!("cell {index} source is not text"))
        })?,
        None => String::new(),
    };

    let outputs = if kind == CellKind::Code {
        match obj.get("outputs") {
            Some(Value::Array(items)) => items
                .iter()
                .filter_map(|o| classify_output(index, o))
                .collect(),
            Some(Value::Null) | None => Vec::new(),
            Some(_) => {
                return Err(NotebookError::MalformedNotebook(format!(
                    "cell {index} outputs is not a list"
                )))
            }
        }
    } else {
        Vec::new()
    };

    Ok(Cell {
        index,
        kind,
        source,
        outputs,
    })
}

/// nbformat stores multi-line strings either whole or as a list of lines.
/// List items normally carry their own trailing newline; a newline is inserted
/// between items only where one is missing.
fn multiline_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Array(parts) => {
            let mut out = String::new();
            for part in parts {
                let s = part.as_str()?;
                if !out.is_empty() && !out.ends_with('\n') {
                    out.push('\n');
                }
                out.push_str(s);
            }
            Some(out)
        }
        Value::Null => Some(String::new()),
        _ => None,
    }
}

// Most informative representation first.
const MIME_PRIORITY: &[&str] = &[
    "image/png",
    "image/jpeg",
    "image/gif",
    "image/svg+xml",
    "text/html",
    "text/markdown",
    "text/latex",
    "text/plain",
];

fn classify_output(cell_index: usize, output: &Value) -> Option<OutputArtifact> {
    let obj = output.as_object()?;
    match obj.get("output_type").and_then(Value::as_str) {
        Some("display_data") | Some("execute_result") => {}
        _ => return None,
    }
    let data = obj.get("data")?.as_object()?;
    if data.is_empty() {
        return None;
    }
    let mime = MIME_PRIORITY
        .iter()
        .find(|m| data.contains_key(**m))
        .map(|m| m.to_string())
        .or_else(|| data.keys().find(|k| k.starts_with("image/")).cloned())
        .unwrap_or_else(|| data.keys().next().cloned().unwrap_or_default());
    let payload = data.get(&mime).and_then(multiline_text).unwrap_or_default();
    Some(OutputArtifact {
        kind: classify_mime(&mime, &payload),
        mime,
        data: payload,
        cell_index,
    })
}

/// `image/*` is an image, HTML holding a `<table` element is a table, anything
/// else is text.
pub fn classify_mime(mime: &str, payload: &str) -> ArtifactKind {
    if mime.starts_with("image/") {
        ArtifactKind::Image
    } else if mime == "text/html" && payload.to_ascii_lowercase().contains("<table") {
        ArtifactKind::Table
    } else {
        ArtifactKind::Text
    }
}

/// Rich outputs of a code cell in notebook order; markdown cells have none.
pub fn extract_outputs(cell: &Cell) -> Vec<OutputArtifact> {
    match cell.kind {
        CellKind::Code => cell.outputs.clone(),
        CellKind::Markdown => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn nb(cells: Value) -> String {
        json!({"nbformat": 4, "nbformat_minor": 5, "metadata": {}, "cells": cells}).to_string()
    }

    #[test]
    fn preserves_cell_order() {
        let raw = nb(json!([
            {"cell_type": "markdown", "source": ["# Title\n", "intro"], "metadata": {}},
            {"cell_type": "code", "source": "x = 1", "outputs": [], "execution_count": 3, "metadata": {}},
            {"cell_type": "markdown", "source": "done", "metadata": {}},
        ]));
        let doc = parse_notebook(&raw, "a.ipynb").unwrap();
        assert_eq!(doc.len(), 3);
        let kinds: Vec<_> = doc.cells.iter().map(|c| c.kind).collect();
        assert_eq!(
            kinds,
            [CellKind::Markdown, CellKind::Code, CellKind::Markdown]
        );
        for (i, c) in doc.cells.iter().enumerate() {
            assert_eq!(c.index, i);
        }
        assert_eq!(doc.cells[0].source, "# Title\nintro");
        assert_eq!(doc.format_version, "4.5");
    }

    #[test]
    fn joins_lines_without_trailing_newlines() {
        let raw = nb(json!([{"cell_type": "code", "source": ["a = 1", "b = 2"], "outputs": []}]));
        let doc = parse_notebook(&raw, "").unwrap();
        assert_eq!(doc.cells[0].source, "a = 1\nb = 2");
    }

    #[test]
    fn missing_cells_is_malformed() {
        let raw = json!({"nbformat": 4, "nbformat_minor": 2, "metadata": {}}).to_string();
        assert!(matches!(
            parse_notebook(&raw, ""),
            Err(NotebookError::MalformedNotebook(_))
        ));
        assert!(matches!(
            parse_notebook("{not json", ""),
            Err(NotebookError::MalformedNotebook(_))
        ));
    }

    #[test]
    fn rejects_other_major_versions() {
        let raw = json!({"nbformat": 3, "nbformat_minor": 0, "worksheets": []}).to_string();
        assert_eq!(
            parse_notebook(&raw, ""),
            Err(NotebookError::UnsupportedVersion("3.0".into()))
        );
    }

    #[test]
    fn raw_cells_become_markdown() {
        let raw = nb(json!([{"cell_type": "raw", "source": "plain"}]));
        let doc = parse_notebook(&raw, "").unwrap();
        assert_eq!(doc.cells[0].kind, CellKind::Markdown);
        assert!(doc.cells[0].outputs.is_empty());
    }

    #[test]
    fn classifies_outputs() {
        let raw = nb(json!([
            {"cell_type": "code", "source": "plot()", "outputs": [
                {"output_type": "display_data", "data": {"image/png": "iVBORw0KGgo=\n", "text/plain": ["<Figure>"]}, "metadata": {}},
            ]},
            {"cell_type": "code", "source": "", "outputs": []},
            {"cell_type": "code", "source": "df.head()", "outputs": [
                {"output_type": "stream", "name": "stdout", "text": ["hello\n"]},
                {"output_type": "execute_result", "execution_count": 1, "metadata": {},
                 "data": {"text/html": ["<div>", "<TABLE border=1>", "</table></div>"], "text/plain": ["   a"]}},
                {"output_type": "execute_result", "execution_count": 2, "metadata": {},
                 "data": {"application/x-custom": "?"}},
            ]},
        ]));
        let doc = parse_notebook(&raw, "").unwrap();

        let plot = extract_outputs(&doc.cells[0]);
        assert_eq!(plot.len(), 1);
        assert_eq!(plot[0].kind, ArtifactKind::Image);
        assert_eq!(plot[0].mime, "image/png");
        assert_eq!(plot[0].data, "iVBORw0KGgo=\n");

        assert!(extract_outputs(&doc.cells[1]).is_empty());

        let table = extract_outputs(&doc.cells[2]);
        assert_eq!(table.len(), 2);
        assert_eq!(table[0].kind, ArtifactKind::Table);
        assert_eq!(table[0].cell_index, 2);
        assert_eq!(table[1].kind, ArtifactKind::Text);
    }

    #[test]
    fn markdown_never_has_outputs() {
        let raw = nb(json!([{"cell_type": "markdown", "source": "x",
            "outputs": [{"output_type": "display_data", "data": {"image/png": "AA=="}}]}]));
        let doc = parse_notebook(&raw, "").unwrap();
        assert!(doc.cells[0].outputs.is_empty());
        assert!(extract_outputs(&doc.cells[0]).is_empty());
    }
}
