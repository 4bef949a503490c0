//! Browser bindings: generate a deck from a pasted notebook, trace a slide
//! back to its cells, and edit and export the deck, all client side.
//!
//! Every function takes and returns JSON text. The `*_json` functions are the
//! plain Rust versions and are what the native tests exercise.

use nbdeck_core::export::{canonical_json, to_canonical_json};
use nbdeck_core::notebook::{ArtifactKind, CellKind};
use nbdeck_core::template::SectionMode;
use nbdeck_core::{
    export_deck, generate_deck, import_deck, parse_notebook, template_for, Audience, DeckConfig,
    DeckFormat, DetailLevel, SlidePatch,
};
use serde::{Deserialize, Serialize};
use serde_json::json;
use wasm_bindgen::prelude::*;

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct Options {
    pub title: String,
    pub presenter: String,
    pub audience: Audience,
    pub detail: DetailLevel,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            title: "Untitled".into(),
            presenter: String::new(),
            audience: Audience::Technical,
            detail: DetailLevel::Standard,
        }
    }
}

#[derive(Debug, Serialize)]
struct CellView<'a> {
    index: usize,
    kind: CellKind,
    source: &'a str,
    outputs: Vec<ArtifactKind>,
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Section titles and groups of the built-in outline.
pub fn outline_json(audience: &str) -> Result<String, String> {
    let audience: Audience = audience.parse()?;
    let t = template_for(audience);
    let rows: Vec<_> = t
        .sections
        .iter()
        .map(|s| json!({"id": s.id, "title": s.title, "group": s.parent_section, "auto": s.mode == SectionMode::Auto}))
        .collect();
    Ok(canonical_json(&json!(rows)))
}

/// Cells of a notebook for the overview panel.
pub fn cells_json(notebook: &str) -> Result<String, String> {
    let doc = parse_notebook(notebook, "notebook.ipynb").map_err(err)?;
    let cells: Vec<CellView> = doc
        .cells
        .iter()
        .map(|c| CellView {
            index: c.index,
            kind: c.kind,
            source: &c.source,
            outputs: c.outputs.iter().map(|o| o.kind).collect(),
        })
        .collect();
    Ok(canonical_json(&serde_json::to_value(cells).map_err(err)?))
}

pub fn generate_json(notebook: &str, options: &str) -> Result<String, String> {
    let doc = parse_notebook(notebook, "notebook.ipynb").map_err(err)?;
    let o: Options = if options.trim().is_empty() {
        Options::default()
    } else {
        serde_json::from_str(options).map_err(err)?
    };
    let deck = generate_deck(
        &doc,
        &DeckConfig::new(o.title, o.presenter, o.audience, o.detail),
    )
    .map_err(err)?;
    Ok(to_canonical_json(&deck))
}

/// Cells behind a slide, most similar first.
pub fn links_json(deck: &str, slide_id: &str) -> Result<String, String> {
    let deck = import_deck(deck.as_bytes()).map_err(err)?;
    let links = deck.links_for(slide_id).map_err(err)?;
    Ok(canonical_json(&serde_json::to_value(links).map_err(err)?))
}

/// Apply `{"title": ..., "bullets": [...]}` to a slide; returns the new deck.
pub fn edit_json(deck: &str, slide_id: &str, patch: &str) -> Result<String, String> {
    let mut deck = import_deck(deck.as_bytes()).map_err(err)?;
    let patch: SlidePatch = serde_json::from_str(patch).map_err(err)?;
    deck.edit_slide(slide_id, &patch).map_err(err)?;
    Ok(to_canonical_json(&deck))
}

/// The deck as `json`, `md` or `html` text.
pub fn export_text(deck: &str, format: &str) -> Result<String, String> {
    let deck = import_deck(deck.as_bytes()).map_err(err)?;
    let format: DeckFormat = format.parse()?;
    String::from_utf8(export_deck(&deck, format).payload).map_err(err)
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn outline(audience: &str) -> Result<String, JsError> {
    js(outline_json(audience))
}

#[wasm_bindgen]
pub fn cells(notebook: &str) -> Result<String, JsError> {
    js(cells_json(notebook))
}

#[wasm_bindgen]
pub fn generate(notebook: &str, options: &str) -> Result<String, JsError> {
    js(generate_json(notebook, options))
}

#[wasm_bindgen]
pub fn links(deck: &str, slide_id: &str) -> Result<String, JsError> {
    js(links_json(deck, slide_id))
}

#[wasm_bindgen]
pub fn edit(deck: &str, slide_id: &str, patch: &str) -> Result<String, JsError> {
    js(edit_json(deck, slide_id, patch))
}

#[wasm_bindgen(js_name = exportDeck)]
pub fn export_as(deck: &str, format: &str) -> Result<String, JsError> {
    js(export_text(deck, format))
}
