//! Notebook to slide deck generation.
//!
//! A notebook is parsed ([`notebook`]), organized into a header tree
//! ([`tree`]), scored against the sections of an outline template
//! ([`matcher`]), summarized into bullets ([`summarizer`]) and assembled into
//! an editable [`deck::SlideDeck`] that can be exported ([`export`]).

pub mod code;
pub mod deck;
pub mod embedding;
pub mod eval;
pub mod export;
pub mod markdown;
pub mod matcher;
pub mod notebook;
mod remote;
pub mod summarizer;
pub mod template;
pub mod tree;

pub use deck::{
    generate_deck, generate_deck_with, DeckConfig, DeckError, DetailLevel, SlideDeck, SlidePatch,
};
pub use export::{export_deck, import_deck, DeckArchive, DeckFormat, ExportError};
pub use notebook::{parse_notebook, NotebookDocument, NotebookError};
pub use template::{template_for, Audience, OutlineTemplate};
