#![allow(dead_code)]

use std::path::{Path, PathBuf};

use nbdeck_core::notebook::{parse_notebook, NotebookDocument};
use proptest::prelude::*;
use serde_json::{json, Value};

pub mod checks;
pub mod matching;
pub mod mock;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn load(path: &Path) -> NotebookDocument {
    let raw = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_notebook(&raw, &path.to_string_lossy()).unwrap()
}

pub fn corpus_paths() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(fixtures().join("corpus"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "ipynb"))
        .collect();
    v.sort();
    v
}

/// A markdown block as generated, before rendering.
#[derive(Debug, Clone)]
pub enum GenBlock {
    Heading {
        level: u8,
        title: String,
        setext: bool,
    },
    Prose(String),
    /// A fenced code block whose body looks like a heading.
    Fence,
}

#[derive(Debug, Clone)]
pub enum GenCell {
    Markdown(Vec<GenBlock>),
    Raw(String),
    Code(String),
}

const WORDS: &[&str] = &[
    "data",
    "model",
    "train",
    "cleaning",
    "plot",
    "feature",
    "wine",
    "quality",
    "score",
    "split",
    "missing",
    "values",
    "correlation",
    "accuracy",
    "forest",
    "test",
    "baseline",
    "tuning",
    "loss",
    "sample",
];

const SNIPPETS: &[&str] = &[
    "df = pd.read_csv('data.csv')",
    "# summary statistics\ndf.describe()",
    "df = df.dropna()",
    "sns.heatmap(df.corr())\nplt.show()",
    "X_train, X_test, y_train, y_test = train_test_split(X, y)",
    "model.fit(X_train, y_train)",
    "# compute the F1 score of a model\nf1_score(y_test, y_pred)",
    "",
    "x = 1",
];

pub fn words(min: usize, max: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(WORDS), min..=max).prop_map(|w| w.join(" "))
}

pub fn block() -> impl Strategy<Value = GenBlock> {
    prop_oneof![
        3 => (1u8..=6, words(1, 3), any::<bool>()).prop_map(|(level, title, setext)| GenBlock::Heading {
            level,
            setext: setext && level <= 2,
            title,
        }),
        3 => words(2, 8).prop_map(|w| GenBlock::Prose(format!("{w}."))),
        1 => Just(GenBlock::Fence),
    ]
}

pub fn cell() -> impl Strategy<Value = GenCell> {
    prop_oneof![
        4 => prop::collection::vec(block(), 0..4).prop_map(GenCell::Markdown),
        1 => words(1, 4).prop_map(GenCell::Raw),
        5 => prop::sample::select(SNIPPETS).prop_map(|s| GenCell::Code(s.to_string())),
    ]
}

pub fn notebook(max_cells: usize) -> impl Strategy<Value = Vec<GenCell>> {
    prop::collection::vec(cell(), 0..=max_cells)
}

pub fn render_block(b: &GenBlock) -> String {
    match b {
        GenBlock::Heading {
            level,
            title,
            setext: true,
        } => {
            let underline = if *level == 1 { "=" } else { "-" };
            format!("{title}\n{}", underline.repeat(title.len().max(3)))
        }
        GenBlock::Heading { level, title, .. } => {
            format!("{} {title}", "#".repeat(*level as usize))
        }
        GenBlock::Prose(p) => p.clone(),
        GenBlock::Fence => "```\n# not a heading\nx = 1\n```".into(),
    }
}

pub fn to_ipynb(cells: &[GenCell]) -> Value {
    let cells: Vec<Value> = cells
        .iter()
        .map(|c| match c {
            GenCell::Markdown(blocks) => json!({
                "cell_type": "markdown", "metadata": {},
                "source": blocks.iter().map(render_block).collect::<Vec<_>>().join("\n\n"),
            }),
            GenCell::Raw(t) => json!({"cell_type": "raw", "metadata": {}, "source": t}),
            GenCell::Code(s) => json!({
                "cell_type": "code", "metadata": {}, "execution_count": null, "outputs": [], "source": s,
            }),
        })
        .collect();
    json!({"cells": cells, "metadata": {}, "nbformat": 4, "nbformat_minor": 5})
}

pub fn to_doc(cells: &[GenCell]) -> NotebookDocument {
    parse_notebook(&to_ipynb(cells).to_string(), "generated.ipynb").unwrap()
}
