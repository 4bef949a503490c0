//! Corpus evaluation: how often each auto section is generated and how many of
//! its bullets come from cells a human labeled with a different section.
//!
//! Gold labels sit in their own directory, one `<notebook stem>.gold.json`
//! per notebook:
//!
//! ```json
//! { "labels": { "3": "eda", "4": "none", "7": "metrics" } }
//! ```
//!
//! Keys are cell indices, values are auto section ids or `"none"`. Cells left
//! out are treated as `"none"`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deck::{generate_deck, BulletOrigin, DeckConfig, DeckError, SlideDeck};
use crate::notebook::parse_notebook;
use crate::template::template_for;

pub const REPORT_HEADER: [&str; 3] = ["section", "occurrence", "avg_error_rate"];
pub const NO_SECTION: &str = "none";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no gold labels for {0}")]
    MissingGold(PathBuf),
    #[error("gold file {path}: {message}")]
    InvalidGold { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Generation { path: PathBuf, source: DeckError },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("writing report: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldLabels {
    pub labels: BTreeMap<usize, String>,
}

impl GoldLabels {
    pub fn label(&self, cell: usize) -> &str {
        self.labels
            .get(&cell)
            .map(String::as_str)
            .unwrap_or(NO_SECTION)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRow {
    pub section: String,
    pub occurrence: usize,
    /// None when the section never occurred.
    pub avg_error_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedNotebook {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub corpus_size: usize,
    pub skipped: Vec<SkippedNotebook>,
}

impl EvalReport {
    pub fn row(&self, section: &str) -> Option<&EvalRow> {
        self.rows.iter().find(|r| r.section == section)
    }

    pub fn to_csv(&self) -> Result<String, EvalError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(REPORT_HEADER)?;
        for row in &self.rows {
            let rate = row
                .avg_error_rate
                .map(|r| format!("{r:.6}"))
                .unwrap_or_default();
            w.write_record([row.section.as_str(), &row.occurrence.to_string(), &rate])?;
        }
        let bytes = w.into_inner().map_err(|e| EvalError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), EvalError> {
        fs::write(path, self.to_csv()?)?;
        Ok(())
    }
}

pub fn gold_path(gold_dir: &Path, notebook: &Path) -> PathBuf {
    let stem = notebook
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default();
    gold_dir.join(format!("{stem}.gold.json"))
}

pub fn load_gold(
    path: &Path,
    valid_sections: &[&str],
    cell_count: Option<usize>,
) -> Result<GoldLabels, EvalError> {
    let raw = fs::read_to_string(path).map_err(|_| EvalError::MissingGold(path.to_path_buf()))?;
    let gold: GoldLabels = serde_json::from_str(&raw).map_err(|e| EvalError::InvalidGold {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    for (&cell, section) in &gold.labels {
        if section != NO_SECTION && !valid_sections.contains(&section.as_str()) {
            return Err(EvalError::InvalidGold {
                path: path.to_path_buf(),
                message: format!("cell {cell}: unknown section {section:?}"),
            });
        }
        if cell_count.is_some_and(|n| cell >= n) {
            return Err(EvalError::InvalidGold {
                path: path.to_path_buf(),
                message: format!("cell {cell} does not exist"),
            });
        }
    }
    Ok(gold)
}

/// Per-section error rates for one deck. Sections whose slide carries no
/// generated bullet are absent.
pub fn deck_error_rates(deck: &SlideDeck, gold: &GoldLabels) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for slide in &deck.slides {
        let Some(section) = &slide.section_id else {
            continue;
        };
        let generated: Vec<_> = slide
            .bullets
            .iter()
            .filter(|b| b.origin == BulletOrigin::Generated)
            .collect();
        if generated.is_empty() {
            continue;
        }
        let wrong = generated
            .iter()
            .filter(|b| {
                b.provenance
                    .iter()
                    .any(|p| gold.label(p.cell_index) != section)
            })
            .count();
        out.insert(section.clone(), wrong as f64 / generated.len() as f64);
    }
    out
}

fn notebooks_in(dir: &Path) -> Result<Vec<PathBuf>, EvalError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "ipynb"))
        .collect();
    paths.sort();
    Ok(paths)
}

pub fn evaluate_corpus(
    corpus_dir: &Path,
    gold_dir: &Path,
    config: &DeckConfig,
) -> Result<EvalReport, EvalError> {
    let template = template_for(config.audience);
    let sections: Vec<&str> = template.auto_sections().map(|s| s.id.as_str()).collect();
    let notebooks = notebooks_in(corpus_dir)?;

    // every gold file must exist before any work starts
    for nb in &notebooks {
        let gp = gold_path(gold_dir, nb);
        if !gp.is_file() {
            return Err(EvalError::MissingGold(gp));
        }
    }

    let mut per_section: BTreeMap<&str, Vec<f64>> =
        sections.iter().map(|s| (*s, Vec::new())).collect();
    let mut skipped = Vec::new();
    let mut corpus_size = 0;
    for nb in &notebooks {
        let raw = fs::read_to_string(nb)?;
        let doc = match parse_notebook(&raw, &nb.to_string_lossy()) {
            Ok(doc) => doc,
            Err(e) => {
                log::warn!("skipping {}: {e}", nb.display());
                skipped.push(SkippedNotebook {
                    path: nb.clone(),
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let gold = load_gold(&gold_path(gold_dir, nb), &sections, Some(doc.len()))?;
        let deck = generate_deck(&doc, config).map_err(|source| EvalError::Generation {
            path: nb.clone(),
            source,
        })?;
        corpus_size += 1;
        for (section, rate) in deck_error_rates(&deck, &gold) {
            if let Some(rates) = per_section.get_mut(section.as_str()) {
                rates.push(rate);
            }
        }
    }

    let rows = sections
        .iter()
        .map(|s| {
            let rates = &per_section[s];
            EvalRow {
                section: s.to_string(),
                occurrence: rates.len(),
                avg_error_rate: (!rates.is_empty())
                    .then(|| rates.iter().sum::<f64>() / rates.len() as f64),
            }
        })
        .collect();
    Ok(EvalReport {
        rows,
        corpus_size,
        skipped,
    })
}
