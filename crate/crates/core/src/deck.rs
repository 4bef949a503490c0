//! Slide decks: generation from a notebook and presenter edits.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::embedding::{EmbedError, EmbedderHandle, HASH_FUNCTION};
use crate::matcher::{assign_cells, gather_evidence, rank_evidence, select_outputs, MatchParams};
use crate::notebook::{NotebookDocument, OutputArtifact};
use crate::summarizer::{summarize_batch, SummarizeError, SummarizerHandle, SummaryRequest};
use crate::template::{template_for, Audience, OutlineTemplate, SectionMode, TemplateError};
use crate::tree::{build_tree, NotebookTree};

pub const DECK_SCHEMA_VERSION: &str = "nbdeck-deck/1";
pub const TITLE_SLIDE_ID: &str = "title";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeckError {
    #[error("unknown slide {0:?}")]
    UnknownSlide(String),
    #[error("the title slide cannot be deleted")]
    CannotDeleteTitle,
    #[error("invalid edit: {0}")]
    InvalidEdit(String),
    #[error("invalid generation parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("remote backend unavailable: {0}")]
    RemoteUnavailable(String),
    #[error("summarization failed: {0}")]
    Summarize(String),
}

impl From<EmbedError> for DeckError {
    fn from(e: EmbedError) -> Self {
        match e {
            EmbedError::RemoteUnavailable(m) => DeckError::RemoteUnavailable(m),
            other => DeckError::RemoteUnavailable(other.to_string()),
        }
    }
}

impl From<SummarizeError> for DeckError {
    fn from(e: SummarizeError) -> Self {
        match e {
            SummarizeError::RemoteUnavailable(m) => DeckError::RemoteUnavailable(m),
            other => DeckError::Summarize(other.to_string()),
        }
    }
}

/// Level of detail: the minimum bullet length in tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum DetailLevel {
    Brief,
    Standard,
    Detailed,
}

impl DetailLevel {
    pub fn min_tokens(self) -> usize {
        match self {
            DetailLevel::Brief => 4,
            DetailLevel::Standard => 8,
            DetailLevel::Detailed => 12,
        }
    }
}

impl TryFrom<u8> for DetailLevel {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(DetailLevel::Brief),
            2 => Ok(DetailLevel::Standard),
            3 => Ok(DetailLevel::Detailed),
            other => Err(format!("detail level must be 1, 2 or 3, got {other}")),
        }
    }
}

impl From<DetailLevel> for u8 {
    fn from(d: DetailLevel) -> u8 {
        match d {
            DetailLevel::Brief => 1,
            DetailLevel::Standard => 2,
            DetailLevel::Detailed => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeckConfig {
    pub title: String,
    pub presenter: String,
    pub audience: Audience,
    pub detail: DetailLevel,
    pub embedder: EmbedderHandle,
    pub summarizer: SummarizerHandle,
}

impl DeckConfig {
    /// Built-in backends.
    pub fn new(
        title: impl Into<String>,
        presenter: impl Into<String>,
        audience: Audience,
        detail: DetailLevel,
    ) -> Self {
        DeckConfig {
            title: title.into(),
            presenter: presenter.into(),
            audience,
            detail,
            embedder: EmbedderHandle::builtin(),
            summarizer: SummarizerHandle::builtin(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlideOrigin {
    Auto,
    Prompt,
    TitlePage,
    User,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BulletOrigin {
    Generated,
    Prompt,
    User,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub cell_index: usize,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bullet {
    pub text: String,
    pub provenance: Vec<Provenance>,
    pub origin: BulletOrigin,
    pub short: bool,
}

impl Bullet {
    pub fn user(text: impl Into<String>) -> Self {
        Bullet {
            text: text.into(),
            provenance: Vec::new(),
            origin: BulletOrigin::User,
            short: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slide {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub section_id: Option<String>,
    /// Outline group ("Data", "Appendix: Model", ...); empty for title and
    /// user slides.
    #[serde(default)]
    pub group: String,
    pub title: String,
    pub bullets: Vec<Bullet>,
    pub attachments: Vec<OutputArtifact>,
    pub origin: SlideOrigin,
    /// Auto section for which no cell cleared the similarity floor.
    pub empty_auto: bool,
    /// Holds example/How-To text the presenter is expected to replace.
    pub example_prompt: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorMetadata {
    pub schema_version: String,
    pub template_version: String,
    pub embed_dimension: usize,
    pub hash_function: String,
    pub tau: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlideDeck {
    pub deck_id: String,
    pub revision: u64,
    pub config: DeckConfig,
    pub slides: Vec<Slide>,
    pub tree: NotebookTree,
    pub generator_metadata: GeneratorMetadata,
    /// Counter behind `user-N` slide ids.
    pub next_user_slide: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlidePatch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bullets: Option<Vec<String>>,
}

/// Generate with the built-in template for the configured audience and the
/// default matching parameters.
pub fn generate_deck(doc: &NotebookDocument, config: &DeckConfig) -> Result<SlideDeck, DeckError> {
    generate_deck_with(
        doc,
        config,
        &template_for(config.audience),
        MatchParams::default(),
    )
}

pub fn generate_deck_with(
    doc: &NotebookDocument,
    config: &DeckConfig,
    template: &OutlineTemplate,
    params: MatchParams,
) -> Result<SlideDeck, DeckError> {
    template.validate()?;
    if !(params.tau > 0.0 && params.tau <= 1.0) {
        return Err(DeckError::InvalidParams(format!(
            "tau must be in (0, 1], got {}",
            params.tau
        )));
    }
    if !(params.gamma > 0.0 && params.gamma <= 1.0) {
        return Err(DeckError::InvalidParams(format!(
            "gamma must be in (0, 1], got {}",
            params.gamma
        )));
    }

    let tree = build_tree(doc);
    let evidence = gather_evidence(doc, &tree, template, &config.embedder)?;
    let ranking = rank_evidence(&evidence, params.gamma);
    let assignment = assign_cells(&ranking, params.tau);
    let attachments: BTreeMap<String, Vec<OutputArtifact>> =
        select_outputs(&assignment, doc).into_iter().collect();

    // one summarization batch for the whole deck
    let mut requests = Vec::new();
    let mut owners = Vec::new();
    for picks in &assignment.sections {
        let mut placements = picks.leaves.clone();
        placements.sort_by_key(|p| p.cell_index);
        for p in placements {
            let leaf = evidence
                .leaves
                .iter()
                .find(|l| l.leaf_id == p.leaf_id)
                .expect("assigned leaves come from the evidence set");
            requests.push(SummaryRequest {
                source: doc.cells[p.cell_index].source.clone(),
                comments: leaf.comments.clone(),
                context: leaf.context.clone(),
                min_tokens: config.detail.min_tokens(),
            });
            owners.push((picks.section_id.clone(), p));
        }
    }
    let summaries = summarize_batch(&config.summarizer, &requests)?;
    let mut bullets: BTreeMap<String, Vec<Bullet>> = BTreeMap::new();
    for ((section, placement), summary) in owners.into_iter().zip(summaries) {
        bullets.entry(section).or_default().push(Bullet {
            text: sanitize_bullet(&summary.text),
            provenance: vec![Provenance {
                cell_index: placement.cell_index,
                similarity: placement.score,
            }],
            origin: BulletOrigin::Generated,
            short: summary.short,
        });
    }

    let mut slides = vec![Slide {
        id: TITLE_SLIDE_ID.into(),
        section_id: None,
        group: String::new(),
        title: config.title.clone(),
        bullets: if config.presenter.trim().is_empty() {
            Vec::new()
        } else {
            vec![Bullet::user(config.presenter.clone())]
        },
        attachments: Vec::new(),
        origin: SlideOrigin::TitlePage,
        empty_auto: false,
        example_prompt: false,
    }];
    for section in &template.sections {
        let slide = match section.mode {
            SectionMode::Auto => {
                let b = bullets.remove(&section.id).unwrap_or_default();
                Slide {
                    id: section.id.clone(),
                    section_id: Some(section.id.clone()),
                    group: section.parent_section.clone(),
                    title: section.title.clone(),
                    empty_auto: b.is_empty(),
                    bullets: b,
                    attachments: attachments.get(&section.id).cloned().unwrap_or_default(),
                    origin: SlideOrigin::Auto,
                    example_prompt: false,
                }
            }
            SectionMode::Prompt => Slide {
                id: section.id.clone(),
                section_id: Some(section.id.clone()),
                group: section.parent_section.clone(),
                title: section.title.clone(),
                bullets: section
                    .prompt_body
                    .as_deref()
                    .unwrap_or_default()
                    .lines()
                    .map(sanitize_bullet)
                    .filter(|l| !l.is_empty())
                    .map(|text| Bullet {
                        text,
                        provenance: Vec::new(),
                        origin: BulletOrigin::Prompt,
                        short: false,
                    })
                    .collect(),
                attachments: Vec::new(),
                origin: SlideOrigin::Prompt,
                empty_auto: false,
                example_prompt: true,
            },
        };
        slides.push(slide);
    }

    Ok(SlideDeck {
        deck_id: deck_id_for(doc, config, template, params),
        revision: 0,
        config: config.clone(),
        slides,
        tree,
        generator_metadata: GeneratorMetadata {
            schema_version: DECK_SCHEMA_VERSION.into(),
            template_version: template.version.clone(),
            embed_dimension: evidence.dimension,
            hash_function: HASH_FUNCTION.into(),
            tau: params.tau,
            gamma: params.gamma,
        },
        next_user_slide: 1,
    })
}

fn deck_id_for(
    doc: &NotebookDocument,
    config: &DeckConfig,
    template: &OutlineTemplate,
    params: MatchParams,
) -> String {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(&doc.cells).expect("cells serialize"));
    hasher.update(serde_json::to_vec(config).expect("config serializes"));
    hasher.update(serde_json::to_vec(template).expect("template serializes"));
    hasher.update(serde_json::to_vec(&params).expect("params serialize"));
    let digest = hasher.finalize();
    let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    format!("deck-{hex}")
}

/// Collapse whitespace and strip block-level markers so generated text is a
/// valid single-line bullet.
pub fn sanitize_bullet(text: &str) -> String {
    let collapsed = text.split_whitespace().collect::<Vec<_>>().join(" ");
    let mut s = collapsed.as_str();
    while let Some(m) = BLOCK_MARKER.find(s) {
        if m.end() == 0 {
            break;
        }
        s = s[m.end()..].trim_start();
    }
    s.to_string()
}

static BLOCK_MARKER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?:#{1,6}(?:\s|$)|>|[-+*](?:\s|$)|\d+[.)](?:\s|$)|```|~~~|\|)").unwrap()
});

/// Bullets accept inline markdown (bold, italic, code spans, links) only.
pub fn validate_bullet(text: &str) -> Result<(), DeckError> {
    if text.contains('\n') || text.contains('\r') {
        return Err(DeckError::InvalidEdit("bullets are single-line".into()));
    }
    if text.trim().is_empty() {
        return Err(DeckError::InvalidEdit("empty bullet".into()));
    }
    if BLOCK_MARKER.is_match(text.trim_start()) {
        return Err(DeckError::InvalidEdit(format!(
            "block-level markdown is not allowed in bullets: {text:?}"
        )));
    }
    Ok(())
}

fn validate_title(text: &str) -> Result<(), DeckError> {
    if text.contains('\n') || text.contains('\r') {
        return Err(DeckError::InvalidEdit("titles are single-line".into()));
    }
    Ok(())
}

impl SlideDeck {
    pub fn slide(&self, id: &str) -> Option<&Slide> {
        self.slides.iter().find(|s| s.id == id)
    }

    fn position(&self, id: &str) -> Result<usize, DeckError> {
        self.slides
            .iter()
            .position(|s| s.id == id)
            .ok_or_else(|| DeckError::UnknownSlide(id.to_string()))
    }

    /// Replace a slide's title and/or bullets. A bullet whose text matches an
    /// existing bullet of the slide keeps that bullet (origin and provenance);
    /// any other text becomes a user bullet without provenance.
    pub fn edit_slide(&mut self, id: &str, patch: &SlidePatch) -> Result<(), DeckError> {
        let pos = self.position(id)?;
        if let Some(title) = &patch.title {
            validate_title(title)?;
        }
        if let Some(bullets) = &patch.bullets {
            bullets.iter().try_for_each(|b| validate_bullet(b))?;
        }
        let slide = &mut self.slides[pos];
        if let Some(title) = &patch.title {
            slide.title = title.clone();
        }
        if let Some(texts) = &patch.bullets {
            let mut old: Vec<Option<Bullet>> = slide.bullets.drain(..).map(Some).collect();
            slide.bullets = texts
                .iter()
                .map(|text| {
                    old.iter_mut()
                        .find(|b| b.as_ref().is_some_and(|b| &b.text == text))
                        .and_then(Option::take)
                        .unwrap_or_else(|| Bullet::user(text.clone()))
                })
                .collect();
        }
        self.revision += 1;
        Ok(())
    }

    /// Insert an empty user slide right after `after`; returns its id.
    pub fn add_slide(&mut self, after: &str, title: &str) -> Result<String, DeckError> {
        let pos = self.position(after)?;
        validate_title(title)?;
        let id = format!("user-{}", self.next_user_slide);
        self.next_user_slide += 1;
        self.slides.insert(
            pos + 1,
            Slide {
                id: id.clone(),
                section_id: None,
                group: String::new(),
                title: title.to_string(),
                bullets: Vec::new(),
                attachments: Vec::new(),
                origin: SlideOrigin::User,
                empty_auto: false,
                example_prompt: false,
            },
        );
        self.revision += 1;
        Ok(id)
    }

    pub fn delete_slide(&mut self, id: &str) -> Result<(), DeckError> {
        let pos = self.position(id)?;
        if self.slides[pos].origin == SlideOrigin::TitlePage {
            return Err(DeckError::CannotDeleteTitle);
        }
        self.slides.remove(pos);
        self.revision += 1;
        Ok(())
    }

    /// Cells behind a slide: one entry per cell with its highest similarity,
    /// most similar first.
    pub fn links_for(&self, id: &str) -> Result<Vec<Provenance>, DeckError> {
        let slide = self
            .slide(id)
            .ok_or_else(|| DeckError::UnknownSlide(id.to_string()))?;
        Ok(links_of(slide))
    }

    pub fn link_map(&self) -> BTreeMap<String, Vec<Provenance>> {
        self.slides
            .iter()
            .map(|s| (s.id.clone(), links_of(s)))
            .collect()
    }
}

fn links_of(slide: &Slide) -> Vec<Provenance> {
    let mut best: BTreeMap<usize, f64> = BTreeMap::new();
    for p in slide.bullets.iter().flat_map(|b| &b.provenance) {
        let e = best.entry(p.cell_index).or_insert(p.similarity);
        if p.similarity > *e {
            *e = p.similarity;
        }
    }
    let mut links: Vec<Provenance> = best
        .into_iter()
        .map(|(cell_index, similarity)| Provenance {
            cell_index,
            similarity,
        })
        .collect();
    links.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then(a.cell_index.cmp(&b.cell_index))
    });
    links
}
