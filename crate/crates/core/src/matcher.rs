//! Locating code cells for each auto section.
//!
//! A leaf's score against a section is the best cosine between any query
//! sentence and any of the leaf's evidence sentences. Code-channel evidence
//! (comments plus one identifier sentence) counts at full weight; markdown
//! context is discounted by `gamma^depth`. Each section then takes its top `k`
//! leaves above the similarity floor, and a leaf wanted by several sections
//! goes to the one where it scores highest.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::code::{analyze, extract_comments};
use crate::embedding::{
    cosine, segment_with_origin, EmbedError, Embedder, EmbedderHandle, EmbeddingVector,
    SentenceOrigin,
};
use crate::notebook::{NotebookDocument, OutputArtifact};
use crate::template::OutlineTemplate;
use crate::tree::{leaf_context, MarkdownContext, NodeId, NotebookTree};

pub const DEFAULT_TAU: f64 = 0.15;
pub const DEFAULT_GAMMA: f64 = 0.8;
pub const MAX_ATTACHMENTS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchParams {
    /// Similarity floor below which a leaf is never assigned.
    pub tau: f64,
    /// Per-level decay applied to markdown context.
    pub gamma: f64,
}

impl Default for MatchParams {
    fn default() -> Self {
        MatchParams {
            tau: DEFAULT_TAU,
            gamma: DEFAULT_GAMMA,
        }
    }
}

/// Round to the 6 decimals used in serialized decks.
pub fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceChannel {
    Code,
    Markdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafScore {
    pub leaf_id: NodeId,
    pub cell_index: usize,
    pub section_id: String,
    pub score: f64,
    pub best_evidence: EvidenceChannel,
    pub evidence_text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceSentence {
    pub text: String,
    pub vector: EmbeddingVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextSentence {
    pub text: String,
    pub depth: u32,
    pub vector: EmbeddingVector,
}

/// Everything needed to score and summarize one code leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafEvidence {
    pub leaf_id: NodeId,
    pub cell_index: usize,
    pub comments: Vec<String>,
    pub context: MarkdownContext,
    pub code: Vec<EvidenceSentence>,
    pub markdown: Vec<ContextSentence>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectionQuery {
    pub section_id: String,
    pub k: usize,
    pub sentences: Vec<EvidenceSentence>,
}

#[derive(Debug, Clone)]
pub struct EvidenceSet {
    pub leaves: Vec<LeafEvidence>,
    pub sections: Vec<SectionQuery>,
    /// Dimension of every vector in the set.
    pub dimension: usize,
}

/// Space-joined called names plus comment text: the identifier sentence of a
/// code leaf.
pub fn identifier_sentence(source: &str, comments: &[String]) -> String {
    let facts = analyze(source);
    let mut parts = facts.calls;
    parts.extend(comments.iter().cloned());
    parts.join(" ")
}

/// Segment every query and every leaf's evidence, build the embedder over
/// exactly those sentences, and embed them in one batch.
pub fn gather_evidence(
    doc: &NotebookDocument,
    tree: &NotebookTree,
    template: &OutlineTemplate,
    handle: &EmbedderHandle,
) -> Result<EvidenceSet, EmbedError> {
    struct RawLeaf {
        leaf_id: NodeId,
        cell_index: usize,
        comments: Vec<String>,
        context: MarkdownContext,
        code: Vec<String>,
        markdown: Vec<(String, u32)>,
    }

    let mut raw_leaves = Vec::new();
    for leaf in tree.leaves() {
        let cell_index = leaf.source_cell.expect("code leaves map to a cell");
        let source = &doc.cells[cell_index].source;
        let comments = extract_comments(source);
        let mut code: Vec<String> = comments
            .iter()
            .flat_map(|c| segment_with_origin(c, SentenceOrigin::Comment))
            .map(|s| s.text)
            .collect();
        let ident = identifier_sentence(source, &comments);
        if !ident.trim().is_empty() {
            code.push(ident);
        }
        let context = leaf_context(tree, leaf.id).expect("leaf ids come from the tree");
        let markdown = context
            .sentences()
            .map(|(s, d)| (s.to_string(), d))
            .collect();
        raw_leaves.push(RawLeaf {
            leaf_id: leaf.id,
            cell_index,
            comments,
            context,
            code,
            markdown,
        });
    }

    let raw_queries: Vec<(String, usize, Vec<String>)> = template
        .auto_sections()
        .map(|s| {
            let sentences = segment_with_origin(&s.query, SentenceOrigin::Query)
                .into_iter()
                .map(|s| s.text)
                .collect();
            (s.id.clone(), s.k, sentences)
        })
        .collect();

    // every distinct sentence once, in first-seen order
    let mut texts: Vec<String> = Vec::new();
    let mut slot: HashMap<String, usize> = HashMap::new();
    let mut intern = |t: &str| {
        if !slot.contains_key(t) {
            slot.insert(t.to_string(), texts.len());
            texts.push(t.to_string());
        }
    };
    for (_, _, qs) in &raw_queries {
        qs.iter().for_each(|q| intern(q));
    }
    for leaf in &raw_leaves {
        leaf.code.iter().for_each(|s| intern(s));
        leaf.markdown.iter().for_each(|(s, _)| intern(s));
    }

    let embedder: Embedder = handle.instantiate(texts.iter().map(String::as_str))?;
    let vectors = embedder.embed_batch(&texts)?;
    let vec_of = |t: &str| vectors[slot[t]].clone();

    let sections = raw_queries
        .into_iter()
        .map(|(section_id, k, qs)| SectionQuery {
            section_id,
            k,
            sentences: qs
                .into_iter()
                .map(|text| EvidenceSentence {
                    vector: vec_of(&text),
                    text,
                })
                .collect(),
        })
        .collect();
    let leaves = raw_leaves
        .into_iter()
        .map(|r| LeafEvidence {
            leaf_id: r.leaf_id,
            cell_index: r.cell_index,
            comments: r.comments,
            context: r.context,
            code: r
                .code
                .into_iter()
                .map(|text| EvidenceSentence {
                    vector: vec_of(&text),
                    text,
                })
                .collect(),
            markdown: r
                .markdown
                .into_iter()
                .map(|(text, depth)| ContextSentence {
                    vector: vec_of(&text),
                    text,
                    depth,
                })
                .collect(),
        })
        .collect();
    Ok(EvidenceSet {
        leaves,
        sections,
        dimension: vectors
            .first()
            .map(EmbeddingVector::dimension)
            .unwrap_or_else(|| embedder.dimension()),
    })
}

/// Score one leaf against one section's query sentences.
pub fn score_leaf(
    section_id: &str,
    queries: &[EmbeddingVector],
    leaf: &LeafEvidence,
    gamma: f64,
) -> LeafScore {
    let mut best = (0.0_f64, EvidenceChannel::Code, String::new());
    for q in queries {
        for c in &leaf.code {
            let s = cosine(q, &c.vector).unwrap_or(0.0);
            if s > best.0 {
                best = (s, EvidenceChannel::Code, c.text.clone());
            }
        }
        for m in &leaf.markdown {
            let s = cosine(q, &m.vector).unwrap_or(0.0) * gamma.powi(m.depth as i32);
            if s > best.0 {
                best = (s, EvidenceChannel::Markdown, m.text.clone());
            }
        }
    }
    LeafScore {
        leaf_id: leaf.leaf_id,
        cell_index: leaf.cell_index,
        section_id: section_id.to_string(),
        score: round6(best.0.clamp(0.0, 1.0)),
        best_evidence: best.1,
        evidence_text: best.2,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionRanking {
    pub section_id: String,
    pub k: usize,
    pub scores: Vec<LeafScore>,
}

/// Per auto section, in template order, every leaf sorted by descending
/// score with ties broken by ascending cell index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub sections: Vec<SectionRanking>,
}

impl Ranking {
    pub fn section(&self, id: &str) -> Option<&SectionRanking> {
        self.sections.iter().find(|s| s.section_id == id)
    }
}

pub fn sort_scores(scores: &mut [LeafScore]) {
    scores.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.cell_index.cmp(&b.cell_index))
    });
}

pub fn rank_evidence(evidence: &EvidenceSet, gamma: f64) -> Ranking {
    let sections = evidence
        .sections
        .iter()
        .map(|section| {
            let queries: Vec<EmbeddingVector> =
                section.sentences.iter().map(|s| s.vector.clone()).collect();
            let mut scores: Vec<LeafScore> = evidence
                .leaves
                .iter()
                .map(|leaf| score_leaf(&section.section_id, &queries, leaf, gamma))
                .collect();
            sort_scores(&mut scores);
            SectionRanking {
                section_id: section.section_id.clone(),
                k: section.k,
                scores,
            }
        })
        .collect();
    Ranking { sections }
}

/// Build evidence for `doc` and rank every leaf for every auto section.
pub fn rank_sections(
    doc: &NotebookDocument,
    tree: &NotebookTree,
    template: &OutlineTemplate,
    handle: &EmbedderHandle,
    gamma: f64,
) -> Result<(Ranking, EvidenceSet), EmbedError> {
    let evidence = gather_evidence(doc, tree, template, handle)?;
    Ok((rank_evidence(&evidence, gamma), evidence))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub leaf_id: NodeId,
    pub cell_index: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionPicks {
    pub section_id: String,
    /// Descending score, ties by cell index.
    pub leaves: Vec<Placement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionAssignment {
    pub sections: Vec<SectionPicks>,
    /// Leaves placed nowhere, ascending id.
    pub unassigned: Vec<NodeId>,
}

impl SectionAssignment {
    pub fn section(&self, id: &str) -> Option<&SectionPicks> {
        self.sections.iter().find(|s| s.section_id == id)
    }
}

/// Resolve per-section top-k lists into an exclusive assignment.
///
/// Each round takes every section's top `k` among its remaining candidates
/// (score >= `tau`). A leaf present in several of those lists stays only in
/// the section where it scores highest (earlier section on ties) and is
/// struck from the others' candidates, which then backfill from further down
/// their ranking. Candidacies are only ever removed, so the loop terminates.
pub fn assign_cells(ranking: &Ranking, tau: f64) -> SectionAssignment {
    let mut candidates: Vec<Vec<&LeafScore>> = ranking
        .sections
        .iter()
        .map(|s| s.scores.iter().filter(|l| l.score >= tau).collect())
        .collect();

    let top_k = |candidates: &Vec<Vec<&LeafScore>>| -> Vec<Vec<NodeId>> {
        candidates
            .iter()
            .zip(&ranking.sections)
            .map(|(c, s)| c.iter().take(s.k).map(|l| l.leaf_id).collect())
            .collect()
    };

    loop {
        let provisional = top_k(&candidates);
        // leaf -> [(section index, score)]
        let mut claims: BTreeMap<NodeId, Vec<(usize, f64)>> = BTreeMap::new();
        for (si, leaves) in provisional.iter().enumerate() {
            for &leaf in leaves {
                let score = candidates[si]
                    .iter()
                    .find(|l| l.leaf_id == leaf)
                    .unwrap()
                    .score;
                claims.entry(leaf).or_default().push((si, score));
            }
        }
        let mut evictions = Vec::new();
        for (leaf, holders) in claims.iter().filter(|(_, h)| h.len() > 1) {
            let winner = holders
                .iter()
                .min_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)))
                .unwrap()
                .0;
            for &(si, _) in holders {
                if si != winner {
                    evictions.push((si, *leaf));
                }
            }
        }
        if evictions.is_empty() {
            break;
        }
        for (si, leaf) in evictions {
            candidates[si].retain(|l| l.leaf_id != leaf);
        }
    }

    let provisional = top_k(&candidates);
    let mut placed = std::collections::BTreeSet::new();
    let sections = ranking
        .sections
        .iter()
        .zip(provisional)
        .map(|(s, leaves)| SectionPicks {
            section_id: s.section_id.clone(),
            leaves: leaves
                .into_iter()
                .map(|leaf| {
                    placed.insert(leaf);
                    let l = s.scores.iter().find(|l| l.leaf_id == leaf).unwrap();
                    Placement {
                        leaf_id: leaf,
                        cell_index: l.cell_index,
                        score: l.score,
                    }
                })
                .collect(),
        })
        .collect();
    let mut unassigned: Vec<NodeId> = ranking
        .sections
        .first()
        .map(|s| {
            s.scores
                .iter()
                .map(|l| l.leaf_id)
                .filter(|id| !placed.contains(id))
                .collect()
        })
        .unwrap_or_default();
    unassigned.sort_unstable();
    SectionAssignment {
        sections,
        unassigned,
    }
}

/// Image and table outputs of each section's assigned cells, taken from the
/// best-scoring cells first and capped at [`MAX_ATTACHMENTS`].
pub fn select_outputs(
    assignment: &SectionAssignment,
    doc: &NotebookDocument,
) -> Vec<(String, Vec<OutputArtifact>)> {
    assignment
        .sections
        .iter()
        .map(|picks| {
            let mut ordered: Vec<&Placement> = picks.leaves.iter().collect();
            ordered.sort_by(|a, b| {
                b.score
                    .total_cmp(&a.score)
                    .then(a.cell_index.cmp(&b.cell_index))
            });
            let artifacts = ordered
                .into_iter()
                .filter_map(|p| doc.cell(p.cell_index))
                .flat_map(|cell| cell.outputs.iter().filter(|o| o.is_visual()).cloned())
                .take(MAX_ATTACHMENTS)
                .collect();
            (picks.section_id.clone(), artifacts)
        })
        .collect()
}
