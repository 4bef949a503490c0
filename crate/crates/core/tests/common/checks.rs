//! Whole-deck invariants shared by the integration and acceptance suites.

use nbdeck_core::deck::{BulletOrigin, SlideDeck, SlidePatch};
use nbdeck_core::notebook::{CellKind, NotebookDocument};
use nbdeck_core::summarizer::token_count;
use nbdeck_core::template::{template_for, Audience, SectionMode};
use nbdeck_core::DetailLevel;
use proptest::prelude::*;

/// (group, title) rows of the outline tables, in order.
pub const TECHNICAL_OUTLINE: &[(&str, &str)] = &[
    ("Introduction", "Purpose and Intended use"),
    ("Introduction", "Workflow"),
    ("Data", "Data Source"),
    ("Data", "Exploratory Data Analysis"),
    ("Data", "Data Cleaning"),
    ("Data", "Feature Engineering"),
    ("Model", "Model Input"),
    ("Model", "Model Output"),
    ("Model", "Optimization Goal"),
    ("Model", "Model Alternatives"),
    ("Model", "Model Details"),
    ("Model Performance", "Metrics"),
    ("Model Performance", "Performance"),
    ("Model Performance", "Model Interpretation"),
    ("Conclusion", "Suggestions"),
    ("Conclusion", "Ethical & Legal considerations"),
    ("Conclusion", "Limitation & Risks"),
];

pub const NONTECHNICAL_OUTLINE: &[(&str, &str)] = &[
    ("Introduction", "Purpose and Intended use"),
    ("Introduction", "Workflow"),
    ("Introduction", "Data Source"),
    ("Model", "Model Input"),
    ("Model", "Model Output"),
    ("Model", "Optimization Goal"),
    ("Model Performance", "Metrics"),
    ("Model Performance", "Performance"),
    ("Model Performance", "Model Interpretation"),
    ("Conclusion", "Suggestions"),
    ("Conclusion", "Ethical & Legal considerations"),
    ("Conclusion", "Limitation & Risks"),
    ("Appendix: Data", "Exploratory Data Analysis"),
    ("Appendix: Data", "Data Cleaning"),
    ("Appendix: Data", "Feature Engineering"),
    ("Appendix: Model", "Model Alternatives"),
    ("Appendix: Model", "Model Details"),
];

pub fn check_outline(audience: Audience) -> Result<(), String> {
    let expected = match audience {
        Audience::Technical => TECHNICAL_OUTLINE,
        Audience::Nontechnical => NONTECHNICAL_OUTLINE,
    };
    let t = template_for(audience);
    let got: Vec<(&str, &str)> = t
        .sections
        .iter()
        .map(|s| (s.parent_section.as_str(), s.title.as_str()))
        .collect();
    if got != expected {
        return Err(format!("{audience:?} outline differs: {got:?}"));
    }
    let mut groups: Vec<&str> = got.iter().map(|g| g.0).collect();
    groups.dedup();
    let want_groups = if audience == Audience::Technical {
        5
    } else {
        6
    };
    if groups.len() != want_groups {
        return Err(format!(
            "{audience:?}: groups {groups:?} are not contiguous"
        ));
    }
    Ok(())
}

/// Every provenance cell exists and is a code cell, similarities lie in
/// [tau, 1], and cells are non-decreasing within a slide.
pub fn check_provenance(deck: &SlideDeck, doc: &NotebookDocument) -> Result<(), String> {
    let tau = deck.generator_metadata.tau;
    for slide in &deck.slides {
        let mut last = 0;
        for bullet in &slide.bullets {
            if bullet.origin == BulletOrigin::Generated && bullet.provenance.is_empty() {
                return Err(format!("{}: generated bullet without provenance", slide.id));
            }
            for p in &bullet.provenance {
                match doc.cell(p.cell_index) {
                    Some(c) if c.kind == CellKind::Code => {}
                    _ => {
                        return Err(format!(
                            "{}: cell {} is not a code cell",
                            slide.id, p.cell_index
                        ))
                    }
                }
                if !(tau..=1.0).contains(&p.similarity) {
                    return Err(format!(
                        "{}: similarity {} outside [{tau}, 1]",
                        slide.id, p.similarity
                    ));
                }
                if p.cell_index < last {
                    return Err(format!(
                        "{}: cell {} after cell {last}",
                        slide.id, p.cell_index
                    ));
                }
                last = p.cell_index;
            }
        }
    }
    Ok(())
}

/// Every generated bullet not flagged short reaches the detail level's
/// minimum token count.
pub fn check_length(deck: &SlideDeck, detail: DetailLevel) -> Result<(), String> {
    let min = detail.min_tokens();
    for slide in &deck.slides {
        for b in slide
            .bullets
            .iter()
            .filter(|b| b.origin == BulletOrigin::Generated && !b.short)
        {
            let n = token_count(&b.text);
            if n < min {
                return Err(format!("{}: {n} tokens < {min}: {:?}", slide.id, b.text));
            }
        }
    }
    Ok(())
}

/// Slides follow the template: a title page, then one slide per section.
pub fn check_structure(deck: &SlideDeck, audience: Audience) -> Result<(), String> {
    let t = template_for(audience);
    if deck.slides.len() != t.sections.len() + 1 {
        return Err(format!(
            "{} slides for {} sections",
            deck.slides.len(),
            t.sections.len()
        ));
    }
    for (slide, section) in deck.slides[1..].iter().zip(&t.sections) {
        if slide.section_id.as_deref() != Some(section.id.as_str()) {
            return Err(format!("slide {} out of template order", slide.id));
        }
        if section.mode == SectionMode::Prompt && !slide.example_prompt {
            return Err(format!("prompt slide {} has no example", slide.id));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub enum Edit {
    Retitle(usize, String),
    Bullets(usize, Vec<String>),
    KeepFirst(usize),
    Add(usize, String),
    Delete(usize),
}

const EDIT_WORDS: &[&str] = &[
    "Revenue", "grew", "**bold**", "`code`", "émigré", "注意", "<b>", "&", "\"q\"", "12.5%",
];

fn text(max: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(EDIT_WORDS), 1..=max).prop_map(|w| w.join(" "))
}

pub fn edit() -> impl Strategy<Value = Edit> {
    prop_oneof![
        (any::<usize>(), text(4)).prop_map(|(i, t)| Edit::Retitle(i, t)),
        (any::<usize>(), prop::collection::vec(text(8), 0..4))
            .prop_map(|(i, b)| Edit::Bullets(i, b)),
        any::<usize>().prop_map(Edit::KeepFirst),
        (any::<usize>(), text(3)).prop_map(|(i, t)| Edit::Add(i, t)),
        any::<usize>().prop_map(Edit::Delete),
    ]
}

/// Apply an edit to the slide picked by index modulo the deck length;
/// rejected edits (deleting the title page) are ignored.
pub fn apply(deck: &mut SlideDeck, e: &Edit) {
    let pick = |i: &usize| deck.slides[i % deck.slides.len()].id.clone();
    let _ = match e {
        Edit::Retitle(i, t) => deck.edit_slide(
            &pick(i),
            &SlidePatch {
                title: Some(t.clone()),
                bullets: None,
            },
        ),
        Edit::Bullets(i, b) => deck.edit_slide(
            &pick(i),
            &SlidePatch {
                title: None,
                bullets: Some(b.clone()),
            },
        ),
        Edit::KeepFirst(i) => {
            let id = pick(i);
            let kept = deck
                .slide(&id)
                .unwrap()
                .bullets
                .iter()
                .take(1)
                .map(|b| b.text.clone())
                .collect();
            deck.edit_slide(
                &id,
                &SlidePatch {
                    title: None,
                    bullets: Some(kept),
                },
            )
        }
        Edit::Add(i, t) => deck.add_slide(&pick(i), t).map(|_| ()),
        Edit::Delete(i) => deck.delete_slide(&pick(i)),
    };
}

/// A generated deck for a random notebook and configuration, then edited.
pub fn edited_deck() -> impl Strategy<Value = (NotebookDocument, SlideDeck)> {
    (
        super::notebook(12),
        prop::sample::select(&[Audience::Technical, Audience::Nontechnical][..]),
        prop::sample::select(
            &[
                DetailLevel::Brief,
                DetailLevel::Standard,
                DetailLevel::Detailed,
            ][..],
        ),
        text(4),
        prop::collection::vec(edit(), 0..10),
    )
        .prop_map(|(cells, audience, detail, title, edits)| {
            let doc = super::to_doc(&cells);
            let config = nbdeck_core::DeckConfig::new(title, "Presenter", audience, detail);
            let mut deck = nbdeck_core::generate_deck(&doc, &config).expect("generation");
            for e in &edits {
                apply(&mut deck, e);
            }
            (doc, deck)
        })
}
