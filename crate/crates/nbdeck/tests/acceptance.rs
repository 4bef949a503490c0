//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;
mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::checks::{check_length, check_outline, check_provenance, check_structure, edited_deck};
use common::matching::{greedy, picks_of, stable_assignments};
use nbdeck_core::embedding::EmbedderHandle;
use nbdeck_core::eval::{evaluate_corpus, REPORT_HEADER};
use nbdeck_core::export::to_canonical_json;
use nbdeck_core::matcher::{assign_cells, rank_sections, DEFAULT_GAMMA, DEFAULT_TAU};
use nbdeck_core::notebook::CellKind;
use nbdeck_core::template::{template_for, Audience, OutlineTemplate, SectionMode};
use nbdeck_core::tree::{build_tree, NodeKind};
use nbdeck_core::{export_deck, generate_deck, import_deck, DeckConfig, DeckFormat, DetailLevel};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const AUDIENCES: [Audience; 2] = [Audience::Technical, Audience::Nontechnical];
const LEVELS: [DetailLevel; 3] = [
    DetailLevel::Brief,
    DetailLevel::Standard,
    DetailLevel::Detailed,
];

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn template_fidelity() -> Outcome {
    check_outline(Audience::Technical)?;
    check_outline(Audience::Nontechnical)?;
    Ok("both outlines match the published tables, 17 subsections each".into())
}

fn tree_invariants() -> Outcome {
    let paths = common::corpus_paths();
    if paths.len() < 21 {
        return Err(format!("only {} corpus notebooks", paths.len()));
    }
    for path in &paths {
        let doc = common::load(path);
        let tree = build_tree(&doc);
        tree.verify(&doc)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        let code = doc
            .cells
            .iter()
            .filter(|c| c.kind == CellKind::Code)
            .count();
        let leaves: Vec<_> = tree.leaves().collect();
        if leaves.len() != code
            || leaves
                .iter()
                .any(|l| l.kind != NodeKind::Code || !l.children.is_empty())
        {
            return Err(format!(
                "{}: leaves are not exactly the code cells",
                path.display()
            ));
        }
        for audience in AUDIENCES {
            generate_deck(
                &doc,
                &DeckConfig::new("T", "", audience, DetailLevel::Standard),
            )
            .map_err(|e| format!("{}: {e}", path.display()))?;
        }
    }
    Ok(format!(
        "{} notebooks: coverage, leaves, monotone headers, generation",
        paths.len()
    ))
}

/// The technical outline keeping only `autos` (by auto-section position)
/// with the given capacities.
fn reduced_template(autos: &[(usize, usize)]) -> OutlineTemplate {
    let mut t = template_for(Audience::Technical);
    let mut pos = 0;
    t.sections.retain_mut(|s| {
        if s.mode != SectionMode::Auto {
            return true;
        }
        let keep = autos.iter().find(|(i, _)| *i == pos).map(|(_, k)| *k);
        pos += 1;
        if let Some(k) = keep {
            s.k = k;
        }
        keep.is_some()
    });
    t
}

fn matching_oracle() -> Outcome {
    let strategy = (
        common::notebook(26).prop_filter("at most 20 leaves", |cells| {
            cells
                .iter()
                .filter(|c| matches!(c, common::GenCell::Code(_)))
                .count()
                <= 20
        }),
        prop::sample::subsequence((0..10).collect::<Vec<_>>(), 1..=5)
            .prop_flat_map(|idx| {
                let n = idx.len();
                (Just(idx), prop::collection::vec(1usize..=3, n))
            })
            .prop_map(|(idx, ks)| idx.into_iter().zip(ks).collect::<Vec<_>>()),
    );
    let exhaustive = std::cell::Cell::new(0);
    let placed = std::cell::Cell::new(0);
    let result = runner(200).run(&strategy, |(cells, autos)| {
        let doc = common::to_doc(&cells);
        let tree = build_tree(&doc);
        let template = reduced_template(&autos);
        let (ranking, _) = rank_sections(
            &doc,
            &tree,
            &template,
            &EmbedderHandle::builtin(),
            DEFAULT_GAMMA,
        )
        .unwrap();
        let a = assign_cells(&ranking, DEFAULT_TAU);
        prop_assert_eq!(picks_of(&a), greedy(&ranking, DEFAULT_TAU));
        let n = tree.leaves().count() as u32;
        if (ranking.sections.len() as u64 + 1).pow(n) <= 50_000 {
            let stable = stable_assignments(&ranking, DEFAULT_TAU);
            prop_assert_eq!(stable, vec![picks_of(&a)]);
            exhaustive.set(exhaustive.get() + 1);
        }
        let mut seen = std::collections::BTreeSet::new();
        for (picks, s) in a.sections.iter().zip(&ranking.sections) {
            prop_assert!(picks.leaves.len() <= s.k);
            for p in &picks.leaves {
                prop_assert!(p.score >= DEFAULT_TAU);
                prop_assert!(seen.insert(p.leaf_id));
            }
        }
        placed.set(placed.get() + seen.len());
        Ok(())
    });
    result.map_err(|e| e.to_string())?;
    Ok(format!(
        "200 notebooks equal the oracle ({} also exhaustively), {} placements",
        exhaustive.get(),
        placed.get()
    ))
}

fn determinism() -> Outcome {
    let doc = common::load(&common::fixtures().join("demo/wine_quality.ipynb"));
    let code = doc.code_cells().count();
    if code != 19 {
        return Err(format!("demo notebook has {code} code cells"));
    }
    let config = DeckConfig::new(
        "Wine quality",
        "Demo presenter",
        Audience::Technical,
        DetailLevel::Standard,
    );
    let a = to_canonical_json(&generate_deck(&doc, &config).map_err(|e| e.to_string())?);
    let b = to_canonical_json(&generate_deck(&doc, &config).map_err(|e| e.to_string())?);
    if a != b {
        return Err("two runs differ".into());
    }
    let golden = std::fs::read_to_string(common::fixtures().join("golden/wine_quality.deck.json"))
        .map_err(|e| format!("golden file: {e}"))?;
    if a != golden {
        return Err("deck differs from the committed golden file".into());
    }
    Ok(format!(
        "byte-identical runs equal the golden file ({} bytes)",
        a.len()
    ))
}

/// Every corpus deck in every configuration, checked by `check`.
fn over_corpus(
    check: impl Fn(
        &nbdeck_core::SlideDeck,
        &nbdeck_core::NotebookDocument,
        DetailLevel,
    ) -> Result<(), String>,
) -> Result<(usize, usize), String> {
    let (mut decks, mut bullets) = (0, 0);
    for path in common::corpus_paths() {
        let doc = common::load(&path);
        for audience in AUDIENCES {
            for detail in LEVELS {
                let deck = generate_deck(&doc, &DeckConfig::new("T", "", audience, detail))
                    .map_err(|e| e.to_string())?;
                check(&deck, &doc, detail)
                    .map_err(|e| format!("{} {audience:?} {detail:?}: {e}", path.display()))?;
                decks += 1;
                bullets += deck
                    .slides
                    .iter()
                    .flat_map(|s| &s.bullets)
                    .filter(|b| !b.provenance.is_empty())
                    .count();
            }
        }
    }
    Ok((decks, bullets))
}

fn provenance() -> Outcome {
    let (decks, bullets) = over_corpus(|deck, doc, _| {
        check_structure(deck, deck.config.audience)?;
        check_provenance(deck, doc)
    })?;
    if bullets == 0 {
        return Err("no generated bullets at all".into());
    }
    Ok(format!("{decks} decks, {bullets} generated bullets"))
}

fn length_contract() -> Outcome {
    let (decks, _) = over_corpus(|deck, _, detail| check_length(deck, detail))?;
    let strategy = (common::notebook(14), prop::sample::select(&LEVELS[..]));
    runner(64)
        .run(&strategy, |(cells, detail)| {
            let deck = generate_deck(
                &common::to_doc(&cells),
                &DeckConfig::new("T", "", Audience::Technical, detail),
            )
            .unwrap();
            prop_assert_eq!(check_length(&deck, detail), Ok(()));
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!(
        "4/8/12 tokens held on {decks} corpus decks and 64 random notebooks"
    ))
}

fn round_trip() -> Outcome {
    runner(100)
        .run(&edited_deck(), |(_, deck)| {
            let bytes = export_deck(&deck, DeckFormat::CanonicalJson).payload;
            let back = import_deck(&bytes).unwrap();
            prop_assert_eq!(&back, &deck);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("100 edited decks survive export and import".into())
}

fn eval_report() -> Outcome {
    let config = DeckConfig::new("Evaluation", "", Audience::Technical, DetailLevel::Standard);
    let dir = common::fixtures().join("eval");
    let report = evaluate_corpus(&dir.join("corpus"), &dir.join("gold"), &config)
        .map_err(|e| e.to_string())?;
    let csv = report.to_csv().map_err(|e| e.to_string())?;
    if csv.lines().next() != Some(REPORT_HEADER.join(",").as_str()) || report.corpus_size != 3 {
        return Err(format!("unexpected report shape:\n{csv}"));
    }
    for row in &report.rows {
        let rate_ok = row.avg_error_rate.is_none_or(|r| (0.0..=1.0).contains(&r));
        if row.occurrence > report.corpus_size || !rate_ok {
            return Err(format!("bad row {row:?}"));
        }
    }
    let bad = common::fixtures().join("eval-mislabeled");
    let report = evaluate_corpus(&bad.join("corpus"), &bad.join("gold"), &config)
        .map_err(|e| e.to_string())?;
    let eda = report
        .row("eda")
        .and_then(|r| r.avg_error_rate)
        .map(|r| format!("{r:.6}"));
    if eda.as_deref() != Some("0.333333") {
        return Err(format!("mislabeled fixture gives eda rate {eda:?}"));
    }
    Ok("columns section,occurrence,avg_error_rate; mislabeled eda 0.333333".into())
}

fn service_contract() -> Outcome {
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    rt.block_on(async {
        let api = support::Api::new(support::start_builtin().await);
        let a = support::scripted_session(&api).await?;
        let b = support::interleaved_edits(&api, 10).await?;
        Ok(format!("{a}; {b}"))
    })
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("template fidelity", template_fidelity),
        ("tree invariants", tree_invariants),
        ("matching oracle equivalence", matching_oracle),
        ("determinism", determinism),
        ("provenance soundness", provenance),
        ("length contract", length_contract),
        ("round trip", round_trip),
        ("eval report shape", eval_report),
        ("service contract", service_contract),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name} ({secs:.1}s): {detail}"),
            Err(e) => {
                failed += 1;
                println!("FAIL {name} ({secs:.1}s): {e}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
