mod common;

use nbdeck_core::eval::{evaluate_corpus, EvalError, REPORT_HEADER};
use nbdeck_core::{Audience, DeckConfig, DetailLevel};

fn config() -> DeckConfig {
    DeckConfig::new("Evaluation", "", Audience::Technical, DetailLevel::Standard)
}

#[test]
fn report_has_the_table_columns_and_sane_values() {
    let dir = common::fixtures().join("eval");
    let report = evaluate_corpus(&dir.join("corpus"), &dir.join("gold"), &config()).unwrap();
    assert_eq!(report.corpus_size, 3);
    assert_eq!(report.rows.len(), 10);
    let csv = report.to_csv().unwrap();
    assert_eq!(csv.lines().next().unwrap(), REPORT_HEADER.join(","));
    for row in &report.rows {
        assert!(row.occurrence <= report.corpus_size);
        match row.avg_error_rate {
            Some(r) => assert!((0.0..=1.0).contains(&r) && row.occurrence > 0),
            None => assert_eq!(row.occurrence, 0),
        }
    }
}

#[test]
fn mislabeled_fixture_reports_one_in_three() {
    let dir = common::fixtures().join("eval-mislabeled");
    let report = evaluate_corpus(&dir.join("corpus"), &dir.join("gold"), &config()).unwrap();
    let eda = report.row("eda").unwrap();
    assert_eq!(eda.occurrence, 1);
    assert_eq!(format!("{:.6}", eda.avg_error_rate.unwrap()), "0.333333");
    assert!(report.to_csv().unwrap().contains("\neda,1,0.333333\n"));
}

#[test]
fn missing_gold_fails_before_work() {
    let dir = common::fixtures().join("eval");
    let empty = tempfile::tempdir().unwrap();
    assert!(matches!(
        evaluate_corpus(&dir.join("corpus"), empty.path(), &config()),
        Err(EvalError::MissingGold(_))
    ));
}

#[test]
fn malformed_notebooks_are_skipped() {
    let tmp = tempfile::tempdir().unwrap();
    let (corpus, gold) = (tmp.path().join("c"), tmp.path().join("g"));
    std::fs::create_dir_all(&corpus).unwrap();
    std::fs::create_dir_all(&gold).unwrap();
    std::fs::write(corpus.join("bad.ipynb"), "{").unwrap();
    std::fs::write(gold.join("bad.gold.json"), r#"{"labels": {}}"#).unwrap();
    let report = evaluate_corpus(&corpus, &gold, &config()).unwrap();
    assert_eq!(report.corpus_size, 0);
    assert_eq!(report.skipped.len(), 1);
    assert!(report.rows.iter().all(|r| r.occurrence == 0));
}
