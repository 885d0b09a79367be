//! Write a change summary by hand, score it and replay it cell by cell.

use std::collections::BTreeMap;
use std::path::Path;

use chardiff::prelude::*;
use chardiff::summary::{apply_summary, Provenance, Scoring};

fn rate(r: f64, b: f64) -> LinearTransformation {
    LinearTransformation::new(BTreeMap::from([("bonus".to_string(), r)]), b, "bonus")
}

fn main() -> chardiff::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let opts = LoadOptions::new("name");
    let pair = align(
        &load_snapshot(dir.join("employees_2016.csv"), &opts)?,
        &load_snapshot(dir.join("employees_2017.csv"), &opts)?,
        "name",
    )?;
    let frame = Frame::new(&pair, "bonus")?;

    let ms = Predicate::equals("edu", "MS");
    let rules = vec![
        (
            Condition::new(vec![Predicate::equals("edu", "PhD")])?,
            rate(1.05, 1000.0),
        ),
        (
            Condition::new(vec![ms.clone(), Predicate::less_than("exp", 3.0)])?,
            rate(1.03, 400.0),
        ),
        (
            Condition::new(vec![ms, Predicate::at_least("exp", 3.0)])?,
            rate(1.04, 800.0),
        ),
    ];
    let summary = ChangeSummary::build("bonus", rules, &frame, Provenance::default(), &Scoring::default())?;

    println!("{}\n", summary.to_tree().render());
    let replayed = apply_summary(&summary, &pair)?;
    for (i, v) in replayed.iter().enumerate() {
        let observed = pair.target_cell(i, "bonus").and_then(|c| c.as_decimal());
        let mark = if observed == Some(*v) { "" } else { "  <- differs" };
        println!(
            "{:<6} {:>6} -> {:>6}{mark}",
            frame.keys()[i],
            frame.old()[i],
            v.normalize()
        );
    }
    let s = summary.score;
    println!(
        "\naccuracy {:.4}, interpretability {:.4} (size {:.3}, simplicity {:.3}, coverage {:.3}, normality {:.3}), score {:.4}",
        s.accuracy, s.interpretability, s.f_size, s.f_simplicity, s.f_coverage, s.f_normality, s.score
    );
    Ok(())
}
