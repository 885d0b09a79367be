//! Generate datasets with a known summary and check that the search finds it.
//!
//! ```text
//! cargo run --release --example planted -- 0 20
//! ```

use std::collections::BTreeSet;
use std::time::Instant;

use chardiff::discovery::run_pipeline;
use chardiff::frame::Frame;
use chardiff::synthetic::{PlantedDataset, TARGET};

fn main() -> chardiff::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (from, to) = match args.as_slice() {
        [a, b, ..] => (*a, *b),
        [a] => (0, *a),
        [] => (0, 20),
    };
    let start = Instant::now();
    let mut recovered = 0;
    for seed in from..to {
        let ds = PlantedDataset::generate(seed);
        let frame = Frame::new(&ds.pair()?, TARGET)?;
        let ranked = run_pipeline(&frame, &ds.config())?;
        let top = &ranked.entries[0];
        let planted: BTreeSet<String> = ds.rules.iter().map(|r| r.condition.to_string()).collect();
        let found: BTreeSet<String> = top
            .cts
            .iter()
            .filter(|ct| !ct.transformation.is_identity())
            .map(|ct| ct.condition.to_string())
            .collect();
        let ok = top.score.accuracy == 1.0;
        recovered += ok as usize;
        println!(
            "seed {seed:>3}: accuracy {:.4}, score {:.4}, {} planted / {} found{}",
            top.score.accuracy,
            top.score.score,
            planted.len(),
            top.non_identity_count(),
            if planted == found {
                ""
            } else {
                " (different conditions)"
            }
        );
    }
    println!(
        "{recovered}/{} recovered at rank 1 in {:.2?}",
        to - from,
        start.elapsed()
    );
    Ok(())
}
