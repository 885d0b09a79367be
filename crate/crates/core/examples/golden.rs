//! Explain the 2016 to 2017 bonus change of the bundled employee table.
//!
//! ```text
//! cargo run --example golden
//! cargo run --example golden -- 1.0   # rank by accuracy only
//! ```

use std::path::Path;

use chardiff::prelude::*;
use chardiff::report::{Report, RunMetadata};

fn main() -> chardiff::Result<()> {
    let alpha: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.5);
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let opts = LoadOptions::new("name");
    let source = load_snapshot(dir.join("employees_2016.csv"), &opts)?;
    let target = load_snapshot(dir.join("employees_2017.csv"), &opts)?;
    let pair = align(&source, &target, "name")?;
    let frame = Frame::new(&pair, "bonus")?;

    let config = DiscoveryConfig::new("bonus")
        .with_pools(["edu", "exp", "gen"], ["bonus", "salary"])
        .with_limits(2, 1)
        .with_alpha(alpha)
        .with_top_n(5);
    let ranked = run_pipeline(&frame, &config)?;
    let report = Report {
        metadata: RunMetadata::new(&frame, "employees_2016.csv", "employees_2017.csv"),
        ranked,
    };
    print!("{}", report.to_markdown());
    Ok(())
}
