//! Which attributes move with the bonus change?

use std::path::Path;

use chardiff::prelude::*;
use chardiff::report::shortlist_markdown;

fn main() -> chardiff::Result<()> {
    let target = std::env::args().nth(1).unwrap_or_else(|| "bonus".into());
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let opts = LoadOptions::new("name");
    let pair = align(
        &load_snapshot(dir.join("employees_2016.csv"), &opts)?,
        &load_snapshot(dir.join("employees_2017.csv"), &opts)?,
        "name",
    )?;
    let delta = compute_delta(&pair, &target)?;
    println!("{} of {} rows changed\n", delta.changed_count(), pair.len());

    let shortlist = shortlist_attributes(&Frame::new(&pair, &target)?, 0.5)?;
    print!("{}", shortlist_markdown(&shortlist));
    let (cond, tran) = shortlist.default_pools(3, 2);
    println!("\ndefault pools: conditions {cond:?}, transformations {tran:?}");
    Ok(())
}
