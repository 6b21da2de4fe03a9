//! Runs the eleven acceptance criteria at full size and prints one line per
//! criterion. Positional numeric arguments restrict the run, e.g.
//! `cargo test --test acceptance -- 1 2 3`.

use std::process::ExitCode;

use vortexnoise::acceptance::{run_criterion, AcceptanceOptions, CRITERIA};

fn main() -> ExitCode {
    let picked: Vec<u8> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .filter(|id| CRITERIA.contains(id))
        .collect();
    let ids = if picked.is_empty() { CRITERIA.to_vec() } else { picked };
    let opts = AcceptanceOptions::default();
    let mut failed = Vec::new();
    for id in ids {
        let start = std::time::Instant::now();
        let r = run_criterion(id, &opts);
        println!("{}  [{:.0?}]", r.summary_line(), start.elapsed());
        for c in &r.checks {
            println!("    [{}] {}: {}", if c.pass { "ok" } else { "!!" }, c.label, c.detail);
        }
        if !r.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
