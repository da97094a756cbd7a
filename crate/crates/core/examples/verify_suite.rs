//! Runs the invariant suites and prints one line per check.
//!
//! `cargo run --example verify_suite -- full` runs the full draw counts.

use klreg::experiment::{run_verify, Level};

fn main() {
    let level = match std::env::args().nth(1).as_deref() {
        Some("full") => Level::Full,
        _ => Level::Fast,
    };
    let start = std::time::Instant::now();
    let report = run_verify(level);
    println!("{report}");
    println!("elapsed {:.1?}", start.elapsed());
}
