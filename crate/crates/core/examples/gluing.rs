//! Empirical gluing distances: random admissible patches placed at a given
//! Chebyshev gap and tested for a joint extension.
//!
//! `cargo run --release --example gluing -- [trials]`

use sftlab::models::{edge_potts_spec, vertex_spec};
use sftlab::sft::{default_budget, gluing_check};

fn main() -> sftlab::Result<()> {
    let trials = std::env::args().nth(1).map(|a| a.parse().expect("integer argument")).unwrap_or(100);
    let (vertex, _) = vertex_spec();
    let edge = edge_potts_spec(2, 3);
    println!("model,gap,pairs,failures,budget,no_sample");
    for (name, spec, gaps) in [("vertex", &vertex, vec![1, 3, 5, 7]), ("edge-potts:2:3", &edge, vec![1, 2])] {
        for gap in gaps {
            let r = gluing_check(spec, gap, 2, trials, 1, default_budget())?;
            println!(
                "{name},{gap},{},{},{},{}",
                r.pairs_tested,
                r.failures.len(),
                r.budget_exceeded,
                r.sampling_failures
            );
        }
    }
    Ok(())
}
