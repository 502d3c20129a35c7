//! Allowed cross patches of the vertex model, split by the center symbol,
//! next to the transfer-matrix trace that predicts the ⊙ count.

use sftlab::models::vertex::m_matrix;
use sftlab::models::{vertex_spec, VertexSymbol};

fn main() {
    let (spec, _) = vertex_spec();
    let patches = spec.allowed_patches().expect("explicit allowed list");
    let mut counts = std::collections::BTreeMap::new();
    for p in &patches {
        *counts.entry(format!("{:?}", VertexSymbol::of(p[0]).kind())).or_insert(0) += 1;
    }
    println!("allowed {}", patches.len());
    for (k, c) in &counts {
        println!("  center {k:<9} {c}");
    }
    let m = m_matrix();
    let mut p = m;
    for _ in 0..3 {
        let mut q = [[0u64; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                q[i][j] = (0..4).map(|k| p[i][k] * m[k][j]).sum();
            }
        }
        p = q;
    }
    println!("trace M^4 = {}", (0..4).map(|i| p[i][i]).sum::<u64>());
}
