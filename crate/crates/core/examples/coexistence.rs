//! Boundary sensitivity of the vertex lift: center-site ⊙ frequency under
//! ⊙ and ⊗ pinnings for a few tone counts.
//!
//! `cargo run --release --example coexistence -- [sweeps] [size] [replicates] [N...]`

use sftlab::sampling::{phase_scan, Family, ScanConfig};

fn main() -> sftlab::Result<()> {
    let args: Vec<u32> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let sweeps = args.first().copied().unwrap_or(400) as usize;
    let size = args.get(1).copied().unwrap_or(16) as i32;
    let replicates = args.get(2).copied().unwrap_or(2) as usize;
    let params = if args.len() > 3 { args[3..].to_vec() } else { vec![1, 3] };
    let cfg = ScanConfig {
        family: Family::VertexLift,
        params,
        size: (size, size),
        sweeps,
        thin: 10,
        replicates,
        seed: 1,
        block: 4,
    };
    let r = phase_scan(&cfg)?;
    println!("N,gap,err");
    for s in &r.summary {
        println!("{},{:.4},{:.4}", s.param, s.gap, s.err);
    }
    Ok(())
}
