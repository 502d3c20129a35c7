//! Entropy of the two-color Potts tone lift from strip transfer matrices,
//! against the closed form obtained from the exact free energy.
//!
//! `cargo run --release --example entropy -- [N] [max width]`

use std::sync::Arc;

use sftlab::burton_steif::{htop_identity_report, lift, onsager_htop};
use sftlab::models::potts::extrapolate;
use sftlab::models::potts_cross_spec;

fn main() -> sftlab::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let n = args.first().copied().unwrap_or(2) as u32;
    let wmax = args.get(1).copied().unwrap_or(4);
    let (spec, phi) = potts_cross_spec(2)?;
    let l = lift(Arc::new(spec), phi, n)?;
    let widths: Vec<usize> = (2..=wmax).collect();
    let rows = htop_identity_report(&l, &widths, 20_000_000)?;
    println!("width,lifted,base");
    for r in &rows {
        println!("{},{:.10},{:.10}", r.width, r.lifted, r.base);
    }
    let pts: Vec<(usize, f64)> = rows.iter().map(|r| (r.width, r.lifted)).collect();
    let ext = extrapolate(&pts);
    let exact = onsager_htop(n)?;
    println!("extrapolated,{ext:.10}");
    println!("closed_form,{exact:.10}");
    println!("difference,{:.3e}", (ext - exact).abs());
    Ok(())
}
