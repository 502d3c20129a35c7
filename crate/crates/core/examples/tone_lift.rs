//! Build the two-color Potts tone lift and check, box by box, that uniform
//! lifted conditionals reproduce the Gibbs conditionals at β_N.
//!
//! `cargo run --release --example tone_lift -- [N] [cases]`

use std::sync::Arc;

use sftlab::burton_steif::{lift, verify_counting_identity, verify_lemma};
use sftlab::lattice::Volume;
use sftlab::models::potts::random_lifted_boundary;
use sftlab::models::potts_cross_spec;
use sftlab::rng::stream;

fn main() -> sftlab::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let n = args.first().copied().unwrap_or(2) as u32;
    let cases = args.get(1).copied().unwrap_or(10);
    let (spec, phi) = potts_cross_spec(2)?;
    let l = lift(Arc::new(spec), phi, n)?;
    println!("N = {n}: {} lifted symbols, beta_N = {:.6}", l.lifted.alphabet_size(), l.beta());
    for side in [2, 3] {
        let v = Volume::rect(0, 0, side, side);
        let (mut count, mut lemma) = (0.0f64, 0.0f64);
        for i in 0..cases {
            let b = random_lifted_boundary(&l, 2, &v, &mut stream(&[7, side as u64, i]));
            count = count.max(verify_counting_identity(&l, &v, &b, 1)?);
            lemma = lemma.max(verify_lemma(&l, &v, &b, 1)?);
        }
        println!("{side}x{side}: counting rel. dev {count:.2e}, lemma abs. dev {lemma:.2e}");
    }
    Ok(())
}
