//! Encircling contour counts against the transfer-matrix bound, and the
//! τ flip removing a planted loop.

use sftlab::contours::{enumerate_encircling_loops, extract, peierls_bound, tau_flip, beta_star, encircling_loops};
use sftlab::gibbs::energy;
use sftlab::models::vertex_spec;

fn main() -> sftlab::Result<()> {
    println!("beta* = {:.12}", beta_star());
    println!("ell,count,bound,P_bound(beta=1.5)");
    for ell in [8, 10, 12, 14] {
        let c = enumerate_encircling_loops(ell)?;
        println!("{ell},{},{:.3e},{:.3e}", c.count, c.bound, peierls_bound(1.5, ell));
    }
    let (_, phi) = vertex_spec();
    let l = &encircling_loops(10, 10_000_000)?[0];
    let p = l.embed(2);
    let c = extract(&p)?;
    let flipped = tau_flip(&p, &c.paths[0])?;
    println!(
        "planted loop of length {}: H = {} before, {} after the flip",
        c.paths[0].len(),
        energy(&phi, &p)?,
        energy(&phi, &flipped)?
    );
    Ok(())
}
