//! Strip pressures of the two-color Potts model against the exact value.

use sftlab::gibbs::{beta_critical_potts, onsager_minus_beta_f};
use sftlab::models::potts::{extrapolate, strip_pressures};

fn main() -> sftlab::Result<()> {
    println!("beta_c = {:.9}", beta_critical_potts(2));
    println!("beta,strip_w8,extrapolated,exact,diff");
    for beta in [0.3, 0.7, 1.0, 1.5] {
        let p = strip_pressures(2, beta, &[4, 5, 6, 7, 8]);
        let ext = extrapolate(&p);
        let exact = onsager_minus_beta_f(beta)?;
        println!("{beta},{:.8},{ext:.8},{exact:.8},{:.2e}", p[p.len() - 1].1, (ext - exact).abs());
    }
    Ok(())
}
