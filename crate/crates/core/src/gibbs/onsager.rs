//! Closed-form free energy of the square-lattice two-state model and
//! related critical constants.

use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature with bisection until the summed
/// error estimate is below `tol`.
pub fn gauss_kronrod(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let mut parts = vec![(a, b, gk15(f, a, b))];
    for _ in 0..2000 {
        let err: f64 = parts.iter().map(|p| p.2 .1).sum();
        if err <= tol {
            return Ok(parts.iter().map(|p| p.2 .0).sum());
        }
        let (i, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.partial_cmp(&y.1 .2 .1).unwrap())
            .unwrap();
        let (lo, hi, _) = parts.swap_remove(i);
        let mid = 0.5 * (lo + hi);
        parts.push((lo, mid, gk15(f, lo, mid)));
        parts.push((mid, hi, gk15(f, mid, hi)));
    }
    Err(Error::QuadratureFailure(parts.iter().map(|p| p.2 .0).sum()))
}

/// `sqrt(1 + k^2 - 2k cos 2t) / k` written to stay finite for huge `k`.
fn radical(kappa: f64, t: f64) -> f64 {
    let inv = 1.0 / kappa;
    (inv * inv + 1.0 - 2.0 * inv * (2.0 * t).cos()).max(0.0).sqrt()
}

/// `(1/2π) ∫_0^π log(c + sqrt(1+κ²-2κ cos 2φ)/κ) dφ`, split at π/2 where
/// the integrand has its kink at criticality.
fn onsager_integral(c: f64, kappa: f64) -> Result<f64> {
    let f = |t: f64| (c + radical(kappa, t)).ln();
    let a = gauss_kronrod(&f, 0.0, PI / 2.0, 5e-11)?;
    let b = gauss_kronrod(&f, PI / 2.0, PI, 5e-11)?;
    Ok((a + b) / (2.0 * PI))
}

/// `-β f(β)` for the two-state model with energy one per disagreeing bond.
pub fn onsager_minus_beta_f(beta: f64) -> Result<f64> {
    if beta <= 0.0 || !beta.is_finite() {
        return Err(Error::Invalid(format!("beta must be positive, got {beta}")));
    }
    let sh = beta.sinh();
    let kappa = 1.0 / (sh * sh);
    let ch = beta.cosh();
    Ok(-beta + LN_2 / 2.0 + onsager_integral(ch * ch, kappa)?)
}

/// `h_top` of the tone lift of the two-color cross coding, evaluated from
/// its closed form at real `n > 1`.
pub fn onsager_htop_real(n: f64) -> Result<f64> {
    if n <= 1.0 {
        return Err(Error::Invalid(format!("N must exceed 1, got {n}")));
    }
    let n2 = n * n;
    let n4 = n2 * n2;
    let kappa = (2.0 * n2 / (n4 - 1.0)).powi(2);
    let c = ((n4 + 1.0) / (2.0 * n2)).powi(2);
    Ok(2.0 * n.ln() + LN_2 / 2.0 + onsager_integral(c, kappa)?)
}

/// `log(sqrt(q) + 1) / 2`.
pub fn beta_critical_potts(q: u32) -> f64 {
    ((q as f64).sqrt() + 1.0).ln() / 2.0
}

/// `sqrt(q) + 1`.
pub fn ell_critical(q: u32) -> f64 {
    (q as f64).sqrt() + 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_basics() {
        let v = gauss_kronrod(&|x: f64| x.sin(), 0.0, PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        let l = gauss_kronrod(&|x: f64| x.sqrt(), 0.0, 1.0, 1e-10).unwrap();
        assert!((l - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn high_and_low_temperature_limits() {
        let hot = onsager_minus_beta_f(0.1).unwrap();
        assert!(hot <= LN_2 && hot >= LN_2 - 0.1);
        assert!(onsager_minus_beta_f(10.0).unwrap() < 1e-3);
        assert!(onsager_minus_beta_f(10.0).unwrap().abs() < 1e-3);
    }

    #[test]
    fn pressure_is_convex() {
        let h = 0.05;
        let p: Vec<f64> = (1..60).map(|i| onsager_minus_beta_f(i as f64 * h).unwrap()).collect();
        for w in p.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-8);
        }
        // evaluation exactly at the critical point
        assert!(onsager_minus_beta_f((1.0 + 2f64.sqrt()).ln()).is_ok());
    }

    #[test]
    fn htop_closed_form_is_the_lifted_pressure() {
        for n in [2.0f64, 3.0, 5.0] {
            let beta = 2.0 * n.ln();
            let direct = onsager_htop_real(n).unwrap();
            let via = beta * 2.0 + onsager_minus_beta_f(beta).unwrap();
            assert!((direct - via).abs() < 1e-9, "{n}: {direct} vs {via}");
        }
        assert!((onsager_htop_real(1.0 + 1e-9).unwrap() - LN_2).abs() < 1e-6);
        assert!(onsager_htop_real(3.0).unwrap() >= 2.0 * 3f64.ln());
    }

    #[test]
    fn constants() {
        assert!((beta_critical_potts(2) - 0.44068679).abs() < 1e-6);
        assert!((beta_critical_potts(3) - 0.50252678).abs() < 1e-6);
        assert!((beta_critical_potts(4) - 3f64.ln() / 2.0).abs() < 1e-12);
        assert!((ell_critical(4) - 3.0).abs() < 1e-15);
        assert!((ell_critical(9) - 4.0).abs() < 1e-15);
    }
}
