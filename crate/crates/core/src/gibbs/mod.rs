//! One-letter interactions, finite-volume Gibbs conditionals and the
//! exact two-dimensional free energy.

mod onsager;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::lattice::{Patch, Symbol, Volume};
use crate::sft::{enumerate_patches, SearchOptions, SftSpec};

pub use onsager::{beta_critical_potts, ell_critical, gauss_kronrod, onsager_htop_real, onsager_minus_beta_f};

/// A one-letter energy with values in `eps0 * S`.
#[derive(Debug, Clone, PartialEq)]
pub struct Interaction {
    eps0: f64,
    levels: Vec<u32>,
    level_of: Vec<u32>,
}

impl Interaction {
    pub fn from_levels(eps0: f64, level_of: Vec<u32>) -> Self {
        let mut levels = level_of.clone();
        levels.sort_unstable();
        levels.dedup();
        Interaction { eps0, levels, level_of }
    }

    pub fn eps0(&self) -> f64 {
        self.eps0
    }

    /// The set S, sorted.
    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn max_level(&self) -> u32 {
        *self.levels.last().unwrap_or(&0)
    }

    pub fn level(&self, a: Symbol) -> u32 {
        self.level_of[a as usize]
    }

    pub fn level_table(&self) -> &[u32] {
        &self.level_of
    }

    pub fn energy_of(&self, a: Symbol) -> f64 {
        self.eps0 * self.level_of[a as usize] as f64
    }

    pub fn alphabet_size(&self) -> usize {
        self.level_of.len()
    }

    /// Sum of levels over a patch.
    pub fn level_sum(&self, p: &Patch) -> Result<u64> {
        p.symbols()
            .iter()
            .map(|&a| {
                self.level_of.get(a as usize).map(|&l| l as u64).ok_or_else(|| Error::UnknownSymbol(format!("#{a}")))
            })
            .sum()
    }

    /// Boltzmann weight `exp(-beta * eps0 * s)` of one symbol.
    pub fn weight(&self, beta: f64, a: Symbol) -> f64 {
        (-beta * self.energy_of(a)).exp()
    }
}

/// Find `eps0` and integer levels for a table of nonnegative energies.
///
/// `eps0` is the largest number of the form `min_positive / k` of which
/// every value is an integer multiple, up to a relative tolerance of 1e-9.
pub fn validate_hypothesis_h(energies: &[f64]) -> Result<Interaction> {
    if let Some(e) = energies.iter().find(|e| !e.is_finite() || **e < 0.0) {
        return Err(Error::NotCommensurable(format!("energy {e} is negative or not finite")));
    }
    let vmax = energies.iter().cloned().fold(0.0, f64::max);
    let tol = 1e-9 * vmax.max(1.0);
    let vmin = energies.iter().cloned().filter(|&e| e > tol).fold(f64::INFINITY, f64::min);
    if !vmin.is_finite() {
        return Ok(Interaction::from_levels(1.0, vec![0; energies.len()]));
    }
    for k in 1..=10_000u32 {
        let eps0 = vmin / k as f64;
        let ok = energies.iter().all(|&e| {
            let m = (e / eps0).round();
            (e - m * eps0).abs() <= tol
        });
        if ok {
            let levels = energies.iter().map(|&e| (e / eps0).round() as u32).collect();
            return Ok(Interaction::from_levels(eps0, levels));
        }
    }
    Err(Error::NotCommensurable(format!("no common step found for values up to {vmax}")))
}

pub fn energy(phi: &Interaction, p: &Patch) -> Result<f64> {
    Ok(phi.eps0 * phi.level_sum(p)? as f64)
}

/// Exact conditional distribution on a finite volume.
#[derive(Debug, Clone)]
pub struct GibbsConditional {
    pub volume: Volume,
    pub boundary: Patch,
    pub beta: f64,
    pub support: Vec<Patch>,
    pub probs: Vec<f64>,
}

impl GibbsConditional {
    pub fn prob_of(&self, p: &Patch) -> f64 {
        self.support.iter().position(|q| q == p).map_or(0.0, |i| self.probs[i])
    }
}

fn support(spec: &SftSpec, v: &Volume, boundary: &Patch, margin: i32) -> Result<Vec<(Patch, BigUint)>> {
    let opts = SearchOptions { margin: Some(margin), collect: true, ..SearchOptions::default() };
    let e = enumerate_patches(spec, v, Some(boundary), &opts)?;
    if e.patches.is_empty() {
        return Err(Error::EmptySupport);
    }
    Ok(e.patches)
}

/// Interior level sums of the margin-extendable support.
fn level_sums(spec: &SftSpec, phi: &Interaction, v: &Volume, boundary: &Patch, margin: i32) -> Result<(Vec<Patch>, Vec<u64>)> {
    let sup = support(spec, v, boundary, margin)?;
    let mut patches = Vec::with_capacity(sup.len());
    let mut sums = Vec::with_capacity(sup.len());
    for (p, _) in sup {
        sums.push(phi.level_sum(&p)?);
        patches.push(p);
    }
    Ok((patches, sums))
}

/// `Z_beta(v, boundary)`: sum of `exp(-beta H)` over margin-extendable
/// interiors, with H summing interior letters only.
pub fn partition_function(
    spec: &SftSpec,
    phi: &Interaction,
    beta: f64,
    v: &Volume,
    boundary: &Patch,
    margin: i32,
) -> Result<f64> {
    let (_, sums) = level_sums(spec, phi, v, boundary, margin)?;
    Ok(sums.iter().map(|&s| (-beta * phi.eps0 * s as f64).exp()).sum())
}

pub fn gibbs_conditional(
    spec: &SftSpec,
    phi: &Interaction,
    beta: f64,
    v: &Volume,
    boundary: &Patch,
    margin: i32,
) -> Result<GibbsConditional> {
    let (support, sums) = level_sums(spec, phi, v, boundary, margin)?;
    // subtract the minimum to keep weights in range at large beta
    let smin = *sums.iter().min().unwrap();
    let w: Vec<f64> = sums.iter().map(|&s| (-beta * phi.eps0 * (s - smin) as f64).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(GibbsConditional {
        volume: v.clone(),
        boundary: boundary.clone(),
        beta,
        support,
        probs: w.iter().map(|x| x / z).collect(),
    })
}

pub(crate) fn big_to_f64(b: &BigUint) -> f64 {
    b.to_f64().unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{boundary, make_box, Metric, Site};
    use crate::sft::{block_recode, full_shift, potts_pair_interaction};

    #[test]
    fn hypothesis_h_detection() {
        let phi = validate_hypothesis_h(&[0.0, 0.5, 1.0, 1.5, 2.0]).unwrap();
        assert_eq!(phi.eps0(), 0.5);
        assert_eq!(phi.levels(), &[0, 1, 2, 3, 4]);
        let v = validate_hypothesis_h(&[1.0, 0.0, 1.0]).unwrap();
        assert_eq!((v.eps0(), v.levels()), (1.0, &[0u32, 1][..]));
        let z = validate_hypothesis_h(&[0.0, 0.0]).unwrap();
        assert_eq!((z.eps0(), z.levels()), (1.0, &[0u32][..]));
        let g = validate_hypothesis_h(&[2.0, 3.0]).unwrap();
        assert_eq!(g.eps0(), 1.0);
        assert!(matches!(validate_hypothesis_h(&[1.0, std::f64::consts::PI]), Err(Error::NotCommensurable(_))));
    }

    #[test]
    fn single_site_two_term_sum() {
        let spec = full_shift(2);
        let phi = Interaction::from_levels(1.0, vec![0, 1]);
        let z = partition_function(&spec, &phi, 0.7, &make_box(0), &Patch::empty(), 1).unwrap();
        assert!((z - (1.0 + (-0.7f64).exp())).abs() < 1e-15);
        let z0 = partition_function(&spec, &phi, 0.0, &make_box(0), &Patch::empty(), 1).unwrap();
        assert_eq!(z0, 2.0);
    }

    #[test]
    fn potts_cross_conditional_ratio() {
        // interior: a site and its four neighbors; three neighbors share a
        // color with the outer ring, so the center sees 3 agree / 1 disagree.
        let (spec, phi) = block_recode(&full_shift(2), &potts_pair_interaction()).unwrap();
        let v = boundary(&make_box(0), 1, Metric::L1).union(&make_box(0));
        let ring = boundary(&v, 1, Metric::L1);
        let spins = |z: Site| -> u32 { (z.x >= 1) as u32 };
        let letter = |z: Site| -> u32 {
            crate::lattice::Window::cross().offsets().iter().rev().fold(0, |c, &o| c * 2 + spins(z + o))
        };
        let b = Patch::from_fn(ring, letter);
        let g = gibbs_conditional(&spec, &phi, 1.0, &v, &b, 2).unwrap();
        assert_eq!(g.support.len(), 2);
        let p0 = g.support.iter().position(|p| p.get(Site::ORIGIN).unwrap() % 2 == 0).unwrap();
        let ratio = g.probs[p0] / g.probs[1 - p0];
        assert!((ratio - 2f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn conditional_is_invariant_under_energy_shift() {
        let spec = full_shift(3);
        let a = Interaction::from_levels(1.0, vec![0, 1, 2]);
        let b = Interaction::from_levels(1.0, vec![3, 4, 5]);
        let v = Volume::rect(0, 0, 2, 1);
        let ga = gibbs_conditional(&spec, &a, 0.9, &v, &Patch::empty(), 1).unwrap();
        let gb = gibbs_conditional(&spec, &b, 0.9, &v, &Patch::empty(), 1).unwrap();
        let dev = ga.probs.iter().zip(&gb.probs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(dev <= 1e-12);
        assert!((ga.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
