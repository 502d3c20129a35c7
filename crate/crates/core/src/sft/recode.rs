//! Recoding a finite-range interaction into a one-letter energy on
//! cross-shaped letters.

use std::collections::{BTreeSet, HashMap};
use std::ops::ControlFlow;
use std::sync::Arc;

use super::search::{enumerate_patches, Problem, SearchOptions};
use super::SftSpec;
use crate::error::{Error, Result};
use crate::gibbs::{validate_hypothesis_h, Interaction};
use crate::lattice::{Patch, Site, Symbol, Volume, Window};

const LETTER_CAP: usize = 4096;
const UNION_CAP: usize = 4_000_000;

/// One translation class of interaction terms: `energy` is evaluated on
/// the symbols at `shape` (in the listed order).
#[derive(Clone)]
pub struct InteractionTerm {
    pub shape: Vec<Site>,
    pub energy: Arc<dyn Fn(&[Symbol]) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for InteractionTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InteractionTerm").field("shape", &self.shape).finish_non_exhaustive()
    }
}

/// Translation-invariant interaction given by finitely many term shapes.
#[derive(Debug, Clone, Default)]
pub struct FiniteRangeInteraction {
    pub terms: Vec<InteractionTerm>,
}

impl FiniteRangeInteraction {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `Σ_U Φ_U(x_U) |U ∩ region| / |U|` over translates U meeting `region`.
    /// Every such translate must lie inside `x`.
    pub fn weighted_energy(&self, x: &Patch, region: &Volume) -> f64 {
        let mut total = 0.0;
        for t in &self.terms {
            let mut anchors = BTreeSet::new();
            for &s in region.sites() {
                for &u in &t.shape {
                    anchors.insert(s - u);
                }
            }
            for a in anchors {
                let inside = t.shape.iter().filter(|&&u| region.contains(a + u)).count();
                let syms: Vec<Symbol> =
                    t.shape.iter().map(|&u| x.get(a + u).expect("term translate outside patch")).collect();
                total += (t.energy)(&syms) * inside as f64 / t.shape.len() as f64;
            }
        }
        total
    }

    /// Sites of term translates that contain the origin.
    pub fn reach(&self) -> BTreeSet<Site> {
        let mut out = BTreeSet::new();
        for t in &self.terms {
            for &u in &t.shape {
                out.extend(t.shape.iter().map(|&v| v - u));
            }
        }
        out
    }
}

/// Nearest-neighbor Potts interaction counting disagreeing bonds.
pub fn potts_pair_interaction() -> FiniteRangeInteraction {
    let e: Arc<dyn Fn(&[Symbol]) -> f64 + Send + Sync> = Arc::new(|s: &[Symbol]| (s[0] != s[1]) as u8 as f64);
    FiniteRangeInteraction {
        terms: vec![
            InteractionTerm { shape: vec![Site::new(0, 0), Site::new(1, 0)], energy: e.clone() },
            InteractionTerm { shape: vec![Site::new(0, 0), Site::new(0, 1)], energy: e },
        ],
    }
}

/// The full shift on `q` symbols named `0..q`.
pub fn full_shift(q: usize) -> SftSpec {
    let names = (0..q).map(|i| i.to_string()).collect();
    SftSpec::from_allowed(names, Window::single(), (0..q as Symbol).map(|a| vec![a]).collect())
        .expect("valid full shift")
}

/// Recode `spec` and `phi` as an SFT on the cross window whose letters are
/// admissible patches of the original on the letter shape (the window plus
/// every term translate through the origin). Allowed cross patches are the
/// letter arrangements read off admissible patches of the union shape, so
/// overlapping letters agree everywhere they meet. Returns the recoded spec
/// and the one-letter energy `Σ_{U∋o} Φ_U / |U|`.
pub fn block_recode(spec: &SftSpec, phi: &FiniteRangeInteraction) -> Result<(SftSpec, Interaction)> {
    let mut shape: BTreeSet<Site> = spec.window().offsets().iter().copied().collect();
    shape.extend(phi.reach());
    let cross = Window::cross();
    let order: Vec<Site> = if shape == cross.offsets().iter().copied().collect() {
        cross.offsets().to_vec()
    } else {
        let mut o: Vec<Site> = spec.window().offsets().to_vec();
        o.extend(shape.iter().filter(|s| !spec.window().offsets().contains(s)));
        o
    };
    let letter_vol = Volume::new(order.iter().copied());
    let opts = SearchOptions { margin: Some(2), collect: true, ..SearchOptions::default() };
    let found = enumerate_patches(spec, &letter_vol, None, &opts)?;
    if found.patches.len() > LETTER_CAP {
        return Err(Error::AlphabetBudgetExceeded(found.patches.len()));
    }
    let a = spec.alphabet_size() as u128;
    let mut letters: Vec<Vec<Symbol>> = found
        .patches
        .iter()
        .map(|(p, _)| order.iter().map(|&s| p.get(s).unwrap()).collect())
        .collect();
    let code = |l: &Vec<Symbol>| l.iter().rev().fold(0u128, |c, &s| c * a + s as u128);
    letters.sort_by_key(code);
    let index: HashMap<Vec<Symbol>, Symbol> =
        letters.iter().enumerate().map(|(i, l)| (l.clone(), i as Symbol)).collect();
    let short = spec.names().iter().all(|n| n.chars().count() == 1);
    let names: Vec<String> = letters
        .iter()
        .map(|l| {
            let parts: Vec<&str> = l.iter().map(|&s| spec.names()[s as usize].as_str()).collect();
            if short {
                parts.concat()
            } else {
                parts.join(".")
            }
        })
        .collect();

    let union = Volume::new(cross.offsets().iter().flat_map(|&z| order.iter().map(move |&l| z + l)));
    let (mut prob, sites) = Problem::on_lattice(spec, &Patch::empty(), &union, false);
    let pos: Vec<Vec<usize>> = cross
        .offsets()
        .iter()
        .map(|&z| order.iter().map(|&l| sites.binary_search(&(z + l)).unwrap()).collect())
        .collect();
    let mut allowed: Vec<Vec<Symbol>> = Vec::new();
    let mut over = false;
    let _ = prob.search(&SearchOptions::default(), |vals| {
        let mut row = Vec::with_capacity(5);
        for p in &pos {
            let l: Vec<Symbol> = p.iter().map(|&i| vals[i]).collect();
            match index.get(&l) {
                Some(&i) => row.push(i),
                None => return ControlFlow::Continue(()),
            }
        }
        allowed.push(row);
        if allowed.len() > UNION_CAP {
            over = true;
            return ControlFlow::Break(());
        }
        ControlFlow::Continue(())
    })?;
    if over {
        return Err(Error::AlphabetBudgetExceeded(allowed.len()));
    }
    allowed.sort();
    allowed.dedup();

    let energies: Vec<f64> = letters
        .iter()
        .map(|l| {
            let at = |s: Site| l[order.iter().position(|&o| o == s).unwrap()];
            let mut e = 0.0;
            for t in &phi.terms {
                for &u in &t.shape {
                    let syms: Vec<Symbol> = t.shape.iter().map(|&v| at(v - u)).collect();
                    e += (t.energy)(&syms) / t.shape.len() as f64;
                }
            }
            e
        })
        .collect();
    let recoded = SftSpec::from_allowed(names, cross, allowed)?;
    let inter = validate_hypothesis_h(&energies)?;
    Ok((recoded, inter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_box;
    use crate::sft::check_local;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn potts_recoding_has_cross_letters() {
        let (spec, phi) = block_recode(&full_shift(2), &potts_pair_interaction()).unwrap();
        assert_eq!(spec.alphabet_size(), 32);
        assert_eq!(spec.allowed_count(), Some(8192));
        assert_eq!(phi.eps0(), 0.5);
        assert_eq!(phi.levels(), &[0, 1, 2, 3, 4]);
        // letter index is the base-q number with the center as lowest digit
        assert_eq!(spec.names()[0b10110], "01101");
    }

    #[test]
    fn zero_interaction_recodes_to_zero() {
        let (spec, phi) = block_recode(&full_shift(3), &FiniteRangeInteraction::zero()).unwrap();
        assert_eq!(spec.alphabet_size(), 3);
        assert!((0..3).all(|a| phi.level(a) == 0));
        assert_eq!(phi.eps0(), 1.0);
    }

    fn letters_of(x: &Patch, v: &Volume) -> Patch {
        Patch::from_fn(v.clone(), |z| {
            let l: Vec<Symbol> = Window::cross().offsets().iter().map(|&o| x.get(z + o).unwrap()).collect();
            l.iter().rev().fold(0, |c, &s| c * 2 + s)
        })
    }

    #[test]
    fn recoding_preserves_energy_and_projects_back() {
        let (spec, phi) = block_recode(&full_shift(2), &potts_pair_interaction()).unwrap();
        let pair = potts_pair_interaction();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let x = Patch::from_fn(make_box(4), |_| rng.gen_range(0..2));
            let inner = make_box(3);
            let y = letters_of(&x, &inner);
            assert!(check_local(&spec, &y).unwrap());
            let direct = pair.weighted_energy(&x, &inner);
            let recoded: f64 = y.symbols().iter().map(|&b| phi.energy_of(b)).sum();
            assert!((direct - recoded).abs() < 1e-12);
            for (z, b) in y.iter() {
                assert_eq!(b % 2, x.get(z).unwrap());
            }
        }
    }
}
