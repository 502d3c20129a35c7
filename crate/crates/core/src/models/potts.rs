//! The q-state Potts model coded on cross-shaped letters.

use rand::Rng;

use crate::burton_steif::{lift_sample, ToneLift};
use crate::error::{Error, Result};
use crate::gibbs::Interaction;
use crate::lattice::{boundary, Metric, Patch, Site, Symbol, Volume, Window};
use crate::sft::{block_recode, full_shift, potts_pair_interaction, SftSpec, TransferMatrix};

const LETTER_CAP: u64 = 1024;

/// Cross coding of the `q`-color full shift with energy one half per
/// disagreeing neighbor on each letter, so homogeneous letters cost 0.
pub fn potts_cross_spec(q: u32) -> Result<(SftSpec, Interaction)> {
    if q < 2 {
        return Err(Error::Invalid("q must be at least 2".into()));
    }
    let letters = (q as u64).pow(5);
    if letters > LETTER_CAP {
        return Err(Error::AlphabetBudgetExceeded(letters as usize));
    }
    block_recode(&full_shift(q as usize), &potts_pair_interaction())
}

/// The letter seen at `z` by a spin field: colors at `z, z+e1, z+e2,
/// z-e1, z-e2` as base-`q` digits, lowest first.
pub fn letter_at(q: u32, spins: impl Fn(Site) -> u32, z: Site) -> Symbol {
    Window::cross().offsets().iter().rev().fold(0, |c, &o| c * q + spins(z + o))
}

/// Letters over `v` from a spin patch covering `v` fattened by one.
pub fn cross_letters(q: u32, spins: &Patch, v: &Volume) -> Patch {
    Patch::from_fn(v.clone(), |z| letter_at(q, |s| spins.get(s).expect("spin patch too small"), z))
}

/// Spin of the center of a letter.
pub fn center_color(q: u32, letter: Symbol) -> u32 {
    letter % q
}

/// Lifted letters on the unit L1 ring around `v`, from uniform random
/// spins and uniform tones.
pub fn random_lifted_boundary<R: Rng + ?Sized>(lift: &ToneLift, q: u32, v: &Volume, rng: &mut R) -> Patch {
    let ring = boundary(v, 1, Metric::L1);
    let field = v.fatten(2, Metric::Linf);
    let spins = Patch::from_fn(field, |_| rng.gen_range(0..q));
    let letters = cross_letters(q, &spins, &ring);
    lift_sample(lift, &letters, rng)
}

/// Column transfer matrix of the spin model on a cylinder of circumference
/// `w`, weights `exp(-beta * disagreeing bonds)` per new column.
pub fn spin_transfer_matrix(q: u32, w: usize, beta: f64) -> TransferMatrix {
    let n = (q as usize).pow(w as u32);
    let digits = |c: usize| -> Vec<u32> {
        let mut c = c;
        (0..w)
            .map(|_| {
                let d = (c % q as usize) as u32;
                c /= q as usize;
                d
            })
            .collect()
    };
    let cols: Vec<Vec<u32>> = (0..n).map(digits).collect();
    let vertical: Vec<u32> =
        cols.iter().map(|c| (0..w).filter(|&i| w > 1 && c[i] != c[(i + 1) % w]).count() as u32).collect();
    let mut entries = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let h = (0..w).filter(|&i| cols[a][i] != cols[b][i]).count() as u32;
            entries.push((a as u32, b as u32, (-beta * (h + vertical[b]) as f64).exp()));
        }
    }
    let initial = vertical.iter().map(|&v| (-beta * v as f64).exp()).collect();
    let states = cols.into_iter().collect();
    TransferMatrix::from_triplets(w, states, entries, initial)
}

/// `log λ / w` of the spin matrix for each width.
pub fn strip_pressures(q: u32, beta: f64, widths: &[usize]) -> Vec<(usize, f64)> {
    widths
        .iter()
        .map(|&w| {
            let e = spin_transfer_matrix(q, w, beta).leading_eigenvalue(1e-13, 100_000);
            (w, e.lambda.ln() / w as f64)
        })
        .collect()
}

/// Limit estimate assuming `p(w) = p + a / w^2` from the two widest strips.
pub fn extrapolate(values: &[(usize, f64)]) -> f64 {
    match values {
        [] => f64::NAN,
        [(_, v)] => *v,
        _ => {
            let (w1, p1) = values[values.len() - 2];
            let (w2, p2) = values[values.len() - 1];
            let (a, b) = ((w1 * w1) as f64, (w2 * w2) as f64);
            (b * p2 - a * p1) / (b - a)
        }
    }
}
