//! Tone lifts and finite-volume checks of the correspondence between
//! their uniform conditionals and Gibbs conditionals of the base model.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Pow};
use rand::Rng;

use crate::error::{Error, Result};
use crate::gibbs::{big_to_f64, gibbs_conditional, onsager_htop_real, partition_function, Interaction};
use crate::lattice::{Patch, Symbol, Volume};
use crate::sft::{enumerate_patches, strip_transfer_matrix, SearchOptions, SftSpec, Wrap};

/// Largest lifted alphabet `lift` will build.
pub const ALPHABET_CAP: usize = 1 << 16;

/// A base SFT with a hypothesis-H energy and its `N`-tone lift.
#[derive(Debug, Clone)]
pub struct ToneLift {
    pub base: Arc<SftSpec>,
    pub phi: Interaction,
    pub n: u32,
    pub lifted: Arc<SftSpec>,
    /// `N^(max S - s)` indexed by the level `s`.
    pub tone_counts: Vec<u64>,
    /// Set when the lifted rules are stricter than the plain lift.
    pub custom_rules: bool,
    color: Vec<Symbol>,
    tone: Vec<u32>,
    first: Vec<Symbol>,
}

/// Level sets `γ^s` of a patch.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSets {
    pub gamma: BTreeMap<u32, Volume>,
}

pub fn level_sets(phi: &Interaction, a: &Patch) -> LevelSets {
    let mut gamma: BTreeMap<u32, Vec<_>> = phi.levels().iter().map(|&s| (s, Vec::new())).collect();
    for (z, x) in a.iter() {
        gamma.entry(phi.level(x)).or_default().push(z);
    }
    LevelSets { gamma: gamma.into_iter().map(|(s, v)| (s, Volume::new(v))).collect() }
}

pub fn beta_n(n: u32, eps0: f64) -> f64 {
    (n as f64).ln() / eps0
}

/// The plain tone lift: a lifted cross patch is allowed iff its colors are.
pub fn lift(base: Arc<SftSpec>, phi: Interaction, n: u32) -> Result<ToneLift> {
    let color_rules = base.clone();
    lift_with_rules(base, color_rules, phi, n, false)
}

/// Tone lift whose colors must satisfy `color_rules`, a spec over the same
/// alphabet as `base` that may forbid more than `base` does.
pub fn lift_with_rules(
    base: Arc<SftSpec>,
    color_rules: Arc<SftSpec>,
    phi: Interaction,
    n: u32,
    custom_rules: bool,
) -> Result<ToneLift> {
    if n == 0 {
        return Err(Error::Invalid("N must be positive".into()));
    }
    if phi.alphabet_size() != base.alphabet_size() || color_rules.alphabet_size() != base.alphabet_size() {
        return Err(Error::Invalid("interaction and rules must share the base alphabet".into()));
    }
    let max_s = phi.max_level();
    let tone_counts: Vec<u64> = (0..=max_s).map(|s| (n as u64).pow(max_s - s)).collect();
    let total: u64 = (0..base.alphabet_size() as Symbol).map(|a| tone_counts[phi.level(a) as usize]).sum();
    if total as usize > ALPHABET_CAP {
        return Err(Error::AlphabetBudgetExceeded(total as usize));
    }
    let mut names = Vec::new();
    let mut color = Vec::new();
    let mut tone = Vec::new();
    let mut first = Vec::new();
    for a in 0..base.alphabet_size() as Symbol {
        first.push(color.len() as Symbol);
        let k = tone_counts[phi.level(a) as usize];
        for t in 0..k {
            let name = &base.names()[a as usize];
            names.push(if k == 1 { name.clone() } else { format!("{name}.{t}") });
            color.push(a);
            tone.push(t as u32);
        }
    }
    let lifted = Arc::new(SftSpec::lifted(names, color_rules, color.clone()));
    Ok(ToneLift { base, phi, n, lifted, tone_counts, custom_rules, color, tone, first })
}

impl ToneLift {
    pub fn beta(&self) -> f64 {
        beta_n(self.n, self.phi.eps0())
    }

    /// The rules colors of lifted patches obey.
    pub fn color_rules(&self) -> &Arc<SftSpec> {
        self.lifted.color_base().expect("lifted spec").0
    }

    pub fn color(&self, s: Symbol) -> Symbol {
        self.color[s as usize]
    }

    pub fn tone(&self, s: Symbol) -> u32 {
        self.tone[s as usize]
    }

    pub fn symbol(&self, color: Symbol, tone: u32) -> Symbol {
        debug_assert!((tone as u64) < self.tones_of(color));
        self.first[color as usize] + tone
    }

    pub fn tones_of(&self, color: Symbol) -> u64 {
        self.tone_counts[self.phi.level(color) as usize]
    }

    /// Color projection.
    pub fn project(&self, p: &Patch) -> Patch {
        p.map(|s| self.color[s as usize])
    }
}

/// `Π_s N_s^{|γ^s(a)|}`.
pub fn omega_fiber_count(lift: &ToneLift, a: &Patch) -> BigUint {
    let mut by_level = vec![0u32; lift.tone_counts.len()];
    for &x in a.symbols() {
        by_level[lift.phi.level(x) as usize] += 1;
    }
    by_level
        .iter()
        .enumerate()
        .fold(BigUint::one(), |acc, (s, &k)| acc * Pow::pow(BigUint::from(lift.tone_counts[s]), k))
}

fn lifted_support(lift: &ToneLift, v: &Volume, boundary: &Patch, margin: i32) -> Result<Vec<(Patch, BigUint)>> {
    let opts = SearchOptions { classes: true, margin: Some(margin), collect: true, ..SearchOptions::default() };
    Ok(enumerate_patches(&lift.lifted, v, Some(boundary), &opts)?.patches)
}

/// Relative deviation between `|Ω_Λ(x)|` and `N^(max S |Λ|) Z_{β_N}(Λ, π_c x)`.
pub fn verify_counting_identity(lift: &ToneLift, v: &Volume, boundary: &Patch, margin: i32) -> Result<f64> {
    let omega: BigUint = lifted_support(lift, v, boundary, margin)?.iter().map(|(_, m)| m).sum();
    let z = partition_function(lift.color_rules(), &lift.phi, lift.beta(), v, &lift.project(boundary), margin)?;
    let scale = (lift.n as f64).powi((lift.phi.max_level() as usize * v.len()) as i32);
    let rhs = scale * z;
    Ok((big_to_f64(&omega) - rhs).abs() / rhs)
}

/// Largest `|1/|Ω_Λ(x)| - μ_{β_N}(π_c a | π_c x) / |Ω_Λ(a, x)||` over the
/// lifted interiors `a`.
pub fn verify_lemma(lift: &ToneLift, v: &Volume, boundary: &Patch, margin: i32) -> Result<f64> {
    let sup = lifted_support(lift, v, boundary, margin)?;
    let omega: BigUint = sup.iter().map(|(_, m)| m).sum();
    let uniform = 1.0 / big_to_f64(&omega);
    let g = gibbs_conditional(lift.color_rules(), &lift.phi, lift.beta(), v, &lift.project(boundary), margin)?;
    let mut mu: HashMap<Vec<Symbol>, f64> =
        g.support.iter().zip(&g.probs).map(|(p, &q)| (p.symbols().to_vec(), q)).collect();
    let mut dev: f64 = 0.0;
    for (p, _) in &sup {
        let a = lift.project(p);
        let m = mu.remove(a.symbols()).unwrap_or(0.0);
        let fiber = big_to_f64(&omega_fiber_count(lift, &a));
        dev = dev.max((uniform - m / fiber).abs());
    }
    // colors the lift never produced
    for (_, m) in mu {
        dev = dev.max(m);
    }
    Ok(dev)
}

/// Attach independent uniform tones to a color patch.
pub fn lift_sample<R: Rng + ?Sized>(lift: &ToneLift, color_patch: &Patch, rng: &mut R) -> Patch {
    color_patch.map(|a| {
        let k = lift.tones_of(a);
        let t = if k == 1 { 0 } else { rng.gen_range(0..k) as u32 };
        lift.symbol(a, t)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HtopRow {
    pub width: usize,
    /// `log λ / w` of the unweighted lifted strip matrix.
    pub lifted: f64,
    /// `β_N ε0 max S + log λ_β / w` of the weighted base strip matrix.
    pub base: f64,
}

/// Per-width comparison of the lifted entropy and the base pressure.
pub fn htop_identity_report(lift: &ToneLift, widths: &[usize], state_budget: usize) -> Result<Vec<HtopRow>> {
    let beta = lift.beta();
    let phi = &lift.phi;
    let weight = |a: Symbol| phi.weight(beta, a);
    let shift = beta * phi.eps0() * phi.max_level() as f64;
    widths
        .iter()
        .map(|&w| {
            let tl = strip_transfer_matrix(&lift.lifted, w, None, Wrap::Cylinder, state_budget)?;
            let tb = strip_transfer_matrix(lift.color_rules(), w, Some(&weight), Wrap::Cylinder, state_budget)?;
            let el = tl.leading_eigenvalue(1e-13, 100_000);
            let eb = tb.leading_eigenvalue(1e-13, 100_000);
            Ok(HtopRow { width: w, lifted: el.lambda.ln() / w as f64, base: shift + eb.lambda.ln() / w as f64 })
        })
        .collect()
}

/// Closed form of the lifted entropy for the two-color cross coding.
pub fn onsager_htop(n: u32) -> Result<f64> {
    if n < 2 {
        return Err(Error::Invalid("closed form needs N >= 2".into()));
    }
    onsager_htop_real(n as f64)
}
