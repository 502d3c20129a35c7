//! Subshifts of finite type: specifications, local admissibility,
//! search, recoding, gluing and strip transfer matrices.

mod format;
mod gluing;
mod recode;
mod search;
mod transfer;

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{Patch, Site, Symbol, Volume, Window};

pub use format::{parse_spec, write_spec};
pub use gluing::{gluing_check, random_admissible_patch, GluingReport};
pub use recode::{block_recode, full_shift, potts_pair_interaction, FiniteRangeInteraction, InteractionTerm};
pub use search::{
    check_extendable, default_budget, enumerate_patches, AdmissibilityReport, Enumeration, Problem,
    SearchOptions, ValueOrder,
};
pub use transfer::{strip_transfer_matrix, Eigen, TransferMatrix, Wrap};

/// Marks a site that has not been assigned yet during a search.
pub const UNSET: Symbol = Symbol::MAX;

/// Largest `(|A|+1)^k` for which partial-window lookups use a dense bitset.
const DENSE_LIMIT: u64 = 1 << 28;

#[derive(Debug, Clone)]
struct AllowedSet {
    codes: Vec<u64>,
    radix: u64,
    partial: Partial,
}

#[derive(Debug, Clone)]
enum Partial {
    Dense(Vec<u64>),
    Hashed(std::collections::HashSet<u64>),
}

impl AllowedSet {
    fn build(alphabet: usize, k: usize, patches: &[Vec<Symbol>]) -> Self {
        let radix = alphabet as u64 + 1;
        let mut codes: Vec<u64> = patches
            .iter()
            .map(|p| p.iter().rev().fold(0u64, |c, &a| c * alphabet as u64 + a as u64))
            .collect();
        codes.sort_unstable();
        codes.dedup();
        let total = radix.checked_pow(k as u32).unwrap_or(u64::MAX);
        let mut partial = if total <= DENSE_LIMIT {
            Partial::Dense(vec![0u64; (total as usize).div_ceil(64)])
        } else {
            Partial::Hashed(Default::default())
        };
        let mut buf = vec![0u64; k];
        for p in patches {
            for mask in 0u32..(1 << k) {
                for i in 0..k {
                    buf[i] = if mask >> i & 1 == 1 { alphabet as u64 } else { p[i] as u64 };
                }
                let c = buf.iter().rev().fold(0u64, |c, &a| c * radix + a);
                match &mut partial {
                    Partial::Dense(bits) => bits[(c >> 6) as usize] |= 1 << (c & 63),
                    Partial::Hashed(set) => {
                        set.insert(c);
                    }
                }
            }
        }
        AllowedSet { codes, radix, partial }
    }

    #[inline]
    fn admits(&self, syms: &[Symbol]) -> bool {
        let unset = self.radix - 1;
        let mut c = 0u64;
        for &a in syms.iter().rev() {
            c = c * self.radix + if a == UNSET { unset } else { a as u64 };
        }
        match &self.partial {
            Partial::Dense(bits) => bits[(c >> 6) as usize] >> (c & 63) & 1 == 1,
            Partial::Hashed(set) => set.contains(&c),
        }
    }
}

#[derive(Debug, Clone)]
enum Rule {
    Allowed(AllowedSet),
    /// Patterns over the window with `None` as wildcard.
    Forbidden(Vec<Vec<Option<Symbol>>>),
    /// Admissible iff the color image is admissible in `base`.
    Lifted { base: Arc<SftSpec>, color: Vec<Symbol> },
}

/// Alphabet, window and allowed-patch rule of a two-dimensional SFT.
#[derive(Debug, Clone)]
pub struct SftSpec {
    names: Vec<String>,
    window: Window,
    rule: Rule,
    class_of: Vec<u32>,
    classes: Vec<Vec<Symbol>>,
    freq: std::sync::OnceLock<Vec<Symbol>>,
}

impl SftSpec {
    /// Spec from an explicit list of allowed window patches (symbols in
    /// window-offset order). Symbols that occur in no allowed patch are
    /// pruned from the alphabet.
    pub fn from_allowed(names: Vec<String>, window: Window, allowed: Vec<Vec<Symbol>>) -> Result<Self> {
        let k = window.len();
        let a = names.len();
        for p in &allowed {
            if p.len() != k {
                return Err(Error::Invalid(format!("allowed patch of length {} for window of {k}", p.len())));
            }
            if let Some(&s) = p.iter().find(|&&s| s as usize >= a) {
                return Err(Error::UnknownSymbol(format!("#{s}")));
            }
        }
        let mut used = vec![false; a];
        for p in &allowed {
            for &s in p {
                used[s as usize] = true;
            }
        }
        let (names, allowed) = if used.iter().all(|&u| u) {
            (names, allowed)
        } else {
            let mut remap = vec![UNSET; a];
            let mut kept = Vec::new();
            for (i, n) in names.into_iter().enumerate() {
                if used[i] {
                    remap[i] = kept.len() as Symbol;
                    kept.push(n);
                }
            }
            let allowed = allowed.into_iter().map(|p| p.into_iter().map(|s| remap[s as usize]).collect()).collect();
            (kept, allowed)
        };
        let set = AllowedSet::build(names.len(), k, &allowed);
        Ok(Self::with_rule(names, window, Rule::Allowed(set)))
    }

    /// Spec given by forbidden patterns (`None` matches anything).
    pub fn from_forbidden(names: Vec<String>, window: Window, forbidden: Vec<Vec<Option<Symbol>>>) -> Result<Self> {
        for p in &forbidden {
            if p.len() != window.len() {
                return Err(Error::Invalid("forbidden pattern does not fit the window".into()));
            }
        }
        Ok(Self::with_rule(names, window, Rule::Forbidden(forbidden)))
    }

    /// Spec over a product alphabet whose admissibility only sees `color`.
    pub fn lifted(names: Vec<String>, base: Arc<SftSpec>, color: Vec<Symbol>) -> Self {
        let window = base.window.clone();
        Self::with_rule(names, window, Rule::Lifted { base, color })
    }

    fn with_rule(names: Vec<String>, window: Window, rule: Rule) -> Self {
        let (class_of, classes) = match &rule {
            Rule::Lifted { color, base } => {
                let mut classes: Vec<Vec<Symbol>> = Vec::new();
                let mut index: HashMap<u32, u32> = HashMap::new();
                let mut class_of = Vec::with_capacity(color.len());
                for (s, &c) in color.iter().enumerate() {
                    let key = base.class_of[c as usize];
                    let id = *index.entry(key).or_insert_with(|| {
                        classes.push(Vec::new());
                        classes.len() as u32 - 1
                    });
                    classes[id as usize].push(s as Symbol);
                    class_of.push(id);
                }
                (class_of, classes)
            }
            _ => ((0..names.len() as u32).collect(), (0..names.len() as Symbol).map(|s| vec![s]).collect()),
        };
        SftSpec { names, window, rule, class_of, classes, freq: Default::default() }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn alphabet_size(&self) -> usize {
        self.names.len()
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn symbol(&self, name: &str) -> Result<Symbol> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| i as Symbol)
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))
    }

    /// Interchangeable-symbol classes; nontrivial only for lifted specs.
    pub fn classes(&self) -> &[Vec<Symbol>] {
        &self.classes
    }

    pub fn class_of(&self, a: Symbol) -> u32 {
        self.class_of[a as usize]
    }

    pub fn has_nontrivial_classes(&self) -> bool {
        self.classes.len() < self.names.len()
    }

    /// The spec colors are checked against, for lifted specs.
    pub fn color_base(&self) -> Option<(&Arc<SftSpec>, &[Symbol])> {
        match &self.rule {
            Rule::Lifted { base, color } => Some((base, color)),
            _ => None,
        }
    }

    /// Allowed window patches, when the rule is an explicit list or a lift
    /// of one. `None` for forbidden-pattern specs.
    pub fn allowed_patches(&self) -> Option<Vec<Vec<Symbol>>> {
        let k = self.window.len();
        match &self.rule {
            Rule::Allowed(set) => {
                let a = self.names.len() as u64;
                Some(
                    set.codes
                        .iter()
                        .map(|&c| {
                            let mut c = c;
                            (0..k)
                                .map(|_| {
                                    let s = (c % a) as Symbol;
                                    c /= a;
                                    s
                                })
                                .collect()
                        })
                        .collect(),
                )
            }
            Rule::Forbidden(_) => None,
            Rule::Lifted { base, color } => {
                let mut fiber: Vec<Vec<Symbol>> = vec![Vec::new(); base.alphabet_size()];
                for (s, &c) in color.iter().enumerate() {
                    fiber[c as usize].push(s as Symbol);
                }
                let mut out = Vec::new();
                for p in base.allowed_patches()? {
                    let mut acc: Vec<Vec<Symbol>> = vec![Vec::new()];
                    for &c in &p {
                        let mut next = Vec::with_capacity(acc.len() * fiber[c as usize].len());
                        for prefix in &acc {
                            for &s in &fiber[c as usize] {
                                let mut q = prefix.clone();
                                q.push(s);
                                next.push(q);
                            }
                        }
                        acc = next;
                    }
                    out.extend(acc);
                }
                out.sort();
                Some(out)
            }
        }
    }

    pub fn allowed_count(&self) -> Option<u64> {
        match &self.rule {
            Rule::Allowed(set) => Some(set.codes.len() as u64),
            Rule::Forbidden(_) => None,
            Rule::Lifted { base, color } => {
                let mut sizes = vec![0u64; base.alphabet_size()];
                for &c in color {
                    sizes[c as usize] += 1;
                }
                Some(
                    base.allowed_patches()?
                        .iter()
                        .map(|p| p.iter().map(|&c| sizes[c as usize]).product::<u64>())
                        .sum(),
                )
            }
        }
    }

    pub fn forbidden_patterns(&self) -> Option<&[Vec<Option<Symbol>>]> {
        match &self.rule {
            Rule::Forbidden(f) => Some(f),
            _ => None,
        }
    }

    /// Whether a window assignment (entries may be [`UNSET`]) can still be
    /// completed to an allowed patch. Exact when no entry is unset.
    #[inline]
    pub fn admits(&self, syms: &[Symbol]) -> bool {
        match &self.rule {
            Rule::Allowed(set) => set.admits(syms),
            Rule::Forbidden(patterns) => !patterns.iter().any(|p| {
                p.iter().zip(syms).all(|(want, &got)| match want {
                    None => true,
                    Some(w) => got == *w,
                })
            }),
            Rule::Lifted { base, color } => {
                let mut buf = [UNSET; 32];
                if syms.len() <= 32 {
                    for (b, &s) in buf.iter_mut().zip(syms) {
                        *b = if s == UNSET { UNSET } else { color[s as usize] };
                    }
                    base.admits(&buf[..syms.len()])
                } else {
                    let v: Vec<Symbol> =
                        syms.iter().map(|&s| if s == UNSET { UNSET } else { color[s as usize] }).collect();
                    base.admits(&v)
                }
            }
        }
    }

    fn check_symbols(&self, p: &Patch) -> Result<()> {
        match p.symbols().iter().find(|&&s| s as usize >= self.names.len()) {
            Some(s) => Err(Error::UnknownSymbol(format!("#{s}"))),
            None => Ok(()),
        }
    }

    /// How often each symbol occurs in allowed patches; used to try common
    /// symbols first when looking for a single witness.
    pub fn frequency_order(&self) -> Vec<Symbol> {
        self.freq.get_or_init(|| self.compute_frequency_order()).clone()
    }

    fn compute_frequency_order(&self) -> Vec<Symbol> {
        if let Rule::Lifted { base, color } = &self.rule {
            // tones of a color are interchangeable
            let mut order = Vec::with_capacity(color.len());
            for c in base.frequency_order() {
                order.extend((0..color.len() as Symbol).filter(|&s| color[s as usize] == c));
            }
            return order;
        }
        let mut freq = vec![0u64; self.names.len()];
        match self.allowed_patches() {
            Some(ps) => {
                for p in ps {
                    for s in p {
                        freq[s as usize] += 1;
                    }
                }
            }
            None => {
                if let Some(f) = self.forbidden_patterns() {
                    for p in f {
                        for s in p.iter().flatten() {
                            freq[*s as usize] += 1;
                        }
                    }
                    // fewer occurrences in forbidden patterns is safer
                    let m = freq.iter().copied().max().unwrap_or(0);
                    for x in freq.iter_mut() {
                        *x = m - *x;
                    }
                }
            }
        }
        let mut order: Vec<Symbol> = (0..self.names.len() as Symbol).collect();
        order.sort_by(|&a, &b| freq[b as usize].cmp(&freq[a as usize]).then(a.cmp(&b)));
        order
    }
}

/// True iff every window translate inside the patch volume is allowed.
pub fn check_local(spec: &SftSpec, p: &Patch) -> Result<bool> {
    spec.check_symbols(p)?;
    let mut buf = vec![0; spec.window.len()];
    for a in spec.window.anchors_inside(p.volume()) {
        for (b, &o) in buf.iter_mut().zip(spec.window.offsets()) {
            *b = p.get(a + o).expect("anchor inside volume");
        }
        if !spec.admits(&buf) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Window translates inside `v` that are violated by `p`.
pub fn violations(spec: &SftSpec, p: &Patch) -> Vec<Site> {
    let mut buf = vec![0; spec.window.len()];
    let mut out = Vec::new();
    for a in spec.window.anchors_inside(p.volume()) {
        for (b, &o) in buf.iter_mut().zip(spec.window.offsets()) {
            *b = p.get(a + o).expect("anchor inside volume");
        }
        if !spec.admits(&buf) {
            out.push(a);
        }
    }
    out
}

/// Extract the window patch anchored at `a` from `p`, if it fits.
pub fn window_patch(spec: &SftSpec, p: &Patch, a: Site) -> Option<Vec<Symbol>> {
    spec.window.offsets().iter().map(|&o| p.get(a + o)).collect()
}

/// Volume covered by the window translates anchored in `v`.
pub fn window_hull(window: &Window, v: &Volume) -> Volume {
    Volume::new(v.sites().iter().flat_map(|&s| window.offsets().iter().map(move |&o| s + o)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_box;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    #[test]
    fn partial_lookup_respects_unset_entries() {
        let spec = SftSpec::from_allowed(names(3), Window::ell(), vec![vec![0, 1, 2], vec![1, 1, 1]]).unwrap();
        assert!(spec.admits(&[0, 1, 2]));
        assert!(!spec.admits(&[0, 1, 1]));
        assert!(spec.admits(&[UNSET, 1, UNSET]));
        assert!(!spec.admits(&[2, UNSET, UNSET]));
        assert!(spec.admits(&[UNSET, UNSET, UNSET]));
    }

    #[test]
    fn unused_symbols_are_pruned() {
        let spec = SftSpec::from_allowed(names(3), Window::single(), vec![vec![2]]).unwrap();
        assert_eq!(spec.names(), &["2".to_string()]);
    }

    #[test]
    fn forbidden_rule() {
        let spec = SftSpec::from_forbidden(names(2), Window::ell(), vec![vec![Some(1), Some(1), None]]).unwrap();
        assert!(!spec.admits(&[1, 1, 0]));
        assert!(spec.admits(&[1, 0, 1]));
        assert!(spec.admits(&[1, UNSET, 0]));
        let p = Patch::constant(make_box(1), 1);
        assert!(!check_local(&spec, &p).unwrap());
        assert!(check_local(&spec, &Patch::constant(make_box(1), 0)).unwrap());
    }

    #[test]
    fn lifted_admits_by_color_and_lists_fibers() {
        let base = Arc::new(
            SftSpec::from_allowed(names(2), Window::ell(), vec![vec![0, 0, 0], vec![1, 1, 1]]).unwrap(),
        );
        let lifted = SftSpec::lifted(names(3), base, vec![0, 0, 1]);
        assert!(lifted.admits(&[0, 1, 0]));
        assert!(!lifted.admits(&[0, 2, 0]));
        assert_eq!(lifted.classes(), &[vec![0, 1], vec![2]]);
        assert_eq!(lifted.allowed_count(), Some(9));
        assert_eq!(lifted.allowed_patches().unwrap().len(), 9);
    }

    #[test]
    fn unknown_symbol_is_reported() {
        let spec = full_shift(2);
        let p = Patch::constant(make_box(0), 7);
        assert!(matches!(check_local(&spec, &p), Err(Error::UnknownSymbol(_))));
    }
}
