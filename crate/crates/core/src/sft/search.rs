//! Backtracking search over partial assignments with forward window checks.

use std::ops::ControlFlow;

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_local, SftSpec, UNSET};
use crate::error::{Error, Result};
use crate::lattice::{compose, Metric, Patch, Site, Symbol, Volume};

/// Node budget for one search; `SFTLAB_BUDGET` overrides the default.
pub fn default_budget() -> u64 {
    std::env::var("SFTLAB_BUDGET").ok().and_then(|s| s.parse().ok()).unwrap_or(500_000_000)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueOrder {
    Alphabet,
    /// Symbols that occur in many allowed patches first.
    Frequency,
    /// An independent seeded permutation per variable.
    Shuffled(u64),
}

#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub budget: u64,
    /// Branch on one representative per symbol class.
    pub classes: bool,
    pub order: ValueOrder,
    /// Visit free sites in reverse canonical order.
    pub reversed: bool,
    /// Keep only interiors whose composition with the boundary extends
    /// by this many Linf layers.
    pub margin: Option<i32>,
    pub collect: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            budget: default_budget(),
            classes: false,
            order: ValueOrder::Alphabet,
            reversed: false,
            margin: None,
            collect: false,
        }
    }
}

/// A constraint problem: slots holding symbols, some fixed, and window
/// constraints given as slot lists in window-offset order.
pub struct Problem<'s> {
    spec: &'s SftSpec,
    values: Vec<Symbol>,
    vars: Vec<usize>,
    k: usize,
    win_slots: Vec<u32>,
    site_windows: Vec<Vec<u32>>,
    pub nodes: u64,
}

impl<'s> Problem<'s> {
    pub fn new(spec: &'s SftSpec, values: Vec<Symbol>, vars: Vec<usize>, windows: &[Vec<usize>]) -> Self {
        let k = spec.window().len();
        let mut site_windows = vec![Vec::new(); values.len()];
        let mut win_slots = Vec::with_capacity(windows.len() * k);
        for (w, slots) in windows.iter().enumerate() {
            debug_assert_eq!(slots.len(), k);
            for &s in slots {
                win_slots.push(s as u32);
                if site_windows[s].last() != Some(&(w as u32)) {
                    site_windows[s].push(w as u32);
                }
            }
        }
        Problem { spec, values, vars, k, win_slots, site_windows, nodes: 0 }
    }

    /// Problem on `fixed.volume ∪ free`; returns the problem and the site of
    /// each slot.
    pub fn on_lattice(spec: &'s SftSpec, fixed: &Patch, free: &Volume, reversed: bool) -> (Self, Vec<Site>) {
        let all = fixed.volume().union(free);
        let mut values = vec![UNSET; all.len()];
        for (s, a) in fixed.iter() {
            values[all.index_of(s).unwrap()] = a;
        }
        let mut vars: Vec<usize> =
            free.sites().iter().filter(|s| !fixed.volume().contains(**s)).map(|&s| all.index_of(s).unwrap()).collect();
        if reversed {
            vars.reverse();
        }
        let windows: Vec<Vec<usize>> = spec
            .window()
            .anchors_inside(&all)
            .into_iter()
            .map(|a| spec.window().offsets().iter().map(|&o| all.index_of(a + o).unwrap()).collect())
            .collect();
        (Problem::new(spec, values, vars, &windows), all.sites().to_vec())
    }

    pub fn values(&self) -> &[Symbol] {
        &self.values
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    fn window_ok(&self, w: u32) -> bool {
        let mut buf = [UNSET; 32];
        let base = w as usize * self.k;
        if self.k <= 32 {
            for i in 0..self.k {
                buf[i] = self.values[self.win_slots[base + i] as usize];
            }
            self.spec.admits(&buf[..self.k])
        } else {
            let v: Vec<Symbol> =
                self.win_slots[base..base + self.k].iter().map(|&s| self.values[s as usize]).collect();
            self.spec.admits(&v)
        }
    }

    /// Every window is still completable under the current assignment.
    pub fn consistent(&self) -> bool {
        (0..(self.win_slots.len() / self.k.max(1)) as u32).all(|w| self.window_ok(w))
    }

    fn candidates(&self, opts: &SearchOptions) -> Vec<Vec<Symbol>> {
        let base: Vec<Symbol> = if opts.classes {
            self.spec.classes().iter().map(|c| c[0]).collect()
        } else {
            match opts.order {
                ValueOrder::Frequency => self.spec.frequency_order(),
                _ => (0..self.spec.alphabet_size() as Symbol).collect(),
            }
        };
        match opts.order {
            ValueOrder::Shuffled(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                self.vars
                    .iter()
                    .map(|_| {
                        let mut c = base.clone();
                        c.shuffle(&mut rng);
                        c
                    })
                    .collect()
            }
            _ => vec![base; 1],
        }
    }

    /// Depth-first search; `visit` sees the full slot assignment of every
    /// solution and may stop the search.
    pub fn search(
        &mut self,
        opts: &SearchOptions,
        mut visit: impl FnMut(&[Symbol]) -> ControlFlow<()>,
    ) -> Result<ControlFlow<()>> {
        if !self.consistent() {
            return Ok(ControlFlow::Continue(()));
        }
        let cands = self.candidates(opts);
        self.dfs(0, &cands, opts.budget, &mut visit)
    }

    fn dfs(
        &mut self,
        depth: usize,
        cands: &[Vec<Symbol>],
        budget: u64,
        visit: &mut impl FnMut(&[Symbol]) -> ControlFlow<()>,
    ) -> Result<ControlFlow<()>> {
        if depth == self.vars.len() {
            return Ok(visit(&self.values));
        }
        let slot = self.vars[depth];
        let list = if cands.len() == 1 { &cands[0] } else { &cands[depth] };
        for &a in list {
            self.nodes += 1;
            if self.nodes > budget {
                return Err(Error::SearchBudgetExceeded(self.nodes));
            }
            self.values[slot] = a;
            if self.site_windows[slot].iter().all(|&w| self.window_ok(w))
                && self.dfs(depth + 1, cands, budget, visit)?.is_break()
            {
                return Ok(ControlFlow::Break(()));
            }
        }
        self.values[slot] = UNSET;
        Ok(ControlFlow::Continue(()))
    }

    fn domain_size(&mut self, slot: usize, list: &[Symbol]) -> u32 {
        let mut n = 0;
        for &a in list {
            self.values[slot] = a;
            if self.site_windows[slot].iter().all(|&w| self.window_ok(w)) {
                n += 1;
            }
        }
        self.values[slot] = UNSET;
        n
    }

    /// First solution, branching on the free site with the fewest
    /// consistent symbols and rechecking its neighbors after each step.
    pub fn find_first(&mut self, opts: &SearchOptions) -> Result<Option<Vec<Symbol>>> {
        if !self.consistent() {
            return Ok(None);
        }
        let cands = self.candidates(opts);
        let n = self.vars.len();
        let mut pos_of = vec![usize::MAX; self.values.len()];
        for (i, &v) in self.vars.iter().enumerate() {
            pos_of[v] = i;
        }
        let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, &v) in self.vars.iter().enumerate() {
            let mut nb: Vec<usize> = self.site_windows[v]
                .iter()
                .flat_map(|&w| self.win_slots[w as usize * self.k..(w as usize + 1) * self.k].iter())
                .map(|&s| pos_of[s as usize])
                .filter(|&j| j != usize::MAX && j != i)
                .collect();
            nb.sort_unstable();
            nb.dedup();
            neighbors[i] = nb;
        }
        let list = |i: usize| if cands.len() == 1 { 0 } else { i };
        let mut dom = Vec::with_capacity(n);
        for i in 0..n {
            let d = self.domain_size(self.vars[i], &cands[list(i)]);
            if d == 0 {
                return Ok(None);
            }
            dom.push(d);
        }
        let mut mrv = Mrv { cands: &cands, neighbors, dom, assigned: vec![false; n], budget: opts.budget };
        Ok(if self.mrv_dfs(&mut mrv, 0)? { Some(self.values.clone()) } else { None })
    }

    fn mrv_dfs(&mut self, m: &mut Mrv, depth: usize) -> Result<bool> {
        let n = self.vars.len();
        if depth == n {
            return Ok(true);
        }
        let mut best = usize::MAX;
        for i in 0..n {
            if !m.assigned[i] && (best == usize::MAX || m.dom[i] < m.dom[best]) {
                best = i;
            }
        }
        let slot = self.vars[best];
        let li = if m.cands.len() == 1 { 0 } else { best };
        m.assigned[best] = true;
        let mut trail: Vec<(usize, u32)> = Vec::new();
        for &a in &m.cands[li] {
            self.nodes += 1;
            if self.nodes > m.budget {
                return Err(Error::SearchBudgetExceeded(self.nodes));
            }
            self.values[slot] = a;
            if !self.site_windows[slot].iter().all(|&w| self.window_ok(w)) {
                continue;
            }
            let mut dead = false;
            for k in 0..m.neighbors[best].len() {
                let j = m.neighbors[best][k];
                if m.assigned[j] {
                    continue;
                }
                let lj = if m.cands.len() == 1 { 0 } else { j };
                trail.push((j, m.dom[j]));
                m.dom[j] = self.domain_size(self.vars[j], &m.cands[lj]);
                if m.dom[j] == 0 {
                    dead = true;
                    break;
                }
            }
            if !dead && self.mrv_dfs(m, depth + 1)? {
                return Ok(true);
            }
            for (j, d) in trail.drain(..).rev() {
                m.dom[j] = d;
            }
        }
        self.values[slot] = UNSET;
        m.assigned[best] = false;
        Ok(false)
    }
}

struct Mrv<'c> {
    cands: &'c [Vec<Symbol>],
    neighbors: Vec<Vec<usize>>,
    dom: Vec<u32>,
    assigned: Vec<bool>,
    budget: u64,
}

/// Product of class sizes over `syms`.
pub fn class_multiplicity(spec: &SftSpec, syms: &[Symbol]) -> BigUint {
    let mut acc: u128 = 1;
    let mut big: Option<BigUint> = None;
    for &s in syms {
        let m = spec.classes()[spec.class_of(s) as usize].len() as u128;
        match acc.checked_mul(m) {
            Some(v) => acc = v,
            None => {
                let b = big.take().unwrap_or_else(|| BigUint::from(1u32)) * BigUint::from(acc);
                big = Some(b);
                acc = m;
            }
        }
    }
    match big {
        Some(b) => b * BigUint::from(acc),
        None => BigUint::from(acc),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub locally_admissible: bool,
    pub extendable_margin: i32,
    pub witness: Option<Patch>,
}

fn extension(spec: &SftSpec, p: &Patch, margin: i32, budget: u64) -> Result<Option<Patch>> {
    let fat = p.volume().fatten(margin, Metric::Linf);
    let free = Volume::new(fat.sites().iter().copied().filter(|s| !p.volume().contains(*s)));
    let (mut prob, sites) = Problem::on_lattice(spec, p, &free, false);
    let opts = SearchOptions { budget, order: ValueOrder::Frequency, ..SearchOptions::default() };
    Ok(prob
        .find_first(&opts)?
        .map(|vals| Patch::from_pairs(sites.iter().copied().zip(vals)).expect("distinct sites")))
}

/// Largest margin up to `margin` to which `p` extends, with a witness.
pub fn check_extendable(spec: &SftSpec, p: &Patch, margin: i32) -> Result<AdmissibilityReport> {
    check_extendable_with_budget(spec, p, margin, default_budget())
}

pub fn check_extendable_with_budget(spec: &SftSpec, p: &Patch, margin: i32, budget: u64) -> Result<AdmissibilityReport> {
    if !check_local(spec, p)? {
        return Ok(AdmissibilityReport { locally_admissible: false, extendable_margin: 0, witness: None });
    }
    let mut report = AdmissibilityReport { locally_admissible: true, extendable_margin: 0, witness: Some(p.clone()) };
    for m in 1..=margin {
        match extension(spec, p, m, budget)? {
            Some(w) => {
                report.extendable_margin = m;
                report.witness = Some(w);
            }
            None => break,
        }
    }
    Ok(report)
}

/// Whether `p` has a locally admissible extension `margin` layers out.
pub fn is_extendable(spec: &SftSpec, p: &Patch, margin: i32, budget: u64) -> Result<bool> {
    Ok(extension(spec, p, margin, budget)?.is_some())
}

#[derive(Debug, Clone, Default)]
pub struct Enumeration {
    /// Number of interior patches; with class branching, each
    /// representative counts with its class multiplicity.
    pub count: BigUint,
    /// Interior patches (representatives) with their multiplicities.
    pub patches: Vec<(Patch, BigUint)>,
    pub nodes: u64,
}

/// All patches on `v` compatible with `boundary` (locally admissible after
/// composition, and margin-extendable when `opts.margin` is set).
pub fn enumerate_patches(
    spec: &SftSpec,
    v: &Volume,
    boundary: Option<&Patch>,
    opts: &SearchOptions,
) -> Result<Enumeration> {
    let empty = Patch::empty();
    let bnd = boundary.unwrap_or(&empty);
    if let Some(s) = v.sites().iter().find(|s| bnd.volume().contains(**s)) {
        return Err(Error::OverlappingVolumes(s.x, s.y));
    }
    let (mut prob, sites) = Problem::on_lattice(spec, bnd, v, opts.reversed);
    let idx: Vec<usize> = v.sites().iter().map(|s| sites.binary_search(s).unwrap()).collect();
    let mut out = Enumeration::default();
    let mut failure: Option<Error> = None;
    let _ = prob.search(opts, |vals| {
        let interior: Vec<Symbol> = idx.iter().map(|&i| vals[i]).collect();
        let patch = Patch::new(v.clone(), interior);
        if let Some(m) = opts.margin {
            let joint = compose(&patch, bnd).expect("disjoint");
            match is_extendable(spec, &joint, m, opts.budget) {
                Ok(true) => {}
                Ok(false) => return ControlFlow::Continue(()),
                Err(e) => {
                    failure = Some(e);
                    return ControlFlow::Break(());
                }
            }
        }
        let mult = if opts.classes { class_multiplicity(spec, patch.symbols()) } else { BigUint::from(1u32) };
        out.count += &mult;
        if opts.collect {
            out.patches.push((patch, mult));
        }
        ControlFlow::Continue(())
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    out.nodes = prob.nodes;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{make_box, Window};
    use crate::sft::full_shift;

    fn hard_square() -> SftSpec {
        // no two adjacent 1s
        let names = vec!["0".to_string(), "1".to_string()];
        let mut allowed = Vec::new();
        for c in 0..32u32 {
            let p: Vec<Symbol> = (0..5).map(|i| c >> i & 1).collect();
            if !(p[0] == 1 && p[1..].contains(&1)) {
                allowed.push(p);
            }
        }
        SftSpec::from_allowed(names, Window::cross(), allowed).unwrap()
    }

    #[test]
    fn full_shift_counts() {
        let e = enumerate_patches(&full_shift(2), &make_box(1), None, &SearchOptions::default()).unwrap();
        assert_eq!(e.count, BigUint::from(512u32));
    }

    #[test]
    fn hard_square_counts_match_brute_force() {
        let spec = hard_square();
        let v = Volume::rect(0, 0, 3, 3);
        let mut brute = 0u32;
        for c in 0..512u32 {
            let p = Patch::new(v.clone(), (0..9).map(|i| c >> i & 1).collect());
            brute += check_local(&spec, &p).unwrap() as u32;
        }
        let e = enumerate_patches(&spec, &v, None, &SearchOptions::default()).unwrap();
        // only the center cross is checked inside a 3x3 box
        assert_eq!(e.count, BigUint::from(brute));
        let r = enumerate_patches(&spec, &v, None, &SearchOptions { reversed: true, ..Default::default() }).unwrap();
        assert_eq!(r.count, e.count);
    }

    #[test]
    fn extension_witness() {
        let spec = hard_square();
        let p = Patch::constant(make_box(0), 1);
        let r = check_extendable(&spec, &p, 2).unwrap();
        assert!(r.locally_admissible);
        assert_eq!(r.extendable_margin, 2);
        let w = r.witness.unwrap();
        assert_eq!(w.len(), 25);
        assert!(check_local(&spec, &w).unwrap());
        let empty = check_extendable(&spec, &Patch::empty(), 2).unwrap();
        assert!(empty.locally_admissible);
    }

    #[test]
    fn budget_is_enforced() {
        let opts = SearchOptions { budget: 10, ..Default::default() };
        let r = enumerate_patches(&full_shift(2), &make_box(1), None, &opts);
        assert!(matches!(r, Err(Error::SearchBudgetExceeded(_))));
    }
}
