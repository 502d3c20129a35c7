//! Seeded heat-bath chains on finite grids, maximal-entropy sampling of
//! tone lifts, order parameters and boundary-sensitivity scans.
//!
//! SFT chains resample square blocks from their exact conditional. With a
//! block side of 1 this is the single-site heat bath; hard-constrained
//! models such as the vertex model need larger blocks to move at all.
//! Potts chains run on spins with single-site updates.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::burton_steif::{lift_sample, ToneLift};
use crate::error::{Error, Result};
use crate::gibbs::Interaction;
use crate::lattice::{Patch, Site, Symbol, Volume};
use crate::models::vertex::{CROSS, DOT};
use crate::rng::stream;
use crate::sft::{SftSpec, UNSET};

/// Node budget for one block conditional.
const BLOCK_BUDGET: u64 = 50_000_000;

#[derive(Debug, Clone)]
pub enum LatticeSpec {
    Torus { w: i32, h: i32 },
    /// Free sites `[0,w) x [0,h)`; `boundary` fixes sites around them.
    Pinned { w: i32, h: i32, boundary: Patch },
}

impl LatticeSpec {
    pub fn size(&self) -> (i32, i32) {
        match self {
            LatticeSpec::Torus { w, h } | LatticeSpec::Pinned { w, h, .. } => (*w, *h),
        }
    }

    pub fn interior(&self) -> Volume {
        let (w, h) = self.size();
        Volume::rect(0, 0, w, h)
    }

    /// Pinned lattice with a constant frame `pad` sites thick.
    pub fn pinned_constant(w: i32, h: i32, pad: i32, a: Symbol) -> Self {
        let frame = Volume::rect(-pad, -pad, w + 2 * pad, h + 2 * pad);
        let inner = Volume::rect(0, 0, w, h);
        let ring = Volume::new(frame.sites().iter().copied().filter(|z| !inner.contains(*z)));
        LatticeSpec::Pinned { w, h, boundary: Patch::constant(ring, a) }
    }
}

#[derive(Debug, Clone)]
pub enum ChainModel {
    /// Block heat bath on an SFT with an optional one-letter energy. With
    /// `classes`, blocks are enumerated over symbol classes and members
    /// are drawn uniformly.
    Sft { spec: Arc<SftSpec>, phi: Option<Interaction>, block: i32, classes: bool },
    /// `q`-color spins, weight `exp(-beta)` per disagreeing bond.
    PottsSpin { q: u32 },
}

#[derive(Debug, Clone)]
pub struct ChainSpec {
    pub model: ChainModel,
    pub beta: f64,
    pub lattice: LatticeSpec,
    pub seed: u64,
    pub chain_id: u64,
    pub sweeps: usize,
    pub thin: usize,
    /// Sweeps discarded before recording; defaults to half.
    pub burn_in: Option<usize>,
    /// Full admissibility check every this many sweeps.
    pub check_every: usize,
    /// Starting symbol on every free site.
    pub init: Symbol,
}

impl ChainSpec {
    pub fn new(model: ChainModel, beta: f64, lattice: LatticeSpec, init: Symbol) -> Self {
        ChainSpec {
            model,
            beta,
            lattice,
            seed: 0,
            chain_id: 0,
            sweeps: 100,
            thin: 10,
            burn_in: None,
            check_every: 100,
            init,
        }
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in.unwrap_or(self.sweeps / 2)
    }
}

/// The state of a chain: free sites plus the fixed frame.
#[derive(Debug, Clone)]
pub struct Grid {
    w: i32,
    h: i32,
    pad: i32,
    torus: bool,
    cells: Vec<Symbol>,
    stencils: HashMap<Vec<Site>, Arc<Stencil>>,
    filter: Option<Option<Arc<PairFilter>>>,
}

impl Grid {
    pub fn new(lattice: &LatticeSpec, init: Symbol) -> Self {
        let (w, h) = lattice.size();
        match lattice {
            LatticeSpec::Torus { .. } => Grid { w, h, pad: 0, torus: true, cells: vec![init; (w * h) as usize], stencils: HashMap::new(), filter: None },
            LatticeSpec::Pinned { boundary, .. } => {
                let pad = boundary
                    .volume()
                    .sites()
                    .iter()
                    .map(|z| (-z.x).max(z.x - w + 1).max(-z.y).max(z.y - h + 1))
                    .max()
                    .unwrap_or(0)
                    .max(0);
                let fw = w + 2 * pad;
                let fh = h + 2 * pad;
                let mut g = Grid { w, h, pad, torus: false, cells: vec![UNSET; (fw * fh) as usize], stencils: HashMap::new(), filter: None };
                for (z, a) in boundary.iter() {
                    let i = g.index(z).unwrap();
                    g.cells[i] = a;
                }
                for y in 0..h {
                    for x in 0..w {
                        let i = g.index(Site::new(x, y)).unwrap();
                        g.cells[i] = init;
                    }
                }
                g
            }
        }
    }

    pub fn size(&self) -> (i32, i32) {
        (self.w, self.h)
    }

    /// Cell index of `z`, wrapping on the torus; `None` off the grid.
    pub fn index(&self, z: Site) -> Option<usize> {
        if self.torus {
            let x = z.x.rem_euclid(self.w);
            let y = z.y.rem_euclid(self.h);
            Some((y * self.w + x) as usize)
        } else {
            let fw = self.w + 2 * self.pad;
            let (x, y) = (z.x + self.pad, z.y + self.pad);
            if x < 0 || y < 0 || x >= fw || y >= self.h + 2 * self.pad {
                None
            } else {
                Some((y * fw + x) as usize)
            }
        }
    }

    pub fn get(&self, z: Site) -> Option<Symbol> {
        self.index(z).map(|i| self.cells[i]).filter(|&a| a != UNSET)
    }

    pub fn set(&mut self, z: Site, a: Symbol) {
        let i = self.index(z).expect("site on grid");
        self.cells[i] = a;
    }

    /// The free sites as a patch on `[0,w) x [0,h)`.
    pub fn to_patch(&self) -> Patch {
        Patch::from_fn(Volume::rect(0, 0, self.w, self.h), |z| self.get(z).unwrap())
    }

    /// Window cell indices at anchor `a`, if every cell is known.
    fn window(&self, spec: &SftSpec, a: Site) -> Option<Vec<usize>> {
        spec.window()
            .offsets()
            .iter()
            .map(|&o| self.index(a + o).filter(|&i| self.cells[i] != UNSET || self.is_free(a + o)))
            .collect()
    }

    fn is_free(&self, z: Site) -> bool {
        self.torus || (0..self.w).contains(&z.x) && (0..self.h).contains(&z.y)
    }

    /// Sites whose window is violated, among anchors whose window meets
    /// the free sites and lies on the grid.
    pub fn violations(&self, spec: &SftSpec) -> Vec<Site> {
        let r = spec.window().radius();
        let mut bad = Vec::new();
        let mut buf = Vec::with_capacity(spec.window().len());
        for y in -r..self.h + r {
            for x in -r..self.w + r {
                let a = Site::new(x, y);
                if self.torus && !self.is_free(a) {
                    continue;
                }
                let Some(cells) = self.window(spec, a) else { continue };
                if !spec.window().offsets().iter().any(|&o| self.is_free(a + o)) {
                    continue;
                }
                buf.clear();
                buf.extend(cells.iter().map(|&i| self.cells[i]));
                if !spec.admits(&buf) {
                    bad.push(a);
                }
            }
        }
        bad
    }
}

/// Windows touching a block shape, relative to the block's first site.
#[derive(Debug)]
struct Stencil {
    k: usize,
    /// Relative sites of each window, flat, `k` per window.
    sites: Vec<Site>,
    /// Window ids to check after assigning each block position.
    checks: Vec<Vec<u32>>,
}

impl Stencil {
    fn new(spec: &SftSpec, rel: &[Site]) -> Self {
        let offsets = spec.window().offsets();
        let mut anchors: Vec<Site> = rel.iter().flat_map(|&z| offsets.iter().map(move |&o| z - o)).collect();
        anchors.sort();
        anchors.dedup();
        let sites: Vec<Site> = anchors.iter().flat_map(|&a| offsets.iter().map(move |&o| a + o)).collect();
        let k = offsets.len();
        let checks = rel
            .iter()
            .map(|&z| (0..anchors.len() as u32).filter(|&w| sites[w as usize * k..][..k].contains(&z)).collect())
            .collect();
        Stencil { k, sites, checks }
    }
}

/// For a unit step `d`, the symbols that may sit at `z + d` given the
/// symbol at `z`, projected from the allowed windows.
#[derive(Debug)]
struct PairFilter {
    steps: [Site; 4],
    /// Bit `y` of `next[step][x]` is set if `y` may follow `x`.
    next: [Vec<u64>; 4],
}

impl PairFilter {
    const MAX_PATCHES: u64 = 1 << 20;

    fn new(spec: &SftSpec) -> Option<Self> {
        if spec.allowed_count()? > Self::MAX_PATCHES || spec.alphabet_size() > 64 {
            return None;
        }
        let patches = spec.allowed_patches()?;
        let a = spec.alphabet_size();
        let offsets = spec.window().offsets();
        let steps = [Site::new(1, 0), Site::new(0, 1), Site::new(-1, 0), Site::new(0, -1)];
        let next = steps.map(|d| {
            let mut ok = vec![vec![true; a]; a];
            let mut constrained = false;
            for (i, &oi) in offsets.iter().enumerate() {
                for (j, &oj) in offsets.iter().enumerate() {
                    if oj - oi != d {
                        continue;
                    }
                    constrained = true;
                    let mut seen = vec![vec![false; a]; a];
                    for p in &patches {
                        seen[p[i] as usize][p[j] as usize] = true;
                    }
                    for x in 0..a {
                        for y in 0..a {
                            ok[x][y] &= seen[x][y];
                        }
                    }
                }
            }
            (0..a).map(|x| (0..a).filter(|&y| !constrained || ok[x][y]).fold(0u64, |m, y| m | 1 << y)).collect()
        });
        Some(PairFilter { steps, next })
    }
}

struct BlockSearch<'a> {
    spec: &'a SftSpec,
    cells: &'a mut [Symbol],
    positions: Vec<usize>,
    stencil: &'a Stencil,
    /// Cell indices of each stencil window, flat.
    win_cells: Vec<usize>,
    valid: Vec<bool>,
    cands: Vec<Symbol>,
    filter: Option<&'a PairFilter>,
    /// Per position: neighbor cells with the step from them to it.
    nbrs: Vec<Vec<(usize, usize)>>,
    weight_of: Vec<f64>,
    nodes: u64,
    vals: Vec<Symbol>,
}

impl BlockSearch<'_> {
    fn dfs(&mut self, depth: usize, weight: f64, visit: &mut dyn FnMut(&[Symbol], f64)) -> Result<()> {
        if depth == self.positions.len() {
            visit(&self.vals, weight);
            return Ok(());
        }
        let cell = self.positions[depth];
        let k = self.stencil.k;
        let mut buf = [UNSET; 32];
        let mut mask = u64::MAX;
        if let Some(f) = self.filter {
            for &(c, step) in &self.nbrs[depth] {
                let b = self.cells[c];
                if b != UNSET {
                    mask &= f.next[step][b as usize];
                }
            }
        }
        for ci in 0..self.cands.len() {
            let a = self.cands[ci];
            if a < 64 && mask >> a & 1 == 0 {
                continue;
            }
            self.nodes += 1;
            if self.nodes > BLOCK_BUDGET {
                return Err(Error::SearchBudgetExceeded(self.nodes));
            }
            self.cells[cell] = a;
            let ok = self.stencil.checks[depth].iter().all(|&w| {
                let w = w as usize;
                if !self.valid[w] {
                    return true;
                }
                for (b, &i) in buf.iter_mut().zip(&self.win_cells[w * k..(w + 1) * k]) {
                    *b = self.cells[i];
                }
                self.spec.admits(&buf[..k])
            });
            if ok {
                self.vals[depth] = a;
                self.dfs(depth + 1, weight * self.weight_of[a as usize], visit)?;
            }
        }
        self.cells[cell] = UNSET;
        Ok(())
    }
}

/// Every admissible filling of `block` given the rest of the grid, with
/// its weight `Π exp(-beta * energy)` (times class sizes with `classes`).
/// Fillings list one representative per class in that mode.
pub fn for_each_block_filling(
    grid: &mut Grid,
    spec: &SftSpec,
    phi: Option<&Interaction>,
    beta: f64,
    classes: bool,
    block: &[Site],
    visit: &mut dyn FnMut(&[Symbol], f64),
) -> Result<()> {
    assert!(spec.window().len() <= 32, "window too large for block sampling");
    let origin = block[0];
    let rel: Vec<Site> = block.iter().map(|&z| z - origin).collect();
    let stencil = match grid.stencils.get(&rel) {
        Some(s) => s.clone(),
        None => {
            let s = Arc::new(Stencil::new(spec, &rel));
            grid.stencils.insert(rel, s.clone());
            s
        }
    };
    let positions: Vec<usize> = block.iter().map(|&z| grid.index(z).expect("block on grid")).collect();
    let saved: Vec<Symbol> = positions.iter().map(|&i| grid.cells[i]).collect();
    for &i in &positions {
        grid.cells[i] = UNSET;
    }
    let k = stencil.k;
    let nwin = stencil.sites.len() / k;
    let mut win_cells = vec![0usize; stencil.sites.len()];
    let mut valid = vec![true; nwin];
    for w in 0..nwin {
        for j in 0..k {
            let z = origin + stencil.sites[w * k + j];
            match grid.index(z) {
                Some(i) if grid.cells[i] != UNSET || grid.is_free(z) => win_cells[w * k + j] = i,
                _ => valid[w] = false,
            }
        }
    }
    let cands: Vec<Symbol> =
        if classes { spec.classes().iter().map(|c| c[0]).collect() } else { (0..spec.alphabet_size() as Symbol).collect() };
    let mut weight_of = vec![0.0; spec.alphabet_size()];
    for &a in &cands {
        let e = phi.map_or(0.0, |p| p.energy_of(a));
        let size = if classes { spec.classes()[spec.class_of(a) as usize].len() as f64 } else { 1.0 };
        weight_of[a as usize] = (-beta * e).exp() * size;
    }
    let n = positions.len();
    if !classes && grid.filter.is_none() {
        grid.filter = Some(PairFilter::new(spec).map(Arc::new));
    }
    let filter = if classes { None } else { grid.filter.clone().flatten() };
    let nbrs: Vec<Vec<(usize, usize)>> = match &filter {
        Some(f) => block
            .iter()
            .map(|&z| {
                f.steps
                    .iter()
                    .enumerate()
                    .filter_map(|(si, &d)| grid.index(z - d).map(|c| (c, si)))
                    .collect()
            })
            .collect(),
        None => vec![Vec::new(); n],
    };
    let mut search = BlockSearch {
        spec,
        cells: &mut grid.cells,
        positions: positions.clone(),
        stencil: &stencil,
        win_cells,
        valid,
        cands,
        filter: filter.as_deref(),
        nbrs,
        weight_of,
        nodes: 0,
        vals: vec![0; n],
    };
    let result = search.dfs(0, 1.0, visit);
    for (&i, &a) in positions.iter().zip(&saved) {
        grid.cells[i] = a;
    }
    result
}

fn tiles(w: i32, h: i32, b: i32, rng: &mut ChaCha8Rng) -> Vec<Vec<Site>> {
    let (ox, oy) = (rng.gen_range(0..b), rng.gen_range(0..b));
    let mut out = Vec::new();
    let mut ty = oy - b;
    while ty < h {
        let mut tx = ox - b;
        while tx < w {
            let mut t = Vec::new();
            for y in (ty..ty + b).rev() {
                for x in tx..tx + b {
                    if (0..w).contains(&x) && (0..h).contains(&y) {
                        t.push(Site::new(x, y));
                    }
                }
            }
            if !t.is_empty() {
                out.push(t);
            }
            tx += b;
        }
        ty += b;
    }
    out.shuffle(rng);
    out
}

/// One sweep: every free site is resampled once.
pub fn heatbath_sweep(grid: &mut Grid, chain: &ChainSpec, rng: &mut ChaCha8Rng) -> Result<()> {
    let (w, h) = grid.size();
    match &chain.model {
        ChainModel::Sft { spec, phi, block, classes } => {
            for t in tiles(w, h, *block, rng) {
                let mut total = 0.0;
                let mut chosen: Option<Vec<Symbol>> = None;
                for_each_block_filling(grid, spec, phi.as_ref(), chain.beta, *classes, &t, &mut |vals, wt| {
                    total += wt;
                    if rng.gen::<f64>() * total < wt {
                        chosen = Some(vals.to_vec());
                    }
                })?;
                let vals = chosen.ok_or(Error::EmptySupport)?;
                for (&z, &a) in t.iter().zip(&vals) {
                    let a = if *classes {
                        let class = &spec.classes()[spec.class_of(a) as usize];
                        class[rng.gen_range(0..class.len())]
                    } else {
                        a
                    };
                    grid.set(z, a);
                }
            }
        }
        ChainModel::PottsSpin { q } => {
            let mut sites: Vec<Site> = (0..h).flat_map(|y| (0..w).map(move |x| Site::new(x, y))).collect();
            sites.shuffle(rng);
            let mut probs = vec![0.0; *q as usize];
            for z in sites {
                spin_conditional(grid, *q, chain.beta, z, &mut probs);
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut pick = *q - 1;
                for (c, &p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        pick = c as u32;
                        break;
                    }
                }
                grid.set(z, pick);
            }
        }
    }
    Ok(())
}

/// Conditional law of the spin at `z` given its four neighbors.
pub fn spin_conditional(grid: &Grid, q: u32, beta: f64, z: Site, probs: &mut [f64]) {
    let nbrs: Vec<Symbol> =
        [Site::new(1, 0), Site::new(0, 1), Site::new(-1, 0), Site::new(0, -1)].iter().filter_map(|&d| grid.get(z + d)).collect();
    for (c, p) in probs.iter_mut().enumerate().take(q as usize) {
        let disagree = nbrs.iter().filter(|&&n| n != c as Symbol).count();
        *p = (-beta * disagree as f64).exp();
    }
    let s: f64 = probs.iter().sum();
    for p in probs.iter_mut() {
        *p /= s;
    }
}

fn check_grid(grid: &Grid, chain: &ChainSpec) -> Result<()> {
    if let ChainModel::Sft { spec, .. } = &chain.model {
        if let Some(z) = grid.violations(spec).first() {
            return Err(Error::Invalid(format!("chain state violates the rules at ({}, {})", z.x, z.y)));
        }
    }
    Ok(())
}

/// Run a chain, calling `observe(sweep, grid)` on each recorded sweep
/// (after burn-in, every `thin` sweeps). Returns the final grid.
pub fn run_chain(chain: &ChainSpec, observe: impl FnMut(usize, &Grid)) -> Result<Grid> {
    run_chain_from(chain, Grid::new(&chain.lattice, chain.init), observe)
}

/// As [`run_chain`], from a given starting grid.
pub fn run_chain_from(chain: &ChainSpec, mut grid: Grid, mut observe: impl FnMut(usize, &Grid)) -> Result<Grid> {
    if chain.sweeps == 0 || chain.thin == 0 {
        return Err(Error::Invalid("sweeps and thin must be positive".into()));
    }
    check_grid(&grid, chain)?;
    for sweep in 1..=chain.sweeps {
        let mut rng = stream(&[chain.seed, chain.chain_id, sweep as u64]);
        heatbath_sweep(&mut grid, chain, &mut rng)?;
        if chain.check_every > 0 && sweep % chain.check_every == 0 {
            check_grid(&grid, chain)?;
        }
        if sweep > chain.burn_in() && (sweep - chain.burn_in()) % chain.thin == 0 {
            observe(sweep, &grid);
        }
    }
    check_grid(&grid, chain)?;
    Ok(grid)
}

/// Chain at `β_N` on the color rules of `lift`, each recorded color state
/// decorated with independent uniform tones. The chain's `beta` and
/// `model` are replaced; its lattice is given in lifted symbols.
pub fn sample_max_entropy(lift: &ToneLift, chain: &ChainSpec, block: i32, mut observe: impl FnMut(usize, &Patch)) -> Result<()> {
    let mut base = chain.clone();
    base.beta = lift.beta();
    base.model = ChainModel::Sft { spec: lift.color_rules().clone(), phi: Some(lift.phi.clone()), block, classes: false };
    if let LatticeSpec::Pinned { w, h, boundary } = &chain.lattice {
        base.lattice = LatticeSpec::Pinned { w: *w, h: *h, boundary: lift.project(boundary) };
    }
    base.init = lift.color(chain.init);
    run_chain(&base, |sweep, g| {
        let mut rng = stream(&[chain.seed, chain.chain_id, sweep as u64, 1]);
        observe(sweep, &lift_sample(lift, &g.to_patch(), &mut rng));
    })?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelTag {
    /// Vertex symbols (project lifted states first).
    Vertex,
    PottsSpin { q: u32 },
}

/// Named statistics of a state.
pub fn order_parameter(p: &Patch, tag: ModelTag) -> Vec<(String, f64)> {
    let n = p.len() as f64;
    match tag {
        ModelTag::Vertex => {
            let count = |a: Symbol| p.symbols().iter().filter(|&&s| s == a).count() as f64;
            let (dot, cross) = (count(DOT), count(CROSS));
            vec![
                ("dot".into(), dot / n),
                ("cross".into(), cross / n),
                ("arrow".into(), (n - dot - cross) / n),
                ("largest_dot".into(), largest_component(p, DOT) as f64 / n),
                ("largest_cross".into(), largest_component(p, CROSS) as f64 / n),
            ]
        }
        ModelTag::PottsSpin { q } => {
            let hist: Vec<f64> =
                (0..q).map(|c| p.symbols().iter().filter(|&&s| s == c).count() as f64 / n).collect();
            let mut out: Vec<(String, f64)> = hist.iter().enumerate().map(|(c, &f)| (format!("color{c}"), f)).collect();
            out.push(("max_color".into(), hist.iter().cloned().fold(0.0, f64::max)));
            out
        }
    }
}

/// Size of the largest 4-connected set of sites holding `a`.
pub fn largest_component(p: &Patch, a: Symbol) -> usize {
    let mut seen = vec![false; p.len()];
    let mut best = 0;
    let v = p.volume();
    for (i, &s) in p.symbols().iter().enumerate() {
        if s != a || seen[i] {
            continue;
        }
        seen[i] = true;
        let mut queue = VecDeque::from([v.sites()[i]]);
        let mut size = 0;
        while let Some(z) = queue.pop_front() {
            size += 1;
            for d in [Site::new(1, 0), Site::new(0, 1), Site::new(-1, 0), Site::new(0, -1)] {
                if let Some(j) = v.index_of(z + d) {
                    if !seen[j] && p.symbols()[j] == a {
                        seen[j] = true;
                        queue.push_back(z + d);
                    }
                }
            }
        }
        best = best.max(size);
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Vertex lift with rule D; pinnings ⊙ and ⊗.
    VertexLift,
    /// Potts spins at `β_N = 2 log N`; pinnings color 0 and color 1.
    Potts { q: u32 },
}

#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub family: Family,
    pub params: Vec<u32>,
    pub size: (i32, i32),
    pub sweeps: usize,
    pub thin: usize,
    pub replicates: usize,
    pub seed: u64,
    pub block: i32,
}

/// Per-chain result: fraction of recorded sweeps with the center site in
/// the plus class (⊙ or color 0).
#[derive(Debug, Clone, PartialEq)]
pub struct ScanChain {
    pub param: u32,
    pub pinning: String,
    pub replicate: usize,
    pub center_plus: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSummary {
    pub param: u32,
    pub gap: f64,
    pub err: f64,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub chains: Vec<ScanChain>,
    pub summary: Vec<ScanSummary>,
    /// Named threshold values in units of the scan parameter.
    pub thresholds: Vec<(String, f64)>,
}

impl ScanResult {
    /// Parameter of the first summary row whose gap exceeds one half, the
    /// previous parameter, if any.
    pub fn transition(&self) -> Option<(u32, u32)> {
        let i = self.summary.iter().position(|s| s.gap > 0.5)?;
        (i > 0).then(|| (self.summary[i - 1].param, self.summary[i].param))
    }
}

fn scan_chain(cfg: &ScanConfig, param: u32, plus: bool, replicate: usize) -> Result<f64> {
    let (w, h) = cfg.size;
    let center = Site::new(w / 2, h / 2);
    let chain_id = (param as u64) << 32 | (plus as u64) << 16 | replicate as u64;
    let mut hits = 0usize;
    let mut total = 0usize;
    match cfg.family {
        Family::Potts { q } => {
            let pin = if plus { 0 } else { 1 };
            let mut chain = ChainSpec::new(
                ChainModel::PottsSpin { q },
                2.0 * (param as f64).ln(),
                LatticeSpec::pinned_constant(w, h, 1, pin),
                pin,
            );
            chain.seed = cfg.seed;
            chain.chain_id = chain_id;
            chain.sweeps = cfg.sweeps;
            chain.thin = cfg.thin;
            run_chain(&chain, |_, g| {
                total += 1;
                hits += (g.get(center) == Some(0)) as usize;
            })?;
        }
        Family::VertexLift => {
            let lift = crate::models::vertex_lift(param);
            let pin = if plus { DOT } else { CROSS };
            let lattice = LatticeSpec::pinned_constant(w, h, 2, lift.symbol(pin, 0));
            let mut chain = ChainSpec::new(
                ChainModel::Sft { spec: lift.lifted.clone(), phi: None, block: cfg.block, classes: true },
                0.0,
                lattice,
                lift.symbol(pin, 0),
            );
            chain.seed = cfg.seed;
            chain.chain_id = chain_id;
            chain.sweeps = cfg.sweeps;
            chain.thin = cfg.thin;
            sample_max_entropy(&lift, &chain, cfg.block, |_, p| {
                total += 1;
                hits += (lift.color(p.get(center).unwrap()) == DOT) as usize;
            })?;
        }
    }
    Ok(hits as f64 / total.max(1) as f64)
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = if xs.len() > 1 { xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (m, v)
}

/// For each parameter, chains under the plus and minus pinnings and the
/// gap between their center-site plus-class frequencies, with the standard
/// error over replicates. Chain failures are recorded, not raised.
pub fn phase_scan(cfg: &ScanConfig) -> Result<ScanResult> {
    if cfg.params.is_empty() || cfg.replicates == 0 {
        return Err(Error::Invalid("phase scan needs parameters and replicates".into()));
    }
    let mut chains = Vec::new();
    let mut summary = Vec::new();
    for &param in &cfg.params {
        let mut failures = Vec::new();
        let mut sides: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        for (side, plus) in [(0, true), (1, false)] {
            for r in 0..cfg.replicates {
                match scan_chain(cfg, param, plus, r) {
                    Ok(f) => {
                        sides[side].push(f);
                        chains.push(ScanChain {
                            param,
                            pinning: pinning_name(cfg.family, plus).into(),
                            replicate: r,
                            center_plus: f,
                        });
                    }
                    Err(e) => failures.push(format!("{}:{r}: {e}", pinning_name(cfg.family, plus))),
                }
            }
        }
        let (gap, err) = if sides[0].is_empty() || sides[1].is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            let (mp, vp) = mean_var(&sides[0]);
            let (mm, vm) = mean_var(&sides[1]);
            (mp - mm, (vp / sides[0].len() as f64 + vm / sides[1].len() as f64).sqrt())
        };
        summary.push(ScanSummary { param, gap, err, failures });
    }
    Ok(ScanResult { chains, summary, thresholds: thresholds(cfg.family) })
}

pub fn pinning_name(family: Family, plus: bool) -> &'static str {
    match (family, plus) {
        (Family::VertexLift, true) => "dot",
        (Family::VertexLift, false) => "cross",
        (Family::Potts { .. }, true) => "color0",
        (Family::Potts { .. }, false) => "color1",
    }
}

/// Predicted transition points in units of `N`.
pub fn thresholds(family: Family) -> Vec<(String, f64)> {
    match family {
        Family::Potts { q } => {
            let q = q as f64;
            let bc_formula = (q.sqrt() + 1.0).ln() / 2.0;
            let mut out = vec![
                ("ell_q".to_string(), q.sqrt() + 1.0),
                ("formula_crossing".to_string(), (bc_formula / 2.0).exp()),
            ];
            if q == 2.0 {
                // exact Ising point for energy 1 per disagreeing bond
                out.push(("ising_exact".to_string(), ((1.0 + 2f64.sqrt()).ln() / 2.0).exp()));
            }
            out
        }
        Family::VertexLift => vec![("peierls_beta_star".to_string(), crate::contours::beta_star().exp())],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::burton_steif::lift;
    use crate::lattice::make_box;
    use crate::models::{potts_cross_spec, vertex_spec};
    use crate::sft::{enumerate_patches, full_shift, SearchOptions};

    fn potts_chain(w: i32, h: i32, beta: f64) -> ChainSpec {
        ChainSpec::new(ChainModel::PottsSpin { q: 2 }, beta, LatticeSpec::Torus { w, h }, 0)
    }

    /// Stationary vector of a row-stochastic matrix by power iteration.
    fn stationary(k: &[Vec<f64>]) -> Vec<f64> {
        let n = k.len();
        let mut p = vec![1.0 / n as f64; n];
        for _ in 0..20000 {
            let mut q = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    q[j] += p[i] * k[i][j];
                }
            }
            p = q;
        }
        p
    }

    fn spin_states(w: i32, h: i32) -> Vec<Vec<Symbol>> {
        let n = (w * h) as u32;
        (0..1u32 << n).map(|c| (0..n).map(|i| (c >> i) & 1).collect()).collect()
    }

    /// Exact kernel of one random-order single-site sweep on a small torus.
    #[test]
    fn spin_sweep_kernel_is_gibbs_stationary() {
        for (w, h) in [(2, 2), (2, 3)] {
            let beta = 0.8;
            let states = spin_states(w, h);
            let sites: Vec<Site> = (0..h).flat_map(|y| (0..w).map(move |x| Site::new(x, y))).collect();
            let index = |s: &[Symbol]| s.iter().enumerate().map(|(i, &b)| (b as usize) << i).sum::<usize>();
            let chain = potts_chain(w, h, beta);
            let single = |z: usize| -> Vec<Vec<f64>> {
                let mut k = vec![vec![0.0; states.len()]; states.len()];
                for (i, s) in states.iter().enumerate() {
                    let mut g = Grid::new(&chain.lattice, 0);
                    for (site, &b) in sites.iter().zip(s) {
                        g.set(*site, b);
                    }
                    let mut probs = vec![0.0; 2];
                    spin_conditional(&g, 2, beta, sites[z], &mut probs);
                    for c in 0..2 {
                        let mut t = s.clone();
                        t[z] = c;
                        k[i][index(&t)] += probs[c as usize];
                    }
                }
                k
            };
            let kernels: Vec<Vec<Vec<f64>>> = (0..sites.len()).map(single).collect();
            // average over the site orders of a sweep
            let mut orders = vec![Vec::new()];
            for _ in 0..sites.len() {
                orders = orders
                    .into_iter()
                    .flat_map(|o: Vec<usize>| {
                        (0..sites.len()).filter(|z| !o.contains(z)).map(|z| [o.clone(), vec![z]].concat()).collect::<Vec<_>>()
                    })
                    .collect();
            }
            let n = states.len();
            let mut sweep = vec![vec![0.0; n]; n];
            for o in &orders {
                let mut m: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect()).collect();
                for &z in o {
                    let mut next = vec![vec![0.0; n]; n];
                    for i in 0..n {
                        for l in 0..n {
                            if m[i][l] != 0.0 {
                                for j in 0..n {
                                    next[i][j] += m[i][l] * kernels[z][l][j];
                                }
                            }
                        }
                    }
                    m = next;
                }
                for i in 0..n {
                    for j in 0..n {
                        sweep[i][j] += m[i][j] / orders.len() as f64;
                    }
                }
            }
            let pi = stationary(&sweep);
            let energy = |s: &[Symbol]| -> f64 {
                let g = |x: i32, y: i32| s[(y.rem_euclid(h) * w + x.rem_euclid(w)) as usize];
                let mut e = 0.0;
                for y in 0..h {
                    for x in 0..w {
                        e += (g(x, y) != g(x + 1, y)) as u8 as f64 + (g(x, y) != g(x, y + 1)) as u8 as f64;
                    }
                }
                e
            };
            let wts: Vec<f64> = states.iter().map(|s| (-beta * energy(s)).exp()).collect();
            let z: f64 = wts.iter().sum();
            let tv: f64 = pi.iter().zip(&wts).map(|(p, w)| (p - w / z).abs()).sum::<f64>() / 2.0;
            assert!(tv < 1e-9, "{w}x{h}: {tv}");
        }
    }

    /// Block kernel on the vertex model over a small pinned window: the
    /// exact block conditionals are proportional to Gibbs weights.
    #[test]
    fn block_conditional_matches_gibbs() {
        let (spec, phi) = vertex_spec();
        let spec = Arc::new(spec);
        let lattice = LatticeSpec::pinned_constant(3, 3, 2, DOT);
        let mut g = Grid::new(&lattice, DOT);
        let block: Vec<Site> = Volume::rect(0, 0, 3, 3).sites().to_vec();
        let mut seen = Vec::new();
        for_each_block_filling(&mut g, &spec, Some(&phi), 1.5, false, &block, &mut |v, w| seen.push((v.to_vec(), w)))
            .unwrap();
        let LatticeSpec::Pinned { boundary, .. } = &lattice else { unreachable!() };
        let ring = boundary.restrict(&crate::lattice::boundary(&Volume::rect(0, 0, 3, 3), 1, crate::lattice::Metric::L1)).unwrap();
        let e = enumerate_patches(&spec, &Volume::rect(0, 0, 3, 3), Some(&ring), &SearchOptions { collect: true, ..Default::default() })
            .unwrap();
        assert_eq!(seen.len(), e.patches.len());
        let z: f64 = seen.iter().map(|s| s.1).sum();
        let gibbs = crate::gibbs::gibbs_conditional(&spec, &phi, 1.5, &Volume::rect(0, 0, 3, 3), &ring, 0).unwrap();
        for (vals, w) in &seen {
            let p = Patch::new(Volume::new(block.iter().copied()), vals.clone());
            assert!((gibbs.prob_of(&p) - w / z).abs() < 1e-12);
        }
    }

    #[test]
    fn beta_zero_full_shift_one_sweep_is_uniform() {
        let spec = Arc::new(full_shift(3));
        let chain = ChainSpec::new(
            ChainModel::Sft { spec: spec.clone(), phi: None, block: 1, classes: false },
            0.0,
            LatticeSpec::Torus { w: 4, h: 4 },
            0,
        );
        let mut counts = [0usize; 3];
        for seed in 0..3000 {
            let mut g = Grid::new(&chain.lattice, 0);
            heatbath_sweep(&mut g, &chain, &mut stream(&[seed])).unwrap();
            counts[g.get(Site::new(1, 2)).unwrap() as usize] += 1;
        }
        for c in counts {
            assert!((c as f64 - 1000.0).abs() < 4.0 * (3000.0f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt());
        }
    }

    #[test]
    fn chains_are_deterministic_and_stay_admissible() {
        let (spec, phi) = vertex_spec();
        let mut chain = ChainSpec::new(
            ChainModel::Sft { spec: Arc::new(spec), phi: Some(phi), block: 4, classes: false },
            0.5,
            LatticeSpec::Torus { w: 8, h: 8 },
            DOT,
        );
        chain.sweeps = 30;
        chain.thin = 5;
        chain.check_every = 1;
        chain.seed = 11;
        let run = || {
            let mut trace = Vec::new();
            let g = run_chain(&chain, |s, g| trace.push((s, g.to_patch()))).unwrap();
            (trace, g.to_patch())
        };
        let (a, fa) = run();
        let (b, fb) = run();
        assert_eq!(a, b);
        assert_eq!(fa, fb);
        assert_eq!(a.len(), 3);
        assert!(fa.symbols().iter().any(|&s| s != DOT), "chain never moved");
    }

    #[test]
    fn order_parameters() {
        let p = Patch::constant(make_box(2), DOT);
        let s: HashMap<String, f64> = order_parameter(&p, ModelTag::Vertex).into_iter().collect();
        assert_eq!((s["dot"], s["cross"], s["arrow"], s["largest_dot"]), (1.0, 0.0, 0.0, 1.0));
        let board = Patch::from_fn(Volume::rect(0, 0, 4, 4), |z| ((z.x + z.y) % 2) as Symbol);
        let s: HashMap<String, f64> = order_parameter(&board, ModelTag::PottsSpin { q: 2 }).into_iter().collect();
        assert_eq!((s["color0"], s["color1"], s["max_color"]), (0.5, 0.5, 0.5));
    }

    #[test]
    fn max_entropy_tones_are_uniform() {
        let (spec, phi) = potts_cross_spec(2).unwrap();
        let l = lift(Arc::new(spec), phi, 3).unwrap();
        let mut chain = ChainSpec::new(
            ChainModel::PottsSpin { q: 2 },
            0.0,
            LatticeSpec::Torus { w: 6, h: 6 },
            l.symbol(0, 0),
        );
        chain.sweeps = 400;
        chain.thin = 1;
        chain.burn_in = Some(20);
        chain.seed = 3;
        // tone counts per level on one site
        let mut counts: HashMap<u32, Vec<u64>> = HashMap::new();
        sample_max_entropy(&l, &chain, 3, |_, p| {
            let s = p.get(Site::new(2, 2)).unwrap();
            let c = l.color(s);
            let level = l.phi.level(c);
            let k = l.tones_of(c) as usize;
            counts.entry(level).or_insert_with(|| vec![0; k])[l.tone(s) as usize] += 1;
        })
        .unwrap();
        for (_, v) in counts {
            let n: u64 = v.iter().sum();
            let e = n as f64 / v.len() as f64;
            let p = 1.0 / v.len() as f64;
            for c in v {
                assert!((c as f64 - e).abs() <= 4.0 * (n as f64 * p * (1.0 - p)).sqrt() + 1.0);
            }
        }
    }

    #[test]
    fn lifted_chain_agrees_with_decorated_base_chain() {
        let (spec, phi) = potts_cross_spec(2).unwrap();
        let l = lift(Arc::new(spec), phi, 2).unwrap();
        let v = Volume::rect(0, 0, 3, 2);
        let mut rng = stream(&[5]);
        let spins = Patch::from_fn(v.fatten(3, crate::lattice::Metric::Linf), |_| rng.gen_range(0..2));
        let frame = Volume::new(v.fatten(2, crate::lattice::Metric::Linf).sites().iter().copied().filter(|z| !v.contains(*z)));
        let letters = crate::models::potts::cross_letters(2, &spins, &frame);
        let boundary = lift_sample(&l, &letters, &mut rng);
        let start = crate::models::potts::cross_letters(2, &spins, &v);
        let lattice = LatticeSpec::Pinned { w: 3, h: 2, boundary };
        let site = Site::new(1, 0);
        let freq = |lifted: bool| -> (f64, f64) {
            let mut reps = Vec::new();
            for r in 0..8 {
                let mut chain = ChainSpec::new(
                    ChainModel::Sft { spec: l.lifted.clone(), phi: None, block: 3, classes: true },
                    0.0,
                    lattice.clone(),
                    l.symbol(start.get(Site::new(0, 0)).unwrap(), 0),
                );
                chain.sweeps = 2000;
                chain.thin = 1;
                chain.seed = 100 + lifted as u64;
                chain.chain_id = r;
                let mut hits = 0.0;
                let mut n = 0.0;
                let mut rec = |p: &Patch| {
                    n += 1.0;
                    hits += (l.color(p.get(site).unwrap()) % 2 == 0) as u8 as f64;
                };
                let mut g = Grid::new(&chain.lattice, 0);
                for (z, a) in start.iter() {
                    g.set(z, l.symbol(a, 0));
                }
                if lifted {
                    run_chain_from(&chain, g, |_, g| rec(&g.to_patch())).unwrap();
                } else {
                    let mut base = chain.clone();
                    base.model = ChainModel::Sft { spec: l.color_rules().clone(), phi: Some(l.phi.clone()), block: 3, classes: false };
                    base.beta = l.beta();
                    if let LatticeSpec::Pinned { w, h, boundary } = &chain.lattice {
                        base.lattice = LatticeSpec::Pinned { w: *w, h: *h, boundary: l.project(boundary) };
                    }
                    let mut bg = Grid::new(&base.lattice, 0);
                    for (z, a) in start.iter() {
                        bg.set(z, a);
                    }
                    run_chain_from(&base, bg, |_, g| rec(&l_lift(&l, &g.to_patch()))).unwrap();
                }
                reps.push(hits / n);
            }
            mean_var(&reps)
        };
        let (ma, va) = freq(true);
        let (mb, vb) = freq(false);
        let se = ((va + vb) / 8.0).sqrt().max(1e-3);
        assert!((ma - mb).abs() <= 3.0 * se + 0.02, "{ma} vs {mb} (se {se})");
    }

    fn l_lift(l: &ToneLift, p: &Patch) -> Patch {
        lift_sample(l, p, &mut stream(&[0]))
    }
}
