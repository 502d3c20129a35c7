//! Contours of vertex configurations: extraction, loops around the origin,
//! the step matrix M_α, the flip that removes a loop, and Peierls bounds.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::lattice::{Patch, Site, Symbol, Volume};
use crate::models::vertex::{tau, Dir, VertexSymbol, CROSS, DOT};
use crate::models::vertex_spec;
use crate::sft::{check_local, default_budget};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Ccw,
    Cw,
}

/// A maximal head-to-tail chain of arrow sites.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    /// Sites in the direction of motion.
    pub sites: Vec<Site>,
    pub closed: bool,
    pub orientation: Option<Orientation>,
    /// Lattice sites strictly inside a closed path.
    pub interior: Volume,
}

impl Path {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn site_set(&self) -> Volume {
        Volume::new(self.sites.iter().copied())
    }

    pub fn encircles(&self, z: Site) -> bool {
        self.closed && self.interior.contains(z)
    }
}

#[derive(Debug, Clone)]
pub struct ContourSet {
    pub arrow_sites: Volume,
    pub paths: Vec<Path>,
}

fn arrow(s: Symbol) -> Option<(Dir, Dir)> {
    match VertexSymbol::of(s) {
        VertexSymbol::Arrow { inn, out } => Some((inn, out)),
        _ => None,
    }
}

/// Twice the signed area of the polygon through the sites.
fn signed_area2(sites: &[Site]) -> i64 {
    let n = sites.len();
    (0..n)
        .map(|i| {
            let (a, b) = (sites[i], sites[(i + 1) % n]);
            a.x as i64 * b.y as i64 - b.x as i64 * a.y as i64
        })
        .sum()
}

/// Sites strictly inside a closed lattice polygon, by ray casting.
fn polygon_interior(sites: &[Site]) -> Volume {
    let on: BTreeSet<Site> = sites.iter().copied().collect();
    let (x0, x1) = (sites.iter().map(|s| s.x).min().unwrap(), sites.iter().map(|s| s.x).max().unwrap());
    let (y0, y1) = (sites.iter().map(|s| s.y).min().unwrap(), sites.iter().map(|s| s.y).max().unwrap());
    let n = sites.len();
    let mut inside = Vec::new();
    for y in y0 + 1..y1 {
        for x in x0 + 1..x1 {
            let z = Site::new(x, y);
            if on.contains(&z) {
                continue;
            }
            let crossings = (0..n)
                .filter(|&i| {
                    let (a, b) = (sites[i], sites[(i + 1) % n]);
                    a.x == b.x && a.x > x && a.y.min(b.y) == y
                })
                .count();
            if crossings % 2 == 1 {
                inside.push(z);
            }
        }
    }
    Volume::new(inside)
}

fn closed_path(sites: Vec<Site>) -> Path {
    let orientation = if signed_area2(&sites) > 0 { Orientation::Ccw } else { Orientation::Cw };
    let interior = polygon_interior(&sites);
    Path { sites, closed: true, orientation: Some(orientation), interior }
}

/// Split the arrow sites of a vertex patch into paths.
pub fn extract(p: &Patch) -> Result<ContourSet> {
    let arrows: Vec<Site> = p.iter().filter(|&(_, s)| arrow(s).is_some()).map(|(z, _)| z).collect();
    let arrow_sites = Volume::new(arrows.iter().copied());
    let step = |z: Site, forward: bool| -> Result<Option<Site>> {
        let (inn, out) = arrow(p.get(z).unwrap()).unwrap();
        let d = if forward { out } else { inn };
        let next = z + d.vec();
        match p.get(next) {
            None => Ok(None),
            Some(s) => match arrow(s) {
                Some((ni, no)) if (forward && ni == d.opposite()) || (!forward && no == d.opposite()) => Ok(Some(next)),
                _ => Err(Error::InconsistentPath(z.x, z.y)),
            },
        }
    };
    let mut seen = BTreeSet::new();
    let mut paths = Vec::new();
    for &z0 in &arrows {
        if seen.contains(&z0) {
            continue;
        }
        // walk back to the tail or around the cycle
        let mut start = z0;
        let mut closed = false;
        while let Some(prev) = step(start, false)? {
            if prev == z0 {
                closed = true;
                break;
            }
            start = prev;
        }
        let mut sites = vec![start];
        let mut z = start;
        while let Some(next) = step(z, true)? {
            if next == start {
                break;
            }
            if sites.len() > arrows.len() {
                return Err(Error::InconsistentPath(next.x, next.y));
            }
            sites.push(next);
            z = next;
        }
        seen.extend(sites.iter().copied());
        paths.push(if closed {
            closed_path(sites)
        } else {
            Path { sites, closed: false, orientation: None, interior: Volume::default() }
        });
    }
    Ok(ContourSet { arrow_sites, paths })
}

/// Step matrix over {straight, left, right}: no two equal turns in a row.
pub fn m_alpha() -> [[u64; 3]; 3] {
    [[1, 1, 1], [1, 0, 1], [1, 1, 0]]
}

fn mat_mul(a: &[[u128; 3]; 3], b: &[[u128; 3]; 3]) -> [[u128; 3]; 3] {
    let mut c = [[0u128; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

pub fn trace_m_alpha_pow(ell: u32) -> u128 {
    let m = m_alpha().map(|r| r.map(|v| v as u128));
    let mut p = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
    for _ in 0..ell {
        p = mat_mul(&p, &m);
    }
    p[0][0] + p[1][1] + p[2][2]
}

/// `(1+√2)^ℓ + (1-√2)^ℓ + (-1)^ℓ` in exact integer arithmetic.
pub fn trace_formula(ell: u32) -> i128 {
    let (mut a, mut b) = (1i128, 0i128);
    for _ in 0..ell {
        (a, b) = (a + 2 * b, a + b);
    }
    2 * a + if ell % 2 == 0 { 1 } else { -1 }
}

/// Eigenvalues of M_α from its characteristic polynomial, ascending.
pub fn m_alpha_spectrum() -> [f64; 3] {
    let m = m_alpha().map(|r| r.map(|v| v as f64));
    let tr = m[0][0] + m[1][1] + m[2][2];
    let minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0] + m[1][1] * m[2][2]
        - m[1][2] * m[2][1];
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    // λ³ - tr λ² + minors λ - det, depressed with λ = t + tr/3
    let p = minors - tr * tr / 3.0;
    let q = -2.0 * tr.powi(3) / 27.0 + tr * minors / 3.0 - det;
    let r = 2.0 * (-p / 3.0).sqrt();
    let phi = (3.0 * q / (p * r)).clamp(-1.0, 1.0).acos() / 3.0;
    let mut roots = [0.0; 3];
    for (k, root) in roots.iter_mut().enumerate() {
        *root = r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + tr / 3.0;
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots
}

/// Largest deviation of the computed spectrum from {-1, 1-√2, 1+√2}.
pub fn spectrum_check() -> f64 {
    let s2 = std::f64::consts::SQRT_2;
    let e = [-1.0, 1.0 - s2, 1.0 + s2];
    m_alpha_spectrum().iter().zip(&e).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// An oriented closed loop given by its sites in the direction of motion.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Loop {
    pub sites: Vec<Site>,
}

impl Loop {
    pub fn orientation(&self) -> Orientation {
        if signed_area2(&self.sites) > 0 {
            Orientation::Ccw
        } else {
            Orientation::Cw
        }
    }

    pub fn symbols(&self) -> Vec<Symbol> {
        let n = self.sites.len();
        (0..n)
            .map(|i| {
                let z = self.sites[i];
                let inn = Dir::from_vec(self.sites[(i + n - 1) % n] - z).unwrap();
                let out = Dir::from_vec(self.sites[(i + 1) % n] - z).unwrap();
                VertexSymbol::Arrow { inn, out }.index()
            })
            .collect()
    }

    /// The loop in a homogeneous sea: ⊙ on its left, ⊗ on its right.
    pub fn embed(&self, margin: i32) -> Patch {
        let path = closed_path(self.sites.clone());
        let (inside, outside) = match path.orientation.unwrap() {
            Orientation::Ccw => (DOT, CROSS),
            Orientation::Cw => (CROSS, DOT),
        };
        let sites = Volume::new(self.sites.iter().copied());
        let (x0, y0, x1, y1) = sites.bounds().unwrap();
        let v = Volume::rect(x0 - margin, y0 - margin, x1 - x0 + 1 + 2 * margin, y1 - y0 + 1 + 2 * margin);
        let syms = self.symbols();
        Patch::from_fn(v, |z| match self.sites.iter().position(|&s| s == z) {
            Some(i) => syms[i],
            None if path.interior.contains(z) => inside,
            None => outside,
        })
    }

    /// Same loop with the start moved to its minimal site.
    pub fn canonical(&self) -> Loop {
        let i = (0..self.sites.len()).min_by_key(|&i| self.sites[i]).unwrap();
        let mut sites = self.sites[i..].to_vec();
        sites.extend_from_slice(&self.sites[..i]);
        Loop { sites }
    }
}

fn turn(a: Site, b: Site) -> usize {
    let cross = a.x * b.y - a.y * b.x;
    match cross {
        0 => 0,
        1 => 1,
        _ => 2,
    }
}

/// Oriented closed loops of length `ell` through arrow-admissible steps
/// that have the origin strictly inside, each listed once from its
/// minimal site.
pub fn encircling_loops(ell: usize, budget: u64) -> Result<Vec<Loop>> {
    if ell % 2 == 1 || ell < 8 {
        return Ok(Vec::new());
    }
    let (spec, _) = vertex_spec();
    let m = m_alpha();
    let half = (ell / 2) as i32;
    let mut out = Vec::new();
    let mut nodes = 0u64;
    for y in 1..half {
        for x in -half..half {
            let s = Site::new(x, y);
            let mut path = vec![s];
            dfs(&mut path, ell, &m, &mut nodes, budget, &mut out)?;
        }
    }
    let mut loops = Vec::new();
    for l in out {
        let p = closed_path(l.sites.clone());
        if p.interior.contains(Site::ORIGIN) && check_local(&spec, &l.embed(2))? {
            loops.push(l);
        }
    }
    loops.sort();
    Ok(loops)
}

fn dfs(path: &mut Vec<Site>, ell: usize, m: &[[u64; 3]; 3], nodes: &mut u64, budget: u64, out: &mut Vec<Loop>) -> Result<()> {
    *nodes += 1;
    if *nodes > budget {
        return Err(Error::SearchBudgetExceeded(budget));
    }
    let s = path[0];
    let z = *path.last().unwrap();
    let k = path.len();
    for d in Dir::ALL {
        let next = z + d.vec();
        if k >= 2 && next == path[k - 2] {
            continue;
        }
        if k >= 3 && m[turn(path[k - 2] - path[k - 3], z - path[k - 2])][turn(z - path[k - 2], next - z)] == 0 {
            continue;
        }
        if next == s {
            if k == ell && closes(path, m) {
                out.push(Loop { sites: path.clone() });
            }
            continue;
        }
        if k == ell || next <= s || path.contains(&next) {
            continue;
        }
        let remaining = ell - k;
        if ((next - s).l1() as usize) > remaining {
            continue;
        }
        // no contact with earlier sites other than the one just left
        let touches = path[..k - 1]
            .iter()
            .enumerate()
            .any(|(i, &w)| (w - next).l1() == 1 && !(i == 0 && k + 1 == ell));
        if touches {
            continue;
        }
        path.push(next);
        dfs(path, ell, m, nodes, budget, out)?;
        path.pop();
    }
    Ok(())
}

fn closes(path: &[Site], m: &[[u64; 3]; 3]) -> bool {
    let n = path.len();
    let steps: Vec<Site> = (0..n).map(|i| path[(i + 1) % n] - path[i]).collect();
    let turns: Vec<usize> = (0..n).map(|i| turn(steps[i], steps[(i + 1) % n])).collect();
    (0..n).all(|i| m[turns[i]][turns[(i + 1) % n]] == 1)
}

#[derive(Debug, Clone)]
pub struct LoopCensus {
    pub ell: usize,
    pub count: u64,
    pub ccw: u64,
    pub cw: u64,
    pub bound: f64,
}

pub fn loop_bound(ell: usize) -> f64 {
    let h = ell.div_ceil(2) as f64;
    std::f64::consts::PI * h * h * trace_m_alpha_pow(ell as u32) as f64
}

pub fn enumerate_encircling_loops(ell: usize) -> Result<LoopCensus> {
    let loops = encircling_loops(ell, default_budget())?;
    let ccw = loops.iter().filter(|l| l.orientation() == Orientation::Ccw).count() as u64;
    let census = LoopCensus { ell, count: loops.len() as u64, ccw, cw: loops.len() as u64 - ccw, bound: loop_bound(ell) };
    debug_assert!(census.count as f64 <= census.bound);
    Ok(census)
}

/// Replace a closed loop by the ground symbol outside it and apply τ to
/// its interior.
pub fn tau_flip(p: &Patch, path: &Path) -> Result<Patch> {
    if !path.closed {
        return Err(Error::LoopNotClosed);
    }
    if path.interior.sites().iter().any(|&z| !p.volume().contains(z)) {
        return Err(Error::InteriorClipped);
    }
    let fill = match path.orientation {
        Some(Orientation::Ccw) => CROSS,
        _ => DOT,
    };
    let on: BTreeSet<Site> = path.sites.iter().copied().collect();
    Ok(Patch::new(
        p.volume().clone(),
        p.iter()
            .map(|(z, s)| {
                if on.contains(&z) {
                    fill
                } else if path.interior.contains(z) {
                    tau(s)
                } else {
                    s
                }
            })
            .collect(),
    ))
}

pub fn beta_star() -> f64 {
    (1.0 + std::f64::consts::SQRT_2).ln()
}

/// `3π⌈ℓ/2⌉² exp(ℓ(β* - β))`.
pub fn peierls_bound(beta: f64, ell: usize) -> f64 {
    let h = ell.div_ceil(2) as f64;
    3.0 * std::f64::consts::PI * h * h * (ell as f64 * (beta_star() - beta)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::{energy, gibbs_conditional};
    use crate::lattice::{boundary, make_box, Metric};
    use crate::models::DihedralAction;

    fn ring(orientation: Orientation) -> Loop {
        let mut sites = vec![
            Site::new(1, -1),
            Site::new(1, 0),
            Site::new(1, 1),
            Site::new(0, 1),
            Site::new(-1, 1),
            Site::new(-1, 0),
            Site::new(-1, -1),
            Site::new(0, -1),
        ];
        if orientation == Orientation::Cw {
            sites.reverse();
        }
        Loop { sites }
    }

    #[test]
    fn m_alpha_traces() {
        assert_eq!(trace_m_alpha_pow(1), 1);
        assert_eq!(trace_m_alpha_pow(2), 7);
        for ell in 1..=20 {
            assert_eq!(trace_m_alpha_pow(ell) as i128, trace_formula(ell));
        }
    }

    #[test]
    fn spectrum() {
        assert!(spectrum_check() <= 1e-12);
        let s = m_alpha_spectrum();
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // det M_α = 1 = (1+√2)(1-√2)(-1)
        assert!((s.iter().product::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extract_minimal_loop() {
        let p = ring(Orientation::Ccw).embed(2);
        let (spec, phi) = vertex_spec();
        assert!(check_local(&spec, &p).unwrap());
        let c = extract(&p).unwrap();
        assert_eq!(c.paths.len(), 1);
        let path = &c.paths[0];
        assert!(path.closed);
        assert_eq!(path.orientation, Some(Orientation::Ccw));
        assert_eq!(path.len(), 8);
        assert_eq!(path.interior.sites(), &[Site::ORIGIN]);
        assert_eq!(p.get(Site::ORIGIN), Some(DOT));
        assert_eq!(energy(&phi, &p).unwrap(), 8.0);
        let flipped = tau_flip(&p, path).unwrap();
        assert_eq!(flipped, Patch::constant(p.volume().clone(), CROSS));
        assert!(extract(&Patch::constant(make_box(2), DOT)).unwrap().paths.is_empty());
    }

    #[test]
    fn open_paths_and_errors() {
        let p = ring(Orientation::Ccw).embed(0);
        let inner = p.restrict(&Volume::rect(-1, -1, 3, 2)).unwrap();
        let c = extract(&inner).unwrap();
        assert_eq!(c.paths.len(), 1);
        assert!(!c.paths[0].closed);
        assert!(matches!(tau_flip(&inner, &c.paths[0]), Err(Error::LoopNotClosed)));
        let broken = p.with(Site::new(1, 0), VertexSymbol::Arrow { inn: Dir::N, out: Dir::S }.index());
        assert!(extract(&broken).is_err());
    }

    #[test]
    fn loop_counts() {
        assert_eq!(encircling_loops(7, 1_000_000).unwrap().len(), 0);
        let c8 = enumerate_encircling_loops(8).unwrap();
        assert_eq!((c8.count, c8.ccw, c8.cw), (2, 1, 1));
        assert!(c8.count as f64 <= c8.bound);
        let c10 = enumerate_encircling_loops(10).unwrap();
        assert!(c10.count as f64 <= c10.bound);
        assert_eq!(c10.ccw, c10.cw);
    }

    #[test]
    fn loops_are_rotation_invariant_and_embed() {
        let (spec, _) = vertex_spec();
        let loops = encircling_loops(12, 10_000_000).unwrap();
        assert!(!loops.is_empty());
        let set: BTreeSet<Loop> = loops.iter().cloned().collect();
        for g in DihedralAction::all().into_iter().filter(|g| !g.reflect) {
            for l in &loops {
                let r = Loop { sites: l.sites.iter().map(|&z| g.site(z)).collect() }.canonical();
                assert!(set.contains(&r));
            }
        }
        for l in &loops {
            let p = l.embed(2);
            assert!(check_local(&spec, &p).unwrap());
            let c = extract(&p).unwrap();
            assert_eq!(c.paths.len(), 1);
            assert_eq!(c.paths[0].orientation, Some(l.orientation()));
            let f = tau_flip(&p, &c.paths[0]).unwrap();
            assert!(check_local(&spec, &f).unwrap());
            assert!(extract(&f).unwrap().paths.is_empty());
        }
    }

    #[test]
    fn nested_flips() {
        // ccw ring inside a larger cw ring
        let inner = ring(Orientation::Ccw);
        let mut outer_sites = Vec::new();
        for x in -3..=3 {
            outer_sites.push(Site::new(x, 3));
        }
        for y in (-3..3).rev() {
            outer_sites.push(Site::new(3, y));
        }
        for x in (-3..3).rev() {
            outer_sites.push(Site::new(x, -3));
        }
        for y in -2..3 {
            outer_sites.push(Site::new(-3, y));
        }
        let outer = Loop { sites: outer_sites };
        assert_eq!(outer.orientation(), Orientation::Cw);
        let mut p = outer.embed(2);
        let inner_p = inner.embed(0);
        for (z, s) in inner_p.iter() {
            p = p.with(z, s);
        }
        for z in [Site::new(2, 0), Site::new(-2, 0), Site::new(0, 2), Site::new(0, -2)] {
            p = p.with(z, CROSS);
        }
        let (spec, phi) = vertex_spec();
        assert!(check_local(&spec, &p).unwrap());
        let c = extract(&p).unwrap();
        assert_eq!(c.paths.len(), 2);
        let h = energy(&phi, &p).unwrap();
        let by_len = |n: usize| c.paths.iter().find(|q| q.len() == n).unwrap().clone();
        let small = by_len(8);
        let big = by_len(24);
        let a = tau_flip(&p, &small).unwrap();
        assert_eq!(energy(&phi, &a).unwrap(), h - 8.0);
        assert!(check_local(&spec, &a).unwrap());
        let ca = extract(&a).unwrap();
        assert_eq!(ca.paths.len(), 1);
        assert_eq!(ca.paths[0].site_set(), big.site_set());
        let b = tau_flip(&p, &big).unwrap();
        assert_eq!(energy(&phi, &b).unwrap(), h - 24.0);
        assert!(check_local(&spec, &b).unwrap());
    }

    #[test]
    fn bounds() {
        let b = peierls_bound(beta_star(), 8);
        assert!((b - 3.0 * std::f64::consts::PI * 16.0).abs() < 1e-9);
        let b20 = peierls_bound(beta_star() + 1.0, 20);
        assert!((b20 / (3.0 * std::f64::consts::PI * 100.0 * (-20.0f64).exp()) - 1.0).abs() < 1e-12);
        let beta = beta_star() + 0.5;
        let tail: f64 = (200..2000).map(|l| peierls_bound(beta, l)).sum();
        assert!(tail < 1e-6);
        assert!((beta_star() - 0.881373587019543).abs() < 1e-12);
        assert!((beta_star().exp() - 1.0 - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn exact_small_volume_probability() {
        let (spec, phi) = vertex_spec();
        let v = make_box(2);
        let ring = boundary(&v, 1, Metric::Linf);
        let bc = Patch::constant(ring, DOT);
        let g = gibbs_conditional(&spec, &phi, 1.5, &v, &bc, 1).unwrap();
        let mut p8 = 0.0;
        for (interior, &pr) in g.support.iter().zip(&g.probs) {
            let c = extract(interior).unwrap();
            if c.paths.iter().any(|q| q.len() == 8 && q.encircles(Site::ORIGIN)) {
                p8 += pr;
            }
        }
        assert!(p8 > 0.0);
        assert!(p8 <= peierls_bound(1.5, 8));
    }
}
