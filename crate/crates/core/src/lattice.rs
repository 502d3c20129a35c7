//! Sites, finite volumes, patches and windows on the square lattice.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub type Symbol = u32;

/// A point of Z^2.
///
/// Sites sort in canonical order: rows top to bottom (y descending),
/// then left to right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Site {
    pub x: i32,
    pub y: i32,
}

impl Site {
    pub const ORIGIN: Site = Site { x: 0, y: 0 };

    pub const fn new(x: i32, y: i32) -> Self {
        Site { x, y }
    }

    pub fn l1(self) -> i32 {
        self.x.abs() + self.y.abs()
    }

    pub fn linf(self) -> i32 {
        self.x.abs().max(self.y.abs())
    }
}

impl std::ops::Add for Site {
    type Output = Site;
    fn add(self, o: Site) -> Site {
        Site::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Site {
    type Output = Site;
    fn sub(self, o: Site) -> Site {
        Site::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Neg for Site {
    type Output = Site;
    fn neg(self) -> Site {
        Site::new(-self.x, -self.y)
    }
}

impl Ord for Site {
    fn cmp(&self, other: &Self) -> Ordering {
        other.y.cmp(&self.y).then(self.x.cmp(&other.x))
    }
}

impl PartialOrd for Site {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    L1,
    Linf,
}

impl Metric {
    pub fn norm(self, z: Site) -> i32 {
        match self {
            Metric::L1 => z.l1(),
            Metric::Linf => z.linf(),
        }
    }
}

/// A finite set of sites kept in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Volume {
    sites: Vec<Site>,
}

impl Volume {
    pub fn new<I: IntoIterator<Item = Site>>(sites: I) -> Self {
        let set: BTreeSet<Site> = sites.into_iter().collect();
        Volume { sites: set.into_iter().collect() }
    }

    /// Axis-aligned rectangle with lower-left corner `(x0, y0)`.
    pub fn rect(x0: i32, y0: i32, w: i32, h: i32) -> Self {
        let mut sites = Vec::with_capacity((w.max(0) * h.max(0)) as usize);
        for y in (y0..y0 + h).rev() {
            for x in x0..x0 + w {
                sites.push(Site::new(x, y));
            }
        }
        Volume { sites }
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, z: Site) -> bool {
        self.sites.binary_search(&z).is_ok()
    }

    pub fn index_of(&self, z: Site) -> Option<usize> {
        self.sites.binary_search(&z).ok()
    }

    pub fn union(&self, other: &Volume) -> Volume {
        Volume::new(self.sites.iter().chain(other.sites.iter()).copied())
    }

    pub fn translate(&self, z: Site) -> Volume {
        Volume { sites: self.sites.iter().map(|&s| s + z).collect() }
    }

    /// Inclusive bounding box `(xmin, ymin, xmax, ymax)`.
    pub fn bounds(&self) -> Option<(i32, i32, i32, i32)> {
        let first = self.sites.first()?;
        let mut b = (first.x, first.y, first.x, first.y);
        for s in &self.sites {
            b.0 = b.0.min(s.x);
            b.1 = b.1.min(s.y);
            b.2 = b.2.max(s.x);
            b.3 = b.3.max(s.y);
        }
        Some(b)
    }

    /// Sites within distance `r` of the volume, the volume included.
    pub fn fatten(&self, r: i32, metric: Metric) -> Volume {
        let mut set: BTreeSet<Site> = self.sites.iter().copied().collect();
        for &s in &self.sites {
            for dy in -r..=r {
                for dx in -r..=r {
                    let d = Site::new(dx, dy);
                    if metric.norm(d) <= r {
                        set.insert(s + d);
                    }
                }
            }
        }
        Volume { sites: set.into_iter().collect() }
    }
}

/// The `(2n+1) x (2n+1)` box centered at the origin.
pub fn make_box(n: i32) -> Volume {
    Volume::rect(-n, -n, 2 * n + 1, 2 * n + 1)
}

/// The r-border of `v`: sites outside `v` at distance at most `r`.
pub fn boundary(v: &Volume, r: i32, metric: Metric) -> Volume {
    let fat = v.fatten(r, metric);
    Volume { sites: fat.sites.into_iter().filter(|s| !v.contains(*s)).collect() }
}

/// Chebyshev distance between two volumes.
pub fn linf_distance(a: &Volume, b: &Volume) -> i32 {
    let mut best = i32::MAX;
    for &s in a.sites() {
        for &t in b.sites() {
            best = best.min((s - t).linf());
        }
    }
    best
}

/// A symbol assignment on a finite volume.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Patch {
    volume: Volume,
    symbols: Vec<Symbol>,
}

impl Patch {
    pub fn new(volume: Volume, symbols: Vec<Symbol>) -> Self {
        assert_eq!(volume.len(), symbols.len(), "patch symbols must cover the volume");
        Patch { volume, symbols }
    }

    pub fn from_fn(volume: Volume, mut f: impl FnMut(Site) -> Symbol) -> Self {
        let symbols = volume.sites().iter().map(|&s| f(s)).collect();
        Patch { volume, symbols }
    }

    pub fn constant(volume: Volume, a: Symbol) -> Self {
        let symbols = vec![a; volume.len()];
        Patch { volume, symbols }
    }

    pub fn empty() -> Self {
        Patch { volume: Volume::default(), symbols: Vec::new() }
    }

    pub fn from_pairs<I: IntoIterator<Item = (Site, Symbol)>>(pairs: I) -> Result<Self> {
        let mut v: Vec<(Site, Symbol)> = pairs.into_iter().collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        for w in v.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::OverlappingVolumes(w[0].0.x, w[0].0.y));
            }
        }
        let (sites, symbols): (Vec<Site>, Vec<Symbol>) = v.into_iter().unzip();
        Ok(Patch { volume: Volume { sites }, symbols })
    }

    pub fn volume(&self) -> &Volume {
        &self.volume
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn get(&self, z: Site) -> Option<Symbol> {
        self.volume.index_of(z).map(|i| self.symbols[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Site, Symbol)> + '_ {
        self.volume.sites().iter().copied().zip(self.symbols.iter().copied())
    }

    pub fn restrict(&self, v: &Volume) -> Option<Patch> {
        let symbols = v.sites().iter().map(|&s| self.get(s)).collect::<Option<Vec<_>>>()?;
        Some(Patch { volume: v.clone(), symbols })
    }

    pub fn map(&self, mut f: impl FnMut(Symbol) -> Symbol) -> Patch {
        Patch { volume: self.volume.clone(), symbols: self.symbols.iter().map(|&a| f(a)).collect() }
    }

    pub fn with(&self, z: Site, a: Symbol) -> Patch {
        let mut p = self.clone();
        let i = p.volume.index_of(z).expect("site outside patch");
        p.symbols[i] = a;
        p
    }

    /// Text format: a `volume WxH origin X Y` header, then rows top first.
    /// `origin` is the lower-left corner of the bounding box; sites of the
    /// box outside the volume are written as `.`.
    pub fn to_text(&self, names: &[String]) -> String {
        let mut out = String::new();
        let Some((x0, y0, x1, y1)) = self.volume.bounds() else {
            return "volume 0x0 origin 0 0\n".to_string();
        };
        let _ = writeln!(out, "volume {}x{} origin {} {}", x1 - x0 + 1, y1 - y0 + 1, x0, y0);
        for y in (y0..=y1).rev() {
            let row: Vec<&str> = (x0..=x1)
                .map(|x| match self.get(Site::new(x, y)) {
                    Some(a) => names[a as usize].as_str(),
                    None => ".",
                })
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }

    pub fn from_text(text: &str, names: &[String]) -> Result<Patch> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("missing volume header".into()))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 5 || parts[0] != "volume" || parts[2] != "origin" {
            return Err(Error::Parse(format!("bad header `{header}`")));
        }
        let (w, h) = parts[1]
            .split_once('x')
            .and_then(|(a, b)| Some((a.parse::<i32>().ok()?, b.parse::<i32>().ok()?)))
            .ok_or_else(|| Error::Parse(format!("bad size `{}`", parts[1])))?;
        let x0: i32 = parts[3].parse().map_err(|_| Error::Parse("bad origin x".into()))?;
        let y0: i32 = parts[4].parse().map_err(|_| Error::Parse("bad origin y".into()))?;
        let mut pairs = Vec::new();
        for row in 0..h {
            let line = lines.next().ok_or_else(|| Error::Parse("missing patch row".into()))?;
            let cells: Vec<&str> = line.split_whitespace().collect();
            if cells.len() != w as usize {
                return Err(Error::Parse(format!("row {row} has {} cells, expected {w}", cells.len())));
            }
            for (col, cell) in cells.iter().enumerate() {
                if *cell == "." {
                    continue;
                }
                let a = names
                    .iter()
                    .position(|n| n == cell)
                    .ok_or_else(|| Error::UnknownSymbol(cell.to_string()))?;
                pairs.push((Site::new(x0 + col as i32, y0 + h - 1 - row), a as Symbol));
            }
        }
        Patch::from_pairs(pairs)
    }
}

/// `a ⊕ b` on disjoint volumes.
pub fn compose(a: &Patch, b: &Patch) -> Result<Patch> {
    for &s in a.volume.sites() {
        if b.volume.contains(s) {
            return Err(Error::OverlappingVolumes(s.x, s.y));
        }
    }
    Patch::from_pairs(a.iter().chain(b.iter()))
}

pub fn shift(p: &Patch, z: Site) -> Patch {
    Patch { volume: p.volume.translate(z), symbols: p.symbols.clone() }
}

/// Window shape: offsets containing the origin, in a fixed order that
/// defines the layout of allowed patches.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Window {
    offsets: Vec<Site>,
}

impl Window {
    pub fn new(offsets: Vec<Site>) -> Result<Self> {
        if !offsets.contains(&Site::ORIGIN) {
            return Err(Error::Invalid("window must contain the origin".into()));
        }
        let set: BTreeSet<Site> = offsets.iter().copied().collect();
        if set.len() != offsets.len() {
            return Err(Error::Invalid("duplicate window offset".into()));
        }
        Ok(Window { offsets })
    }

    /// `{o, e1, e2, -e1, -e2}` in that order.
    pub fn cross() -> Self {
        Window {
            offsets: vec![
                Site::new(0, 0),
                Site::new(1, 0),
                Site::new(0, 1),
                Site::new(-1, 0),
                Site::new(0, -1),
            ],
        }
    }

    /// `{o, e1, e2}`.
    pub fn ell() -> Self {
        Window { offsets: vec![Site::new(0, 0), Site::new(1, 0), Site::new(0, 1)] }
    }

    pub fn single() -> Self {
        Window { offsets: vec![Site::ORIGIN] }
    }

    /// Square of side `2r+1` centered at the origin, canonical order.
    pub fn square(r: i32) -> Self {
        Window { offsets: make_box(r).sites().to_vec() }
    }

    pub fn offsets(&self) -> &[Site] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn is_cross(&self) -> bool {
        *self == Window::cross()
    }

    pub fn radius(&self) -> i32 {
        self.offsets.iter().map(|s| s.linf()).max().unwrap_or(0)
    }

    pub fn volume(&self) -> Volume {
        Volume::new(self.offsets.iter().copied())
    }

    /// Anchors `a` such that `a + window` lies inside `v`.
    pub fn anchors_inside(&self, v: &Volume) -> Vec<Site> {
        let mut anchors = BTreeSet::new();
        for &s in v.sites() {
            for &o in &self.offsets {
                let a = s - o;
                if self.offsets.iter().all(|&d| v.contains(a + d)) {
                    anchors.insert(a);
                }
            }
        }
        anchors.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn boxes_and_borders() {
        assert_eq!(make_box(0).len(), 1);
        assert_eq!(make_box(1).len(), 9);
        assert_eq!(make_box(2).len(), 25);
        let b = make_box(1);
        assert_eq!(boundary(&b, 1, Metric::L1).len(), 12);
        assert_eq!(boundary(&b, 1, Metric::Linf).len(), 16);
        assert_eq!(boundary(&make_box(0), 1, Metric::L1).len(), 4);
    }

    #[test]
    fn canonical_order_is_rows_from_the_top() {
        let v = Volume::rect(0, 0, 2, 2);
        assert_eq!(
            v.sites(),
            &[Site::new(0, 1), Site::new(1, 1), Site::new(0, 0), Site::new(1, 0)]
        );
    }

    #[test]
    fn compose_rejects_overlap() {
        let a = Patch::constant(Volume::new([Site::new(0, 0)]), 0);
        let b = Patch::constant(Volume::new([Site::new(1, 0)]), 1);
        let c = compose(&a, &b).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.get(Site::new(1, 0)), Some(1));
        assert!(matches!(compose(&a, &a), Err(Error::OverlappingVolumes(0, 0))));
    }

    #[test]
    fn text_round_trip_with_holes() {
        let names: Vec<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        let v = boundary(&make_box(0), 1, Metric::L1);
        let p = Patch::from_fn(v, |s| (s.x == 1) as Symbol);
        let t = p.to_text(&names);
        assert!(t.starts_with("volume 3x3 origin -1 -1\n"));
        assert_eq!(Patch::from_text(&t, &names).unwrap(), p);
    }

    #[test]
    fn anchors_of_cross_in_box() {
        assert_eq!(Window::cross().anchors_inside(&make_box(1)), vec![Site::ORIGIN]);
        assert_eq!(Window::cross().anchors_inside(&make_box(2)).len(), 9);
    }

    fn arb_patch() -> impl Strategy<Value = Patch> {
        proptest::collection::btree_map((-4i32..4, -4i32..4), 0u32..3, 0..12).prop_map(|m| {
            Patch::from_pairs(m.into_iter().map(|((x, y), a)| (Site::new(x, y), a))).unwrap()
        })
    }

    proptest! {
        #[test]
        fn border_is_disjoint_and_sized(n in 0i32..5, r in 1i32..3) {
            let v = make_box(n);
            for m in [Metric::L1, Metric::Linf] {
                let b = boundary(&v, r, m);
                prop_assert!(b.sites().iter().all(|s| !v.contains(*s)));
            }
            prop_assert_eq!(boundary(&v, 1, Metric::L1).len() as i32, 4 * (2 * n + 1));
            prop_assert_eq!(boundary(&v, 1, Metric::Linf).len() as i32, 8 * n + 8);
        }

        #[test]
        fn shift_is_a_group_action(p in arb_patch(), a in (-5i32..5, -5i32..5), b in (-5i32..5, -5i32..5)) {
            let z = Site::new(a.0, a.1);
            let w = Site::new(b.0, b.1);
            prop_assert_eq!(shift(&shift(&p, z), -z), p.clone());
            prop_assert_eq!(shift(&p, z + w), shift(&shift(&p, z), w));
        }

        #[test]
        fn compose_commutes(p in arb_patch(), dx in 10i32..20) {
            let q = shift(&p, Site::new(dx, 0));
            prop_assert_eq!(compose(&p, &q).unwrap(), compose(&q, &p).unwrap());
        }
    }
}
