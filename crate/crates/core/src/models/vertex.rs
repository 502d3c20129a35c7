//! The fourteen-symbol vertex model: twelve arrows that form oriented
//! contours, and two ground symbols ⊗ and ⊙ that contours separate.
//!
//! Contours keep ⊙ on their left. An arrow is stored by the side it enters
//! from and the side it leaves through.

use std::sync::Arc;

use crate::burton_steif::{lift_with_rules, ToneLift};
use crate::gibbs::{validate_hypothesis_h, Interaction};
use crate::lattice::{Patch, Site, Symbol, Window};
use crate::sft::SftSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dir {
    E,
    N,
    W,
    S,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::E, Dir::N, Dir::W, Dir::S];

    pub fn vec(self) -> Site {
        match self {
            Dir::E => Site::new(1, 0),
            Dir::N => Site::new(0, 1),
            Dir::W => Site::new(-1, 0),
            Dir::S => Site::new(0, -1),
        }
    }

    pub fn from_vec(z: Site) -> Option<Dir> {
        Dir::ALL.into_iter().find(|d| d.vec() == z)
    }

    pub fn ccw(self) -> Dir {
        Dir::ALL[(self as usize + 1) % 4]
    }

    pub fn cw(self) -> Dir {
        Dir::ALL[(self as usize + 3) % 4]
    }

    pub fn opposite(self) -> Dir {
        Dir::ALL[(self as usize + 2) % 4]
    }

    fn letter(self) -> char {
        match self {
            Dir::E => 'e',
            Dir::N => 'n',
            Dir::W => 'w',
            Dir::S => 's',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Turn {
    Straight,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Straight,
    Corner,
    CrossIn,
    DotOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VertexSymbol {
    Arrow { inn: Dir, out: Dir },
    Cross,
    Dot,
}

pub const CROSS: Symbol = 12;
pub const DOT: Symbol = 13;

/// Straight arrows first (up, down, right, left), then the corners ordered
/// by (entry side, exit side), then ⊗ and ⊙.
pub fn symbols() -> Vec<VertexSymbol> {
    use Dir::*;
    let mut v = vec![
        VertexSymbol::Arrow { inn: S, out: N },
        VertexSymbol::Arrow { inn: N, out: S },
        VertexSymbol::Arrow { inn: W, out: E },
        VertexSymbol::Arrow { inn: E, out: W },
    ];
    for inn in Dir::ALL {
        for out in [inn.ccw(), inn.cw()] {
            v.push(VertexSymbol::Arrow { inn, out });
        }
    }
    v.push(VertexSymbol::Cross);
    v.push(VertexSymbol::Dot);
    v
}

pub fn names() -> Vec<String> {
    symbols()
        .into_iter()
        .map(|s| match s {
            VertexSymbol::Cross => "x".to_string(),
            VertexSymbol::Dot => "o".to_string(),
            VertexSymbol::Arrow { inn, out } if inn == out.opposite() => match out {
                Dir::N => "^",
                Dir::S => "v",
                Dir::E => ">",
                Dir::W => "<",
            }
            .to_string(),
            VertexSymbol::Arrow { inn, out } => format!("{}{}", inn.letter(), out.letter()),
        })
        .collect()
}

impl VertexSymbol {
    pub fn of(s: Symbol) -> VertexSymbol {
        symbols()[s as usize]
    }

    pub fn index(self) -> Symbol {
        symbols().iter().position(|&t| t == self).unwrap() as Symbol
    }

    pub fn is_arrow(self) -> bool {
        matches!(self, VertexSymbol::Arrow { .. })
    }

    pub fn kind(self) -> Kind {
        match self {
            VertexSymbol::Cross => Kind::CrossIn,
            VertexSymbol::Dot => Kind::DotOut,
            VertexSymbol::Arrow { inn, out } if inn == out.opposite() => Kind::Straight,
            _ => Kind::Corner,
        }
    }

    pub fn turn(self) -> Option<Turn> {
        let VertexSymbol::Arrow { inn, out } = self else { return None };
        let heading = inn.opposite();
        Some(if out == heading {
            Turn::Straight
        } else if out == heading.ccw() {
            Turn::Left
        } else {
            Turn::Right
        })
    }

    /// For a side not on the path: `Some(true)` if it lies left of the
    /// direction of motion.
    pub fn side_is_left(self, side: Dir) -> Option<bool> {
        let VertexSymbol::Arrow { inn, out } = self else { return None };
        if side == inn || side == out {
            return None;
        }
        Some(match self.turn().unwrap() {
            Turn::Straight => side == out.ccw(),
            Turn::Left => false,
            Turn::Right => true,
        })
    }

    /// ⊗ and ⊙ swapped, arrows reversed.
    pub fn tau(self) -> VertexSymbol {
        match self {
            VertexSymbol::Cross => VertexSymbol::Dot,
            VertexSymbol::Dot => VertexSymbol::Cross,
            VertexSymbol::Arrow { inn, out } => VertexSymbol::Arrow { inn: out, out: inn },
        }
    }
}

pub fn tau(s: Symbol) -> Symbol {
    VertexSymbol::of(s).tau().index()
}

/// Whether `a` at z and `b` at z + d may be neighbors.
pub fn pair_ok(a: VertexSymbol, b: VertexSymbol, d: Dir) -> bool {
    match (a, b) {
        (VertexSymbol::Arrow { inn: ai, out: ao }, VertexSymbol::Arrow { inn: bi, out: bo }) => {
            (ao == d && bi == d.opposite()) || (bo == d.opposite() && ai == d)
        }
        (VertexSymbol::Arrow { .. }, g) => match a.side_is_left(d) {
            None => false,
            Some(true) => g == VertexSymbol::Dot,
            Some(false) => g == VertexSymbol::Cross,
        },
        (_, VertexSymbol::Arrow { .. }) => pair_ok(b, a, d.opposite()),
        _ => a == b,
    }
}

fn block_ok(cells: &[(Site, VertexSymbol)]) -> bool {
    let at = |z: Site| cells.iter().find(|c| c.0 == z).map(|c| c.1);
    for &(z, a) in cells {
        for d in [Dir::E, Dir::N] {
            if let Some(b) = at(z + d.vec()) {
                if !pair_ok(a, b, d) {
                    return false;
                }
            }
        }
        let square = [z, z + Site::new(1, 0), z + Site::new(0, 1), z + Site::new(1, 1)];
        if square.iter().all(|&s| at(s).is_some_and(|t| t.is_arrow())) {
            return false;
        }
    }
    true
}

/// Cross patches whose neighbors obey the pair rules and that complete to a
/// 3x3 block with no 2x2 block made only of arrows.
fn allowed_cross_patches() -> Vec<Vec<Symbol>> {
    let syms = symbols();
    let cross = Window::cross();
    let diag = [Site::new(1, 1), Site::new(-1, 1), Site::new(-1, -1), Site::new(1, -1)];
    let mut out = Vec::new();
    let mut combo = [0usize; 5];
    loop {
        let mut cells: Vec<(Site, VertexSymbol)> =
            cross.offsets().iter().zip(combo.iter()).map(|(&o, &i)| (o, syms[i])).collect();
        if block_ok(&cells) && complete(&mut cells, &diag, &syms) {
            out.push(combo.iter().map(|&i| i as Symbol).collect());
        }
        let mut k = 0;
        while k < 5 {
            combo[k] += 1;
            if combo[k] < syms.len() {
                break;
            }
            combo[k] = 0;
            k += 1;
        }
        if k == 5 {
            break;
        }
    }
    out
}

fn complete(cells: &mut Vec<(Site, VertexSymbol)>, rest: &[Site], syms: &[VertexSymbol]) -> bool {
    let Some((&z, tail)) = rest.split_first() else { return true };
    for &s in syms {
        cells.push((z, s));
        if block_ok(cells) && complete(cells, tail, syms) {
            cells.pop();
            return true;
        }
        cells.pop();
    }
    false
}

fn energy_table() -> Vec<f64> {
    symbols().iter().map(|s| s.is_arrow() as u8 as f64).collect()
}

/// The vertex SFT with energy 1 on arrows and 0 on ⊗, ⊙.
pub fn vertex_spec() -> (SftSpec, Interaction) {
    let spec = SftSpec::from_allowed(names(), Window::cross(), allowed_cross_patches()).expect("valid vertex rules");
    let phi = validate_hypothesis_h(&energy_table()).expect("integer energies");
    (spec, phi)
}

fn four_straights_around_ground(p: &[Symbol]) -> bool {
    let center = VertexSymbol::of(p[0]);
    !center.is_arrow() && p[1..].iter().all(|&s| VertexSymbol::of(s).kind() == Kind::Straight)
}

/// The vertex rules without the cross patches that surround a ground
/// symbol by four straight arrows.
pub fn vertex_rule_d_spec() -> SftSpec {
    let allowed = allowed_cross_patches().into_iter().filter(|p| !four_straights_around_ground(p)).collect();
    SftSpec::from_allowed(names(), Window::cross(), allowed).expect("valid vertex rules")
}

/// Tone lift with `N` tones on ⊗ and ⊙ whose colors also obey the
/// four-straight-arrow exclusion.
pub fn vertex_lift(n: u32) -> ToneLift {
    let (base, phi) = vertex_spec();
    lift_with_rules(Arc::new(base), Arc::new(vertex_rule_d_spec()), phi, n, true).expect("small alphabet")
}

pub fn vertex_lift_spec(n: u32) -> SftSpec {
    (*vertex_lift(n).lifted).clone()
}

/// One of the eight symmetries of the square with its action on symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DihedralAction {
    /// Quarter turns counterclockwise applied after the optional reflection.
    pub rotation: u8,
    /// Reflection across the horizontal axis, applied first.
    pub reflect: bool,
    pub symbol_perm: Vec<Symbol>,
}

impl DihedralAction {
    pub fn new(rotation: u8, reflect: bool) -> Self {
        let mut g = DihedralAction { rotation: rotation % 4, reflect, symbol_perm: Vec::new() };
        g.symbol_perm = symbols().iter().map(|&s| g.symbol(s).index()).collect();
        g
    }

    pub fn all() -> Vec<DihedralAction> {
        (0..8).map(|i| DihedralAction::new(i % 4, i >= 4)).collect()
    }

    pub fn dir(&self, d: Dir) -> Dir {
        Dir::from_vec(self.site(d.vec())).unwrap()
    }

    pub fn site(&self, z: Site) -> Site {
        let mut z = if self.reflect { Site::new(z.x, -z.y) } else { z };
        for _ in 0..self.rotation {
            z = Site::new(-z.y, z.x);
        }
        z
    }

    /// Reflections reverse the circulation of contours, so they also
    /// exchange ⊗ and ⊙.
    pub fn symbol(&self, s: VertexSymbol) -> VertexSymbol {
        match s {
            VertexSymbol::Arrow { inn, out } => VertexSymbol::Arrow { inn: self.dir(inn), out: self.dir(out) },
            VertexSymbol::Cross if self.reflect => VertexSymbol::Dot,
            VertexSymbol::Dot if self.reflect => VertexSymbol::Cross,
            g => g,
        }
    }

    pub fn compose(&self, other: &DihedralAction) -> DihedralAction {
        let probe = [Site::new(1, 0), Site::new(0, 1)];
        let target: Vec<Site> = probe.iter().map(|&z| self.site(other.site(z))).collect();
        DihedralAction::all()
            .into_iter()
            .find(|g| probe.iter().map(|&z| g.site(z)).collect::<Vec<_>>() == target)
            .unwrap()
    }

    pub fn apply(&self, p: &Patch) -> Patch {
        Patch::from_pairs(p.iter().map(|(z, a)| (self.site(z), self.symbol_perm[a as usize]))).unwrap()
    }
}

/// Arrows to α, keeping ⊗ and ⊙. Output symbols: 0 = ⊗, 1 = α, 2 = ⊙.
pub fn gray3(p: &Patch) -> Patch {
    p.map(|s| match VertexSymbol::of(s) {
        VertexSymbol::Cross => 0,
        VertexSymbol::Dot => 2,
        _ => 1,
    })
}

pub fn gray3_names() -> Vec<String> {
    ["x", "a", "o"].iter().map(|s| s.to_string()).collect()
}

/// Integer gray level of a lifted symbol: tone `k-1` of ⊙ is `k`, of ⊗ is
/// `-k`, arrows are 0. Output symbols are offset by `N`.
pub fn gray7(lift: &ToneLift, p: &Patch) -> Patch {
    let n = lift.n as i64;
    p.map(|s| {
        let k = lift.tone(s) as i64 + 1;
        let g = match lift.color(s) {
            CROSS => -k,
            DOT => k,
            _ => 0,
        };
        (g + n) as Symbol
    })
}

pub fn gray_level(lift: &ToneLift, s: Symbol) -> i64 {
    gray7(lift, &Patch::constant(crate::lattice::make_box(0), s)).symbols()[0] as i64 - lift.n as i64
}

/// The 4x4 transfer matrix over {⊙, straight, in, out} whose cyclic
/// products count the cross patches centered at ⊙.
pub fn m_matrix() -> [[u64; 4]; 4] {
    [[1, 1, 1, 1], [1, 1, 0, 1], [1, 1, 0, 1], [1, 0, 1, 0]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_box;
    use crate::sft::{check_local, enumerate_patches, SearchOptions};
    use std::collections::BTreeSet;

    #[test]
    fn alphabet_shape() {
        let s = symbols();
        assert_eq!(s.len(), 14);
        assert_eq!(s.iter().filter(|x| x.kind() == Kind::Straight).count(), 4);
        assert_eq!(s.iter().filter(|x| x.kind() == Kind::Corner).count(), 8);
        assert_eq!(VertexSymbol::of(CROSS), VertexSymbol::Cross);
        assert_eq!(VertexSymbol::of(DOT), VertexSymbol::Dot);
        let n = names();
        assert_eq!(n.iter().collect::<BTreeSet<_>>().len(), 14);
    }

    #[test]
    fn census() {
        let (spec, phi) = vertex_spec();
        let all = spec.allowed_patches().unwrap();
        assert_eq!(all.len(), 248);
        let by = |k: Kind| all.iter().filter(|p| VertexSymbol::of(p[0]).kind() == k).count();
        assert_eq!(by(Kind::DotOut), 90);
        assert_eq!(by(Kind::CrossIn), 90);
        assert_eq!(by(Kind::Straight), 36);
        assert_eq!(by(Kind::Corner), 32);
        let m = m_matrix();
        let mut p = m;
        for _ in 0..3 {
            let mut q = [[0u64; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    q[i][j] = (0..4).map(|k| p[i][k] * m[k][j]).sum();
                }
            }
            p = q;
        }
        assert_eq!((0..4).map(|i| p[i][i]).sum::<u64>(), 90);
        assert_eq!(phi.levels(), &[0, 1]);
        assert_eq!(phi.eps0(), 1.0);
    }

    #[test]
    fn dot_neighborhoods_follow_the_matrix() {
        // classify each arm of a ⊙-centered patch and check consecutive
        // arms (counterclockwise) against the matrix
        let (spec, _) = vertex_spec();
        let cross = Window::cross();
        let ccw = [1usize, 2, 3, 4];
        let class = |s: Symbol, d: Dir| -> usize {
            match VertexSymbol::of(s) {
                VertexSymbol::Dot => 0,
                VertexSymbol::Arrow { inn, out } if inn == out.opposite() => 1,
                VertexSymbol::Arrow { inn, .. } if inn == d => 2,
                VertexSymbol::Arrow { out, .. } if out == d => 3,
                _ => 9,
            }
        };
        let m = m_matrix();
        let mut n = 0;
        for p in spec.allowed_patches().unwrap().iter().filter(|p| p[0] == DOT) {
            let cls: Vec<usize> =
                ccw.iter().map(|&i| class(p[i], Dir::from_vec(cross.offsets()[i]).unwrap())).collect();
            for i in 0..4 {
                assert_eq!(m[cls[i]][cls[(i + 1) % 4]], 1, "{p:?}");
            }
            n += 1;
        }
        assert_eq!(n, 90);
    }

    #[test]
    fn local_examples() {
        let (spec, _) = vertex_spec();
        let right = VertexSymbol::Arrow { inn: Dir::W, out: Dir::E }.index();
        let pair = Patch::new(crate::lattice::Volume::rect(0, 0, 2, 1), vec![right, right]);
        assert!(check_local(&spec, &pair).unwrap());
        let mixed = Patch::new(make_box(1), vec![DOT, DOT, DOT, DOT, DOT, CROSS, DOT, DOT, DOT]);
        assert!(!check_local(&spec, &mixed).unwrap());
        let e = enumerate_patches(&spec, &crate::lattice::Volume::new(cross_arms()), Some(&Patch::constant(make_box(0), DOT)), &SearchOptions::default()).unwrap();
        assert_eq!(e.count, 90u32.into());
    }

    fn cross_arms() -> Vec<Site> {
        Window::cross().offsets()[1..].to_vec()
    }

    #[test]
    fn symmetric_under_dihedral_group_and_tau() {
        let (spec, _) = vertex_spec();
        let all: BTreeSet<Vec<Symbol>> = spec.allowed_patches().unwrap().into_iter().collect();
        let offs = Window::cross().offsets().to_vec();
        for g in DihedralAction::all() {
            for p in &all {
                let mut q = vec![0; 5];
                for (i, &o) in offs.iter().enumerate() {
                    let j = offs.iter().position(|&t| t == g.site(o)).unwrap();
                    q[j] = g.symbol_perm[p[i] as usize];
                }
                assert!(all.contains(&q));
            }
        }
        for p in &all {
            let q: Vec<Symbol> = p.iter().map(|&s| tau(s)).collect();
            assert!(all.contains(&q));
        }
        let gs = DihedralAction::all();
        for a in &gs {
            for b in &gs {
                assert!(gs.contains(&a.compose(b)));
            }
        }
    }

    #[test]
    fn rule_d_removes_two_patches() {
        let (spec, _) = vertex_spec();
        assert_eq!(vertex_rule_d_spec().allowed_count(), Some(246));
        assert_eq!(vertex_lift_spec(1).allowed_count(), Some(246));
        assert_eq!(vertex_lift_spec(3).alphabet_size(), 18);
        let two = vertex_lift(2);
        assert_eq!(two.lifted.alphabet_size(), 16);
        let blind: u64 = spec
            .allowed_patches()
            .unwrap()
            .iter()
            .map(|p| p.iter().map(|&s| two.tones_of(s)).product::<u64>())
            .sum();
        assert_eq!(two.lifted.allowed_count(), Some(blind - 2 * 2));
    }

    #[test]
    fn gray_levels() {
        let l = vertex_lift(3);
        let dot = |t| l.symbol(DOT, t);
        let cross = |t| l.symbol(CROSS, t);
        assert_eq!(gray_level(&l, dot(0)), 1);
        assert_eq!(gray_level(&l, dot(2)), 3);
        assert_eq!(gray_level(&l, cross(1)), -2);
        assert_eq!(gray_level(&l, l.symbol(0, 0)), 0);
        let p = Patch::constant(make_box(1), DOT);
        assert_eq!(gray3(&p), Patch::constant(make_box(1), 2));
    }
}
