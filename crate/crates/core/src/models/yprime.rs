//! The binary SFT Y′ and the chain Y′ → ψ → q onto the vertex model.

use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{make_box, Patch, Site, Symbol, Volume, Window};
use crate::models::vertex::{Dir, VertexSymbol};
use crate::sft::{check_local, SftSpec};

const FAMILIES: [&str; 2] = [
    "**000 *1000 00000 0001* 000**",
    "000** 0001* 00000 *1000 **000",
];

fn parse_rows(text: &str) -> Vec<Option<Symbol>> {
    text.split_whitespace()
        .flat_map(|row| row.chars())
        .map(|c| match c {
            '*' => None,
            c => Some(c.to_digit(10).unwrap()),
        })
        .collect()
}

/// Binary SFT on the 5x5 window forbidding the two diagonal near-touching
/// families. Window offsets run top row first, left to right.
pub fn yprime_spec() -> SftSpec {
    let forbidden = FAMILIES.iter().map(|f| parse_rows(f)).collect();
    SftSpec::from_forbidden(vec!["0".into(), "1".into()], Window::square(2), forbidden).expect("5x5 patterns")
}

/// 3x3 maximum filter. The output lives on the sites whose full 3x3
/// neighborhood is inside the input.
pub fn psi(y: &Patch) -> Patch {
    let inner = Window::square(1).anchors_inside(y.volume());
    Patch::new(
        Volume::new(inner.iter().copied()),
        inner
            .iter()
            .map(|&z| make_box(1).sites().iter().map(|&d| y.get(z + d).unwrap()).max().unwrap())
            .collect(),
    )
}

struct Case {
    cells: [Option<u8>; 9],
    out: VertexSymbol,
}

fn rotate_site(z: Site) -> Site {
    Site::new(-z.y, z.x)
}

/// The five displayed cases and their rotations. Cells are in the
/// canonical order of the 3x3 box.
fn cases() -> Vec<Case> {
    use Dir::*;
    let arrow = |inn, out| VertexSymbol::Arrow { inn, out };
    let base: [(&str, VertexSymbol); 5] = [
        ("*** *0* ***", VertexSymbol::Cross),
        ("111 111 111", VertexSymbol::Dot),
        ("011 011 011", arrow(N, S)),
        ("000 011 011", arrow(E, S)),
        ("111 111 110", arrow(S, E)),
    ];
    let boxv = make_box(1);
    let mut out = Vec::new();
    for (text, sym) in base {
        let mut cells: [Option<u8>; 9] = [None; 9];
        for (i, c) in parse_rows(text).into_iter().enumerate() {
            cells[i] = c.map(|v| v as u8);
        }
        let mut sym = sym;
        for _ in 0..4 {
            if !out.iter().any(|c: &Case| c.cells == cells) {
                out.push(Case { cells, out: sym });
            }
            let mut next = [None; 9];
            for (i, &z) in boxv.sites().iter().enumerate() {
                next[boxv.index_of(rotate_site(z)).unwrap()] = cells[i];
            }
            cells = next;
            sym = match sym {
                VertexSymbol::Arrow { inn, out } => VertexSymbol::Arrow { inn: inn.ccw(), out: out.ccw() },
                g => g,
            };
        }
    }
    out
}

fn classify(table: &[Case], cells: &[Symbol]) -> Option<Symbol> {
    table
        .iter()
        .find(|c| c.cells.iter().zip(cells).all(|(m, &v)| m.is_none_or(|m| m as Symbol == v)))
        .map(|c| c.out.index())
}

/// Classify one 3x3 neighborhood given in canonical order.
pub fn q_local(cells: &[Symbol]) -> Option<Symbol> {
    classify(&cases(), cells)
}

/// ψ followed by q. A (k+4)-square input gives a k-square vertex patch.
/// Fails on a neighborhood matching no case, or if the result breaks the
/// vertex rules.
pub fn factor_chain(y: &Patch) -> Result<Patch> {
    let spec = yprime_spec();
    if !check_local(&spec, y)? {
        return Err(Error::Invalid("input is not locally admissible in Y′".into()));
    }
    let image = psi(y);
    let table = cases();
    let inner = Window::square(1).anchors_inside(image.volume());
    let mut syms = Vec::with_capacity(inner.len());
    for &z in &inner {
        let cells: Vec<Symbol> = make_box(1).sites().iter().map(|&d| image.get(z + d).unwrap()).collect();
        match classify(&table, &cells) {
            Some(s) => syms.push(s),
            None => {
                let rows: Vec<String> =
                    cells.chunks(3).map(|r| r.iter().map(|c| c.to_string()).collect()).collect();
                return Err(Error::UnclassifiableNeighborhood { x: z.x, y: z.y, pattern: rows.join("/") });
            }
        }
    }
    let out = Patch::new(Volume::new(inner.iter().copied()), syms);
    let (vspec, _) = crate::models::vertex_spec();
    if !check_local(&vspec, &out)? {
        return Err(Error::Invalid("factor chain produced a patch outside the vertex rules".into()));
    }
    Ok(out)
}

/// Random locally admissible Y′ patch on a square of side `side`: i.i.d.
/// bits of density `p`, then ones taking part in a forbidden occurrence
/// are cleared until none remain.
pub fn random_yprime_patch<R: Rng + ?Sized>(side: i32, p: f64, rng: &mut R) -> Patch {
    let spec = yprime_spec();
    let v = Volume::rect(0, 0, side, side);
    let mut patch = Patch::from_fn(v, |_| rng.gen_bool(p) as Symbol);
    loop {
        let bad = crate::sft::violations(&spec, &patch);
        let Some(&a) = bad.first() else { return patch };
        let ones: Vec<Site> = Window::square(2)
            .offsets()
            .iter()
            .map(|&d| a + d)
            .filter(|&z| patch.get(z) == Some(1))
            .collect();
        patch = patch.with(ones[rng.gen_range(0..ones.len())], 0);
    }
}
