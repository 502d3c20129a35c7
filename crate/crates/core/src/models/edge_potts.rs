//! Potts model with tones on edges: each site carries a color and one tone
//! for its right edge and one for its upper edge.

use crate::lattice::{Symbol, Window};
use crate::sft::SftSpec;

pub fn edge_symbol(n: u32, color: u32, h: u32, v: u32) -> Symbol {
    color * n * n + h * n + v
}

/// `(color, horizontal tone, vertical tone)`.
pub fn edge_parts(n: u32, s: Symbol) -> (u32, u32, u32) {
    (s / (n * n), (s / n) % n, s % n)
}

/// Alphabet `Z_q x Z_N x Z_N` on the window `{o, e1, e2}`. A color change
/// to the right forces the horizontal tone to 0, a change upward forces
/// the vertical tone to 0.
pub fn edge_potts_spec(q: u32, n: u32) -> SftSpec {
    let size = q * n * n;
    let names = (0..size)
        .map(|s| {
            let (c, h, v) = edge_parts(n, s);
            format!("{c}.{h}.{v}")
        })
        .collect();
    let mut allowed = Vec::new();
    for a in 0..size {
        let (c, h, v) = edge_parts(n, a);
        for b in 0..size {
            if edge_parts(n, b).0 != c && h != 0 {
                continue;
            }
            for d in 0..size {
                if edge_parts(n, d).0 != c && v != 0 {
                    continue;
                }
                allowed.push(vec![a, b, d]);
            }
        }
    }
    SftSpec::from_allowed(names, Window::ell(), allowed).expect("edge Potts rules")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sft::gluing_check;

    #[test]
    fn alphabet() {
        let s = edge_potts_spec(2, 3);
        assert_eq!(s.alphabet_size(), 18);
        assert_eq!(s.names()[edge_symbol(3, 1, 2, 0) as usize], "1.2.0");
    }

    #[test]
    fn safe_symbols() {
        let (q, n) = (3, 2);
        let s = edge_potts_spec(q, n);
        let size = q * n * n;
        for c in 0..q {
            let safe = edge_symbol(n, c, 0, 0);
            for a in 0..size {
                for b in 0..size {
                    assert!(s.admits(&[safe, a, b]));
                }
                // a neighbor to the left or below only constrains its own tone
                let (ca, ha, va) = edge_parts(n, a);
                let left_ok = ca == c || ha == 0;
                let below_ok = ca == c || va == 0;
                let other = edge_symbol(n, ca, 0, 0);
                assert_eq!(s.admits(&[a, safe, other]), left_ok);
                assert_eq!(s.admits(&[a, other, safe]), below_ok);
            }
        }
    }

    #[test]
    fn one_tone_is_full_shift() {
        let s = edge_potts_spec(3, 1);
        assert_eq!(s.allowed_count(), Some(27));
    }

    #[test]
    fn counts_match_formula() {
        // per pair of colors: a horizontal constraint leaves N choices of v
        // and 1 of h when colors differ
        let (q, n) = (2u64, 2u64);
        let s = edge_potts_spec(q as u32, n as u32);
        let mut expected = 0;
        for c in 0..q {
            for cb in 0..q {
                for cd in 0..q {
                    let h = if cb == c { n } else { 1 };
                    let v = if cd == c { n } else { 1 };
                    expected += h * v * (n * n) * (n * n);
                }
            }
        }
        assert_eq!(s.allowed_count(), Some(expected));
    }

    #[test]
    fn gluing_at_gap_two() {
        let s = edge_potts_spec(2, 2);
        let r = gluing_check(&s, 2, 1, 10, 3, 1_000_000).unwrap();
        assert!(r.failures.is_empty());
    }
}
