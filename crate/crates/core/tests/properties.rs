use std::sync::Arc;

use num_bigint::BigUint;
use proptest::prelude::*;
use sftlab::burton_steif::{lift, lift_sample, omega_fiber_count};
use sftlab::lattice::{Patch, Volume, Window};
use sftlab::models::potts::{extrapolate, random_lifted_boundary};
use sftlab::models::vertex::{tau, CROSS, DOT};
use sftlab::models::{potts_cross_spec, vertex_spec, DihedralAction, VertexSymbol};
use sftlab::rng::stream;
use sftlab::sft::check_local;

fn cross_patch(syms: &[u32]) -> Patch {
    let w = Window::cross();
    Patch::from_pairs(w.offsets().iter().copied().zip(syms.iter().copied())).unwrap()
}

proptest! {
    #[test]
    fn vertex_rules_are_dihedral_invariant(syms in prop::collection::vec(0u32..14, 5), g in 0usize..8) {
        let (spec, _) = vertex_spec();
        let p = cross_patch(&syms);
        let act = &DihedralAction::all()[g];
        let q = act.apply(&p);
        prop_assert_eq!(check_local(&spec, &p).unwrap(), check_local(&spec, &q).unwrap());
    }

    #[test]
    fn tau_is_an_involution_preserving_admissibility(syms in prop::collection::vec(0u32..14, 5)) {
        let (spec, phi) = vertex_spec();
        let p = cross_patch(&syms);
        let t = p.map(tau);
        prop_assert_eq!(t.map(tau), p.clone());
        prop_assert_eq!(check_local(&spec, &p).unwrap(), check_local(&spec, &t).unwrap());
        for (z, a) in p.iter() {
            prop_assert_eq!(phi.level(a), phi.level(t.get(z).unwrap()));
        }
    }

    #[test]
    fn ground_symbols_swap_and_arrows_reverse(s in 0u32..14) {
        let v = VertexSymbol::of(s);
        let t = VertexSymbol::of(tau(s));
        match v {
            VertexSymbol::Cross => prop_assert_eq!(tau(s), DOT),
            VertexSymbol::Dot => prop_assert_eq!(tau(s), CROSS),
            VertexSymbol::Arrow { inn, out } => prop_assert_eq!(t, VertexSymbol::Arrow { inn: out, out: inn }),
        }
    }

    #[test]
    fn tones_project_back_and_fibers_multiply(seed in any::<u64>(), n in 2u32..4) {
        let (spec, phi) = potts_cross_spec(2).unwrap();
        let l = lift(Arc::new(spec), phi, n).unwrap();
        let v = Volume::rect(0, 0, 3, 2);
        let b = random_lifted_boundary(&l, 2, &v, &mut stream(&[seed]));
        let colors = l.project(&b);
        let again = lift_sample(&l, &colors, &mut stream(&[seed, 1]));
        prop_assert_eq!(l.project(&again), colors.clone());
        let manual = colors.symbols().iter().fold(BigUint::from(1u32), |acc, &a| acc * l.tones_of(a));
        prop_assert_eq!(omega_fiber_count(&l, &colors), manual);
    }

    #[test]
    fn richardson_is_exact_on_quadratic_tails(a in -2.0f64..2.0, c in -5.0f64..5.0) {
        let pts: Vec<(usize, f64)> = (4..=8).map(|w| (w, a + c / (w * w) as f64)).collect();
        prop_assert!((extrapolate(&pts) - a).abs() < 1e-9);
    }
}
