use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;
use qk_core::catalog::{functors, groupoids, NamedGroupoid};
use qk_core::groupoid::{BiAction, FinGroupoid, GAction, GroupoidFunctor};
use qk_core::morita::{
    decide_morita, decide_morita_quantales, extract_functor, global_sections, hs_compose, hs_identity,
    hs_identity_of_quantale, inflate, is_hs_invertible, minimal_witness_size, Certificate, HSMap,
};
use qk_core::quantale::Quantale;
use qk_core::Error;

/// Sorted element orders of the vertex group at `o`.
fn element_orders(g: &FinGroupoid, o: usize) -> Vec<usize> {
    let id = g.id(o);
    let mut orders: Vec<usize> = g
        .hom(o, o)
        .map(|f| {
            let (mut power, mut k) = (f, 1);
            while power != id {
                power = g.comp(f, power).unwrap();
                k += 1;
            }
            k
        })
        .collect();
    orders.sort_unstable();
    orders
}

/// Connected components by reachability, each recorded by its vertex group's element orders.
fn component_profile(g: &FinGroupoid) -> BTreeMap<Vec<usize>, usize> {
    let mut seen = vec![false; g.object_count()];
    let mut profile = BTreeMap::new();
    for o in 0..g.object_count() {
        if seen[o] {
            continue;
        }
        for t in 0..g.object_count() {
            if g.hom(o, t).next().is_some() {
                seen[t] = true;
            }
        }
        *profile.entry(element_orders(g, o)).or_insert(0) += 1;
    }
    profile
}

fn small() -> Vec<NamedGroupoid> {
    groupoids(3, 4)
}

#[test]
fn pair_groupoid_witness_is_the_tautological_bundle() {
    let p2 = Arc::new(FinGroupoid::pair(2));
    let t = Arc::new(FinGroupoid::trivial());
    let v = decide_morita(&p2, &t, 8).unwrap();
    assert!(v.equivalent && v.oracle_agrees);
    assert!(v.witness_checks.unwrap().hold());
    let taut = BiAction::with_trivial_right(&GAction::tautological(p2));
    assert!(v.witness.unwrap().isomorphism(&taut).0.is_some());
}

#[test]
fn cyclic_group_and_point_are_not_equivalent() {
    let z2 = Arc::new(FinGroupoid::cyclic(2));
    let t = Arc::new(FinGroupoid::trivial());
    let v = decide_morita(&z2, &t, 6).unwrap();
    assert!(!v.equivalent && !v.oracle && v.oracle_agrees);
    assert!(matches!(v.certificate, Certificate::InvariantMismatch { .. }));
}

#[test]
fn inflating_a_group_preserves_its_class() {
    let z2 = Arc::new(FinGroupoid::cyclic(2));
    let big = Arc::new(inflate(&z2, 0, 1));
    assert_eq!(component_profile(&big), component_profile(&z2));
    let v = decide_morita(&z2, &big, 8).unwrap();
    assert!(v.equivalent && v.oracle_agrees);
    let w = v.witness.unwrap();
    assert_eq!(Some(w.len()), minimal_witness_size(&z2, &big));
    assert!(v.witness_checks.unwrap().hold());
}

#[test]
fn bound_below_the_minimal_witness_is_inconclusive() {
    let p2 = Arc::new(FinGroupoid::pair(2));
    let t = Arc::new(FinGroupoid::trivial());
    assert!(matches!(decide_morita(&p2, &t, 1), Err(Error::Inconclusive(1))));
}

#[test]
fn decisions_match_component_profiles() {
    let gs = small();
    for a in &gs {
        for b in &gs {
            let v = decide_morita(&a.groupoid, &b.groupoid, 8).unwrap();
            let expected = component_profile(&a.groupoid) == component_profile(&b.groupoid);
            assert_eq!(v.equivalent, expected, "{} vs {}", a.name, b.name);
            assert!(v.oracle_agrees, "{} vs {}", a.name, b.name);
            if let Some(checks) = v.witness_checks {
                assert!(checks.hold(), "{} vs {}", a.name, b.name);
            }
        }
    }
}

#[test]
fn quantale_route_agrees_with_groupoid_route() {
    let p2 = Quantale::of_groupoid(Arc::new(FinGroupoid::pair(2))).unwrap();
    let t = Quantale::of_groupoid(Arc::new(FinGroupoid::trivial())).unwrap();
    let z2 = Quantale::of_groupoid(Arc::new(FinGroupoid::cyclic(2))).unwrap();
    assert!(decide_morita_quantales(&p2, &t, 8).unwrap().equivalent);
    assert!(!decide_morita_quantales(&z2, &t, 8).unwrap().equivalent);
}

#[test]
fn identity_bisheaf_sizes() {
    // G acting on its own arrows: one point per arrow.
    let z2 = hs_identity(Arc::new(FinGroupoid::cyclic(2))).unwrap();
    assert_eq!(z2.bisheaf().lattice().len(), 4);
    let p2 = hs_identity(Arc::new(FinGroupoid::pair(2))).unwrap();
    assert_eq!(p2.bisheaf().lattice().len(), 16);
    let q = Quantale::of_groupoid(Arc::new(FinGroupoid::pair(2))).unwrap();
    assert_eq!(hs_identity_of_quantale(&q).unwrap(), p2);
}

#[test]
fn identities_are_neutral_for_composition() {
    let gs = small();
    for nf in functors(&gs, 3) {
        let f = HSMap::of_functor(&nf.functor).unwrap();
        let left = hs_identity(f.target().clone()).unwrap();
        let right = hs_identity(f.source().clone()).unwrap();
        assert_eq!(hs_compose(&left, &f).unwrap(), f, "{}", nf.name);
        assert_eq!(hs_compose(&f, &right).unwrap(), f, "{}", nf.name);
    }
}

#[test]
fn bundles_compose_like_functors() {
    let gs: Vec<NamedGroupoid> = groupoids(2, 2);
    let all = functors(&gs, 2);
    for phi in &all {
        for psi in all.iter().filter(|p| *p.functor.source() == *phi.functor.target()) {
            let composite = phi.functor.then(&psi.functor).unwrap();
            let lhs = hs_compose(&HSMap::of_functor(&psi.functor).unwrap(), &HSMap::of_functor(&phi.functor).unwrap());
            assert_eq!(lhs.unwrap(), HSMap::of_functor(&composite).unwrap(), "{} then {}", phi.name, psi.name);
        }
    }
}

#[test]
fn composition_is_associative() {
    let gs: Vec<NamedGroupoid> = groupoids(2, 2);
    let maps: Vec<HSMap> = functors(&gs, 2).iter().map(|f| HSMap::of_functor(&f.functor).unwrap()).collect();
    for f in &maps {
        for g in maps.iter().filter(|g| **g.target() == **f.source()) {
            for h in maps.iter().filter(|h| **h.target() == **g.source()) {
                let a = hs_compose(&hs_compose(f, g).unwrap(), h).unwrap();
                let b = hs_compose(f, &hs_compose(g, h).unwrap()).unwrap();
                assert_eq!(a, b);
            }
        }
    }
}

#[test]
fn essential_equivalences_are_invertible() {
    let gs = small();
    for nf in functors(&gs, 4) {
        let f = HSMap::of_functor(&nf.functor).unwrap();
        let inv = is_hs_invertible(&f);
        assert_eq!(inv.invertible, nf.functor.essential_equivalence().holds(), "{}", nf.name);
        assert!(inv.units_agree, "{}", nf.name);
        if let Some(g) = inv.inverse {
            let back = hs_compose(&f, &g).unwrap();
            assert_eq!(back, hs_identity(f.target().clone()).unwrap(), "{}", nf.name);
        }
    }
}

#[test]
fn sections_of_bundles_recover_their_functors() {
    for nf in functors(&small(), 3) {
        let b = nf.functor.bundle();
        for section in global_sections(&b) {
            let back: GroupoidFunctor = extract_functor(&b, &section).unwrap();
            assert!(back.bundle().isomorphism(&b).0.is_some(), "{}", nf.name);
        }
    }
}

proptest! {
    #[test]
    fn inflation_is_an_equivalence(k in 0usize..32, object in 0usize..3, copies in 1usize..3) {
        let gs: Vec<NamedGroupoid> = groupoids(2, 3);
        let g = &gs[k % gs.len()].groupoid;
        let object = object % g.object_count();
        let big = inflate(g, object, copies);
        prop_assert!(big.validate().is_empty());
        prop_assert_eq!(big.object_count(), g.object_count() + copies);
        prop_assert_eq!(component_profile(&big), component_profile(g));
    }
}
