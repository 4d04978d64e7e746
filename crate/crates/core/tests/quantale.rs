use std::sync::Arc;

use proptest::prelude::*;
use qk_core::catalog::groupoids;
use qk_core::groupoid::FinGroupoid;
use qk_core::quantale::{Quantale, COVER, INVOLUTION};
use qk_core::suplat::FinSupLattice;

fn arrows(mask: usize) -> impl Iterator<Item = usize> {
    (0..usize::BITS as usize).filter(move |i| mask >> i & 1 == 1)
}

/// Products, involution and support of `O(G)` recomputed arrow by arrow.
fn product_oracle(g: &FinGroupoid, a: usize, b: usize) -> usize {
    arrows(a).flat_map(|f| arrows(b).filter_map(move |h| g.comp(f, h))).fold(0, |acc, k| acc | 1 << k)
}

fn star_oracle(g: &FinGroupoid, a: usize) -> usize {
    arrows(a).fold(0, |acc, f| acc | 1 << g.inv(f))
}

fn support_oracle(g: &FinGroupoid, a: usize) -> usize {
    arrows(a).fold(0, |acc, f| acc | 1 << g.id(g.cod(f)))
}

/// Arrow sets on which `dom` and `cod` are both injective.
fn partial_bijections(g: &FinGroupoid) -> Vec<usize> {
    (0..1usize << g.arrow_count())
        .filter(|&a| {
            let fs: Vec<usize> = arrows(a).collect();
            fs.iter().enumerate().all(|(i, &f)| {
                fs[i + 1..].iter().all(|&h| g.dom(f) != g.dom(h) && g.cod(f) != g.cod(h))
            })
        })
        .collect()
}

fn small_groupoids() -> Vec<Arc<FinGroupoid>> {
    groupoids(3, 9).into_iter().map(|n| n.groupoid).collect()
}

#[test]
fn partial_units_of_small_groupoids() {
    let t = Quantale::of_groupoid(Arc::new(FinGroupoid::trivial())).unwrap();
    assert_eq!(t.partial_units(), &[0, 1]);
    // ∅, {e} and {g}; the whole group squares to itself.
    let z2 = Quantale::of_groupoid(Arc::new(FinGroupoid::cyclic(2))).unwrap();
    assert_eq!(z2.partial_units(), &[0, 1, 2]);
    // Partial bijections of a two-element set: 1 + 4 + 2.
    let p2 = Quantale::of_groupoid(Arc::new(FinGroupoid::pair(2))).unwrap();
    assert_eq!(p2.partial_units().len(), 7);
}

#[test]
fn partial_units_are_partial_bijections() {
    for g in small_groupoids() {
        let q = Quantale::of_groupoid(g.clone()).unwrap();
        assert_eq!(q.partial_units(), partial_bijections(&g).as_slice(), "{:?}", g.objects());
    }
}

#[test]
fn groupoid_quantales_are_inverse_quantal_frames() {
    for g in small_groupoids() {
        let q = Quantale::of_groupoid(g.clone()).unwrap();
        let report = q.validate_iqf();
        assert!(report.passed(), "{:?}", report.failures().collect::<Vec<_>>());
        assert_eq!(q.unit(), g.identities().bits() as usize);
        let support = q.support().unwrap();
        for a in q.elements() {
            assert_eq!(support[a], support_oracle(&g, a));
        }
    }
}

#[test]
fn reconstruction_recovers_the_groupoid() {
    for g in small_groupoids() {
        let q = Quantale::of_groupoid(g.clone()).unwrap();
        let r = q.reconstruct_groupoid().unwrap();
        let map: Vec<usize> = (0..g.arrow_count()).collect();
        assert!(g.is_isomorphism(&r, &map));
    }
}

#[test]
fn pair_groupoid_support_is_the_codomain() {
    let p2 = Arc::new(FinGroupoid::pair(2));
    let q = Quantale::of_groupoid(p2.clone()).unwrap();
    let a = |l: &str| 1usize << p2.arrow_by_label(l).unwrap();
    assert_eq!(q.spp(a("(1,2)")), a("(1,1)"));
    assert_eq!(q.spp(a("(2,1)")), a("(2,2)"));
    assert_eq!(q.spp(a("(1,2)") | a("(2,1)")), q.unit());
}

/// `{0 < e < 1}` with `1·1 = 1`: every law holds except that the partial units only reach `e`.
#[test]
fn three_chain_fails_only_the_cover() {
    let lat = Arc::new(FinSupLattice::chain(3));
    let (bot, top) = (lat.bottom(), lat.top());
    let e = lat.elements().find(|&x| x != bot && x != top).unwrap();
    let n = lat.len();
    let mul = (0..n * n)
        .map(|k| {
            let (a, b) = (k / n, k % n);
            if a == bot || b == bot {
                bot
            } else {
                lat.join(a, b)
            }
        })
        .collect();
    let q = Quantale::new(lat.clone(), mul, (0..n).collect(), e).unwrap();
    let report = q.validate_iqf();
    let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
    assert_eq!(failed, [COVER]);
    let mut units = vec![bot, e];
    units.sort_unstable();
    assert_eq!(q.partial_units(), units.as_slice());
}

#[test]
fn frames_are_inverse_quantal_frames_but_not_groupoids() {
    let q = Quantale::of_frame(Arc::new(FinSupLattice::chain(3)));
    assert!(q.validate_iqf().passed());
    assert!(q.reconstruct_groupoid().is_err());
}

#[test]
fn identity_involution_on_the_pair_groupoid_is_rejected() {
    let p2 = Arc::new(FinGroupoid::pair(2));
    let o = Quantale::of_groupoid(p2).unwrap();
    let mul = o.elements().flat_map(|a| o.elements().map(move |b| (a, b))).map(|(a, b)| o.mul(a, b)).collect();
    let broken = Quantale::new(o.lattice().clone(), mul, o.elements().collect(), o.unit()).unwrap();
    let report = broken.validate_iqf();
    let inv = report.check(INVOLUTION).unwrap();
    assert!(!inv.passed);
    assert!(inv.witness.as_deref().unwrap().contains("(ab)*"));
}

#[test]
fn invalid_groupoids_are_refused() {
    let g = FinGroupoid::from_tables(
        vec!["1".into()],
        vec![qk_core::groupoid::Arrow { label: "e".into(), dom: 0, cod: 0 }],
        vec![None],
        vec![0],
        vec![0],
    );
    assert!(!g.validate().is_empty());
    assert!(matches!(Quantale::of_groupoid(Arc::new(g)), Err(qk_core::Error::InvalidGroupoid(_))));
}

proptest! {
    #[test]
    fn products_match_arrow_composition(k in 0usize..64, a in 0usize..1 << 9, b in 0usize..1 << 9) {
        let gs = small_groupoids();
        let g = &gs[k % gs.len()];
        let q = Quantale::of_groupoid(g.clone()).unwrap();
        let (a, b) = (a % q.len(), b % q.len());
        prop_assert_eq!(q.mul(a, b), product_oracle(g, a, b));
        prop_assert_eq!(q.star(a), star_oracle(g, a));
        prop_assert_eq!(q.star(q.mul(a, b)), q.mul(q.star(b), q.star(a)));
        prop_assert_eq!(q.spp(a), support_oracle(g, a));
    }
}
