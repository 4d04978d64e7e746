use std::sync::Arc;

use proptest::prelude::*;
use qk_core::catalog::{monotone_maps, posets};
use qk_core::locale::{
    extend_from_sections, pairing_direct_image, surjection_pullback_check, tensor_over_base, BLocale, BModule,
    FinLocale, LocaleMap, Poset, SheafHom,
};
use qk_core::Error;

fn discrete(labels: &[&str]) -> Arc<FinLocale> {
    Arc::new(FinLocale::discrete(labels.iter().map(|s| s.to_string()).collect()))
}

fn over(base: &Arc<FinLocale>, carrier: &Arc<FinLocale>, anchor: &[usize]) -> Arc<BLocale> {
    Arc::new(BLocale::from_anchor(base.clone(), carrier.clone(), anchor.to_vec()).unwrap())
}

/// Points of a discrete open as a bitmask, which is also its element index.
fn image(anchor: &[usize], u: usize) -> usize {
    (0..anchor.len()).filter(|i| u >> i & 1 == 1).fold(0, |acc, i| acc | 1 << anchor[i])
}

fn injective_on(anchor: &[usize], u: usize) -> bool {
    let pts: Vec<usize> = (0..anchor.len()).filter(|i| u >> i & 1 == 1).map(|i| anchor[i]).collect();
    let mut sorted = pts.clone();
    sorted.sort_unstable();
    sorted.dedup();
    sorted.len() == pts.len()
}

/// Frobenius `f_!(f*(b) ∧ x) = b ∧ f_!(x)` recomputed from the point map.
fn frobenius_holds(x: &BLocale) -> bool {
    let Ok(spp) = x.support() else { return false };
    let (bf, xf) = (x.base().frame(), x.frame());
    bf.elements().all(|b| xf.elements().all(|u| spp.apply(xf.meet(x.act(b, xf.top()), u)) == bf.meet(b, spp.apply(u))))
}

#[test]
fn base_over_itself_has_identity_support() {
    for p in posets(3) {
        let b = Arc::new(FinLocale::new(p));
        let x = BLocale::base_itself(b.clone());
        let spp = x.support().unwrap();
        assert!(b.frame().elements().all(|u| spp.apply(u) == u));
        let sections = x.local_sections().unwrap();
        assert_eq!(sections.sections.len(), b.frame().len());
        assert!(sections.sheaf);
    }
}

#[test]
fn collapsing_anchor_support() {
    let b = discrete(&["1", "2"]);
    let x = over(&b, &discrete(&["1", "2", "3"]), &[0, 1, 1]);
    let spp = x.support().unwrap();
    assert_eq!(spp.apply(0b100), 0b10);
    for u in x.frame().elements() {
        assert_eq!(spp.apply(u), image(&[0, 1, 1], u));
    }
}

#[test]
fn a_non_open_anchor_over_the_sierpinski_locale() {
    let sierpinski = Arc::new(FinLocale::new(Poset::chain(2)));
    let mut found = false;
    for p in posets(2) {
        let carrier = Arc::new(FinLocale::new(p.clone()));
        for anchor in monotone_maps(&p, sierpinski.poset()) {
            let x = BLocale::from_anchor(sierpinski.clone(), carrier.clone(), anchor).unwrap();
            let map = LocaleMap::new(carrier.clone(), sierpinski.clone(), x.anchor_points()).unwrap();
            match x.support() {
                Err(Error::NotOpen(_)) => {
                    found = true;
                    assert!(map.frobenius_witness().is_some());
                    assert!(!map.is_open());
                }
                Err(e) => panic!("unexpected error {e}"),
                Ok(_) => assert!(frobenius_holds(&x)),
            }
        }
    }
    assert!(found, "some anchor onto the Sierpinski locale is not open");
}

#[test]
fn discrete_sections_are_injective_subsets() {
    let b = discrete(&["1", "2"]);
    for anchor in [[0, 0, 1], [0, 1, 1], [1, 1, 1], [0, 1, 0]] {
        let x = over(&b, &discrete(&["a", "b", "c"]), &anchor);
        let sections = x.local_sections().unwrap();
        for u in x.frame().elements() {
            assert_eq!(sections.contains(u), injective_on(&anchor, u), "anchor {anchor:?}, open {u:b}");
        }
        assert!(sections.sheaf);
    }
}

#[test]
fn tensor_with_the_base_is_the_identity() {
    let b = discrete(&["1", "2"]);
    let x = over(&b, &discrete(&["a", "b", "c"]), &[0, 1, 1]);
    let unit = Arc::new(BLocale::base_itself(b.clone()));
    let t = tensor_over_base(&x, &unit).unwrap();
    assert!(t.routes_agree);
    assert_eq!(t.pullback.frame().len(), x.frame().len());
    let d = t.pi1.direct_image();
    for u in x.frame().elements() {
        assert_eq!(d.apply(t.pure(u, b.frame().top())), u);
    }
}

#[test]
fn diagonal_pullback_of_identities() {
    let b = discrete(&["1", "2"]);
    let x = over(&b, &discrete(&["1", "2"]), &[0, 1]);
    let t = tensor_over_base(&x, &x).unwrap();
    assert!(t.routes_agree);
    assert_eq!(t.pullback.frame().len(), 4);
    assert_eq!(t.pi1.direct_image().apply(t.pure(0b01, 0b01)), 0b01);
    assert_eq!(t.direct_image_witness(), None);
    assert_eq!(t.support_formula_witness(), None);
}

#[test]
fn pullback_with_a_single_matching_pair() {
    let b = discrete(&["1", "2"]);
    let x = over(&b, &discrete(&["a1", "a2"]), &[0, 1]);
    let y = over(&b, &discrete(&["b"]), &[0]);
    let t = tensor_over_base(&x, &y).unwrap();
    assert_eq!(t.point_pairs(), &[(0, 0)]);
    assert_eq!(t.pullback.frame().len(), 2);
    // (π2)_!({a2} ⊗ {b}) = spp({a2}){b} = {2}{b} = ∅.
    assert_eq!(t.pi2.direct_image().apply(t.pure(0b10, 0b1)), 0);
    assert_eq!(t.direct_image_witness(), None);
    assert_eq!(t.section_basis_witness().unwrap(), None);
}

#[test]
fn pullback_of_an_open_surjection() {
    let b = discrete(&["1", "2"]);
    let p = over(&b, &discrete(&["1", "2", "3"]), &[0, 1, 1]);
    let q = Arc::new(BLocale::base_itself(b.clone()));
    assert!(surjection_pullback_check(&p, &q).unwrap().holds());
    assert!(surjection_pullback_check(&q, &p).unwrap().holds());
    let not_onto = over(&b, &discrete(&["1"]), &[0]);
    assert!(matches!(surjection_pullback_check(&not_onto, &q), Err(Error::PreconditionFailed(_))));
}

#[test]
fn diagonal_pairing_is_s_tensor_s() {
    let b = discrete(&["1", "2"]);
    let x = over(&b, &discrete(&["1", "2"]), &[0, 1]);
    let id = SheafHom::identity(x.clone());
    let r = pairing_direct_image(&id, &id).unwrap();
    assert!(r.failures.is_empty());
    for s in [0b01, 0b10] {
        assert_eq!(r.direct_image.apply(s), r.tensor.pure(s, s));
    }
}

#[test]
fn pairing_of_an_inclusion() {
    let b = discrete(&["1", "2"]);
    let z = over(&b, &discrete(&["1"]), &[0]);
    let x = over(&b, &discrete(&["1", "2"]), &[0, 1]);
    let f = SheafHom::new(z.clone(), x.clone(), vec![0]).unwrap();
    let r = pairing_direct_image(&f, &f).unwrap();
    assert!(r.failures.is_empty());
    assert_eq!(r.direct_image.apply(0b1), r.tensor.pure(0b01, 0b01));
}

#[test]
fn maps_not_over_the_base_are_not_sheaf_homs() {
    let b = discrete(&["1", "2"]);
    let z = over(&b, &discrete(&["1"]), &[0]);
    let x = over(&b, &discrete(&["1", "2"]), &[0, 1]);
    assert!(matches!(SheafHom::new(z, x, vec![1]), Err(Error::NotSheafHom(_))));
}

#[test]
fn extensions_from_sections() {
    let b = discrete(&["1", "2"]);
    let x = over(&b, &discrete(&["a", "b", "c"]), &[0, 1, 1]);
    let xm = x.as_module();
    let id = extend_from_sections(&x, &xm, |s| s).unwrap();
    assert!(x.frame().elements().all(|u| id.apply(u) == u));

    let spp = x.support().unwrap();
    let base = BModule::base_itself(b.clone());
    let ext = extend_from_sections(&x, &base, |s| spp.apply(s)).unwrap();
    assert!(x.frame().elements().all(|u| ext.apply(u) == spp.apply(u)));

    // Not equivariant: every section goes to the top of B.
    let top = b.frame().top();
    let bad = extend_from_sections(&x, &base, |s| if s == 0 { 0 } else { top });
    assert!(matches!(bad, Err(Error::NotEquivariant(_))));
}

proptest! {
    #[test]
    fn discrete_supports_are_images(n in 1usize..5, m in 1usize..4, seed in prop::collection::vec(0usize..8, 4)) {
        let anchor: Vec<usize> = seed.iter().take(n).map(|k| k % m).collect();
        let b = Arc::new(FinLocale::discrete_n(m));
        let x = over(&b, &Arc::new(FinLocale::discrete_n(n)), &anchor);
        let spp = x.support().unwrap();
        for u in x.frame().elements() {
            prop_assert_eq!(spp.apply(u), image(&anchor, u));
        }
        prop_assert!(frobenius_holds(&x));
    }

    #[test]
    fn discrete_pullbacks(n in 1usize..4, k in 1usize..4, seed in prop::collection::vec(0usize..8, 6)) {
        let b = Arc::new(FinLocale::discrete_n(2));
        let ax: Vec<usize> = seed.iter().take(n).map(|v| v % 2).collect();
        let ay: Vec<usize> = seed.iter().skip(3).take(k).map(|v| v % 2).collect();
        let x = over(&b, &Arc::new(FinLocale::discrete_n(n)), &ax);
        let y = over(&b, &Arc::new(FinLocale::discrete_n(k)), &ay);
        let t = tensor_over_base(&x, &y).unwrap();
        let expected = (0..n).map(|i| ay.iter().filter(|&&c| c == ax[i]).count()).sum::<usize>();
        prop_assert_eq!(t.point_pairs().len(), expected);
        prop_assert!(t.routes_agree);
        prop_assert_eq!(t.direct_image_witness(), None);
        prop_assert_eq!(t.support_formula_witness(), None);
    }
}
