use std::sync::Arc;

use proptest::prelude::*;
use qk_core::bimodule::{bimodule_iso, generic_tensor_agrees, tensor_compose, QRBisheaf};
use qk_core::catalog::{actions, groupoids, NamedAction};
use qk_core::groupoid::{BiAction, FinGroupoid, GAction, GroupoidFunctor};
use qk_core::Error;

fn points(mask: usize) -> impl Iterator<Item = usize> {
    (0..usize::BITS as usize).filter(move |i| mask >> i & 1 == 1)
}

fn free(a: &GAction) -> bool {
    let g = a.groupoid();
    (0..a.len()).all(|x| (0..g.arrow_count()).all(|f| a.act(f, x) != Some(x) || g.is_identity(f)))
}

fn anchor_bijective(a: &GAction) -> bool {
    let mut anchors: Vec<usize> = (0..a.len()).map(|x| a.anchor(x)).collect();
    anchors.sort_unstable();
    anchors == (0..a.groupoid().object_count()).collect::<Vec<_>>()
}

/// The arrows moving each point of `t` to the point of `s` in its orbit.
fn translation_oracle(a: &GAction, s: usize, t: usize) -> Option<usize> {
    let g = a.groupoid();
    points(t).try_fold(0usize, |acc, b| {
        let hits: Vec<usize> =
            (0..g.arrow_count()).filter(|&f| a.act(f, b).is_some_and(|c| s >> c & 1 == 1)).collect();
        (hits.len() == 1).then(|| acc | 1 << hits[0])
    })
}

fn small_actions() -> Vec<NamedAction> {
    groupoids(2, 4).iter().flat_map(|g| actions(g, 4)).collect()
}

fn taut_p2() -> QRBisheaf {
    let p2 = Arc::new(FinGroupoid::pair(2));
    QRBisheaf::new(BiAction::with_trivial_right(&GAction::tautological(p2))).unwrap()
}

#[test]
fn translation_between_the_two_points() {
    let x = taut_p2();
    let p2 = x.biaction().left().clone();
    let u = x.translation_element(0b01, 0b10).unwrap();
    assert_eq!(u, 1 << p2.arrow_by_label("(1,2)").unwrap());
    assert_eq!(x.act_left(u, 0b10), 0b01);
    assert_eq!(x.translation_element(0b01, 0b01).unwrap(), 1 << p2.id(0));
}

#[test]
fn translation_preconditions() {
    let x = taut_p2();
    // {1,2} is not a right section of the one-object right action.
    assert!(matches!(x.translation_element(0b11, 0b01), Err(Error::PreconditionFailed(_))));
    assert!(matches!(x.translation_element(0b01, 0b00), Err(Error::SupportMismatch(_))));

    let z2 = Arc::new(FinGroupoid::cyclic(2));
    let fixed = QRBisheaf::new(BiAction::with_trivial_right(&GAction::tautological(z2))).unwrap();
    assert!(matches!(fixed.translation_element(0b1, 0b1), Err(Error::NotPrincipal(_))));
}

#[test]
fn orbit_bisheaves_against_set_level_oracles() {
    for na in small_actions() {
        let a = &na.action;
        let x = QRBisheaf::new(BiAction::over_orbits(a)).unwrap();
        let p = x.is_principal();
        assert_eq!(p.principal, free(a), "{}", na.name);
        assert!(p.oracle_agrees && p.remark_agrees, "{}", na.name);
        let b = x.is_biprincipal();
        assert_eq!(b.biprincipal, free(a) && anchor_bijective(a), "{}", na.name);
        assert!(b.oracle_agrees, "{}", na.name);
        match x.interchange_check() {
            Ok(i) => assert!(i.agrees, "{}", na.name),
            Err(Error::HypothesisFailed(_)) => assert!(!b.biprincipal),
            Err(e) => panic!("{}: {e}", na.name),
        }
        if b.biprincipal {
            assert_eq!(b.full, Some(true));
            assert!(x.unit_map().unwrap().holds(), "{}", na.name);
            assert!(x.dual().unit_map().unwrap().holds(), "{}", na.name);
        }
    }
}

#[test]
fn translation_elements_are_unique_partial_units() {
    for na in small_actions().into_iter().filter(|na| free(&na.action)) {
        let a = &na.action;
        let x = QRBisheaf::new(BiAction::over_orbits(a)).unwrap();
        let q = x.q().clone();
        for &s in x.bisections() {
            for &t in x.bisections() {
                if x.tspp(s) != x.tspp(t) {
                    continue;
                }
                let u = x.translation_element(s, t).unwrap();
                assert_eq!(Some(u), translation_oracle(a, s, t), "{}", na.name);
                assert!(q.is_partial_unit(u));
                assert_eq!(u, x.inner(s, t));
            }
        }
        assert_eq!(x.meet_identity_witness(), None, "{}", na.name);
        assert_eq!(x.adjoint_identity_witness(), None, "{}", na.name);
    }
}

#[test]
fn tautological_bundle_is_the_bundle_of_a_point() {
    let p2 = Arc::new(FinGroupoid::pair(2));
    let t = Arc::new(FinGroupoid::trivial());
    let phi = GroupoidFunctor::new(t, p2.clone(), vec![0], vec![p2.id(0)]).unwrap();
    let bundle = QRBisheaf::new(phi.bundle()).unwrap();
    let found = bimodule_iso(&taut_p2(), &bundle);
    assert!(found.map.is_some());
    assert_eq!(found.preserves_inner_products, Some(true));
}

#[test]
fn free_and_trivial_z2_actions_are_not_isomorphic() {
    let z2 = Arc::new(FinGroupoid::cyclic(2));
    let regular = GAction::regular(z2.clone());
    let points = vec!["a".to_string(), "b".to_string()];
    let trivial = GAction::new(z2, points, vec![0, 0], vec![Some(0), Some(1), Some(0), Some(1)]).unwrap();
    let x = QRBisheaf::new(BiAction::with_trivial_right(&regular)).unwrap();
    let y = QRBisheaf::new(BiAction::with_trivial_right(&trivial)).unwrap();
    let found = bimodule_iso(&x, &y);
    assert_eq!(found.map, None);
    assert_eq!(found.preserves_inner_products, None);
    assert!(bimodule_iso(&x, &x).map.is_some());
}

#[test]
fn unit_bisheaves_are_tensor_units() {
    for na in small_actions().into_iter().filter(|na| na.action.len() <= 3) {
        let b = BiAction::over_orbits(&na.action);
        let x = QRBisheaf::new(b.clone()).unwrap();
        let left_unit = QRBisheaf::new(BiAction::unit(b.left().clone())).unwrap();
        let right_unit = QRBisheaf::new(BiAction::unit(b.right().clone())).unwrap();
        let lx = tensor_compose(&left_unit, &x).unwrap();
        let xr = tensor_compose(&x, &right_unit).unwrap();
        assert!(bimodule_iso(&lx, &x).map.is_some(), "{}", na.name);
        assert!(bimodule_iso(&xr, &x).map.is_some(), "{}", na.name);
        assert!(generic_tensor_agrees(&x, &right_unit).unwrap(), "{}", na.name);
    }
}

#[test]
fn mismatched_middle_groupoids_do_not_compose() {
    let x = taut_p2();
    assert!(matches!(tensor_compose(&x, &x), Err(Error::QuantaleMismatch(_))));
}

proptest! {
    #[test]
    fn double_dual_is_isomorphic(k in 0usize..512) {
        let all = small_actions();
        let na = &all[k % all.len()];
        let x = QRBisheaf::new(BiAction::over_orbits(&na.action)).unwrap();
        let dd = x.dual().dual();
        prop_assert!(bimodule_iso(&x, &dd).map.is_some());
        // Left and right inner products trade places under the dual.
        let d = x.dual();
        for u in [0usize, 1, x.top()] {
            for v in [0usize, 1, x.top()] {
                prop_assert_eq!(d.inner(u, v), x.bracket(u, v));
            }
        }
    }
}
