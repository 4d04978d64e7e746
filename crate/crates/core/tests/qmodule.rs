use std::sync::Arc;

use proptest::prelude::*;
use qk_core::bimodule::QRBisheaf;
use qk_core::catalog::{actions, groupoids, NamedAction};
use qk_core::groupoid::{BiAction, FinGroupoid, GAction, GroupTable};
use qk_core::qmodule::QSheaf;
use qk_core::quantale::Quantale;

fn points(mask: usize) -> impl Iterator<Item = usize> {
    (0..usize::BITS as usize).filter(move |i| mask >> i & 1 == 1)
}

/// `⟨x,y⟩ = {g : g·b ∈ x for some b ∈ y}`.
fn inner_oracle(a: &GAction, x: usize, y: usize) -> usize {
    let g = a.groupoid();
    (0..g.arrow_count())
        .filter(|&f| points(y).any(|b| a.act(f, b).is_some_and(|c| x >> c & 1 == 1)))
        .fold(0, |acc, f| acc | 1 << f)
}

/// Subsets meeting each anchor fibre at most once.
fn anchor_injective(a: &GAction, s: usize) -> bool {
    let ps: Vec<usize> = points(s).collect();
    ps.iter().enumerate().all(|(i, &b)| ps[i + 1..].iter().all(|&c| a.anchor(b) != a.anchor(c)))
}

/// The orbit of `x`, by closing under single arrows.
fn orbit(a: &GAction, x: usize) -> usize {
    let g = a.groupoid();
    let mut seen = 1usize << x;
    loop {
        let next = points(seen)
            .flat_map(|b| (0..g.arrow_count()).filter_map(move |f| a.act(f, b)))
            .fold(seen, |acc, c| acc | 1 << c);
        if next == seen {
            return seen;
        }
        seen = next;
    }
}

fn free_at(a: &GAction, x: usize) -> bool {
    let g = a.groupoid();
    (0..g.arrow_count()).all(|f| a.act(f, x) != Some(x) || g.is_identity(f))
}

/// Anchor-injective, free at every point, and no two points in one orbit.
fn principal_oracle(a: &GAction, s: usize) -> bool {
    let ps: Vec<usize> = points(s).collect();
    anchor_injective(a, s)
        && ps.iter().all(|&b| free_at(a, b))
        && ps.iter().enumerate().all(|(i, &b)| ps[i + 1..].iter().all(|&c| orbit(a, b) >> c & 1 == 0))
}

fn small_actions() -> Vec<NamedAction> {
    groupoids(2, 4).iter().flat_map(|g| actions(g, 4)).collect()
}

fn sheaf(a: &GAction) -> QSheaf {
    QSheaf::of_action(a.clone()).unwrap()
}

#[test]
fn tautological_pair_inner_products() {
    let p2 = Arc::new(FinGroupoid::pair(2));
    let a = GAction::tautological(p2.clone());
    let x = sheaf(&a);
    let arrow = |l: &str| 1usize << p2.arrow_by_label(l).unwrap();
    assert_eq!(x.inner(0b01, 0b10), arrow("(1,2)"));
    assert_eq!(x.inner(0b10, 0b01), arrow("(2,1)"));
    assert_eq!(x.inner(0b01, 0b01), arrow("(1,1)"));
    assert_eq!(x.inner(0b11, 0b11), x.quantale().top());
}

#[test]
fn three_inner_product_routes_agree() {
    for na in small_actions() {
        let a = &na.action;
        let x = sheaf(a);
        let oracle = x.inner_oracle();
        assert_eq!(oracle.disagreement(), None, "{}", na.name);
        for u in x.elements() {
            for v in x.elements() {
                let expected = inner_oracle(a, u, v);
                assert_eq!(x.inner(u, v), expected, "{}: ⟨{u:b},{v:b}⟩", na.name);
                assert_eq!(x.inner_fast(u, v), expected);
                assert_eq!(oracle.inner(u, v), expected);
            }
        }
    }
}

#[test]
fn hilbert_sections_are_anchor_injective() {
    for na in small_actions() {
        let a = &na.action;
        let x = sheaf(a);
        let expected: Vec<usize> = x.elements().filter(|&s| anchor_injective(a, s)).collect();
        assert_eq!(x.sections(), expected.as_slice(), "{}", na.name);
        assert_eq!(x.local_sections(), expected, "{}", na.name);
    }
}

#[test]
fn principal_sections_match_the_set_level_description() {
    for na in small_actions() {
        let a = &na.action;
        let x = sheaf(a);
        let report = x.principal_sections();
        assert!(report.all_agree, "{}", na.name);
        let expected: Vec<usize> = x.sections().iter().copied().filter(|&s| principal_oracle(a, s)).collect();
        assert_eq!(report.principal, expected, "{}", na.name);
        let free = (0..a.len()).all(|p| free_at(a, p));
        assert_eq!(report.principally_covered, free, "{}", na.name);
    }
}

#[test]
fn invariants_are_unions_of_orbits() {
    for na in small_actions() {
        let a = &na.action;
        let x = sheaf(a);
        let closed: Vec<usize> = x.elements().filter(|&u| points(u).all(|p| orbit(a, p) & !u == 0)).collect();
        assert_eq!(x.invariants(), closed, "{}", na.name);
        assert_eq!(x.invariants_match_orbits(), Some(true));
    }
}

#[test]
fn hilbert_laws_hold_on_small_sheaves() {
    for na in small_actions() {
        let x = sheaf(&na.action);
        for law in x.hilbert_laws() {
            assert!(law.passed, "{}: {} {:?}", na.name, law.name, law.witness);
        }
        for law in x.principal_pair_laws() {
            assert!(law.passed, "{}: {} {:?}", na.name, law.name, law.witness);
        }
        assert_eq!(x.partial_unit_law_witness(), None, "{}", na.name);
        assert_eq!(x.right_adjoint_witness().unwrap(), None, "{}", na.name);
    }
}

#[test]
fn freeness_and_transitivity_reports() {
    for na in small_actions() {
        let a = &na.action;
        let x = sheaf(a);
        assert!(x.check_freeness().unwrap().holds(), "{}", na.name);
        assert!(x.check_transitivity_splitting().unwrap().holds(), "{}", na.name);
    }
}

#[test]
fn regular_sheaf_partial_units_are_its_bisections() {
    for g in groupoids(3, 8) {
        let q = Arc::new(Quantale::of_groupoid(g.groupoid.clone()).unwrap());
        let regular = QSheaf::regular(q.clone()).unwrap();
        // Sections of Q over itself: arrow sets with distinct codomains.
        let expected: Vec<usize> = regular
            .elements()
            .filter(|&s| {
                let fs: Vec<usize> = points(s).collect();
                fs.iter().enumerate().all(|(i, &f)| fs[i + 1..].iter().all(|&h| g.groupoid.cod(f) != g.groupoid.cod(h)))
            })
            .collect();
        assert_eq!(regular.sections(), expected.as_slice(), "{}", g.name);
        assert!(q.partial_units().iter().all(|&u| regular.is_section(u)));
        let unit = QRBisheaf::with_quantales(q.clone(), q.clone(), BiAction::unit(g.groupoid.clone())).unwrap();
        assert_eq!(unit.bisections(), q.partial_units(), "{}", g.name);
    }
}

#[test]
fn group_acting_on_a_point_has_no_principal_cover() {
    let z3 = Arc::new(FinGroupoid::from_group(&GroupTable::cyclic(3)));
    let x = sheaf(&GAction::tautological(z3));
    let report = x.principal_sections();
    // Only the empty section: the point is fixed by the whole group.
    assert_eq!(report.principal, [0]);
    assert!(!report.principally_covered);
}

#[test]
fn mismatched_quantale_is_refused() {
    let z2 = Arc::new(Quantale::of_groupoid(Arc::new(FinGroupoid::cyclic(2))).unwrap());
    let a = GAction::tautological(Arc::new(FinGroupoid::pair(2)));
    assert!(matches!(QSheaf::of_action_over(z2, a), Err(qk_core::Error::QuantaleMismatch(_))));
}

proptest! {
    #[test]
    fn brackets_are_orbit_closures(k in 0usize..256, u in 0usize..16, v in 0usize..16) {
        let all = small_actions();
        let na = &all[k % all.len()];
        let a = &na.action;
        let x = sheaf(a);
        let size = 1usize << a.len();
        let (u, v) = (u % size, v % size);
        let saturate = |w: usize| points(w).fold(0, |acc, p| acc | orbit(a, p));
        prop_assert_eq!(x.tspp(u), saturate(u));
        prop_assert_eq!(x.bracket(u, v), saturate(u & v));
        // Anchors of the points, as identity arrows.
        let g = a.groupoid();
        let support = points(u).fold(0, |acc, p| acc | 1 << g.id(a.anchor(p)));
        prop_assert_eq!(x.spp(u), support);
        prop_assert_eq!(x.inner(u, u) & x.quantale().unit(), support);
    }
}
