use std::sync::Arc;

use proptest::prelude::*;
use qk_core::suplat::{
    adjunction_witness, is_order_isomorphism, quotient_by_closure, tensor, FinSupLattice, SupHom,
};

fn powerset(labels: &[&str]) -> Arc<FinSupLattice> {
    Arc::new(FinSupLattice::powerset(labels.iter().map(|s| s.to_string()).collect()))
}

/// `g(y) = ⋁{x : f(x) ≤ y}` by exhaustion.
fn adjoint_oracle(f: &SupHom, y: usize) -> usize {
    let (s, t) = (f.source(), f.target());
    s.join_all(s.elements().filter(|&x| t.leq(f.apply(x), y)))
}

/// All maps from `n` points into `m` values, as vectors.
fn all_maps(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out.into_iter().flat_map(|v| (0..m).map(move |k| [v.clone(), vec![k]].concat())).collect();
    }
    out
}

fn small_lattices() -> Vec<Arc<FinSupLattice>> {
    vec![
        Arc::new(FinSupLattice::chain(1)),
        Arc::new(FinSupLattice::chain(2)),
        Arc::new(FinSupLattice::chain(3)),
        Arc::new(FinSupLattice::powerset_n(1)),
        Arc::new(FinSupLattice::powerset_n(2)),
    ]
}

#[test]
fn identity_adjoint_is_identity() {
    let l = powerset(&["a", "b", "c"]);
    let g = SupHom::identity(l.clone()).right_adjoint();
    assert!(l.elements().all(|y| g.apply(y) == y));
}

#[test]
fn bottom_map_has_top_adjoint() {
    let (s, t) = (powerset(&["a", "b"]), Arc::new(FinSupLattice::chain(3)));
    let f = SupHom::from_fn(s.clone(), t.clone(), |_| t.bottom()).unwrap();
    let g = f.right_adjoint();
    assert!(t.elements().all(|y| g.apply(y) == s.top()));
}

#[test]
fn inclusion_adjoint_intersects() {
    // Direct image of {1} ↪ {1,2}: P({1}) → P({1,2}); its adjoint is S ↦ S ∩ {1}.
    let (s, t) = (powerset(&["1"]), powerset(&["1", "2"]));
    let f = SupHom::from_fn(s.clone(), t.clone(), |x| x).unwrap();
    let g = f.right_adjoint();
    for y in t.elements() {
        assert_eq!(g.apply(y), y & 1);
        assert_eq!(g.apply(y), adjoint_oracle(&f, y));
    }
    assert_eq!(adjunction_witness(&f, &g), None);
}

#[test]
fn non_join_preserving_tables_are_rejected() {
    let l = powerset(&["a", "b"]);
    // Singletons go to the top but their join goes to the bottom.
    let table = vec![0, 3, 3, 0];
    assert!(SupHom::new(l.clone(), l, table).is_err());
}

#[test]
fn adjunctions_between_small_lattices() {
    for s in small_lattices() {
        for t in small_lattices() {
            for table in all_maps(s.len(), t.len()) {
                let Ok(f) = SupHom::new(s.clone(), t.clone(), table) else { continue };
                let g = f.right_adjoint();
                assert_eq!(adjunction_witness(&f, &g), None);
                for y in t.elements() {
                    assert_eq!(g.apply(y), adjoint_oracle(&f, y));
                    assert!(t.leq(f.apply(g.apply(y)), y));
                }
                assert!(s.elements().all(|x| s.leq(x, g.apply(f.apply(x)))));
            }
        }
    }
}

#[test]
fn tensor_of_two_element_lattices() {
    let two = Arc::new(FinSupLattice::chain(2));
    assert_eq!(tensor(&two, &two, &[]).lattice().len(), 2);
}

#[test]
fn tensor_of_powersets_is_powerset_of_product() {
    let t = tensor(&powerset(&["a", "b"]), &powerset(&["c"]), &[]);
    // P({a,b} × {c}) has two generators, hence four elements.
    assert_eq!(t.lattice().len(), 4);
    let (x, y) = (t.left().clone(), t.right().clone());
    let distinct: std::collections::BTreeSet<usize> =
        x.join_irreducibles().iter().flat_map(|&a| y.join_irreducibles().iter().map(move |&c| (a, c))).map(|(a, c)| t.pure(a, c)).collect();
    assert_eq!(distinct.len(), 2);
}

#[test]
fn anchor_balanced_tensor_is_the_diagonal() {
    // X = Y = B = P({a,b}) with bx = b ∧ x; relations (bx, y) ~ (x, by).
    let b = powerset(&["a", "b"]);
    let mut rel = Vec::new();
    for r in b.elements() {
        for x in b.elements() {
            for y in b.elements() {
                rel.push((vec![(r & x, y)], vec![(x, r & y)]));
            }
        }
    }
    let t = tensor(&b, &b, &rel);
    assert_eq!(t.lattice().len(), 4);
    // x ⊗ y collapses to the diagonal x ∧ y.
    for x in b.elements() {
        for y in b.elements() {
            assert_eq!(t.pure(x, y), t.pure(x & y, x & y));
        }
    }
}

/// Every join-bilinear map into a small lattice factors uniquely through `X ⊗ Y`.
#[test]
fn tensor_universal_property() {
    let pairs = [
        (Arc::new(FinSupLattice::chain(2)), Arc::new(FinSupLattice::powerset_n(1))),
        (Arc::new(FinSupLattice::chain(3)), Arc::new(FinSupLattice::chain(2))),
        (Arc::new(FinSupLattice::powerset_n(1)), Arc::new(FinSupLattice::chain(3))),
    ];
    for (x, y) in pairs {
        let t = tensor(&x, &y, &[]);
        for target in small_lattices() {
            let n = x.len() * y.len();
            for table in all_maps(n, target.len()) {
                let f = |a: usize, b: usize| table[a * y.len() + b];
                let bilinear = x.elements().all(|a| {
                    x.elements().all(|a2| y.elements().all(|b| f(x.join(a, a2), b) == target.join(f(a, b), f(a2, b))))
                        && f(x.bottom(), y.bottom()) == target.bottom()
                }) && y.elements().all(|b| {
                    y.elements().all(|b2| x.elements().all(|a| f(a, y.join(b, b2)) == target.join(f(a, b), f(a, b2))))
                }) && x.elements().all(|a| f(a, y.bottom()) == target.bottom())
                    && y.elements().all(|b| f(x.bottom(), b) == target.bottom());
                if !bilinear {
                    continue;
                }
                let tl = t.lattice();
                let h: Vec<usize> = tl
                    .elements()
                    .map(|e| {
                        target.join_all(
                            x.elements()
                                .flat_map(|a| y.elements().map(move |b| (a, b)))
                                .filter(|&(a, b)| t.contains_pair(e, a, b))
                                .map(|(a, b)| f(a, b)),
                        )
                    })
                    .collect();
                let hom = SupHom::new(tl.clone(), target.clone(), h).expect("factorization preserves joins");
                for a in x.elements() {
                    for b in y.elements() {
                        assert_eq!(hom.apply(t.pure(a, b)), f(a, b));
                    }
                }
            }
        }
    }
}

#[test]
fn empty_quotient_is_identity() {
    let l = powerset(&["1", "2"]);
    let (q, map) = quotient_by_closure(&l, &[]);
    assert!(is_order_isomorphism(&l, &q, map.table()));
}

#[test]
fn identifying_the_two_points() {
    // [{1}] = [{2}] forces [{1,2}] = [{1}] ∨ [{2}] into the same class.
    let l = powerset(&["1", "2"]);
    let (q, map) = quotient_by_closure(&l, &[(0b01, 0b10)]);
    assert_eq!(q.len(), 2);
    assert_eq!(map.apply(0b01), map.apply(0b10));
    assert_eq!(map.apply(0b01), map.apply(0b11));
    assert_ne!(map.apply(0b00), map.apply(0b01));
    assert!(map.is_surjective());
}

/// Every join-preserving map coequalizing the pairs factors uniquely through the quotient.
#[test]
fn quotient_universal_property() {
    let l = Arc::new(FinSupLattice::powerset_n(2));
    for pairs in [vec![(1, 2)], vec![(0, 1)], vec![(1, 3)], vec![(0, 3)]] {
        let (q, map) = quotient_by_closure(&l, &pairs);
        for target in small_lattices() {
            for table in all_maps(l.len(), target.len()) {
                let Ok(h) = SupHom::new(l.clone(), target.clone(), table) else { continue };
                if pairs.iter().any(|&(a, b)| h.apply(a) != h.apply(b)) {
                    continue;
                }
                // The factor is determined on the image of the quotient map.
                let mut factor = vec![None; q.len()];
                for x in l.elements() {
                    let slot = &mut factor[map.apply(x)];
                    assert!(slot.is_none_or(|v| v == h.apply(x)), "h is not constant on a class");
                    *slot = Some(h.apply(x));
                }
                let factor: Vec<usize> = factor.into_iter().map(|v| v.expect("quotient map is surjective")).collect();
                assert!(SupHom::new(q.clone(), target.clone(), factor).is_ok());
            }
        }
    }
}

proptest! {
    #[test]
    fn joins_and_meets_on_powersets(n in 1usize..6, a in 0usize..64, b in 0usize..64) {
        let l = FinSupLattice::powerset_n(n);
        let (a, b) = (a % l.len(), b % l.len());
        prop_assert_eq!(l.join(a, b), a | b);
        prop_assert_eq!(l.meet(a, b), a & b);
        prop_assert_eq!(l.leq(a, b), a & !b == 0);
    }

    #[test]
    fn point_map_images_have_meet_adjoints(n in 1usize..5, m in 1usize..5, seed in prop::collection::vec(0usize..16, 5)) {
        // Direct image of a point map P(n) → P(m) and its inverse-image right adjoint.
        let s = Arc::new(FinSupLattice::powerset_n(n));
        let t = Arc::new(FinSupLattice::powerset_n(m));
        let points: Vec<usize> = seed.iter().take(n).map(|k| k % m).collect();
        let f = SupHom::from_fn(s.clone(), t.clone(), |x| (0..n).filter(|i| x >> i & 1 == 1).fold(0, |acc, i| acc | 1 << points[i])).unwrap();
        let g = f.right_adjoint();
        prop_assert_eq!(adjunction_witness(&f, &g), None);
        for y in t.elements() {
            let preimage = (0..n).filter(|&i| y >> points[i] & 1 == 1).fold(0, |acc, i| acc | 1 << i);
            prop_assert_eq!(g.apply(y), preimage);
        }
    }
}
