//! Exhaustive small instances, one representative per isomorphism class:
//! groupoids, their actions, functors between them, and finite posets.

use std::sync::Arc;

use crate::groupoid::{FinGroupoid, GAction, GroupTable, GroupoidFunctor};
use crate::locale::Poset;

#[derive(Clone, Debug)]
pub struct NamedGroupoid {
    pub name: String,
    pub groupoid: Arc<FinGroupoid>,
}

#[derive(Clone, Debug)]
pub struct NamedAction {
    /// Groupoid name and orbit description, e.g. `P2+Z2 : c0/1+c1/2`.
    pub name: String,
    pub action: GAction,
}

#[derive(Clone, Debug)]
pub struct NamedFunctor {
    pub name: String,
    pub functor: GroupoidFunctor,
}

const GROUP_NAMES: [&str; 14] =
    ["1", "Z2", "Z3", "Z4", "Z2xZ2", "Z5", "Z6", "S3", "Z7", "Z8", "Z4xZ2", "Z2xZ2xZ2", "D4", "Q8"];

/// A connected groupoid `n` objects by group number `k` of [`GroupTable::all_up_to_order_8`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Component {
    objects: usize,
    group: usize,
}

fn component_name(c: Component) -> String {
    match (c.objects, c.group) {
        (1, 0) => "T".into(),
        (1, k) => GROUP_NAMES[k].into(),
        (n, 0) => format!("P{n}"),
        (n, k) => format!("P{n}x{}", GROUP_NAMES[k]),
    }
}

/// Every groupoid with at most `max_objects` objects and `max_arrows` arrows,
/// up to isomorphism: multisets of connected components `P_n × K`.
/// Ordered by arrow count, then object count, then name.
pub fn groupoids(max_objects: usize, max_arrows: usize) -> Vec<NamedGroupoid> {
    let groups = GroupTable::all_up_to_order_8();
    let mut components = Vec::new();
    for objects in 1..=max_objects {
        for (group, g) in groups.iter().enumerate() {
            if objects * objects * g.order() <= max_arrows {
                components.push(Component { objects, group });
            }
        }
    }
    let size = |c: &Component| c.objects * c.objects * groups[c.group].order();
    let mut multisets: Vec<Vec<Component>> = Vec::new();
    let mut stack: Vec<(Vec<Component>, usize)> = vec![(Vec::new(), 0)];
    while let Some((chosen, from)) = stack.pop() {
        if !chosen.is_empty() {
            multisets.push(chosen.clone());
        }
        let objects: usize = chosen.iter().map(|c| c.objects).sum();
        let arrows: usize = chosen.iter().map(size).sum();
        for (i, c) in components.iter().enumerate().skip(from) {
            if objects + c.objects <= max_objects && arrows + size(c) <= max_arrows {
                let mut next = chosen.clone();
                next.push(*c);
                stack.push((next, i));
            }
        }
    }
    let mut out: Vec<NamedGroupoid> = multisets
        .into_iter()
        .map(|parts| {
            let name = parts.iter().map(|&c| component_name(c)).collect::<Vec<_>>().join("+");
            let built: Vec<FinGroupoid> =
                parts.iter().map(|c| FinGroupoid::connected(c.objects, &groups[c.group])).collect();
            let groupoid =
                if built.len() == 1 { built.into_iter().next().expect("one") } else { FinGroupoid::disjoint_union(&built) };
            NamedGroupoid { name, groupoid: Arc::new(groupoid) }
        })
        .collect();
    out.sort_by(|a, b| {
        (a.groupoid.arrow_count(), a.groupoid.object_count(), &a.name)
            .cmp(&(b.groupoid.arrow_count(), b.groupoid.object_count(), &b.name))
    });
    out
}

/// Transitive actions up to isomorphism: per component, the cosets of each
/// subgroup class of the vertex group at its first object.
fn transitive_actions(g: &Arc<FinGroupoid>, max_points: usize) -> Vec<(String, GAction)> {
    let mut out = Vec::new();
    for (ci, comp) in g.components().iter().enumerate() {
        let base = comp[0];
        let loops: Vec<usize> = g.hom(base, base).collect();
        let vertex = g.vertex_group(base);
        for sub in vertex.subgroups_up_to_conjugacy() {
            let size = comp.len() * loops.len() / sub.len();
            if size > max_points {
                continue;
            }
            let arrows: Vec<usize> = sub.iter().map(|&i| loops[i]).collect();
            out.push((format!("c{ci}/{}", sub.len()), GAction::cosets(g.clone(), base, &arrows)));
        }
    }
    out
}

/// Every action of `g` on a nonempty carrier of at most `max_points` points,
/// up to isomorphism: multisets of transitive actions.
pub fn actions(g: &NamedGroupoid, max_points: usize) -> Vec<NamedAction> {
    let trans = transitive_actions(&g.groupoid, max_points);
    let mut out = Vec::new();
    let mut stack: Vec<(Vec<usize>, usize, usize)> = vec![(Vec::new(), 0, 0)];
    while let Some((chosen, from, points)) = stack.pop() {
        if !chosen.is_empty() {
            let parts: Vec<GAction> = chosen.iter().map(|&i| trans[i].1.clone()).collect();
            let action = if parts.len() == 1 { parts[0].clone() } else { GAction::disjoint_union(&parts) };
            let desc = chosen.iter().map(|&i| trans[i].0.as_str()).collect::<Vec<_>>().join("+");
            out.push(NamedAction { name: format!("{} : {desc}", g.name), action });
        }
        for (i, (_, t)) in trans.iter().enumerate().skip(from) {
            if points + t.len() <= max_points {
                let mut next = chosen.clone();
                next.push(i);
                stack.push((next, i, points + t.len()));
            }
        }
    }
    out.sort_by(|a, b| (a.action.len(), &a.name).cmp(&(b.action.len(), &b.name)));
    out
}

/// Every functor between catalog groupoids with at most `max_arrows` arrows.
pub fn functors(gs: &[NamedGroupoid], max_arrows: usize) -> Vec<NamedFunctor> {
    let small: Vec<&NamedGroupoid> = gs.iter().filter(|g| g.groupoid.arrow_count() <= max_arrows).collect();
    let mut out = Vec::new();
    for h in &small {
        for g in &small {
            for (k, functor) in GroupoidFunctor::enumerate(&h.groupoid, &g.groupoid).into_iter().enumerate() {
                out.push(NamedFunctor { name: format!("{} -> {} #{k}", h.name, g.name), functor });
            }
        }
    }
    out
}

/// Every finite poset on at most `max_points` points, up to isomorphism.
/// Each has a natural labelling, so only relations `i < j` are enumerated.
pub fn posets(max_points: usize) -> Vec<Poset> {
    let mut out = Vec::new();
    for n in 1..=max_points {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let mut seen = std::collections::BTreeSet::new();
        for mask in 0u64..1 << pairs.len() {
            let rel: Vec<(usize, usize)> =
                pairs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &p)| p).collect();
            let leq = |i: usize, j: usize| i == j || rel.contains(&(i, j));
            let transitive = (0..n).all(|i| {
                (0..n).all(|j| (0..n).all(|k| !(leq(i, j) && leq(j, k)) || leq(i, k)))
            });
            if !transitive {
                continue;
            }
            let key = canonical_relation(n, &leq);
            if seen.insert(key) {
                let labels = (0..n).map(|i| i.to_string()).collect();
                out.push(Poset::new(labels, &rel).expect("acyclic"));
            }
        }
    }
    out
}

/// The lexicographically least adjacency matrix over all relabellings.
fn canonical_relation(n: usize, leq: &dyn Fn(usize, usize) -> bool) -> Vec<bool> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best: Option<Vec<bool>> = None;
    loop {
        let key: Vec<bool> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| leq(perm[i], perm[j])).collect();
        if best.as_ref().is_none_or(|b| key < *b) {
            best = Some(key);
        }
        if !next_permutation(&mut perm) {
            return best.expect("at least one permutation");
        }
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else { return false };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).expect("exists");
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Monotone maps `source → target` as point lists.
pub fn monotone_maps(source: &Poset, target: &Poset) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let (n, m) = (source.len(), target.len());
    let mut map = vec![0; n];
    if m == 0 {
        return if n == 0 { vec![Vec::new()] } else { out };
    }
    loop {
        if source.is_monotone(target, &map) {
            out.push(map.clone());
        }
        let mut k = n;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            map[k] += 1;
            if map[k] < m {
                break;
            }
            map[k] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poset_counts_match_the_known_sequence() {
        let counts: Vec<usize> =
            (1..=5).map(|n| posets(5).iter().filter(|p| p.len() == n).count()).collect();
        assert_eq!(counts, [1, 2, 5, 16, 63]);
    }

    #[test]
    fn groupoid_catalog_is_valid_and_distinct() {
        let gs = groupoids(3, 8);
        let mut keys: Vec<_> = gs.iter().map(|g| (g.groupoid.object_count(), g.groupoid.orbits_isotropy())).collect();
        assert!(gs.iter().all(|g| g.groupoid.validate().is_empty()));
        let n = keys.len();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), n);
    }

    #[test]
    fn pair_groupoid_actions() {
        let gs = groupoids(2, 4);
        let p2 = gs.iter().find(|g| g.name == "P2").unwrap();
        // The tautological action is the only transitive one; the regular
        // action is two copies of it.
        let acts = actions(p2, 4);
        let sizes: Vec<usize> = acts.iter().map(|a| a.action.len()).collect();
        assert_eq!(sizes, [2, 4]);
        let regular = GAction::regular(p2.groupoid.clone());
        let regular = crate::groupoid::BiAction::with_trivial_right(&regular);
        let two = crate::groupoid::BiAction::with_trivial_right(&acts[1].action);
        assert!(regular.isomorphism(&two).0.is_some());
        assert!(acts.iter().all(|a| a.action.validate().is_empty()));
    }
}
