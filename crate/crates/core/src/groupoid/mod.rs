//! Finite discrete groupoids.
//!
//! Composition is written `f∘g` and is defined exactly when `dom f = cod g`.
//! In a pair groupoid the arrow labelled `(a,b)` goes from `b` to `a`.

mod action;
mod functor;
pub mod group;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::bits::SmallSet;
use crate::error::{Error, Result};

pub use action::{BiAction, GAction};
pub use functor::{EssentialEquivalenceReport, GroupoidFunctor};
pub use group::{CanonicalGroup, GroupTable};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Arrow {
    pub label: String,
    pub dom: usize,
    pub cod: usize,
}

/// One failed axiom instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub axiom: String,
    pub witness: String,
}

impl Violation {
    pub fn new(axiom: &str, witness: impl Into<String>) -> Self {
        Violation { axiom: axiom.to_string(), witness: witness.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.axiom, self.witness)
    }
}

pub(crate) fn push_once(out: &mut Vec<Violation>, axiom: &str, witness: String) {
    if !out.iter().any(|v| v.axiom == axiom) {
        out.push(Violation::new(axiom, witness));
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinGroupoid {
    objects: Vec<String>,
    arrows: Vec<Arrow>,
    /// `comp[f * n + g] = f∘g`.
    comp: Vec<Option<usize>>,
    inv: Vec<usize>,
    ids: Vec<usize>,
}

impl FinGroupoid {
    /// Assembles a groupoid from raw tables without checking the axioms.
    pub fn from_tables(
        objects: Vec<String>,
        arrows: Vec<Arrow>,
        comp: Vec<Option<usize>>,
        inv: Vec<usize>,
        ids: Vec<usize>,
    ) -> Self {
        FinGroupoid { objects, arrows, comp, inv, ids }
    }

    pub fn new(
        objects: Vec<String>,
        arrows: Vec<Arrow>,
        comp: Vec<Option<usize>>,
        inv: Vec<usize>,
        ids: Vec<usize>,
    ) -> Result<Self> {
        let g = Self::from_tables(objects, arrows, comp, inv, ids);
        match g.validate().first() {
            None => Ok(g),
            Some(v) => Err(Error::InvalidGroupoid(v.to_string())),
        }
    }

    /// Every violated axiom, each with one witness.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let (no, na) = (self.objects.len(), self.arrows.len());
        if self.comp.len() != na * na || self.inv.len() != na || self.ids.len() != no {
            out.push(Violation::new("tables", "table sizes do not match object/arrow counts"));
            return out;
        }
        if let Some(a) = self.arrows.iter().find(|a| a.dom >= no || a.cod >= no) {
            out.push(Violation::new("tables", format!("arrow {} has an unknown endpoint", a.label)));
            return out;
        }
        if na > SmallSet::CAPACITY {
            out.push(Violation::new("size", format!("{na} arrows exceed the supported 64")));
            return out;
        }
        let name = |f: usize| &self.arrows[f].label;
        let mut first = |axiom: &str, w: String| push_once(&mut out, axiom, w);
        for f in 0..na {
            for g in 0..na {
                let composable = self.arrows[f].dom == self.arrows[g].cod;
                match self.comp[f * na + g] {
                    Some(_) if !composable => {
                        first("composability", format!("{}∘{} defined but dom ≠ cod", name(f), name(g)))
                    }
                    None if composable => {
                        first("composability", format!("{}∘{} undefined but dom = cod", name(f), name(g)))
                    }
                    Some(h) if h >= na => first("tables", format!("{}∘{} out of range", name(f), name(g))),
                    Some(h) => {
                        if self.arrows[h].dom != self.arrows[g].dom || self.arrows[h].cod != self.arrows[f].cod {
                            first("typing", format!("{}∘{} = {} has the wrong endpoints", name(f), name(g), name(h)));
                        }
                    }
                    None => {}
                }
            }
        }
        if !out.is_empty() {
            return out;
        }
        let mut first = |axiom: &str, w: String| push_once(&mut out, axiom, w);
        for f in 0..na {
            for g in 0..na {
                let Some(fg) = self.comp(f, g) else { continue };
                for h in 0..na {
                    if let Some(gh) = self.comp(g, h) {
                        if self.comp(fg, h) != self.comp(f, gh) {
                            first("associativity", format!("({}∘{})∘{}", name(f), name(g), name(h)));
                        }
                    }
                }
            }
        }
        for (o, &i) in self.ids.iter().enumerate() {
            if i >= na || self.arrows[i].dom != o || self.arrows[i].cod != o {
                first("identities", format!("id of {} is not a loop at it", self.objects[o]));
                continue;
            }
            for f in 0..na {
                if self.arrows[f].cod == o && self.comp(i, f) != Some(f) {
                    first("identities", format!("id∘{} ≠ {}", name(f), name(f)));
                }
                if self.arrows[f].dom == o && self.comp(f, i) != Some(f) {
                    first("identities", format!("{}∘id ≠ {}", name(f), name(f)));
                }
            }
        }
        for f in 0..na {
            let g = self.inv[f];
            let ok = g < na
                && self.comp(f, g) == Some(self.ids[self.arrows[f].cod])
                && self.comp(g, f) == Some(self.ids[self.arrows[f].dom]);
            if !ok {
                first("inverses", format!("inv({}) is not a two-sided inverse", name(f)));
            }
        }
        out
    }

    /// The one-object, one-arrow groupoid.
    pub fn trivial() -> Self {
        Self::from_group(&GroupTable::trivial())
    }

    pub fn from_group(g: &GroupTable) -> Self {
        Self::connected(1, g)
    }

    pub fn cyclic(n: usize) -> Self {
        Self::from_group(&GroupTable::cyclic(n))
    }

    /// The pair groupoid on objects `1..=n`.
    pub fn pair(n: usize) -> Self {
        Self::connected(n, &GroupTable::trivial())
    }

    /// `n` objects, every hom-set a copy of `group`: arrows `(a,b;h) : b → a`.
    pub fn connected(n: usize, group: &GroupTable) -> Self {
        let k = group.order();
        let objects: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
        let code = |a: usize, b: usize, h: usize| (a * n + b) * k + h;
        let mut arrows = Vec::with_capacity(n * n * k);
        for a in 0..n {
            for b in 0..n {
                for h in 0..k {
                    let label = match (n, k) {
                        (1, _) => group.names()[h].clone(),
                        (_, 1) => format!("({},{})", objects[a], objects[b]),
                        _ => format!("({},{};{})", objects[a], objects[b], group.names()[h]),
                    };
                    arrows.push(Arrow { label, dom: b, cod: a });
                }
            }
        }
        let na = arrows.len();
        let mut comp = vec![None; na * na];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for h in 0..k {
                        for j in 0..k {
                            comp[code(a, b, h) * na + code(b, c, j)] = Some(code(a, c, group.mul(h, j)));
                        }
                    }
                }
            }
        }
        let inv = (0..na)
            .map(|f| {
                let (ab, h) = (f / k, f % k);
                code(ab % n, ab / n, group.inverse(h))
            })
            .collect();
        let ids = (0..n).map(|a| code(a, a, group.identity())).collect();
        FinGroupoid { objects, arrows, comp, inv, ids }
    }

    /// Only identity arrows.
    pub fn discrete(objects: Vec<String>) -> Self {
        let n = objects.len();
        let arrows = objects
            .iter()
            .enumerate()
            .map(|(i, o)| Arrow { label: format!("id_{o}"), dom: i, cod: i })
            .collect();
        let mut comp = vec![None; n * n];
        for i in 0..n {
            comp[i * n + i] = Some(i);
        }
        FinGroupoid { objects, arrows, comp, inv: (0..n).collect(), ids: (0..n).collect() }
    }

    /// Disjoint union; object labels get a component prefix when there is more than one part.
    pub fn disjoint_union(parts: &[FinGroupoid]) -> Self {
        let prefix = parts.len() > 1;
        let mut objects = Vec::new();
        let mut arrows = Vec::new();
        let mut offsets = Vec::new();
        for (k, p) in parts.iter().enumerate() {
            offsets.push((objects.len(), arrows.len()));
            let o0 = objects.len();
            for o in &p.objects {
                objects.push(if prefix { format!("{k}.{o}") } else { o.clone() });
            }
            for a in &p.arrows {
                let label = if prefix { format!("{k}.{}", a.label) } else { a.label.clone() };
                arrows.push(Arrow { label, dom: a.dom + o0, cod: a.cod + o0 });
            }
        }
        let na = arrows.len();
        let mut comp = vec![None; na * na];
        let mut inv = vec![0; na];
        let mut ids = vec![0; objects.len()];
        for (p, &(o0, a0)) in parts.iter().zip(&offsets) {
            let m = p.arrow_count();
            for f in 0..m {
                inv[a0 + f] = a0 + p.inv[f];
                for g in 0..m {
                    comp[(a0 + f) * na + a0 + g] = p.comp(f, g).map(|h| a0 + h);
                }
            }
            for (o, &i) in p.ids.iter().enumerate() {
                ids[o0 + o] = a0 + i;
            }
        }
        FinGroupoid { objects, arrows, comp, inv, ids }
    }

    /// Same arrows with domain and codomain exchanged.
    pub fn opposite(&self) -> Self {
        let na = self.arrow_count();
        let arrows = self
            .arrows
            .iter()
            .map(|a| Arrow { label: a.label.clone(), dom: a.cod, cod: a.dom })
            .collect();
        let comp = (0..na * na).map(|k| self.comp(k % na, k / na)).collect();
        FinGroupoid { objects: self.objects.clone(), arrows, comp, inv: self.inv.clone(), ids: self.ids.clone() }
    }

    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    pub fn arrow_count(&self) -> usize {
        self.arrows.len()
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn arrows(&self) -> &[Arrow] {
        &self.arrows
    }

    pub fn dom(&self, f: usize) -> usize {
        self.arrows[f].dom
    }

    pub fn cod(&self, f: usize) -> usize {
        self.arrows[f].cod
    }

    pub fn label(&self, f: usize) -> &str {
        &self.arrows[f].label
    }

    pub fn comp(&self, f: usize, g: usize) -> Option<usize> {
        self.comp[f * self.arrows.len() + g]
    }

    pub fn inv(&self, f: usize) -> usize {
        self.inv[f]
    }

    pub fn id(&self, o: usize) -> usize {
        self.ids[o]
    }

    pub fn is_identity(&self, f: usize) -> bool {
        self.ids[self.arrows[f].dom] == f
    }

    /// Arrows `a → b`.
    pub fn hom(&self, a: usize, b: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.arrows.len()).filter(move |&f| self.arrows[f].dom == a && self.arrows[f].cod == b)
    }

    pub fn arrow_by_label(&self, label: &str) -> Option<usize> {
        self.arrows.iter().position(|a| a.label == label)
    }

    pub fn object_by_label(&self, label: &str) -> Option<usize> {
        self.objects.iter().position(|o| o == label)
    }

    /// Connected components as object sets, ordered by least object.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.objects.len();
        let mut comp_of = vec![usize::MAX; n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for o in 0..n {
            if comp_of[o] != usize::MAX {
                continue;
            }
            let members: Vec<usize> =
                (0..n).filter(|&p| self.hom(o, p).next().is_some()).collect();
            for &p in &members {
                comp_of[p] = out.len();
            }
            out.push(members);
        }
        out
    }

    /// The vertex group at `o` as a multiplication table.
    pub fn vertex_group(&self, o: usize) -> GroupTable {
        let elems: Vec<usize> = self.hom(o, o).collect();
        let pos = |f: usize| elems.iter().position(|&e| e == f).expect("closed");
        let names = elems.iter().map(|&f| self.label(f).to_string()).collect();
        let mul = elems
            .iter()
            .flat_map(|&f| elems.iter().map(move |&g| (f, g)))
            .map(|(f, g)| pos(self.comp(f, g).expect("loops compose")))
            .collect();
        GroupTable::new(names, mul).expect("vertex groups are groups")
    }

    /// `(orbit size, isotropy class)` per connected component, sorted.
    pub fn orbits_isotropy(&self) -> Vec<(usize, CanonicalGroup)> {
        let mut out: Vec<_> = self
            .components()
            .into_iter()
            .map(|c| (c.len(), self.vertex_group(c[0]).canonical()))
            .collect();
        out.sort();
        out
    }

    /// Isotropy classes with multiplicity, orbit sizes forgotten.
    pub fn morita_invariant(&self) -> BTreeMap<CanonicalGroup, usize> {
        let mut m = BTreeMap::new();
        for (_, g) in self.orbits_isotropy() {
            *m.entry(g).or_insert(0) += 1;
        }
        m
    }

    pub fn identities(&self) -> SmallSet {
        self.ids.iter().copied().collect()
    }

    pub fn all_arrows(&self) -> SmallSet {
        SmallSet::full(self.arrows.len())
    }

    pub fn describe_set(&self, s: SmallSet) -> String {
        let names: Vec<&str> = s.iter().map(|f| self.label(f)).collect();
        format!("{{{}}}", names.join(","))
    }

    /// Whether the arrow bijection `map` (self → other) preserves composition,
    /// which forces it to preserve identities, inverses and endpoints as well.
    pub fn is_isomorphism(&self, other: &FinGroupoid, map: &[usize]) -> bool {
        let n = self.arrow_count();
        if other.arrow_count() != n || other.object_count() != self.object_count() || map.len() != n {
            return false;
        }
        let mut seen = vec![false; n];
        for &m in map {
            if m >= n || std::mem::replace(&mut seen[m], true) {
                return false;
            }
        }
        (0..n).all(|f| (0..n).all(|g| self.comp(f, g).map(|h| map[h]) == other.comp(map[f], map[g])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builders_are_valid() {
        for g in [
            FinGroupoid::trivial(),
            FinGroupoid::cyclic(2),
            FinGroupoid::pair(2),
            FinGroupoid::pair(3),
            FinGroupoid::connected(2, &GroupTable::cyclic(2)),
            FinGroupoid::discrete(vec!["a".into(), "b".into()]),
            FinGroupoid::disjoint_union(&[FinGroupoid::trivial(), FinGroupoid::cyclic(2)]),
            FinGroupoid::pair(2).opposite(),
        ] {
            assert_eq!(g.validate(), vec![], "{:?}", g.objects);
        }
    }

    #[test]
    fn missing_composite_is_reported() {
        let p = FinGroupoid::pair(2);
        let mut comp = p.comp.clone();
        let f = p.arrow_by_label("(1,2)").unwrap();
        let g = p.arrow_by_label("(2,1)").unwrap();
        comp[f * 4 + g] = None;
        let broken = FinGroupoid::from_tables(p.objects.clone(), p.arrows.clone(), comp, p.inv.clone(), p.ids.clone());
        let v = broken.validate();
        assert_eq!(v[0].axiom, "composability");
        assert!(v[0].witness.contains("(1,2)∘(2,1)"));
    }

    #[test]
    fn pair_groupoid_labels_follow_cod_dom() {
        let p = FinGroupoid::pair(2);
        let f = p.arrow_by_label("(1,2)").unwrap();
        assert_eq!((p.cod(f), p.dom(f)), (0, 1));
        let g = p.arrow_by_label("(2,1)").unwrap();
        assert_eq!(p.label(p.comp(f, g).unwrap()), "(1,1)");
    }
}
