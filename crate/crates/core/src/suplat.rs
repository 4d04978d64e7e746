//! Finite sup-lattices as closure systems over a generator set.
//!
//! An element is a closed subset of the generators; joins are closures of
//! unions and meets are plain intersections. Powersets skip the closure
//! machinery entirely: element `i` is the subset whose bit pattern is `i`.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use crate::bits::BitSet;
use crate::error::{Error, Result};

/// Index of an element inside its lattice.
pub type Elem = usize;

#[derive(Clone, Debug)]
pub struct FinSupLattice {
    labels: Vec<String>,
    sets: Vec<BitSet>,
    index: HashMap<BitSet, Elem>,
    /// For each generator, the elements whose closed set contains it.
    containing: Vec<BitSet>,
    powerset: bool,
    irreducibles: Vec<Elem>,
}

impl FinSupLattice {
    /// The full powerset of `labels`, with element `i` the subset whose bits are `i`.
    pub fn powerset(labels: Vec<String>) -> Self {
        let n = labels.len();
        assert!(n <= 20, "powerset of {n} generators is too large to tabulate");
        let sets: Vec<BitSet> = (0..1usize << n)
            .map(|m| BitSet::from_indices(n, (0..n).filter(|i| m >> i & 1 == 1)))
            .collect();
        let index = sets.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        FinSupLattice {
            irreducibles: (0..n).map(|i| 1usize << i).collect(),
            labels,
            sets,
            index,
            containing: Vec::new(),
            powerset: true,
        }
    }

    /// Powerset with generator labels `0..n`.
    pub fn powerset_n(n: usize) -> Self {
        Self::powerset((0..n).map(|i| i.to_string()).collect())
    }

    /// The chain `0 < 1 < .. < n-1`, as the initial segments of `n-1` generators.
    pub fn chain(n: usize) -> Self {
        assert!(n >= 1);
        let g = n - 1;
        let sets = (0..n).map(|k| BitSet::from_indices(g, 0..k)).collect();
        Self::from_closed_sets((0..g).map(|i| format!("c{i}")).collect(), sets)
            .expect("initial segments form a closure system")
    }

    /// Builds a lattice from an explicit family of closed sets, checking that it
    /// is a closure system (contains the full set, closed under intersection).
    pub fn from_closed_sets(labels: Vec<String>, sets: Vec<BitSet>) -> Result<Self> {
        let n = labels.len();
        if let Some(bad) = sets.iter().find(|s| s.universe() != n) {
            return Err(Error::NotClosureSystem(format!(
                "closed set {bad:?} lives over {} generators, expected {n}",
                bad.universe()
            )));
        }
        let mut sets = sets;
        sets.sort_by(|a, b| a.count().cmp(&b.count()).then_with(|| a.cmp(b)));
        sets.dedup();
        let full = BitSet::full(n);
        if sets.last() != Some(&full) {
            return Err(Error::NotClosureSystem("the full generator set is not closed".into()));
        }
        let index: HashMap<BitSet, Elem> =
            sets.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        for (i, a) in sets.iter().enumerate() {
            for b in &sets[i + 1..] {
                let m = a.intersection(b);
                if !index.contains_key(&m) {
                    return Err(Error::NotClosureSystem(format!(
                        "{a:?} ∩ {b:?} = {m:?} is not closed"
                    )));
                }
            }
        }
        Ok(Self::assemble(labels, sets, index))
    }

    /// Enumerates the closed sets of `closure`, starting from the closure of the
    /// empty set and adjoining one seed generator at a time. Every closed set must
    /// be the closure of some set of seeds.
    pub fn from_closure<F>(labels: Vec<String>, seeds: &[usize], closure: F) -> Self
    where
        F: Fn(&BitSet) -> BitSet,
    {
        let n = labels.len();
        let bottom = closure(&BitSet::new(n));
        let mut index: HashMap<BitSet, Elem> = HashMap::new();
        let mut sets = vec![bottom.clone()];
        index.insert(bottom, 0);
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for &g in seeds {
                if sets[i].contains(g) {
                    continue;
                }
                let mut s = sets[i].clone();
                s.insert(g);
                let c = closure(&s);
                if !index.contains_key(&c) {
                    index.insert(c.clone(), sets.len());
                    queue.push_back(sets.len());
                    sets.push(c);
                }
            }
        }
        sets.sort_by(|a, b| a.count().cmp(&b.count()).then_with(|| a.cmp(b)));
        let index = sets.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Self::assemble(labels, sets, index)
    }

    fn assemble(labels: Vec<String>, sets: Vec<BitSet>, index: HashMap<BitSet, Elem>) -> Self {
        let m = sets.len();
        let mut containing = vec![BitSet::new(m); labels.len()];
        for (e, s) in sets.iter().enumerate() {
            for g in s.iter() {
                containing[g].insert(e);
            }
        }
        let mut lat = FinSupLattice {
            labels,
            sets,
            index,
            containing,
            powerset: false,
            irreducibles: Vec::new(),
        };
        lat.irreducibles = (0..m)
            .filter(|&j| {
                let below = (0..m).filter(|&k| k != j && lat.leq(k, j));
                lat.join_all(below) != j
            })
            .collect();
        lat
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn elements(&self) -> std::ops::Range<Elem> {
        0..self.sets.len()
    }

    pub fn generator_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn is_powerset(&self) -> bool {
        self.powerset
    }

    pub fn set(&self, e: Elem) -> &BitSet {
        &self.sets[e]
    }

    pub fn index_of(&self, s: &BitSet) -> Option<Elem> {
        self.index.get(s).copied()
    }

    pub fn bottom(&self) -> Elem {
        0
    }

    pub fn top(&self) -> Elem {
        self.sets.len() - 1
    }

    pub fn leq(&self, a: Elem, b: Elem) -> bool {
        if self.powerset {
            a & !b == 0
        } else {
            self.sets[a].is_subset(&self.sets[b])
        }
    }

    /// The least closed set containing `s`.
    pub fn closure(&self, s: &BitSet) -> Elem {
        if self.powerset {
            return self.index[s];
        }
        let mut above = BitSet::full(self.sets.len());
        for g in s.iter() {
            above.intersect_with(&self.containing[g]);
        }
        // Closed sets are sorted by size, so the smallest superset comes first.
        above.first().expect("the full set is closed")
    }

    pub fn join(&self, a: Elem, b: Elem) -> Elem {
        if self.powerset {
            return a | b;
        }
        if self.leq(a, b) {
            return b;
        }
        if self.leq(b, a) {
            return a;
        }
        self.closure(&self.sets[a].union(&self.sets[b]))
    }

    pub fn join_all(&self, items: impl IntoIterator<Item = Elem>) -> Elem {
        items.into_iter().fold(self.bottom(), |acc, e| self.join(acc, e))
    }

    pub fn meet(&self, a: Elem, b: Elem) -> Elem {
        if self.powerset {
            return a & b;
        }
        self.index[&self.sets[a].intersection(&self.sets[b])]
    }

    pub fn meet_all(&self, items: impl IntoIterator<Item = Elem>) -> Elem {
        items.into_iter().fold(self.top(), |acc, e| self.meet(acc, e))
    }

    /// Join-irreducible elements; every element is the join of those below it.
    pub fn join_irreducibles(&self) -> &[Elem] {
        &self.irreducibles
    }

    /// `↓x`.
    pub fn down(&self, x: Elem) -> impl Iterator<Item = Elem> + '_ {
        self.elements().filter(move |&y| self.leq(y, x))
    }

    pub fn describe(&self, e: Elem) -> String {
        let names: Vec<&str> = self.sets[e].iter().map(|g| self.labels[g].as_str()).collect();
        format!("{{{}}}", names.join(","))
    }

    /// Whether `y ↦ x ∧ y` preserves joins for every `x`.
    pub fn distributivity_witness(&self) -> Option<(Elem, Elem, Elem)> {
        for x in self.elements() {
            for a in self.elements() {
                for &j in &self.irreducibles {
                    let lhs = self.meet(x, self.join(a, j));
                    let rhs = self.join(self.meet(x, a), self.meet(x, j));
                    if lhs != rhs {
                        return Some((x, a, j));
                    }
                }
            }
        }
        None
    }

    pub fn is_frame(&self) -> bool {
        self.powerset || self.distributivity_witness().is_none()
    }
}

/// Whether `f : source → target` preserves all joins. Checking the empty join
/// and `f(a ∨ j) = f(a) ∨ f(j)` for join-irreducible `j` covers every finite join.
pub fn join_preservation_witness(
    source: &FinSupLattice,
    target: &FinSupLattice,
    f: impl Fn(Elem) -> Elem,
) -> Option<String> {
    if f(source.bottom()) != target.bottom() {
        return Some(format!("f(0) = {} ≠ 0", target.describe(f(source.bottom()))));
    }
    for a in source.elements() {
        for &j in source.join_irreducibles() {
            let lhs = f(source.join(a, j));
            let rhs = target.join(f(a), f(j));
            if lhs != rhs {
                return Some(format!(
                    "f({} ∨ {}) = {} but f(a) ∨ f(j) = {}",
                    source.describe(a),
                    source.describe(j),
                    target.describe(lhs),
                    target.describe(rhs)
                ));
            }
        }
    }
    None
}

/// Whether `f` preserves the top and all binary meets.
pub fn meet_preservation_witness(
    source: &FinSupLattice,
    target: &FinSupLattice,
    f: impl Fn(Elem) -> Elem,
) -> Option<String> {
    if f(source.top()) != target.top() {
        return Some("f(1) ≠ 1".into());
    }
    for a in source.elements() {
        for b in source.elements() {
            if f(source.meet(a, b)) != target.meet(f(a), f(b)) {
                return Some(format!(
                    "f({} ∧ {}) ≠ f(a) ∧ f(b)",
                    source.describe(a),
                    source.describe(b)
                ));
            }
        }
    }
    None
}

/// A join-preserving map, stored as a table.
#[derive(Clone, Debug)]
pub struct SupHom {
    source: Arc<FinSupLattice>,
    target: Arc<FinSupLattice>,
    table: Vec<Elem>,
}

impl SupHom {
    pub fn new(source: Arc<FinSupLattice>, target: Arc<FinSupLattice>, table: Vec<Elem>) -> Result<Self> {
        if table.len() != source.len() || table.iter().any(|&t| t >= target.len()) {
            return Err(Error::NotJoinPreserving("table does not match the lattices".into()));
        }
        if let Some(w) = join_preservation_witness(&source, &target, |x| table[x]) {
            return Err(Error::NotJoinPreserving(w));
        }
        Ok(SupHom { source, target, table })
    }

    pub fn from_fn(
        source: Arc<FinSupLattice>,
        target: Arc<FinSupLattice>,
        f: impl Fn(Elem) -> Elem,
    ) -> Result<Self> {
        let table = source.elements().map(f).collect();
        Self::new(source, target, table)
    }

    pub fn identity(l: Arc<FinSupLattice>) -> Self {
        let table = l.elements().collect();
        SupHom { source: l.clone(), target: l, table }
    }

    pub fn source(&self) -> &Arc<FinSupLattice> {
        &self.source
    }

    pub fn target(&self) -> &Arc<FinSupLattice> {
        &self.target
    }

    pub fn table(&self) -> &[Elem] {
        &self.table
    }

    pub fn apply(&self, x: Elem) -> Elem {
        self.table[x]
    }

    /// `self ∘ first`.
    pub fn after(&self, first: &SupHom) -> SupHom {
        SupHom {
            source: first.source.clone(),
            target: self.target.clone(),
            table: first.table.iter().map(|&y| self.table[y]).collect(),
        }
    }

    pub fn is_surjective(&self) -> bool {
        let mut hit = vec![false; self.target.len()];
        for &t in &self.table {
            hit[t] = true;
        }
        hit.into_iter().all(|h| h)
    }

    /// `g(y) = ⋁{x : f(x) ≤ y}`, the unique map with `f(x) ≤ y ⟺ x ≤ g(y)`.
    pub fn right_adjoint(&self) -> MeetHom {
        let table = self
            .target
            .elements()
            .map(|y| {
                self.source
                    .join_all(self.source.elements().filter(|&x| self.target.leq(self.table[x], y)))
            })
            .collect();
        MeetHom { source: self.target.clone(), target: self.source.clone(), table }
    }

    /// `g(y) = ⋀{x : y ≤ f(x)}`; exists exactly when `f` preserves meets.
    pub fn left_adjoint(&self) -> Result<SupHom> {
        if let Some(w) = meet_preservation_witness(&self.source, &self.target, |x| self.table[x]) {
            return Err(Error::PreconditionFailed(format!("no left adjoint: {w}")));
        }
        let table = self
            .target
            .elements()
            .map(|y| {
                self.source
                    .meet_all(self.source.elements().filter(|&x| self.target.leq(y, self.table[x])))
            })
            .collect();
        Ok(SupHom { source: self.target.clone(), target: self.source.clone(), table })
    }
}

/// A meet-preserving map such as a right adjoint.
#[derive(Clone, Debug)]
pub struct MeetHom {
    source: Arc<FinSupLattice>,
    target: Arc<FinSupLattice>,
    table: Vec<Elem>,
}

impl MeetHom {
    pub fn apply(&self, x: Elem) -> Elem {
        self.table[x]
    }

    pub fn table(&self) -> &[Elem] {
        &self.table
    }

    pub fn source(&self) -> &Arc<FinSupLattice> {
        &self.source
    }

    pub fn target(&self) -> &Arc<FinSupLattice> {
        &self.target
    }
}

/// Checks `f(x) ≤ y ⟺ x ≤ g(y)` for every pair, returning a failing pair.
pub fn adjunction_witness(f: &SupHom, g: &MeetHom) -> Option<(Elem, Elem)> {
    let (s, t) = (f.source(), f.target());
    for x in s.elements() {
        for y in t.elements() {
            if t.leq(f.apply(x), y) != s.leq(x, g.apply(y)) {
                return Some((x, y));
            }
        }
    }
    None
}

/// A formal join of generator pairs `(x, y)`, standing for `⋁ x⊗y`.
pub type FormalJoin = Vec<(Elem, Elem)>;

/// The tensor product `X ⊗ Y` modulo relations, with its pure tensors.
#[derive(Clone, Debug)]
pub struct Tensor {
    lattice: Arc<FinSupLattice>,
    left: Arc<FinSupLattice>,
    right: Arc<FinSupLattice>,
    pure: Vec<Elem>,
}

impl Tensor {
    pub fn lattice(&self) -> &Arc<FinSupLattice> {
        &self.lattice
    }

    pub fn left(&self) -> &Arc<FinSupLattice> {
        &self.left
    }

    pub fn right(&self) -> &Arc<FinSupLattice> {
        &self.right
    }

    /// `x ⊗ y`.
    pub fn pure(&self, x: Elem, y: Elem) -> Elem {
        self.pure[x * self.right.len() + y]
    }

    /// Whether the pair `(x, y)` lies in the closed set of `t`, i.e. `x ⊗ y ≤ t`.
    pub fn contains_pair(&self, t: Elem, x: Elem, y: Elem) -> bool {
        self.lattice.set(t).contains(x * self.right.len() + y)
    }
}

struct PairClosure<'a> {
    x: &'a FinSupLattice,
    y: &'a FinSupLattice,
    down_x: Vec<Vec<Elem>>,
    down_y: Vec<Vec<Elem>>,
    relations: Vec<(Vec<usize>, Vec<usize>)>,
}

impl PairClosure<'_> {
    fn code(&self, a: Elem, b: Elem) -> usize {
        a * self.y.len() + b
    }

    fn saturate(&self, s: &BitSet) -> BitSet {
        let (nx, ny) = (self.x.len(), self.y.len());
        let mut d = s.clone();
        loop {
            let mut changed = false;
            for b in 0..ny {
                let j = self.x.join_all((0..nx).filter(|&a| d.contains(self.code(a, b))));
                for &a in &self.down_x[j] {
                    changed |= d.insert(self.code(a, b));
                }
            }
            for a in 0..nx {
                let j = self.y.join_all((0..ny).filter(|&b| d.contains(self.code(a, b))));
                for &b in &self.down_y[j] {
                    changed |= d.insert(self.code(a, b));
                }
            }
            for (l, r) in &self.relations {
                let l_in = l.iter().all(|&g| d.contains(g));
                let r_in = r.iter().all(|&g| d.contains(g));
                if l_in && !r_in {
                    for &g in r {
                        changed |= d.insert(g);
                    }
                } else if r_in && !l_in {
                    for &g in l {
                        changed |= d.insert(g);
                    }
                }
            }
            if !changed {
                return d;
            }
        }
    }
}

/// The sup-lattice generated by symbols `x ⊗ y`, bilinear in each variable and
/// subject to `⋁L = ⋁R` for every relation `(L, R)`. Elements are the subsets of
/// `X × Y` that are down-closed and join-closed in each coordinate and saturated
/// under the relations.
pub fn tensor(
    x: &Arc<FinSupLattice>,
    y: &Arc<FinSupLattice>,
    relations: &[(FormalJoin, FormalJoin)],
) -> Tensor {
    let (nx, ny) = (x.len(), y.len());
    let pc = PairClosure {
        x,
        y,
        down_x: x.elements().map(|e| x.down(e).collect()).collect(),
        down_y: y.elements().map(|e| y.down(e).collect()).collect(),
        relations: relations
            .iter()
            .map(|(l, r)| {
                let enc = |v: &FormalJoin| v.iter().map(|&(a, b)| a * ny + b).collect();
                (enc(l), enc(r))
            })
            .collect(),
    };
    let labels: Vec<String> = (0..nx)
        .flat_map(|a| (0..ny).map(move |b| (a, b)))
        .map(|(a, b)| format!("{}⊗{}", x.describe(a), y.describe(b)))
        .collect();
    let seeds: Vec<usize> = x
        .join_irreducibles()
        .iter()
        .flat_map(|&a| y.join_irreducibles().iter().map(move |&b| a * ny + b))
        .collect();
    let lattice = FinSupLattice::from_closure(labels, &seeds, |s| pc.saturate(s));
    let pure = (0..nx)
        .flat_map(|a| (0..ny).map(move |b| (a, b)))
        .map(|(a, b)| {
            let s = BitSet::from_indices(nx * ny, [pc.code(a, b)]);
            lattice.index_of(&pc.saturate(&s)).expect("closure of a pair is closed")
        })
        .collect();
    Tensor { lattice: Arc::new(lattice), left: x.clone(), right: y.clone(), pure }
}

/// The largest quotient of `x` identifying each pair, realised as the closure
/// system `{z : a ≤ z ⟺ b ≤ z for every pair (a, b)}` inside `x`.
pub fn quotient_by_closure(x: &Arc<FinSupLattice>, pairs: &[(Elem, Elem)]) -> (Arc<FinSupLattice>, SupHom) {
    let fixed: Vec<BitSet> = x
        .elements()
        .filter(|&z| pairs.iter().all(|&(a, b)| x.leq(a, z) == x.leq(b, z)))
        .map(|z| x.set(z).clone())
        .collect();
    let q = Arc::new(
        FinSupLattice::from_closed_sets(x.labels().to_vec(), fixed)
            .expect("fixed points of a congruence are meet-closed"),
    );
    let table = x.elements().map(|e| q.closure(x.set(e))).collect();
    let map = SupHom { source: x.clone(), target: q.clone(), table };
    (q, map)
}

/// Whether `map` is a bijection `a → b` that preserves and reflects order.
pub fn is_order_isomorphism(a: &FinSupLattice, b: &FinSupLattice, map: &[Elem]) -> bool {
    if a.len() != b.len() || map.len() != a.len() {
        return false;
    }
    let mut seen = vec![false; b.len()];
    for &m in map {
        if m >= b.len() || std::mem::replace(&mut seen[m], true) {
            return false;
        }
    }
    a.elements()
        .all(|x| a.elements().all(|y| a.leq(x, y) == b.leq(map[x], map[y])))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_has_expected_shape() {
        let c = FinSupLattice::chain(4);
        assert_eq!(c.len(), 4);
        assert_eq!(c.join_irreducibles().len(), 3);
        assert!(c.is_frame());
    }

    #[test]
    fn rejects_families_not_closed_under_meet() {
        let sets = vec![
            BitSet::from_indices(2, [0]),
            BitSet::from_indices(2, [1]),
            BitSet::full(2),
        ];
        assert!(FinSupLattice::from_closed_sets(vec!["a".into(), "b".into()], sets).is_err());
    }

    #[test]
    fn diamond_is_not_distributive() {
        // M3: bottom, three atoms, top over generators {a,b,c}.
        let g = 3;
        let sets = vec![
            BitSet::new(g),
            BitSet::from_indices(g, [0]),
            BitSet::from_indices(g, [1]),
            BitSet::from_indices(g, [2]),
            BitSet::full(g),
        ];
        let m3 = FinSupLattice::from_closed_sets(vec!["a".into(), "b".into(), "c".into()], sets).unwrap();
        assert!(!m3.is_frame());
        assert_eq!(m3.join(1, 2), 4);
    }
}
