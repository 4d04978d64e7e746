//! Finite locales as downset lattices of finite posets, B-locales, sections,
//! and the direct-image calculus for pullbacks over a base.

use std::sync::Arc;

use crate::bits::BitSet;
use crate::error::{Error, Result};
use crate::suplat::{self, Elem, FinSupLattice, SupHom, Tensor};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poset {
    labels: Vec<String>,
    leq: Vec<Vec<bool>>,
}

impl Poset {
    /// The reflexive-transitive closure of `relations` (pairs `a ≤ b`); fails on cycles.
    pub fn new(labels: Vec<String>, relations: &[(usize, usize)]) -> Result<Self> {
        let n = labels.len();
        let mut leq = vec![vec![false; n]; n];
        for (i, row) in leq.iter_mut().enumerate() {
            row[i] = true;
        }
        for &(a, b) in relations {
            if a >= n || b >= n {
                return Err(Error::PreconditionFailed(format!("relation ({a},{b}) out of range")));
            }
            leq[a][b] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if leq[i][k] {
                    for j in 0..n {
                        if leq[k][j] {
                            leq[i][j] = true;
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if leq[i][j] && leq[j][i] {
                    return Err(Error::PreconditionFailed(format!(
                        "{} and {} are identified by the order",
                        labels[i], labels[j]
                    )));
                }
            }
        }
        Ok(Poset { labels, leq })
    }

    pub fn discrete(labels: Vec<String>) -> Self {
        Poset::new(labels, &[]).expect("antichain")
    }

    pub fn chain(n: usize) -> Self {
        let rel: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Poset::new((0..n).map(|i| i.to_string()).collect(), &rel).expect("chain")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.leq[a][b]
    }

    pub fn is_discrete(&self) -> bool {
        (0..self.len()).all(|i| (0..self.len()).all(|j| i == j || !self.leq[i][j]))
    }

    pub fn is_monotone(&self, target: &Poset, map: &[usize]) -> bool {
        map.len() == self.len()
            && map.iter().all(|&m| m < target.len())
            && (0..self.len())
                .all(|i| (0..self.len()).all(|j| !self.leq[i][j] || target.leq(map[i], map[j])))
    }

    pub fn downclose(&self, points: &BitSet) -> BitSet {
        let n = self.len();
        BitSet::from_indices(n, (0..n).filter(|&a| points.iter().any(|b| self.leq[a][b])))
    }
}

/// A finite locale: the frame of downsets of a finite poset of points.
#[derive(Clone, Debug)]
pub struct FinLocale {
    poset: Poset,
    frame: Arc<FinSupLattice>,
}

impl FinLocale {
    pub fn new(poset: Poset) -> Self {
        let frame = if poset.is_discrete() {
            FinSupLattice::powerset(poset.labels().to_vec())
        } else {
            let seeds: Vec<usize> = (0..poset.len()).collect();
            FinSupLattice::from_closure(poset.labels().to_vec(), &seeds, |s| poset.downclose(s))
        };
        FinLocale { poset, frame: Arc::new(frame) }
    }

    pub fn discrete(labels: Vec<String>) -> Self {
        Self::new(Poset::discrete(labels))
    }

    pub fn discrete_n(n: usize) -> Self {
        Self::discrete((0..n).map(|i| i.to_string()).collect())
    }

    pub fn poset(&self) -> &Poset {
        &self.poset
    }

    pub fn frame(&self) -> &Arc<FinSupLattice> {
        &self.frame
    }

    pub fn point_count(&self) -> usize {
        self.poset.len()
    }

    /// The open generated by `points`, i.e. their down-closure.
    pub fn open_of(&self, points: impl IntoIterator<Item = usize>) -> Elem {
        let s = BitSet::from_indices(self.poset.len(), points);
        self.frame.index_of(&self.poset.downclose(&s)).expect("downsets are closed")
    }

    pub fn points(&self, u: Elem) -> impl Iterator<Item = usize> + '_ {
        self.frame.set(u).iter()
    }

    pub fn contains(&self, u: Elem, point: usize) -> bool {
        self.frame.set(u).contains(point)
    }
}

/// A continuous map of finite posets, acting on opens by inverse image.
#[derive(Clone, Debug)]
pub struct LocaleMap {
    source: Arc<FinLocale>,
    target: Arc<FinLocale>,
    points: Vec<usize>,
}

impl LocaleMap {
    pub fn new(source: Arc<FinLocale>, target: Arc<FinLocale>, points: Vec<usize>) -> Result<Self> {
        if !source.poset().is_monotone(target.poset(), &points) {
            return Err(Error::PreconditionFailed("point map is not monotone".into()));
        }
        Ok(LocaleMap { source, target, points })
    }

    pub fn identity(l: Arc<FinLocale>) -> Self {
        let points = (0..l.point_count()).collect();
        LocaleMap { source: l.clone(), target: l, points }
    }

    pub fn source(&self) -> &Arc<FinLocale> {
        &self.source
    }

    pub fn target(&self) -> &Arc<FinLocale> {
        &self.target
    }

    pub fn point_map(&self) -> &[usize] {
        &self.points
    }

    /// `f*(v)`, the preimage of the open `v`.
    pub fn inverse_image(&self, v: Elem) -> Elem {
        let pre = (0..self.points.len()).filter(|&a| self.target.contains(v, self.points[a]));
        self.source.open_of(pre)
    }

    pub fn inverse_image_hom(&self) -> SupHom {
        SupHom::from_fn(self.target.frame().clone(), self.source.frame().clone(), |v| {
            self.inverse_image(v)
        })
        .expect("preimage preserves unions")
    }

    /// `f_!`, computed as the left adjoint of `f*`.
    pub fn direct_image(&self) -> SupHom {
        self.inverse_image_hom()
            .left_adjoint()
            .expect("preimage preserves intersections")
    }

    /// First failure of `f_!(f*(b) ∧ x) = b ∧ f_!(x)`, if any.
    pub fn frobenius_witness(&self) -> Option<(Elem, Elem)> {
        let direct = self.direct_image();
        let (s, t) = (self.source.frame(), self.target.frame());
        for b in t.elements() {
            let fb = self.inverse_image(b);
            for x in s.elements() {
                if direct.apply(s.meet(fb, x)) != t.meet(b, direct.apply(x)) {
                    return Some((b, x));
                }
            }
        }
        None
    }

    pub fn is_open(&self) -> bool {
        self.frobenius_witness().is_none()
    }

    pub fn is_surjective(&self) -> bool {
        let direct = self.direct_image();
        direct.apply(self.source.frame().top()) == self.target.frame().top()
    }
}

/// A module over a base locale `B`: a sup-lattice with an action `B × M → M`.
#[derive(Clone, Debug)]
pub struct BModule {
    base: Arc<FinLocale>,
    lattice: Arc<FinSupLattice>,
    action: Vec<Elem>,
}

impl BModule {
    pub fn new(base: Arc<FinLocale>, lattice: Arc<FinSupLattice>, action: Vec<Elem>) -> Result<Self> {
        let m = BModule { base, lattice, action };
        m.validate()?;
        Ok(m)
    }

    /// `B` acting on itself by meet.
    pub fn base_itself(base: Arc<FinLocale>) -> Self {
        let f = base.frame().clone();
        let action = f.elements().flat_map(|b| f.elements().map(move |x| (b, x)))
            .map(|(b, x)| f.meet(b, x))
            .collect();
        BModule { lattice: f, base, action }
    }

    fn validate(&self) -> Result<()> {
        let (bf, m) = (self.base.frame(), &self.lattice);
        if self.action.len() != bf.len() * m.len() {
            return Err(Error::InvalidModule("action table has the wrong size".into()));
        }
        for x in m.elements() {
            if self.act(bf.top(), x) != x {
                return Err(Error::InvalidModule(format!("1·{} ≠ {}", m.describe(x), m.describe(x))));
            }
            for b in bf.elements() {
                for c in bf.elements() {
                    if self.act(b, self.act(c, x)) != self.act(bf.meet(b, c), x) {
                        return Err(Error::InvalidModule(format!(
                            "b(cx) ≠ (b∧c)x at b={}, c={}, x={}",
                            bf.describe(b),
                            bf.describe(c),
                            m.describe(x)
                        )));
                    }
                }
            }
        }
        for b in bf.elements() {
            if let Some(w) = suplat::join_preservation_witness(m, m, |x| self.act(b, x)) {
                return Err(Error::InvalidModule(format!("x ↦ {}x: {w}", bf.describe(b))));
            }
        }
        for x in m.elements() {
            if let Some(w) = suplat::join_preservation_witness(bf, m, |b| self.act(b, x)) {
                return Err(Error::InvalidModule(format!("b ↦ b{}: {w}", m.describe(x))));
            }
        }
        Ok(())
    }

    pub fn base(&self) -> &Arc<FinLocale> {
        &self.base
    }

    pub fn lattice(&self) -> &Arc<FinSupLattice> {
        &self.lattice
    }

    pub fn act(&self, b: Elem, x: Elem) -> Elem {
        self.action[b * self.lattice.len() + x]
    }
}

/// A locale `X` over a base `B`, given by a unital associative action
/// satisfying the anchor condition `bx = b1 ∧ x`.
#[derive(Clone, Debug)]
pub struct BLocale {
    base: Arc<FinLocale>,
    carrier: Arc<FinLocale>,
    action: Vec<Elem>,
}

impl BLocale {
    pub fn new(base: Arc<FinLocale>, carrier: Arc<FinLocale>, action: Vec<Elem>) -> Result<Self> {
        let module = BModule::new(base.clone(), carrier.frame().clone(), action)?;
        let x = BLocale { base, carrier, action: module.action };
        let (bf, xf) = (x.base.frame(), x.carrier.frame());
        for b in bf.elements() {
            let b1 = x.act(b, xf.top());
            for e in xf.elements() {
                if x.act(b, e) != xf.meet(b1, e) {
                    return Err(Error::InvalidModule(format!(
                        "anchor condition fails at b={}, x={}",
                        bf.describe(b),
                        xf.describe(e)
                    )));
                }
            }
        }
        Ok(x)
    }

    /// The B-locale induced by a monotone anchor on points: `bx = p*(b) ∧ x`.
    pub fn from_anchor(base: Arc<FinLocale>, carrier: Arc<FinLocale>, anchor: Vec<usize>) -> Result<Self> {
        let p = LocaleMap::new(carrier.clone(), base.clone(), anchor)?;
        let (bf, xf) = (base.frame().clone(), carrier.frame().clone());
        let action = bf
            .elements()
            .flat_map(|b| xf.elements().map(move |x| (b, x)))
            .map(|(b, x)| xf.meet(p.inverse_image(b), x))
            .collect();
        Self::new(base, carrier, action)
    }

    /// `B` over itself.
    pub fn base_itself(base: Arc<FinLocale>) -> Self {
        let anchor = (0..base.point_count()).collect();
        Self::from_anchor(base.clone(), base, anchor).expect("identity anchor")
    }

    pub fn base(&self) -> &Arc<FinLocale> {
        &self.base
    }

    pub fn carrier(&self) -> &Arc<FinLocale> {
        &self.carrier
    }

    pub fn frame(&self) -> &Arc<FinSupLattice> {
        self.carrier.frame()
    }

    pub fn act(&self, b: Elem, x: Elem) -> Elem {
        self.action[b * self.carrier.frame().len() + x]
    }

    pub fn as_module(&self) -> BModule {
        BModule { base: self.base.clone(), lattice: self.carrier.frame().clone(), action: self.action.clone() }
    }

    /// `p* : B → X`, `b ↦ b1_X`.
    pub fn anchor_hom(&self) -> SupHom {
        let top = self.frame().top();
        SupHom::from_fn(self.base.frame().clone(), self.frame().clone(), |b| self.act(b, top))
            .expect("action is join-preserving in the base variable")
    }

    /// The point map underlying `p*`: each point `a` goes to the least `b`
    /// with `a ∈ p*(↓b)`.
    pub fn anchor_points(&self) -> Vec<usize> {
        let top = self.frame().top();
        let base = &self.base;
        (0..self.carrier.point_count())
            .map(|a| {
                let over: Vec<usize> = (0..base.point_count())
                    .filter(|&b| self.carrier.contains(self.act(base.open_of([b]), top), a))
                    .collect();
                *over
                    .iter()
                    .find(|&&b| over.iter().all(|&c| base.poset().leq(b, c)))
                    .expect("inverse image of a frame map comes from a point map")
            })
            .collect()
    }

    pub fn anchor_map(&self) -> LocaleMap {
        LocaleMap::new(self.carrier.clone(), self.base.clone(), self.anchor_points())
            .expect("anchor point map is monotone")
    }

    /// `spp_X`, the left adjoint of `p*`, provided Frobenius holds.
    pub fn support(&self) -> Result<SupHom> {
        let spp = self.anchor_hom().left_adjoint()?;
        let (bf, xf) = (self.base.frame(), self.frame());
        for b in bf.elements() {
            for x in xf.elements() {
                if spp.apply(self.act(b, x)) != bf.meet(b, spp.apply(x)) {
                    return Err(Error::NotOpen(format!(
                        "b = {}, x = {}: spp(bx) = {} but b ∧ spp(x) = {}",
                        bf.describe(b),
                        xf.describe(x),
                        bf.describe(spp.apply(self.act(b, x))),
                        bf.describe(bf.meet(b, spp.apply(x)))
                    )));
                }
            }
        }
        Ok(spp)
    }

    pub fn is_open(&self) -> bool {
        self.support().is_ok()
    }

    /// `s` such that `spp(x)s = x` for every `x ≤ s`.
    pub fn local_sections(&self) -> Result<LocalSections> {
        let spp = self.support()?;
        let xf = self.frame();
        let sections: Vec<Elem> = xf
            .elements()
            .filter(|&s| xf.down(s).all(|x| self.act(spp.apply(x), s) == x))
            .collect();
        let sheaf = xf.join_all(sections.iter().copied()) == xf.top();
        Ok(LocalSections { sections, sheaf, support: spp })
    }
}

#[derive(Clone, Debug)]
pub struct LocalSections {
    pub sections: Vec<Elem>,
    pub sheaf: bool,
    pub support: SupHom,
}

impl LocalSections {
    pub fn contains(&self, s: Elem) -> bool {
        self.sections.binary_search(&s).is_ok()
    }
}

/// Two sections are compatible when `spp(s)t = spp(t)s`.
pub fn compatible(x: &BLocale, spp: &SupHom, s: Elem, t: Elem) -> bool {
    x.act(spp.apply(s), t) == x.act(spp.apply(t), s)
}

/// The pullback `X ×_B Y` over a common base, computed twice: as the balanced
/// sup-lattice tensor and as downsets of the fibre product of posets.
#[derive(Clone, Debug)]
pub struct BaseTensor {
    pub x: Arc<BLocale>,
    pub y: Arc<BLocale>,
    pub pullback: Arc<BLocale>,
    pub pi1: LocaleMap,
    pub pi2: LocaleMap,
    pub generic: Tensor,
    /// Generic tensor element → pullback open.
    pub comparison: Vec<Elem>,
    pub routes_agree: bool,
    pairs: Vec<(usize, usize)>,
}

/// `X ⊗_B Y` with projections; both arguments must be open.
pub fn tensor_over_base(x: &Arc<BLocale>, y: &Arc<BLocale>) -> Result<BaseTensor> {
    if !Arc::ptr_eq(x.base(), y.base()) && x.base().poset() != y.base().poset() {
        return Err(Error::PreconditionFailed("different bases".into()));
    }
    x.support()?;
    y.support()?;
    let base = x.base().clone();
    let (px, py) = (x.anchor_points(), y.anchor_points());
    let (cx, cy) = (x.carrier(), y.carrier());
    let pairs: Vec<(usize, usize)> = (0..cx.point_count())
        .flat_map(|a| (0..cy.point_count()).map(move |c| (a, c)))
        .filter(|&(a, c)| px[a] == py[c])
        .collect();
    let rel: Vec<(usize, usize)> = (0..pairs.len())
        .flat_map(|i| (0..pairs.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| {
            i != j
                && cx.poset().leq(pairs[i].0, pairs[j].0)
                && cy.poset().leq(pairs[i].1, pairs[j].1)
        })
        .collect();
    let labels = pairs
        .iter()
        .map(|&(a, c)| format!("({},{})", cx.poset().labels()[a], cy.poset().labels()[c]))
        .collect();
    let product = Arc::new(FinLocale::new(Poset::new(labels, &rel)?));
    let anchor = pairs.iter().map(|&(a, _)| px[a]).collect();
    let pullback = Arc::new(BLocale::from_anchor(base.clone(), product.clone(), anchor)?);
    let pi1 = LocaleMap::new(product.clone(), cx.clone(), pairs.iter().map(|p| p.0).collect())?;
    let pi2 = LocaleMap::new(product.clone(), cy.clone(), pairs.iter().map(|p| p.1).collect())?;

    let (xf, yf, bf) = (x.frame(), y.frame(), base.frame());
    let mut relations = Vec::new();
    for &a in xf.join_irreducibles() {
        for &c in yf.join_irreducibles() {
            for b in bf.elements() {
                relations.push((vec![(x.act(b, a), c)], vec![(a, y.act(b, c))]));
            }
        }
    }
    let generic = suplat::tensor(xf, yf, &relations);
    let concrete_pure = |u: Elem, v: Elem| {
        product.open_of(
            (0..pairs.len()).filter(|&i| cx.contains(u, pairs[i].0) && cy.contains(v, pairs[i].1)),
        )
    };
    let pf = product.frame();
    let comparison: Vec<Elem> = generic
        .lattice()
        .elements()
        .map(|t| {
            let mut acc = pf.bottom();
            for u in xf.elements() {
                for v in yf.elements() {
                    if generic.contains_pair(t, u, v) {
                        acc = pf.join(acc, concrete_pure(u, v));
                    }
                }
            }
            acc
        })
        .collect();
    let routes_agree = suplat::is_order_isomorphism(generic.lattice(), pf, &comparison)
        && xf.elements().all(|u| {
            yf.elements().all(|v| comparison[generic.pure(u, v)] == concrete_pure(u, v))
        });
    Ok(BaseTensor {
        x: x.clone(),
        y: y.clone(),
        pullback,
        pi1,
        pi2,
        generic,
        comparison,
        routes_agree,
        pairs,
    })
}

impl BaseTensor {
    /// `u ⊗ v` as an open of the pullback.
    pub fn pure(&self, u: Elem, v: Elem) -> Elem {
        self.comparison[self.generic.pure(u, v)]
    }

    pub fn point_pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Checks `(π1)_!(u⊗v) = spp_Y(v)u` and `(π2)_!(u⊗v) = spp_X(u)v` on all pairs.
    pub fn direct_image_witness(&self) -> Option<String> {
        let sx = self.x.support().ok()?;
        let sy = self.y.support().ok()?;
        let (d1, d2) = (self.pi1.direct_image(), self.pi2.direct_image());
        let (xf, yf) = (self.x.frame(), self.y.frame());
        for u in xf.elements() {
            for v in yf.elements() {
                let t = self.pure(u, v);
                if d1.apply(t) != self.x.act(sy.apply(v), u) {
                    return Some(format!("(π1)_!({}⊗{})", xf.describe(u), yf.describe(v)));
                }
                if d2.apply(t) != self.y.act(sx.apply(u), v) {
                    return Some(format!("(π2)_!({}⊗{})", xf.describe(u), yf.describe(v)));
                }
            }
        }
        None
    }

    /// Checks `spp(u⊗v) = spp_X(u) ∧ spp_Y(v)`.
    pub fn support_formula_witness(&self) -> Option<String> {
        let sx = self.x.support().ok()?;
        let sy = self.y.support().ok()?;
        let st = match self.pullback.support() {
            Ok(s) => s,
            Err(e) => return Some(e.to_string()),
        };
        let bf = self.x.base().frame();
        for u in self.x.frame().elements() {
            for v in self.y.frame().elements() {
                if st.apply(self.pure(u, v)) != bf.meet(sx.apply(u), sy.apply(v)) {
                    return Some(format!(
                        "spp({}⊗{})",
                        self.x.frame().describe(u),
                        self.y.frame().describe(v)
                    ));
                }
            }
        }
        None
    }
}

impl BaseTensor {
    /// For sheaves `X` and `Y`: the pure tensors `s⊗t` of sections are sections
    /// of the pullback, they join-generate it, the pullback's sections are
    /// exactly their closure under compatible joins, and for normalized pairs
    /// (`spp(s) = spp(t)`) compatible joins of pure tensors are pure.
    pub fn section_basis_witness(&self) -> Result<Option<String>> {
        let (sx, sy) = (self.x.local_sections()?, self.y.local_sections()?);
        let st = self.pullback.local_sections()?;
        let pf = self.pullback.frame();
        let mut pure: Vec<Elem> = Vec::new();
        for &s in &sx.sections {
            for &t in &sy.sections {
                let p = self.pure(s, t);
                if !st.contains(p) {
                    return Ok(Some(format!("{} is not a section", pf.describe(p))));
                }
                pure.push(p);
            }
        }
        pure.sort_unstable();
        pure.dedup();
        if let Some(z) = pf.elements().find(|&z| pf.join_all(pure.iter().copied().filter(|&p| pf.leq(p, z))) != z) {
            return Ok(Some(format!("{} is not a join of pure sections", pf.describe(z))));
        }
        let mut closure = pure.clone();
        let mut i = 0;
        while i < closure.len() {
            for j in 0..=i {
                let (a, b) = (closure[i], closure[j]);
                if compatible(&self.pullback, &st.support, a, b) {
                    let c = pf.join(a, b);
                    if !closure.contains(&c) {
                        closure.push(c);
                    }
                }
            }
            i += 1;
        }
        closure.sort_unstable();
        if closure != st.sections {
            return Ok(Some("sections differ from compatible joins of pure sections".into()));
        }
        let (xf, yf, bf) = (self.x.frame(), self.y.frame(), self.x.base().frame());
        let normalized: Vec<(Elem, Elem)> = sx
            .sections
            .iter()
            .flat_map(|&s| sy.sections.iter().map(move |&t| (s, t)))
            .filter(|&(s, t)| sx.support.apply(s) == sy.support.apply(t))
            .collect();
        for &(s, t) in &normalized {
            for &(s2, t2) in &normalized {
                let (a, b) = (self.pure(s, t), self.pure(s2, t2));
                if compatible(&self.pullback, &st.support, a, b)
                    && pf.join(a, b) != self.pure(xf.join(s, s2), yf.join(t, t2))
                {
                    return Ok(Some(format!(
                        "{}⊗{} ∨ {}⊗{} over {}",
                        xf.describe(s),
                        yf.describe(t),
                        xf.describe(s2),
                        yf.describe(t2),
                        bf.describe(sx.support.apply(s))
                    )));
                }
            }
        }
        Ok(None)
    }
}

/// Result of checking that pulling back an open surjection yields one.
#[derive(Clone, Debug)]
pub struct PullbackWitness {
    /// `(π1)_!(x ⊗ 1_Y) = x` for every `x`.
    pub section_identity: bool,
    pub pi1_injective_inverse_image: bool,
    pub pi1_open: bool,
    pub pi1_surjective: bool,
}

impl PullbackWitness {
    pub fn holds(&self) -> bool {
        self.section_identity && self.pi1_injective_inverse_image && self.pi1_open && self.pi1_surjective
    }
}

/// Given an open surjection `p : Y → B` and an open `q : X → B`, checks that the
/// projection `π1 : X ×_B Y → X` is an open surjection.
pub fn surjection_pullback_check(p: &Arc<BLocale>, q: &Arc<BLocale>) -> Result<PullbackWitness> {
    let spp_y = p
        .support()
        .map_err(|e| Error::PreconditionFailed(format!("p is not open: {e}")))?;
    if spp_y.apply(p.frame().top()) != p.base().frame().top() {
        return Err(Error::PreconditionFailed(format!(
            "p is not surjective: spp(1_Y) = {}",
            p.base().frame().describe(spp_y.apply(p.frame().top()))
        )));
    }
    q.support()
        .map_err(|e| Error::PreconditionFailed(format!("q is not open: {e}")))?;
    let t = tensor_over_base(q, p)?;
    let d1 = t.pi1.direct_image();
    let xf = q.frame();
    let top_y = p.frame().top();
    let section_identity = xf.elements().all(|x| d1.apply(t.pure(x, top_y)) == x);
    let inv = t.pi1.inverse_image_hom();
    let mut images: Vec<Elem> = inv.table().to_vec();
    images.sort_unstable();
    images.dedup();
    Ok(PullbackWitness {
        section_identity,
        pi1_injective_inverse_image: images.len() == xf.len(),
        pi1_open: t.pi1.is_open(),
        pi1_surjective: t.pi1.is_surjective(),
    })
}

/// A map of B-locales whose inverse image is a B-module homomorphism.
#[derive(Clone, Debug)]
pub struct SheafHom {
    source: Arc<BLocale>,
    target: Arc<BLocale>,
    map: LocaleMap,
}

impl SheafHom {
    pub fn new(source: Arc<BLocale>, target: Arc<BLocale>, points: Vec<usize>) -> Result<Self> {
        let map = LocaleMap::new(source.carrier().clone(), target.carrier().clone(), points)
            .map_err(|e| Error::NotSheafHom(e.to_string()))?;
        let bf = source.base().frame();
        for b in bf.elements() {
            for x in target.frame().elements() {
                let lhs = map.inverse_image(target.act(b, x));
                let rhs = source.act(b, map.inverse_image(x));
                if lhs != rhs {
                    return Err(Error::NotSheafHom(format!(
                        "f*(bx) ≠ b f*(x) at b = {}, x = {}",
                        bf.describe(b),
                        target.frame().describe(x)
                    )));
                }
            }
        }
        Ok(SheafHom { source, target, map })
    }

    pub fn identity(x: Arc<BLocale>) -> Self {
        let points = (0..x.carrier().point_count()).collect();
        Self::new(x.clone(), x, points).expect("identity is a sheaf homomorphism")
    }

    pub fn source(&self) -> &Arc<BLocale> {
        &self.source
    }

    pub fn target(&self) -> &Arc<BLocale> {
        &self.target
    }

    pub fn map(&self) -> &LocaleMap {
        &self.map
    }
}

#[derive(Clone, Debug)]
pub struct PairingReport {
    pub tensor: BaseTensor,
    /// Direct image of `⟨f,g⟩ : Z → X ⊗_B Y`.
    pub direct_image: SupHom,
    /// Sections `s` of `Z` where `⟨f,g⟩_!(s) ≠ f_!(s) ⊗ g_!(s)`.
    pub failures: Vec<Elem>,
}

/// The direct image of the pairing `⟨f, g⟩`, compared with `f_!(s) ⊗ g_!(s)` on
/// every local section of the common source.
pub fn pairing_direct_image(f: &SheafHom, g: &SheafHom) -> Result<PairingReport> {
    if !Arc::ptr_eq(f.source(), g.source()) {
        return Err(Error::PreconditionFailed("f and g have different sources".into()));
    }
    let z = f.source();
    let tensor = tensor_over_base(f.target(), g.target())?;
    let pairs = tensor.point_pairs();
    let points: Vec<usize> = (0..z.carrier().point_count())
        .map(|c| {
            let want = (f.map().point_map()[c], g.map().point_map()[c]);
            pairs.iter().position(|&p| p == want).ok_or_else(|| {
                Error::NotSheafHom(format!("f and g disagree over the base at point {c}"))
            })
        })
        .collect::<Result<_>>()?;
    let pairing = LocaleMap::new(z.carrier().clone(), tensor.pullback.carrier().clone(), points)?;
    let direct_image = pairing.direct_image();
    let (fd, gd) = (f.map().direct_image(), g.map().direct_image());
    let failures = z
        .local_sections()?
        .sections
        .into_iter()
        .filter(|&s| direct_image.apply(s) != tensor.pure(fd.apply(s), gd.apply(s)))
        .collect();
    Ok(PairingReport { tensor, direct_image, failures })
}

/// Extends `h`, defined on the local sections of the sheaf `x`, to the unique
/// B-module homomorphism `h♯(y) = ⋁{h(s) : s ≤ y}`.
pub fn extend_from_sections(x: &BLocale, m: &BModule, h: impl Fn(Elem) -> Elem) -> Result<SupHom> {
    let sections = x.local_sections()?;
    if !sections.sheaf {
        return Err(Error::PreconditionFailed("not a sheaf".into()));
    }
    let (xf, bf, mf) = (x.frame(), x.base().frame(), m.lattice());
    let spp = &sections.support;
    for &s in &sections.sections {
        for b in bf.elements() {
            if h(x.act(b, s)) != m.act(b, h(s)) {
                return Err(Error::NotEquivariant(format!(
                    "h({}·{}) ≠ {}·h(s)",
                    bf.describe(b),
                    xf.describe(s),
                    bf.describe(b)
                )));
            }
        }
    }
    if h(xf.bottom()) != mf.bottom() {
        return Err(Error::NotCompatiblePreserving("h(0) ≠ 0".into()));
    }
    // Binary compatible joins suffice: any two sections below a common section
    // are compatible, so a compatible family can be joined one member at a time.
    for (i, &s) in sections.sections.iter().enumerate() {
        for &t in &sections.sections[i + 1..] {
            if compatible(x, spp, s, t) && h(xf.join(s, t)) != mf.join(h(s), h(t)) {
                return Err(Error::NotCompatiblePreserving(format!(
                    "h({} ∨ {}) ≠ h(s) ∨ h(t)",
                    xf.describe(s),
                    xf.describe(t)
                )));
            }
        }
    }
    let table: Vec<Elem> = xf
        .elements()
        .map(|y| {
            mf.join_all(sections.sections.iter().filter(|&&s| xf.leq(s, y)).map(|&s| h(s)))
        })
        .collect();
    let ext = SupHom::new(xf.clone(), mf.clone(), table)?;
    for b in bf.elements() {
        for y in xf.elements() {
            if ext.apply(x.act(b, y)) != m.act(b, ext.apply(y)) {
                return Err(Error::NotEquivariant(format!(
                    "extension fails at b = {}, x = {}",
                    bf.describe(b),
                    xf.describe(y)
                )));
            }
        }
    }
    // Sections are join-dense, so any extension is determined by h.
    for y in xf.elements() {
        let below = xf.join_all(sections.sections.iter().copied().filter(|&s| xf.leq(s, y)));
        if below != y {
            return Err(Error::PreconditionFailed(format!(
                "{} is not a join of sections",
                xf.describe(y)
            )));
        }
    }
    Ok(ext)
}
