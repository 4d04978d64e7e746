//! Left modules over a quantale, and `Q`-sheaves as complete Hilbert modules.
//!
//! Elements of modules built from actions are bitmasks of points, matching the
//! bitmask encoding of `O(G)`.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::groupoid::GAction;
use crate::quantale::{AxiomCheck, Quantale};
use crate::suplat::{join_preservation_witness, Elem, FinSupLattice};

/// Largest `|Q|·|X|` for which an action table is built.
pub const MAX_ACTION_TABLE: usize = 1 << 24;

#[derive(Clone, Debug)]
pub struct QModule {
    q: Arc<Quantale>,
    lattice: Arc<FinSupLattice>,
    /// `act[a * |X| + x] = a·x`.
    act: Vec<Elem>,
}

impl QModule {
    pub fn new(q: Arc<Quantale>, lattice: Arc<FinSupLattice>, act: Vec<Elem>) -> Result<Self> {
        if act.len() != q.len() * lattice.len() || act.iter().any(|&y| y >= lattice.len()) {
            return Err(Error::InvalidModule("action table does not match Q × X".into()));
        }
        let m = QModule { q, lattice, act };
        match m.law_witness() {
            None => Ok(m),
            Some(w) => Err(Error::InvalidModule(w)),
        }
    }

    fn law_witness(&self) -> Option<String> {
        let (q, x) = (&*self.q, &*self.lattice);
        for a in q.elements() {
            if let Some(w) = join_preservation_witness(x, x, |y| self.act(a, y)) {
                return Some(format!("action of {} is not join-preserving: {w}", q.describe(a)));
            }
        }
        for y in x.elements() {
            if let Some(w) = join_preservation_witness(q.lattice(), x, |a| self.act(a, y)) {
                return Some(format!("action on {} is not join-preserving: {w}", x.describe(y)));
            }
        }
        if let Some(y) = x.elements().find(|&y| self.act(q.unit(), y) != y) {
            return Some(format!("e·x ≠ x at x = {}", x.describe(y)));
        }
        let qj = q.lattice().join_irreducibles();
        for &a in qj {
            for &b in qj {
                for &y in x.join_irreducibles() {
                    if self.act(q.mul(a, b), y) != self.act(a, self.act(b, y)) {
                        return Some(format!(
                            "(ab)x ≠ a(bx) at a = {}, b = {}, x = {}",
                            q.describe(a),
                            q.describe(b),
                            x.describe(y)
                        ));
                    }
                }
            }
        }
        None
    }

    /// `Q` acting on itself by multiplication.
    pub fn regular(q: Arc<Quantale>) -> Self {
        let n = q.len();
        let act = (0..n * n).map(|k| q.mul(k / n, k % n)).collect();
        QModule { lattice: q.lattice().clone(), q, act }
    }

    /// `P(X)` with `A·U = {g·x : g∈A, x∈U}`; `q` must be `O(G)` for the acting groupoid.
    pub fn of_action(q: Arc<Quantale>, a: &GAction) -> Result<Self> {
        match q.groupoid() {
            Some(g) if **g == **a.groupoid() => {}
            _ => return Err(Error::QuantaleMismatch("module quantale is not O(G) of the acting groupoid".into())),
        }
        let n = a.len();
        let size = 1usize << n;
        if q.len().saturating_mul(size) > MAX_ACTION_TABLE {
            return Err(Error::TooLarge(format!("action table of {} × {size}", q.len())));
        }
        let arrows = a.groupoid().arrow_count();
        let mut atom = vec![0usize; arrows * size];
        for f in 0..arrows {
            for x in 1..size {
                let low = x.trailing_zeros() as usize;
                atom[f * size + x] = atom[f * size + (x & (x - 1))] | a.act(f, low).map_or(0, |y| 1 << y);
            }
        }
        let mut act = vec![0usize; q.len() * size];
        for u in 1..q.len() {
            let low = u.trailing_zeros() as usize;
            let rest = u & (u - 1);
            for x in 0..size {
                act[u * size + x] = act[rest * size + x] | atom[low * size + x];
            }
        }
        let lattice = Arc::new(FinSupLattice::powerset(a.points().to_vec()));
        Self::new(q, lattice, act)
    }

    pub fn quantale(&self) -> &Arc<Quantale> {
        &self.q
    }

    pub fn lattice(&self) -> &Arc<FinSupLattice> {
        &self.lattice
    }

    pub fn act(&self, a: Elem, x: Elem) -> Elem {
        self.act[a * self.lattice.len() + x]
    }

    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }

    pub fn top(&self) -> Elem {
        self.lattice.top()
    }
}

/// A `Q`-sheaf: an open `Q`-locale whose Hilbert sections are join-dense.
#[derive(Clone, Debug)]
pub struct QSheaf {
    module: QModule,
    action: Option<Arc<GAction>>,
    spp: Vec<Elem>,
    jis: Vec<Elem>,
    /// Bitmask of the indices of join-irreducibles below each element.
    below: Vec<u64>,
    /// Inner products of join-irreducible pairs.
    basis: Vec<Elem>,
    sections: Vec<Elem>,
}

fn bits(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        (m != 0).then(|| {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            i
        })
    })
}

fn bits128(mut m: u128) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        (m != 0).then(|| {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            i
        })
    })
}

impl QSheaf {
    pub fn new(module: QModule) -> Result<Self> {
        Self::build(module, None)
    }

    /// The sheaf `P(X)` of a discrete action, over a freshly built `O(G)`.
    pub fn of_action(a: GAction) -> Result<Self> {
        let q = Arc::new(Quantale::of_groupoid(a.groupoid().clone())?);
        Self::of_action_over(q, a)
    }

    pub fn of_action_over(q: Arc<Quantale>, a: GAction) -> Result<Self> {
        if let Some(v) = a.validate().first() {
            return Err(Error::InvalidAction(v.to_string()));
        }
        let module = QModule::of_action(q, &a)?;
        Self::build(module, Some(Arc::new(a)))
    }

    /// `Q` as a module over itself.
    pub fn regular(q: Arc<Quantale>) -> Result<Self> {
        match q.groupoid().cloned() {
            Some(g) => Self::of_action_over(q, GAction::regular(g)),
            None => Self::new(QModule::regular(q)),
        }
    }

    fn build(module: QModule, action: Option<Arc<GAction>>) -> Result<Self> {
        let q = module.q.clone();
        let x = module.lattice.clone();
        if !q.is_iqf() {
            return Err(Error::InvalidQuantale("module operations need an inverse quantal frame".into()));
        }
        let base = q.base();
        for &b in &base {
            let b1 = module.act(b, x.top());
            if let Some(y) = x.elements().find(|&y| module.act(b, y) != x.meet(b1, y)) {
                return Err(Error::InvalidModule(format!(
                    "anchor condition bx = b1 ∧ x fails at b = {}, x = {}",
                    q.describe(b),
                    x.describe(y)
                )));
            }
        }
        let mut spp = Vec::with_capacity(x.len());
        for y in x.elements() {
            let least = q.lattice().meet_all(base.iter().copied().filter(|&b| module.act(b, y) == y));
            if module.act(least, y) != y {
                return Err(Error::NotOpen(format!("{} has no least support", x.describe(y))));
            }
            spp.push(least);
        }
        let jis = x.join_irreducibles().to_vec();
        if jis.len() > 64 {
            return Err(Error::TooLarge(format!("{} join-irreducibles", jis.len())));
        }
        let below = x
            .elements()
            .map(|y| jis.iter().enumerate().filter(|&(_, &j)| x.leq(j, y)).fold(0u64, |m, (i, _)| m | 1 << i))
            .collect();
        let mut sheaf = QSheaf { module, action, spp, jis, below, basis: Vec::new(), sections: Vec::new() };
        let k = sheaf.jis.len();
        sheaf.basis = (0..k * k).map(|p| sheaf.inner_fast(sheaf.jis[p / k], sheaf.jis[p % k])).collect();
        sheaf.sections = x
            .elements()
            .filter(|&s| sheaf.jis.iter().all(|&j| x.leq(sheaf.act(sheaf.inner(j, s), s), j)))
            .collect();
        if let Some(y) = x.elements().find(|&y| sheaf.join_of_sections_below(&sheaf.sections, y) != y) {
            return Err(Error::InvalidModule(format!(
                "Hilbert sections are not join-dense: {} is not a join of sections",
                x.describe(y)
            )));
        }
        Ok(sheaf)
    }

    fn join_of_sections_below(&self, sections: &[Elem], y: Elem) -> Elem {
        let x = self.lattice();
        x.join_all(sections.iter().copied().filter(|&s| x.leq(s, y)))
    }

    pub fn module(&self) -> &QModule {
        &self.module
    }

    pub fn quantale(&self) -> &Arc<Quantale> {
        &self.module.q
    }

    pub fn lattice(&self) -> &Arc<FinSupLattice> {
        &self.module.lattice
    }

    /// The discrete action this sheaf was built from, if any.
    pub fn action(&self) -> Option<&Arc<GAction>> {
        self.action.as_ref()
    }

    pub fn act(&self, a: Elem, x: Elem) -> Elem {
        self.module.act(a, x)
    }

    pub fn top(&self) -> Elem {
        self.module.top()
    }

    pub fn elements(&self) -> std::ops::Range<Elem> {
        self.lattice().elements()
    }

    pub fn describe(&self, x: Elem) -> String {
        self.lattice().describe(x)
    }

    /// `spp_X(x)`, the least `b ∈ Q_0` with `bx = x`.
    pub fn spp(&self, x: Elem) -> Elem {
        self.spp[x]
    }

    /// `⟨x,y⟩`, extended from join-irreducible pairs by bilinearity.
    pub fn inner(&self, x: Elem, y: Elem) -> Elem {
        let q = self.quantale();
        let k = self.jis.len();
        let mut acc = q.bottom();
        for i in bits(self.below[x]) {
            for j in bits(self.below[y]) {
                acc = q.join(acc, self.basis[i * k + j]);
            }
        }
        acc
    }

    /// `⟨x,y⟩ = ⋁_{u∈Q_I} u·spp_X(u*x ∧ y)`.
    pub fn inner_fast(&self, x: Elem, y: Elem) -> Elem {
        let q = self.quantale();
        let lat = self.lattice();
        q.partial_units().iter().fold(q.bottom(), |acc, &u| {
            let z = lat.meet(self.act(q.star(u), x), y);
            q.join(acc, q.mul(u, self.spp[z]))
        })
    }

    /// The definitional inner product on local sections, extended by joins.
    pub fn inner_oracle(&self) -> InnerOracle<'_> {
        InnerOracle::new(self)
    }

    /// The Hilbert sections `{s : ⟨x,s⟩s ≤ x for all x}`.
    pub fn sections(&self) -> &[Elem] {
        &self.sections
    }

    pub fn is_section(&self, s: Elem) -> bool {
        self.sections.binary_search(&s).is_ok()
    }

    /// The local sections `{s : spp(x)s = x for all x ≤ s}` of the underlying `Q_0`-locale.
    pub fn local_sections(&self) -> Vec<Elem> {
        let lat = self.lattice();
        lat.elements()
            .filter(|&s| lat.down(s).all(|z| self.act(self.spp[z], s) == z))
            .collect()
    }

    /// The four characterizations of principal sections, evaluated independently.
    pub fn principal_sections(&self) -> PrincipalReport {
        let q = self.quantale();
        let e = q.unit();
        let mut conditions = Vec::with_capacity(self.sections.len());
        let mut principal = Vec::new();
        for &s in &self.sections {
            let ss = self.inner(s, s);
            let sp = self.spp[s];
            let fixing = || q.elements().filter(move |&a| self.act(a, s) == s);
            let c = PrincipalConditions {
                section: self.describe(s),
                inner_in_base: q.leq(ss, e),
                support_equals_inner: sp == ss,
                stabilizers_fix_support: fixing().all(|a| q.mul(a, sp) == sp),
                supported_stabilizers_in_base: fixing().filter(|&a| q.spp(q.star(a)) == sp).all(|a| q.leq(a, e)),
            };
            if c.inner_in_base {
                principal.push(s);
            }
            conditions.push(c);
        }
        let all_agree = conditions.iter().all(PrincipalConditions::agree);
        let covered = self.lattice().join_all(principal.iter().copied()) == self.top();
        PrincipalReport { principal, conditions, all_agree, principally_covered: covered }
    }

    /// `I(X) = {x : 1x ≤ x}`.
    pub fn invariants(&self) -> Vec<Elem> {
        let top = self.quantale().top();
        self.elements().filter(|&x| self.lattice().leq(self.act(top, x), x)).collect()
    }

    /// `I(X)` as a lattice in its own right.
    pub fn invariant_lattice(&self) -> Arc<FinSupLattice> {
        let lat = self.lattice();
        let sets = self.invariants().into_iter().map(|x| lat.set(x).clone()).collect();
        Arc::new(FinSupLattice::from_closed_sets(lat.labels().to_vec(), sets).expect("invariants are meet-closed"))
    }

    /// Whether `I(X)` consists exactly of the unions of orbits of the underlying action.
    pub fn invariants_match_orbits(&self) -> Option<bool> {
        let a = self.action.as_ref()?;
        let orbits = a.orbits();
        let mut unions: Vec<Elem> = (0..1usize << orbits.len())
            .map(|m| bits(m as u64).fold(0usize, |acc, i| acc | orbits[i].bits() as usize))
            .collect();
        unions.sort_unstable();
        Some(unions == self.invariants())
    }

    /// `tspp(x) = 1_Q x`.
    pub fn tspp(&self, x: Elem) -> Elem {
        self.act(self.quantale().top(), x)
    }

    /// `[x,y] = 1_Q(x ∧ y)`.
    pub fn bracket(&self, x: Elem, y: Elem) -> Elem {
        self.tspp(self.lattice().meet(x, y))
    }

    /// The right `I(X)`-locale structure given by meets.
    pub fn right_structure(&self) -> Result<RightStructure> {
        let lat = self.lattice();
        for x in lat.elements() {
            for y in lat.elements() {
                let lhs = lat.meet(self.tspp(x), self.tspp(y));
                if !lat.leq(lhs, self.tspp(lat.meet(x, self.tspp(y)))) {
                    return Err(Error::NotOpenRight(format!(
                        "1x ∧ 1x' ≰ 1(x ∧ 1x') at x = {}, x' = {}",
                        lat.describe(x),
                        lat.describe(y)
                    )));
                }
            }
        }
        let right_sections: Vec<Elem> = lat
            .elements()
            .filter(|&s| lat.down(s).all(|z| lat.meet(self.tspp(z), s) == z))
            .collect();
        let bisections: Vec<Elem> =
            right_sections.iter().copied().filter(|&s| self.is_section(s)).collect();
        let is_bisheaf = lat.elements().all(|y| self.join_of_sections_below(&right_sections, y) == y);
        Ok(RightStructure { invariants: self.invariants(), right_sections, bisections, is_bisheaf })
    }

    /// Parseval, the basis law, non-degeneracy, the support formulas and the
    /// inner product axioms, each over every element pair.
    pub fn hilbert_laws(&self) -> Vec<AxiomCheck> {
        let q = self.quantale();
        let lat = self.lattice();
        let e = q.unit();
        let all = || lat.elements().flat_map(|x| lat.elements().map(move |y| (x, y)));
        let mut out = Vec::new();
        let mut push = |name: &str, witness: Option<String>| {
            out.push(AxiomCheck { name: name.into(), passed: witness.is_none(), witness })
        };
        push(
            "inner product extends the fast formula",
            all().find(|&(x, y)| self.inner(x, y) != self.inner_fast(x, y)).map(|p| self.pair(p)),
        );
        push(
            "basis law x = ⋁⟨x,s⟩s",
            lat.elements()
                .find(|&x| lat.join_all(self.sections.iter().map(|&s| self.act(self.inner(x, s), s))) != x)
                .map(|x| lat.describe(x)),
        );
        push(
            "Parseval",
            all()
                .find(|&(x, y)| {
                    let rhs = q.join_all(self.sections.iter().map(|&s| q.mul(self.inner(x, s), self.inner(s, y))));
                    rhs != self.inner(x, y)
                })
                .map(|p| self.pair(p)),
        );
        let mut rows: HashMap<Vec<Elem>, Elem> = HashMap::new();
        let mut degenerate = None;
        for x in lat.elements() {
            let row: Vec<Elem> = self.jis.iter().map(|&j| self.inner(x, j)).collect();
            if let Some(&y) = rows.get(&row) {
                degenerate = Some(self.pair((y, x)));
                break;
            }
            rows.insert(row, x);
        }
        push("non-degeneracy", degenerate);
        push(
            "spp(x) = ⟨x,x⟩ ∧ e = ⟨x,1⟩ ∧ e",
            lat.elements()
                .find(|&x| {
                    self.spp[x] != q.meet(self.inner(x, x), e) || self.spp[x] != q.meet(self.inner(x, lat.top()), e)
                })
                .map(|x| lat.describe(x)),
        );
        push(
            "spp(⟨x,y⟩) ≤ spp(x)",
            all().find(|&(x, y)| !q.leq(q.spp(self.inner(x, y)), self.spp[x])).map(|p| self.pair(p)),
        );
        push(
            "⟨x,y⟩ = ⟨y,x⟩*",
            all().find(|&(x, y)| self.inner(x, y) != q.star(self.inner(y, x))).map(|p| self.pair(p)),
        );
        push(
            "⟨ax,y⟩ = a⟨x,y⟩",
            q.lattice()
                .join_irreducibles()
                .iter()
                .flat_map(|&a| all().map(move |p| (a, p)))
                .find(|&(a, (x, y))| self.inner(self.act(a, x), y) != q.mul(a, self.inner(x, y)))
                .map(|(a, p)| format!("a = {}, {}", q.describe(a), self.pair(p))),
        );
        push(
            "Hilbert sections = local sections",
            (self.local_sections() != self.sections).then(|| "the two section sets differ".to_string()),
        );
        out
    }

    fn pair(&self, (x, y): (Elem, Elem)) -> String {
        format!("x = {}, y = {}", self.describe(x), self.describe(y))
    }

    /// `s(x∧y) = sx∧sy` and `s(x∧s*y) = sx∧y` for partial units `s`.
    pub fn partial_unit_law_witness(&self) -> Option<String> {
        let q = self.quantale();
        let lat = self.lattice();
        for &s in q.partial_units() {
            for x in lat.elements() {
                for y in lat.elements() {
                    if self.act(s, lat.meet(x, y)) != lat.meet(self.act(s, x), self.act(s, y)) {
                        return Some(format!("s(x∧y) at s = {}, {}", q.describe(s), self.pair((x, y))));
                    }
                    if self.act(s, lat.meet(x, self.act(q.star(s), y))) != lat.meet(self.act(s, x), y) {
                        return Some(format!("s(x∧s*y) at s = {}, {}", q.describe(s), self.pair((x, y))));
                    }
                }
            }
        }
        None
    }

    /// The items of the lemma on pairs of principal sections, and the principal
    /// basis criterion for the full section set.
    pub fn principal_pair_laws(&self) -> Vec<AxiomCheck> {
        let q = self.quantale();
        let report = self.principal_sections();
        let principal = &report.principal;
        let is_principal = |s: Elem| principal.binary_search(&s).is_ok();
        let mut out = Vec::new();
        let mut push = |name: &str, witness: Option<String>| {
            out.push(AxiomCheck { name: name.into(), passed: witness.is_none(), witness })
        };
        push(
            "principal pairs have partial-unit inner products",
            principal
                .iter()
                .flat_map(|&s| principal.iter().map(move |&t| (s, t)))
                .find(|&(s, t)| !q.is_partial_unit(self.inner(s, t)))
                .map(|p| self.pair(p)),
        );
        let mut item2 = None;
        'outer: for &t in principal {
            for &u in q.partial_units() {
                if q.spp(q.star(u)) != self.spp[t] {
                    continue;
                }
                let s = self.act(u, t);
                if !is_principal(s) || self.inner(s, t) != u || self.spp[s] != q.spp(u) {
                    item2 = Some(format!("t = {}, u = {}", self.describe(t), q.describe(u)));
                    break 'outer;
                }
            }
        }
        push("translating a principal section by a matched partial unit", item2);
        let mut item3 = None;
        'outer3: for &s in &self.sections {
            for &t in &self.sections {
                let u = self.inner(s, t);
                if !q.is_partial_unit(u) || self.spp[s] != q.spp(u) || self.spp[t] != q.spp(q.star(u)) {
                    continue;
                }
                if !is_principal(s) || !is_principal(t) || self.act(u, t) != s || self.act(q.star(u), s) != t {
                    item3 = Some(self.pair((s, t)));
                    break 'outer3;
                }
            }
        }
        push("matched partial-unit inner products force principality", item3);
        let all_principal = self.sections.iter().all(|&s| is_principal(s));
        let all_units = self
            .sections
            .iter()
            .all(|&s| self.sections.iter().all(|&t| q.is_partial_unit(self.inner(s, t))));
        push(
            "principal basis iff partial-unit inner products",
            (all_principal != all_units).then(|| format!("principal: {all_principal}, partial units: {all_units}")),
        );
        out
    }

    fn pullback(&self) -> Result<Pullback<'_>> {
        let a = self
            .action
            .as_deref()
            .ok_or_else(|| Error::PreconditionFailed("needs a sheaf built from a discrete action".into()))?;
        Pullback::new(a)
    }

    /// The right adjoint of the action map computed three ways: as
    /// `⋁{a⊗y : ay ≤ x}`, as `⋁_{s∈Q_I} s⊗s*x`, and as the preimage of the
    /// action on pairs of the fibre product.
    pub fn right_adjoint_witness(&self) -> Result<Option<String>> {
        let pb = self.pullback()?;
        let q = self.quantale();
        let lat = self.lattice();
        let arrows = q.lattice().join_irreducibles();
        let points = lat.join_irreducibles();
        for x in lat.elements() {
            let by_definition = arrows
                .iter()
                .flat_map(|&a| points.iter().map(move |&y| (a, y)))
                .filter(|&(a, y)| lat.leq(self.act(a, y), x))
                .fold(0u128, |acc, (a, y)| acc | pb.pure(a, y));
            let by_units = q
                .partial_units()
                .iter()
                .fold(0u128, |acc, &s| acc | pb.pure(s, self.act(q.star(s), x)));
            let by_preimage = pb.act_preimage(x);
            if by_definition != by_units || by_units != by_preimage {
                return Ok(Some(format!("α_* disagrees at x = {}", lat.describe(x))));
            }
        }
        Ok(None)
    }

    /// Freeness: the pairing `⟨act,π2⟩` against principal coverage.
    pub fn check_freeness(&self) -> Result<FreenessReport> {
        let pb = self.pullback()?;
        let q = self.quantale();
        let report = self.principal_sections();
        let mut identity = None;
        'outer: for &s in &self.sections {
            for &t in &self.sections {
                let act_star = q
                    .partial_units()
                    .iter()
                    .fold(0u128, |acc, &v| acc | pb.pure(v, self.act(q.star(v), s)));
                let lhs = act_star & pb.pure(q.top(), t);
                let concrete = pb.pairing_preimage(pb.orbit_pure(s, t));
                if lhs != pb.pure(self.inner(s, t), t) || lhs != concrete {
                    identity = Some(self.pair((s, t)));
                    break 'outer;
                }
            }
        }
        let surjective = (0..pb.pairs.len()).all(|k| pb.pairing_preimage(pb.pairing_image(1 << k)) == 1 << k);
        let covered_by_units = report.principal.iter().all(|&t| {
            q.partial_units()
                .iter()
                .filter(|&&u| q.spp(q.star(u)) == self.spp[t])
                .all(|&u| pb.pairing_preimage(pb.orbit_pure(self.act(u, t), t)) == pb.pure(u, t))
        });
        Ok(FreenessReport {
            principally_covered: report.principally_covered,
            set_free: pb.action.is_free(),
            pairing_surjective: surjective,
            proof_identity_witness: identity,
            principal_generators_in_image: covered_by_units,
        })
    }

    /// The splitting `φ♯(u⊗t) = ut⊗t` of `⟨act,π2⟩*` and the direct-image formula.
    pub fn check_transitivity_splitting(&self) -> Result<TransitivityReport> {
        let right = self.right_structure()?;
        if !right.is_bisheaf {
            return Err(Error::NotBisheaf("the orbit projection is not a local homeomorphism".into()));
        }
        let pb = self.pullback()?;
        let q = self.quantale();
        let sharp_atoms: Vec<u128> =
            pb.pairs.iter().map(|&(g, x)| pb.orbit_pure(self.act(1 << g, 1 << x), 1 << x)).collect();
        let sharp = |xi: u128| bits128(xi).fold(0u128, |acc, k| acc | sharp_atoms[k]);
        let mut witness = None;
        let mut formula_consistent = true;
        let mut direct_image = true;
        for &u in q.partial_units() {
            for &t in &right.bisections {
                let target = pb.orbit_pure(self.act(u, t), t);
                if sharp(pb.pure(u, t)) != target {
                    formula_consistent = false;
                    witness.get_or_insert_with(|| format!("φ♯ at u = {}, t = {}", q.describe(u), self.describe(t)));
                }
                if pb.pairing_image(pb.pure(u, t)) != target {
                    direct_image = false;
                    witness.get_or_insert_with(|| {
                        format!("direct image at u = {}, t = {}", q.describe(u), self.describe(t))
                    });
                }
            }
        }
        let splits = (0..pb.orbit_pairs.len()).all(|z| sharp(pb.pairing_preimage(1 << z)) == 1 << z);
        if !splits {
            witness.get_or_insert_with(|| "φ♯ ∘ ⟨act,π2⟩* ≠ id".to_string());
        }
        Ok(TransitivityReport { splits, formula_consistent, direct_image_formula: direct_image, witness })
    }
}

/// `G_1 ×_{G_0} X` and `X ×_{X/G} X` with the pairing `(g,x) ↦ (gx, x)`.
struct Pullback<'a> {
    action: &'a GAction,
    pairs: Vec<(usize, usize)>,
    orbit_pairs: Vec<(usize, usize)>,
    orbit_index: Vec<Option<usize>>,
}

impl<'a> Pullback<'a> {
    fn new(action: &'a GAction) -> Result<Self> {
        let g = action.groupoid();
        let n = action.len();
        let pairs: Vec<(usize, usize)> = (0..g.arrow_count())
            .flat_map(|f| (0..n).map(move |x| (f, x)))
            .filter(|&(f, x)| g.dom(f) == action.anchor(x))
            .collect();
        let orbit: Vec<u64> = (0..n).map(|x| action.orbit(x).bits()).collect();
        let orbit_pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).filter(|&(x, y)| orbit[x] >> y & 1 == 1).collect();
        let mut orbit_index = vec![None; n * n];
        for (k, &(x, y)) in orbit_pairs.iter().enumerate() {
            orbit_index[x * n + y] = Some(k);
        }
        if pairs.len() > 128 || orbit_pairs.len() > 128 {
            return Err(Error::TooLarge("fibre products beyond 128 pairs".into()));
        }
        Ok(Pullback { action, pairs, orbit_pairs, orbit_index })
    }

    /// `u ⊗ t` in `Q ⊗_{Q_0} X`.
    fn pure(&self, u: Elem, t: Elem) -> u128 {
        self.pairs
            .iter()
            .enumerate()
            .filter(|&(_, &(f, x))| u >> f & 1 == 1 && t >> x & 1 == 1)
            .fold(0, |acc, (k, _)| acc | 1 << k)
    }

    /// `s ⊗ t` in `X ⊗_{I(X)} X`.
    fn orbit_pure(&self, s: Elem, t: Elem) -> u128 {
        self.orbit_pairs
            .iter()
            .enumerate()
            .filter(|&(_, &(x, y))| s >> x & 1 == 1 && t >> y & 1 == 1)
            .fold(0, |acc, (k, _)| acc | 1 << k)
    }

    fn act_preimage(&self, x: Elem) -> u128 {
        self.pairs
            .iter()
            .enumerate()
            .filter(|&(_, &(f, y))| self.action.act(f, y).is_some_and(|z| x >> z & 1 == 1))
            .fold(0, |acc, (k, _)| acc | 1 << k)
    }

    fn pairing(&self, k: usize) -> usize {
        let (f, y) = self.pairs[k];
        let n = self.action.len();
        let z = self.action.act(f, y).expect("composable pair");
        self.orbit_index[z * n + y].expect("same orbit")
    }

    fn pairing_image(&self, xi: u128) -> u128 {
        bits128(xi).fold(0, |acc, k| acc | 1 << self.pairing(k))
    }

    fn pairing_preimage(&self, z: u128) -> u128 {
        (0..self.pairs.len()).filter(|&k| z >> self.pairing(k) & 1 == 1).fold(0, |acc, k| acc | 1 << k)
    }
}

/// The definitional inner product
/// `⟨s,t⟩ = ⋁{u∈Q_I : spp(u) ≤ spp(s), spp(u*) ≤ spp(t), ut ≤ s}` on local
/// sections, extended to all elements by joins over the sections below them.
pub struct InnerOracle<'a> {
    sheaf: &'a QSheaf,
    sections: Vec<Elem>,
    table: Vec<Elem>,
    below: Vec<Vec<usize>>,
}

impl<'a> InnerOracle<'a> {
    fn new(sheaf: &'a QSheaf) -> Self {
        let q = sheaf.quantale();
        let lat = sheaf.lattice();
        let sections = sheaf.local_sections();
        let k = sections.len();
        let mut table = vec![q.bottom(); k * k];
        for (i, &s) in sections.iter().enumerate() {
            for (j, &t) in sections.iter().enumerate() {
                table[i * k + j] = q.join_all(q.partial_units().iter().copied().filter(|&u| {
                    q.leq(q.spp(u), sheaf.spp(s))
                        && q.leq(q.spp(q.star(u)), sheaf.spp(t))
                        && lat.leq(sheaf.act(u, t), s)
                }));
            }
        }
        let below = lat
            .elements()
            .map(|x| (0..k).filter(|&i| lat.leq(sections[i], x)).collect())
            .collect();
        InnerOracle { sheaf, sections, table, below }
    }

    pub fn sections(&self) -> &[Elem] {
        &self.sections
    }

    pub fn inner(&self, x: Elem, y: Elem) -> Elem {
        let q = self.sheaf.quantale();
        let k = self.sections.len();
        let mut acc = q.bottom();
        for &i in &self.below[x] {
            for &j in &self.below[y] {
                acc = q.join(acc, self.table[i * k + j]);
            }
        }
        acc
    }

    /// The first pair where the oracle and the fast formula differ.
    pub fn disagreement(&self) -> Option<(Elem, Elem)> {
        let lat = self.sheaf.lattice();
        lat.elements()
            .flat_map(|x| lat.elements().map(move |y| (x, y)))
            .find(|&(x, y)| self.inner(x, y) != self.sheaf.inner_fast(x, y))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PrincipalConditions {
    pub section: String,
    pub inner_in_base: bool,
    pub support_equals_inner: bool,
    pub stabilizers_fix_support: bool,
    pub supported_stabilizers_in_base: bool,
}

impl PrincipalConditions {
    pub fn agree(&self) -> bool {
        let c = self.inner_in_base;
        self.support_equals_inner == c && self.stabilizers_fix_support == c && self.supported_stabilizers_in_base == c
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PrincipalReport {
    #[serde(skip)]
    pub principal: Vec<Elem>,
    pub conditions: Vec<PrincipalConditions>,
    pub all_agree: bool,
    pub principally_covered: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RightStructure {
    pub invariants: Vec<Elem>,
    pub right_sections: Vec<Elem>,
    pub bisections: Vec<Elem>,
    pub is_bisheaf: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FreenessReport {
    pub principally_covered: bool,
    pub set_free: bool,
    pub pairing_surjective: bool,
    /// A section pair where `[act*,π2*](s⊗t) = ⟨s,t⟩⊗t` fails.
    pub proof_identity_witness: Option<String>,
    /// Whether `u⊗t = [act*,π2*](ut⊗t)` for principal `t` and matched partial units `u`.
    pub principal_generators_in_image: bool,
}

impl FreenessReport {
    /// The implication proved in general, plus its converse in the discrete model.
    pub fn holds(&self) -> bool {
        let forward = !self.principally_covered || (self.pairing_surjective && self.principal_generators_in_image);
        forward && self.principally_covered == self.set_free && self.proof_identity_witness.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TransitivityReport {
    pub splits: bool,
    pub formula_consistent: bool,
    pub direct_image_formula: bool,
    pub witness: Option<String>,
}

impl TransitivityReport {
    pub fn holds(&self) -> bool {
        self.splits && self.formula_consistent && self.direct_image_formula
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::FinGroupoid;

    fn taut_p2() -> QSheaf {
        QSheaf::of_action(GAction::tautological(Arc::new(FinGroupoid::pair(2)))).unwrap()
    }

    #[test]
    fn tautological_pair_action() {
        let x = taut_p2();
        let g = x.action().unwrap().groupoid().clone();
        let a12 = 1usize << g.arrow_by_label("(1,2)").unwrap();
        assert_eq!(x.act(a12, 0b10), 0b01);
        assert_eq!(x.inner(0b01, 0b10), a12);
        assert_eq!(x.inner_fast(0b01, 0b10), a12);
        assert_eq!(x.inner_oracle().inner(0b01, 0b10), a12);
        assert_eq!(x.inner(0, 0b10), 0);
        let report = x.principal_sections();
        assert!(report.all_agree && report.principally_covered);
    }

    #[test]
    fn group_on_a_point_is_not_principal() {
        let z2 = Arc::new(FinGroupoid::cyclic(2));
        let x = QSheaf::of_action(GAction::tautological(z2)).unwrap();
        assert_eq!(x.inner(1, 1), 0b11);
        let report = x.principal_sections();
        assert!(report.all_agree);
        assert!(!report.principally_covered);
        let free = x.check_freeness().unwrap();
        assert!(!free.set_free && free.holds());
    }

    #[test]
    fn laws_hold_on_small_sheaves() {
        let x = taut_p2();
        assert!(x.hilbert_laws().iter().all(|c| c.passed), "{:?}", x.hilbert_laws());
        assert!(x.principal_pair_laws().iter().all(|c| c.passed));
        assert_eq!(x.partial_unit_law_witness(), None);
        assert_eq!(x.right_adjoint_witness().unwrap(), None);
        assert!(x.check_transitivity_splitting().unwrap().holds());
        assert_eq!(x.invariants_match_orbits(), Some(true));
    }
}
