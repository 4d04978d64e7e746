//! `Q`-`R`-bisheaves of discrete bi-actions: two inner products, duals,
//! tensor composition, and the principality and biprincipality deciders.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::groupoid::BiAction;
use crate::qmodule::QSheaf;
use crate::quantale::Quantale;
use crate::suplat::{self, Elem, FinSupLattice};

/// A bisheaf `P(X)` over `Q = O(G)` on the left and `R = O(H)` on the right.
/// The right structure is the left structure of the dual, so `[x,y]` is the
/// inner product of `X*` and `xr = r*·x` there.
#[derive(Clone, Debug)]
pub struct QRBisheaf {
    biaction: Arc<BiAction>,
    left: Arc<QSheaf>,
    right: Arc<QSheaf>,
    bisections: Vec<Elem>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Condition {
    pub name: String,
    pub holds: bool,
    pub witness: Option<String>,
}

impl Condition {
    fn new(name: &str, witness: Option<String>) -> Self {
        Condition { name: name.into(), holds: witness.is_none(), witness }
    }

    fn flag(name: &str, holds: bool, witness: impl FnOnce() -> String) -> Self {
        Condition { name: name.into(), holds, witness: (!holds).then(witness) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PrincipalityReport {
    /// The three principality conditions followed by surjectivity of the left anchor.
    pub conditions: Vec<Condition>,
    /// The equivalent join forms of conditions (2) and (4), and their merged form.
    pub remark_forms: Vec<Condition>,
    pub principal: bool,
    pub left_anchor_surjective: bool,
    pub remark_agrees: bool,
    /// Free left action whose orbits are exactly the fibres of a surjective right anchor.
    pub set_principal: bool,
    pub oracle_agrees: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BiprincipalityReport {
    pub conditions: Vec<Condition>,
    pub biprincipal: bool,
    /// `⟨X,X⟩` join-generates `Q` and `[X,X]` join-generates `R`; evaluated when biprincipal.
    pub full: Option<bool>,
    /// Principal on both sides, from the principality report of `X` and of `X*`.
    pub principal_both_sides: bool,
    pub set_biprincipal: bool,
    pub oracle_agrees: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InterchangeReport {
    pub interchange_holds: bool,
    pub witness: Option<String>,
    pub biprincipal: bool,
    pub agrees: bool,
}

/// The comparison `X ⊗_R X* → Q`, `x⊗y ↦ ⟨x,y⟩`, with candidate inverse
/// `η(a) = ⋁_{s∈Σ^b} as⊗s`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnitMapReport {
    pub balanced: bool,
    pub bijective: bool,
    pub equivariant: bool,
    pub splitting_inverse: bool,
    pub witness: Option<String>,
}

impl UnitMapReport {
    pub fn holds(&self) -> bool {
        self.balanced && self.bijective && self.equivariant && self.splitting_inverse
    }
}

/// Outcome of an isomorphism search between bi-actions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IsoSearch {
    /// `map[x]` is the image of point `x`.
    pub map: Option<Vec<usize>>,
    pub explored: usize,
    pub preserves_inner_products: Option<bool>,
}

fn mask_points(m: Elem) -> impl Iterator<Item = usize> {
    (0..usize::BITS as usize).filter(move |&i| m >> i & 1 == 1)
}

impl QRBisheaf {
    pub fn new(b: BiAction) -> Result<Self> {
        if let Some(v) = b.validate().first() {
            return Err(Error::InvalidBiAction(v.to_string()));
        }
        let q = Arc::new(Quantale::of_groupoid(b.left().clone())?);
        let r = if Arc::ptr_eq(b.left(), b.right()) || **b.left() == **b.right() {
            q.clone()
        } else {
            Arc::new(Quantale::of_groupoid(b.right().clone())?)
        };
        Self::with_quantales(q, r, b)
    }

    /// Builds over given quantales, which must be `O(G)` and `O(H)`.
    pub fn with_quantales(q: Arc<Quantale>, r: Arc<Quantale>, b: BiAction) -> Result<Self> {
        if let Some(v) = b.validate().first() {
            return Err(Error::InvalidBiAction(v.to_string()));
        }
        let left = Arc::new(QSheaf::of_action_over(q, b.left_action())?);
        let right = Arc::new(QSheaf::of_action_over(r, b.dual().left_action())?);
        let bisections: Vec<Elem> = left.sections().iter().copied().filter(|&s| right.is_section(s)).collect();
        let x = QRBisheaf { biaction: Arc::new(b), left, right, bisections };
        if let Some(w) = x.associativity_witness() {
            return Err(Error::InvalidBiAction(w));
        }
        if let Some(w) = x.double_basis_witness() {
            return Err(Error::NotBisheaf(w));
        }
        Ok(x)
    }

    fn associativity_witness(&self) -> Option<String> {
        let (q, r) = (self.q(), self.r());
        for &a in q.lattice().join_irreducibles() {
            for &x in self.lattice().join_irreducibles() {
                for &c in r.lattice().join_irreducibles() {
                    if self.act_right(self.act_left(a, x), c) != self.act_left(a, self.act_right(x, c)) {
                        return Some(format!(
                            "(ax)r ≠ a(xr) at a = {}, x = {}, r = {}",
                            q.describe(a),
                            self.describe(x),
                            r.describe(c)
                        ));
                    }
                }
            }
        }
        None
    }

    fn double_basis_witness(&self) -> Option<String> {
        let lat = self.lattice();
        lat.elements().find_map(|x| {
            let left = lat.join_all(self.bisections.iter().map(|&s| self.act_left(self.inner(x, s), s)));
            let right = lat.join_all(self.bisections.iter().map(|&s| self.act_right(s, self.bracket(s, x))));
            (left != x || right != x).then(|| format!("bisections do not reconstruct {}", lat.describe(x)))
        })
    }

    pub fn biaction(&self) -> &Arc<BiAction> {
        &self.biaction
    }

    pub fn q(&self) -> &Arc<Quantale> {
        self.left.quantale()
    }

    pub fn r(&self) -> &Arc<Quantale> {
        self.right.quantale()
    }

    pub fn left_sheaf(&self) -> &Arc<QSheaf> {
        &self.left
    }

    pub fn right_sheaf(&self) -> &Arc<QSheaf> {
        &self.right
    }

    pub fn lattice(&self) -> &Arc<FinSupLattice> {
        self.left.lattice()
    }

    pub fn top(&self) -> Elem {
        self.left.top()
    }

    pub fn describe(&self, x: Elem) -> String {
        self.left.describe(x)
    }

    pub fn act_left(&self, a: Elem, x: Elem) -> Elem {
        self.left.act(a, x)
    }

    /// `x·r`.
    pub fn act_right(&self, x: Elem, r: Elem) -> Elem {
        self.right.act(self.r().star(r), x)
    }

    /// `⟨x,y⟩ ∈ Q`.
    pub fn inner(&self, x: Elem, y: Elem) -> Elem {
        self.left.inner(x, y)
    }

    /// `[x,y] ∈ R`.
    pub fn bracket(&self, x: Elem, y: Elem) -> Elem {
        self.right.inner(x, y)
    }

    pub fn spp(&self, x: Elem) -> Elem {
        self.left.spp(x)
    }

    pub fn tspp(&self, x: Elem) -> Elem {
        self.right.spp(x)
    }

    /// The local bisections, i.e. sections of both structures.
    pub fn bisections(&self) -> &[Elem] {
        &self.bisections
    }

    /// The `R`-`Q` bisheaf on the same carrier with the two structures exchanged.
    pub fn dual(&self) -> QRBisheaf {
        QRBisheaf {
            biaction: Arc::new(self.biaction.dual()),
            left: self.right.clone(),
            right: self.left.clone(),
            bisections: self.bisections.clone(),
        }
    }

    fn left_anchor_surjective(&self) -> bool {
        let b = &self.biaction;
        (0..b.left().object_count()).all(|o| (0..b.len()).any(|x| b.left_anchor(x) == o))
    }

    /// The theorem's three principality conditions and the surjectivity
    /// condition, each alongside its join form and a set-level oracle.
    pub fn is_principal(&self) -> PrincipalityReport {
        let (q, r) = (self.q(), self.r());
        let lat = self.lattice();
        let one = self.top();
        let sigma = &self.bisections;
        let c1 = Condition::new(
            "⟨s,s⟩ ≤ e_Q for all bisections",
            sigma.iter().find(|&&s| !q.leq(self.inner(s, s), q.unit())).map(|&s| self.describe(s)),
        );
        let c2 = Condition::flag("[1,1] ≥ e_R", r.leq(r.unit(), self.bracket(one, one)), || {
            format!("[1,1] = {}", r.describe(self.bracket(one, one)))
        });
        let c3 = Condition::new(
            "1·tspp(s) ≤ 1_Q·s for all bisections",
            sigma
                .iter()
                .find(|&&s| !lat.leq(self.act_right(one, self.tspp(s)), self.act_left(q.top(), s)))
                .map(|&s| self.describe(s)),
        );
        let c4 = Condition::flag("⟨1,1⟩ ≥ e_Q", q.leq(q.unit(), self.inner(one, one)), || {
            format!("⟨1,1⟩ = {}", q.describe(self.inner(one, one)))
        });
        let diag_q = q.join_all(sigma.iter().map(|&s| self.inner(s, s)));
        let diag_r = r.join_all(sigma.iter().map(|&s| self.bracket(s, s)));
        let r2 = Condition::flag("⋁[s,s] ≥ e_R", r.leq(r.unit(), diag_r), || r.describe(diag_r));
        let r4 = Condition::flag("⋁⟨s,s⟩ ≥ e_Q", q.leq(q.unit(), diag_q), || q.describe(diag_q));
        let r14 = Condition::flag("⋁⟨s,s⟩ = e_Q", diag_q == q.unit(), || q.describe(diag_q));
        let surjective = self.left_anchor_surjective();
        let remark_agrees = r2.holds == c2.holds
            && r4.holds == c4.holds
            && c4.holds == surjective
            && (!surjective || (c1.holds && c4.holds) == r14.holds);
        let principal = c1.holds && c2.holds && c3.holds;
        let set_principal = self.set_principal();
        PrincipalityReport {
            principal,
            left_anchor_surjective: c4.holds,
            conditions: vec![c1, c2, c3, c4],
            remark_forms: vec![r2, r4, r14],
            remark_agrees,
            set_principal,
            oracle_agrees: set_principal == principal,
        }
    }

    fn set_principal(&self) -> bool {
        let b = &self.biaction;
        let left = b.left_action();
        let q_surjective = (0..b.right().object_count()).all(|o| (0..b.len()).any(|x| b.right_anchor(x) == o));
        let fibres_are_orbits = (0..b.len()).all(|x| {
            let orbit = left.orbit(x);
            (0..b.len()).all(|y| (b.right_anchor(y) == b.right_anchor(x)) == orbit.contains(y))
        });
        left.is_free() && q_surjective && fibres_are_orbits
    }

    /// The four conditions of the biprincipality corollary, with fullness.
    pub fn is_biprincipal(&self) -> BiprincipalityReport {
        let (q, r) = (self.q(), self.r());
        let lat = self.lattice();
        let one = self.top();
        let sigma = &self.bisections;
        let diag_q = q.join_all(sigma.iter().map(|&s| self.inner(s, s)));
        let diag_r = r.join_all(sigma.iter().map(|&s| self.bracket(s, s)));
        let c1 = Condition::flag("⋁⟨s,s⟩ = e_Q", diag_q == q.unit(), || q.describe(diag_q));
        let c2 = Condition::flag("⋁[s,s] = e_R", diag_r == r.unit(), || r.describe(diag_r));
        let c3 = Condition::new(
            "1·tspp(s) ≤ 1_Q·s for all bisections",
            sigma
                .iter()
                .find(|&&s| !lat.leq(self.act_right(one, self.tspp(s)), self.act_left(q.top(), s)))
                .map(|&s| self.describe(s)),
        );
        let c4 = Condition::new(
            "spp(s)·1 ≤ s·1_R for all bisections",
            sigma
                .iter()
                .find(|&&s| !lat.leq(self.act_left(self.spp(s), one), self.act_right(s, r.top())))
                .map(|&s| self.describe(s)),
        );
        let biprincipal = c1.holds && c2.holds && c3.holds && c4.holds;
        let full = biprincipal.then(|| self.left_full() && self.dual().left_full());
        let principal_both_sides = self.is_principal().principal && self.dual().is_principal().principal;
        let set_biprincipal = self.set_principal() && self.dual().set_principal();
        BiprincipalityReport {
            conditions: vec![c1, c2, c3, c4],
            biprincipal,
            full,
            principal_both_sides,
            set_biprincipal,
            oracle_agrees: biprincipal == set_biprincipal && biprincipal == principal_both_sides,
        }
    }

    /// Every element of `Q` is a join of values `⟨x,y⟩`.
    fn left_full(&self) -> bool {
        let q = self.q();
        let jis = self.lattice().join_irreducibles();
        q.lattice().join_irreducibles().iter().all(|&a| {
            let below = jis
                .iter()
                .flat_map(|&i| jis.iter().map(move |&j| (i, j)))
                .map(|(i, j)| self.inner(i, j))
                .filter(|&v| q.leq(v, a));
            q.join_all(below) == a
        })
    }

    /// `⟨s,t⟩u = s[t,u]` over bisection triples, compared with biprincipality.
    pub fn interchange_check(&self) -> Result<InterchangeReport> {
        let (q, r) = (self.q(), self.r());
        let sigma = &self.bisections;
        let diag_q = q.join_all(sigma.iter().map(|&s| self.inner(s, s)));
        let diag_r = r.join_all(sigma.iter().map(|&s| self.bracket(s, s)));
        if diag_q != q.unit() || diag_r != r.unit() {
            return Err(Error::HypothesisFailed(format!(
                "⋁⟨s,s⟩ = {} and ⋁[s,s] = {}",
                q.describe(diag_q),
                r.describe(diag_r)
            )));
        }
        // Both sides are join-preserving in each variable, so when bisections
        // are numerous the join-irreducible ones decide the identity.
        let lat = self.lattice();
        let triples: Vec<Elem> = if sigma.len() <= 48 {
            sigma.clone()
        } else {
            sigma.iter().copied().filter(|s| lat.join_irreducibles().contains(s)).collect()
        };
        let mut witness = None;
        'outer: for &s in &triples {
            for &t in &triples {
                let st = self.inner(s, t);
                for &u in &triples {
                    if self.act_left(st, u) != self.act_right(s, self.bracket(t, u)) {
                        witness = Some(format!(
                            "s = {}, t = {}, u = {}",
                            self.describe(s),
                            self.describe(t),
                            self.describe(u)
                        ));
                        break 'outer;
                    }
                }
            }
        }
        let biprincipal = self.is_biprincipal().biprincipal;
        let holds = witness.is_none();
        Ok(InterchangeReport { interchange_holds: holds, witness, biprincipal, agrees: holds == biprincipal })
    }

    /// The unique partial unit `u` with `ut = s` and `spp(u*) = spp(t)`, which is `⟨s,t⟩`.
    pub fn translation_element(&self, s: Elem, t: Elem) -> Result<Elem> {
        if !self.is_principal().principal {
            return Err(Error::NotPrincipal("the bisheaf is not principal".into()));
        }
        if !self.is_bisection(s) || !self.is_bisection(t) {
            return Err(Error::PreconditionFailed("arguments must be local bisections".into()));
        }
        if self.tspp(s) != self.tspp(t) {
            return Err(Error::SupportMismatch(format!(
                "tspp({}) ≠ tspp({})",
                self.describe(s),
                self.describe(t)
            )));
        }
        let q = self.q();
        let u = self.inner(s, t);
        let matches = |v: Elem| q.spp(q.star(v)) == self.spp(t) && self.act_left(v, t) == s;
        let candidates: Vec<Elem> = q.partial_units().iter().copied().filter(|&v| matches(v)).collect();
        if !q.is_partial_unit(u) || !matches(u) || candidates != [u] {
            return Err(Error::NotPrincipal(format!(
                "no unique translating partial unit for s = {}, t = {}",
                self.describe(s),
                self.describe(t)
            )));
        }
        Ok(u)
    }

    pub fn is_bisection(&self, s: Elem) -> bool {
        self.bisections.binary_search(&s).is_ok()
    }

    /// `⟨s∧s',t⟩ = ⟨s,t⟩∧⟨s',t⟩` for bisections with a common `tspp`.
    pub fn meet_identity_witness(&self) -> Option<String> {
        let q = self.q();
        let lat = self.lattice();
        let sigma = &self.bisections;
        for &s in sigma {
            for &s2 in sigma {
                for &t in sigma {
                    let ts = self.tspp(t);
                    if self.tspp(s) != ts || self.tspp(s2) != ts {
                        continue;
                    }
                    if self.inner(lat.meet(s, s2), t) != q.meet(self.inner(s, t), self.inner(s2, t)) {
                        return Some(format!(
                            "s = {}, s' = {}, t = {}",
                            self.describe(s),
                            self.describe(s2),
                            self.describe(t)
                        ));
                    }
                }
            }
        }
        None
    }

    /// `⟨xr*,y⟩ = ⟨x,yr⟩`, `tspp(ax) = tspp(spp(a*)x)` and `spp(xr) = spp(x·spp(r))`.
    pub fn adjoint_identity_witness(&self) -> Option<String> {
        let (q, r) = (self.q(), self.r());
        let lat = self.lattice();
        let rj = r.lattice().join_irreducibles();
        for &c in rj {
            for x in lat.elements() {
                if self.spp(self.act_right(x, c)) != self.spp(self.act_right(x, r.spp(c))) {
                    return Some(format!("spp(xr) at x = {}, r = {}", lat.describe(x), r.describe(c)));
                }
                for y in lat.elements() {
                    if self.inner(self.act_right(x, r.star(c)), y) != self.inner(x, self.act_right(y, c)) {
                        return Some(format!(
                            "⟨xr*,y⟩ at x = {}, y = {}, r = {}",
                            lat.describe(x),
                            lat.describe(y),
                            r.describe(c)
                        ));
                    }
                }
            }
        }
        for &a in q.lattice().join_irreducibles() {
            for x in lat.elements() {
                if self.tspp(self.act_left(a, x)) != self.tspp(self.act_left(q.spp(q.star(a)), x)) {
                    return Some(format!("tspp(ax) at a = {}, x = {}", q.describe(a), lat.describe(x)));
                }
            }
        }
        None
    }

    /// Checks `X ⊗_R X* ≅ Q` through `x⊗y ↦ ⟨x,y⟩` and its splitting `η`.
    pub fn unit_map(&self) -> Result<UnitMapReport> {
        let b = &self.biaction;
        let dual = b.dual();
        let (tensor, classes) = b.tensor_with_classes(&dual)?;
        let q = self.q();
        let h = b.right();
        let n = b.len();
        let mut witness = None;
        let atom_inner = |x: usize, y: usize| self.inner(1 << x, 1 << y);

        let mut balanced = true;
        for e in 0..h.arrow_count() {
            for x in (0..n).filter(|&x| b.right_anchor(x) == h.cod(e)) {
                for y in (0..n).filter(|&y| b.right_anchor(y) == h.dom(e)) {
                    let xe = b.act_right(x, e).expect("typed");
                    let y_inv = b.act_right(y, h.inv(e)).expect("typed");
                    if atom_inner(xe, y) != atom_inner(x, y_inv) {
                        balanced = false;
                        witness.get_or_insert_with(|| format!("⟨x·h,y⟩ ≠ ⟨x,y·h⁻¹⟩ at h = {}", h.label(e)));
                    }
                }
            }
        }
        let reps: Vec<(usize, usize)> = (0..tensor.len())
            .map(|c| {
                let k = classes.iter().position(|&cl| cl == Some(c)).expect("every class has a pair");
                (k / n, k % n)
            })
            .collect();
        let phi_atoms: Vec<Elem> = reps.iter().map(|&(x, y)| atom_inner(x, y)).collect();
        let is_atom = |v: Elem| v.count_ones() == 1;
        let mut images: Vec<Elem> = phi_atoms.clone();
        images.sort_unstable();
        images.dedup();
        let bijective = phi_atoms.iter().all(|&v| is_atom(v))
            && images.len() == phi_atoms.len()
            && phi_atoms.len() == b.left().arrow_count();
        if !bijective {
            witness.get_or_insert_with(|| "φ is not a bijection of atoms".to_string());
        }
        let phi = |xi: Elem| q.join_all(mask_points(xi).map(|c| phi_atoms[c]));

        let g = b.left();
        let mut equivariant = true;
        for f in 0..g.arrow_count() {
            for c in 0..tensor.len() {
                let left = tensor.act_left(f, c).map_or(0, |d| phi_atoms[d]);
                let right = tensor.act_right(c, f).map_or(0, |d| phi_atoms[d]);
                if left != q.mul(1 << f, phi_atoms[c]) || right != q.mul(phi_atoms[c], 1 << f) {
                    equivariant = false;
                    witness.get_or_insert_with(|| format!("φ not equivariant at {}", g.label(f)));
                }
            }
        }

        let pure = |u: Elem, v: Elem| {
            let mut out = 0usize;
            for x in mask_points(u) {
                for y in mask_points(v) {
                    if let Some(c) = classes[x * n + y] {
                        out |= 1 << c;
                    }
                }
            }
            out
        };
        let eta = |a: Elem| {
            self.bisections.iter().fold(0usize, |acc, &s| acc | pure(self.act_left(a, s), s))
        };
        let mut splitting_inverse = true;
        if bijective {
            for a in q.elements() {
                if phi(eta(a)) != a {
                    splitting_inverse = false;
                    witness.get_or_insert_with(|| format!("φ(η(a)) ≠ a at a = {}", q.describe(a)));
                    break;
                }
            }
            for xi in 0..1usize << tensor.len() {
                if eta(phi(xi)) != xi {
                    splitting_inverse = false;
                    witness.get_or_insert_with(|| "η(φ(ξ)) ≠ ξ".to_string());
                    break;
                }
            }
        } else {
            splitting_inverse = false;
        }
        Ok(UnitMapReport { balanced, bijective, equivariant, splitting_inverse, witness })
    }
}

/// `X ⊗_R Y` as a `Q`-`S` bisheaf over the quantales of the factors.
pub fn tensor_compose(x: &QRBisheaf, y: &QRBisheaf) -> Result<QRBisheaf> {
    if *x.biaction.right() != *y.biaction.left() {
        return Err(Error::QuantaleMismatch("the middle quantales differ".into()));
    }
    let t = x.biaction.tensor(&y.biaction)?;
    QRBisheaf::with_quantales(x.q().clone(), y.r().clone(), t)
}

/// Compares the balanced sup-lattice tensor `P(X) ⊗_R P(Y)` with the powerset
/// of `(X ×_{H_0} Y)/H`: an order isomorphism matching pure tensors.
pub fn generic_tensor_agrees(x: &QRBisheaf, y: &QRBisheaf) -> Result<bool> {
    if *x.biaction.right() != *y.biaction.left() {
        return Err(Error::QuantaleMismatch("the middle quantales differ".into()));
    }
    let (xl, yl) = (x.lattice(), y.lattice());
    if xl.len() * yl.len() > 256 {
        return Err(Error::TooLarge("generic tensor beyond 256 generator pairs".into()));
    }
    let r = x.r();
    let mut relations = Vec::new();
    for &a in xl.join_irreducibles() {
        for &c in yl.join_irreducibles() {
            for &e in r.lattice().join_irreducibles() {
                relations.push((vec![(x.act_right(a, e), c)], vec![(a, y.act_left(e, c))]));
            }
        }
    }
    let generic = suplat::tensor(xl, yl, &relations);
    let (t, classes) = x.biaction.tensor_with_classes(&y.biaction)?;
    let m = y.biaction.len();
    let concrete = FinSupLattice::powerset(t.points().to_vec());
    let pure = |u: Elem, v: Elem| {
        let mut out = 0usize;
        for a in mask_points(u) {
            for c in mask_points(v) {
                if let Some(k) = classes[a * m + c] {
                    out |= 1 << k;
                }
            }
        }
        out
    };
    let comparison: Vec<Elem> = generic
        .lattice()
        .elements()
        .map(|g| {
            let mut acc = 0;
            for u in xl.elements() {
                for v in yl.elements() {
                    if generic.contains_pair(g, u, v) {
                        acc |= pure(u, v);
                    }
                }
            }
            acc
        })
        .collect();
    Ok(suplat::is_order_isomorphism(generic.lattice(), &concrete, &comparison)
        && xl.elements().all(|u| yl.elements().all(|v| comparison[generic.pure(u, v)] == pure(u, v))))
}

/// An isomorphism of bisheaves, found as a point bijection commuting with both
/// actions; the inner products are then compared on atoms.
pub fn bimodule_iso(x: &QRBisheaf, y: &QRBisheaf) -> IsoSearch {
    let (map, explored) = x.biaction.isomorphism(&y.biaction);
    let preserves = map.as_ref().map(|m| {
        let n = m.len();
        (0..n).all(|a| {
            (0..n).all(|c| {
                x.inner(1 << a, 1 << c) == y.inner(1 << m[a], 1 << m[c])
                    && x.bracket(1 << a, 1 << c) == y.bracket(1 << m[a], 1 << m[c])
            })
        })
    });
    IsoSearch { map, explored, preserves_inner_products: preserves }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::{FinGroupoid, GAction, GroupoidFunctor};

    fn taut_p2() -> QRBisheaf {
        let p2 = Arc::new(FinGroupoid::pair(2));
        QRBisheaf::new(BiAction::with_trivial_right(&GAction::tautological(p2))).unwrap()
    }

    #[test]
    fn tautological_pair_bisheaf_is_biprincipal() {
        let x = taut_p2();
        let p = x.is_principal();
        assert!(p.principal && p.remark_agrees && p.oracle_agrees);
        let b = x.is_biprincipal();
        assert!(b.biprincipal && b.full == Some(true) && b.oracle_agrees);
        let i = x.interchange_check().unwrap();
        assert!(i.interchange_holds && i.agrees);
        assert!(x.unit_map().unwrap().holds());
        assert!(x.dual().unit_map().unwrap().holds());
        let g = x.biaction().left().clone();
        let u = x.translation_element(0b01, 0b10).unwrap();
        assert_eq!(u, 1 << g.arrow_by_label("(1,2)").unwrap());
    }

    #[test]
    fn non_full_functor_is_principal_only() {
        let t = Arc::new(FinGroupoid::trivial());
        let z2 = Arc::new(FinGroupoid::cyclic(2));
        let f = &GroupoidFunctor::enumerate(&t, &z2)[0];
        let x = QRBisheaf::new(f.bundle()).unwrap();
        assert!(x.is_principal().principal);
        let b = x.is_biprincipal();
        assert!(!b.biprincipal && b.oracle_agrees);
        assert_eq!(x.adjoint_identity_witness(), None);
    }

    #[test]
    fn group_on_point_fails_freeness() {
        let z2 = Arc::new(FinGroupoid::cyclic(2));
        let x = QRBisheaf::new(BiAction::with_trivial_right(&GAction::tautological(z2))).unwrap();
        let p = x.is_principal();
        assert!(!p.conditions[0].holds && !p.principal && p.oracle_agrees);
    }

    #[test]
    fn unit_is_biprincipal_and_tensor_unit_law() {
        let p2 = Arc::new(FinGroupoid::pair(2));
        let u = QRBisheaf::new(BiAction::unit(p2)).unwrap();
        assert!(u.is_biprincipal().biprincipal);
        let x = taut_p2();
        let ux = tensor_compose(&u, &x).unwrap();
        assert!(bimodule_iso(&ux, &x).map.is_some());
        assert!(generic_tensor_agrees(&x, &x.dual()).unwrap());
    }
}
