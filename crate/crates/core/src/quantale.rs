//! Unital involutive quantales on finite lattices, the quantale `O(G)` of a
//! finite groupoid, and a validator for the inverse quantal frame axioms.

use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::bits::SmallSet;
use crate::error::{Error, Result};
use crate::groupoid::{Arrow, FinGroupoid};
use crate::suplat::{join_preservation_witness, Elem, FinSupLattice};

/// Largest arrow count for which `O(G)` is tabulated.
pub const MAX_TABULATED_ARROWS: usize = 11;

#[derive(Clone, Debug)]
pub struct Quantale {
    lattice: Arc<FinSupLattice>,
    mul: Vec<Elem>,
    star: Vec<Elem>,
    unit: Elem,
    partial_units: Vec<Elem>,
    groupoid: Option<Arc<FinGroupoid>>,
    iqf: OnceLock<bool>,
}

/// Outcome of one axiom group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AxiomCheck {
    pub name: String,
    pub passed: bool,
    pub witness: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IqfReport {
    pub checks: Vec<AxiomCheck>,
}

impl IqfReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&AxiomCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AxiomCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

pub const QUANTALE_LAWS: &str = "quantale laws";
pub const INVOLUTION: &str = "involution";
pub const FRAME: &str = "frame law";
pub const SUPPORT: &str = "support";
pub const STABILITY: &str = "stability";
pub const COVER: &str = "partial-unit cover";
pub const STABLY_GELFAND: &str = "stably Gelfand";
pub const STRONG_GELFAND: &str = "a ≤ aa*a";

impl Quantale {
    /// A quantale from raw tables; only the shapes are checked here, the laws
    /// belong to [`Quantale::validate_iqf`].
    pub fn new(lattice: Arc<FinSupLattice>, mul: Vec<Elem>, star: Vec<Elem>, unit: Elem) -> Result<Self> {
        let n = lattice.len();
        if mul.len() != n * n || star.len() != n || unit >= n {
            return Err(Error::InvalidQuantale("table sizes do not match the lattice".into()));
        }
        if mul.iter().chain(&star).any(|&x| x >= n) {
            return Err(Error::InvalidQuantale("table entry outside the lattice".into()));
        }
        Ok(Self::assemble(lattice, mul, star, unit, None))
    }

    fn assemble(
        lattice: Arc<FinSupLattice>,
        mul: Vec<Elem>,
        star: Vec<Elem>,
        unit: Elem,
        groupoid: Option<Arc<FinGroupoid>>,
    ) -> Self {
        let mut q = Quantale { lattice, mul, star, unit, partial_units: Vec::new(), groupoid, iqf: OnceLock::new() };
        q.partial_units = q
            .elements()
            .filter(|&s| {
                let ss = q.join(q.mul(s, q.star(s)), q.mul(q.star(s), s));
                q.leq(ss, q.unit)
            })
            .collect();
        q
    }

    /// `O(G)`: arrow sets with `AB = {f∘g}`, `A* = {f⁻¹}` and `e` the identities.
    /// Element indices are arrow bitmasks.
    pub fn of_groupoid(g: Arc<FinGroupoid>) -> Result<Self> {
        if let Some(v) = g.validate().first() {
            return Err(Error::InvalidGroupoid(v.to_string()));
        }
        let n = g.arrow_count();
        if n > MAX_TABULATED_ARROWS {
            return Err(Error::TooLarge(format!("O(G) of {n} arrows is not tabulated")));
        }
        let lattice = Arc::new(FinSupLattice::powerset(g.arrows().iter().map(|a| a.label.clone()).collect()));
        let size = 1usize << n;
        // Products of an atom with every set, then all sets by peeling the lowest arrow.
        let mut atom_row = vec![0usize; n * size];
        for f in 0..n {
            for b in 1..size {
                let low = b.trailing_zeros() as usize;
                let rest = atom_row[f * size + (b & (b - 1))];
                atom_row[f * size + b] = rest | g.comp(f, low).map_or(0, |h| 1 << h);
            }
        }
        let mut mul = vec![0usize; size * size];
        for a in 1..size {
            let low = a.trailing_zeros() as usize;
            let rest = a & (a - 1);
            for b in 0..size {
                mul[a * size + b] = mul[rest * size + b] | atom_row[low * size + b];
            }
        }
        let star = (0..size)
            .map(|a| SmallSet::from_bits(a as u64).iter().fold(0usize, |acc, f| acc | 1 << g.inv(f)))
            .collect();
        let unit = g.identities().bits() as usize;
        Ok(Self::assemble(lattice, mul, star, unit, Some(g)))
    }

    /// A frame as a quantale: product is meet, involution is trivial, unit is top.
    pub fn of_frame(lattice: Arc<FinSupLattice>) -> Self {
        let n = lattice.len();
        let mul = (0..n * n).map(|k| lattice.meet(k / n, k % n)).collect();
        let star = (0..n).collect();
        let unit = lattice.top();
        Self::assemble(lattice, mul, star, unit, None)
    }

    pub fn lattice(&self) -> &Arc<FinSupLattice> {
        &self.lattice
    }

    /// The groupoid this quantale was built from, if any.
    pub fn groupoid(&self) -> Option<&Arc<FinGroupoid>> {
        self.groupoid.as_ref()
    }

    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }

    pub fn elements(&self) -> std::ops::Range<Elem> {
        self.lattice.elements()
    }

    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        self.mul[a * self.lattice.len() + b]
    }

    pub fn star(&self, a: Elem) -> Elem {
        self.star[a]
    }

    pub fn unit(&self) -> Elem {
        self.unit
    }

    pub fn top(&self) -> Elem {
        self.lattice.top()
    }

    pub fn bottom(&self) -> Elem {
        self.lattice.bottom()
    }

    pub fn join(&self, a: Elem, b: Elem) -> Elem {
        self.lattice.join(a, b)
    }

    pub fn join_all(&self, items: impl IntoIterator<Item = Elem>) -> Elem {
        self.lattice.join_all(items)
    }

    pub fn meet(&self, a: Elem, b: Elem) -> Elem {
        self.lattice.meet(a, b)
    }

    pub fn leq(&self, a: Elem, b: Elem) -> bool {
        self.lattice.leq(a, b)
    }

    pub fn describe(&self, a: Elem) -> String {
        self.lattice.describe(a)
    }

    /// `Q_0 = ↓e`.
    pub fn base(&self) -> Vec<Elem> {
        self.lattice.down(self.unit).collect()
    }

    /// `Q_I = {s : ss* ∨ s*s ≤ e}`.
    pub fn partial_units(&self) -> &[Elem] {
        &self.partial_units
    }

    pub fn is_partial_unit(&self, s: Elem) -> bool {
        self.partial_units.binary_search(&s).is_ok()
    }

    /// `spp(a) = a1 ∧ e`.
    pub fn spp(&self, a: Elem) -> Elem {
        self.meet(self.mul(a, self.top()), self.unit)
    }

    /// The support table, after checking that `a1 ∧ e` is a stable support.
    pub fn support(&self) -> Result<Vec<Elem>> {
        let table: Vec<Elem> = self.elements().map(|a| self.spp(a)).collect();
        for a in self.elements() {
            let s = table[a];
            if !self.leq(s, self.mul(a, self.star(a))) {
                return Err(Error::NoStableSupport(format!("spp({}) ≰ aa*", self.describe(a))));
            }
            if !self.leq(a, self.mul(s, a)) {
                return Err(Error::NoStableSupport(format!("{} ≰ spp(a)a", self.describe(a))));
            }
            if self.mul(s, self.top()) != self.mul(a, self.top()) {
                return Err(Error::NoStableSupport(format!("spp(a)1 ≠ a1 at a = {}", self.describe(a))));
            }
        }
        for b in self.base() {
            if table[b] != b {
                return Err(Error::NoStableSupport(format!("spp({}) ≠ itself below e", self.describe(b))));
            }
            for a in self.elements() {
                if table[self.mul(b, a)] != self.mul(b, table[a]) {
                    return Err(Error::NoStableSupport(format!(
                        "spp(ba) ≠ b·spp(a) at b = {}, a = {}",
                        self.describe(b),
                        self.describe(a)
                    )));
                }
            }
        }
        Ok(table)
    }

    /// Whether every axiom of an inverse quantal frame holds; computed once.
    pub fn is_iqf(&self) -> bool {
        *self.iqf.get_or_init(|| self.validate_iqf().passed())
    }

    /// Evaluates every axiom group of an inverse quantal frame, each with a witness on failure.
    pub fn validate_iqf(&self) -> IqfReport {
        let lat = &*self.lattice;
        let mut checks = Vec::new();
        let mut push = |name: &str, witness: Option<String>| {
            checks.push(AxiomCheck { name: name.to_string(), passed: witness.is_none(), witness });
        };

        let bilinear = self.bilinearity_witness();
        // With bilinear products, identities between products only need join-irreducible arguments.
        let gens: Vec<Elem> = if bilinear.is_none() {
            lat.join_irreducibles().to_vec()
        } else {
            lat.elements().collect()
        };
        let laws = bilinear
            .or_else(|| self.associativity_witness(&gens))
            .or_else(|| {
                self.elements()
                    .find(|&a| self.mul(self.unit, a) != a || self.mul(a, self.unit) != a)
                    .map(|a| format!("unit law fails at {}", self.describe(a)))
            });
        push(QUANTALE_LAWS, laws);

        let involution = join_preservation_witness(lat, lat, |a| self.star(a))
            .map(|w| format!("involution: {w}"))
            .or_else(|| {
                self.elements()
                    .find(|&a| self.star(self.star(a)) != a)
                    .map(|a| format!("a** ≠ a at {}", self.describe(a)))
            })
            .or_else(|| {
                gens.iter().flat_map(|&a| gens.iter().map(move |&b| (a, b))).find_map(|(a, b)| {
                    (self.star(self.mul(a, b)) != self.mul(self.star(b), self.star(a)))
                        .then(|| format!("(ab)* ≠ b*a* at a = {}, b = {}", self.describe(a), self.describe(b)))
                })
            });
        push(INVOLUTION, involution);

        let frame = if lat.is_powerset() { None } else { lat.distributivity_witness() };
        push(
            FRAME,
            frame.map(|(x, a, j)| {
                format!("{} ∧ ({} ∨ {}) does not distribute", lat.describe(x), lat.describe(a), lat.describe(j))
            }),
        );

        let support = self.elements().find_map(|a| {
            let s = self.spp(a);
            if !self.leq(s, self.mul(a, self.star(a))) {
                Some(format!("spp(a) ≰ aa* at a = {}", self.describe(a)))
            } else if !self.leq(a, self.mul(s, a)) {
                Some(format!("a ≰ spp(a)a at a = {}", self.describe(a)))
            } else {
                None
            }
        });
        push(SUPPORT, support);

        let stability = self
            .base()
            .into_iter()
            .flat_map(|b| self.elements().map(move |a| (b, a)))
            .find_map(|(b, a)| {
                (self.spp(self.mul(b, a)) != self.mul(b, self.spp(a)))
                    .then(|| format!("spp(ba) ≠ b·spp(a) at b = {}, a = {}", self.describe(b), self.describe(a)))
            })
            .or_else(|| {
                self.elements().find_map(|a| {
                    let alt = self.meet(self.mul(a, self.star(a)), self.unit);
                    (alt != self.spp(a)).then(|| format!("a1 ∧ e ≠ aa* ∧ e at a = {}", self.describe(a)))
                })
            });
        push(STABILITY, stability);

        let cover = self.join_all(self.partial_units.iter().copied());
        push(
            COVER,
            (cover != self.top()).then(|| format!("⋁Q_I = {} ≠ 1", self.describe(cover))),
        );

        let aaa = |a: Elem| self.mul(self.mul(a, self.star(a)), a);
        push(
            STABLY_GELFAND,
            self.elements()
                .find(|&a| self.leq(aaa(a), a) && aaa(a) != a)
                .map(|a| format!("aa*a < a at a = {}", self.describe(a))),
        );
        push(
            STRONG_GELFAND,
            self.elements()
                .find(|&a| !self.leq(a, aaa(a)))
                .map(|a| format!("a ≰ aa*a at a = {}", self.describe(a))),
        );
        IqfReport { checks }
    }

    fn bilinearity_witness(&self) -> Option<String> {
        let lat = &*self.lattice;
        for a in self.elements() {
            if let Some(w) = join_preservation_witness(lat, lat, |b| self.mul(a, b)) {
                return Some(format!("left multiplication by {}: {w}", self.describe(a)));
            }
            if let Some(w) = join_preservation_witness(lat, lat, |b| self.mul(b, a)) {
                return Some(format!("right multiplication by {}: {w}", self.describe(a)));
            }
        }
        None
    }

    fn associativity_witness(&self, gens: &[Elem]) -> Option<String> {
        for &a in gens {
            for &b in gens {
                let ab = self.mul(a, b);
                for &c in gens {
                    if self.mul(ab, c) != self.mul(a, self.mul(b, c)) {
                        return Some(format!(
                            "(ab)c ≠ a(bc) at {}, {}, {}",
                            self.describe(a),
                            self.describe(b),
                            self.describe(c)
                        ));
                    }
                }
            }
        }
        None
    }

    /// Rebuilds a groupoid from an atomic quantale: arrows are the atoms,
    /// objects the atoms below `e`, and composition is read off products of atoms.
    pub fn reconstruct_groupoid(&self) -> Result<FinGroupoid> {
        let lat = &*self.lattice;
        let atoms: Vec<Elem> = lat.join_irreducibles().to_vec();
        let atomic = atoms.iter().all(|&a| lat.down(a).count() == 2);
        if !atomic || !lat.is_frame() {
            return Err(Error::InvalidQuantale("carrier is not an atomic frame".into()));
        }
        let pos = |x: Elem| atoms.iter().position(|&a| a == x);
        let units: Vec<Elem> = atoms.iter().copied().filter(|&a| self.leq(a, self.unit)).collect();
        let object_of = |x: Elem| units.iter().position(|&u| u == x).expect("unit atom");
        let mut arrows = Vec::with_capacity(atoms.len());
        for &a in &atoms {
            let cod = units.iter().copied().find(|&u| self.mul(u, a) == a);
            let dom = units.iter().copied().find(|&u| self.mul(a, u) == a);
            let (Some(cod), Some(dom)) = (cod, dom) else {
                return Err(Error::InvalidQuantale(format!("atom {} has no endpoints", self.describe(a))));
            };
            arrows.push(Arrow { label: lat.describe(a), dom: object_of(dom), cod: object_of(cod) });
        }
        let n = atoms.len();
        let mut comp = vec![None; n * n];
        for (i, &a) in atoms.iter().enumerate() {
            for (j, &b) in atoms.iter().enumerate() {
                let ab = self.mul(a, b);
                if ab != self.bottom() {
                    comp[i * n + j] = Some(pos(ab).ok_or_else(|| {
                        Error::InvalidQuantale(format!("{}·{} is not an atom", self.describe(a), self.describe(b)))
                    })?);
                }
            }
        }
        let inv = atoms
            .iter()
            .map(|&a| pos(self.star(a)).ok_or_else(|| Error::InvalidQuantale("involution of an atom".into())))
            .collect::<Result<Vec<_>>>()?;
        let ids = units.iter().map(|&u| pos(u).expect("atom")).collect();
        let objects = units.iter().map(|&u| lat.describe(u)).collect();
        FinGroupoid::new(objects, arrows, comp, inv, ids)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_groupoid_products() {
        let p2 = Arc::new(FinGroupoid::pair(2));
        let q = Quantale::of_groupoid(p2.clone()).unwrap();
        let a = |l: &str| 1usize << p2.arrow_by_label(l).unwrap();
        assert_eq!(q.mul(a("(1,2)"), a("(2,1)")), a("(1,1)"));
        assert_eq!(q.mul(a("(2,1)"), a("(2,1)")), 0);
        assert_eq!(q.unit(), a("(1,1)") | a("(2,2)"));
        assert_eq!(q.spp(a("(1,2)")), a("(1,1)"));
        assert!(q.validate_iqf().passed());
    }

    #[test]
    fn reconstruction_round_trips() {
        let g = Arc::new(FinGroupoid::connected(2, &crate::groupoid::GroupTable::cyclic(2)));
        let q = Quantale::of_groupoid(g.clone()).unwrap();
        let r = q.reconstruct_groupoid().unwrap();
        let map: Vec<usize> = (0..g.arrow_count()).collect();
        assert!(g.is_isomorphism(&r, &map));
    }
}
