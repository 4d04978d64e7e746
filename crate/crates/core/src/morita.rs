//! The Hilsum–Skandalis category of finite groupoids and a bounded decision
//! procedure for Morita equivalence, checked against the orbit/isotropy oracle.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::bimodule::{BiprincipalityReport, QRBisheaf};
use crate::error::{Error, Result};
use crate::groupoid::{Arrow, BiAction, CanonicalGroup, FinGroupoid, GroupoidFunctor};
use crate::quantale::Quantale;

/// Largest carrier on which a found witness is also run through the
/// quantale-level biprincipality decider.
pub const MAX_BISHEAF_POINTS: usize = 10;

/// An isomorphism class of principal `G`-`H` bi-actions, stored in canonical
/// form, read as an arrow from `O(H)` to `O(G)`.
#[derive(Clone, Debug)]
pub struct HSMap {
    representative: BiAction,
    bisheaf: Arc<QRBisheaf>,
}

/// Equality of isomorphism classes: canonical tables agree, labels aside.
impl PartialEq for HSMap {
    fn eq(&self, other: &Self) -> bool {
        **self.target() == **other.target()
            && **self.source() == **other.source()
            && self.representative.structure_key() == other.representative.structure_key()
    }
}

impl HSMap {
    pub fn new(b: BiAction) -> Result<Self> {
        let representative = b.validated()?.canonical();
        let bisheaf = Arc::new(QRBisheaf::new(representative.clone())?);
        let report = bisheaf.is_principal();
        if !report.principal {
            let failed: Vec<&str> =
                report.conditions.iter().take(3).filter(|c| !c.holds).map(|c| c.name.as_str()).collect();
            return Err(Error::NotPrincipal(failed.join("; ")));
        }
        Ok(HSMap { representative, bisheaf })
    }

    /// `⟨φ⟩` for a functor `φ: H → G`.
    pub fn of_functor(f: &GroupoidFunctor) -> Result<Self> {
        Self::new(f.bundle())
    }

    pub fn representative(&self) -> &BiAction {
        &self.representative
    }

    pub fn bisheaf(&self) -> &Arc<QRBisheaf> {
        &self.bisheaf
    }

    /// The groupoid acting on the left, whose quantale is the codomain.
    pub fn target(&self) -> &Arc<FinGroupoid> {
        self.representative.left()
    }

    pub fn source(&self) -> &Arc<FinGroupoid> {
        self.representative.right()
    }
}

/// The identity arrow on `O(G)`: `G` acting on its own arrows from both sides.
pub fn hs_identity(g: Arc<FinGroupoid>) -> Result<HSMap> {
    HSMap::new(BiAction::unit(g))
}

/// The identity on a quantale, through the groupoid it stores or reconstructs.
pub fn hs_identity_of_quantale(q: &Quantale) -> Result<HSMap> {
    let g = match q.groupoid() {
        Some(g) => g.clone(),
        None => Arc::new(q.reconstruct_groupoid()?),
    };
    hs_identity(g)
}

/// `f∘g`, the canonical form of `X_f ⊗ X_g`.
pub fn hs_compose(f: &HSMap, g: &HSMap) -> Result<HSMap> {
    if **f.source() != **g.target() {
        return Err(Error::QuantaleMismatch("source of the first map is not the target of the second".into()));
    }
    HSMap::new(f.representative.tensor(&g.representative)?)
}

#[derive(Clone, Debug)]
pub struct HsInverse {
    pub invertible: bool,
    pub inverse: Option<HSMap>,
    /// `X ⊗ X* ≅ 1_G`.
    pub left_unit: bool,
    /// `X* ⊗ X ≅ 1_H`.
    pub right_unit: bool,
    /// Both composites with the dual are identities.
    pub units_agree: bool,
    pub report: BiprincipalityReport,
}

/// Decides invertibility by biprincipality and compares with the two unit
/// composites formed with the dual.
pub fn is_hs_invertible(f: &HSMap) -> HsInverse {
    let report = f.bisheaf.is_biprincipal();
    let x = &f.representative;
    let dual = x.dual();
    let iso_to_unit = |t: Result<BiAction>, g: &Arc<FinGroupoid>| {
        t.map(|t| t.isomorphism(&BiAction::unit(g.clone())).0.is_some()).unwrap_or(false)
    };
    let left_unit = iso_to_unit(x.tensor(&dual), x.left());
    let right_unit = iso_to_unit(dual.tensor(x), x.right());
    let invertible = report.biprincipal;
    let inverse = if invertible { HSMap::new(dual).ok() } else { None };
    HsInverse {
        invertible,
        units_agree: (left_unit && right_unit) == invertible,
        inverse,
        left_unit,
        right_unit,
        report,
    }
}

/// Discrete Morita equivalence is equivalence of the underlying categories:
/// the same number of components with each isotropy class.
pub fn morita_oracle(g1: &FinGroupoid, g2: &FinGroupoid) -> bool {
    g1.morita_invariant() == g2.morita_invariant()
}

/// The least carrier of a biprincipal `G1`-`G2` bi-action when the oracle
/// says one exists: matched components contribute `|orbit_1|·|orbit_2|·|isotropy|`.
pub fn minimal_witness_size(g1: &FinGroupoid, g2: &FinGroupoid) -> Option<usize> {
    if !morita_oracle(g1, g2) {
        return None;
    }
    let (a, b) = (g1.orbits_isotropy(), g2.orbits_isotropy());
    let mut best = usize::MAX;
    let mut perm: Vec<usize> = (0..b.len()).collect();
    permutations(&mut perm, 0, &mut |p| {
        if a.iter().zip(p).all(|(x, &j)| x.1 == b[j].1) {
            let size = a.iter().zip(p).map(|(x, &j)| x.0 * b[j].0 * x.1.order()).sum();
            best = best.min(size);
        }
    });
    Some(best)
}

fn permutations(v: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        visit(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permutations(v, k + 1, visit);
        v.swap(k, i);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Certificate {
    /// A biprincipal bi-action, with the functor its canonical section induces.
    Bisheaf { points: Vec<String>, object_map: Vec<usize>, arrow_map: Vec<usize> },
    /// The isotropy multisets differ.
    InvariantMismatch { left: BTreeMap<String, usize>, right: BTreeMap<String, usize> },
    /// The oracle predicts a witness, but none exists within the bound.
    Missing { minimal_size: Option<usize> },
}

/// The remaining equivalent conditions checked on a found witness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WitnessChecks {
    /// `X ⊗ X* ≅ 1_G` and `X* ⊗ X ≅ 1_H`.
    pub unit_isomorphisms: bool,
    /// Biprincipal as a bisheaf; absent above [`MAX_BISHEAF_POINTS`].
    pub bisheaf_biprincipal: Option<bool>,
    /// The explicit maps `x⊗y ↦ ⟨x,y⟩` and `x⊗y ↦ [x,y]` are isomorphisms split by `η`.
    pub explicit_unit_maps: Option<bool>,
}

impl WitnessChecks {
    pub fn hold(&self) -> bool {
        self.unit_isomorphisms && self.bisheaf_biprincipal != Some(false) && self.explicit_unit_maps != Some(false)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MoritaVerdict {
    pub equivalent: bool,
    pub certificate: Certificate,
    pub oracle: bool,
    pub oracle_agrees: bool,
    /// Candidate right actions tried, summed over object assignments.
    pub candidates: usize,
    pub witness_checks: Option<WitnessChecks>,
    #[serde(skip)]
    pub witness: Option<BiAction>,
}

/// Searches for a biprincipal `G1`-`G2` bi-action with at most `bound` points.
///
/// Every principal bundle has free transitive fibres, so up to isomorphism
/// the fibre over `b ∈ H_0` is `{g : dom g = o(b)}` for some object `o(b)`.
/// The search assigns `o`, then backtracks over the images `x_{cod h}·h` of
/// fibre base points, propagating along composition.
pub fn decide_morita(g1: &Arc<FinGroupoid>, g2: &Arc<FinGroupoid>, bound: usize) -> Result<MoritaVerdict> {
    for g in [g1, g2] {
        if let Some(v) = g.validate().first() {
            return Err(Error::InvalidGroupoid(v.to_string()));
        }
    }
    let oracle = morita_oracle(g1, g2);
    let (g, h) = (g1.as_ref(), g2.as_ref());
    let star = |o: usize| (0..g.arrow_count()).filter(|&a| g.dom(a) == o).count();
    let assignments: Vec<Vec<usize>> = object_maps(h.object_count(), g.object_count())
        .into_iter()
        .filter(|o| covers_orbits(g, o))
        .collect();
    let in_bound: Vec<&Vec<usize>> =
        assignments.iter().filter(|o| o.iter().map(|&x| star(x)).sum::<usize>() <= bound).collect();
    let skipped = in_bound.len() < assignments.len();

    let outcomes: Vec<(usize, Option<GroupoidFunctor>)> =
        in_bound.par_iter().map(|o| search_assignment(g1, g2, o)).collect();
    let candidates = outcomes.iter().map(|(c, _)| c).sum();
    let found = outcomes.into_iter().find_map(|(_, f)| f);

    let verdict = match found {
        Some(f) => {
            let witness = f.bundle();
            let checks = witness_checks(&witness);
            MoritaVerdict {
                equivalent: true,
                certificate: Certificate::Bisheaf {
                    points: witness.points().to_vec(),
                    object_map: f.object_map().to_vec(),
                    arrow_map: f.arrow_map().to_vec(),
                },
                oracle,
                oracle_agrees: oracle,
                candidates,
                witness_checks: Some(checks),
                witness: Some(witness),
            }
        }
        None if oracle && skipped => return Err(Error::Inconclusive(bound)),
        None => MoritaVerdict {
            equivalent: false,
            certificate: if oracle {
                Certificate::Missing { minimal_size: minimal_witness_size(g, h) }
            } else {
                let names = |m: BTreeMap<CanonicalGroup, usize>| m.into_iter().map(|(k, v)| (k.name(), v)).collect();
                Certificate::InvariantMismatch { left: names(g.morita_invariant()), right: names(h.morita_invariant()) }
            },
            oracle,
            oracle_agrees: !oracle,
            candidates,
            witness_checks: None,
            witness: None,
        },
    };
    Ok(verdict)
}

/// Morita equivalence of inverse quantal frames through their groupoids.
pub fn decide_morita_quantales(q1: &Quantale, q2: &Quantale, bound: usize) -> Result<MoritaVerdict> {
    let groupoid = |q: &Quantale| -> Result<Arc<FinGroupoid>> {
        match q.groupoid() {
            Some(g) => Ok(g.clone()),
            None => Ok(Arc::new(q.reconstruct_groupoid()?)),
        }
    };
    decide_morita(&groupoid(q1)?, &groupoid(q2)?, bound)
}

fn object_maps(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out.into_iter().flat_map(|v| (0..m).map(move |o| [v.clone(), vec![o]].concat())).collect();
    }
    if m == 0 && n > 0 {
        out.clear();
    }
    out
}

/// The left anchor `cod` of the carrier reaches every object exactly when
/// each component of `G` contains some `o(b)`.
fn covers_orbits(g: &FinGroupoid, o: &[usize]) -> bool {
    g.components().iter().all(|c| o.iter().any(|x| c.contains(x)))
}

/// All right actions on the representable carrier for one object assignment,
/// returning the first biprincipal one as the functor it encodes.
fn search_assignment(
    g1: &Arc<FinGroupoid>,
    g2: &Arc<FinGroupoid>,
    o: &[usize],
) -> (usize, Option<GroupoidFunctor>) {
    let (g, h) = (g1.as_ref(), g2.as_ref());
    let mut image: Vec<Option<usize>> = vec![None; h.arrow_count()];
    for b in 0..h.object_count() {
        image[h.id(b)] = Some(g.id(o[b]));
    }
    let order: Vec<usize> = (0..h.arrow_count()).filter(|&e| !h.is_identity(e)).collect();
    let mut count = 0;
    let mut found = None;
    backtrack(g, h, o, &order, 0, &mut image, &mut count, &mut |img| {
        let f = GroupoidFunctor::new(g2.clone(), g1.clone(), o.to_vec(), img.iter().map(|a| a.expect("full")).collect())
            .ok()?;
        set_biprincipal(&f.bundle()).then_some(f)
    }, &mut found);
    (count, found)
}

/// Assigns `x_{cod e}·e = image[e]·x_{dom e}`, i.e. an arrow `o(dom e) → o(cod e)`.
#[allow(clippy::too_many_arguments)]
fn backtrack(
    g: &FinGroupoid,
    h: &FinGroupoid,
    o: &[usize],
    order: &[usize],
    k: usize,
    image: &mut Vec<Option<usize>>,
    count: &mut usize,
    accept: &mut impl FnMut(&[Option<usize>]) -> Option<GroupoidFunctor>,
    found: &mut Option<GroupoidFunctor>,
) {
    if found.is_some() {
        return;
    }
    let Some(pos) = (k..order.len()).find(|&i| image[order[i]].is_none()) else {
        *count += 1;
        *found = accept(image);
        return;
    };
    let e = order[pos];
    for a in g.hom(o[h.dom(e)], o[h.cod(e)]).collect::<Vec<_>>() {
        let saved = image.clone();
        if propagate(g, h, image, e, a) {
            backtrack(g, h, o, order, pos + 1, image, count, accept, found);
            if found.is_some() {
                return;
            }
        }
        *image = saved;
    }
}

/// Sets `image[e] = a` and closes under composition and inverses; false on a clash.
fn propagate(g: &FinGroupoid, h: &FinGroupoid, image: &mut [Option<usize>], e: usize, a: usize) -> bool {
    let mut stack = vec![(e, a)];
    while let Some((e, a)) = stack.pop() {
        match image[e] {
            Some(b) if b != a => return false,
            Some(_) => continue,
            None => image[e] = Some(a),
        }
        stack.push((h.inv(e), g.inv(a)));
        for f in 0..h.arrow_count() {
            let Some(b) = image[f] else { continue };
            if let Some(ef) = h.comp(e, f) {
                stack.push((ef, g.comp(a, b).expect("typed")));
            }
            if let Some(fe) = h.comp(f, e) {
                stack.push((fe, g.comp(b, a).expect("typed")));
            }
        }
    }
    true
}

/// Both actions free, both anchors surjective, and each anchor's fibres are
/// orbits of the opposite action.
pub fn set_biprincipal(b: &BiAction) -> bool {
    set_principal(b) && set_principal(&b.dual())
}

/// The left action is free and its orbits are exactly the fibres of a
/// surjective right anchor.
pub fn set_principal(b: &BiAction) -> bool {
    let left = b.left_action();
    let n = b.len();
    (0..b.right().object_count()).all(|o| (0..n).any(|x| b.right_anchor(x) == o))
        && left.is_free()
        && (0..n).all(|x| {
            let orbit = left.orbit(x);
            (0..n).all(|y| (b.right_anchor(y) == b.right_anchor(x)) == orbit.contains(y))
        })
}

fn witness_checks(x: &BiAction) -> WitnessChecks {
    let dual = x.dual();
    let iso = |t: Result<BiAction>, g: &Arc<FinGroupoid>| {
        t.map(|t| t.isomorphism(&BiAction::unit(g.clone())).0.is_some()).unwrap_or(false)
    };
    let unit_isomorphisms = iso(x.tensor(&dual), x.left()) && iso(dual.tensor(x), x.right());
    let (mut bisheaf_biprincipal, mut explicit_unit_maps) = (None, None);
    if x.len() <= MAX_BISHEAF_POINTS {
        if let Ok(b) = QRBisheaf::new(x.clone()) {
            bisheaf_biprincipal = Some(b.is_biprincipal().biprincipal);
            let maps = |b: &QRBisheaf| b.unit_map().map(|r| r.holds()).unwrap_or(false);
            explicit_unit_maps = Some(maps(&b) && maps(&b.dual()));
        } else {
            bisheaf_biprincipal = Some(false);
        }
    }
    WitnessChecks { unit_isomorphisms, bisheaf_biprincipal, explicit_unit_maps }
}

/// The functor determined by a global right section `σ` of a principal
/// bundle: `φ(b) = p(σ b)` and `φ(h)·σ(dom h) = σ(cod h)·h`.
pub fn extract_functor(x: &BiAction, section: &[usize]) -> Result<GroupoidFunctor> {
    let (g, h) = (x.left(), x.right());
    if section.len() != h.object_count() || section.iter().enumerate().any(|(b, &s)| s >= x.len() || x.right_anchor(s) != b)
    {
        return Err(Error::PreconditionFailed("not a global section of the right anchor".into()));
    }
    if !set_principal(x) {
        return Err(Error::NotPrincipal("the left action is not principal".into()));
    }
    let objects: Vec<usize> = section.iter().map(|&s| x.left_anchor(s)).collect();
    let arrows = (0..h.arrow_count())
        .map(|e| {
            let target = x.act_right(section[h.cod(e)], e).expect("typed");
            let source = section[h.dom(e)];
            (0..g.arrow_count())
                .find(|&a| x.act_left(a, source) == Some(target))
                .ok_or_else(|| Error::NotPrincipal(format!("no arrow translates along {}", h.label(e))))
        })
        .collect::<Result<Vec<_>>>()?;
    GroupoidFunctor::new(h.clone(), g.clone(), objects, arrows)
}

/// Global sections of the right anchor, as point lists indexed by `H_0`.
pub fn global_sections(x: &BiAction) -> Vec<Vec<usize>> {
    let h = x.right();
    let mut out = vec![Vec::new()];
    for b in 0..h.object_count() {
        let fibre: Vec<usize> = (0..x.len()).filter(|&s| x.right_anchor(s) == b).collect();
        out = out
            .into_iter()
            .flat_map(|v| fibre.iter().map(move |&s| [v.clone(), vec![s]].concat()))
            .collect();
    }
    out
}

/// `g` with `copies` extra objects isomorphic to `object`, glued into its
/// component. The result is Morita equivalent to `g`.
pub fn inflate(g: &FinGroupoid, object: usize, copies: usize) -> FinGroupoid {
    let n0 = g.object_count();
    let mut objects = g.objects().to_vec();
    objects.extend((0..copies).map(|k| format!("{}'{}", g.objects()[object], k + 1)));
    let total = n0 + copies;
    // An arrow d → c is an arrow anchor(d) → anchor(c) of `g`.
    let anchor = |v: usize| if v < n0 { v } else { object };
    let mut triples = Vec::new();
    for c in 0..total {
        for d in 0..total {
            for a in g.hom(anchor(d), anchor(c)) {
                triples.push((c, d, a));
            }
        }
    }
    let index = |t: (usize, usize, usize)| triples.iter().position(|&u| u == t).expect("present");
    let arrows = triples
        .iter()
        .map(|&(c, d, a)| {
            let label = if c < n0 && d < n0 {
                g.label(a).to_string()
            } else {
                format!("{}:{}→{}", g.label(a), objects[d], objects[c])
            };
            Arrow { label, dom: d, cod: c }
        })
        .collect();
    let comp = triples
        .iter()
        .flat_map(|&(c, d, a)| {
            triples.iter().map(move |&(c2, d2, b)| (d == c2).then(|| (c, d2, g.comp(a, b).expect("typed"))))
        })
        .map(|t| t.map(index))
        .collect();
    let inv = triples.iter().map(|&(c, d, a)| index((d, c, g.inv(a)))).collect();
    let ids = (0..total).map(|v| index((v, v, g.id(anchor(v))))).collect();
    FinGroupoid::from_tables(objects, arrows, comp, inv, ids)
}
