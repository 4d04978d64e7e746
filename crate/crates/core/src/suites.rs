//! Catalog-wide invariant suites. Each suite enumerates its instances, runs
//! every check on each, and reports failures with witnesses. Instances run in
//! parallel but results are collected in catalog order.

use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::Serialize;

use crate::bimodule::{generic_tensor_agrees, tensor_compose, QRBisheaf};
use crate::catalog::{self, NamedAction, NamedFunctor, NamedGroupoid};
use crate::error::Error;
use crate::groupoid::{BiAction, FinGroupoid};
use crate::locale::{
    self, pairing_direct_image, surjection_pullback_check, tensor_over_base, BLocale, FinLocale, SheafHom,
};
use crate::morita::{self, decide_morita, hs_compose, is_hs_invertible, HSMap, MAX_BISHEAF_POINTS};
use crate::qmodule::QSheaf;
use crate::quantale::Quantale;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CatalogConfig {
    pub max_objects: usize,
    pub max_arrows: usize,
    /// Carrier bound for catalog actions.
    pub max_points: usize,
    /// Bound on base plus carrier points for locale instances.
    pub poset_points: usize,
    /// Arrow bound on groupoids between which functors are enumerated.
    pub functor_arrows: usize,
    pub morita_bound: usize,
}

impl Default for CatalogConfig {
    fn default() -> Self {
        CatalogConfig {
            max_objects: 3,
            max_arrows: 8,
            max_points: 4,
            poset_points: 6,
            functor_arrows: 4,
            morita_bound: 24,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub instance: String,
    pub check: String,
    pub witness: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub instances: usize,
    pub checks: usize,
    pub failures: Vec<Failure>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Check results for one instance.
struct Instance {
    name: String,
    checks: usize,
    failures: Vec<Failure>,
}

impl Instance {
    fn new(name: impl Into<String>) -> Self {
        Instance { name: name.into(), checks: 0, failures: Vec::new() }
    }

    fn check(&mut self, check: &str, witness: Option<String>) {
        self.checks += 1;
        if let Some(w) = witness {
            self.failures.push(Failure { instance: self.name.clone(), check: check.into(), witness: w });
        }
    }

    fn ensure(&mut self, check: &str, holds: bool, witness: impl FnOnce() -> String) {
        self.check(check, (!holds).then(witness));
    }

    fn ok<T>(&mut self, check: &str, r: crate::Result<T>) -> Option<T> {
        match r {
            Ok(v) => {
                self.checks += 1;
                Some(v)
            }
            Err(e) => {
                self.check(check, Some(e.to_string()));
                None
            }
        }
    }
}

fn collect(name: &str, instances: Vec<Instance>) -> SuiteReport {
    SuiteReport {
        name: name.into(),
        instances: instances.len(),
        checks: instances.iter().map(|i| i.checks).sum(),
        failures: instances.into_iter().flat_map(|i| i.failures).collect(),
    }
}

/// The enumerated catalog shared by the suites.
pub struct Catalog {
    pub config: CatalogConfig,
    pub groupoids: Vec<NamedGroupoid>,
    pub quantales: Vec<Arc<Quantale>>,
    /// `(groupoid index, action)`.
    pub actions: Vec<(usize, NamedAction)>,
    pub functors: Vec<NamedFunctor>,
    extra_quantales: Mutex<Vec<Arc<Quantale>>>,
}

impl Catalog {
    pub fn new(config: CatalogConfig) -> crate::Result<Self> {
        let groupoids = catalog::groupoids(config.max_objects, config.max_arrows);
        let quantales = groupoids
            .par_iter()
            .map(|g| Quantale::of_groupoid(g.groupoid.clone()).map(Arc::new))
            .collect::<crate::Result<Vec<_>>>()?;
        let actions = groupoids
            .iter()
            .enumerate()
            .flat_map(|(i, g)| catalog::actions(g, config.max_points).into_iter().map(move |a| (i, a)))
            .collect();
        let functors = catalog::functors(&groupoids, config.functor_arrows);
        Ok(Catalog { config, groupoids, quantales, actions, functors, extra_quantales: Mutex::default() })
    }

    /// `O(G)`, shared with every other instance over an equal groupoid.
    fn quantale(&self, g: &Arc<FinGroupoid>) -> crate::Result<Arc<Quantale>> {
        if let Some(i) = self.groupoids.iter().position(|c| *c.groupoid == **g) {
            return Ok(self.quantales[i].clone());
        }
        if let Some(q) = self.extra_quantales.lock().expect("cache lock").iter().find(|q| q.groupoid().is_some_and(|h| **h == **g)) {
            return Ok(q.clone());
        }
        let q = Arc::new(Quantale::of_groupoid(g.clone())?);
        self.extra_quantales.lock().expect("cache lock").push(q.clone());
        Ok(q)
    }

    fn bisheaf(&self, b: BiAction) -> crate::Result<QRBisheaf> {
        QRBisheaf::with_quantales(self.quantale(b.left())?, self.quantale(b.right())?, b)
    }

    fn sheaf(&self, k: usize) -> crate::Result<QSheaf> {
        let (g, a) = &self.actions[k];
        QSheaf::of_action_over(self.quantales[*g].clone(), a.action.clone())
    }

    /// Bi-actions whose bisheaves the biprincipality suite examines: every
    /// catalog action over its orbits and with trivial right action, units,
    /// small functor bundles, and the duals of all of these.
    pub fn biactions(&self) -> Vec<(String, BiAction)> {
        let mut out = Vec::new();
        for (_, a) in &self.actions {
            out.push((format!("{} over orbits", a.name), BiAction::over_orbits(&a.action)));
            out.push((format!("{} over a point", a.name), BiAction::with_trivial_right(&a.action)));
        }
        for g in &self.groupoids {
            if g.groupoid.arrow_count() <= MAX_BISHEAF_POINTS {
                out.push((format!("unit {}", g.name), BiAction::unit(g.groupoid.clone())));
            }
        }
        for f in &self.functors {
            let b = f.functor.bundle();
            if b.len() <= MAX_BISHEAF_POINTS {
                out.push((format!("<{}>", f.name), b));
            }
        }
        let duals: Vec<(String, BiAction)> = out.iter().map(|(n, b)| (format!("dual {n}"), b.dual())).collect();
        out.extend(duals);
        out
    }
}

pub fn quantale_axioms(cat: &Catalog) -> SuiteReport {
    let instances = cat
        .groupoids
        .par_iter()
        .zip(&cat.quantales)
        .map(|(g, q)| {
            let mut inst = Instance::new(&g.name);
            for c in q.validate_iqf().checks {
                inst.check(&c.name, (!c.passed).then(|| c.witness.unwrap_or_default()));
            }
            if let Some(r) = inst.ok("reconstruction", q.reconstruct_groupoid()) {
                let map: Vec<usize> = (0..r.arrow_count()).collect();
                inst.ensure("reconstruction is isomorphic", g.groupoid.is_isomorphism(&r, &map), || {
                    "atoms do not compose like arrows".into()
                });
            }
            inst
        })
        .collect();
    collect("quantale axioms", instances)
}

pub fn inner_products(cat: &Catalog) -> SuiteReport {
    let instances = (0..cat.actions.len())
        .into_par_iter()
        .map(|k| {
            let mut inst = Instance::new(&cat.actions[k].1.name);
            if let Some(x) = inst.ok("sheaf", cat.sheaf(k)) {
                let oracle = x.inner_oracle();
                inst.check(
                    "fast formula = definition on sections",
                    oracle.disagreement().map(|(a, b)| format!("x = {}, y = {}", x.describe(a), x.describe(b))),
                );
            }
            inst
        })
        .collect();
    collect("inner products", instances)
}

pub fn hilbert_laws(cat: &Catalog) -> SuiteReport {
    let mut instances: Vec<Instance> = (0..cat.actions.len())
        .into_par_iter()
        .map(|k| {
            let mut inst = Instance::new(&cat.actions[k].1.name);
            if let Some(x) = inst.ok("sheaf", cat.sheaf(k)) {
                for c in x.hilbert_laws() {
                    inst.check(&c.name, (!c.passed).then(|| c.witness.unwrap_or_default()));
                }
                inst.check("partial units preserve meets", x.partial_unit_law_witness());
            }
            inst
        })
        .collect();
    instances.extend(cat.biactions().into_par_iter().map(|(name, b)| {
        let mut inst = Instance::new(name);
        if let Some(x) = inst.ok("bisheaf", cat.bisheaf(b)) {
            inst.check("adjointness and projection invariance", x.adjoint_identity_witness());
            let (q, r) = (x.q(), x.r());
            inst.check(
                "spp(x) = ⟨x,x⟩ ∧ e and tspp(x) = [x,x] ∧ e",
                x.lattice()
                    .elements()
                    .find(|&y| {
                        x.spp(y) != q.meet(x.inner(y, y), q.unit()) || x.tspp(y) != r.meet(x.bracket(y, y), r.unit())
                    })
                    .map(|y| x.describe(y)),
            );
        }
        inst
    }).collect::<Vec<_>>());
    collect("Hilbert module laws", instances)
}

/// B-locale instances `(base, carrier, anchor)` with at most `points` points in total.
fn locale_instances(points: usize) -> Vec<(String, Arc<BLocale>)> {
    let posets = catalog::posets(points.saturating_sub(1));
    let mut bases: Vec<(usize, Arc<FinLocale>)> = Vec::new();
    for (i, p) in posets.iter().enumerate() {
        bases.push((i, Arc::new(FinLocale::new(p.clone()))));
    }
    let mut out = Vec::new();
    for (bi, base) in &bases {
        for (xi, xp) in posets.iter().enumerate() {
            if base.point_count() + xp.len() > points {
                continue;
            }
            let carrier = Arc::new(FinLocale::new(xp.clone()));
            for anchor in catalog::monotone_maps(xp, base.poset()) {
                let name = format!("B{bi} X{xi} p={anchor:?}");
                if let Ok(x) = BLocale::from_anchor(base.clone(), carrier.clone(), anchor) {
                    out.push((name, Arc::new(x)));
                }
            }
        }
    }
    out
}

pub fn direct_images(cat: &Catalog) -> SuiteReport {
    let points = cat.config.poset_points;
    let singles = locale_instances(points);
    let mut instances: Vec<Instance> = singles
        .par_iter()
        .map(|(name, x)| {
            let mut inst = Instance::new(name);
            let open = x.support();
            let map_open = x.anchor_map().is_open();
            inst.ensure("support exists iff the anchor is open", open.is_ok() == map_open, || {
                format!("support: {}, open: {map_open}", open.is_ok())
            });
            inst.check("Frobenius on the anchor", if map_open { x.anchor_map().frobenius_witness().map(|w| format!("{w:?}")) } else { None });
            if let Ok(spp) = open {
                let xf = x.frame();
                inst.check(
                    "spp(x)x = x",
                    xf.elements().find(|&y| x.act(spp.apply(y), y) != y).map(|y| xf.describe(y)),
                );
                if let Some(ls) = inst.ok("local sections", x.local_sections()) {
                    inst.ensure("sheaf", ls.sheaf || !x.base().poset().is_discrete() || !x.carrier().poset().is_discrete(), || {
                        "a discrete B-locale is not a sheaf".into()
                    });
                    if ls.sheaf {
                        let ext = locale::extend_from_sections(x, &x.as_module(), |s| s);
                        if let Some(e) = inst.ok("extension of the inclusion", ext) {
                            inst.ensure("inclusion extends to the identity", xf.elements().all(|y| e.apply(y) == y), || {
                                "h♯ ≠ id".into()
                            });
                        }
                        let base_module = locale::BModule::base_itself(x.base().clone());
                        let ext = locale::extend_from_sections(x, &base_module, |s| spp.apply(s));
                        if let Some(e) = inst.ok("extension of the support", ext) {
                            inst.ensure("support extends to itself", xf.elements().all(|y| e.apply(y) == spp.apply(y)), || {
                                "h♯ ≠ spp".into()
                            });
                        }
                        let anchor = x.anchor_points();
                        let fibre_product = anchor.iter().map(|&b| anchor.iter().filter(|&&c| c == b).count()).sum::<usize>();
                        if fibre_product <= points {
                            let diag = SheafHom::identity(x.clone());
                            if let Some(r) = inst.ok("diagonal pairing", pairing_direct_image(&diag, &diag)) {
                                inst.ensure("Δ_!(s) = s⊗s", r.failures.is_empty(), || {
                                    format!("{} sections fail", r.failures.len())
                                });
                            }
                        }
                    }
                }
            }
            inst
        })
        .collect();

    // Pairs over a common base, sized by base plus both carriers.
    let mut pairs = Vec::new();
    for (i, (nx, x)) in singles.iter().enumerate() {
        for (ny, y) in &singles[i..] {
            let total = x.base().point_count() + x.carrier().point_count() + y.carrier().point_count();
            if total <= points && x.base().poset() == y.base().poset() && x.is_open() && y.is_open() {
                pairs.push((format!("{nx} ⊗ {ny}"), x.clone(), y.clone()));
            }
        }
    }
    instances.extend(
        pairs
            .par_iter()
            .map(|(name, x, y)| {
                let mut inst = Instance::new(name);
                if let Some(t) = inst.ok("tensor over the base", tensor_over_base(x, y)) {
                    inst.ensure("generic tensor = pullback", t.routes_agree, || "routes differ".into());
                    inst.check("projection direct images", t.direct_image_witness());
                    inst.check("support of pure tensors", t.support_formula_witness());
                    let sheaves = x.local_sections().map(|s| s.sheaf).unwrap_or(false)
                        && y.local_sections().map(|s| s.sheaf).unwrap_or(false);
                    if sheaves {
                        if let Some(w) = inst.ok("pure section basis", t.section_basis_witness()) {
                            inst.check("pure section basis", w);
                        }
                    }
                }
                let surjective = y.support().map(|s| s.apply(y.frame().top()) == y.base().frame().top()).unwrap_or(false);
                match surjection_pullback_check(y, x) {
                    Ok(w) => inst.ensure("pullback of an open surjection", surjective && w.holds(), || format!("{w:?}")),
                    Err(Error::PreconditionFailed(_)) => {
                        inst.ensure("non-surjection rejected", !surjective, || "surjection rejected".into())
                    }
                    Err(e) => inst.check("pullback of an open surjection", Some(e.to_string())),
                }
                inst
            })
            .collect::<Vec<_>>(),
    );
    collect("direct-image calculus", instances)
}

pub fn principality(cat: &Catalog) -> SuiteReport {
    let instances = (0..cat.actions.len())
        .into_par_iter()
        .map(|k| {
            let a = &cat.actions[k].1.action;
            let mut inst = Instance::new(&cat.actions[k].1.name);
            let Some(x) = inst.ok("sheaf", cat.sheaf(k)) else { return inst };
            let report = x.principal_sections();
            inst.ensure("principal-section conditions agree", report.all_agree, || {
                report.conditions.iter().find(|c| !c.agree()).map(|c| c.section.clone()).unwrap_or_default()
            });
            for c in x.principal_pair_laws() {
                inst.check(&c.name, (!c.passed).then(|| c.witness.unwrap_or_default()));
            }
            if let Some(right) = inst.ok("right structure", x.right_structure()) {
                let set_principal = a.is_free();
                let principal_bisheaf = report.principally_covered && right.is_bisheaf;
                inst.ensure("principally covered bisheaf iff principal bundle", principal_bisheaf == set_principal, || {
                    format!("covered bisheaf: {principal_bisheaf}, free: {set_principal}")
                });
                if principal_bisheaf {
                    inst.ensure("principal sections = bisections", report.principal == right.bisections, || {
                        format!("{} principal, {} bisections", report.principal.len(), right.bisections.len())
                    });
                }
                inst.ensure("invariants are unions of orbits", x.invariants_match_orbits() == Some(true), || {
                    "I(X) ≠ unions of orbits".into()
                });
                if let Some(t) = inst.ok("transitivity splitting", x.check_transitivity_splitting()) {
                    inst.ensure("transitivity splitting", t.holds(), || t.witness.clone().unwrap_or_default());
                }
            }
            if let Some(f) = inst.ok("freeness", x.check_freeness()) {
                inst.ensure("freeness", f.holds(), || format!("{f:?}"));
            }
            if let Some(w) = inst.ok("right adjoint of the action", x.right_adjoint_witness()) {
                inst.check("right adjoint of the action", w);
            }
            inst
        })
        .collect();
    collect("principality", instances)
}

pub fn biprincipality(cat: &Catalog) -> SuiteReport {
    let instances = cat
        .biactions()
        .into_par_iter()
        .map(|(name, b)| {
            let mut inst = Instance::new(name);
            let Some(x) = inst.ok("bisheaf", cat.bisheaf(b)) else { return inst };
            let p = x.is_principal();
            inst.ensure("join forms of the principality conditions", p.remark_agrees, || format!("{:?}", p.remark_forms));
            inst.ensure("principality matches the set-level bundle", p.oracle_agrees, || {
                format!("bisheaf: {}, set: {}", p.principal, p.set_principal)
            });
            let bp = x.is_biprincipal();
            inst.ensure("biprincipality matches both sides and the set level", bp.oracle_agrees, || {
                format!("{bp:?}")
            });
            inst.ensure("biprincipal implies principal", !bp.biprincipal || p.principal, || "biprincipal only".into());
            if bp.biprincipal {
                inst.ensure("fullness", bp.full == Some(true), || "inner products do not generate".into());
                for (side, y) in [("X", x.clone()), ("X*", x.dual())] {
                    if let Some(r) = inst.ok("explicit unit maps", y.unit_map()) {
                        inst.ensure(&format!("{side} ⊗ {side}* ≅ unit via φ and η"), r.holds(), || {
                            r.witness.clone().unwrap_or_default()
                        });
                    }
                }
            }
            match x.interchange_check() {
                Ok(r) => inst.ensure("interchange iff biprincipal", r.agrees, || r.witness.clone().unwrap_or_default()),
                Err(Error::HypothesisFailed(_)) => {
                    inst.ensure("biprincipal satisfies the hypothesis", !bp.biprincipal, || "hypothesis fails".into())
                }
                Err(e) => inst.check("interchange", Some(e.to_string())),
            }
            if p.principal {
                inst.check("meet identity", x.meet_identity_witness());
                let sigma = x.bisections();
                let mut translation = None;
                'outer: for &s in sigma {
                    for &t in sigma {
                        if x.tspp(s) == x.tspp(t) {
                            if let Err(e) = x.translation_element(s, t) {
                                translation = Some(format!("{} / {}: {e}", x.describe(s), x.describe(t)));
                                break 'outer;
                            }
                        }
                    }
                }
                inst.check("unique translating partial unit", translation);
            }
            inst
        })
        .collect();
    collect("biprincipality", instances)
}

pub fn morita_decision(cat: &Catalog) -> SuiteReport {
    let gs = &cat.groupoids;
    let pairs: Vec<(usize, usize)> = (0..gs.len()).flat_map(|i| (0..gs.len()).map(move |j| (i, j))).collect();
    let bound = cat.config.morita_bound;
    let mut instances: Vec<Instance> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (&gs[i], &gs[j]);
            let mut inst = Instance::new(format!("{} ~ {}", a.name, b.name));
            match decide_morita(&a.groupoid, &b.groupoid, bound) {
                Ok(v) => {
                    inst.ensure("verdict agrees with the oracle", v.oracle_agrees, || format!("{:?}", v.certificate));
                    if let Some(c) = &v.witness_checks {
                        inst.ensure("witness is biprincipal with unit isomorphisms", c.hold(), || format!("{c:?}"));
                    }
                    if i == j {
                        inst.ensure("reflexivity", v.equivalent, || "G not equivalent to itself".into());
                    }
                }
                Err(Error::Inconclusive(n)) => {
                    let min = morita::minimal_witness_size(&a.groupoid, &b.groupoid);
                    inst.ensure("inconclusive only below the minimal witness", min.is_some_and(|m| n < m), || {
                        format!("bound {n}, minimal witness {min:?}")
                    });
                }
                Err(e) => inst.check("decision", Some(e.to_string())),
            }
            inst
        })
        .collect();
    let point = Arc::new(FinGroupoid::trivial());
    for n in 1..=3 {
        let mut inst = Instance::new(format!("P{n} ~ T"));
        let p = Arc::new(FinGroupoid::pair(n));
        if let Some(v) = inst.ok("decision", decide_morita(&p, &point, bound)) {
            inst.ensure("pair groupoid is equivalent to a point", v.equivalent && v.oracle_agrees, || {
                format!("{:?}", v.certificate)
            });
        }
        instances.push(inst);
    }
    let mut inst = Instance::new("Z2 ~ T");
    if let Some(v) = inst.ok("decision", decide_morita(&Arc::new(FinGroupoid::cyclic(2)), &point, bound)) {
        inst.ensure("Z2 is not equivalent to a point", !v.equivalent && v.oracle_agrees, || format!("{:?}", v.certificate));
    }
    instances.push(inst);
    collect("Morita decision", instances)
}

pub fn functor_bridge(cat: &Catalog) -> SuiteReport {
    let fs = &cat.functors;
    let mut instances: Vec<Instance> = fs
        .par_iter()
        .map(|f| {
            let mut inst = Instance::new(&f.name);
            let phi = &f.functor;
            let b = phi.bundle();
            inst.ensure("bundle is a bi-action", b.validate().is_empty(), || format!("{:?}", b.validate()));
            inst.ensure("bundle is principal", morita::set_principal(&b), || "not principal".into());
            let section = phi.bundle_unit_section();
            if let Some(back) = inst.ok("functor from the unit section", morita::extract_functor(&b, &section)) {
                inst.ensure("section round trip", back == *phi, || "extracted functor differs".into());
            }
            for s in morita::global_sections(&b) {
                if let Some(psi) = inst.ok("functor from a section", morita::extract_functor(&b, &s)) {
                    inst.ensure("every global section gives an isomorphic bundle", psi.bundle().isomorphism(&b).0.is_some(), || {
                        format!("section {s:?}")
                    });
                }
            }
            let essential = phi.essential_equivalence().holds();
            inst.ensure("essential equivalence iff biprincipal bundle", essential == morita::set_biprincipal(&b), || {
                format!("essential: {essential}")
            });
            if b.len() <= MAX_BISHEAF_POINTS {
                if let Some(x) = inst.ok("bundle bisheaf", cat.bisheaf(b.clone())) {
                    inst.ensure("bundle bisheaf is principal", x.is_principal().principal, || "not principal".into());
                    let s = section.iter().fold(0, |acc, &p| acc | 1 << p);
                    inst.ensure("unit section has full right support", x.right_sheaf().is_section(s) && x.tspp(s) == x.r().unit(), || {
                        x.describe(s)
                    });
                }
                if let Some(m) = inst.ok("HS map", HSMap::of_functor(phi)) {
                    let inv = is_hs_invertible(&m);
                    inst.ensure("essential equivalence implies invertible", !essential || inv.invertible, || "not invertible".into());
                    inst.ensure("invertible iff both unit composites", inv.units_agree, || format!("{inv:?}"));
                }
            }
            inst
        })
        .collect();

    // Composable pairs ψ: K → H, φ: H → G.
    let composable: Vec<(&NamedFunctor, &NamedFunctor)> = fs
        .iter()
        .flat_map(|psi| fs.iter().map(move |phi| (psi, phi)))
        .filter(|(psi, phi)| **psi.functor.target() == **phi.functor.source())
        .collect();
    instances.extend(
        composable
            .par_iter()
            .map(|(psi, phi)| {
                let mut inst = Instance::new(format!("{} ; {}", psi.name, phi.name));
                let (xp, xq) = (phi.functor.bundle(), psi.functor.bundle());
                if let (Some(comp), Some(t)) =
                    (inst.ok("composite functor", psi.functor.then(&phi.functor)), inst.ok("tensor", xp.tensor(&xq)))
                {
                    inst.ensure("<φ∘ψ> ≅ <φ> ⊗ <ψ>", comp.bundle().isomorphism(&t).0.is_some(), || "not isomorphic".into());
                    inst.ensure("tensor of principal bundles is principal", morita::set_principal(&t), || "not principal".into());
                    if let Some(d) = inst.ok("dual tensor", xq.dual().tensor(&xp.dual())) {
                        inst.ensure("(X⊗Y)* ≅ Y*⊗X*", t.dual().isomorphism(&d).0.is_some(), || "not isomorphic".into());
                    }
                }
                if xp.len() <= 4 && xq.len() <= 4 {
                    let bisheaves = cat.bisheaf(xp.clone()).and_then(|x| Ok((x, cat.bisheaf(xq.clone())?)));
                    if let Some((x, y)) = inst.ok("bisheaves", bisheaves) {
                        if let Some(agree) = inst.ok("generic tensor", generic_tensor_agrees(&x, &y)) {
                            inst.ensure("balanced tensor ≅ powerset of the quotient", agree, || "differs".into());
                        }
                        if let Some(t) = inst.ok("bisheaf tensor", tensor_compose(&x, &y)) {
                            inst.ensure("composite bisheaf is principal", t.is_principal().principal, || "not principal".into());
                        }
                    }
                }
                inst
            })
            .collect::<Vec<_>>(),
    );

    // Unit and associativity laws of composition on the smallest maps.
    let tiny: Vec<&NamedFunctor> =
        fs.iter().filter(|f| f.functor.source().arrow_count() <= 2 && f.functor.target().arrow_count() <= 2).collect();
    let mut inst = Instance::new("HS category laws");
    let maps: Vec<HSMap> = tiny.iter().filter_map(|f| HSMap::of_functor(&f.functor).ok()).collect();
    inst.ensure("functor bundles give HS maps", maps.len() == tiny.len(), || "some bundle is not principal".into());
    for f in &maps {
        let left = morita::hs_identity(f.target().clone()).and_then(|id| hs_compose(&id, f));
        let right = morita::hs_identity(f.source().clone()).and_then(|id| hs_compose(f, &id));
        for composite in [left, right] {
            if let Some(c) = inst.ok("unit law", composite) {
                inst.ensure("unit law", c == *f, || "id∘f ≠ f or f∘id ≠ f".into());
            }
        }
        for g in maps.iter().filter(|g| **g.target() == **f.source()) {
            for h in maps.iter().filter(|h| **h.target() == **g.source()) {
                let left = hs_compose(f, g).and_then(|fg| hs_compose(&fg, h));
                let right = hs_compose(g, h).and_then(|gh| hs_compose(f, &gh));
                if let (Some(l), Some(r)) = (inst.ok("associativity", left), inst.ok("associativity", right)) {
                    inst.ensure("associativity", l == r, || "(fg)h ≠ f(gh)".into());
                }
            }
        }
    }
    instances.push(inst);
    collect("functor bridge", instances)
}

pub const SUITES: [&str; 8] = [
    "quantale axioms",
    "inner products",
    "Hilbert module laws",
    "direct-image calculus",
    "principality",
    "biprincipality",
    "Morita decision",
    "functor bridge",
];

/// Runs one suite by its position in [`SUITES`].
pub fn run(cat: &Catalog, index: usize) -> SuiteReport {
    match index {
        0 => quantale_axioms(cat),
        1 => inner_products(cat),
        2 => hilbert_laws(cat),
        3 => direct_images(cat),
        4 => principality(cat),
        5 => biprincipality(cat),
        6 => morita_decision(cat),
        _ => functor_bridge(cat),
    }
}

pub fn run_all(cat: &Catalog) -> Vec<SuiteReport> {
    (0..SUITES.len()).map(|i| run(cat, i)).collect()
}
