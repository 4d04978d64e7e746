//! `qk`: load groupoids and actions from JSON, run the constructions and
//! deciders of `qk-core`, and print a JSON report.

mod input;
mod report;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand};
use qk_core::bimodule::QRBisheaf;
use qk_core::groupoid::FinGroupoid;
use qk_core::morita::{self, HSMap};
use qk_core::qmodule::QSheaf;
use qk_core::quantale::Quantale;
use qk_core::suites::{self, Catalog, CatalogConfig, SUITES};
use serde_json::{json, Value};

use input::{biaction_doc, parse_set, InputError, Loader};
use report::RunReport;

#[derive(Parser)]
#[command(name = "qk", version, about = "Finite groupoid quantales, their sheaves, and Morita equivalence")]
struct Cli {
    /// Print only the JSON report, without the summary on standard error.
    #[arg(long, global = true)]
    json_only: bool,
    /// Worker threads for parallel searches and suites.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the groupoid axioms.
    Validate { groupoid: PathBuf },
    /// Build O(G) and check the inverse quantal frame axioms.
    Quantale {
        groupoid: PathBuf,
        /// Include the involution, supports and products of single arrows.
        #[arg(long)]
        dump: bool,
    },
    /// The sheaf of an action: anchor, basis, inner products and principal sections.
    Sheaf { groupoid: PathBuf, action: PathBuf },
    /// One inner product computed by every available formula.
    Inner {
        groupoid: PathBuf,
        action: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
    /// Principality and biprincipality of a bi-action's bisheaf.
    Bisheaf { biaction: PathBuf },
    /// Compose two Hilsum–Skandalis maps `f ∘ g`.
    HsCompose { f: PathBuf, g: PathBuf },
    /// The principal bundle of a functor and its properties.
    FunctorBundle { functor: PathBuf },
    /// Decide Morita equivalence of two groupoids.
    Morita {
        g1: PathBuf,
        g2: PathBuf,
        /// Largest carrier searched for a witness.
        #[arg(long, default_value_t = 8)]
        bound: usize,
        /// Only compare the orbit and isotropy invariants.
        #[arg(long)]
        oracle_only: bool,
    },
    /// Run invariant suites over the generated catalog.
    Catalog {
        #[arg(long, default_value_t = 3)]
        max_objects: usize,
        /// `full`, or one suite name such as `principality` or `morita-decision`.
        #[arg(long, default_value = "full")]
        suite: String,
    },
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads.max(1)).build_global() {
        eprintln!("qk: thread pool: {e}");
    }
    let mut command = vec!["qk".to_string()];
    command.extend(args.into_iter().skip(1));
    let mut report = RunReport::new(command);
    let mut loader = Loader::default();
    let start = Instant::now();
    let outcome = run(&cli.command, &mut loader, &mut report);
    report.inputs = loader.digests;
    if let Err(e) = outcome {
        match e {
            Failure::Input(e) => report.input_error(&e),
            Failure::Library(e) => report.library_error(&e),
        }
    }
    report.finish();
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    let mut out = std::io::stdout().lock();
    // A closed pipe downstream is not an error of the run.
    let _ = writeln!(out, "{json}").and_then(|()| out.flush());
    if !cli.json_only {
        eprintln!("{} ({:.2}s)", report.summary(), start.elapsed().as_secs_f64());
    }
    std::process::exit(report.status.exit_code());
}

enum Failure {
    Input(InputError),
    Library(qk_core::Error),
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::Input(e)
    }
}

impl From<qk_core::Error> for Failure {
    fn from(e: qk_core::Error) -> Self {
        Failure::Library(e)
    }
}

type Outcome = Result<(), Failure>;

fn run(command: &Command, loader: &mut Loader, report: &mut RunReport) -> Outcome {
    match command {
        Command::Validate { groupoid } => validate(loader, report, groupoid),
        Command::Quantale { groupoid, dump } => quantale(loader, report, groupoid, *dump),
        Command::Sheaf { groupoid, action } => sheaf(loader, report, groupoid, action),
        Command::Inner { groupoid, action, x, y } => inner(loader, report, groupoid, action, x, y),
        Command::Bisheaf { biaction } => bisheaf(loader, report, biaction),
        Command::HsCompose { f, g } => hs_compose(loader, report, f, g),
        Command::FunctorBundle { functor } => functor_bundle(loader, report, functor),
        Command::Morita { g1, g2, bound, oracle_only } => morita(loader, report, g1, g2, *bound, *oracle_only),
        Command::Catalog { max_objects, suite } => catalog(report, *max_objects, suite),
    }
}

fn orbits(g: &FinGroupoid) -> Value {
    g.orbits_isotropy().iter().map(|(size, iso)| json!({ "objects": size, "isotropy": iso.name() })).collect()
}

fn valid_groupoid(loader: &mut Loader, path: &Path) -> Result<Arc<FinGroupoid>, Failure> {
    let g = loader.groupoid(path)?;
    if let Some(v) = g.validate().first() {
        return Err(InputError::Field { path: path.display().to_string(), field: "groupoid".into(), message: v.to_string() }.into());
    }
    Ok(Arc::new(g))
}

/// The action file must act by the groupoid given on the command line.
fn action_over(loader: &mut Loader, g: &Arc<FinGroupoid>, path: &Path) -> Result<qk_core::groupoid::GAction, Failure> {
    let a = loader.action(path)?;
    if **a.groupoid() != **g {
        return Err(InputError::Field {
            path: path.display().to_string(),
            field: "groupoid".into(),
            message: "differs from the groupoid given on the command line".into(),
        }
        .into());
    }
    Ok(a)
}

fn validate(loader: &mut Loader, report: &mut RunReport, path: &Path) -> Outcome {
    let g = loader.groupoid(path)?;
    let violations = g.validate();
    report.check_witness("groupoid axioms", violations.first().map(ToString::to_string));
    report.result = if violations.is_empty() {
        json!({ "objects": g.object_count(), "arrows": g.arrow_count(), "orbits": orbits(&g), "violations": [] })
    } else {
        json!({ "objects": g.object_count(), "arrows": g.arrow_count(), "violations": violations })
    };
    Ok(())
}

fn quantale(loader: &mut Loader, report: &mut RunReport, path: &Path, dump: bool) -> Outcome {
    let g = valid_groupoid(loader, path)?;
    let q = Quantale::of_groupoid(g.clone())?;
    let iqf = q.validate_iqf();
    for c in &iqf.checks {
        report.check_witness(&c.name, c.witness.clone().filter(|_| !c.passed));
    }
    let mut result = json!({
        "elements": q.len(),
        "unit": q.describe(q.unit()),
        "partial_units": q.partial_units().len(),
    });
    if dump {
        let n = g.arrow_count();
        let atom = |f: usize| 1usize << f;
        let atoms: Vec<Value> = (0..n)
            .map(|f| {
                json!({
                    "arrow": g.label(f),
                    "star": q.describe(q.star(atom(f))),
                    "spp": q.describe(q.spp(atom(f))),
                })
            })
            .collect();
        let products: Vec<Value> = (0..n)
            .flat_map(|f| (0..n).map(move |h| (f, h)))
            .filter(|&(f, h)| q.mul(atom(f), atom(h)) != q.bottom())
            .map(|(f, h)| json!([g.label(f), g.label(h), q.describe(q.mul(atom(f), atom(h)))]))
            .collect();
        let units: Vec<String> = q.partial_units().iter().map(|&u| q.describe(u)).collect();
        result["dump"] = json!({ "atoms": atoms, "products": products, "partial_units": units });
    }
    report.result = result;
    Ok(())
}

/// Compares the basis, fast and definitional inner products on every pair.
fn inner_disagreement(s: &QSheaf) -> Option<String> {
    let oracle = s.inner_oracle();
    for x in s.elements() {
        for y in s.elements() {
            let (b, f, o) = (s.inner(x, y), s.inner_fast(x, y), oracle.inner(x, y));
            if b != f || f != o {
                let q = s.quantale();
                return Some(format!(
                    "⟨{},{}⟩: basis {}, fast {}, oracle {}",
                    s.describe(x),
                    s.describe(y),
                    q.describe(b),
                    q.describe(f),
                    q.describe(o)
                ));
            }
        }
    }
    None
}

fn sheaf(loader: &mut Loader, report: &mut RunReport, gpath: &Path, apath: &Path) -> Outcome {
    let g = valid_groupoid(loader, gpath)?;
    let a = action_over(loader, &g, apath)?;
    let q = Arc::new(Quantale::of_groupoid(g.clone())?);
    let s = QSheaf::of_action_over(q.clone(), a.clone())?;
    report.check_witness("inner product formulas agree", inner_disagreement(&s));
    for c in s.hilbert_laws() {
        report.check_witness(&c.name, c.witness.clone().filter(|_| !c.passed));
    }
    let p = s.principal_sections();
    report.check("principal section conditions agree", p.all_agree, || {
        p.conditions.iter().find(|c| !c.agree()).map_or_else(String::new, |c| c.section.clone())
    });
    let n = a.len();
    let anchor: Vec<Value> = (0..n).map(|x| json!([a.points()[x], g.objects()[a.anchor(x)]])).collect();
    let basis: Vec<Value> = (0..n)
        .flat_map(|x| (0..n).map(move |y| (x, y)))
        .filter_map(|(x, y)| {
            let v = s.inner(1 << x, 1 << y);
            (v != q.bottom()).then(|| json!([a.points()[x], a.points()[y], q.describe(v)]))
        })
        .collect();
    let sections: Vec<String> = s.sections().iter().map(|&t| s.describe(t)).collect();
    let principal: Vec<String> = p.principal.iter().map(|&t| s.describe(t)).collect();
    report.result = json!({
        "anchor": anchor,
        "basis_inner_products": basis,
        "free": a.is_free(),
        "sections": sections,
        "principal_sections": principal,
        "principally_covered": p.principally_covered,
        "principal_conditions": p.conditions,
    });
    Ok(())
}

fn inner(loader: &mut Loader, report: &mut RunReport, gpath: &Path, apath: &Path, x: &str, y: &str) -> Outcome {
    let g = valid_groupoid(loader, gpath)?;
    let a = action_over(loader, &g, apath)?;
    let xs = parse_set(x, a.points())?;
    let ys = parse_set(y, a.points())?;
    let q = Arc::new(Quantale::of_groupoid(g)?);
    let s = QSheaf::of_action_over(q.clone(), a)?;
    let (xe, ye) = (xs.bits() as usize, ys.bits() as usize);
    let fast = s.inner_fast(xe, ye);
    let oracle = s.inner_oracle().inner(xe, ye);
    let basis = s.inner(xe, ye);
    report.check("formulas agree", fast == oracle && oracle == basis, || {
        format!("fast {}, oracle {}, basis {}", q.describe(fast), q.describe(oracle), q.describe(basis))
    });
    report.result = json!({
        "x": s.describe(xe),
        "y": s.describe(ye),
        "fast": q.describe(fast),
        "oracle": q.describe(oracle),
        "basis": q.describe(basis),
    });
    Ok(())
}

fn bisheaf_report(report: &mut RunReport, x: &QRBisheaf) -> Value {
    let p = x.is_principal();
    let b = x.is_biprincipal();
    report.check("principality join forms agree", p.remark_agrees, || format!("{:?}", p.remark_forms));
    report.check("principality matches the set-level bundle", p.oracle_agrees, || {
        format!("bisheaf {}, set {}", p.principal, p.set_principal)
    });
    report.check("biprincipality matches the set-level bundle", b.oracle_agrees, || {
        format!("bisheaf {}, set {}", b.biprincipal, b.set_biprincipal)
    });
    let interchange = match x.interchange_check() {
        Ok(r) => {
            report.check("interchange rule iff biprincipal", r.agrees, || r.witness.clone().unwrap_or_default());
            json!(r)
        }
        Err(e) => json!({ "skipped": e.to_string() }),
    };
    let bisections: Vec<String> = x.bisections().iter().map(|&s| x.describe(s)).collect();
    json!({
        "points": x.biaction().len(),
        "bisections": bisections,
        "principality": p,
        "biprincipality": b,
        "interchange": interchange,
    })
}

fn bisheaf(loader: &mut Loader, report: &mut RunReport, path: &Path) -> Outcome {
    let b = loader.biaction(path)?;
    let x = QRBisheaf::new(b)?;
    report.result = bisheaf_report(report, &x);
    Ok(())
}

fn hs_compose(loader: &mut Loader, report: &mut RunReport, fpath: &Path, gpath: &Path) -> Outcome {
    let f = HSMap::new(loader.biaction(fpath)?)?;
    let g = HSMap::new(loader.biaction(gpath)?)?;
    let fg = morita::hs_compose(&f, &g)?;
    let p = fg.bisheaf().is_principal();
    report.check("composite is principal", p.principal, || format!("{:?}", p.conditions));
    report.result = json!({
        "points": fg.representative().len(),
        "composite": biaction_doc(fg.representative()),
    });
    Ok(())
}

fn functor_bundle(loader: &mut Loader, report: &mut RunReport, path: &Path) -> Outcome {
    let phi = loader.functor(path)?;
    let b = phi.bundle();
    let section = phi.bundle_unit_section();
    let back = morita::extract_functor(&b, &section)?;
    report.check("section round trip recovers the functor bundle", back.bundle().isomorphism(&b).0.is_some(), || {
        "extracted functor has a different bundle".into()
    });
    let essential = phi.essential_equivalence();
    let hs = HSMap::new(b.clone())?;
    let inv = morita::is_hs_invertible(&hs);
    report.check("bundle is principal", hs.bisheaf().is_principal().principal, || "not principal".into());
    report.check("essential equivalence gives an invertible map", !essential.holds() || inv.invertible, || {
        "essential equivalence with a non-invertible bundle".into()
    });
    report.check("invertibility matches the unit composites", inv.units_agree, || {
        format!("left unit {}, right unit {}", inv.left_unit, inv.right_unit)
    });
    report.result = json!({
        "bundle": biaction_doc(&b),
        "global_sections": morita::global_sections(&b).len(),
        "essential_equivalence": essential,
        "hs_invertible": inv.invertible,
        "biprincipality": inv.report,
    });
    Ok(())
}

fn morita(loader: &mut Loader, report: &mut RunReport, p1: &Path, p2: &Path, bound: usize, oracle_only: bool) -> Outcome {
    let g1 = valid_groupoid(loader, p1)?;
    let g2 = valid_groupoid(loader, p2)?;
    let oracle = morita::morita_oracle(&g1, &g2);
    let mut result = json!({
        "oracle": oracle,
        "orbits": [orbits(&g1), orbits(&g2)],
        "minimal_witness_size": morita::minimal_witness_size(&g1, &g2),
    });
    if !oracle_only {
        match morita::decide_morita(&g1, &g2, bound) {
            Ok(v) => {
                report.check("search agrees with the oracle", v.oracle_agrees, || {
                    format!("search {}, oracle {}", v.equivalent, v.oracle)
                });
                if let Some(w) = &v.witness_checks {
                    report.check("witness unit conditions", w.hold(), || format!("{w:?}"));
                }
                if let Some(b) = &v.witness {
                    result["witness"] = json!(biaction_doc(b));
                }
                result["verdict"] = json!(v);
            }
            Err(e) => {
                report.result = result;
                return Err(e.into());
            }
        }
    }
    report.result = result;
    Ok(())
}

fn suite_key(name: &str) -> String {
    name.to_lowercase().replace(' ', "-")
}

fn catalog(report: &mut RunReport, max_objects: usize, suite: &str) -> Outcome {
    let selected: Vec<usize> = if suite == "full" {
        (0..SUITES.len()).collect()
    } else {
        let key = suite_key(suite);
        match SUITES.iter().position(|s| suite_key(s) == key || suite_key(s).starts_with(&key)) {
            Some(i) => vec![i],
            None => {
                let known: Vec<String> = SUITES.iter().map(|s| suite_key(s)).collect();
                return Err(InputError::Usage(format!("unknown suite `{suite}`; expected `full` or one of {}", known.join(", "))).into());
            }
        }
    };
    let config = CatalogConfig { max_objects, ..CatalogConfig::default() };
    let cat = Catalog::new(config)?;
    let reports: Vec<_> = selected.iter().map(|&i| suites::run(&cat, i)).collect();
    for r in &reports {
        report.check(&r.name, r.passed(), || {
            let f = &r.failures[0];
            format!("{} failures; first: {} / {}: {}", r.failures.len(), f.instance, f.check, f.witness)
        });
    }
    report.result = json!({
        "config": cat.config,
        "groupoids": cat.groupoids.len(),
        "actions": cat.actions.len(),
        "functors": cat.functors.len(),
        "suites": reports,
    });
    Ok(())
}
