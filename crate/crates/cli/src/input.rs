//! JSON input documents and their conversion to core structures.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use qk_core::bits::SmallSet;
use qk_core::groupoid::{Arrow, BiAction, FinGroupoid, GAction, GroupoidFunctor};
use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}:{line}:{column}: {message}")]
    Syntax { path: String, line: usize, column: usize, message: String },
    #[error("{path}: field `{field}`: {message}")]
    Field { path: String, field: String, message: String },
    #[error("{0}")]
    Usage(String),
}

/// An atom name; JSON strings and integers are both accepted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Name(pub String);

impl<'de> Deserialize<'de> for Name {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            S(String),
            N(i64),
        }
        Ok(match Raw::deserialize(d)? {
            Raw::S(s) => Name(s),
            Raw::N(n) => Name(n.to_string()),
        })
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn names(v: &[String]) -> Vec<Name> {
    v.iter().cloned().map(Name).collect()
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ArrowDoc {
    pub id: Name,
    pub dom: Name,
    pub cod: Name,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GroupoidDoc {
    pub objects: Vec<Name>,
    pub arrows: Vec<ArrowDoc>,
    /// `[f, g, f∘g]`, defined when `dom f = cod g`.
    pub comp: Vec<(Name, Name, Name)>,
    pub inv: Vec<(Name, Name)>,
    pub ids: Vec<(Name, Name)>,
}

/// A groupoid given by a path (relative to the referring file) or inline.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum GroupoidRef {
    Path(String),
    Inline(GroupoidDoc),
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ActionDoc {
    pub groupoid: GroupoidRef,
    pub carrier: Vec<Name>,
    pub anchor: Vec<(Name, Name)>,
    /// `[g, x, g·x]`.
    pub act: Vec<(Name, Name, Name)>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BiActionDoc {
    pub left: GroupoidRef,
    pub right: GroupoidRef,
    pub carrier: Vec<Name>,
    pub left_anchor: Vec<(Name, Name)>,
    pub right_anchor: Vec<(Name, Name)>,
    /// `[g, x, g·x]`.
    pub left_act: Vec<(Name, Name, Name)>,
    /// `[x, h, x·h]`.
    pub right_act: Vec<(Name, Name, Name)>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FunctorDoc {
    pub source: GroupoidRef,
    pub target: GroupoidRef,
    pub objects: Vec<(Name, Name)>,
    pub arrows: Vec<(Name, Name)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Reads input files, remembering the digest of each in first-read order.
#[derive(Default)]
pub struct Loader {
    pub digests: Vec<InputDigest>,
}

struct Ctx<'a> {
    path: &'a str,
}

impl Ctx<'_> {
    fn err(&self, field: impl Into<String>, message: impl Into<String>) -> InputError {
        InputError::Field { path: self.path.to_string(), field: field.into(), message: message.into() }
    }

    fn index(&self, table: &[String], kind: &str) -> Result<HashMap<String, usize>, InputError> {
        let mut out = HashMap::new();
        for (i, n) in table.iter().enumerate() {
            if out.insert(n.clone(), i).is_some() {
                return Err(self.err(format!("{kind}[{i}]"), format!("duplicate name `{n}`")));
            }
        }
        Ok(out)
    }

    fn lookup(&self, map: &HashMap<String, usize>, name: &Name, field: String, kind: &str) -> Result<usize, InputError> {
        map.get(&name.0).copied().ok_or_else(|| self.err(field, format!("unknown {kind} `{name}`")))
    }
}

impl Loader {
    pub fn read(&mut self, path: &Path) -> Result<String, InputError> {
        let shown = path.display().to_string();
        let bytes = std::fs::read(path).map_err(|e| InputError::Io { path: shown.clone(), message: e.to_string() })?;
        if !self.digests.iter().any(|d| d.path == shown) {
            self.digests.push(InputDigest { path: shown.clone(), sha256: hex::encode(Sha256::digest(&bytes)) });
        }
        String::from_utf8(bytes).map_err(|_| InputError::Io { path: shown, message: "not UTF-8".into() })
    }

    fn parse<T: serde::de::DeserializeOwned>(&mut self, path: &Path) -> Result<T, InputError> {
        let text = self.read(path)?;
        serde_json::from_str(&text).map_err(|e| InputError::Syntax {
            path: path.display().to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    fn resolve(&mut self, r: &GroupoidRef, from: &Path, field: &str) -> Result<FinGroupoid, InputError> {
        match r {
            GroupoidRef::Path(p) => {
                let target = from.parent().map_or_else(|| PathBuf::from(p), |d| d.join(p));
                self.groupoid(&target)
            }
            GroupoidRef::Inline(doc) => {
                let shown = format!("{}#{field}", from.display());
                groupoid_from_doc(doc, &shown)
            }
        }
    }

    /// The groupoid tables as written; axioms are not checked here.
    pub fn groupoid(&mut self, path: &Path) -> Result<FinGroupoid, InputError> {
        let doc: GroupoidDoc = self.parse(path)?;
        groupoid_from_doc(&doc, &path.display().to_string())
    }

    pub fn action(&mut self, path: &Path) -> Result<GAction, InputError> {
        let doc: ActionDoc = self.parse(path)?;
        let g = Arc::new(valid(self.resolve(&doc.groupoid, path, "groupoid")?, path)?);
        let shown = path.display().to_string();
        let ctx = Ctx { path: &shown };
        let carrier: Vec<String> = doc.carrier.iter().map(|n| n.0.clone()).collect();
        let points = ctx.index(&carrier, "carrier")?;
        let anchor = anchors(&ctx, &g, &points, &carrier, &doc.anchor, "anchor")?;
        let n = carrier.len();
        let arrows = arrow_index(&g);
        let objects = object_index(&g);
        let _ = objects;
        let mut act = vec![None; g.arrow_count() * n];
        for (i, (f, x, y)) in doc.act.iter().enumerate() {
            let field = format!("act[{i}]");
            let f = ctx.lookup(&arrows, f, field.clone(), "arrow")?;
            let x = ctx.lookup(&points, x, field.clone(), "point")?;
            let y = ctx.lookup(&points, y, field.clone(), "point")?;
            set_once(&ctx, &mut act[f * n + x], y, field)?;
        }
        let a = GAction::from_tables(g, carrier, anchor, act);
        if let Some(v) = a.validate().first() {
            return Err(ctx.err("act", v.to_string()));
        }
        Ok(a)
    }

    pub fn biaction(&mut self, path: &Path) -> Result<BiAction, InputError> {
        let doc: BiActionDoc = self.parse(path)?;
        let left = Arc::new(valid(self.resolve(&doc.left, path, "left")?, path)?);
        let right = Arc::new(valid(self.resolve(&doc.right, path, "right")?, path)?);
        let shown = path.display().to_string();
        let ctx = Ctx { path: &shown };
        let carrier: Vec<String> = doc.carrier.iter().map(|n| n.0.clone()).collect();
        let points = ctx.index(&carrier, "carrier")?;
        let left_anchor = anchors(&ctx, &left, &points, &carrier, &doc.left_anchor, "left_anchor")?;
        let right_anchor = anchors(&ctx, &right, &points, &carrier, &doc.right_anchor, "right_anchor")?;
        let n = carrier.len();
        let (la, ra) = (arrow_index(&left), arrow_index(&right));
        let mut left_act = vec![None; left.arrow_count() * n];
        for (i, (g, x, y)) in doc.left_act.iter().enumerate() {
            let field = format!("left_act[{i}]");
            let g = ctx.lookup(&la, g, field.clone(), "arrow")?;
            let x = ctx.lookup(&points, x, field.clone(), "point")?;
            let y = ctx.lookup(&points, y, field.clone(), "point")?;
            set_once(&ctx, &mut left_act[g * n + x], y, field)?;
        }
        let mut right_act = vec![None; right.arrow_count() * n];
        for (i, (x, h, y)) in doc.right_act.iter().enumerate() {
            let field = format!("right_act[{i}]");
            let x = ctx.lookup(&points, x, field.clone(), "point")?;
            let h = ctx.lookup(&ra, h, field.clone(), "arrow")?;
            let y = ctx.lookup(&points, y, field.clone(), "point")?;
            set_once(&ctx, &mut right_act[h * n + x], y, field)?;
        }
        let b = BiAction::from_tables(left, right, carrier, left_anchor, right_anchor, left_act, right_act);
        if let Some(v) = b.validate().first() {
            return Err(ctx.err("left_act/right_act", v.to_string()));
        }
        Ok(b)
    }

    pub fn functor(&mut self, path: &Path) -> Result<GroupoidFunctor, InputError> {
        let doc: FunctorDoc = self.parse(path)?;
        let source = Arc::new(valid(self.resolve(&doc.source, path, "source")?, path)?);
        let target = Arc::new(valid(self.resolve(&doc.target, path, "target")?, path)?);
        let shown = path.display().to_string();
        let ctx = Ctx { path: &shown };
        let (so, to) = (object_index(&source), object_index(&target));
        let (sa, ta) = (arrow_index(&source), arrow_index(&target));
        let mut objects = vec![None; source.object_count()];
        for (i, (h, g)) in doc.objects.iter().enumerate() {
            let field = format!("objects[{i}]");
            let h = ctx.lookup(&so, h, field.clone(), "source object")?;
            let g = ctx.lookup(&to, g, field.clone(), "target object")?;
            set_once(&ctx, &mut objects[h], g, field)?;
        }
        let mut arrows = vec![None; source.arrow_count()];
        for (i, (h, g)) in doc.arrows.iter().enumerate() {
            let field = format!("arrows[{i}]");
            let h = ctx.lookup(&sa, h, field.clone(), "source arrow")?;
            let g = ctx.lookup(&ta, g, field.clone(), "target arrow")?;
            set_once(&ctx, &mut arrows[h], g, field)?;
        }
        let objects = complete(&ctx, objects, "objects", |i| source.objects()[i].clone())?;
        let arrows = complete(&ctx, arrows, "arrows", |i| source.label(i).to_string())?;
        GroupoidFunctor::new(source, target, objects, arrows).map_err(|e| ctx.err("arrows", e.to_string()))
    }
}

fn valid(g: FinGroupoid, path: &Path) -> Result<FinGroupoid, InputError> {
    match g.validate().first() {
        None => Ok(g),
        Some(v) => Err(InputError::Field { path: path.display().to_string(), field: "groupoid".into(), message: v.to_string() }),
    }
}

fn object_index(g: &FinGroupoid) -> HashMap<String, usize> {
    g.objects().iter().enumerate().map(|(i, o)| (o.clone(), i)).collect()
}

fn arrow_index(g: &FinGroupoid) -> HashMap<String, usize> {
    g.arrows().iter().enumerate().map(|(i, a)| (a.label.clone(), i)).collect()
}

fn set_once(ctx: &Ctx, slot: &mut Option<usize>, value: usize, field: String) -> Result<(), InputError> {
    match *slot {
        Some(old) if old != value => Err(ctx.err(field, "conflicts with an earlier entry")),
        _ => {
            *slot = Some(value);
            Ok(())
        }
    }
}

fn complete(
    ctx: &Ctx,
    v: Vec<Option<usize>>,
    field: &str,
    label: impl Fn(usize) -> String,
) -> Result<Vec<usize>, InputError> {
    v.iter()
        .enumerate()
        .map(|(i, x)| x.ok_or_else(|| ctx.err(field, format!("no entry for `{}`", label(i)))))
        .collect()
}

fn anchors(
    ctx: &Ctx,
    g: &FinGroupoid,
    points: &HashMap<String, usize>,
    carrier: &[String],
    entries: &[(Name, Name)],
    field: &str,
) -> Result<Vec<usize>, InputError> {
    let objects = object_index(g);
    let mut out = vec![None; carrier.len()];
    for (i, (x, o)) in entries.iter().enumerate() {
        let f = format!("{field}[{i}]");
        let x = ctx.lookup(points, x, f.clone(), "point")?;
        let o = ctx.lookup(&objects, o, f.clone(), "object")?;
        set_once(ctx, &mut out[x], o, f)?;
    }
    complete(ctx, out, field, |i| carrier[i].clone())
}

pub fn groupoid_from_doc(doc: &GroupoidDoc, path: &str) -> Result<FinGroupoid, InputError> {
    let ctx = Ctx { path };
    let objects: Vec<String> = doc.objects.iter().map(|n| n.0.clone()).collect();
    let oi = ctx.index(&objects, "objects")?;
    let labels: Vec<String> = doc.arrows.iter().map(|a| a.id.0.clone()).collect();
    let ai = ctx.index(&labels, "arrows")?;
    let mut arrows = Vec::with_capacity(labels.len());
    for (i, a) in doc.arrows.iter().enumerate() {
        let field = format!("arrows[{i}]");
        let dom = ctx.lookup(&oi, &a.dom, field.clone(), "object")?;
        let cod = ctx.lookup(&oi, &a.cod, field, "object")?;
        arrows.push(Arrow { label: a.id.0.clone(), dom, cod });
    }
    let n = arrows.len();
    let mut comp = vec![None; n * n];
    for (i, (f, g, fg)) in doc.comp.iter().enumerate() {
        let field = format!("comp[{i}]");
        let f = ctx.lookup(&ai, f, field.clone(), "arrow")?;
        let g = ctx.lookup(&ai, g, field.clone(), "arrow")?;
        let fg = ctx.lookup(&ai, fg, field.clone(), "arrow")?;
        set_once(&ctx, &mut comp[f * n + g], fg, field)?;
    }
    let mut inv = vec![None; n];
    for (i, (f, g)) in doc.inv.iter().enumerate() {
        let field = format!("inv[{i}]");
        let f = ctx.lookup(&ai, f, field.clone(), "arrow")?;
        let g = ctx.lookup(&ai, g, field.clone(), "arrow")?;
        set_once(&ctx, &mut inv[f], g, field)?;
    }
    let mut ids = vec![None; objects.len()];
    for (i, (o, f)) in doc.ids.iter().enumerate() {
        let field = format!("ids[{i}]");
        let o = ctx.lookup(&oi, o, field.clone(), "object")?;
        let f = ctx.lookup(&ai, f, field.clone(), "arrow")?;
        set_once(&ctx, &mut ids[o], f, field)?;
    }
    let inv = complete(&ctx, inv, "inv", |i| labels[i].clone())?;
    let ids = complete(&ctx, ids, "ids", |i| objects[i].clone())?;
    Ok(FinGroupoid::from_tables(objects, arrows, comp, inv, ids))
}

pub fn groupoid_doc(g: &FinGroupoid) -> GroupoidDoc {
    let label = |f: usize| Name(g.label(f).to_string());
    let n = g.arrow_count();
    GroupoidDoc {
        objects: names(g.objects()),
        arrows: (0..n)
            .map(|f| ArrowDoc { id: label(f), dom: Name(g.objects()[g.dom(f)].clone()), cod: Name(g.objects()[g.cod(f)].clone()) })
            .collect(),
        comp: (0..n)
            .flat_map(|f| (0..n).map(move |h| (f, h)))
            .filter_map(|(f, h)| g.comp(f, h).map(|fh| (label(f), label(h), label(fh))))
            .collect(),
        inv: (0..n).map(|f| (label(f), label(g.inv(f)))).collect(),
        ids: (0..g.object_count()).map(|o| (Name(g.objects()[o].clone()), label(g.id(o)))).collect(),
    }
}

/// A bi-action in the input format, with both groupoids inline.
pub fn biaction_doc(b: &BiAction) -> BiActionDoc {
    let (l, r) = (b.left(), b.right());
    let p = |x: usize| Name(b.points()[x].clone());
    let n = b.len();
    BiActionDoc {
        left: GroupoidRef::Inline(groupoid_doc(l)),
        right: GroupoidRef::Inline(groupoid_doc(r)),
        carrier: names(b.points()),
        left_anchor: (0..n).map(|x| (p(x), Name(l.objects()[b.left_anchor(x)].clone()))).collect(),
        right_anchor: (0..n).map(|x| (p(x), Name(r.objects()[b.right_anchor(x)].clone()))).collect(),
        left_act: (0..l.arrow_count())
            .flat_map(|g| (0..n).filter_map(move |x| b.act_left(g, x).map(|y| (g, x, y))))
            .map(|(g, x, y)| (Name(l.label(g).to_string()), p(x), p(y)))
            .collect(),
        right_act: (0..n)
            .flat_map(|x| (0..r.arrow_count()).filter_map(move |h| b.act_right(x, h).map(|y| (x, h, y))))
            .map(|(x, h, y)| (p(x), Name(r.label(h).to_string()), p(y)))
            .collect(),
    }
}

/// Parses `{a,b}` over the carrier, `1` for the top and `0` for the bottom.
pub fn parse_set(expr: &str, carrier: &[String]) -> Result<SmallSet, InputError> {
    let e = expr.trim();
    match e {
        "1" => return Ok(SmallSet::full(carrier.len())),
        "0" => return Ok(SmallSet::default()),
        _ => {}
    }
    let inner = e
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| InputError::Usage(format!("set expression `{expr}`: expected `{{a,b,..}}`, `1` or `0`")))?;
    let mut out = SmallSet::default();
    for atom in inner.split(',').map(str::trim).filter(|a| !a.is_empty()) {
        let i = carrier
            .iter()
            .position(|c| c == atom)
            .ok_or_else(|| InputError::Usage(format!("set expression `{expr}`: unknown atom `{atom}`")))?;
        out.insert(i);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_expressions() {
        let c: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        assert_eq!(parse_set("1", &c).unwrap(), SmallSet::full(3));
        assert!(parse_set("0", &c).unwrap().is_empty());
        assert_eq!(parse_set("{ a , c }", &c).unwrap().iter().collect::<Vec<_>>(), [0, 2]);
        assert!(parse_set("{}", &c).unwrap().is_empty());
        assert!(parse_set("{d}", &c).is_err());
        assert!(parse_set("a", &c).is_err());
    }

    #[test]
    fn groupoid_documents_round_trip() {
        let g = FinGroupoid::connected(2, &qk_core::groupoid::GroupTable::cyclic(2));
        let back = groupoid_from_doc(&groupoid_doc(&g), "mem").unwrap();
        assert_eq!(back, g);
    }
}
