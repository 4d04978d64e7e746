use std::sync::Arc;

use serde::Serialize;

use super::{BiAction, FinGroupoid};
use crate::error::{Error, Result};

/// A functor `φ : H → G` given by its object and arrow maps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupoidFunctor {
    source: Arc<FinGroupoid>,
    target: Arc<FinGroupoid>,
    objects: Vec<usize>,
    arrows: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EssentialEquivalenceReport {
    pub essentially_surjective: bool,
    pub fully_faithful: bool,
    /// A target object outside the essential image, or a hom-set where the map fails to be bijective.
    pub witness: Option<String>,
}

impl EssentialEquivalenceReport {
    pub fn holds(&self) -> bool {
        self.essentially_surjective && self.fully_faithful
    }
}

impl GroupoidFunctor {
    pub fn new(
        source: Arc<FinGroupoid>,
        target: Arc<FinGroupoid>,
        objects: Vec<usize>,
        arrows: Vec<usize>,
    ) -> Result<Self> {
        let f = GroupoidFunctor { source, target, objects, arrows };
        match f.violation() {
            None => Ok(f),
            Some(v) => Err(Error::InvalidFunctor(v)),
        }
    }

    fn violation(&self) -> Option<String> {
        let (h, g) = (&self.source, &self.target);
        if self.objects.len() != h.object_count() || self.arrows.len() != h.arrow_count() {
            return Some("object or arrow map has the wrong length".into());
        }
        if self.objects.iter().any(|&o| o >= g.object_count()) || self.arrows.iter().any(|&a| a >= g.arrow_count()) {
            return Some("map lands outside the target".into());
        }
        for a in 0..h.arrow_count() {
            let fa = self.arrows[a];
            if g.dom(fa) != self.objects[h.dom(a)] || g.cod(fa) != self.objects[h.cod(a)] {
                return Some(format!("{} ↦ {} has the wrong endpoints", h.label(a), g.label(fa)));
            }
        }
        for o in 0..h.object_count() {
            if self.arrows[h.id(o)] != g.id(self.objects[o]) {
                return Some(format!("identity at {} not preserved", h.objects()[o]));
            }
        }
        for a in 0..h.arrow_count() {
            for b in 0..h.arrow_count() {
                if let Some(ab) = h.comp(a, b) {
                    if g.comp(self.arrows[a], self.arrows[b]) != Some(self.arrows[ab]) {
                        return Some(format!("{}∘{} not preserved", h.label(a), h.label(b)));
                    }
                }
            }
        }
        None
    }

    pub fn identity(g: Arc<FinGroupoid>) -> Self {
        GroupoidFunctor {
            objects: (0..g.object_count()).collect(),
            arrows: (0..g.arrow_count()).collect(),
            source: g.clone(),
            target: g,
        }
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &GroupoidFunctor) -> Result<Self> {
        if *self.target != *other.source {
            return Err(Error::InvalidFunctor("composable functors must share a groupoid".into()));
        }
        Ok(GroupoidFunctor {
            source: self.source.clone(),
            target: other.target.clone(),
            objects: self.objects.iter().map(|&o| other.objects[o]).collect(),
            arrows: self.arrows.iter().map(|&a| other.arrows[a]).collect(),
        })
    }

    pub fn source(&self) -> &Arc<FinGroupoid> {
        &self.source
    }

    pub fn target(&self) -> &Arc<FinGroupoid> {
        &self.target
    }

    pub fn object(&self, o: usize) -> usize {
        self.objects[o]
    }

    pub fn arrow(&self, a: usize) -> usize {
        self.arrows[a]
    }

    pub fn object_map(&self) -> &[usize] {
        &self.objects
    }

    pub fn arrow_map(&self) -> &[usize] {
        &self.arrows
    }

    /// Every functor `source → target`, by backtracking over arrows with
    /// composition checked as soon as all three arrows of a composite are placed.
    pub fn enumerate(source: &Arc<FinGroupoid>, target: &Arc<FinGroupoid>) -> Vec<GroupoidFunctor> {
        let (h, g) = (source.as_ref(), target.as_ref());
        let mut out = Vec::new();
        let no = h.object_count();
        let mut objects = vec![0; no];
        loop {
            let mut arrows = vec![usize::MAX; h.arrow_count()];
            Self::extend_arrows(h, g, &objects, &mut arrows, 0, &mut |arrows| {
                out.push(GroupoidFunctor {
                    source: source.clone(),
                    target: target.clone(),
                    objects: objects.clone(),
                    arrows: arrows.to_vec(),
                });
            });
            // Next object assignment in lexicographic order.
            let mut k = no;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                objects[k] += 1;
                if objects[k] < g.object_count() {
                    break;
                }
                objects[k] = 0;
            }
        }
    }

    fn extend_arrows(
        h: &FinGroupoid,
        g: &FinGroupoid,
        objects: &[usize],
        arrows: &mut Vec<usize>,
        next: usize,
        emit: &mut dyn FnMut(&[usize]),
    ) {
        if next == arrows.len() {
            emit(arrows);
            return;
        }
        let candidates: Vec<usize> = if h.is_identity(next) {
            vec![g.id(objects[h.dom(next)])]
        } else {
            g.hom(objects[h.dom(next)], objects[h.cod(next)]).collect()
        };
        for c in candidates {
            arrows[next] = c;
            if Self::consistent(h, g, arrows, next) {
                Self::extend_arrows(h, g, objects, arrows, next + 1, emit);
            }
        }
        arrows[next] = usize::MAX;
    }

    fn consistent(h: &FinGroupoid, g: &FinGroupoid, arrows: &[usize], placed: usize) -> bool {
        let known = |a: usize| arrows[a] != usize::MAX;
        for a in 0..h.arrow_count() {
            if !known(a) {
                continue;
            }
            for b in 0..h.arrow_count() {
                if !known(b) {
                    continue;
                }
                let Some(ab) = h.comp(a, b) else { continue };
                if !known(ab) || (a != placed && b != placed && ab != placed) {
                    continue;
                }
                if g.comp(arrows[a], arrows[b]) != Some(arrows[ab]) {
                    return false;
                }
            }
        }
        true
    }

    /// Essentially surjective and fully faithful.
    pub fn essential_equivalence(&self) -> EssentialEquivalenceReport {
        let (h, g) = (&self.source, &self.target);
        let mut report = EssentialEquivalenceReport {
            essentially_surjective: true,
            fully_faithful: true,
            witness: None,
        };
        for t in 0..g.object_count() {
            if !self.objects.iter().any(|&o| g.hom(o, t).next().is_some()) {
                report.essentially_surjective = false;
                report.witness = Some(format!("object {} is not isomorphic to any image", g.objects()[t]));
                break;
            }
        }
        'outer: for a in 0..h.object_count() {
            for b in 0..h.object_count() {
                let mut image: Vec<usize> = h.hom(a, b).map(|f| self.arrows[f]).collect();
                let expected = g.hom(self.objects[a], self.objects[b]).count();
                let before = image.len();
                image.sort_unstable();
                image.dedup();
                if image.len() != before || image.len() != expected {
                    report.fully_faithful = false;
                    if report.witness.is_none() {
                        report.witness = Some(format!(
                            "hom({},{}) has {before} arrows, its image {} of {expected}",
                            h.objects()[a],
                            h.objects()[b],
                            image.len()
                        ));
                    }
                    break 'outer;
                }
            }
        }
        report
    }

    /// The `G`-`H` bi-action on `{(g, b) : dom g = φ(b)}`:
    /// `f·(g,b) = (f∘g, b)` and `(g,b)·h = (g∘φ(h), dom h)`.
    pub fn bundle(&self) -> BiAction {
        let (h, g) = (&self.source, &self.target);
        let mut pts: Vec<(usize, usize)> = Vec::new();
        for b in 0..h.object_count() {
            for a in 0..g.arrow_count() {
                if g.dom(a) == self.objects[b] {
                    pts.push((a, b));
                }
            }
        }
        let n = pts.len();
        let index = |p: (usize, usize)| pts.iter().position(|&q| q == p).expect("closed");
        let labels = pts
            .iter()
            .map(|&(a, b)| format!("{}|{}", g.label(a), h.objects()[b]))
            .collect();
        let left_act = (0..g.arrow_count() * n)
            .map(|k| {
                let (f, (a, b)) = (k / n, pts[k % n]);
                g.comp(f, a).map(|fa| index((fa, b)))
            })
            .collect();
        let right_act = (0..h.arrow_count() * n)
            .map(|k| {
                let (e, (a, b)) = (k / n, pts[k % n]);
                if h.cod(e) != b {
                    return None;
                }
                let ae = g.comp(a, self.arrows[e]).expect("typed");
                Some(index((ae, h.dom(e))))
            })
            .collect();
        BiAction::from_tables(
            g.clone(),
            h.clone(),
            labels,
            pts.iter().map(|&(a, _)| g.cod(a)).collect(),
            pts.iter().map(|&(_, b)| b).collect(),
            left_act,
            right_act,
        )
    }

    /// Index of the point `(id_{φ b}, b)` of the bundle, for each object `b`.
    pub fn bundle_unit_section(&self) -> Vec<usize> {
        let bundle = self.bundle();
        (0..self.source.object_count())
            .map(|b| {
                let label = format!("{}|{}", self.target.label(self.target.id(self.objects[b])), self.source.objects()[b]);
                bundle.points().iter().position(|p| *p == label).expect("present")
            })
            .collect()
    }
}
