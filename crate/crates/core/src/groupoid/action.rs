use std::sync::Arc;

use super::{push_once, FinGroupoid, Violation};
use crate::bits::SmallSet;
use crate::error::{Error, Result};

/// A left action on a finite set: `g·x` is defined iff `dom g = p(x)` and lies over `cod g`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GAction {
    groupoid: Arc<FinGroupoid>,
    points: Vec<String>,
    anchor: Vec<usize>,
    /// `act[g * n + x]`.
    act: Vec<Option<usize>>,
}

impl GAction {
    pub fn from_tables(
        groupoid: Arc<FinGroupoid>,
        points: Vec<String>,
        anchor: Vec<usize>,
        act: Vec<Option<usize>>,
    ) -> Self {
        GAction { groupoid, points, anchor, act }
    }

    pub fn new(
        groupoid: Arc<FinGroupoid>,
        points: Vec<String>,
        anchor: Vec<usize>,
        act: Vec<Option<usize>>,
    ) -> Result<Self> {
        let a = Self::from_tables(groupoid, points, anchor, act);
        match a.validate().first() {
            None => Ok(a),
            Some(v) => Err(Error::InvalidAction(v.to_string())),
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        let g = &self.groupoid;
        let n = self.points.len();
        let mut out = Vec::new();
        if self.anchor.len() != n || self.act.len() != g.arrow_count() * n {
            out.push(Violation::new("tables", "anchor or action table has the wrong size"));
            return out;
        }
        if n > SmallSet::CAPACITY {
            out.push(Violation::new("size", format!("{n} points exceed the supported 64")));
            return out;
        }
        if let Some(x) = (0..n).find(|&x| self.anchor[x] >= g.object_count()) {
            out.push(Violation::new("tables", format!("point {} has no anchor object", self.points[x])));
            return out;
        }
        let mut first = |axiom: &str, w: String| push_once(&mut out, axiom, w);
        for f in 0..g.arrow_count() {
            for x in 0..n {
                let defined = g.dom(f) == self.anchor[x];
                match self.act(f, x) {
                    Some(y) if y >= n => first("tables", format!("{}·{} out of range", g.label(f), self.points[x])),
                    Some(_) if !defined => {
                        first("anchoring", format!("{}·{} defined off the anchor", g.label(f), self.points[x]))
                    }
                    None if defined => {
                        first("anchoring", format!("{}·{} undefined", g.label(f), self.points[x]))
                    }
                    Some(y) if self.anchor[y] != g.cod(f) => {
                        first("anchoring", format!("{}·{} lands off cod", g.label(f), self.points[x]))
                    }
                    _ => {}
                }
            }
        }
        if !out.is_empty() {
            return out;
        }
        let mut first = |axiom: &str, w: String| push_once(&mut out, axiom, w);
        for x in 0..n {
            if self.act(g.id(self.anchor[x]), x) != Some(x) {
                first("unit", format!("id·{} ≠ {}", self.points[x], self.points[x]));
            }
        }
        for f in 0..g.arrow_count() {
            for h in 0..g.arrow_count() {
                let Some(fh) = g.comp(f, h) else { continue };
                for x in 0..n {
                    if let Some(hx) = self.act(h, x) {
                        if self.act(f, hx) != self.act(fh, x) {
                            first(
                                "associativity",
                                format!("{}·({}·{}) ≠ ({}∘{})·{}", g.label(f), g.label(h), self.points[x], g.label(f), g.label(h), self.points[x]),
                            );
                        }
                    }
                }
            }
        }
        out
    }

    /// The groupoid acting on its own arrows by composition, anchored at `cod`.
    pub fn regular(groupoid: Arc<FinGroupoid>) -> Self {
        let n = groupoid.arrow_count();
        let points = (0..n).map(|f| groupoid.label(f).to_string()).collect();
        let anchor = (0..n).map(|f| groupoid.cod(f)).collect();
        let act = (0..n * n).map(|k| groupoid.comp(k / n, k % n)).collect();
        GAction { groupoid, points, anchor, act }
    }

    /// The groupoid acting on its objects: `g·dom g = cod g`.
    pub fn tautological(groupoid: Arc<FinGroupoid>) -> Self {
        let n = groupoid.object_count();
        let points = groupoid.objects().to_vec();
        let anchor = (0..n).collect();
        let act = (0..groupoid.arrow_count() * n)
            .map(|k| {
                let (f, x) = (k / n, k % n);
                (groupoid.dom(f) == x).then(|| groupoid.cod(f))
            })
            .collect();
        GAction { groupoid, points, anchor, act }
    }

    /// The transitive action on `{g : dom g = base}` modulo `g ~ g∘k` for `k ∈ subgroup`.
    pub fn cosets(groupoid: Arc<FinGroupoid>, base: usize, subgroup: &[usize]) -> Self {
        let from_base: Vec<usize> =
            (0..groupoid.arrow_count()).filter(|&f| groupoid.dom(f) == base).collect();
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut class_of = vec![usize::MAX; groupoid.arrow_count()];
        for &f in &from_base {
            if class_of[f] != usize::MAX {
                continue;
            }
            let mut cls: Vec<usize> = subgroup
                .iter()
                .map(|&k| groupoid.comp(f, k).expect("subgroup lives at the base"))
                .collect();
            cls.sort_unstable();
            cls.dedup();
            for &c in &cls {
                class_of[c] = classes.len();
            }
            classes.push(cls);
        }
        let n = classes.len();
        let points = classes
            .iter()
            .map(|c| {
                if c.len() == 1 {
                    groupoid.label(c[0]).to_string()
                } else {
                    format!("{}K", groupoid.label(c[0]))
                }
            })
            .collect();
        let anchor = classes.iter().map(|c| groupoid.cod(c[0])).collect();
        let act = (0..groupoid.arrow_count() * n)
            .map(|k| {
                let (f, x) = (k / n, k % n);
                groupoid.comp(f, classes[x][0]).map(|h| class_of[h])
            })
            .collect();
        GAction { groupoid, points, anchor, act }
    }

    /// Disjoint union of actions of the same groupoid; point labels get a part prefix.
    pub fn disjoint_union(parts: &[GAction]) -> Self {
        let groupoid = parts[0].groupoid.clone();
        let prefix = parts.len() > 1;
        let total: usize = parts.iter().map(|p| p.len()).sum();
        let mut points = Vec::with_capacity(total);
        let mut anchor = Vec::with_capacity(total);
        let mut act = vec![None; groupoid.arrow_count() * total];
        let mut offset = 0;
        for (k, p) in parts.iter().enumerate() {
            assert_eq!(*p.groupoid, *groupoid, "disjoint union needs a common groupoid");
            for x in 0..p.len() {
                points.push(if prefix { format!("{k}.{}", p.points[x]) } else { p.points[x].clone() });
                anchor.push(p.anchor[x]);
                for f in 0..groupoid.arrow_count() {
                    act[f * total + offset + x] = p.act(f, x).map(|y| y + offset);
                }
            }
            offset += p.len();
        }
        GAction { groupoid, points, anchor, act }
    }

    pub fn groupoid(&self) -> &Arc<FinGroupoid> {
        &self.groupoid
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn anchor(&self, x: usize) -> usize {
        self.anchor[x]
    }

    pub fn anchors(&self) -> &[usize] {
        &self.anchor
    }

    pub fn act(&self, f: usize, x: usize) -> Option<usize> {
        self.act[f * self.points.len() + x]
    }

    pub fn table(&self) -> &[Option<usize>] {
        &self.act
    }

    /// `A·U = {g·x : g ∈ A, x ∈ U, dom g = p(x)}`.
    pub fn act_set(&self, a: SmallSet, u: SmallSet) -> SmallSet {
        let mut out = SmallSet::EMPTY;
        for f in a {
            for x in u {
                if let Some(y) = self.act(f, x) {
                    out.insert(y);
                }
            }
        }
        out
    }

    pub fn all_points(&self) -> SmallSet {
        SmallSet::full(self.points.len())
    }

    pub fn orbit(&self, x: usize) -> SmallSet {
        self.act_set(self.groupoid.all_arrows(), SmallSet::singleton(x))
    }

    /// Orbits ordered by least point.
    pub fn orbits(&self) -> Vec<SmallSet> {
        let mut out: Vec<SmallSet> = Vec::new();
        for x in 0..self.len() {
            if !out.iter().any(|o| o.contains(x)) {
                out.push(self.orbit(x));
            }
        }
        out
    }

    pub fn stabilizer(&self, x: usize) -> SmallSet {
        (0..self.groupoid.arrow_count()).filter(|&f| self.act(f, x) == Some(x)).collect()
    }

    /// Every stabilizer is trivial.
    pub fn is_free(&self) -> bool {
        (0..self.len()).all(|x| self.stabilizer(x).len() == 1)
    }

    /// The unique `g` with `g·y = x`, when the action is free.
    pub fn translation(&self, x: usize, y: usize) -> Option<usize> {
        let mut it = (0..self.groupoid.arrow_count()).filter(|&f| self.act(f, y) == Some(x));
        let g = it.next()?;
        it.next().is_none().then_some(g)
    }

    pub fn describe_set(&self, s: SmallSet) -> String {
        let names: Vec<&str> = s.iter().map(|x| self.points[x].as_str()).collect();
        format!("{{{}}}", names.join(","))
    }

    /// Applies a permutation of the points (`perm[old] = new`).
    pub fn relabel(&self, perm: &[usize]) -> Self {
        let n = self.len();
        let mut points = vec![String::new(); n];
        let mut anchor = vec![0; n];
        let mut act = vec![None; self.act.len()];
        for x in 0..n {
            points[perm[x]] = self.points[x].clone();
            anchor[perm[x]] = self.anchor[x];
            for f in 0..self.groupoid.arrow_count() {
                act[f * n + perm[x]] = self.act(f, x).map(|y| perm[y]);
            }
        }
        GAction { groupoid: self.groupoid.clone(), points, anchor, act }
    }
}

/// A left `G`-action and a commuting right `H`-action on one set.
/// `x·h` is defined iff `q(x) = cod h` and lies over `dom h`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BiAction {
    left: Arc<FinGroupoid>,
    right: Arc<FinGroupoid>,
    points: Vec<String>,
    left_anchor: Vec<usize>,
    right_anchor: Vec<usize>,
    left_act: Vec<Option<usize>>,
    /// `right_act[h * n + x] = x·h`.
    right_act: Vec<Option<usize>>,
}

impl BiAction {
    #[allow(clippy::too_many_arguments)]
    pub fn from_tables(
        left: Arc<FinGroupoid>,
        right: Arc<FinGroupoid>,
        points: Vec<String>,
        left_anchor: Vec<usize>,
        right_anchor: Vec<usize>,
        left_act: Vec<Option<usize>>,
        right_act: Vec<Option<usize>>,
    ) -> Self {
        BiAction { left, right, points, left_anchor, right_anchor, left_act, right_act }
    }

    pub fn validated(self) -> Result<Self> {
        match self.validate().first() {
            None => Ok(self),
            Some(v) => Err(Error::InvalidBiAction(v.to_string())),
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out: Vec<Violation> = self
            .left_action()
            .validate()
            .into_iter()
            .map(|v| Violation::new(&format!("left {}", v.axiom), v.witness))
            .collect();
        out.extend(
            self.right_action_opposite()
                .validate()
                .into_iter()
                .map(|v| Violation::new(&format!("right {}", v.axiom), v.witness)),
        );
        if !out.is_empty() {
            return out;
        }
        let (g, h) = (&self.left, &self.right);
        for x in 0..self.len() {
            for b in 0..h.arrow_count() {
                if let Some(xb) = self.act_right(x, b) {
                    if self.left_anchor[xb] != self.left_anchor[x] {
                        push_once(&mut out, "p(xh) = p(x)", format!("x = {}, h = {}", self.points[x], h.label(b)));
                    }
                }
            }
            for a in 0..g.arrow_count() {
                let Some(ax) = self.act_left(a, x) else { continue };
                if self.right_anchor[ax] != self.right_anchor[x] {
                    push_once(&mut out, "q(gx) = q(x)", format!("g = {}, x = {}", g.label(a), self.points[x]));
                }
                for b in 0..h.arrow_count() {
                    if let Some(xb) = self.act_right(x, b) {
                        if self.act_right(ax, b) != self.act_left(a, xb) {
                            push_once(
                                &mut out,
                                "(gx)h = g(xh)",
                                format!("g = {}, x = {}, h = {}", g.label(a), self.points[x], h.label(b)),
                            );
                        }
                    }
                }
            }
        }
        out
    }

    /// `G` acting on its arrows by composition on both sides.
    pub fn unit(g: Arc<FinGroupoid>) -> Self {
        let n = g.arrow_count();
        let points = (0..n).map(|f| g.label(f).to_string()).collect();
        let left_act = (0..n * n).map(|k| g.comp(k / n, k % n)).collect();
        let right_act = (0..n * n).map(|k| g.comp(k % n, k / n)).collect();
        BiAction {
            left: g.clone(),
            right: g.clone(),
            points,
            left_anchor: (0..n).map(|f| g.cod(f)).collect(),
            right_anchor: (0..n).map(|f| g.dom(f)).collect(),
            left_act,
            right_act,
        }
    }

    /// A left action together with the trivial right action of its orbit
    /// groupoid (one object per orbit, identities only).
    pub fn over_orbits(a: &GAction) -> Self {
        let orbits = a.orbits();
        let names = (0..orbits.len()).map(|k| format!("O{k}")).collect();
        let right = Arc::new(FinGroupoid::discrete(names));
        let n = a.len();
        let right_anchor: Vec<usize> =
            (0..n).map(|x| orbits.iter().position(|o| o.contains(x)).expect("covered")).collect();
        let right_act = (0..orbits.len() * n)
            .map(|k| {
                let (o, x) = (k / n, k % n);
                (right_anchor[x] == o).then_some(x)
            })
            .collect();
        BiAction {
            left: a.groupoid().clone(),
            right,
            points: a.points().to_vec(),
            left_anchor: a.anchors().to_vec(),
            right_anchor,
            left_act: a.table().to_vec(),
            right_act,
        }
    }

    /// A left action with the trivial right action of the one-arrow groupoid.
    pub fn with_trivial_right(a: &GAction) -> Self {
        let n = a.len();
        BiAction {
            left: a.groupoid().clone(),
            right: Arc::new(FinGroupoid::trivial()),
            points: a.points().to_vec(),
            left_anchor: a.anchors().to_vec(),
            right_anchor: vec![0; n],
            left_act: a.table().to_vec(),
            right_act: (0..n).map(Some).collect(),
        }
    }

    /// The `H`-`G` bi-action with `h·x = x·h⁻¹` and `x·g = g⁻¹·x`.
    pub fn dual(&self) -> Self {
        let n = self.len();
        let (g, h) = (&self.left, &self.right);
        let left_act = (0..h.arrow_count() * n)
            .map(|k| self.act_right(k % n, h.inv(k / n)))
            .collect();
        let right_act = (0..g.arrow_count() * n)
            .map(|k| self.act_left(g.inv(k / n), k % n))
            .collect();
        BiAction {
            left: h.clone(),
            right: g.clone(),
            points: self.points.clone(),
            left_anchor: self.right_anchor.clone(),
            right_anchor: self.left_anchor.clone(),
            left_act,
            right_act,
        }
    }

    pub fn left(&self) -> &Arc<FinGroupoid> {
        &self.left
    }

    pub fn right(&self) -> &Arc<FinGroupoid> {
        &self.right
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn left_anchor(&self, x: usize) -> usize {
        self.left_anchor[x]
    }

    pub fn right_anchor(&self, x: usize) -> usize {
        self.right_anchor[x]
    }

    pub fn act_left(&self, g: usize, x: usize) -> Option<usize> {
        self.left_act[g * self.points.len() + x]
    }

    pub fn act_right(&self, x: usize, h: usize) -> Option<usize> {
        self.right_act[h * self.points.len() + x]
    }

    pub fn left_action(&self) -> GAction {
        GAction::from_tables(self.left.clone(), self.points.clone(), self.left_anchor.clone(), self.left_act.clone())
    }

    /// The right action as a left action of the opposite groupoid.
    pub fn right_action_opposite(&self) -> GAction {
        GAction::from_tables(
            Arc::new(self.right.opposite()),
            self.points.clone(),
            self.right_anchor.clone(),
            self.right_act.clone(),
        )
    }

    /// `U·B = {x·h : x ∈ U, h ∈ B}`.
    pub fn act_right_set(&self, u: SmallSet, b: SmallSet) -> SmallSet {
        let mut out = SmallSet::EMPTY;
        for x in u {
            for h in b {
                if let Some(y) = self.act_right(x, h) {
                    out.insert(y);
                }
            }
        }
        out
    }

    /// Applies a permutation of the points (`perm[old] = new`).
    pub fn relabel(&self, perm: &[usize]) -> Self {
        let n = self.len();
        let mut out = self.clone();
        for x in 0..n {
            out.points[perm[x]] = self.points[x].clone();
            out.left_anchor[perm[x]] = self.left_anchor[x];
            out.right_anchor[perm[x]] = self.right_anchor[x];
            for g in 0..self.left.arrow_count() {
                out.left_act[g * n + perm[x]] = self.act_left(g, x).map(|y| perm[y]);
            }
            for h in 0..self.right.arrow_count() {
                out.right_act[h * n + perm[x]] = self.act_right(x, h).map(|y| perm[y]);
            }
        }
        out
    }

    /// Replaces point labels.
    pub fn with_labels(mut self, points: Vec<String>) -> Self {
        assert_eq!(points.len(), self.points.len());
        self.points = points;
        self
    }

    /// The tables as plain integers, ignoring labels; used for canonical forms.
    pub fn structure_key(&self) -> Vec<usize> {
        let enc = |o: &Option<usize>| o.map_or(0, |y| y + 1);
        let mut key = vec![self.len()];
        key.extend(&self.left_anchor);
        key.extend(&self.right_anchor);
        key.extend(self.left_act.iter().map(enc));
        key.extend(self.right_act.iter().map(enc));
        key
    }

    pub fn describe_set(&self, s: SmallSet) -> String {
        let names: Vec<&str> = s.iter().map(|x| self.points[x].as_str()).collect();
        format!("{{{}}}", names.join(","))
    }

    /// `(X ×_{H_0} Y)/H` for a `G`-`H` bi-action `X` and an `H`-`K` bi-action `Y`,
    /// where `(x·h, y) ~ (x, h·y)`. Classes are ordered by their least pair.
    pub fn tensor(&self, other: &BiAction) -> Result<BiAction> {
        self.tensor_with_classes(other).map(|(t, _)| t)
    }

    /// The tensor together with the class of each pair, indexed by `x * |Y| + y`
    /// (`None` off the fibre product).
    pub fn tensor_with_classes(&self, other: &BiAction) -> Result<(BiAction, Vec<Option<usize>>)> {
        if *self.right != *other.left {
            return Err(Error::QuantaleMismatch("the middle groupoids differ".into()));
        }
        let (n, m) = (self.len(), other.len());
        let h = &self.right;
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|x| (0..m).map(move |y| (x, y)))
            .filter(|&(x, y)| self.right_anchor[x] == other.left_anchor[y])
            .collect();
        let mut index = vec![usize::MAX; n * m];
        for (k, &(x, y)) in pairs.iter().enumerate() {
            index[x * m + y] = k;
        }
        let mut parent: Vec<usize> = (0..pairs.len()).collect();
        fn find(parent: &mut [usize], mut k: usize) -> usize {
            while parent[k] != k {
                parent[k] = parent[parent[k]];
                k = parent[k];
            }
            k
        }
        for e in 0..h.arrow_count() {
            for x in (0..n).filter(|&x| self.right_anchor[x] == h.cod(e)) {
                for y in (0..m).filter(|&y| other.left_anchor[y] == h.dom(e)) {
                    let xe = self.act_right(x, e).expect("typed");
                    let ey = other.act_left(e, y).expect("typed");
                    let (a, b) = (find(&mut parent, index[xe * m + y]), find(&mut parent, index[x * m + ey]));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut class_of = vec![usize::MAX; pairs.len()];
        let mut reps = Vec::new();
        for k in 0..pairs.len() {
            let r = find(&mut parent, k);
            if class_of[r] == usize::MAX {
                class_of[r] = reps.len();
                reps.push(k);
            }
            class_of[k] = class_of[r];
        }
        let c = reps.len();
        let class = |x: usize, y: usize| class_of[index[x * m + y]];
        let points = reps
            .iter()
            .map(|&k| format!("{}⊗{}", self.points[pairs[k].0], other.points[pairs[k].1]))
            .collect();
        let left_act = (0..self.left.arrow_count() * c)
            .map(|i| {
                let (x, y) = pairs[reps[i % c]];
                self.act_left(i / c, x).map(|gx| class(gx, y))
            })
            .collect();
        let right_act = (0..other.right.arrow_count() * c)
            .map(|i| {
                let (x, y) = pairs[reps[i % c]];
                other.act_right(y, i / c).map(|yk| class(x, yk))
            })
            .collect();
        let tensor = BiAction::from_tables(
            self.left.clone(),
            other.right.clone(),
            points,
            reps.iter().map(|&k| self.left_anchor[pairs[k].0]).collect(),
            reps.iter().map(|&k| other.right_anchor[pairs[k].1]).collect(),
            left_act,
            right_act,
        )
        .validated()?;
        let classes = index.iter().map(|&k| (k != usize::MAX).then(|| class_of[k])).collect();
        Ok((tensor, classes))
    }

    /// Breadth-first order from `x`, trying left arrows then right arrows in index order.
    fn traverse(&self, x: usize, seen: &mut [bool]) -> Vec<usize> {
        let mut order = vec![x];
        seen[x] = true;
        let mut i = 0;
        while i < order.len() {
            let y = order[i];
            i += 1;
            let left = (0..self.left.arrow_count()).filter_map(|g| self.act_left(g, y));
            let right = (0..self.right.arrow_count()).filter_map(|h| self.act_right(y, h));
            for z in left.chain(right).collect::<Vec<_>>() {
                if !seen[z] {
                    seen[z] = true;
                    order.push(z);
                }
            }
        }
        order
    }

    /// The tables of one component, with points renamed by their position in `order`.
    fn component_key(&self, order: &[usize]) -> Vec<usize> {
        let mut local = vec![usize::MAX; self.len()];
        for (i, &x) in order.iter().enumerate() {
            local[x] = i;
        }
        let enc = |o: Option<usize>| o.map_or(0, |y| local[y] + 1);
        let mut key = Vec::new();
        for &x in order {
            key.push(self.left_anchor[x]);
            key.push(self.right_anchor[x]);
            key.extend((0..self.left.arrow_count()).map(|g| enc(self.act_left(g, x))));
            key.extend((0..self.right.arrow_count()).map(|h| enc(self.act_right(x, h))));
        }
        key
    }

    /// A canonical representative of the isomorphism class: each component is
    /// labelled breadth-first from the start point giving the least table
    /// encoding, and components are sorted by that encoding.
    pub fn canonical(&self) -> BiAction {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut components = Vec::new();
        for x in 0..n {
            if !seen[x] {
                components.push(self.traverse(x, &mut seen));
            }
        }
        let mut best: Vec<(Vec<usize>, Vec<usize>)> = components
            .iter()
            .map(|comp| {
                comp.iter()
                    .map(|&start| {
                        let mut seen = vec![false; n];
                        let order = self.traverse(start, &mut seen);
                        (self.component_key(&order), order)
                    })
                    .min()
                    .expect("components are non-empty")
            })
            .collect();
        best.sort();
        let mut perm = vec![0; n];
        let mut next = 0;
        for (_, order) in &best {
            for &x in order {
                perm[x] = next;
                next += 1;
            }
        }
        self.relabel(&perm)
    }

    /// A point bijection `self → other` commuting with anchors and both actions,
    /// together with the number of candidate assignments explored.
    pub fn isomorphism(&self, other: &BiAction) -> (Option<Vec<usize>>, usize) {
        let n = self.len();
        if n != other.len() || *self.left != *other.left || *self.right != *other.right {
            return (None, 0);
        }
        let mut map = vec![usize::MAX; n];
        let mut inv = vec![usize::MAX; n];
        let mut explored = 0;
        let found = self.extend_iso(other, &mut map, &mut inv, &mut explored);
        (found.then_some(map), explored)
    }

    fn extend_iso(&self, other: &BiAction, map: &mut [usize], inv: &mut [usize], explored: &mut usize) -> bool {
        let Some(x) = map.iter().position(|&y| y == usize::MAX) else {
            return true;
        };
        for y in 0..other.len() {
            if inv[y] != usize::MAX
                || self.left_anchor[x] != other.left_anchor[y]
                || self.right_anchor[x] != other.right_anchor[y]
            {
                continue;
            }
            *explored += 1;
            let mut trail = Vec::new();
            if self.propagate(other, x, y, map, inv, &mut trail) && self.extend_iso(other, map, inv, explored) {
                return true;
            }
            for a in trail {
                inv[map[a]] = usize::MAX;
                map[a] = usize::MAX;
            }
        }
        false
    }

    fn propagate(
        &self,
        other: &BiAction,
        x: usize,
        y: usize,
        map: &mut [usize],
        inv: &mut [usize],
        trail: &mut Vec<usize>,
    ) -> bool {
        let mut stack = vec![(x, y)];
        while let Some((a, b)) = stack.pop() {
            if map[a] == b {
                continue;
            }
            if map[a] != usize::MAX
                || inv[b] != usize::MAX
                || self.left_anchor[a] != other.left_anchor[b]
                || self.right_anchor[a] != other.right_anchor[b]
            {
                return false;
            }
            map[a] = b;
            inv[b] = a;
            trail.push(a);
            for g in 0..self.left.arrow_count() {
                match (self.act_left(g, a), other.act_left(g, b)) {
                    (Some(c), Some(d)) => stack.push((c, d)),
                    (None, None) => {}
                    _ => return false,
                }
            }
            for h in 0..self.right.arrow_count() {
                match (self.act_right(a, h), other.act_right(b, h)) {
                    (Some(c), Some(d)) => stack.push((c, d)),
                    (None, None) => {}
                    _ => return false,
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::GroupTable;

    #[test]
    fn standard_actions_are_valid() {
        let p2 = Arc::new(FinGroupoid::pair(2));
        let z2 = Arc::new(FinGroupoid::cyclic(2));
        assert!(GAction::regular(p2.clone()).validate().is_empty());
        assert!(GAction::tautological(p2.clone()).validate().is_empty());
        assert!(GAction::cosets(z2.clone(), 0, &[0, 1]).validate().is_empty());
        let s3 = Arc::new(FinGroupoid::from_group(&GroupTable::dihedral(3)));
        let c = GAction::cosets(s3, 0, &[0, 3]);
        assert_eq!(c.len(), 3);
        assert!(c.validate().is_empty());
    }

    #[test]
    fn bi_actions_and_duals_are_valid() {
        let p2 = Arc::new(FinGroupoid::pair(2));
        let u = BiAction::unit(p2.clone());
        assert!(u.validate().is_empty());
        assert!(u.dual().validate().is_empty());
        assert_eq!(u.dual().dual(), u);
        let t = BiAction::with_trivial_right(&GAction::tautological(p2));
        assert!(t.validate().is_empty());
        assert!(t.dual().validate().is_empty());
        assert_eq!(t.dual().dual(), t);
    }

    #[test]
    fn free_actions_translate_uniquely() {
        let p2 = Arc::new(FinGroupoid::pair(2));
        let taut = GAction::tautological(p2.clone());
        assert!(taut.is_free());
        assert_eq!(p2.label(taut.translation(0, 1).unwrap()), "(1,2)");
        let z2 = Arc::new(FinGroupoid::cyclic(2));
        assert!(!GAction::cosets(z2, 0, &[0, 1]).is_free());
    }

    #[test]
    fn tensor_with_unit_and_canonical_forms() {
        let p2 = Arc::new(FinGroupoid::pair(2));
        let t = BiAction::with_trivial_right(&GAction::tautological(p2.clone()));
        let left = BiAction::unit(p2.clone()).tensor(&t).unwrap();
        assert_eq!(left.len(), 2);
        assert!(left.isomorphism(&t).0.is_some());
        let tt = t.tensor(&t.dual()).unwrap();
        assert_eq!(tt.len(), 4);
        assert!(tt.isomorphism(&BiAction::unit(p2.clone())).0.is_some());
        let shuffled = tt.relabel(&[2, 0, 3, 1]);
        assert_eq!(shuffled.canonical().structure_key(), tt.canonical().structure_key());
        let z2 = Arc::new(FinGroupoid::cyclic(2));
        let regular = BiAction::with_trivial_right(&GAction::regular(z2.clone()));
        let two_points = BiAction::with_trivial_right(&GAction::disjoint_union(&[
            GAction::tautological(z2.clone()),
            GAction::tautological(z2),
        ]));
        let (iso, explored) = regular.isomorphism(&two_points);
        assert!(iso.is_none() && explored > 0);
    }
}
