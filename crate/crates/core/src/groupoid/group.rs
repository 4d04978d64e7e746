//! Finite groups as multiplication tables, with an isomorphism-invariant
//! canonical form used to compare isotropy groups.

use std::collections::VecDeque;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupTable {
    names: Vec<String>,
    mul: Vec<usize>,
    identity: usize,
}

impl GroupTable {
    /// A group from its Cayley table; `None` if the table is not a group.
    pub fn new(names: Vec<String>, mul: Vec<usize>) -> Option<Self> {
        let n = names.len();
        if n == 0 || mul.len() != n * n || mul.iter().any(|&m| m >= n) {
            return None;
        }
        let identity = (0..n).find(|&e| (0..n).all(|g| mul[e * n + g] == g && mul[g * n + e] == g))?;
        let g = GroupTable { names, mul, identity };
        let assoc = (0..n).all(|a| {
            (0..n).all(|b| (0..n).all(|c| g.mul(g.mul(a, b), c) == g.mul(a, g.mul(b, c))))
        });
        let inverses = (0..n).all(|a| (0..n).any(|b| g.mul(a, b) == identity));
        (assoc && inverses).then_some(g)
    }

    pub fn trivial() -> Self {
        Self::cyclic(1)
    }

    pub fn cyclic(n: usize) -> Self {
        let names = (0..n).map(|k| if k == 0 { "e".to_string() } else { format!("g{k}") }).collect();
        let mul = (0..n * n).map(|i| (i / n + i % n) % n).collect();
        GroupTable { names, mul, identity: 0 }
    }

    pub fn product(a: &GroupTable, b: &GroupTable) -> Self {
        let (na, nb) = (a.order(), b.order());
        let n = na * nb;
        let names = (0..n)
            .map(|i| format!("({},{})", a.names[i / nb], b.names[i % nb]))
            .collect();
        let mul = (0..n * n)
            .map(|k| {
                let (x, y) = (k / n, k % n);
                a.mul(x / nb, y / nb) * nb + b.mul(x % nb, y % nb)
            })
            .collect();
        GroupTable { names, mul, identity: a.identity * nb + b.identity }
    }

    /// The dihedral group of order `2n`: `r^i s^j`.
    pub fn dihedral(n: usize) -> Self {
        let elem = |i: usize, j: usize| j * n + i;
        let names = (0..2 * n)
            .map(|k| {
                let (i, j) = (k % n, k / n);
                match (i, j) {
                    (0, 0) => "e".to_string(),
                    (_, 0) => format!("r{i}"),
                    (0, _) => "s".to_string(),
                    _ => format!("r{i}s"),
                }
            })
            .collect();
        let mul = (0..4 * n * n)
            .map(|k| {
                let (x, y) = (k / (2 * n), k % (2 * n));
                let (i1, j1, i2, j2) = (x % n, x / n, y % n, y / n);
                // r^i1 s^j1 r^i2 s^j2 = r^(i1 ± i2) s^(j1+j2)
                let i = if j1 == 0 { (i1 + i2) % n } else { (i1 + n - i2) % n };
                elem(i, (j1 + j2) % 2)
            })
            .collect();
        GroupTable { names, mul, identity: 0 }
    }

    /// The quaternion group `{±1, ±i, ±j, ±k}`.
    pub fn quaternion() -> Self {
        // Index = 2·unit + sign, unit ∈ {1,i,j,k}.
        let unit_mul = |a: usize, b: usize| -> (usize, bool) {
            match (a, b) {
                (0, x) | (x, 0) => (x, false),
                (x, y) if x == y => (0, true),
                (1, 2) => (3, false),
                (2, 1) => (3, true),
                (2, 3) => (1, false),
                (3, 2) => (1, true),
                (3, 1) => (2, false),
                (1, 3) => (2, true),
                _ => unreachable!(),
            }
        };
        let units = ["1", "i", "j", "k"];
        let names = (0..8)
            .map(|k| format!("{}{}", if k % 2 == 1 { "-" } else { "" }, units[k / 2]))
            .collect();
        let mul = (0..64)
            .map(|k| {
                let (x, y) = (k / 8, k % 8);
                let (u, neg) = unit_mul(x / 2, y / 2);
                let sign = (x % 2 + y % 2 + neg as usize) % 2;
                2 * u + sign
            })
            .collect();
        GroupTable { names, mul, identity: 0 }
    }

    /// One representative of every isomorphism class of order at most 8.
    pub fn all_up_to_order_8() -> Vec<GroupTable> {
        let z = GroupTable::cyclic;
        vec![
            z(1),
            z(2),
            z(3),
            z(4),
            GroupTable::product(&z(2), &z(2)),
            z(5),
            z(6),
            GroupTable::dihedral(3),
            z(7),
            z(8),
            GroupTable::product(&z(4), &z(2)),
            GroupTable::product(&GroupTable::product(&z(2), &z(2)), &z(2)),
            GroupTable::dihedral(4),
            GroupTable::quaternion(),
        ]
    }

    pub fn order(&self) -> usize {
        self.names.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a * self.order() + b]
    }

    pub fn inverse(&self, a: usize) -> usize {
        (0..self.order()).find(|&b| self.mul(a, b) == self.identity).expect("group")
    }

    /// Every subgroup, as sorted element lists.
    pub fn subgroups(&self) -> Vec<Vec<usize>> {
        let n = self.order();
        assert!(n <= 16, "subgroup enumeration is exponential in the order");
        let mut out = Vec::new();
        for mask in 0u32..1 << n {
            if mask >> self.identity & 1 == 0 {
                continue;
            }
            let elems: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let closed = elems
                .iter()
                .all(|&a| elems.iter().all(|&b| mask >> self.mul(a, b) & 1 == 1));
            if closed {
                out.push(elems);
            }
        }
        out
    }

    /// Subgroups up to conjugacy, smallest representative mask first.
    pub fn subgroups_up_to_conjugacy(&self) -> Vec<Vec<usize>> {
        let subs = self.subgroups();
        let mut seen: Vec<Vec<usize>> = Vec::new();
        let mut reps = Vec::new();
        for k in subs {
            if seen.contains(&k) {
                continue;
            }
            for g in 0..self.order() {
                let gi = self.inverse(g);
                let mut conj: Vec<usize> = k.iter().map(|&x| self.mul(self.mul(g, x), gi)).collect();
                conj.sort_unstable();
                if !seen.contains(&conj) {
                    seen.push(conj);
                }
            }
            reps.push(k);
        }
        reps
    }

    fn generated(&self, gens: &[usize]) -> Vec<bool> {
        let n = self.order();
        let mut inside = vec![false; n];
        inside[self.identity] = true;
        let mut queue = VecDeque::from([self.identity]);
        while let Some(x) = queue.pop_front() {
            for &g in gens {
                let y = self.mul(x, g);
                if !inside[y] {
                    inside[y] = true;
                    queue.push_back(y);
                }
            }
        }
        inside
    }

    fn table_from(&self, gens: &[usize]) -> Vec<u8> {
        let n = self.order();
        let mut order = vec![self.identity];
        let mut label = vec![usize::MAX; n];
        label[self.identity] = 0;
        let mut i = 0;
        while i < order.len() {
            let x = order[i];
            for &g in gens {
                let y = self.mul(x, g);
                if label[y] == usize::MAX {
                    label[y] = order.len();
                    order.push(y);
                }
            }
            i += 1;
        }
        let mut table = Vec::with_capacity(n * n);
        for &a in &order {
            for &b in &order {
                table.push(label[self.mul(a, b)] as u8);
            }
        }
        table
    }

    /// The lexicographically least Cayley table over all irredundant generating
    /// sequences, each labelling elements in breadth-first order of words.
    pub fn canonical(&self) -> CanonicalGroup {
        let n = self.order();
        assert!(n <= 64, "canonical form only for small groups");
        let mut best: Option<Vec<u8>> = None;
        let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
        while let Some(seq) = stack.pop() {
            let inside = self.generated(&seq);
            if inside.iter().all(|&b| b) {
                let t = self.table_from(&seq);
                if best.as_ref().is_none_or(|b| t < *b) {
                    best = Some(t);
                }
                continue;
            }
            for g in (0..n).filter(|&g| !inside[g]) {
                let mut next = seq.clone();
                next.push(g);
                stack.push(next);
            }
        }
        CanonicalGroup { order: n, table: best.expect("some sequence generates") }
    }
}

/// An isomorphism-invariant encoding of a finite group.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CanonicalGroup {
    order: usize,
    table: Vec<u8>,
}

impl CanonicalGroup {
    pub fn order(&self) -> usize {
        self.order
    }

    /// A conventional name when the group has order at most 8.
    pub fn name(&self) -> String {
        static KNOWN: OnceLock<Vec<(CanonicalGroup, &'static str)>> = OnceLock::new();
        let known = KNOWN.get_or_init(|| {
            let names = [
                "1", "Z2", "Z3", "Z4", "Z2xZ2", "Z5", "Z6", "S3", "Z7", "Z8", "Z4xZ2",
                "Z2xZ2xZ2", "D4", "Q8",
            ];
            GroupTable::all_up_to_order_8()
                .iter()
                .zip(names)
                .map(|(g, name)| (g.canonical(), name))
                .collect()
        });
        known
            .iter()
            .find(|(c, _)| c == self)
            .map(|(_, name)| name.to_string())
            .unwrap_or_else(|| format!("order-{}", self.order))
    }
}

impl fmt::Debug for CanonicalGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_groups_are_groups() {
        for g in GroupTable::all_up_to_order_8() {
            assert!(GroupTable::new(g.names.clone(), g.mul.clone()).is_some(), "{:?}", g.names);
        }
    }

    #[test]
    fn canonical_forms_separate_the_small_groups() {
        let forms: Vec<_> = GroupTable::all_up_to_order_8().iter().map(|g| g.canonical()).collect();
        for i in 0..forms.len() {
            for j in i + 1..forms.len() {
                assert_ne!(forms[i], forms[j], "{i} vs {j}");
            }
        }
    }

    #[test]
    fn canonical_form_ignores_relabelling() {
        let d4 = GroupTable::dihedral(4);
        let perm = [0, 5, 2, 7, 4, 1, 6, 3];
        let mut inv = [0; 8];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        let mul = (0..64)
            .map(|k| perm[d4.mul(inv[k / 8], inv[k % 8])])
            .collect();
        let relabelled = GroupTable::new(d4.names.clone(), mul).unwrap();
        assert_eq!(relabelled.canonical(), d4.canonical());
    }

    #[test]
    fn subgroup_counts() {
        assert_eq!(GroupTable::dihedral(3).subgroups().len(), 6);
        assert_eq!(GroupTable::dihedral(3).subgroups_up_to_conjugacy().len(), 4);
        assert_eq!(GroupTable::quaternion().subgroups().len(), 6);
    }
}
