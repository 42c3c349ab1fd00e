//! Permutation groups, switch tables and canonical orbit representatives.
//!
//! Permutations compose as functions: `a.compose(b)` applies `b` first. A
//! group acts on vectors by moving coordinates, `(g·z)[g(p)] = z[p]`, and on
//! triangulations by relabelling vertices.

use std::cmp::Ordering;
use std::collections::{BTreeMap, VecDeque};

use rustc_hash::FxHashSet;
use thiserror::Error;

use crate::pointconfig::{Permutation, PointConfiguration};
use crate::triangulation::{compare_chi, gkz_vector, Gkz, Triangulation};

/// Default bound on the number of group elements enumerated.
pub const DEFAULT_GROUP_CAP: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymmetryError {
    #[error("group has more than {0} elements")]
    GroupTooLarge(usize),
    #[error("generator {0} has degree {1}, expected {2}")]
    DegreeMismatch(usize, usize, usize),
    #[error("invalid switch table: {0}")]
    InvalidSwitchTable(String),
}

/// A finite permutation group with all of its elements listed.
#[derive(Clone, Debug)]
pub struct PermGroup {
    degree: usize,
    generators: Vec<Permutation>,
    /// Sorted by image tuple; the identity comes first.
    elements: Vec<Permutation>,
}

impl PermGroup {
    pub fn trivial(degree: usize) -> Self {
        PermGroup { degree, generators: Vec::new(), elements: vec![Permutation::identity(degree)] }
    }

    pub fn enumerate(degree: usize, generators: &[Permutation]) -> Result<Self, SymmetryError> {
        Self::enumerate_with_cap(degree, generators, DEFAULT_GROUP_CAP)
    }

    /// Closure of the generators by breadth-first multiplication.
    pub fn enumerate_with_cap(degree: usize, generators: &[Permutation], cap: usize) -> Result<Self, SymmetryError> {
        for (k, g) in generators.iter().enumerate() {
            if g.degree() != degree {
                return Err(SymmetryError::DegreeMismatch(k, g.degree(), degree));
            }
        }
        let id = Permutation::identity(degree);
        let mut seen: FxHashSet<Permutation> = FxHashSet::default();
        seen.insert(id.clone());
        let mut queue = VecDeque::from([id]);
        while let Some(x) = queue.pop_front() {
            for g in generators {
                let y = g.compose(&x);
                if seen.insert(y.clone()) {
                    if seen.len() > cap {
                        return Err(SymmetryError::GroupTooLarge(cap));
                    }
                    queue.push_back(y);
                }
            }
        }
        let mut elements: Vec<Permutation> = seen.into_iter().collect();
        elements.sort_unstable_by(|a, b| a.images().cmp(b.images()));
        Ok(PermGroup { degree, generators: generators.to_vec(), elements })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn generators(&self) -> &[Permutation] {
        &self.generators
    }

    pub fn elements(&self) -> &[Permutation] {
        &self.elements
    }

    pub fn is_trivial(&self) -> bool {
        self.elements.len() == 1
    }

    /// Elements fixing `0..i` pointwise.
    pub fn stabilizer(&self, i: usize) -> Vec<&Permutation> {
        self.elements.iter().filter(|g| (0..i).all(|k| g.image(k) == k)).collect()
    }
}

/// An `m`-switch table: entry `(i, j)` fixes `0..i` and sends `j` to `i`, or
/// is the identity when no such element exists.
#[derive(Clone, Debug)]
pub struct SwitchTable {
    m: usize,
    entries: Vec<Vec<Option<Permutation>>>,
}

impl SwitchTable {
    /// Picks, for each entry, the first qualifying element in the group's
    /// element order.
    pub fn build(group: &PermGroup, m: usize) -> Self {
        let mut entries = vec![vec![None; m]; m];
        for g in group.elements() {
            // The only entry `g` can fill is at its first moved point.
            let Some(f) = g.first_moved() else { continue };
            if f >= m {
                continue;
            }
            let j = g.inverse().image(f);
            if j < m && entries[f][j].is_none() {
                entries[f][j] = Some(g.clone());
            }
        }
        SwitchTable { m, entries }
    }

    /// A table with prescribed nontrivial entries, checked against the definition.
    pub fn from_entries(
        group: &PermGroup,
        m: usize,
        given: &[(usize, usize, Permutation)],
    ) -> Result<Self, SymmetryError> {
        let mut entries = vec![vec![None; m]; m];
        for (i, j, g) in given {
            let (i, j) = (*i, *j);
            if i >= m || j >= m {
                return Err(SymmetryError::InvalidSwitchTable(format!("entry ({i},{j}) out of range")));
            }
            if !group.elements().contains(g) {
                return Err(SymmetryError::InvalidSwitchTable(format!("{g} is not a group element")));
            }
            if (0..i).any(|k| g.image(k) != k) || g.image(j) != i || i == j {
                return Err(SymmetryError::InvalidSwitchTable(format!("{g} cannot be entry ({i},{j})")));
            }
            entries[i][j] = Some(g.clone());
        }
        let reference = Self::build(group, m);
        for i in 0..m {
            for j in 0..m {
                if reference.entries[i][j].is_some() != entries[i][j].is_some() {
                    return Err(SymmetryError::InvalidSwitchTable(format!("entry ({i},{j}) is missing")));
                }
            }
        }
        Ok(SwitchTable { m, entries })
    }

    pub fn size(&self) -> usize {
        self.m
    }

    /// The entry at `(i, j)`; `None` stands for the identity.
    pub fn entry(&self, i: usize, j: usize) -> Option<&Permutation> {
        self.entries[i][j].as_ref()
    }

    /// One more than the last row with a nontrivial entry.
    pub fn depth(&self) -> usize {
        (0..self.m).rev().find(|&i| self.entries[i].iter().any(Option::is_some)).map_or(0, |i| i + 1)
    }

    /// `σ_i`: one plus the number of nontrivial entries of row `i`.
    pub fn row_sizes(&self) -> Vec<usize> {
        self.entries.iter().map(|row| 1 + row.iter().filter(|e| e.is_some()).count()).collect()
    }

    /// Product of the row sizes.
    pub fn sigma(&self) -> u128 {
        self.row_sizes().iter().map(|&s| s as u128).product()
    }

    /// Writes `g = k ∘ s(m-1, j_{m-1}) ∘ ... ∘ s(0, j_0)` and returns the
    /// indices `j_i` and the kernel element `k`.
    pub fn decompose(&self, g: &Permutation) -> (Vec<usize>, Permutation) {
        let mut rest = g.clone();
        let mut js = Vec::with_capacity(self.m);
        for i in 0..self.m {
            let j = rest.inverse().image(i);
            js.push(j);
            if let Some(s) = &self.entries[i][j] {
                rest = rest.compose(&s.inverse());
            }
        }
        (js, rest)
    }
}

/// Switches of row `i` that may lead to a lexicographically larger vector.
pub fn good_switches<V: Ord>(z: &[V], i: usize, table: &SwitchTable) -> Vec<Permutation> {
    good_switch_columns(z, i, table)
        .into_iter()
        .map(|j| table.entry(i, j).cloned().unwrap_or_else(|| Permutation::identity(table.size())))
        .collect()
}

/// An equivariant map from a `G`-set into vectors indexed by `[m]`.
pub trait Evaluation {
    type Item: Clone;
    type Value: Ord;

    fn eval(&self, item: &Self::Item) -> Vec<Self::Value>;

    fn act(&self, g: &Permutation, item: &Self::Item) -> Self::Item;

    /// Order used to pick the best candidate; defaults to comparing evaluations.
    fn compare(&self, a: &Self::Item, b: &Self::Item) -> Ordering {
        self.eval(a).cmp(&self.eval(b))
    }
}

/// The recursive switch-table canonical form, starting at row `i`.
pub fn canonical<E: Evaluation>(e: &E, item: &E::Item, i: usize, table: &SwitchTable) -> E::Item {
    if i >= table.depth() {
        return item.clone();
    }
    let z = e.eval(item);
    let mut best = item.clone();
    for s in good_switches(&z, i, table) {
        let candidate = canonical(e, &e.act(&s, item), i + 1, table);
        if e.compare(&candidate, &best) == Ordering::Greater {
            best = candidate;
        }
    }
    best
}

/// Characteristic vectors of subsets of a fixed ground set `[m]`.
pub struct CharacteristicVector(pub usize);

impl Evaluation for CharacteristicVector {
    type Item = Vec<usize>;
    type Value = u8;

    fn eval(&self, item: &Vec<usize>) -> Vec<u8> {
        let mut v = vec![0u8; self.0];
        for &x in item {
            v[x] = 1;
        }
        v
    }

    fn act(&self, g: &Permutation, item: &Vec<usize>) -> Vec<usize> {
        let mut out: Vec<usize> = item.iter().map(|&x| g.image(x)).collect();
        out.sort_unstable();
        out
    }
}

/// Triangulations evaluated by `(gkz, χ)`.
pub struct TriangulationEvaluation<'a>(pub &'a PointConfiguration);

impl Evaluation for TriangulationEvaluation<'_> {
    type Item = Triangulation;
    type Value = u64;

    fn eval(&self, item: &Triangulation) -> Vec<u64> {
        gkz_vector(self.0, item)
    }

    fn act(&self, g: &Permutation, item: &Triangulation) -> Triangulation {
        act(g, item)
    }

    fn compare(&self, a: &Triangulation, b: &Triangulation) -> Ordering {
        crate::triangulation::compare_total(self.0, a, b)
    }
}

/// `g·T`: relabel every simplex.
pub fn act(g: &Permutation, t: &Triangulation) -> Triangulation {
    t.permuted(g.images())
}

/// `(g·z)[g(p)] = z[p]`.
pub fn act_vector<V: Clone>(g: &Permutation, z: &[V]) -> Vec<V> {
    let mut out = z.to_vec();
    for (p, v) in z.iter().enumerate() {
        out[g.image(p)] = v.clone();
    }
    out
}

/// Canonical representatives of triangulation orbits via the switch table.
///
/// Tracks the permuted GKZ vector along each branch, prunes branches whose
/// fixed prefix falls behind the best vector so far, and materializes
/// triangulations only to break GKZ ties.
#[derive(Clone, Debug)]
pub struct Canonicalizer {
    n: usize,
    depth: usize,
    /// Per row: (column, images of the switch) for every nontrivial entry.
    rows: Vec<Vec<(usize, Vec<u8>)>>,
    /// Per row and column: index into `rows[i]`, if nontrivial.
    lookup: Vec<Vec<Option<u32>>>,
}

/// Work counters for one canonicalization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CanonicalStats {
    pub leaves: u64,
    pub materialized: u64,
}

impl Canonicalizer {
    pub fn new(table: &SwitchTable) -> Self {
        let n = table.size();
        let mut rows = vec![Vec::new(); n];
        let mut lookup = vec![vec![None; n]; n];
        for i in 0..n {
            for j in 0..n {
                if let Some(s) = table.entry(i, j) {
                    lookup[i][j] = Some(rows[i].len() as u32);
                    rows[i].push((j, s.images().to_vec()));
                }
            }
        }
        Canonicalizer { n, depth: table.depth(), rows, lookup }
    }

    pub fn is_trivial(&self) -> bool {
        self.depth == 0
    }

    pub fn canonical(&self, t: &Triangulation, gkz: &[u64]) -> (Triangulation, Gkz) {
        self.canonical_with_stats(t, gkz).0
    }

    pub fn canonical_with_stats(&self, t: &Triangulation, gkz: &[u64]) -> ((Triangulation, Gkz), CanonicalStats) {
        let mut stats = CanonicalStats::default();
        if self.depth == 0 {
            stats.leaves = 1;
            return ((t.clone(), gkz.to_vec()), stats);
        }
        let identity: Vec<u8> = (0..self.n as u8).collect();
        let mut best = Best { z: gkz.to_vec(), perm: identity.clone(), tri: Some(t.clone()) };
        self.search(t, gkz.to_vec(), identity, 0, &mut best, &mut stats);
        let tri = match best.tri {
            Some(tri) => tri,
            None => t.permuted(&best.perm),
        };
        ((tri, best.z), stats)
    }

    fn search(
        &self,
        t: &Triangulation,
        z: Vec<u64>,
        perm: Vec<u8>,
        i: usize,
        best: &mut Best,
        stats: &mut CanonicalStats,
    ) {
        if i >= self.depth {
            stats.leaves += 1;
            match z.cmp(&best.z) {
                Ordering::Greater => *best = Best { z, perm, tri: None },
                Ordering::Equal if perm != best.perm => {
                    let cand = t.permuted(&perm);
                    let current = best.tri.get_or_insert_with(|| t.permuted(&best.perm));
                    stats.materialized += 1;
                    if cand != *current && compare_chi(&cand, current) == Ordering::Greater {
                        *best = Best { z, perm, tri: Some(cand) };
                    }
                }
                _ => {}
            }
            return;
        }
        for j in good_switch_columns(&z, i, self) {
            let (nz, np) = match self.lookup[i][j] {
                None => (z.clone(), perm.clone()),
                Some(k) => {
                    let s = &self.rows[i][k as usize].1;
                    let mut nz = vec![0u64; self.n];
                    for (p, &v) in z.iter().enumerate() {
                        nz[s[p] as usize] = v;
                    }
                    let np: Vec<u8> = perm.iter().map(|&x| s[x as usize]).collect();
                    (nz, np)
                }
            };
            // Coordinates 0..=i are now fixed for the whole subtree.
            if nz[..=i] < best.z[..=i] {
                continue;
            }
            self.search(t, nz, np, i + 1, best, stats);
        }
    }
}

struct Best {
    z: Vec<u64>,
    perm: Vec<u8>,
    tri: Option<Triangulation>,
}

impl SwitchLike for Canonicalizer {
    fn size(&self) -> usize {
        self.n
    }
    fn nontrivial(&self, i: usize, j: usize) -> bool {
        self.lookup[i][j].is_some()
    }
}

impl SwitchLike for SwitchTable {
    fn size(&self) -> usize {
        self.m
    }
    fn nontrivial(&self, i: usize, j: usize) -> bool {
        self.entries[i][j].is_some()
    }
}

trait SwitchLike {
    fn size(&self) -> usize;
    fn nontrivial(&self, i: usize, j: usize) -> bool;
}

/// Column indices selected by GoodSwitches; `i` itself stands for the identity.
fn good_switch_columns<V: Ord, S: SwitchLike>(z: &[V], i: usize, table: &S) -> Vec<usize> {
    let m = table.size();
    let mut best: Option<&V> = None;
    for (j, zj) in z.iter().enumerate().take(m) {
        if table.nontrivial(i, j) && *zj > z[i] && best.is_none_or(|b| zj > b) {
            best = Some(zj);
        }
    }
    match best {
        Some(y) => (0..m).filter(|&j| table.nontrivial(i, j) && z[j] == *y).collect(),
        None => {
            let mut out = vec![i];
            out.extend((0..m).filter(|&j| j != i && z[j] == z[i] && table.nontrivial(i, j)));
            out
        }
    }
}

/// Maximum of `{g·T}` under the total order, trying every group element.
pub fn canonical_bruteforce(cfg: &PointConfiguration, t: &Triangulation, group: &PermGroup) -> Triangulation {
    let gkz = gkz_vector(cfg, t);
    let n = gkz.len();
    let mut best: Option<(Vec<u64>, Triangulation)> = None;
    let mut z = vec![0u64; n];
    for g in group.elements() {
        for (p, &v) in gkz.iter().enumerate() {
            z[g.image(p)] = v;
        }
        let ord = match &best {
            None => Ordering::Greater,
            Some((bz, _)) => z.cmp(bz),
        };
        match ord {
            Ordering::Greater => best = Some((z.clone(), act(g, t))),
            Ordering::Equal => {
                let cand = act(g, t);
                let (_, bt) = best.as_ref().unwrap();
                if compare_chi(&cand, bt) == Ordering::Greater {
                    best = Some((z.clone(), cand));
                }
            }
            Ordering::Less => {}
        }
    }
    best.map(|(_, t)| t).unwrap_or_else(|| t.clone())
}

/// Number of distinct images `g·T`.
pub fn orbit_size(cfg: &PointConfiguration, t: &Triangulation, group: &PermGroup) -> u64 {
    let gkz = gkz_vector(cfg, t);
    orbit_size_with_gkz(t, &gkz, group)
}

/// Orbit size by counting the stabilizer.
pub fn orbit_size_with_gkz(t: &Triangulation, gkz: &[u64], group: &PermGroup) -> u64 {
    let stab = group
        .elements()
        .iter()
        .filter(|g| (0..gkz.len()).all(|p| gkz[g.image(p)] == gkz[p]) && act(g, t) == *t)
        .count();
    (group.order() / stab) as u64
}

/// Largest number of equal entries.
pub fn jbound(z: &[u64]) -> usize {
    let mut v = z.to_vec();
    v.sort_unstable();
    let mut best = 0;
    let mut k = 0;
    while k < v.len() {
        let mut e = k;
        while e < v.len() && v[e] == v[k] {
            e += 1;
        }
        best = best.max(e - k);
        k = e;
    }
    best
}

/// Histogram of `J̄` over a collection of GKZ vectors.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct JboundStats {
    pub histogram: BTreeMap<usize, u64>,
}

impl JboundStats {
    pub fn record(&mut self, z: &[u64]) {
        *self.histogram.entry(jbound(z)).or_insert(0) += 1;
    }

    pub fn merge(&mut self, other: &JboundStats) {
        for (&k, &v) in &other.histogram {
            *self.histogram.entry(k).or_insert(0) += v;
        }
    }

    pub fn count(&self) -> u64 {
        self.histogram.values().sum()
    }

    pub fn mean(&self) -> f64 {
        let n = self.count();
        if n == 0 {
            return 0.0;
        }
        self.histogram.iter().map(|(&k, &v)| k as f64 * v as f64).sum::<f64>() / n as f64
    }
}

pub fn jbound_stats<'a>(gkzs: impl IntoIterator<Item = &'a [u64]>) -> JboundStats {
    let mut s = JboundStats::default();
    for z in gkzs {
        s.record(z);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointconfig::{generate_family, FamilySpec};

    fn sym4() -> PermGroup {
        let gens = vec![
            Permutation::from_cycles(4, &[&[0, 1]]).unwrap(),
            Permutation::from_cycles(4, &[&[0, 1, 2, 3]]).unwrap(),
        ];
        PermGroup::enumerate(4, &gens).unwrap()
    }

    fn hand_sym4_table(g: &PermGroup) -> SwitchTable {
        let c = |cycles: &[&[usize]]| Permutation::from_cycles(4, cycles).unwrap();
        SwitchTable::from_entries(
            g,
            4,
            &[
                (0, 1, c(&[&[0, 3, 2, 1]])),
                (0, 2, c(&[&[0, 2], &[1, 3]])),
                (0, 3, c(&[&[0, 1, 2, 3]])),
                (1, 2, c(&[&[1, 3, 2]])),
                (1, 3, c(&[&[1, 2, 3]])),
                (2, 3, c(&[&[2, 3]])),
            ],
        )
        .unwrap()
    }

    #[test]
    fn sym4_order_and_table() {
        let g = sym4();
        assert_eq!(g.order(), 24);
        assert_eq!(g.elements()[0], Permutation::identity(4));
        let t = SwitchTable::build(&g, 4);
        assert_eq!(t.depth(), 3);
        assert_eq!(t.row_sizes(), vec![4, 3, 2, 1]);
        assert_eq!(t.sigma(), 24);
        let p = hand_sym4_table(&g);
        assert_eq!(p.depth(), 3);
        assert_eq!(p.row_sizes(), vec![4, 3, 2, 1]);
    }

    #[test]
    fn trivial_group_table() {
        let g = PermGroup::trivial(5);
        let t = SwitchTable::build(&g, 5);
        assert_eq!(t.depth(), 0);
        assert_eq!(t.row_sizes(), vec![1; 5]);
    }

    #[test]
    fn from_entries_rejects_bad_tables() {
        let g = sym4();
        let bad = Permutation::from_cycles(4, &[&[0, 1]]).unwrap();
        assert!(SwitchTable::from_entries(&g, 4, &[(0, 2, bad)]).is_err());
        assert!(SwitchTable::from_entries(&g, 4, &[]).is_err());
    }

    #[test]
    fn good_switches_example() {
        let g = sym4();
        let t = hand_sym4_table(&g);
        let s = good_switches(&[0, 1, 1, 0], 0, &t);
        let names: Vec<String> = s.iter().map(|p| p.to_string()).collect();
        assert_eq!(names, vec!["(0 3 2 1)", "(0 2)(1 3)"]);
        assert_eq!(good_switches(&[3, 2, 1, 0], 0, &t), vec![Permutation::identity(4)]);
        assert_eq!(good_switches(&[5, 5, 5, 5], 0, &t).len(), 4);
    }

    #[test]
    fn subset_canonical_example() {
        let g = sym4();
        let t = hand_sym4_table(&g);
        assert_eq!(canonical(&CharacteristicVector(4), &vec![1, 2], 0, &t), vec![0, 1]);
        let own = SwitchTable::build(&g, 4);
        assert_eq!(canonical(&CharacteristicVector(4), &vec![1, 2], 0, &own), vec![0, 1]);
    }

    #[test]
    fn cube4_group() {
        let (cfg, gens) = generate_family(&FamilySpec::Cube(4)).unwrap();
        let g = PermGroup::enumerate(cfg.len(), &gens).unwrap();
        assert_eq!(g.order(), 384);
        let t = SwitchTable::build(&g, 16);
        let nontrivial: Vec<usize> = t.row_sizes().into_iter().filter(|&s| s > 1).collect();
        assert_eq!(nontrivial, vec![16, 4, 3, 2]);
        assert_eq!(t.sigma(), 384);
        assert_eq!(t.depth(), 5);

        // Listing the origin and its four neighbours first gives depth 4.
        let order: Vec<usize> =
            [0, 1, 2, 4, 8].into_iter().chain((0..16).filter(|p| ![0, 1, 2, 4, 8].contains(p))).collect();
        let mut position = vec![0; 16];
        for (k, &p) in order.iter().enumerate() {
            position[p] = k;
        }
        let moved: Vec<Permutation> = gens
            .iter()
            .map(|g| Permutation::new(order.iter().map(|&p| position[g.image(p)]).collect()).unwrap())
            .collect();
        let t = SwitchTable::build(&PermGroup::enumerate(16, &moved).unwrap(), 16);
        assert_eq!(t.depth(), 4);
        assert_eq!(&t.row_sizes()[..5], &[16, 4, 3, 2, 1]);
    }

    #[test]
    fn transversal_and_decomposition() {
        let g = sym4();
        for table in [SwitchTable::build(&g, 4), hand_sym4_table(&g)] {
            for x in g.elements() {
                let (js, k) = table.decompose(x);
                assert!(k.is_identity());
                let mut rebuilt = Permutation::identity(4);
                for (i, &j) in js.iter().enumerate() {
                    if let Some(s) = table.entry(i, j) {
                        rebuilt = s.compose(&rebuilt);
                    }
                }
                assert_eq!(&rebuilt, x);
            }
        }
    }

    #[test]
    fn group_cap() {
        let gens = vec![
            Permutation::from_cycles(6, &[&[0, 1]]).unwrap(),
            Permutation::from_cycles(6, &[&[0, 1, 2, 3, 4, 5]]).unwrap(),
        ];
        assert_eq!(PermGroup::enumerate_with_cap(6, &gens, 100).unwrap_err(), SymmetryError::GroupTooLarge(100));
    }

    #[test]
    fn jbound_examples() {
        assert_eq!(jbound(&[4, 4, 4, 4]), 4);
        assert_eq!(jbound(&[1, 2, 3]), 1);
        let s = jbound_stats([&[1u64, 1, 2][..], &[1, 2, 3][..]]);
        assert_eq!(s.histogram.get(&2), Some(&1));
        assert!((s.mean() - 1.5).abs() < 1e-12);
    }
}
