//! Triangulations as sets of maximal simplices.
//!
//! A simplex is a 64-bit vertex mask. Simplices are ordered lexicographically
//! by their sorted vertex tuples, and a [`Triangulation`] keeps its simplices
//! sorted in that order, so two triangulations are equal iff their vectors are.

mod flip;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::pointconfig::{mask_to_vec, PointConfiguration, MAX_POINTS};

pub use flip::{apply_flip, carrier_flip, containing_simplex, find_flips, Flip};

/// GKZ vector: per point, the summed normalized volume of incident simplices.
pub type Gkz = Vec<u64>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TriangulationError {
    #[error("flip is not applicable: simplex {0} is missing")]
    FlipNotApplicable(Simplex),
    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },
}

/// A set of point indices, stored as a bit mask.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Simplex(pub u64);

impl Simplex {
    pub fn from_vertices(vertices: &[usize]) -> Self {
        Simplex(vertices.iter().fold(0u64, |m, &v| m | (1u64 << v)))
    }

    #[inline]
    pub fn mask(self) -> u64 {
        self.0
    }

    pub fn vertices(self) -> Vec<usize> {
        mask_to_vec(self.0)
    }

    #[inline]
    pub fn contains(self, p: usize) -> bool {
        self.0 & (1u64 << p) != 0
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

impl Ord for Simplex {
    /// Lexicographic order of sorted vertex tuples: the tuples agree below the
    /// lowest differing point, and the simplex owning that point is smaller.
    #[inline]
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.reverse_bits().cmp(&self.0.reverse_bits())
    }
}

impl PartialOrd for Simplex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, v) in self.vertices().iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

/// A triangulation: its maximal simplices in increasing order.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Triangulation {
    simplices: Vec<Simplex>,
}

impl Triangulation {
    /// Sorts and deduplicates; performs no geometric validation.
    pub fn new(mut simplices: Vec<Simplex>) -> Self {
        simplices.sort_unstable();
        simplices.dedup();
        Triangulation { simplices }
    }

    pub fn from_vertex_lists(lists: &[Vec<usize>]) -> Self {
        Self::new(lists.iter().map(|l| Simplex::from_vertices(l)).collect())
    }

    pub(crate) fn from_sorted(simplices: Vec<Simplex>) -> Self {
        debug_assert!(simplices.windows(2).all(|w| w[0] < w[1]));
        Triangulation { simplices }
    }

    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn contains(&self, s: Simplex) -> bool {
        self.simplices.binary_search(&s).is_ok()
    }

    /// Mask of all points used by some simplex.
    pub fn vertices_used(&self) -> u64 {
        self.simplices.iter().fold(0, |m, s| m | s.0)
    }

    /// Image under a point permutation given in one-line notation.
    pub fn permuted(&self, images: &[u8]) -> Triangulation {
        let mut out: Vec<Simplex> = self
            .simplices
            .iter()
            .map(|s| {
                let mut m = s.0;
                let mut image = 0u64;
                while m != 0 {
                    let v = m.trailing_zeros() as usize;
                    image |= 1u64 << images[v];
                    m &= m - 1;
                }
                Simplex(image)
            })
            .collect();
        out.sort_unstable();
        Triangulation { simplices: out }
    }
}

impl fmt::Debug for Triangulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Triangulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, s) in self.simplices.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "}}")
    }
}

/// Reads `{{i,j,...},{...}}`; whitespace is ignored and order is normalized.
impl FromStr for Triangulation {
    type Err = TriangulationError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let chars: Vec<(usize, char)> =
            text.chars().enumerate().filter(|(_, c)| !c.is_whitespace()).map(|(i, c)| (i + 1, c)).collect();
        let end = text.chars().count() + 1;
        let err = |column: usize, message: &str| TriangulationError::Parse { column, message: message.to_string() };
        let mut pos = 0;
        let expect = |pos: &mut usize, want: char| -> Result<(), TriangulationError> {
            match chars.get(*pos) {
                Some(&(_, c)) if c == want => {
                    *pos += 1;
                    Ok(())
                }
                Some(&(col, c)) => Err(err(col, &format!("expected '{want}', found '{c}'"))),
                None => Err(err(end, &format!("expected '{want}', found end of input"))),
            }
        };
        expect(&mut pos, '{')?;
        let mut simplices = Vec::new();
        if chars.get(pos).map(|c| c.1) == Some('}') {
            pos += 1;
        } else {
            loop {
                expect(&mut pos, '{')?;
                let mut mask = 0u64;
                loop {
                    let start = pos;
                    while chars.get(pos).is_some_and(|c| c.1.is_ascii_digit()) {
                        pos += 1;
                    }
                    let col = chars.get(start).map_or(end, |c| c.0);
                    if start == pos {
                        return Err(err(col, "expected a point index"));
                    }
                    let digits: String = chars[start..pos].iter().map(|c| c.1).collect();
                    let v: usize = digits.parse().map_err(|_| err(col, "index out of range"))?;
                    if v >= MAX_POINTS {
                        return Err(err(col, "index out of range"));
                    }
                    if mask & (1u64 << v) != 0 {
                        return Err(err(col, "repeated vertex"));
                    }
                    mask |= 1u64 << v;
                    match chars.get(pos) {
                        Some(&(_, ',')) => pos += 1,
                        Some(&(_, '}')) => {
                            pos += 1;
                            break;
                        }
                        Some(&(col, c)) => return Err(err(col, &format!("expected ',' or '}}', found '{c}'"))),
                        None => return Err(err(end, "unterminated simplex")),
                    }
                }
                simplices.push(Simplex(mask));
                match chars.get(pos) {
                    Some(&(_, ',')) => pos += 1,
                    Some(&(_, '}')) => {
                        pos += 1;
                        break;
                    }
                    Some(&(col, c)) => return Err(err(col, &format!("expected ',' or '}}', found '{c}'"))),
                    None => return Err(err(end, "unterminated triangulation")),
                }
            }
        }
        if let Some(&(col, _)) = chars.get(pos) {
            return Err(err(col, "trailing characters"));
        }
        Ok(Triangulation::new(simplices))
    }
}

/// An interior ridge with its two incident simplices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ridge {
    pub ridge: u64,
    pub left: Simplex,
    pub right: Simplex,
}

impl Ridge {
    /// Vertex of `left` opposite the ridge.
    pub fn left_apex(&self) -> usize {
        (self.left.0 & !self.ridge).trailing_zeros() as usize
    }

    pub fn right_apex(&self) -> usize {
        (self.right.0 & !self.ridge).trailing_zeros() as usize
    }
}

/// Every `d`-subset of a simplex, tagged with the simplex and its apex.
fn ridge_incidences(t: &Triangulation) -> Vec<(u64, Simplex)> {
    let mut out = Vec::with_capacity(t.len() * 8);
    for &s in t.simplices() {
        let mut m = s.0;
        while m != 0 {
            let v = m & m.wrapping_neg();
            out.push((s.0 & !v, s));
            m &= m - 1;
        }
    }
    out.sort_unstable_by_key(|&(r, s)| (r, s.0));
    out
}

/// Ridges contained in exactly two simplices.
pub fn interior_ridges(t: &Triangulation) -> Vec<Ridge> {
    let inc = ridge_incidences(t);
    let mut out = Vec::new();
    let mut k = 0;
    while k < inc.len() {
        let mut e = k + 1;
        while e < inc.len() && inc[e].0 == inc[k].0 {
            e += 1;
        }
        if e - k == 2 {
            out.push(Ridge { ridge: inc[k].0, left: inc[k].1, right: inc[k + 1].1 });
        }
        k = e;
    }
    out
}

/// Ridges contained in exactly one simplex, with that simplex's opposite vertex.
pub fn boundary_ridges(t: &Triangulation) -> Vec<(u64, usize)> {
    let inc = ridge_incidences(t);
    let mut out = Vec::new();
    let mut k = 0;
    while k < inc.len() {
        let mut e = k + 1;
        while e < inc.len() && inc[e].0 == inc[k].0 {
            e += 1;
        }
        if e - k == 1 {
            let (r, s) = inc[k];
            out.push((r, (s.0 & !r).trailing_zeros() as usize));
        }
        k = e;
    }
    out
}

/// Beneath-and-beyond placing triangulation in the configuration's point order.
///
/// Starts from the first affinely independent `d+1` points; every later point
/// beyond some boundary facet is coned over all facets it sees. Points inside
/// the current hull are skipped.
pub fn placing_triangulation(cfg: &PointConfiguration) -> Triangulation {
    let basis = cfg.affine_basis();
    let mut used = basis.iter().fold(0u64, |m, &b| m | (1u64 << b));
    let mut simplices = vec![Simplex(used)];
    for p in 0..cfg.len() {
        if used & (1u64 << p) != 0 {
            continue;
        }
        let current = Triangulation::new(simplices.clone());
        let mut added = Vec::new();
        for (facet, apex) in boundary_ridges(&current) {
            let sp = cfg.side(facet, p);
            if sp != 0 && sp == -cfg.side(facet, apex) {
                added.push(Simplex(facet | (1u64 << p)));
            }
        }
        if !added.is_empty() {
            used |= 1u64 << p;
            simplices.extend(added);
        }
    }
    Triangulation::new(simplices)
}

/// Normalized volume of the convex hull.
pub fn hull_volume(cfg: &PointConfiguration) -> u64 {
    total_volume(cfg, &placing_triangulation(cfg))
}

pub fn total_volume(cfg: &PointConfiguration, t: &Triangulation) -> u64 {
    t.simplices().iter().map(|s| cfg.volume_mask(s.0)).sum()
}

/// Checks that `t` is a triangulation of `cfg`: spanning simplices that fit
/// together across interior ridges, boundary ridges on the hull, and total
/// volume equal to the hull volume.
pub fn is_valid(cfg: &PointConfiguration, t: &Triangulation) -> bool {
    let k = cfg.dim() + 1;
    let full = cfg.full_mask();
    for s in t.simplices() {
        if s.len() != k || s.0 & !full != 0 || cfg.volume_mask(s.0) == 0 {
            return false;
        }
    }
    if t.is_empty() || total_volume(cfg, t) != hull_volume(cfg) {
        return false;
    }
    let inc = ridge_incidences(t);
    let mut i = 0;
    while i < inc.len() {
        let mut e = i + 1;
        while e < inc.len() && inc[e].0 == inc[i].0 {
            e += 1;
        }
        let r = inc[i].0;
        let apex = |s: Simplex| (s.0 & !r).trailing_zeros() as usize;
        match e - i {
            1 => {
                let inner = cfg.side(r, apex(inc[i].1));
                if (0..cfg.len()).any(|q| cfg.side(r, q) == -inner) {
                    return false;
                }
            }
            2 => {
                let a = cfg.side(r, apex(inc[i].1));
                let b = cfg.side(r, apex(inc[i + 1].1));
                if a == 0 || a != -b {
                    return false;
                }
            }
            _ => return false,
        }
        i = e;
    }
    true
}

pub fn gkz_vector(cfg: &PointConfiguration, t: &Triangulation) -> Gkz {
    let mut gkz = vec![0u64; cfg.len()];
    for s in t.simplices() {
        add_simplex(&mut gkz, cfg.volume_mask(s.0), s.0);
    }
    gkz
}

#[inline]
pub(crate) fn add_simplex(gkz: &mut [u64], vol: u64, mut mask: u64) {
    while mask != 0 {
        gkz[mask.trailing_zeros() as usize] += vol;
        mask &= mask - 1;
    }
}

#[inline]
pub(crate) fn sub_simplex(gkz: &mut [u64], vol: u64, mut mask: u64) {
    while mask != 0 {
        gkz[mask.trailing_zeros() as usize] -= vol;
        mask &= mask - 1;
    }
}

/// Tie-break on equal GKZ vectors: the triangulation containing the smallest
/// simplex of the symmetric difference is the larger one.
pub fn compare_chi(a: &Triangulation, b: &Triangulation) -> Ordering {
    for (x, y) in a.simplices().iter().zip(b.simplices()) {
        if x != y {
            return if x < y { Ordering::Greater } else { Ordering::Less };
        }
    }
    a.len().cmp(&b.len())
}

/// The total order with precomputed GKZ vectors.
#[inline]
pub fn compare_with_gkz(a: &Triangulation, ga: &[u64], b: &Triangulation, gb: &[u64]) -> Ordering {
    ga.cmp(gb).then_with(|| compare_chi(a, b))
}

/// GKZ vectors lexicographically, then the simplex tie-break.
pub fn compare_total(cfg: &PointConfiguration, a: &Triangulation, b: &Triangulation) -> Ordering {
    compare_with_gkz(a, &gkz_vector(cfg, a), b, &gkz_vector(cfg, b))
}

pub fn is_full(cfg: &PointConfiguration, t: &Triangulation) -> bool {
    t.vertices_used() == cfg.full_mask()
}

pub fn is_unimodular(cfg: &PointConfiguration, t: &Triangulation) -> bool {
    t.simplices().iter().all(|s| cfg.volume_mask(s.0) == 1)
}

/// Cells containing `face`, with `face` removed: the link of `face` in `t`.
pub fn link(t: &Triangulation, face: u64) -> Vec<u64> {
    t.simplices().iter().filter(|s| s.0 & face == face).map(|s| s.0 & !face).collect()
}
