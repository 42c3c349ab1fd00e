//! Bistellar flips supported on circuits.

use rustc_hash::FxHashSet;

use super::{add_simplex, interior_ridges, link, sub_simplex, Gkz, Simplex, Triangulation, TriangulationError};
use crate::pointconfig::PointConfiguration;

/// A flip on the circuit `(pos, neg)`: the cells `(pos ∪ neg) \ {i}` for `i` in
/// `pos`, joined with a common link, are present in the source triangulation
/// and are replaced by the cells indexed by `neg`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Flip {
    pub removed: Vec<Simplex>,
    pub added: Vec<Simplex>,
    pub pos: u64,
    pub neg: u64,
}

impl Flip {
    pub fn reversed(&self) -> Flip {
        Flip { removed: self.added.clone(), added: self.removed.clone(), pos: self.neg, neg: self.pos }
    }

    /// GKZ vector of the target, given the source's.
    pub fn target_gkz(&self, cfg: &PointConfiguration, gkz: &[u64]) -> Gkz {
        let mut out = gkz.to_vec();
        for s in &self.removed {
            sub_simplex(&mut out, cfg.volume_mask(s.0), s.0);
        }
        for s in &self.added {
            add_simplex(&mut out, cfg.volume_mask(s.0), s.0);
        }
        out
    }

    /// Image under a point permutation.
    pub fn permuted(&self, images: &[u8]) -> Flip {
        let map = |m: u64| {
            let mut m = m;
            let mut out = 0u64;
            while m != 0 {
                out |= 1u64 << images[m.trailing_zeros() as usize];
                m &= m - 1;
            }
            out
        };
        let sorted = |v: &[Simplex]| {
            let mut w: Vec<Simplex> = v.iter().map(|s| Simplex(map(s.0))).collect();
            w.sort_unstable();
            w
        };
        Flip { removed: sorted(&self.removed), added: sorted(&self.added), pos: map(self.pos), neg: map(self.neg) }
    }
}

/// Every flip supported by `t`.
///
/// Circuits come from the `d+2` points of each interior ridge and its two
/// apexes, and from each unused point together with a simplex containing it.
pub fn find_flips(cfg: &PointConfiguration, t: &Triangulation) -> Vec<Flip> {
    let mut seen: FxHashSet<(u64, u64)> = FxHashSet::default();
    let mut flips = Vec::new();
    for r in interior_ridges(t) {
        let a = r.left_apex();
        let zm = r.left.0 | r.right.0;
        let coeffs = cfg.dependence_mask(zm);
        let (mut pos, mut neg) = (0u64, 0u64);
        let mut m = zm;
        let mut k = 0;
        let mut sign_a = 0;
        while m != 0 {
            let v = m.trailing_zeros() as usize;
            if v == a {
                sign_a = coeffs[k].signum();
            }
            m &= m - 1;
            k += 1;
        }
        let mut m = zm;
        for &c in &coeffs {
            let bit = m & m.wrapping_neg();
            if c.signum() == sign_a {
                pos |= bit;
            } else if c != 0 {
                neg |= bit;
            }
            m &= m - 1;
        }
        if !seen.insert((pos, neg)) {
            continue;
        }
        if let Some(f) = supported_flip(t, pos, neg) {
            flips.push(f);
        }
    }
    let unused = cfg.full_mask() & !t.vertices_used();
    let mut u = unused;
    while u != 0 {
        let p = u.trailing_zeros() as usize;
        u &= u - 1;
        if let Some(neg) = carrier_face(cfg, t, p) {
            if let Some(f) = supported_flip(t, 1u64 << p, neg) {
                flips.push(f);
            }
        }
    }
    flips
}

/// The lexicographically first simplex of `t` containing point `p`, with the
/// dependence on its vertices and `p` in ascending point order, scaled so
/// that the coefficient of `p` is positive.
pub fn containing_simplex(cfg: &PointConfiguration, t: &Triangulation, p: usize) -> Option<(Simplex, Vec<i64>)> {
    let bit = 1u64 << p;
    t.simplices().iter().find_map(|s| {
        if s.0 & bit != 0 {
            return None;
        }
        let mask = s.0 | bit;
        let mut coeffs = cfg.dependence_mask(mask);
        let idx = (mask & (bit - 1)).count_ones() as usize;
        if coeffs[idx] < 0 {
            coeffs.iter_mut().for_each(|c| *c = -*c);
        }
        let others_nonpositive = coeffs.iter().enumerate().all(|(k, &c)| k == idx || c <= 0);
        others_nonpositive.then_some((*s, coeffs))
    })
}

/// Support of the minimal face of `t` containing the unused point `p`.
pub(crate) fn carrier_face(cfg: &PointConfiguration, t: &Triangulation, p: usize) -> Option<u64> {
    let (s, coeffs) = containing_simplex(cfg, t, p)?;
    let mask = s.0 | (1u64 << p);
    let mut face = 0u64;
    let mut m = mask;
    for &c in &coeffs {
        let b = m & m.wrapping_neg();
        m &= m - 1;
        if c < 0 {
            face |= b;
        }
    }
    Some(face)
}

/// The insertion flip placing the unused point `p` into its carrier face.
pub fn carrier_flip(cfg: &PointConfiguration, t: &Triangulation, p: usize) -> Option<Flip> {
    supported_flip(t, 1u64 << p, carrier_face(cfg, t, p)?)
}

fn supported_flip(t: &Triangulation, pos: u64, neg: u64) -> Option<Flip> {
    let support = pos | neg;
    let mut common: Option<Vec<u64>> = None;
    let mut m = pos;
    while m != 0 {
        let bit = m & m.wrapping_neg();
        m &= m - 1;
        let l = link(t, support & !bit);
        if l.is_empty() {
            return None;
        }
        match &common {
            None => common = Some(l),
            Some(c) if *c == l => {}
            Some(_) => return None,
        }
    }
    let links = common?;
    let cells = |side: u64| {
        let mut out = Vec::new();
        let mut m = side;
        while m != 0 {
            let bit = m & m.wrapping_neg();
            m &= m - 1;
            out.extend(links.iter().map(|&l| Simplex((support & !bit) | l)));
        }
        out.sort_unstable();
        out
    };
    Some(Flip { removed: cells(pos), added: cells(neg), pos, neg })
}

/// `(t \ removed) ∪ added`.
pub fn apply_flip(t: &Triangulation, f: &Flip) -> Result<Triangulation, TriangulationError> {
    for &s in &f.removed {
        if !t.contains(s) {
            return Err(TriangulationError::FlipNotApplicable(s));
        }
    }
    let mut out: Vec<Simplex> = Vec::with_capacity(t.len() + f.added.len() - f.removed.len());
    let (mut i, mut j) = (0, 0);
    let kept = t.simplices().iter().filter(|s| f.removed.binary_search(s).is_err());
    let kept: Vec<Simplex> = kept.copied().collect();
    while i < kept.len() || j < f.added.len() {
        if j == f.added.len() || (i < kept.len() && kept[i] < f.added[j]) {
            out.push(kept[i]);
            i += 1;
        } else {
            out.push(f.added[j]);
            j += 1;
        }
    }
    Ok(Triangulation::from_sorted(out))
}
