//! Point configurations in homogeneous integer coordinates.
//!
//! A configuration of `n` points spanning affine dimension `d` is stored as an
//! `n x (d+1)` integer matrix whose last column is the homogenizing
//! coordinate. All predicates (orientation, volume, affine dependences) reduce
//! to `(d+1) x (d+1)` determinants of rows of this matrix. Determinants of
//! `(d+1)`-subsets in ascending index order are tabulated lazily and shared.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::exact;

/// Largest number of points; simplices are stored as 64-bit vertex masks.
pub const MAX_POINTS: usize = 64;

/// Tabulate all `(d+1)`-subset determinants up to this many subsets.
const DET_TABLE_LIMIT: u64 = 1 << 22;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("point configuration is empty")]
    Empty,
    #[error("row {row} has {found} coordinates, expected {expected}")]
    RaggedRows { row: usize, found: usize, expected: usize },
    #[error("points do not affinely span: rank {rank}, expected {expected}")]
    NotSpanning { rank: usize, expected: usize },
    #[error("points {0} and {1} coincide")]
    DuplicatePoint(usize, usize),
    #[error("at most {MAX_POINTS} points are supported, got {0}")]
    TooManyPoints(usize),
    #[error("homogenizing coordinate of point {0} must be positive")]
    NonPositiveHomogenizing(usize),
    #[error("coordinates too large: normalized volumes would exceed 62 bits")]
    VolumeOverflow,
    #[error("points {0:?} do not have a one-dimensional affine dependence")]
    KernelNotOneDimensional(Vec<usize>),
    #[error("invalid permutation: {0}")]
    BadPermutation(String),
    #[error("permutation {0} is not induced by an affine map")]
    NotAffine(String),
    #[error("permutation {0} does not preserve volume")]
    NotUnimodular(String),
    #[error("unknown point family {0:?}")]
    UnknownFamily(String),
}

/// A permutation of `{0, .., n-1}` in one-line notation.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<u8>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self, GeometryError> {
        let n = images.len();
        if n > 256 {
            return Err(GeometryError::BadPermutation(format!("degree {n} exceeds 256")));
        }
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n {
                return Err(GeometryError::BadPermutation(format!("image {i} out of range for degree {n}")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(GeometryError::BadPermutation(format!("image {i} repeated")));
            }
        }
        Ok(Self { images: images.into_iter().map(|i| i as u8).collect() })
    }

    pub fn identity(n: usize) -> Self {
        Self { images: (0..n).map(|i| i as u8).collect() }
    }

    /// Builds a permutation from disjoint cycles, e.g. `&[&[0, 3, 2, 1]]` for `(0 3 2 1)`.
    pub fn from_cycles(n: usize, cycles: &[&[usize]]) -> Result<Self, GeometryError> {
        let mut images: Vec<usize> = (0..n).collect();
        for cycle in cycles {
            for (k, &a) in cycle.iter().enumerate() {
                let b = cycle[(k + 1) % cycle.len()];
                if a >= n || b >= n {
                    return Err(GeometryError::BadPermutation("cycle entry out of range".to_string()));
                }
                images[a] = b;
            }
        }
        Self::new(images)
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    #[inline]
    pub fn image(&self, i: usize) -> usize {
        self.images[i] as usize
    }

    pub fn images(&self) -> &[u8] {
        &self.images
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.images.iter().map(|&i| i as usize).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &g)| i == g as usize)
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        debug_assert_eq!(self.degree(), other.degree());
        Permutation { images: other.images.iter().map(|&i| self.images[i as usize]).collect() }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0u8; self.images.len()];
        for (i, &g) in self.images.iter().enumerate() {
            inv[g as usize] = i as u8;
        }
        Permutation { images: inv }
    }

    /// Image of a point set given as a bit mask.
    #[inline]
    pub fn act_mask(&self, mut mask: u64) -> u64 {
        let mut out = 0u64;
        while mask != 0 {
            let b = mask.trailing_zeros() as usize;
            out |= 1u64 << self.images[b];
            mask &= mask - 1;
        }
        out
    }

    /// Smallest point moved by the permutation, or `None` for the identity.
    pub fn first_moved(&self) -> Option<usize> {
        self.images.iter().enumerate().position(|(i, &g)| i != g as usize)
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Cycle notation; the identity prints as `()`.
impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.images.len();
        let mut seen = vec![false; n];
        let mut any = false;
        for start in 0..n {
            if seen[start] || self.image(start) == start {
                continue;
            }
            any = true;
            write!(f, "(")?;
            let mut i = start;
            let mut first = true;
            while !seen[i] {
                seen[i] = true;
                if !first {
                    write!(f, " ")?;
                }
                write!(f, "{i}")?;
                first = false;
                i = self.image(i);
            }
            write!(f, ")")?;
        }
        if !any {
            write!(f, "()")?;
        }
        Ok(())
    }
}

struct DetTable {
    binom: Vec<Vec<u64>>,
    dets: Option<Vec<i64>>,
}

impl DetTable {
    #[inline]
    fn rank(&self, mut mask: u64) -> usize {
        let mut r = 0u64;
        let mut t = 1;
        while mask != 0 {
            let v = mask.trailing_zeros() as usize;
            r += self.binom[v][t];
            t += 1;
            mask &= mask - 1;
        }
        r as usize
    }
}

fn binomials(n: usize, k: usize) -> Vec<Vec<u64>> {
    let mut b = vec![vec![0u64; k + 1]; n + 1];
    for i in 0..=n {
        b[i][0] = 1;
        for j in 1..=k.min(i) {
            b[i][j] = b[i - 1][j - 1].saturating_add(if j < i { b[i - 1][j] } else { 0 });
        }
    }
    b
}

/// Binomial coefficient, saturating at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// `n` points spanning affine dimension `d`, in homogeneous integer coordinates.
#[derive(Clone)]
pub struct PointConfiguration {
    rows: Vec<Vec<BigInt>>,
    fast: Vec<Vec<i64>>,
    dim: usize,
    ordering: Vec<usize>,
    tables: Arc<OnceLock<DetTable>>,
}

impl fmt::Debug for PointConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PointConfiguration")
            .field("n", &self.len())
            .field("d", &self.dim)
            .field("rows", &self.rows)
            .finish()
    }
}

impl PartialEq for PointConfiguration {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.ordering == other.ordering
    }
}

impl PointConfiguration {
    /// Appends the homogenizing coordinate `1` to affine rows. Rational
    /// entries are cleared by the common denominator of all rows.
    pub fn homogenize(raw: &[Vec<BigRational>]) -> Result<Self, GeometryError> {
        let first = raw.first().ok_or(GeometryError::Empty)?;
        let width = first.len();
        for (row, r) in raw.iter().enumerate() {
            if r.len() != width {
                return Err(GeometryError::RaggedRows { row, found: r.len(), expected: width });
            }
        }
        let lcm = raw.iter().flatten().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
        let rows = raw
            .iter()
            .map(|r| {
                let mut h: Vec<BigInt> =
                    r.iter().map(|q| (q * BigRational::from_integer(lcm.clone())).to_integer()).collect();
                h.push(BigInt::one());
                h
            })
            .collect();
        Self::from_homogeneous(rows)
    }

    /// Affine integer rows, homogenized.
    pub fn from_affine(raw: &[Vec<i64>]) -> Result<Self, GeometryError> {
        let q: Vec<Vec<BigRational>> =
            raw.iter().map(|r| r.iter().map(|&x| BigRational::from_integer(x.into())).collect()).collect();
        Self::homogenize(&q)
    }

    /// Rows that already carry a positive homogenizing coordinate in the last column.
    pub fn from_homogeneous(rows: Vec<Vec<BigInt>>) -> Result<Self, GeometryError> {
        let n = rows.len();
        if n == 0 {
            return Err(GeometryError::Empty);
        }
        if n > MAX_POINTS {
            return Err(GeometryError::TooManyPoints(n));
        }
        let width = rows[0].len();
        for (row, r) in rows.iter().enumerate() {
            if r.len() != width {
                return Err(GeometryError::RaggedRows { row, found: r.len(), expected: width });
            }
            if !r.last().is_some_and(|h| h.is_positive()) {
                return Err(GeometryError::NonPositiveHomogenizing(row));
            }
        }
        let rank = exact::rank_big(&rows);
        if rank != width {
            return Err(GeometryError::NotSpanning { rank, expected: width });
        }
        for i in 0..n {
            for j in i + 1..n {
                if projectively_equal(&rows[i], &rows[j]) {
                    return Err(GeometryError::DuplicatePoint(i, j));
                }
            }
        }
        if volume_bound(&rows) > (1u64 << 62) as f64 {
            return Err(GeometryError::VolumeOverflow);
        }
        let fast = rows
            .iter()
            .map(|r| r.iter().map(|x| x.to_i64().ok_or(GeometryError::VolumeOverflow)).collect())
            .collect::<Result<Vec<Vec<i64>>, _>>()?;
        Ok(Self { rows, fast, dim: width - 1, ordering: (0..n).collect(), tables: Arc::new(OnceLock::new()) })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Affine dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Homogeneous rows.
    pub fn rows(&self) -> &[Vec<BigInt>] {
        &self.rows
    }

    /// Original label of each point, in comparison order.
    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    /// Mask with every point set.
    pub fn full_mask(&self) -> u64 {
        if self.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.len()) - 1
        }
    }

    /// Relabels the points: new point `k` is old point `order[k]`.
    pub fn relabel(&self, order: &[usize]) -> Result<Self, GeometryError> {
        let perm = Permutation::new(order.to_vec())?;
        if perm.degree() != self.len() {
            return Err(GeometryError::BadPermutation("wrong degree".into()));
        }
        Ok(Self {
            rows: order.iter().map(|&i| self.rows[i].clone()).collect(),
            fast: order.iter().map(|&i| self.fast[i].clone()).collect(),
            dim: self.dim,
            ordering: order.iter().map(|&i| self.ordering[i]).collect(),
            tables: Arc::new(OnceLock::new()),
        })
    }

    fn tables(&self) -> &DetTable {
        self.tables.get_or_init(|| {
            let n = self.len();
            let k = self.dim + 1;
            let binom = binomials(n, k + 1);
            let count = binomial(n, k);
            let dets = (count <= DET_TABLE_LIMIT).then(|| {
                let mut dets = vec![0i64; count as usize];
                let mut subset: Vec<usize> = (0..k).collect();
                let mut idx = 0usize;
                loop {
                    // Colex enumeration matches `DetTable::rank`.
                    dets[idx] = self.det_rows(&subset);
                    idx += 1;
                    if !next_colex(&mut subset, n) {
                        break;
                    }
                }
                dets
            });
            DetTable { binom, dets }
        })
    }

    /// Determinant of the rows listed, in that order.
    pub fn det_rows(&self, idx: &[usize]) -> i64 {
        debug_assert_eq!(idx.len(), self.dim + 1);
        let refs: Vec<&[i64]> = idx.iter().map(|&i| self.fast[i].as_slice()).collect();
        let v = exact::det_i64_exact(&refs);
        v.to_i64().expect("determinant exceeds validated volume bound")
    }

    /// Determinant of the rows of a `(d+1)`-subset in ascending order.
    #[inline]
    pub fn signed_det_mask(&self, mask: u64) -> i64 {
        debug_assert_eq!(mask.count_ones() as usize, self.dim + 1);
        let t = self.tables();
        match &t.dets {
            Some(d) => d[t.rank(mask)],
            None => self.det_rows(&mask_to_vec(mask)),
        }
    }

    /// Sign of the determinant of the given rows in the given order.
    pub fn orientation(&self, tuple: &[usize]) -> i8 {
        assert_eq!(tuple.len(), self.dim + 1, "orientation needs d+1 points");
        let mut mask = 0u64;
        for &i in tuple {
            assert!(i < self.len(), "point index {i} out of range");
            if mask & (1 << i) != 0 {
                return 0;
            }
            mask |= 1 << i;
        }
        let det = self.signed_det_mask(mask);
        (det.signum() as i8) * permutation_parity(tuple)
    }

    /// `|det|` of the homogeneous rows: `d!` times the Euclidean volume for affine input.
    pub fn normalized_volume(&self, simplex: &[usize]) -> u64 {
        let mask = indices_to_mask(simplex);
        if mask.count_ones() as usize != self.dim + 1 {
            return 0;
        }
        self.volume_mask(mask)
    }

    #[inline]
    pub fn volume_mask(&self, mask: u64) -> u64 {
        self.signed_det_mask(mask).unsigned_abs()
    }

    /// Dependence coefficients for the `d+2` points of `mask`, in ascending point order.
    ///
    /// Coefficient `t` is `(-1)^t` times the determinant of the other `d+1`
    /// rows. Not reduced and not sign-normalized.
    pub fn dependence_mask(&self, mask: u64) -> Vec<i64> {
        let pts = mask_to_vec(mask);
        let mut out = Vec::with_capacity(pts.len());
        for (t, &p) in pts.iter().enumerate() {
            let det = self.signed_det_mask(mask & !(1u64 << p));
            out.push(if t % 2 == 0 { det } else { -det });
        }
        out
    }

    /// Side of the hyperplane spanned by the `d` points of `facet` on which `x` lies.
    ///
    /// Two points lie strictly on the same side iff their signs agree and are nonzero.
    #[inline]
    pub fn side(&self, facet: u64, x: usize) -> i8 {
        debug_assert_eq!(facet.count_ones() as usize, self.dim);
        let bit = 1u64 << x;
        if facet & bit != 0 {
            return 0;
        }
        let sign = self.signed_det_mask(facet | bit).signum() as i8;
        // Moving `x` to the end of the sorted tuple passes every larger facet point.
        if (facet & !(bit | (bit - 1))).count_ones().is_multiple_of(2) {
            sign
        } else {
            -sign
        }
    }

    /// Nonzero integer vector `c` with `Σ c_i row_i = 0` over the `d+2` points
    /// of `tuple`, aligned with `tuple`, coprime, first nonzero entry positive.
    pub fn affine_dependence(&self, tuple: &[usize]) -> Result<Vec<i64>, GeometryError> {
        let mask = indices_to_mask(tuple);
        if tuple.len() != self.dim + 2 || mask.count_ones() as usize != tuple.len() {
            return Err(GeometryError::KernelNotOneDimensional(tuple.to_vec()));
        }
        let sorted = mask_to_vec(mask);
        let coeffs = self.dependence_mask(mask);
        if coeffs.iter().all(|&c| c == 0) {
            return Err(GeometryError::KernelNotOneDimensional(tuple.to_vec()));
        }
        let mut out: Vec<i64> =
            tuple.iter().map(|p| coeffs[sorted.binary_search(p).expect("point in tuple")]).collect();
        let g = exact::gcd_slice(&out);
        let sign = out.iter().find(|&&c| c != 0).map_or(1, |c| c.signum());
        for c in out.iter_mut() {
            *c = *c / g * sign;
        }
        Ok(out)
    }

    /// Checks that `g` is induced by a volume-preserving affine map of the points.
    pub fn validate_symmetry(&self, g: &Permutation) -> Result<(), GeometryError> {
        let n = self.len();
        if g.degree() != n {
            return Err(GeometryError::BadPermutation(format!("degree {} does not match {} points", g.degree(), n)));
        }
        let basis = self.affine_basis();
        let basis_rows: Vec<Vec<BigInt>> = basis.iter().map(|&b| self.rows[b].clone()).collect();
        let det_b = exact::det_big(&basis_rows);
        let image_rows: Vec<Vec<BigInt>> = basis.iter().map(|&b| self.rows[g.image(b)].clone()).collect();
        for p in 0..n {
            // Cramer: row_p = Σ_b (det_b / det_B) row_b.
            let mut lhs = vec![BigInt::zero(); self.dim + 1];
            for (k, _) in basis.iter().enumerate() {
                let mut m = basis_rows.clone();
                m[k] = self.rows[p].clone();
                let lambda = exact::det_big(&m);
                if lambda.is_zero() {
                    continue;
                }
                for (acc, x) in lhs.iter_mut().zip(&image_rows[k]) {
                    *acc += &lambda * x;
                }
            }
            let rhs: Vec<BigInt> = self.rows[g.image(p)].iter().map(|x| x * &det_b).collect();
            if lhs != rhs {
                return Err(GeometryError::NotAffine(g.to_string()));
            }
        }
        if exact::det_big(&image_rows).abs() != det_b.abs() {
            return Err(GeometryError::NotUnimodular(g.to_string()));
        }
        Ok(())
    }

    /// First `d+1` affinely independent points in index order.
    pub fn affine_basis(&self) -> Vec<usize> {
        let mut basis: Vec<usize> = Vec::with_capacity(self.dim + 1);
        let mut rows: Vec<Vec<BigInt>> = Vec::new();
        for p in 0..self.len() {
            rows.push(self.rows[p].clone());
            if exact::rank_big(&rows) == rows.len() {
                basis.push(p);
                if basis.len() == self.dim + 1 {
                    break;
                }
            } else {
                rows.pop();
            }
        }
        basis
    }
}

fn next_colex(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    for i in 0..k {
        let limit = if i + 1 < k { subset[i + 1] } else { n };
        if subset[i] + 1 < limit {
            subset[i] += 1;
            for (j, s) in subset.iter_mut().enumerate().take(i) {
                *s = j;
            }
            return true;
        }
    }
    false
}

fn projectively_equal(a: &[BigInt], b: &[BigInt]) -> bool {
    let (ha, hb) = (a.last().unwrap(), b.last().unwrap());
    a.iter().zip(b).all(|(x, y)| x * hb == y * ha)
}

/// Upper bound on every normalized simplex volume times the number of
/// simplices through a point, evaluated in floating point.
fn volume_bound(rows: &[Vec<BigInt>]) -> f64 {
    let width = rows[0].len();
    let d = width - 1;
    let affine = rows.iter().all(|r| r[d].is_one());
    if affine {
        // Hull inside the bounding box: nvol <= d! * Π extents.
        let mut bound = (1..=d).map(|k| k as f64).product::<f64>();
        for c in 0..d {
            let lo = rows.iter().map(|r| r[c].to_f64().unwrap_or(f64::INFINITY)).fold(f64::INFINITY, f64::min);
            let hi = rows.iter().map(|r| r[c].to_f64().unwrap_or(f64::INFINITY)).fold(f64::NEG_INFINITY, f64::max);
            bound *= (hi - lo).max(1.0);
        }
        bound * width as f64
    } else {
        let mut norms: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().map(|x| x.to_f64().unwrap_or(f64::INFINITY).powi(2)).sum::<f64>().sqrt())
            .collect();
        norms.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let hadamard: f64 = norms.iter().take(width).product();
        hadamard * binomial(rows.len(), width) as f64 * width as f64
    }
}

/// Sign of the permutation that sorts `tuple` (entries assumed distinct).
fn permutation_parity(tuple: &[usize]) -> i8 {
    let mut inversions = 0usize;
    for i in 0..tuple.len() {
        for j in i + 1..tuple.len() {
            if tuple[i] > tuple[j] {
                inversions += 1;
            }
        }
    }
    if inversions.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

pub fn indices_to_mask(idx: &[usize]) -> u64 {
    idx.iter().fold(0u64, |m, &i| m | (1u64 << i))
}

pub fn mask_to_vec(mut mask: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    while mask != 0 {
        out.push(mask.trailing_zeros() as usize);
        mask &= mask - 1;
    }
    out
}

/// The benchmark families.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FamilySpec {
    /// Vertices of the `d`-cube `{0,1}^d`.
    Cube(usize),
    /// Vertices of the product of simplices `Δp × Δq`.
    SimplexProduct(usize, usize),
    /// Lattice points of the dilated simplex `k·Δd`.
    DilatedSimplex(usize, usize),
    /// Three outer and three inner points in the plane.
    Moae,
}

impl FamilySpec {
    /// Parses `cube 4`, `simplex_product 2 3`, `dilated_simplex 2 3` or `moae`.
    pub fn parse(name: &str, params: &[&str]) -> Result<Self, GeometryError> {
        let unknown = || GeometryError::UnknownFamily(format!("{name} {}", params.join(" ")).trim().to_string());
        let nums = params.iter().map(|p| p.parse::<usize>()).collect::<Result<Vec<_>, _>>().map_err(|_| unknown())?;
        match (name, nums.as_slice()) {
            ("cube", [d]) if (1..=6).contains(d) => Ok(Self::Cube(*d)),
            ("simplex_product", [p, q]) if (*p + 1) * (*q + 1) <= MAX_POINTS && p + q >= 1 => {
                Ok(Self::SimplexProduct(*p, *q))
            }
            ("dilated_simplex", [k, d]) if *k >= 1 && *d >= 1 && binomial(k + d, *d) <= MAX_POINTS as u64 => {
                Ok(Self::DilatedSimplex(*k, *d))
            }
            ("moae", []) => Ok(Self::Moae),
            _ => Err(unknown()),
        }
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Cube(d) => write!(f, "cube {d}"),
            Self::SimplexProduct(p, q) => write!(f, "simplex_product {p} {q}"),
            Self::DilatedSimplex(k, d) => write!(f, "dilated_simplex {k} {d}"),
            Self::Moae => write!(f, "moae"),
        }
    }
}

/// Points and symmetry generators of a benchmark family.
pub fn generate_family(spec: &FamilySpec) -> Result<(PointConfiguration, Vec<Permutation>), GeometryError> {
    let (points, gens) = match *spec {
        FamilySpec::Cube(d) => cube(d),
        FamilySpec::SimplexProduct(p, q) => simplex_product(p, q),
        FamilySpec::DilatedSimplex(k, d) => dilated_simplex(k, d),
        FamilySpec::Moae => (
            vec![vec![0, 0], vec![4, 0], vec![0, 4], vec![1, 1], vec![2, 1], vec![1, 2]],
            vec![vec![1, 2, 0, 4, 5, 3], vec![0, 2, 1, 3, 5, 4]],
        ),
    };
    let cfg = PointConfiguration::from_affine(&points)?;
    let gens = gens
        .into_iter()
        .map(Permutation::new)
        .filter(|g| !g.as_ref().is_ok_and(|g| g.is_identity()))
        .collect::<Result<Vec<_>, _>>()?;
    for g in &gens {
        cfg.validate_symmetry(g)?;
    }
    Ok((cfg, gens))
}

type Family = (Vec<Vec<i64>>, Vec<Vec<usize>>);

fn cube(d: usize) -> Family {
    let n = 1usize << d;
    let coord = |i: usize, k: usize| ((i >> (d - 1 - k)) & 1) as i64;
    let points = (0..n).map(|i| (0..d).map(|k| coord(i, k)).collect()).collect();
    let index = |c: &[i64]| c.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
    let mut gens = Vec::new();
    for k in 0..d.saturating_sub(1) {
        gens.push(
            (0..n)
                .map(|i| {
                    let mut c: Vec<i64> = (0..d).map(|t| coord(i, t)).collect();
                    c.swap(k, k + 1);
                    index(&c)
                })
                .collect(),
        );
    }
    gens.push((0..n).map(|i| i ^ (1 << (d - 1))).collect());
    (points, gens)
}

fn simplex_product(p: usize, q: usize) -> Family {
    let vertex = |i: usize, dim: usize| -> Vec<i64> { (1..=dim).map(|k| i64::from(k == i)).collect() };
    let mut points = Vec::new();
    for i in 0..=p {
        for j in 0..=q {
            let mut row = vertex(i, p);
            row.extend(vertex(j, q));
            points.push(row);
        }
    }
    let idx = |i: usize, j: usize| i * (q + 1) + j;
    let mut gens = Vec::new();
    let lift_left = |sigma: &dyn Fn(usize) -> usize| -> Vec<usize> {
        (0..=p).flat_map(|i| (0..=q).map(move |j| (i, j))).map(|(i, j)| idx(sigma(i), j)).collect()
    };
    let lift_right = |sigma: &dyn Fn(usize) -> usize| -> Vec<usize> {
        (0..=p).flat_map(|i| (0..=q).map(move |j| (i, j))).map(|(i, j)| idx(i, sigma(j))).collect()
    };
    if p >= 1 {
        gens.push(lift_left(&|i| match i {
            0 => 1,
            1 => 0,
            x => x,
        }));
        gens.push(lift_left(&|i| (i + 1) % (p + 1)));
    }
    if q >= 1 {
        gens.push(lift_right(&|j| match j {
            0 => 1,
            1 => 0,
            x => x,
        }));
        gens.push(lift_right(&|j| (j + 1) % (q + 1)));
    }
    (points, gens)
}

fn dilated_simplex(k: usize, d: usize) -> Family {
    fn rec(prefix: &mut Vec<i64>, left: i64, d: usize, out: &mut Vec<Vec<i64>>) {
        if prefix.len() == d {
            out.push(prefix.clone());
            return;
        }
        for x in 0..=left {
            prefix.push(x);
            rec(prefix, left - x, d, out);
            prefix.pop();
        }
    }
    let mut points = Vec::new();
    rec(&mut Vec::new(), k as i64, d, &mut points);
    let lookup: HashMap<Vec<i64>, usize> = points.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
    let bary = |p: &[i64]| -> Vec<i64> {
        let mut b = vec![k as i64 - p.iter().sum::<i64>()];
        b.extend_from_slice(p);
        b
    };
    let apply = |sigma: &dyn Fn(usize) -> usize| -> Vec<usize> {
        points
            .iter()
            .map(|p| {
                let b = bary(p);
                let mut image = vec![0i64; d + 1];
                for (t, &v) in b.iter().enumerate() {
                    image[sigma(t)] = v;
                }
                lookup[&image[1..]]
            })
            .collect()
    };
    let gens = vec![
        apply(&|t| match t {
            0 => 1,
            1 => 0,
            x => x,
        }),
        apply(&|t| (t + 1) % (d + 1)),
    ];
    (points, gens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(points: &[&[i64]]) -> PointConfiguration {
        PointConfiguration::from_affine(&points.iter().map(|p| p.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn homogenize_segment() {
        let c = cfg(&[&[0], &[1]]);
        assert_eq!(c.len(), 2);
        assert_eq!(c.dim(), 1);
        let expect: Vec<Vec<BigInt>> = vec![vec![0.into(), 1.into()], vec![1.into(), 1.into()]];
        assert_eq!(c.rows(), expect.as_slice());
    }

    #[test]
    fn homogenize_clears_denominators() {
        let half = BigRational::new(1.into(), 2.into());
        let raw = vec![vec![BigRational::zero()], vec![half], vec![BigRational::one()]];
        let c = PointConfiguration::homogenize(&raw).unwrap();
        assert_eq!(c.rows()[1], vec![BigInt::from(1), BigInt::from(1)]);
        assert_eq!(c.rows()[2], vec![BigInt::from(2), BigInt::from(1)]);
    }

    #[test]
    fn four_cube_dimensions() {
        let (c, _) = generate_family(&FamilySpec::Cube(4)).unwrap();
        assert_eq!((c.len(), c.dim()), (16, 4));
    }

    #[test]
    fn rejects_collinear_and_duplicates() {
        let err = PointConfiguration::from_affine(&[vec![0, 0], vec![1, 1], vec![2, 2]]).unwrap_err();
        assert!(matches!(err, GeometryError::NotSpanning { rank: 2, expected: 3 }));
        let err = PointConfiguration::from_affine(&[vec![0], vec![1], vec![0]]).unwrap_err();
        assert_eq!(err, GeometryError::DuplicatePoint(0, 2));
        let err = PointConfiguration::from_affine(&[vec![0], vec![1, 2]]).unwrap_err();
        assert!(matches!(err, GeometryError::RaggedRows { .. }));
    }

    #[test]
    fn orientation_examples() {
        let c = cfg(&[&[0, 0], &[1, 0], &[0, 1], &[1, 1]]);
        assert_eq!(c.orientation(&[0, 1, 2]), 1);
        assert_eq!(c.orientation(&[1, 0, 2]), -1);
        assert_eq!(c.orientation(&[0, 0, 2]), 0);
        assert_eq!(c.orientation(&[2, 1, 0]), -1);
    }

    #[test]
    fn normalized_volumes() {
        let unit = cfg(&[&[0, 0, 0], &[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]);
        assert_eq!(unit.normalized_volume(&[0, 1, 2, 3]), 1);
        let (two, _) = generate_family(&FamilySpec::DilatedSimplex(2, 3)).unwrap();
        let corners: Vec<usize> = (0..two.len())
            .filter(|&i| {
                let r = &two.rows()[i];
                let s: i64 = r[..3].iter().map(|x| x.to_i64().unwrap()).sum();
                s == 0 || r[..3].iter().any(|x| x == &BigInt::from(2))
            })
            .collect();
        assert_eq!(corners.len(), 4);
        assert_eq!(two.normalized_volume(&corners), 8);
    }

    #[test]
    fn four_cube_simplex_volumes_are_one_to_three() {
        // Exhaustive over all 5-subsets of the 4-cube.
        let (c, _) = generate_family(&FamilySpec::Cube(4)).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        let mut subset: Vec<usize> = (0..5).collect();
        loop {
            let v = c.normalized_volume(&subset);
            if v > 0 {
                seen.insert(v);
            }
            if !next_colex(&mut subset, 16) {
                break;
            }
        }
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn dependence_examples() {
        let line = cfg(&[&[0], &[1], &[2]]);
        assert_eq!(line.affine_dependence(&[0, 1, 2]).unwrap(), vec![1, -2, 1]);
        let square = cfg(&[&[0, 0], &[1, 0], &[0, 1], &[1, 1]]);
        assert_eq!(square.affine_dependence(&[0, 1, 2, 3]).unwrap(), vec![1, -1, -1, 1]);
        assert_eq!(square.affine_dependence(&[3, 1, 2, 0]).unwrap(), vec![1, -1, -1, 1]);
    }

    #[test]
    fn moae_dependence_solves_kernel() {
        let (c, _) = generate_family(&FamilySpec::Moae).unwrap();
        let tuple = [0, 1, 3, 4];
        let dep = c.affine_dependence(&tuple).unwrap();
        // Independent check: the dependence annihilates every homogeneous column.
        for col in 0..3 {
            let s: BigInt = tuple.iter().zip(&dep).map(|(&p, &k)| &c.rows()[p][col] * k).sum();
            assert!(s.is_zero());
        }
        // (0,0) - (4,0) - 4(1,1) + 4(2,1) = 0 with coefficient sum 0.
        assert_eq!(dep, vec![1, -1, -4, 4]);
    }

    #[test]
    fn dependence_needs_spanning_points() {
        let c = cfg(&[&[0, 0], &[1, 0], &[2, 0], &[3, 0], &[0, 1]]);
        assert!(matches!(c.affine_dependence(&[0, 1, 2, 3]), Err(GeometryError::KernelNotOneDimensional(_))));
    }

    #[test]
    fn family_group_generators_are_symmetries() {
        for spec in [
            FamilySpec::Cube(3),
            FamilySpec::Cube(4),
            FamilySpec::SimplexProduct(2, 3),
            FamilySpec::DilatedSimplex(3, 3),
            FamilySpec::Moae,
        ] {
            let (c, gens) = generate_family(&spec).unwrap();
            assert!(!gens.is_empty());
            for g in &gens {
                c.validate_symmetry(g).unwrap();
            }
        }
    }

    #[test]
    fn validate_symmetry_examples() {
        let (c, _) = generate_family(&FamilySpec::Cube(3)).unwrap();
        c.validate_symmetry(&Permutation::identity(8)).unwrap();
        // x ↦ (x2, x1, x3): swap the two most significant bits of the label.
        let swap: Vec<usize> = (0..8)
            .map(|i| {
                let (a, b, rest) = ((i >> 2) & 1, (i >> 1) & 1, i & 1);
                (b << 2) | (a << 1) | rest
            })
            .collect();
        c.validate_symmetry(&Permutation::new(swap).unwrap()).unwrap();
        let cycle = Permutation::new(vec![1, 2, 3, 4, 5, 6, 7, 0]).unwrap();
        assert!(matches!(c.validate_symmetry(&cycle), Err(GeometryError::NotAffine(_))));
    }

    #[test]
    fn non_affine_line_permutations_rejected() {
        let c = cfg(&[&[0], &[1], &[2], &[4]]);
        let p = Permutation::new(vec![0, 2, 3, 1]).unwrap();
        assert!(c.validate_symmetry(&p).is_err());
        let refl = Permutation::new(vec![3, 2, 1, 0]).unwrap();
        assert!(matches!(c.validate_symmetry(&refl), Err(GeometryError::NotAffine(_))));
        let line = cfg(&[&[0], &[1], &[2], &[3]]);
        assert!(line.validate_symmetry(&refl).is_ok());
    }

    #[test]
    fn moae_symmetry_generators() {
        let (c, gens) = generate_family(&FamilySpec::Moae).unwrap();
        assert_eq!(gens[0].to_vec(), vec![1, 2, 0, 4, 5, 3]);
        let inner_reversed = Permutation::new(vec![1, 2, 0, 5, 3, 4]).unwrap();
        assert!(matches!(c.validate_symmetry(&inner_reversed), Err(GeometryError::NotAffine(_))));
    }

    #[test]
    fn permutation_basics() {
        let p = Permutation::from_cycles(4, &[&[0, 3, 2, 1]]).unwrap();
        assert_eq!(p.to_vec(), vec![3, 0, 1, 2]);
        assert_eq!(p.to_string(), "(0 3 2 1)");
        assert!(p.compose(&p.inverse()).is_identity());
        assert_eq!(Permutation::identity(3).to_string(), "()");
        assert_eq!(p.act_mask(0b0110), 0b0011);
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![2, 0]).is_err());
    }

    #[test]
    fn family_parse() {
        assert_eq!(FamilySpec::parse("cube", &["4"]).unwrap(), FamilySpec::Cube(4));
        assert_eq!(FamilySpec::parse("moae", &[]).unwrap(), FamilySpec::Moae);
        assert!(matches!(FamilySpec::parse("sphere", &["2"]), Err(GeometryError::UnknownFamily(_))));
        assert!(FamilySpec::parse("cube", &["x"]).is_err());
    }

    #[test]
    fn relabel_keeps_original_labels() {
        let (c, _) = generate_family(&FamilySpec::Moae).unwrap();
        let r = c.relabel(&[5, 4, 3, 2, 1, 0]).unwrap();
        assert_eq!(r.ordering(), &[5, 4, 3, 2, 1, 0]);
        assert_eq!(r.rows()[0], c.rows()[5]);
    }
}
