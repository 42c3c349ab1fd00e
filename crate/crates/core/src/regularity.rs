//! Regularity of triangulations as strict feasibility of folding constraints.
//!
//! A triangulation is regular iff some height vector `h` satisfies `c·h > 0`
//! for every folding constraint `c`. By Gordan's alternative this fails iff
//! some nonnegative, nonzero combination of the constraints vanishes, which is
//! a phase-one linear program. It is solved with a fraction-free (integer
//! pivoting) simplex method under Bland's rule; the final dual values give a
//! height vector, which is checked exactly before it is reported.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::exact::gcd_slice;
use crate::pointconfig::PointConfiguration;
use crate::triangulation::{containing_simplex, interior_ridges, Simplex, Triangulation};

/// Where a folding constraint comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintOrigin {
    /// An interior ridge, given with the two simplices meeting there.
    Ridge { ridge: u64, left: Simplex, right: Simplex },
    /// A point not used by the triangulation, with the simplex containing it.
    UnusedPoint { point: usize, simplex: Simplex },
}

/// The requirement `coefficients · h > 0` on the heights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldingConstraint {
    pub coefficients: Vec<i64>,
    pub origin: ConstraintOrigin,
}

fn dense(cfg: &PointConfiguration, mask: u64, coeffs: &[i64], positive: usize) -> Vec<i64> {
    let mut out = vec![0i64; cfg.len()];
    let mut m = mask;
    for &c in coeffs {
        out[m.trailing_zeros() as usize] = c;
        m &= m - 1;
    }
    let g = gcd_slice(&out).max(1);
    let sign = out[positive].signum();
    out.iter_mut().for_each(|c| *c = *c / g * sign);
    out
}

/// One constraint per interior ridge and one per unused point.
pub fn folding_constraints(cfg: &PointConfiguration, t: &Triangulation) -> Vec<FoldingConstraint> {
    let mut out = Vec::new();
    for r in interior_ridges(t) {
        let mask = r.left.0 | r.right.0;
        let coeffs = cfg.dependence_mask(mask);
        out.push(FoldingConstraint {
            coefficients: dense(cfg, mask, &coeffs, r.left_apex()),
            origin: ConstraintOrigin::Ridge { ridge: r.ridge, left: r.left, right: r.right },
        });
    }
    let mut unused = cfg.full_mask() & !t.vertices_used();
    while unused != 0 {
        let p = unused.trailing_zeros() as usize;
        unused &= unused - 1;
        if let Some((s, coeffs)) = containing_simplex(cfg, t, p) {
            out.push(FoldingConstraint {
                coefficients: dense(cfg, s.0 | (1u64 << p), &coeffs, p),
                origin: ConstraintOrigin::UnusedPoint { point: p, simplex: s },
            });
        }
    }
    out
}

/// Decides whether some `h` satisfies `c·h > 0` for every row `c`; on success
/// returns an integer witness.
pub fn strict_feasible(constraints: &[Vec<i64>]) -> Option<Vec<BigInt>> {
    let Some(first) = constraints.first() else {
        return Some(Vec::new());
    };
    let k = first.len();
    let witness = match gordan::<i128>(constraints, k) {
        Ok(w) => w,
        Err(Overflow) => gordan::<BigInt>(constraints, k).expect("bigint arithmetic does not overflow"),
    }?;
    assert!(verify_witness(constraints, &witness), "regularity witness failed exact verification");
    Some(witness)
}

/// `c·h > 0` for every constraint, exactly.
pub fn verify_witness(constraints: &[Vec<i64>], h: &[BigInt]) -> bool {
    constraints.iter().all(|c| {
        let v: BigInt = c.iter().zip(h).map(|(&ci, hi)| hi * ci).sum();
        v.is_positive()
    })
}

/// Height vector witnessing regularity, or `None` for a nonregular triangulation.
///
/// Heights on the first affinely independent points are fixed to zero.
pub fn regularity_witness(cfg: &PointConfiguration, t: &Triangulation) -> Option<Vec<BigInt>> {
    let constraints = folding_constraints(cfg, t);
    let basis = cfg.affine_basis();
    let free: Vec<usize> = (0..cfg.len()).filter(|p| !basis.contains(p)).collect();
    let reduced: Vec<Vec<i64>> =
        constraints.iter().map(|c| free.iter().map(|&p| c.coefficients[p]).collect()).collect();
    let w = strict_feasible(&reduced)?;
    let mut h = vec![<BigInt as Zero>::zero(); cfg.len()];
    for (k, &p) in free.iter().enumerate() {
        if let Some(v) = w.get(k) {
            h[p] = v.clone();
        }
    }
    let full: Vec<Vec<i64>> = constraints.into_iter().map(|c| c.coefficients).collect();
    assert!(verify_witness(&full, &h), "lifted witness failed exact verification");
    Some(h)
}

pub fn is_regular(cfg: &PointConfiguration, t: &Triangulation) -> bool {
    regularity_witness(cfg, t).is_some()
}

#[derive(Debug)]
struct Overflow;

/// Tableau entries: either checked `i128` or unbounded integers.
trait Entry: Clone + PartialEq {
    fn from_i64(v: i64) -> Self;
    fn zero() -> Self;
    fn sign(&self) -> Ordering;
    /// `(p·a - b·c) / d`, exact.
    fn pivot(p: &Self, a: &Self, b: &Self, c: &Self, d: &Self) -> Result<Self, Overflow>;
    /// Compares `a·b` with `c·d`.
    fn cmp_products(a: &Self, b: &Self, c: &Self, d: &Self) -> Result<Ordering, Overflow>;
    fn sub(a: &Self, b: &Self) -> Result<Self, Overflow>;
    fn neg_sum(xs: &[&Self]) -> Result<Self, Overflow>;
    fn to_big(&self) -> BigInt;
}

impl Entry for i128 {
    fn from_i64(v: i64) -> Self {
        v as i128
    }
    fn zero() -> Self {
        0
    }
    fn sign(&self) -> Ordering {
        self.cmp(&0)
    }
    fn pivot(p: &Self, a: &Self, b: &Self, c: &Self, d: &Self) -> Result<Self, Overflow> {
        let l = p.checked_mul(*a).ok_or(Overflow)?;
        let r = b.checked_mul(*c).ok_or(Overflow)?;
        Ok(l.checked_sub(r).ok_or(Overflow)? / d)
    }
    fn cmp_products(a: &Self, b: &Self, c: &Self, d: &Self) -> Result<Ordering, Overflow> {
        let l = a.checked_mul(*b).ok_or(Overflow)?;
        let r = c.checked_mul(*d).ok_or(Overflow)?;
        Ok(l.cmp(&r))
    }
    fn sub(a: &Self, b: &Self) -> Result<Self, Overflow> {
        a.checked_sub(*b).ok_or(Overflow)
    }
    fn neg_sum(xs: &[&Self]) -> Result<Self, Overflow> {
        xs.iter().try_fold(0i128, |acc, &&x| acc.checked_sub(x).ok_or(Overflow))
    }
    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
}

impl Entry for BigInt {
    fn from_i64(v: i64) -> Self {
        BigInt::from(v)
    }
    fn zero() -> Self {
        Zero::zero()
    }
    fn sign(&self) -> Ordering {
        if self.is_positive() {
            Ordering::Greater
        } else if self.is_negative() {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
    fn pivot(p: &Self, a: &Self, b: &Self, c: &Self, d: &Self) -> Result<Self, Overflow> {
        Ok((p * a - b * c) / d)
    }
    fn cmp_products(a: &Self, b: &Self, c: &Self, d: &Self) -> Result<Ordering, Overflow> {
        Ok((a * b).cmp(&(c * d)))
    }
    fn sub(a: &Self, b: &Self) -> Result<Self, Overflow> {
        Ok(a - b)
    }
    fn neg_sum(xs: &[&Self]) -> Result<Self, Overflow> {
        Ok(-xs.iter().fold(<BigInt as Zero>::zero(), |acc, &x| acc + x))
    }
    fn to_big(&self) -> BigInt {
        self.clone()
    }
}

/// Phase one for `{ Cᵀy = 0, 1ᵀy = 1, y ≥ 0 }` with one artificial per row.
///
/// Returns `Ok(None)` when that system is feasible (no strict solution
/// exists), else `Ok(Some(h))` with `C h > 0` read off the dual values.
fn gordan<T: Entry>(constraints: &[Vec<i64>], k: usize) -> Result<Option<Vec<BigInt>>, Overflow> {
    let m = constraints.len();
    let rows = k + 1;
    // Columns: y_0..y_{m-1}, artificials a_0..a_k, right-hand side.
    let cols = m + rows + 1;
    let rhs = cols - 1;
    let mut tab: Vec<Vec<T>> = vec![vec![T::zero(); cols]; rows + 1];
    for (j, c) in constraints.iter().enumerate() {
        for r in 0..k {
            tab[r][j] = T::from_i64(c[r]);
        }
        tab[k][j] = T::from_i64(1);
    }
    for r in 0..rows {
        tab[r][m + r] = T::from_i64(1);
    }
    tab[k][rhs] = T::from_i64(1);
    let obj = rows;
    for j in 0..m {
        let column: Vec<&T> = (0..rows).map(|r| &tab[r][j]).collect();
        tab[obj][j] = T::neg_sum(&column)?;
    }
    tab[obj][rhs] = T::from_i64(-1);
    let mut basis: Vec<usize> = (m..m + rows).collect();
    let mut denom = T::from_i64(1);

    loop {
        // Bland: the lowest-index column with negative reduced cost enters.
        let Some(c) = (0..rhs).find(|&j| tab[obj][j].sign() == Ordering::Less) else {
            break;
        };
        let mut leave: Option<usize> = None;
        for r in 0..rows {
            if tab[r][c].sign() != Ordering::Greater {
                continue;
            }
            leave = Some(match leave {
                None => r,
                Some(best) => match T::cmp_products(&tab[r][rhs], &tab[best][c], &tab[best][rhs], &tab[r][c])? {
                    Ordering::Less => r,
                    Ordering::Equal if basis[r] < basis[best] => r,
                    _ => best,
                },
            });
        }
        let r = leave.expect("phase one is bounded below");
        let p = tab[r][c].clone();
        for i in 0..=rows {
            if i == r {
                continue;
            }
            let f = tab[i][c].clone();
            for j in 0..cols {
                let v = T::pivot(&p, &tab[i][j], &f, &tab[r][j], &denom)?;
                tab[i][j] = v;
            }
        }
        denom = p;
        basis[r] = c;
    }

    if tab[obj][rhs].sign() != Ordering::Less {
        return Ok(None);
    }
    // Reduced cost of artificial r is D(1 - w_r); the heights are -w.
    let mut h = Vec::with_capacity(k);
    for r in 0..k {
        h.push(T::sub(&tab[obj][m + r], &denom)?.to_big());
    }
    Ok(Some(h))
}

/// Maximizes `ε` subject to `c·h ≥ ε` for every constraint and `ε ≤ 1`, with
/// `h` free, by a dense rational simplex method from the slack basis.
///
/// Returns the optimal `ε`; the system is strictly feasible iff it is positive.
pub fn max_epsilon(constraints: &[Vec<i64>]) -> BigRational {
    let m = constraints.len();
    if m == 0 {
        return BigRational::one();
    }
    let k = constraints[0].len();
    // Columns: h+ (k), h- (k), ε, slacks (m + 1), right-hand side.
    let eps = 2 * k;
    let cols = 2 * k + 1 + m + 1 + 1;
    let rhs = cols - 1;
    let q = |v: i64| BigRational::from_integer(BigInt::from(v));
    let mut tab: Vec<Vec<BigRational>> = vec![vec![BigRational::zero(); cols]; m + 2];
    for (j, c) in constraints.iter().enumerate() {
        for r in 0..k {
            tab[j][r] = q(-c[r]);
            tab[j][k + r] = q(c[r]);
        }
        tab[j][eps] = BigRational::one();
        tab[j][eps + 1 + j] = BigRational::one();
    }
    tab[m][eps] = BigRational::one();
    tab[m][eps + 1 + m] = BigRational::one();
    tab[m][rhs] = BigRational::one();
    let obj = m + 1;
    tab[obj][eps] = -BigRational::one();
    let mut basis: Vec<usize> = (0..=m).map(|j| eps + 1 + j).collect();
    loop {
        let Some(c) = (0..rhs).find(|&j| tab[obj][j].is_negative()) else {
            break;
        };
        let mut leave: Option<(usize, BigRational)> = None;
        for r in 0..=m {
            if !tab[r][c].is_positive() {
                continue;
            }
            let ratio = &tab[r][rhs] / &tab[r][c];
            let better = match &leave {
                None => true,
                Some((b, best)) => ratio < *best || (ratio == *best && basis[r] < basis[*b]),
            };
            if better {
                leave = Some((r, ratio));
            }
        }
        let (r, _) = leave.expect("objective is bounded by the constraint on ε");
        let p = tab[r][c].clone();
        for v in tab[r].iter_mut() {
            *v /= &p;
        }
        let pivot_row = tab[r].clone();
        for (i, row) in tab.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                *x -= &f * y;
            }
        }
        basis[r] = c;
    }
    tab[obj][rhs].clone()
}
