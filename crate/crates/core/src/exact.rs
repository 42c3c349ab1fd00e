//! Fraction-free integer linear algebra.
//!
//! Everything here is exact. The `i128` routines use checked arithmetic and
//! report overflow with `None`; callers then retry with [`BigInt`].

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

/// Determinant of a square `i64` matrix; never overflows.
pub fn det_i64_exact(rows: &[&[i64]]) -> BigInt {
    match det_i128(rows) {
        Some(v) => BigInt::from(v),
        None => {
            let big: Vec<Vec<BigInt>> = rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
            det_big(&big)
        }
    }
}

/// Determinant of a square `i64` matrix via Bareiss elimination in `i128`.
///
/// Returns `None` if an intermediate value leaves the `i128` range.
pub fn det_i128(rows: &[&[i64]]) -> Option<i128> {
    let k = rows.len();
    if k == 0 {
        return Some(1);
    }
    let mut a: Vec<i128> = Vec::with_capacity(k * k);
    for r in rows {
        a.extend(r.iter().map(|&x| x as i128));
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for col in 0..k {
        if a[col * k + col] == 0 {
            match (col + 1..k).find(|&r| a[r * k + col] != 0) {
                Some(swap) => {
                    for c in 0..k {
                        a.swap(col * k + c, swap * k + c);
                    }
                    sign = -sign;
                }
                None => return Some(0),
            }
        }
        let pivot = a[col * k + col];
        for r in col + 1..k {
            let factor = a[r * k + col];
            for c in col + 1..k {
                let lhs = pivot.checked_mul(a[r * k + c])?;
                let rhs = factor.checked_mul(a[col * k + c])?;
                a[r * k + c] = lhs.checked_sub(rhs)? / prev;
            }
            a[r * k + col] = 0;
        }
        prev = pivot;
    }
    Some(sign * a[k * k - 1])
}

/// Determinant of a square [`BigInt`] matrix via Bareiss elimination.
pub fn det_big(rows: &[Vec<BigInt>]) -> BigInt {
    let k = rows.len();
    if k == 0 {
        return BigInt::one();
    }
    let mut a: Vec<Vec<BigInt>> = rows.to_vec();
    let mut negate = false;
    let mut prev = BigInt::one();
    for col in 0..k {
        if a[col][col].is_zero() {
            match (col + 1..k).find(|&r| !a[r][col].is_zero()) {
                Some(swap) => {
                    a.swap(col, swap);
                    negate = !negate;
                }
                None => return BigInt::zero(),
            }
        }
        for r in col + 1..k {
            for c in col + 1..k {
                let v = (&a[col][col] * &a[r][c] - &a[r][col] * &a[col][c]) / &prev;
                a[r][c] = v;
            }
            a[r][col] = BigInt::zero();
        }
        prev = a[col][col].clone();
    }
    let d = a[k - 1][k - 1].clone();
    if negate {
        -d
    } else {
        d
    }
}

/// Rank of an arbitrary (not necessarily square) integer matrix.
pub fn rank_big(rows: &[Vec<BigInt>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let cols = rows[0].len();
    let mut a: Vec<Vec<BigInt>> = rows.to_vec();
    let mut rank = 0;
    for col in 0..cols {
        let Some(p) = (rank..a.len()).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        for r in rank + 1..a.len() {
            if a[r][col].is_zero() {
                continue;
            }
            let (pv, fv) = (a[rank][col].clone(), a[r][col].clone());
            for c in col..cols {
                let v = &pv * &a[r][c] - &fv * &a[rank][c];
                a[r][c] = v;
            }
            let g = row_gcd(&a[r]);
            if !g.is_zero() && !g.is_one() {
                for v in a[r].iter_mut() {
                    *v /= &g;
                }
            }
        }
        rank += 1;
        if rank == a.len() {
            break;
        }
    }
    rank
}

fn row_gcd(row: &[BigInt]) -> BigInt {
    use num_integer::Integer;
    row.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v)).abs()
}

/// Greatest common divisor of the absolute values, zero for an all-zero slice.
pub fn gcd_slice(values: &[i64]) -> i64 {
    use num_integer::Integer;
    values.iter().fold(0i64, |acc, &v| acc.gcd(&v))
}
