//! Exact linear algebra over rationals.
//!
//! Systems are cleared of denominators row by row and then reduced with
//! fraction-free (Bareiss) elimination over big integers, so every
//! intermediate division is exact and intermediate entry growth stays
//! polynomial. Pivoting takes the first nonzero entry in the column.

use crate::rational::Rational;
use num::bigint::BigInt;
use num::{Integer, One, Zero};

/// Clears denominators of `[matrix | rhs]` one row at a time. Row scaling by
/// a positive factor leaves the solution set unchanged; the scale factors are
/// returned for determinant bookkeeping.
fn integer_rows(matrix: &[Vec<Rational>], rhs: Option<&[Rational]>) -> (Vec<Vec<BigInt>>, Vec<BigInt>) {
    let n = matrix.len();
    let mut rows = Vec::with_capacity(n);
    let mut scales = Vec::with_capacity(n);
    for (i, row) in matrix.iter().enumerate() {
        let mut scale = BigInt::one();
        for entry in row {
            scale = scale.lcm(entry.denom());
        }
        if let Some(rhs) = rhs {
            scale = scale.lcm(rhs[i].denom());
        }
        let mut int_row: Vec<BigInt> = row
            .iter()
            .map(|entry| entry.numer() * (&scale / entry.denom()))
            .collect();
        if let Some(rhs) = rhs {
            int_row.push(rhs[i].numer() * (&scale / rhs[i].denom()));
        }
        rows.push(int_row);
        scales.push(scale);
    }
    (rows, scales)
}

/// Bareiss elimination in place on an `n x cols` integer matrix (`cols >= n`).
/// Returns the sign from row swaps, or `None` if some pivot column is all
/// zero (singular square part).
fn bareiss(rows: &mut [Vec<BigInt>], cols: usize) -> Option<i8> {
    let n = rows.len();
    let mut sign = 1i8;
    let mut prev_pivot = BigInt::one();
    for k in 0..n {
        let pivot_row = (k..n).find(|&r| !rows[r][k].is_zero())?;
        if pivot_row != k {
            rows.swap(k, pivot_row);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..cols {
                let numer = &rows[i][j] * &rows[k][k] - &rows[i][k] * &rows[k][j];
                // Exact by the Bareiss identity.
                rows[i][j] = numer / &prev_pivot;
            }
            rows[i][k] = BigInt::zero();
        }
        prev_pivot = rows[k][k].clone();
    }
    Some(sign)
}

/// Exact determinant of a square rational matrix.
pub fn det(matrix: &[Vec<Rational>]) -> Rational {
    let n = matrix.len();
    if n == 0 {
        return Rational::one();
    }
    debug_assert!(matrix.iter().all(|row| row.len() == n));
    let (mut rows, scales) = integer_rows(matrix, None);
    match bareiss(&mut rows, n) {
        None => Rational::zero(),
        Some(sign) => {
            let mut denom = BigInt::one();
            for s in scales {
                denom *= s;
            }
            let numer = if sign < 0 {
                -rows[n - 1][n - 1].clone()
            } else {
                rows[n - 1][n - 1].clone()
            };
            Rational::new(numer, denom)
        }
    }
}

/// Solves `matrix * x = rhs` exactly. Returns `None` when the matrix is
/// singular.
pub fn solve(matrix: &[Vec<Rational>], rhs: &[Rational]) -> Option<Vec<Rational>> {
    let n = matrix.len();
    debug_assert_eq!(rhs.len(), n);
    if n == 0 {
        return Some(Vec::new());
    }
    let (mut rows, _) = integer_rows(matrix, Some(rhs));
    bareiss(&mut rows, n + 1)?;
    // Back substitution on the fraction-free upper triangle.
    let mut solution = vec![Rational::zero(); n];
    for i in (0..n).rev() {
        let mut accum = Rational::from_integer(rows[i][n].clone());
        for j in i + 1..n {
            accum -= Rational::from_integer(rows[i][j].clone()) * &solution[j];
        }
        solution[i] = accum / Rational::from_integer(rows[i][i].clone());
    }
    Some(solution)
}

/// `matrix^T * x = rhs`, i.e. a row-vector solve `x * matrix = rhs^T`.
pub fn solve_transposed(matrix: &[Vec<Rational>], rhs: &[Rational]) -> Option<Vec<Rational>> {
    let n = matrix.len();
    let transposed: Vec<Vec<Rational>> = (0..n)
        .map(|j| (0..n).map(|i| matrix[i][j].clone()).collect())
        .collect();
    solve(&transposed, rhs)
}

pub fn is_singular(matrix: &[Vec<Rational>]) -> bool {
    det(matrix).is_zero()
}
