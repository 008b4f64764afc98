//! The k-generalized Pascal triangle and its diagonal sums, used as a
//! combinatorial oracle for the k-generalized Fibonacci numbers.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::sequence_slice;
use crate::model::SequenceSpec;

/// Rows of `C_k(n, i)` with `C_k(n, 0) = C_k(n, n) = 1` and
/// `C_k(n, i) = C_k(n−1, i) + Σ_{j=1}^{k−1} C_k(n−j, i−1)` inside.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PascalTriangleK {
    k: usize,
    rows: Vec<Vec<BigInt>>,
}

impl PascalTriangleK {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rows(&self) -> &[Vec<BigInt>] {
        &self.rows
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    /// `C_k(n, i)`, zero outside the triangle.
    pub fn get(&self, n: i64, i: i64) -> BigInt {
        if n < 0 || i < 0 || i > n || n as usize >= self.rows.len() {
            return BigInt::zero();
        }
        self.rows[n as usize][i as usize].clone()
    }
}

pub fn build_triangle(k: usize, rows: usize) -> Result<PascalTriangleK> {
    if k < 2 {
        return Err(Error::InvalidSpec(format!(
            "order k must be at least 2, got {k}"
        )));
    }
    if rows == 0 {
        return Err(Error::InvalidArgument(
            "triangle needs at least one row".into(),
        ));
    }
    let mut tri = PascalTriangleK {
        k,
        rows: Vec::with_capacity(rows),
    };
    for n in 0..rows as i64 {
        let row = (0..=n)
            .map(|i| {
                if i == 0 || i == n {
                    return BigInt::one();
                }
                let mut v = tri.get(n - 1, i);
                for j in 1..k as i64 {
                    v += tri.get(n - j, i - 1);
                }
                v
            })
            .collect();
        tri.rows.push(row);
    }
    Ok(tri)
}

/// A diagonal mapping `d ↦ Σ_i C_k(d − slope·i, i)` locked against the
/// exact sequence: `sums[d]` equals term `d + offset` of `0, …, 0, 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagonalSums {
    pub slope: usize,
    pub offset: u64,
    pub sums: Vec<BigInt>,
    /// Length of the agreeing prefix (equals `sums.len()` on success).
    pub matched: usize,
}

/// Number of leading terms a candidate mapping must reproduce to be locked.
pub const CALIBRATION_TERMS: usize = 10;

fn diagonal(tri: &PascalTriangleK, slope: usize, d: usize) -> BigInt {
    (0..=d / slope)
        .map(|i| tri.get((d - slope * i) as i64, i as i64))
        .sum()
}

/// Sums along rising diagonals. Slopes `1 ..= k−1` and offsets
/// `0 ..= 2k` are tried in order; the first mapping that reproduces the
/// first [`CALIBRATION_TERMS`] exact terms is locked, and `matched` records
/// how far the agreement extends over all `count` sums.
pub fn diagonal_sums(tri: &PascalTriangleK, count: usize) -> Result<DiagonalSums> {
    if count > tri.row_count() {
        return Err(Error::InvalidArgument(format!(
            "{count} diagonals need at least {count} rows, triangle has {}",
            tri.row_count()
        )));
    }
    let k = tri.k();
    let max_offset = 2 * k as u64;
    let spec = SequenceSpec::fibonacci(k)?;
    let exact = sequence_slice(&spec, 0, count as u64 + max_offset)?;
    let probe = CALIBRATION_TERMS.min(count);

    for slope in 1..k.max(2) {
        let sums: Vec<BigInt> = (0..count).map(|d| diagonal(tri, slope, d)).collect();
        for offset in 0..=max_offset {
            let target = &exact[offset as usize..];
            let matched = sums.iter().zip(target).take_while(|(a, b)| a == b).count();
            if matched >= probe {
                return Ok(DiagonalSums {
                    slope,
                    offset,
                    sums,
                    matched,
                });
            }
        }
    }
    Err(Error::CalibrationFailed(format!(
        "no slope in 1..{k} with offset in 0..={max_offset} reproduces {probe} terms for k={k}"
    )))
}
