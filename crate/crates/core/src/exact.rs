//! Exact evaluation over arbitrary-size integers.

use std::collections::VecDeque;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::model::SequenceSpec;

/// Term `n` by the sliding-window recurrence, O(n) additions.
pub fn nth_by_recurrence(spec: &SequenceSpec, n: u64) -> BigInt {
    let k = spec.k();
    let init = spec.initial_terms();
    if n < k as u64 {
        return init[n as usize].clone();
    }
    let mut window: VecDeque<BigInt> = init.iter().cloned().collect();
    let mut sum: BigInt = init.iter().sum();
    // window holds t_{i-k} .. t_{i-1}, sum is their total
    for _ in k as u64..n {
        let oldest = window.pop_front().expect("window has k entries");
        let next = sum.clone();
        sum = &sum + &next - oldest;
        window.push_back(next);
    }
    sum
}

/// Terms `n_from ..= n_to`.
pub fn sequence_slice(spec: &SequenceSpec, n_from: u64, n_to: u64) -> Result<Vec<BigInt>> {
    if n_from > n_to {
        return Err(Error::InvalidArgument(format!(
            "empty range {n_from}..={n_to}"
        )));
    }
    let len = usize::try_from(n_to - n_from)
        .ok()
        .and_then(|d| d.checked_add(1))
        .ok_or_else(|| Error::InvalidArgument(format!("range {n_from}..={n_to} is too long")))?;
    let k = spec.k();
    let mut out = Vec::with_capacity(len);
    let mut window: VecDeque<BigInt> = spec.initial_terms().iter().cloned().collect();
    let mut sum: BigInt = window.iter().sum();
    for i in 0..=n_to {
        let term = if i < k as u64 {
            spec.initial_terms()[i as usize].clone()
        } else {
            let oldest = window.pop_front().expect("window has k entries");
            let next = sum.clone();
            sum = &sum + &next - oldest;
            window.push_back(next.clone());
            next
        };
        if i >= n_from {
            out.push(term);
        }
    }
    Ok(out)
}

/// Dense square matrix over exact integers, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    dim: usize,
    entries: Vec<BigInt>,
}

impl IntMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![BigInt::zero(); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = BigInt::one();
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> &BigInt {
        &self.entries[row * self.dim + col]
    }

    pub fn mul(&self, other: &Self) -> Self {
        let d = self.dim;
        assert_eq!(d, other.dim);
        let mut entries = vec![BigInt::zero(); d * d];
        for i in 0..d {
            for l in 0..d {
                let a = &self.entries[i * d + l];
                if a.is_zero() {
                    continue;
                }
                for j in 0..d {
                    let b = &other.entries[l * d + j];
                    if !b.is_zero() {
                        entries[i * d + j] += a * b;
                    }
                }
            }
        }
        Self { dim: d, entries }
    }

    pub fn apply(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| {
                self.entries[i * self.dim..(i + 1) * self.dim]
                    .iter()
                    .zip(v)
                    .filter(|(a, _)| !a.is_zero())
                    .map(|(a, x)| a * x)
                    .sum()
            })
            .collect()
    }
}

/// One step of the order-`k` recurrence as a linear map: shifts the window
/// `(t_i, …, t_{i+k−1})` to `(t_{i+1}, …, t_{i+k})`. Ones on the
/// superdiagonal, a final row of ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompanionMatrix {
    matrix: IntMatrix,
}

impl CompanionMatrix {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidSpec(format!(
                "order k must be at least 2, got {k}"
            )));
        }
        let mut m = IntMatrix {
            dim: k,
            entries: vec![BigInt::zero(); k * k],
        };
        for i in 0..k - 1 {
            m.entries[i * k + i + 1] = BigInt::one();
        }
        for j in 0..k {
            m.entries[(k - 1) * k + j] = BigInt::one();
        }
        Ok(Self { matrix: m })
    }

    pub fn k(&self) -> usize {
        self.matrix.dim
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    pub fn apply(&self, window: &[BigInt]) -> Vec<BigInt> {
        self.matrix.apply(window)
    }

    /// `M^n` by binary exponentiation.
    pub fn power(&self, mut n: u64) -> IntMatrix {
        let mut acc = IntMatrix::identity(self.k());
        let mut base = self.matrix.clone();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }
}

/// Term `n` as component 0 of `M^n · (t_0, …, t_{k−1})`.
pub fn nth_by_matrix_power(spec: &SequenceSpec, n: u64) -> BigInt {
    let m = CompanionMatrix::new(spec.k()).expect("spec has k >= 2");
    nth_from_power(&m.power(n), spec)
}

/// Reads term `n` from a precomputed `M^n`, so one power serves many specs.
pub fn nth_from_power(power: &IntMatrix, spec: &SequenceSpec) -> BigInt {
    assert_eq!(power.dim(), spec.k(), "matrix power and spec disagree on k");
    (0..spec.k())
        .map(|j| power.get(0, j) * &spec.initial_terms()[j])
        .sum()
}
