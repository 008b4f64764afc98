//! Sequence specifications, evaluation reports and the precision policy.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bigfloat::MIN_PRECISION;
use crate::complex::HpComplex;
use crate::error::{Error, Result};

/// Order `k` plus the `k` initial terms `t_0 … t_{k−1}` of a sequence
/// obeying `t_n = t_{n−1} + ⋯ + t_{n−k}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SequenceSpec {
    k: usize,
    initial_terms: Vec<BigInt>,
}

impl SequenceSpec {
    pub fn new(k: usize, initial_terms: Vec<BigInt>) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidSpec(format!(
                "order k must be at least 2, got {k}"
            )));
        }
        if initial_terms.len() != k {
            return Err(Error::InvalidSpec(format!(
                "expected {k} initial terms, got {}",
                initial_terms.len()
            )));
        }
        Ok(Self { k, initial_terms })
    }

    pub fn from_i64(k: usize, terms: &[i64]) -> Result<Self> {
        Self::new(k, terms.iter().map(|&t| BigInt::from(t)).collect())
    }

    /// The k-generalized Fibonacci sequence: initial terms `0, …, 0, 1`.
    pub fn fibonacci(k: usize) -> Result<Self> {
        Self::unit(k, k.saturating_sub(1))
    }

    /// Initial terms equal to the unit vector `e_p`.
    pub fn unit(k: usize, p: usize) -> Result<Self> {
        if p >= k.max(1) {
            return Err(Error::InvalidArgument(format!(
                "unit index {p} out of range for k={k}"
            )));
        }
        let mut terms = vec![BigInt::zero(); k];
        terms[p] = BigInt::one();
        Self::new(k, terms)
    }

    /// Initial terms drawn uniformly from `[-bound, bound]`.
    pub fn random<R: Rng + ?Sized>(k: usize, bound: i64, rng: &mut R) -> Result<Self> {
        let terms = (0..k)
            .map(|_| BigInt::from(rng.gen_range(-bound..=bound)))
            .collect();
        Self::new(k, terms)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn initial_terms(&self) -> &[BigInt] {
        &self.initial_terms
    }

    /// True for the `0, …, 0, 1` start.
    pub fn is_fibonacci(&self) -> bool {
        let (last, rest) = self.initial_terms.split_last().expect("k >= 2");
        last.is_one() && rest.iter().all(Zero::is_zero)
    }
}

impl fmt::Display for SequenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self.initial_terms.iter().map(ToString::to_string).collect();
        write!(f, "k={} [{}]", self.k, terms.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Recurrence,
    MatrixPower,
    ClosedForm,
    Dresden,
    BacaniRabago,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Recurrence,
        Method::MatrixPower,
        Method::ClosedForm,
        Method::Dresden,
        Method::BacaniRabago,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Recurrence => "recurrence",
            Method::MatrixPower => "matrix_power",
            Method::ClosedForm => "closed_form",
            Method::Dresden => "dresden",
            Method::BacaniRabago => "bacani_rabago",
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Method::Recurrence | Method::MatrixPower)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == norm)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method `{s}`")))
    }
}

/// Outcome of one evaluation of a sequence term.
///
/// Exact methods fill `exact_value`; approximate ones fill `approx_value`,
/// `rounded_value` and `rounding_gap`.
#[derive(Debug, Clone)]
pub struct EvaluationReport {
    pub n: u64,
    pub method: Method,
    pub exact_value: Option<BigInt>,
    pub approx_value: Option<HpComplex>,
    pub rounded_value: Option<BigInt>,
    /// Distance from `approx_value` to `rounded_value`.
    pub rounding_gap: Option<f64>,
    pub elapsed: Duration,
}

impl EvaluationReport {
    pub fn exact(n: u64, method: Method, value: BigInt, elapsed: Duration) -> Self {
        Self {
            n,
            method,
            exact_value: Some(value),
            approx_value: None,
            rounded_value: None,
            rounding_gap: None,
            elapsed,
        }
    }

    /// The integer this report stands for: the exact value or the rounded
    /// approximation.
    pub fn integer_value(&self) -> Option<&BigInt> {
        self.exact_value.as_ref().or(self.rounded_value.as_ref())
    }
}

/// Working precision (bits) for evaluating term `n` of an order-`k`
/// sequence, from the bound `dominant root < 2`.
pub fn precision_for(k: usize, n: u64) -> u32 {
    let bits = n.saturating_add(32).saturating_add(8 * k as u64);
    bits.clamp(u64::from(MIN_PRECISION), u64::from(u32::MAX)) as u32
}

pub fn default_precision_for(spec: &SequenceSpec, n: u64) -> u32 {
    precision_for(spec.k(), n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(
            SequenceSpec::from_i64(1, &[1]),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            SequenceSpec::from_i64(3, &[0, 1]),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            SequenceSpec::from_i64(0, &[]),
            Err(Error::InvalidSpec(_))
        ));
        assert!(SequenceSpec::fibonacci(1).is_err());
    }

    #[test]
    fn fibonacci_spec_shape() {
        let s = SequenceSpec::fibonacci(4).unwrap();
        assert_eq!(s.initial_terms(), &[0, 0, 0, 1].map(BigInt::from));
        assert!(s.is_fibonacci());
        assert!(!SequenceSpec::from_i64(2, &[2, 1]).unwrap().is_fibonacci());
    }

    #[test]
    fn precision_examples() {
        let k2 = SequenceSpec::fibonacci(2).unwrap();
        let k5 = SequenceSpec::fibonacci(5).unwrap();
        assert_eq!(default_precision_for(&k2, 10), 64);
        assert_eq!(default_precision_for(&k2, 100), 148);
        assert_eq!(default_precision_for(&k5, 1000), 1072);
    }

    #[test]
    fn precision_is_monotone() {
        for k in 2..12 {
            for n in 0..400 {
                assert!(precision_for(k, n) <= precision_for(k, n + 1));
                assert!(precision_for(k, n) <= precision_for(k + 1, n));
            }
        }
    }

    #[test]
    fn method_parsing() {
        assert_eq!("closed-form".parse::<Method>().unwrap(), Method::ClosedForm);
        assert_eq!(
            "matrix_power".parse::<Method>().unwrap(),
            Method::MatrixPower
        );
        assert!("binet".parse::<Method>().is_err());
    }
}
