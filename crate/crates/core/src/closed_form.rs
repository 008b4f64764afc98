//! Root-based closed forms and the identities behind them.
//!
//! Every formula here has the shape `Σ_m c_m λ_m^e`: a weight per root times
//! a power of that root. Evaluation happens in [`HpComplex`] and is rounded
//! back to an integer, with a precision guard that refuses to round when the
//! working precision cannot resolve the units digit.

use std::time::Instant;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::bigfloat::BigFloat;
use crate::charpoly::{ResidualReport, RootSet};
use crate::complex::HpComplex;
use crate::error::{Error, Result};
use crate::exact::sequence_slice;
use crate::model::{precision_for, EvaluationReport, Method, SequenceSpec};

/// Rounding gaps at or above this are treated as precision loss.
pub const MAX_ROUNDING_GAP: f64 = 0.25;

/// Coefficients `c_m` such that term `n` is `Σ_m c_m λ_m^n`.
#[derive(Debug, Clone)]
pub struct WeightVector {
    weights: Vec<HpComplex>,
    roots: RootSet,
    source_spec: SequenceSpec,
}

impl WeightVector {
    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[HpComplex] {
        &self.weights
    }

    pub fn roots(&self) -> &RootSet {
        &self.roots
    }

    pub fn source_spec(&self) -> &SequenceSpec {
        &self.source_spec
    }

    /// `Σ_m c_m λ_m^p`.
    pub fn reconstruct(&self, p: u64) -> HpComplex {
        let prec = self.roots.precision_bits();
        self.weights
            .iter()
            .zip(self.roots.roots())
            .fold(HpComplex::zero(prec), |acc, (c, z)| {
                &acc + &(c * &z.powu(p))
            })
    }

    /// Largest `|Σ_m c_m λ_m^p − t_p|` over the initial terms.
    pub fn reconstruction_error(&self) -> BigFloat {
        let prec = self.roots.precision_bits();
        self.source_spec
            .initial_terms()
            .iter()
            .enumerate()
            .map(|(p, t)| (&self.reconstruct(p as u64) - &HpComplex::from_bigint(t, prec)).abs())
            .max_by(|a, b| a.total_cmp(b))
            .unwrap_or_else(|| BigFloat::zero(prec))
    }

    /// Largest componentwise `|c_m − c'_m|`; both vectors must share roots.
    pub fn max_difference(&self, other: &WeightVector) -> BigFloat {
        assert_eq!(self.k(), other.k());
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .max_by(|a, b| a.total_cmp(b))
            .expect("k >= 2")
    }
}

fn check_k(rs: &RootSet, spec: &SequenceSpec) -> Result<()> {
    if rs.k() != spec.k() {
        return Err(Error::InvalidArgument(format!(
            "root set has k={} but spec has k={}",
            rs.k(),
            spec.k()
        )));
    }
    Ok(())
}

/// `c_m = 1 / ∏_{j≠m}(λ_m − λ_j)`: the k-generalized Fibonacci weights.
pub fn weights_special(rs: &RootSet) -> WeightVector {
    let weights = (0..rs.k())
        .map(|m| rs.separation_product(m).recip())
        .collect();
    WeightVector {
        weights,
        roots: rs.clone(),
        source_spec: SequenceSpec::fibonacci(rs.k()).expect("root set has k >= 2"),
    }
}

/// Weights for arbitrary initial terms:
/// `c_m = Σ_{p=1}^{k} (λ_m^{k−p} − Σ_{i=1}^{k−p} λ_m^{k−p−i}) t_{p−1} / ∏_{j≠m}(λ_m − λ_j)`.
pub fn weights_like(rs: &RootSet, spec: &SequenceSpec) -> Result<WeightVector> {
    check_k(rs, spec)?;
    let k = rs.k();
    let prec = rs.precision_bits();
    let t = spec.initial_terms();
    let weights = rs
        .roots()
        .iter()
        .enumerate()
        .map(|(m, z)| {
            // h_q = λ^q − (1 + λ + ⋯ + λ^{q−1}) multiplies t_{k−1−q}
            let mut power = HpComplex::one(prec);
            let mut lower = HpComplex::zero(prec);
            let mut numerator = HpComplex::zero(prec);
            for q in 0..k {
                let h = &power - &lower;
                let tq = &t[k - 1 - q];
                if !tq.is_zero() {
                    numerator = &numerator + &h.mul_int(tq);
                }
                lower = &lower + &power;
                power = &power * z;
            }
            &numerator / &rs.separation_product(m)
        })
        .collect();
    Ok(WeightVector {
        weights,
        roots: rs.clone(),
        source_spec: spec.clone(),
    })
}

/// Weights from the eigen-decomposition route: solves the Vandermonde
/// system `Σ_m λ_m^p a_m = t_p`, `p = 0 … k−1`, by Gaussian elimination with
/// partial pivoting.
pub fn eigen_coefficients(rs: &RootSet, spec: &SequenceSpec) -> Result<WeightVector> {
    check_k(rs, spec)?;
    let k = rs.k();
    let prec = rs.precision_bits();
    let t = spec.initial_terms();

    let vandermonde: Vec<Vec<HpComplex>> = (0..k)
        .map(|p| rs.roots().iter().map(|z| z.powu(p as u64)).collect())
        .collect();
    let rhs: Vec<HpComplex> = t.iter().map(|v| HpComplex::from_bigint(v, prec)).collect();

    let mut a = vandermonde.clone();
    let mut b = rhs.clone();
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&i, &j| a[i][col].norm_sqr().total_cmp(&a[j][col].norm_sqr()))
            .expect("non-empty range");
        if a[pivot][col].is_zero() {
            return Err(Error::IllConditioned {
                residual_log2: f64::INFINITY,
                tolerance_log2: -f64::from(prec / 4),
            });
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..k {
            let factor = &a[row][col] / &a[col][col];
            if factor.is_zero() {
                continue;
            }
            let (upper, lower) = a.split_at_mut(row);
            for (target, pivot_entry) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *target = &*target - &(&factor * pivot_entry);
            }
            let delta = &factor * &b[col];
            b[row] = &b[row] - &delta;
        }
    }
    let mut x = vec![HpComplex::zero(prec); k];
    for row in (0..k).rev() {
        let mut acc = b[row].clone();
        for c in row + 1..k {
            acc = &acc - &(&a[row][c] * &x[c]);
        }
        x[row] = &acc / &a[row][row];
    }

    let scale = t
        .iter()
        .map(|v| BigFloat::from_bigint(v, prec).abs())
        .fold(BigFloat::one(prec), |m, v| if v > m { v } else { m });
    let tolerance = &BigFloat::pow2(-i64::from(prec / 4), prec) * &scale;
    let residual = (0..k)
        .map(|p| {
            let lhs = vandermonde[p]
                .iter()
                .zip(&x)
                .fold(HpComplex::zero(prec), |acc, (v, xi)| &acc + &(v * xi));
            (&lhs - &rhs[p]).abs()
        })
        .max_by(|a, b| a.total_cmp(b))
        .expect("k >= 2");
    if residual >= tolerance {
        return Err(Error::IllConditioned {
            residual_log2: residual.log2_abs(),
            tolerance_log2: tolerance.log2_abs(),
        });
    }

    Ok(WeightVector {
        weights: x,
        roots: rs.clone(),
        source_spec: spec.clone(),
    })
}

/// Accumulates `Σ_m c_m λ_m^e` while tracking the largest single term, which
/// bounds the absolute rounding error of the sum.
struct RootSum {
    sum: HpComplex,
    max_term_bits: i64,
}

impl RootSum {
    fn new(prec: u32) -> Self {
        Self {
            sum: HpComplex::zero(prec),
            max_term_bits: i64::MIN,
        }
    }

    fn push(&mut self, term: HpComplex) {
        let bits = term
            .re
            .magnitude_bits()
            .into_iter()
            .chain(term.im.magnitude_bits())
            .max();
        if let Some(b) = bits {
            self.max_term_bits = self.max_term_bits.max(b);
        }
        self.sum = &self.sum + &term;
    }
}

fn ceil_log2(v: u64) -> i64 {
    64 - i64::from(v.saturating_sub(1).leading_zeros())
}

/// Rounds `sum` to an integer, or reports `PrecisionExhausted` when either
/// the largest term leaves fewer than `8 + log2(n+2)` fractional bits or the
/// rounding gap reaches [`MAX_ROUNDING_GAP`].
fn finish(
    n: u64,
    k: usize,
    method: Method,
    acc: RootSum,
    prec: u32,
    started: Instant,
) -> Result<EvaluationReport> {
    let approx = acc.sum;
    let rounded = approx.re.round_to_int();
    let dist = HpComplex::new(approx.re.distance_to_int(&rounded), approx.im.clone());
    let gap = dist.abs().to_f64();

    let guard = 8 + ceil_log2(n + 2);
    let needed = acc.max_term_bits.saturating_add(guard);
    if needed > i64::from(prec) || gap >= MAX_ROUNDING_GAP {
        let suggested = (needed.max(0) as u64 + 16).max(u64::from(precision_for(k, n)));
        return Err(Error::PrecisionExhausted {
            n,
            precision_bits: prec,
            rounding_gap: gap,
            suggested_bits: suggested.min(u64::from(u32::MAX)) as u32,
        });
    }
    Ok(EvaluationReport {
        n,
        method,
        exact_value: None,
        approx_value: Some(approx),
        rounded_value: Some(rounded),
        rounding_gap: Some(gap),
        elapsed: started.elapsed(),
    })
}

/// `Σ_m c_m λ_m^n`, rounded to the nearest integer.
pub fn nth_closed_form(w: &WeightVector, n: u64) -> Result<EvaluationReport> {
    let started = Instant::now();
    let prec = w.roots.precision_bits();
    let mut acc = RootSum::new(prec);
    for (c, z) in w.weights.iter().zip(w.roots.roots()) {
        acc.push(c * &z.powu(n));
    }
    finish(n, w.k(), Method::ClosedForm, acc, prec, started)
}

/// `A_m = (λ_m − 1) / (2 + (k+1)(λ_m − 2))`.
fn dresden_coefficients(rs: &RootSet) -> Vec<HpComplex> {
    let prec = rs.precision_bits();
    let k1 = HpComplex::from_int(rs.k() as i64 + 1, prec);
    let one = HpComplex::one(prec);
    let two = HpComplex::from_int(2, prec);
    rs.roots()
        .iter()
        .map(|z| {
            let den = &two + &(&k1 * &(z - &two));
            &(z - &one) / &den
        })
        .collect()
}

/// `Σ_m A_m λ_m^{n−1}`: the k-generalized Fibonacci number indexed so that
/// term 1 is 1 and the `k−1` terms before it are 0. Equals the closed form
/// for `0, …, 0, 1` at index `n + k − 2`.
pub fn dresden_nth(rs: &RootSet, n: u64) -> Result<EvaluationReport> {
    if n < 1 {
        return Err(Error::InvalidArgument("dresden_nth needs n >= 1".into()));
    }
    let started = Instant::now();
    let prec = rs.precision_bits();
    let mut acc = RootSum::new(prec);
    for (a, z) in dresden_coefficients(rs).iter().zip(rs.roots()) {
        acc.push(a * &z.powu(n - 1));
    }
    finish(n, rs.k(), Method::Dresden, acc, prec, started)
}

/// The partial-sum expression
/// `G_0 S(n−2) + Σ_{m=0}^{k−3} G_{m+1} Σ_{j=0}^{m+1} S(n−2−j) + G_{k−1} S(n−1)`
/// with `S(e) = Σ_i A_i λ_i^e` and `G_i = t_i`.
///
/// `n` is the formula's own index; see [`calibrate_bacani_rabago`] for the
/// offset that maps it onto the sequence index.
pub fn bacani_rabago_nth(rs: &RootSet, spec: &SequenceSpec, n: u64) -> Result<EvaluationReport> {
    check_k(rs, spec)?;
    if n < 2 {
        return Err(Error::InvalidArgument(
            "bacani_rabago_nth needs n >= 2".into(),
        ));
    }
    let started = Instant::now();
    let k = rs.k();
    let prec = rs.precision_bits();
    let t = spec.initial_terms();
    let coeffs = dresden_coefficients(rs);

    // Per-root terms A_i λ_i^e for e = n−1, n−2, …, n−k, so each term of the
    // outer sum can be tracked for the precision guard.
    let n = n as i64;
    let mut acc = RootSum::new(prec);
    for (a, z) in coeffs.iter().zip(rs.roots()) {
        let at = |e: i64| a * &z.powi(e);
        let mut total = at(n - 1).mul_int(&t[k - 1]);
        let mut cumulative = HpComplex::zero(prec);
        // G_j for j ≤ k−2 multiplies Σ_{i=0}^{j} S(n−2−i); j = 0 is the
        // leading G_0 S(n−2) term.
        for (j, g) in t.iter().enumerate().take(k - 1) {
            cumulative = &cumulative + &at(n - 2 - j as i64);
            total = &total + &cumulative.mul_int(g);
        }
        acc.push(total);
    }
    finish(n as u64, k, Method::BacaniRabago, acc, prec, started)
}

/// Index shift such that `bacani_rabago_nth(n)` equals sequence term
/// `n + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexAlignment {
    pub offset: u64,
    pub checked_through: u64,
}

/// Finds the offset by matching formula indices `2 ..= 20` against the
/// exact sequence.
pub fn calibrate_bacani_rabago(rs: &RootSet, spec: &SequenceSpec) -> Result<IndexAlignment> {
    const LAST: u64 = 20;
    let max_offset = 2 * spec.k() as u64;
    let exact = sequence_slice(spec, 0, LAST + max_offset)?;
    let values: Vec<BigInt> = (2..=LAST)
        .map(|n| {
            bacani_rabago_nth(rs, spec, n).map(|r| {
                r.rounded_value
                    .expect("approximate report has rounded value")
            })
        })
        .collect::<Result<_>>()?;
    (0..=max_offset)
        .find(|&o| {
            values
                .iter()
                .zip(2..)
                .all(|(v, n)| *v == exact[(n + o) as usize])
        })
        .map(|offset| IndexAlignment {
            offset,
            checked_through: LAST,
        })
        .ok_or_else(|| {
            Error::CalibrationFailed(format!(
                "no offset in 0..={max_offset} aligns bacani_rabago_nth with {spec}"
            ))
        })
}

/// Per root, `|[(k+1)λ − 2k] λ^{k−1} / (λ − 1) − ∏_{j≠m}(λ_m − λ_j)|`.
pub fn product_identity_check(rs: &RootSet) -> ResidualReport {
    let k = rs.k() as i64;
    let prec = rs.precision_bits();
    let one = HpComplex::one(prec);
    let residuals = rs
        .roots()
        .iter()
        .enumerate()
        .map(|(m, z)| {
            let lin = &(&HpComplex::from_int(k + 1, prec) * z) - &HpComplex::from_int(2 * k, prec);
            let lhs = &(&lin * &z.powu(k as u64 - 1)) / &(z - &one);
            (&lhs - &rs.separation_product(m)).abs()
        })
        .collect();
    ResidualReport {
        residuals,
        threshold: rs.identity_tolerance(),
    }
}
