//! The characteristic polynomial `P(λ) = λ^k − λ^{k−1} − ⋯ − λ − 1` and its
//! roots.

use num_bigint::BigInt;

use crate::bigfloat::{BigFloat, MIN_PRECISION};
use crate::complex::HpComplex;
use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 200;
pub const MAX_NEWTON_STEPS: usize = 64;

/// Fixed angular offset of the starting circle; breaks conjugate symmetry so
/// complex roots can separate.
const START_ANGLE: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharPoly {
    k: usize,
    /// Constant term first.
    coefficients: Vec<BigInt>,
}

impl CharPoly {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidSpec(format!(
                "order k must be at least 2, got {k}"
            )));
        }
        let mut coefficients = vec![BigInt::from(-1); k];
        coefficients.push(BigInt::from(1));
        Ok(Self { k, coefficients })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[BigInt] {
        &self.coefficients
    }

    /// `(P(z), P'(z))` by Horner's scheme.
    fn eval_with_derivative(&self, z: &HpComplex) -> (HpComplex, HpComplex) {
        let prec = z.precision();
        let mut p = HpComplex::zero(prec);
        let mut dp = HpComplex::zero(prec);
        for c in self.coefficients.iter().rev() {
            dp = &(&dp * z) + &p;
            p = &(&p * z) + &HpComplex::from_bigint(c, prec);
        }
        (p, dp)
    }
}

/// `P(z)` at the precision of `z`.
pub fn evaluate_poly(p: &CharPoly, z: &HpComplex) -> HpComplex {
    let prec = z.precision();
    p.coefficients
        .iter()
        .rev()
        .fold(HpComplex::zero(prec), |acc, c| {
            &(&acc * z) + &HpComplex::from_bigint(c, prec)
        })
}

/// The `k` roots of the order-`k` characteristic polynomial with their
/// certificates. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootSet {
    k: usize,
    precision_bits: u32,
    roots: Vec<HpComplex>,
    residuals: Vec<BigFloat>,
    min_separation: BigFloat,
    dominant_index: usize,
}

impl RootSet {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    pub fn roots(&self) -> &[HpComplex] {
        &self.roots
    }

    /// `|P(λ_m)|` per root.
    pub fn residuals(&self) -> &[BigFloat] {
        &self.residuals
    }

    pub fn min_separation(&self) -> &BigFloat {
        &self.min_separation
    }

    pub fn dominant_index(&self) -> usize {
        self.dominant_index
    }

    pub fn dominant(&self) -> &HpComplex {
        &self.roots[self.dominant_index]
    }

    /// Exponent of the certification tolerance `2^(−precision/2)`.
    pub fn tolerance_log2(&self) -> i64 {
        -i64::from(self.precision_bits / 2)
    }

    /// `2^(−precision/4)`, the tolerance for identities derived from the roots.
    pub fn identity_tolerance(&self) -> BigFloat {
        BigFloat::pow2(-i64::from(self.precision_bits / 4), self.precision_bits)
    }

    /// `∏_{j≠m}(λ_m − λ_j)`.
    pub fn separation_product(&self, m: usize) -> HpComplex {
        let lm = &self.roots[m];
        self.roots
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != m)
            .fold(HpComplex::one(self.precision_bits), |acc, (_, lj)| {
                &acc * &(lm - lj)
            })
    }
}

/// Per-item residuals against a threshold.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub residuals: Vec<BigFloat>,
    pub threshold: BigFloat,
}

impl ResidualReport {
    pub fn max_residual(&self) -> Option<&BigFloat> {
        self.residuals.iter().max_by(|a, b| a.total_cmp(b))
    }

    pub fn max_log2(&self) -> f64 {
        self.max_residual()
            .map_or(f64::NEG_INFINITY, BigFloat::log2_abs)
    }

    pub fn threshold_log2(&self) -> f64 {
        self.threshold.log2_abs()
    }

    pub fn passed(&self) -> bool {
        self.residuals.iter().all(|r| *r < self.threshold)
    }
}

fn non_convergence(k: usize, precision_bits: u32, detail: impl Into<String>) -> Error {
    Error::NonConvergence {
        k,
        precision_bits,
        detail: detail.into(),
    }
}

/// All `k` roots by Durand–Kerner sweeps from a fixed circle followed by
/// per-root Newton polish at full precision. Deterministic in
/// `(k, precision_bits)`.
pub fn find_roots(k: usize, precision_bits: u32) -> Result<RootSet> {
    if precision_bits < MIN_PRECISION {
        return Err(Error::InvalidArgument(format!(
            "precision must be at least {MIN_PRECISION} bits, got {precision_bits}"
        )));
    }
    let poly = CharPoly::new(k)?;
    let prec = precision_bits;

    let mut z: Vec<HpComplex> = (0..k)
        .map(|m| {
            let theta = 2.0 * std::f64::consts::PI * m as f64 / k as f64 + START_ANGLE;
            HpComplex::from_f64(theta.cos(), theta.sin(), prec)
        })
        .collect();

    let sweep_stop = BigFloat::pow2(-i64::from((prec / 2).min(64)), prec);
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut max_step = BigFloat::zero(prec);
        for i in 0..k {
            let num = evaluate_poly(&poly, &z[i]);
            let den = (0..k)
                .filter(|&j| j != i)
                .fold(HpComplex::one(prec), |acc, j| &acc * &(&z[i] - &z[j]));
            if den.is_zero() {
                return Err(non_convergence(k, prec, "coincident iterates"));
            }
            let step = &num / &den;
            let size = step.norm_sqr();
            if size > max_step {
                max_step = size;
            }
            z[i] = &z[i] - &step;
        }
        if max_step < &sweep_stop * &sweep_stop {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(non_convergence(
            k,
            prec,
            format!("simultaneous iteration exceeded {MAX_SWEEPS} sweeps"),
        ));
    }

    for root in z.iter_mut() {
        *root = newton_polish(&poly, root.clone(), prec)
            .ok_or_else(|| non_convergence(k, prec, "Newton polish stalled"))?;
    }

    let dominant_index = (0..k)
        .max_by(|&a, &b| z[a].norm_sqr().total_cmp(&z[b].norm_sqr()))
        .expect("k >= 2");

    let tolerance = BigFloat::pow2(-i64::from(prec / 2), prec);
    if z[dominant_index].im.abs() >= tolerance {
        return Err(non_convergence(k, prec, "dominant root is not real"));
    }
    // P has real coefficients, so Newton from a real start stays real.
    let real_start = HpComplex::from_real(z[dominant_index].re.clone());
    z[dominant_index] = newton_polish(&poly, real_start, prec)
        .ok_or_else(|| non_convergence(k, prec, "Newton polish of dominant root stalled"))?;

    certify(&poly, z, dominant_index, prec)
}

fn newton_polish(poly: &CharPoly, mut z: HpComplex, prec: u32) -> Option<HpComplex> {
    let floor = BigFloat::pow2(-2 * i64::from(prec) + 8, prec);
    for _ in 0..MAX_NEWTON_STEPS {
        let (p, dp) = poly.eval_with_derivative(&z);
        if p.is_zero() {
            return Some(z);
        }
        if dp.is_zero() {
            return None;
        }
        let step = &p / &dp;
        z = &z - &step;
        if step.norm_sqr() < floor {
            return Some(z);
        }
    }
    Some(z)
}

fn certify(
    poly: &CharPoly,
    roots: Vec<HpComplex>,
    dominant_index: usize,
    prec: u32,
) -> Result<RootSet> {
    let k = roots.len();
    let tolerance = BigFloat::pow2(-i64::from(prec / 2), prec);
    let residuals: Vec<BigFloat> = roots.iter().map(|z| evaluate_poly(poly, z).abs()).collect();
    if let Some(m) = residuals.iter().position(|r| *r >= tolerance) {
        return Err(non_convergence(
            k,
            prec,
            format!(
                "root {m} residual 2^{:.1} above tolerance",
                residuals[m].log2_abs()
            ),
        ));
    }

    let mut min_sep: Option<BigFloat> = None;
    for i in 0..k {
        for j in i + 1..k {
            let d = (&roots[i] - &roots[j]).abs();
            if min_sep.as_ref().is_none_or(|m| d < *m) {
                min_sep = Some(d);
            }
        }
    }
    let min_separation = min_sep.expect("k >= 2");
    if min_separation <= tolerance {
        return Err(non_convergence(k, prec, "roots are not separated"));
    }

    let one = BigFloat::one(prec);
    let two = BigFloat::from_int(2, prec);
    let dom = &roots[dominant_index];
    if !dom.im.is_zero() || dom.re <= one || dom.re >= two {
        return Err(non_convergence(k, prec, "dominant root outside (1, 2)"));
    }
    let near_one = BigFloat::from_f64(1e-3, prec);
    for (m, z) in roots.iter().enumerate() {
        if m != dominant_index && z.norm_sqr() >= one {
            return Err(non_convergence(
                k,
                prec,
                format!("root {m} has modulus >= 1"),
            ));
        }
        if (z - &HpComplex::one(prec)).abs() <= near_one {
            return Err(non_convergence(k, prec, format!("root {m} too close to 1")));
        }
    }

    Ok(RootSet {
        k,
        precision_bits: prec,
        roots,
        residuals,
        min_separation,
        dominant_index,
    })
}

/// The real root of maximal modulus.
pub fn dominant_root(k: usize, precision_bits: u32) -> Result<HpComplex> {
    find_roots(k, precision_bits).map(|rs| rs.dominant().clone())
}

/// Per root, `|λ − Σ_{i=0}^{k−1} λ^{−i}|`, against `2^(−precision/4)`.
pub fn root_identity_check(rs: &RootSet) -> ResidualReport {
    let prec = rs.precision_bits();
    let residuals = rs
        .roots()
        .iter()
        .map(|z| {
            let inv = z.recip();
            let mut power = HpComplex::one(prec);
            let mut sum = HpComplex::zero(prec);
            for _ in 0..rs.k() {
                sum = &sum + &power;
                power = &power * &inv;
            }
            (z - &sum).abs()
        })
        .collect();
    ResidualReport {
        residuals,
        threshold: rs.identity_tolerance(),
    }
}
