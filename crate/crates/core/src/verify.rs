//! Batch cross-validation of every evaluation route against exact ground
//! truth, plus the identity checks on the roots.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bigfloat::BigFloat;
use crate::charpoly::{find_roots, root_identity_check, ResidualReport, RootSet};
use crate::closed_form::{
    bacani_rabago_nth, calibrate_bacani_rabago, dresden_nth, eigen_coefficients, nth_closed_form,
    product_identity_check, weights_like, weights_special,
};
use crate::complex::HpComplex;
use crate::error::{Error, Result};
use crate::exact::{nth_by_matrix_power, sequence_slice};
use crate::model::{precision_for, EvaluationReport, Method, SequenceSpec};
use crate::pascal::{build_triangle, diagonal_sums};

/// Bound on random initial terms, `[-10^6, 10^6]`.
pub const RANDOM_TERM_BOUND: i64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FailureKind {
    Mismatch {
        expected: String,
        got: String,
    },
    PrecisionExhausted {
        rounding_gap: f64,
        suggested_bits: u32,
    },
    NonConvergence {
        detail: String,
    },
    CalibrationFailed {
        detail: String,
    },
    Error {
        detail: String,
    },
}

impl From<Error> for FailureKind {
    fn from(e: Error) -> Self {
        match e {
            Error::PrecisionExhausted {
                rounding_gap,
                suggested_bits,
                ..
            } => FailureKind::PrecisionExhausted {
                rounding_gap,
                suggested_bits,
            },
            Error::NonConvergence { detail, .. } => FailureKind::NonConvergence { detail },
            Error::CalibrationFailed(detail) => FailureKind::CalibrationFailed { detail },
            other => FailureKind::Error {
                detail: other.to_string(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeFailure {
    pub method: Method,
    pub n: Option<u64>,
    #[serde(flatten)]
    pub kind: FailureKind,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub probes: usize,
    pub failures: usize,
    pub max_rounding_gap: Option<f64>,
    #[serde(skip)]
    pub elapsed: Duration,
}

/// Outcome of [`cross_check`]. Failures are ordered by method, then index.
#[derive(Debug, Clone, Serialize)]
pub struct CrossCheckReport {
    pub k: usize,
    pub initial_terms: Vec<String>,
    pub n_max: u64,
    pub precision_bits: u32,
    pub methods: Vec<MethodSummary>,
    pub failures: Vec<ProbeFailure>,
    pub max_rounding_gap: Option<f64>,
    /// Calibrated shift from the `bacani_rabago_nth` index to the sequence index.
    pub bacani_rabago_offset: Option<u64>,
}

impl CrossCheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn has_precision_exhaustion(&self) -> bool {
        self.failures
            .iter()
            .any(|f| matches!(f.kind, FailureKind::PrecisionExhausted { .. }))
    }
}

fn max_gap(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Runs `probe(n)` for each `n` in parallel and compares with
/// `exact[n + shift]`.
fn approx_probes<F>(
    method: Method,
    indices: std::ops::RangeInclusive<u64>,
    shift: u64,
    exact: &[BigInt],
    probe: F,
) -> (MethodSummary, Vec<ProbeFailure>)
where
    F: Fn(u64) -> Result<EvaluationReport> + Sync,
{
    let started = Instant::now();
    let outcomes: Vec<(u64, Result<EvaluationReport>)> = indices
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|n| (n, probe(n)))
        .collect();
    let mut failures = Vec::new();
    let mut gap: Option<f64> = None;
    let probes = outcomes.len();
    for (n, outcome) in outcomes {
        match outcome {
            Ok(report) => {
                gap = max_gap(gap, report.rounding_gap);
                let got = report
                    .rounded_value
                    .expect("approximate report has rounded value");
                let expected = &exact[(n + shift) as usize];
                if &got != expected {
                    failures.push(ProbeFailure {
                        method,
                        n: Some(n),
                        kind: FailureKind::Mismatch {
                            expected: expected.to_string(),
                            got: got.to_string(),
                        },
                    });
                }
            }
            Err(e) => failures.push(ProbeFailure {
                method,
                n: Some(n),
                kind: e.into(),
            }),
        }
    }
    let summary = MethodSummary {
        method,
        probes,
        failures: failures.len(),
        max_rounding_gap: gap,
        elapsed: started.elapsed(),
    };
    (summary, failures)
}

/// Evaluates every term `0 ..= n_max` by recurrence, matrix power and the
/// closed form, plus [`dresden_nth`] for `0, …, 0, 1` starts and
/// [`bacani_rabago_nth`] under its calibrated index shift. Exact routes must
/// agree bit for bit; approximate routes must round to the exact value with
/// a gap below 0.25. Numerical trouble is recorded as a failure, not
/// returned as an error.
pub fn cross_check(
    spec: &SequenceSpec,
    n_max: u64,
    precision_bits: u32,
) -> Result<CrossCheckReport> {
    let k = spec.k();
    if n_max < k as u64 {
        return Err(Error::InvalidArgument(format!(
            "n_max {n_max} must be at least k={k}"
        )));
    }
    let mut methods = Vec::new();
    let mut failures = Vec::new();

    let started = Instant::now();
    let exact = sequence_slice(spec, 0, n_max)?;
    methods.push(MethodSummary {
        method: Method::Recurrence,
        probes: exact.len(),
        failures: 0,
        max_rounding_gap: None,
        elapsed: started.elapsed(),
    });

    let started = Instant::now();
    let matrix_failures: Vec<ProbeFailure> = (0..=n_max)
        .into_par_iter()
        .filter_map(|n| {
            let got = nth_by_matrix_power(spec, n);
            (got != exact[n as usize]).then(|| ProbeFailure {
                method: Method::MatrixPower,
                n: Some(n),
                kind: FailureKind::Mismatch {
                    expected: exact[n as usize].to_string(),
                    got: got.to_string(),
                },
            })
        })
        .collect();
    methods.push(MethodSummary {
        method: Method::MatrixPower,
        probes: exact.len(),
        failures: matrix_failures.len(),
        max_rounding_gap: None,
        elapsed: started.elapsed(),
    });
    failures.extend(matrix_failures);

    let mut bacani_rabago_offset = None;
    match find_roots(k, precision_bits) {
        Err(e) => failures.push(ProbeFailure {
            method: Method::ClosedForm,
            n: None,
            kind: e.into(),
        }),
        Ok(rs) => {
            let weights = weights_like(&rs, spec)?;
            let (s, f) = approx_probes(Method::ClosedForm, 0..=n_max, 0, &exact, |n| {
                nth_closed_form(&weights, n)
            });
            methods.push(s);
            failures.extend(f);

            let shift = k as u64 - 2;
            if spec.is_fibonacci() && n_max - shift >= 1 {
                let (s, f) =
                    approx_probes(Method::Dresden, 1..=n_max - shift, shift, &exact, |n| {
                        dresden_nth(&rs, n)
                    });
                methods.push(s);
                failures.extend(f);
            }

            match calibrate_bacani_rabago(&rs, spec) {
                Ok(align) if n_max >= align.offset + 2 => {
                    bacani_rabago_offset = Some(align.offset);
                    let (s, f) = approx_probes(
                        Method::BacaniRabago,
                        2..=n_max - align.offset,
                        align.offset,
                        &exact,
                        |n| bacani_rabago_nth(&rs, spec, n),
                    );
                    methods.push(s);
                    failures.extend(f);
                }
                Ok(_) => {}
                Err(e) => failures.push(ProbeFailure {
                    method: Method::BacaniRabago,
                    n: None,
                    kind: e.into(),
                }),
            }
        }
    }

    let max_rounding_gap = methods
        .iter()
        .fold(None, |g, m| max_gap(g, m.max_rounding_gap));
    Ok(CrossCheckReport {
        k,
        initial_terms: spec
            .initial_terms()
            .iter()
            .map(ToString::to_string)
            .collect(),
        n_max,
        precision_bits,
        methods,
        failures,
        max_rounding_gap,
        bacani_rabago_offset,
    })
}

/// Settings for [`run_suite`].
#[derive(Debug, Clone, Serialize)]
pub struct VerifyConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub n_max: u64,
    pub trials: usize,
    pub seed: u64,
    /// Overrides every per-check precision when set.
    pub precision: Option<u32>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub k: usize,
    pub passed: bool,
    pub precision_bits: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_residual_log2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_log2: Option<f64>,
    pub detail: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<ProbeFailure>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub config: VerifyConfig,
    pub checks: Vec<CheckResult>,
    pub failed_checks: usize,
    pub passed: bool,
}

impl VerifyReport {
    pub fn has_precision_exhaustion(&self) -> bool {
        self.checks.iter().any(|c| {
            c.failures
                .iter()
                .any(|f| matches!(f.kind, FailureKind::PrecisionExhausted { .. }))
        })
    }
}

/// Random specs used by the suite for order `k`: a fixed stream per
/// `(seed, k)`, so results do not depend on scheduling.
pub fn random_specs(k: usize, count: usize, seed: u64) -> Vec<SequenceSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ k as u64);
    (0..count)
        .map(|_| SequenceSpec::random(k, RANDOM_TERM_BOUND, &mut rng).expect("k >= 2"))
        .collect()
}

/// Absolute-tolerance checks on values of size `2^n` need `prec/4` bits to
/// spare after `n`; 512 bits is the floor.
fn identity_precision(k: usize, n: u64) -> u32 {
    let need = (4 * (n + k as u64)) / 3 + 64;
    need.max(512).min(u64::from(u32::MAX)) as u32
}

struct Check {
    name: &'static str,
    k: usize,
    precision_bits: u32,
}

impl Check {
    fn residuals(&self, report: &ResidualReport, detail: String) -> CheckResult {
        CheckResult {
            name: self.name,
            k: self.k,
            passed: report.passed(),
            precision_bits: self.precision_bits,
            max_residual_log2: Some(report.max_log2()),
            threshold_log2: Some(report.threshold_log2()),
            detail,
            failures: Vec::new(),
        }
    }

    fn outcome(&self, passed: bool, detail: String, failures: Vec<ProbeFailure>) -> CheckResult {
        CheckResult {
            name: self.name,
            k: self.k,
            passed,
            precision_bits: self.precision_bits,
            max_residual_log2: None,
            threshold_log2: None,
            detail,
            failures,
        }
    }

    fn error(&self, method: Method, e: Error) -> CheckResult {
        let detail = e.to_string();
        self.outcome(
            false,
            detail,
            vec![ProbeFailure {
                method,
                n: None,
                kind: e.into(),
            }],
        )
    }
}

fn root_checks(rs: &RootSet, out: &mut Vec<CheckResult>) {
    let k = rs.k();
    let prec = rs.precision_bits();
    let check = |name| Check {
        name,
        k,
        precision_bits: prec,
    };

    let cert_threshold = BigFloat::pow2(rs.tolerance_log2(), prec);
    out.push(check("root_certificates").residuals(
        &ResidualReport {
            residuals: rs.residuals().to_vec(),
            threshold: cert_threshold.clone(),
        },
        format!(
            "dominant root {}, min separation 2^{:.2}",
            rs.dominant().re.to_decimal_string(20),
            rs.min_separation().log2_abs()
        ),
    ));

    let sum = rs
        .roots()
        .iter()
        .fold(HpComplex::zero(prec), |acc, z| &acc + z);
    let vieta = (&sum - &HpComplex::one(prec)).abs();
    out.push(check("vieta_sum").residuals(
        &ResidualReport {
            residuals: vec![vieta],
            threshold: cert_threshold,
        },
        "sum of roots equals 1".into(),
    ));

    out.push(check("root_identity").residuals(
        &root_identity_check(rs),
        "lambda = 1 + 1/lambda + ... + lambda^-(k-1) for every root".into(),
    ));
    out.push(check("product_identity").residuals(
        &product_identity_check(rs),
        "[(k+1)lambda - 2k] lambda^(k-1) / (lambda - 1) equals prod_{j!=m}(lambda_m - lambda_j)".into(),
    ));
}

fn dresden_shift_check(rs: &RootSet, n_max: u64) -> CheckResult {
    let k = rs.k();
    let check = Check {
        name: "dresden_index_shift",
        k,
        precision_bits: rs.precision_bits(),
    };
    let special = weights_special(rs);
    let residuals: Result<Vec<BigFloat>> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let d = dresden_nth(rs, n)?.approx_value.expect("approximate");
            let c = nth_closed_form(&special, n + k as u64 - 2)?
                .approx_value
                .expect("approximate");
            Ok((&d - &c).abs())
        })
        .collect();
    match residuals {
        Ok(residuals) => check.residuals(
            &ResidualReport {
                residuals,
                threshold: rs.identity_tolerance(),
            },
            format!("dresden(n) against closed form at n+k-2 for n in 1..={n_max}"),
        ),
        Err(e) => check.error(Method::Dresden, e),
    }
}

fn weight_path_check(rs: &RootSet, specs: &[SequenceSpec]) -> CheckResult {
    let check = Check {
        name: "weight_paths",
        k: rs.k(),
        precision_bits: rs.precision_bits(),
    };
    let diffs: Result<Vec<BigFloat>> = specs
        .par_iter()
        .map(|s| Ok(weights_like(rs, s)?.max_difference(&eigen_coefficients(rs, s)?)))
        .collect();
    match diffs {
        Ok(residuals) => check.residuals(
            &ResidualReport {
                residuals,
                threshold: rs.identity_tolerance(),
            },
            format!(
                "Vandermonde solve against closed-form weights for {} specs",
                specs.len()
            ),
        ),
        Err(e) => check.error(Method::ClosedForm, e),
    }
}

fn base_case_check(rs: &RootSet, specs: &[SequenceSpec]) -> CheckResult {
    let k = rs.k();
    let check = Check {
        name: "base_case_sum",
        k,
        precision_bits: rs.precision_bits(),
    };
    let units = (0..k).map(|p| SequenceSpec::unit(k, p).expect("p < k"));
    let all: Vec<SequenceSpec> = specs.iter().cloned().chain(units).collect();
    let failures: Vec<ProbeFailure> = all
        .par_iter()
        .filter_map(|s| {
            let expected: BigInt = s.initial_terms().iter().sum();
            let outcome = weights_like(rs, s).and_then(|w| nth_closed_form(&w, k as u64));
            match outcome {
                Ok(r) => {
                    let got = r.rounded_value.expect("approximate");
                    (got != expected).then(|| ProbeFailure {
                        method: Method::ClosedForm,
                        n: Some(k as u64),
                        kind: FailureKind::Mismatch {
                            expected: expected.to_string(),
                            got: got.to_string(),
                        },
                    })
                }
                Err(e) => Some(ProbeFailure {
                    method: Method::ClosedForm,
                    n: Some(k as u64),
                    kind: e.into(),
                }),
            }
        })
        .collect();
    check.outcome(
        failures.is_empty(),
        format!(
            "closed form at n=k equals the sum of initial terms for {} specs and {k} unit vectors",
            specs.len()
        ),
        failures,
    )
}

fn cross_check_result(spec: &SequenceSpec, n_max: u64, prec: u32) -> CheckResult {
    let check = Check {
        name: "cross_check",
        k: spec.k(),
        precision_bits: prec,
    };
    match cross_check(spec, n_max, prec) {
        Ok(r) => {
            let gap = r
                .max_rounding_gap
                .map_or_else(|| "n/a".to_string(), |g| format!("{g:.3e}"));
            check.outcome(
                r.passed(),
                format!("{spec}: n <= {n_max}, max rounding gap {gap}"),
                r.failures,
            )
        }
        Err(e) => check.error(Method::ClosedForm, e),
    }
}

fn diagonal_check(k: usize) -> CheckResult {
    const TERMS: usize = 20;
    let check = Check {
        name: "pascal_diagonals",
        k,
        precision_bits: 0,
    };
    match build_triangle(k, TERMS).and_then(|t| diagonal_sums(&t, TERMS)) {
        Ok(d) => check.outcome(
            d.matched >= 15,
            format!(
                "slope {} offset {}: {} consecutive sums match",
                d.slope, d.offset, d.matched
            ),
            Vec::new(),
        ),
        Err(e) => check.error(Method::Recurrence, e),
    }
}

fn suite_for_k(cfg: &VerifyConfig, k: usize) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let specs = random_specs(k, cfg.trials, cfg.seed);
    let shift_range = cfg.n_max.min(200);

    let eval_prec = cfg.precision.unwrap_or_else(|| precision_for(k, cfg.n_max));
    let id_prec = cfg
        .precision
        .unwrap_or_else(|| identity_precision(k, shift_range));

    match find_roots(k, id_prec) {
        Ok(rs) => {
            root_checks(&rs, &mut out);
            out.push(dresden_shift_check(&rs, shift_range));
            out.push(weight_path_check(&rs, &specs));
            out.push(base_case_check(&rs, &specs));
        }
        Err(e) => out.push(
            Check {
                name: "root_certificates",
                k,
                precision_bits: id_prec,
            }
            .error(Method::ClosedForm, e),
        ),
    }

    let fib = SequenceSpec::fibonacci(k).expect("k >= 2");
    if cfg.n_max >= k as u64 {
        for spec in std::iter::once(&fib).chain(&specs) {
            out.push(cross_check_result(spec, cfg.n_max, eval_prec));
        }
    }
    out.push(diagonal_check(k));
    out
}

/// Runs every identity and cross-check for each `k` in the configured range.
pub fn run_suite(cfg: &VerifyConfig) -> Result<VerifyReport> {
    if cfg.k_min < 2 || cfg.k_min > cfg.k_max {
        return Err(Error::InvalidArgument(format!(
            "k range {}..{} must be non-empty with k >= 2",
            cfg.k_min, cfg.k_max
        )));
    }
    if let Some(p) = cfg.precision {
        if p < crate::bigfloat::MIN_PRECISION {
            return Err(Error::InvalidArgument(format!(
                "precision {p} below 64 bits"
            )));
        }
    }
    let checks: Vec<CheckResult> = (cfg.k_min..=cfg.k_max)
        .into_par_iter()
        .flat_map_iter(|k| suite_for_k(cfg, k))
        .collect();
    let failed_checks = checks.iter().filter(|c| !c.passed).count();
    Ok(VerifyReport {
        config: cfg.clone(),
        checks,
        failed_checks,
        passed: failed_checks == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_check_fibonacci_clean() {
        let r = cross_check(&SequenceSpec::fibonacci(2).unwrap(), 200, 512).unwrap();
        assert!(r.passed(), "{:?}", r.failures);
        assert_eq!(r.bacani_rabago_offset, Some(0));
        assert!(r.max_rounding_gap.unwrap() < 0.25);
        let names: Vec<Method> = r.methods.iter().map(|m| m.method).collect();
        assert_eq!(names, Method::ALL.to_vec());
    }

    #[test]
    fn cross_check_random_k6() {
        let spec = random_specs(6, 1, 7).pop().unwrap();
        let r = cross_check(&spec, 300, 1024).unwrap();
        assert!(r.passed(), "{:?}", r.failures);
        assert_eq!(r.bacani_rabago_offset, Some(4));
        assert!(!r.methods.iter().any(|m| m.method == Method::Dresden));
    }

    #[test]
    fn cross_check_under_precision_is_reported() {
        let r = cross_check(&SequenceSpec::fibonacci(2).unwrap(), 500, 64).unwrap();
        assert!(!r.passed());
        assert!(r.has_precision_exhaustion());
        // exact routes are unaffected
        assert!(r.failures.iter().all(|f| !f.method.is_exact()));
    }

    #[test]
    fn cross_check_rejects_short_range() {
        assert!(cross_check(&SequenceSpec::fibonacci(5).unwrap(), 3, 128).is_err());
    }

    #[test]
    fn random_specs_are_reproducible() {
        assert_eq!(random_specs(4, 5, 42), random_specs(4, 5, 42));
        assert_ne!(random_specs(4, 5, 42), random_specs(4, 5, 43));
        for s in random_specs(3, 50, 1) {
            assert!(s.initial_terms().iter().all(|t| t.magnitude().bits() <= 20));
        }
    }

    #[test]
    fn small_suite_passes() {
        let cfg = VerifyConfig {
            k_min: 2,
            k_max: 3,
            n_max: 60,
            trials: 3,
            seed: 42,
            precision: None,
        };
        let report = run_suite(&cfg).unwrap();
        let failed: Vec<_> = report.checks.iter().filter(|c| !c.passed).collect();
        assert!(report.passed, "{failed:#?}");
    }

    #[test]
    fn suite_rejects_empty_range() {
        let cfg = VerifyConfig {
            k_min: 4,
            k_max: 3,
            n_max: 60,
            trials: 1,
            seed: 0,
            precision: None,
        };
        assert!(run_suite(&cfg).is_err());
    }
}
