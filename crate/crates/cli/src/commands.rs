use std::fmt::Write as _;
use std::time::Instant;

use num_bigint::BigInt;
use serde_json::{json, Value};

use kfib_core::closed_form::{
    bacani_rabago_nth, calibrate_bacani_rabago, dresden_nth, nth_closed_form, weights_like,
};
use kfib_core::exact::{nth_by_matrix_power, nth_by_recurrence, sequence_slice, CompanionMatrix};
use kfib_core::verify::{run_suite, FailureKind, VerifyConfig, VerifyReport};
use kfib_core::{
    default_precision_for, find_roots, BigFloat, Error, EvaluationReport, SequenceSpec,
};

use crate::envelope::OutputEnvelope;
use crate::{
    Cli, CliError, Command, ComputeArgs, MethodArg, RootsArgs, SpecArgs, TableArgs, TableFormat,
    VerifyArgs,
};
use crate::{MAX_APPROX_N, MAX_TABLE_ROWS};

pub struct Outcome {
    pub output: String,
    pub exit_code: u8,
}

type Failure = Box<(CliError, Option<OutputEnvelope>)>;

pub fn run(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Compute(args) => compute(cli, args),
        Command::Roots(args) => roots(cli, args),
        Command::Verify(args) => verify(cli, args),
        Command::Table(args) => table(cli, args),
    }
}

fn strings(v: &[BigInt]) -> Vec<String> {
    v.iter().map(ToString::to_string).collect()
}

fn build_spec(args: &SpecArgs) -> Result<SequenceSpec, CliError> {
    let k =
        usize::try_from(args.k).map_err(|_| CliError::Usage(format!("k={} too large", args.k)))?;
    let spec = match &args.init {
        Some(terms) => SequenceSpec::new(k, terms.clone()),
        None => SequenceSpec::fibonacci(k),
    };
    spec.map_err(CliError::from)
}

/// Closed-form precision: the default policy plus room for large initial
/// terms.
fn closed_form_precision(cli: &Cli, spec: &SequenceSpec, n: u64) -> u32 {
    cli.precision.unwrap_or_else(|| {
        let init_bits = spec
            .initial_terms()
            .iter()
            .map(BigInt::bits)
            .max()
            .unwrap_or(0);
        default_precision_for(spec, n).saturating_add(init_bits.min(u64::from(u32::MAX / 2)) as u32)
    })
}

/// Attaches the envelope (when `--json`) to an error.
fn fail(cli: &Cli, mut env: OutputEnvelope, err: CliError) -> Failure {
    if !cli.json {
        return Box::new((err, None));
    }
    let mut error = json!({
        "kind": err.kind(),
        "message": err.to_string(),
        "exit_code": err.exit_code(),
    });
    if let CliError::Numeric(Error::PrecisionExhausted {
        suggested_bits,
        rounding_gap,
        ..
    }) = &err
    {
        error["suggested_precision"] = json!(suggested_bits);
        error["rounding_gap"] = json!(rounding_gap);
    }
    env.results = json!({ "error": error });
    Box::new((err, Some(env)))
}

fn success(cli: &Cli, env: OutputEnvelope, plain: String, exit_code: u8) -> Outcome {
    let output = if cli.json {
        format!("{}\n", env.to_json())
    } else {
        plain
    };
    Outcome { output, exit_code }
}

fn compute(cli: &Cli, args: &ComputeArgs) -> Result<Outcome, Failure> {
    let method_name = match args.method {
        MethodArg::Recurrence => "recurrence",
        MethodArg::MatrixPower => "matrix_power",
        MethodArg::ClosedForm => "closed_form",
        MethodArg::Dresden => "dresden",
        MethodArg::BacaniRabago => "bacani_rabago",
    };
    let mut env = OutputEnvelope::new(
        "compute",
        json!({
            "k": args.spec.k,
            "n": args.n,
            "initial_terms": args.spec.init.as_deref().map(strings),
            "method": method_name,
            "precision": cli.precision,
        }),
    );
    let spec = match build_spec(&args.spec) {
        Ok(s) => s,
        Err(e) => return Err(fail(cli, env, e)),
    };
    let n = args.n;
    let k = spec.k() as u64;

    let started = Instant::now();
    let exact = match args.method {
        MethodArg::Recurrence => Some(nth_by_recurrence(&spec, n)),
        MethodArg::MatrixPower => Some(nth_by_matrix_power(&spec, n)),
        _ => None,
    };
    if let Some(value) = exact {
        env.time("evaluate", started.elapsed());
        env.results = json!({
            "k": k,
            "n": n,
            "method": method_name,
            "value": value.to_string(),
            "exact": true,
            "rounding_gap": null,
            "precision_bits": null,
            "formula_index": null,
        });
        return Ok(success(cli, env, format!("{value}\n"), 0));
    }

    if n > MAX_APPROX_N {
        let err = CliError::Usage(format!("approximate methods accept n <= {MAX_APPROX_N}"));
        return Err(fail(cli, env, err));
    }
    let prec = closed_form_precision(cli, &spec, n);
    let rs = match find_roots(spec.k(), prec) {
        Ok(rs) => rs,
        Err(e) => return Err(fail(cli, env, e.into())),
    };
    env.time("roots", started.elapsed());

    let started = Instant::now();
    let outcome: Result<(EvaluationReport, u64), CliError> = match args.method {
        MethodArg::ClosedForm => weights_like(&rs, &spec)
            .and_then(|w| nth_closed_form(&w, n))
            .map(|r| (r, n))
            .map_err(CliError::from),
        MethodArg::Dresden => {
            if !spec.is_fibonacci() {
                Err(CliError::Usage(
                    "the dresden method needs the 0,...,0,1 initial terms".into(),
                ))
            } else if n + 1 < k {
                Err(CliError::Usage(format!(
                    "the dresden method needs n >= {}",
                    k - 1
                )))
            } else {
                let m = n + 2 - k;
                dresden_nth(&rs, m).map(|r| (r, m)).map_err(CliError::from)
            }
        }
        MethodArg::BacaniRabago => calibrate_bacani_rabago(&rs, &spec)
            .map_err(CliError::from)
            .and_then(|align| {
                if n < align.offset + 2 {
                    Err(CliError::Usage(format!(
                        "the bacani-rabago method needs n >= {}",
                        align.offset + 2
                    )))
                } else {
                    let m = n - align.offset;
                    bacani_rabago_nth(&rs, &spec, m)
                        .map(|r| (r, m))
                        .map_err(CliError::from)
                }
            }),
        MethodArg::Recurrence | MethodArg::MatrixPower => unreachable!("handled above"),
    };
    env.time("evaluate", started.elapsed());
    let (report, formula_index) = match outcome {
        Ok(v) => v,
        Err(e) => return Err(fail(cli, env, e)),
    };
    let value = report.rounded_value.clone().expect("approximate report");
    let gap = report.rounding_gap.expect("approximate report");
    env.results = json!({
        "k": k,
        "n": n,
        "method": method_name,
        "value": value.to_string(),
        "exact": false,
        "rounding_gap": gap,
        "precision_bits": prec,
        "formula_index": formula_index,
    });
    Ok(success(
        cli,
        env,
        format!("{value}\nrounding_gap: {gap:e}\n"),
        0,
    ))
}

fn roots(cli: &Cli, args: &RootsArgs) -> Result<Outcome, Failure> {
    let digits = args.digits;
    let prec = cli.precision.unwrap_or_else(|| {
        ((digits as u64 * 10 / 3 + 64).max(128)).min(u64::from(u32::MAX)) as u32
    });
    let mut env = OutputEnvelope::new(
        "roots",
        json!({ "k": args.k, "digits": digits, "precision": cli.precision }),
    );
    let started = Instant::now();
    let rs = match usize::try_from(args.k)
        .map_err(|_| CliError::Usage("k too large".into()))
        .and_then(|k| find_roots(k, prec).map_err(CliError::from))
    {
        Ok(rs) => rs,
        Err(e) => return Err(fail(cli, env, e)),
    };
    env.time("roots", started.elapsed());

    // Display order: decreasing modulus, then decreasing imaginary part.
    let mut order: Vec<usize> = (0..rs.k()).collect();
    order.sort_by(|&a, &b| {
        let (za, zb) = (&rs.roots()[a], &rs.roots()[b]);
        zb.norm_sqr()
            .total_cmp(&za.norm_sqr())
            .then_with(|| zb.im.total_cmp(&za.im))
    });
    let real_tol = BigFloat::pow2(rs.tolerance_log2(), prec);

    let mut plain = format!("k = {}, precision = {} bits\n", rs.k(), prec);
    let mut listed = Vec::new();
    for (rank, &m) in order.iter().enumerate() {
        let z = &rs.roots()[m];
        let is_real = z.im.abs() < real_tol;
        let re = z.re.to_decimal_string(digits);
        let im = z.im.to_decimal_string(digits);
        let shown = if is_real {
            re.clone()
        } else if let Some(mag) = im.strip_prefix('-') {
            format!("{re} - {mag}i")
        } else {
            format!("{re} + {im}i")
        };
        let residual_log2 = rs.residuals()[m].log2_abs();
        let dominant = m == rs.dominant_index();
        let residual = if residual_log2.is_finite() {
            format!("2^{residual_log2:.1}")
        } else {
            "0".to_string()
        };
        let _ = writeln!(
            plain,
            "root {rank}: {shown}{}  |P| = {residual}",
            if dominant { "  [dominant]" } else { "" }
        );
        listed.push(json!({
            "re": re,
            "im": if is_real { "0".to_string() } else { im },
            "modulus": z.abs().to_decimal_string(digits),
            "residual_log2": residual_log2,
            "dominant": dominant,
            "real": is_real,
        }));
    }
    let _ = writeln!(
        plain,
        "min separation: {}",
        rs.min_separation().to_decimal_string(digits)
    );
    env.results = json!({
        "k": rs.k(),
        "precision_bits": prec,
        "digits": digits,
        "roots": listed,
        "dominant": rs.dominant().re.to_decimal_string(digits),
        "min_separation": rs.min_separation().to_decimal_string(digits),
        "certification_log2": rs.tolerance_log2(),
    });
    Ok(success(cli, env, plain, 0))
}

fn describe_failure(kind: &FailureKind) -> String {
    match kind {
        FailureKind::Mismatch { expected, got } => format!("expected {expected}, got {got}"),
        FailureKind::PrecisionExhausted {
            rounding_gap,
            suggested_bits,
        } => {
            format!("PrecisionExhausted (gap {rounding_gap:.3e}; try --precision {suggested_bits})")
        }
        FailureKind::NonConvergence { detail } => format!("NonConvergence: {detail}"),
        FailureKind::CalibrationFailed { detail } => format!("CalibrationFailed: {detail}"),
        FailureKind::Error { detail } => detail.clone(),
    }
}

fn render_verify(report: &VerifyReport) -> String {
    const SHOWN_FAILURES: usize = 5;
    let mut out = String::new();
    for c in &report.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        let residual = match (c.max_residual_log2, c.threshold_log2) {
            (Some(r), Some(t)) => format!("  max 2^{r:.1} vs 2^{t:.1}"),
            _ => String::new(),
        };
        let _ = writeln!(
            out,
            "{status} k={:<2} {:<20}{residual}  {}",
            c.k, c.name, c.detail
        );
        for f in c.failures.iter().take(SHOWN_FAILURES) {
            let at = f.n.map_or_else(String::new, |n| format!(" n={n}"));
            let _ = writeln!(out, "     {}{at}: {}", f.method, describe_failure(&f.kind));
        }
        if c.failures.len() > SHOWN_FAILURES {
            let _ = writeln!(out, "     ... {} more", c.failures.len() - SHOWN_FAILURES);
        }
    }
    let _ = writeln!(
        out,
        "{} checks, {} failed",
        report.checks.len(),
        report.failed_checks
    );
    out
}

fn verify(cli: &Cli, args: &VerifyArgs) -> Result<Outcome, Failure> {
    let cfg = VerifyConfig {
        k_min: args.k.0,
        k_max: args.k.1,
        n_max: args.n_max,
        trials: args.trials,
        seed: cli.seed,
        precision: cli.precision,
    };
    let mut env = OutputEnvelope::new(
        "verify",
        json!({
            "k_min": cfg.k_min,
            "k_max": cfg.k_max,
            "n_max": cfg.n_max,
            "trials": cfg.trials,
            "seed": cfg.seed,
            "precision": cfg.precision,
        }),
    );
    let started = Instant::now();
    let report = match run_suite(&cfg) {
        Ok(r) => r,
        Err(e) => return Err(fail(cli, env, e.into())),
    };
    env.time("suite", started.elapsed());
    env.results = serde_json::to_value(&report).expect("report serializes");
    let code = if report.passed { 0 } else { 1 };
    Ok(success(cli, env, render_verify(&report), code))
}

fn table(cli: &Cli, args: &TableArgs) -> Result<Outcome, Failure> {
    let mut env = OutputEnvelope::new(
        "table",
        json!({
            "k": args.spec.k,
            "from": args.from,
            "to": args.to,
            "initial_terms": args.spec.init.as_deref().map(strings),
            "format": match args.format {
                TableFormat::Plain => "plain",
                TableFormat::Csv => "csv",
                TableFormat::Json => "json",
            },
            "precision": cli.precision,
        }),
    );
    let spec = match build_spec(&args.spec) {
        Ok(s) => s,
        Err(e) => return Err(fail(cli, env, e)),
    };
    if args.to >= args.from && args.to - args.from >= MAX_TABLE_ROWS {
        let err = CliError::Usage(format!("a table holds at most {MAX_TABLE_ROWS} rows"));
        return Err(fail(cli, env, err));
    }
    if args.format != TableFormat::Plain && args.to > MAX_APPROX_N {
        let err = CliError::Usage(format!("closed-form columns need --to <= {MAX_APPROX_N}"));
        return Err(fail(cli, env, err));
    }
    let started = Instant::now();
    let terms = match sequence_slice(&spec, args.from, args.to) {
        Ok(t) => t,
        Err(e) => return Err(fail(cli, env, e.into())),
    };
    env.time("recurrence", started.elapsed());

    let mut results = json!({
        "k": spec.k(),
        "from": args.from,
        "to": args.to,
        "initial_terms": strings(spec.initial_terms()),
        "terms": strings(&terms),
    });

    if args.format == TableFormat::Plain {
        env.results = results;
        return Ok(success(
            cli,
            env,
            format!("{}\n", strings(&terms).join(",")),
            0,
        ));
    }

    let started = Instant::now();
    let companion = CompanionMatrix::new(spec.k()).expect("spec has k >= 2");
    let matrix: Vec<BigInt> = (args.from..=args.to)
        .map(|n| kfib_core::exact::nth_from_power(&companion.power(n), &spec))
        .collect();
    env.time("matrix_power", started.elapsed());

    let started = Instant::now();
    let prec = closed_form_precision(cli, &spec, args.to);
    let closed: Result<Vec<EvaluationReport>, Error> = find_roots(spec.k(), prec)
        .and_then(|rs| weights_like(&rs, &spec))
        .and_then(|w| {
            (args.from..=args.to)
                .map(|n| nth_closed_form(&w, n))
                .collect()
        });
    env.time("closed_form", started.elapsed());
    let closed = match closed {
        Ok(c) => c,
        Err(e) => return Err(fail(cli, env, e.into())),
    };

    let mut csv = String::from("n,recurrence,matrix_power,closed_form,rounding_gap\n");
    let mut rows = Vec::new();
    for (i, n) in (args.from..=args.to).enumerate() {
        let cf = closed[i]
            .rounded_value
            .as_ref()
            .expect("approximate report");
        let gap = closed[i].rounding_gap.expect("approximate report");
        let _ = writeln!(csv, "{n},{},{},{cf},{gap:e}", terms[i], matrix[i]);
        rows.push(json!({
            "n": n,
            "recurrence": terms[i].to_string(),
            "matrix_power": matrix[i].to_string(),
            "closed_form": cf.to_string(),
            "rounding_gap": gap,
        }));
    }
    results["precision_bits"] = json!(prec);
    results["rows"] = Value::Array(rows);
    env.results = results;

    let plain = if args.format == TableFormat::Json {
        format!("{}\n", env.to_json())
    } else {
        csv
    };
    Ok(success(cli, env, plain, 0))
}
