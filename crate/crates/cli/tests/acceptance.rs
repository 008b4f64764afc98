//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs under `cargo test` with its own harness.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use num_bigint::BigInt;
use serde_json::Value;

use kfib_core::charpoly::{find_roots, root_identity_check};
use kfib_core::closed_form::{
    dresden_nth, eigen_coefficients, nth_closed_form, product_identity_check, weights_like,
    weights_special, MAX_ROUNDING_GAP,
};
use kfib_core::exact::{nth_by_matrix_power, nth_by_recurrence, sequence_slice};
use kfib_core::pascal::{build_triangle, diagonal_sums};
use kfib_core::verify::random_specs;
use kfib_core::{default_precision_for, precision_for, BigFloat, HpComplex, SequenceSpec};

const SEED: u64 = 42;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn pow2(e: i64, prec: u32) -> BigFloat {
    BigFloat::pow2(e, prec)
}

fn exact_equivalence() -> Outcome {
    let mut probes = 0usize;
    for k in 2..=10 {
        for spec in random_specs(k, 20, SEED) {
            for n in 0..=300 {
                let a = nth_by_recurrence(&spec, n);
                let b = nth_by_matrix_power(&spec, n);
                ensure(a == b, || format!("{spec} n={n}: {a} vs {b}"))?;
                probes += 1;
            }
        }
    }
    Ok(format!("{probes} probes bit-exact"))
}

fn closed_form_like() -> Outcome {
    const N: u64 = 500;
    let mut probes = 0usize;
    let mut worst = 0f64;
    for k in 2..=8 {
        for spec in random_specs(k, 20, SEED) {
            let rs = find_roots(k, default_precision_for(&spec, N)).map_err(|e| e.to_string())?;
            let w = weights_like(&rs, &spec).map_err(|e| e.to_string())?;
            let exact = sequence_slice(&spec, 0, N).map_err(|e| e.to_string())?;
            for n in 0..=N {
                let r = nth_closed_form(&w, n).map_err(|e| format!("{spec} n={n}: {e}"))?;
                let gap = r.rounding_gap.unwrap();
                ensure(gap < MAX_ROUNDING_GAP, || {
                    format!("{spec} n={n}: gap {gap}")
                })?;
                ensure(r.rounded_value.as_ref() == Some(&exact[n as usize]), || {
                    format!("{spec} n={n}: rounded to {:?}", r.rounded_value)
                })?;
                worst = worst.max(gap);
                probes += 1;
            }
        }
    }
    Ok(format!("{probes} probes, max gap {worst:.3e}"))
}

fn closed_form_special() -> Outcome {
    const N: u64 = 500;
    let mut worst = 0f64;
    for k in 2..=10 {
        let spec = SequenceSpec::fibonacci(k).unwrap();
        let rs = find_roots(k, precision_for(k, N)).map_err(|e| e.to_string())?;
        let w = weights_special(&rs);
        let exact = sequence_slice(&spec, 0, N).unwrap();
        for n in 0..=N {
            let r = nth_closed_form(&w, n).map_err(|e| format!("k={k} n={n}: {e}"))?;
            let gap = r.rounding_gap.unwrap();
            ensure(gap < MAX_ROUNDING_GAP, || format!("k={k} n={n}: gap {gap}"))?;
            ensure(r.rounded_value.as_ref() == Some(&exact[n as usize]), || {
                format!("k={k} n={n}: rounded to {:?}", r.rounded_value)
            })?;
            worst = worst.max(gap);
        }
    }
    Ok(format!("k=2..10, n<=500, max gap {worst:.3e}"))
}

fn dresden_shift() -> Outcome {
    const PREC: u32 = 512;
    let tol = pow2(-(PREC as i64) / 4, PREC);
    let mut worst = BigFloat::zero(PREC);
    for k in 2..=8u64 {
        let rs = find_roots(k as usize, PREC).map_err(|e| e.to_string())?;
        let w = weights_special(&rs);
        for n in 1..=200 {
            let d = dresden_nth(&rs, n).map_err(|e| format!("k={k} n={n}: {e}"))?;
            let c = nth_closed_form(&w, n + k - 2).map_err(|e| format!("k={k} n={n}: {e}"))?;
            let diff = (d.approx_value.as_ref().unwrap() - c.approx_value.as_ref().unwrap()).abs();
            ensure(diff < tol, || {
                format!("k={k} n={n}: |delta| = 2^{:.1}", diff.log2_abs())
            })?;
            if diff > worst {
                worst = diff;
            }
        }
    }
    Ok(format!("max |delta| 2^{:.1} < 2^-128", worst.log2_abs()))
}

fn product_identity() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for k in 2..=12 {
        let rs = find_roots(k, 512).map_err(|e| e.to_string())?;
        let report = product_identity_check(&rs);
        let limit = pow2(-128, 512);
        ensure(report.residuals.iter().all(|r| *r < limit), || {
            format!("k={k}: max residual 2^{:.1}", report.max_log2())
        })?;
        worst = worst.max(report.max_log2());
    }
    Ok(format!("k=2..12 at 512 bits, max residual 2^{worst:.1}"))
}

fn base_case() -> Outcome {
    let mut count = 0usize;
    for k in 2..=8usize {
        let n = k as u64;
        for spec in random_specs(k, 50, SEED) {
            let rs = find_roots(k, default_precision_for(&spec, n)).map_err(|e| e.to_string())?;
            let w = weights_like(&rs, &spec).map_err(|e| e.to_string())?;
            let r = nth_closed_form(&w, n).map_err(|e| e.to_string())?;
            let sum: BigInt = spec.initial_terms().iter().sum();
            ensure(r.rounded_value == Some(sum.clone()), || {
                format!("{spec}: got {:?}, expected {sum}", r.rounded_value)
            })?;
            count += 1;
        }
        let rs = find_roots(k, 256).map_err(|e| e.to_string())?;
        for p in 0..k {
            let unit = SequenceSpec::unit(k, p).unwrap();
            let w = weights_like(&rs, &unit).map_err(|e| e.to_string())?;
            let r = nth_closed_form(&w, n).map_err(|e| e.to_string())?;
            ensure(r.rounded_value == Some(BigInt::from(1)), || {
                format!("k={k} unit {p}: got {:?}", r.rounded_value)
            })?;
            count += 1;
        }
    }
    Ok(format!(
        "{count} base-case probes round to the initial-term sum"
    ))
}

fn root_identity() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for k in 2..=12 {
        let rs = find_roots(k, 512).map_err(|e| e.to_string())?;
        let report = root_identity_check(&rs);
        let limit = pow2(-128, 512);
        ensure(report.residuals.iter().all(|r| *r < limit), || {
            format!("k={k}: max residual 2^{:.1}", report.max_log2())
        })?;
        worst = worst.max(report.max_log2());
    }
    Ok(format!("k=2..12 at 512 bits, max residual 2^{worst:.1}"))
}

fn root_certificates() -> Outcome {
    const PREC: u32 = 256;
    let tol = pow2(-128, PREC);
    let one = BigFloat::one(PREC);
    let two = BigFloat::from_int(2, PREC);
    for k in 2..=12 {
        let rs = find_roots(k, PREC).map_err(|e| e.to_string())?;
        let poly_tol_ok = rs.residuals().iter().all(|r| *r < tol);
        ensure(poly_tol_ok, || format!("k={k}: residual above 2^-128"))?;
        let dom = rs.dominant();
        ensure(dom.im.abs() < tol && dom.re > one && dom.re < two, || {
            format!("k={k}: dominant root {dom}")
        })?;
        for (m, z) in rs.roots().iter().enumerate() {
            if m != rs.dominant_index() {
                ensure(z.abs() < one, || format!("k={k}: |{z}| >= 1"))?;
            }
        }
        let sum = rs.roots().iter().fold(HpComplex::zero(PREC), |a, z| &a + z);
        ensure((&sum - &HpComplex::one(PREC)).abs() < tol, || {
            format!("k={k}: Vieta sum {sum}")
        })?;
        ensure(rs == find_roots(k, PREC).unwrap(), || {
            format!("k={k}: not deterministic")
        })?;
    }
    Ok("k=2..12 at 256 bits certified".into())
}

fn triangle_fixtures() -> Outcome {
    let row = |tri: &kfib_core::PascalTriangleK, n: usize| -> Vec<String> {
        tri.rows()[n].iter().map(ToString::to_string).collect()
    };
    let tri = build_triangle(3, 5).map_err(|e| e.to_string())?;
    ensure(row(&tri, 3).join(" ") == "1 5 5 1", || {
        format!("row 3: {:?}", row(&tri, 3))
    })?;
    ensure(row(&tri, 4).join(" ") == "1 7 13 7 1", || {
        format!("row 4: {:?}", row(&tri, 4))
    })?;
    let mut summary = Vec::new();
    for k in 2..=5 {
        let tri = build_triangle(k, 20).map_err(|e| e.to_string())?;
        let d = diagonal_sums(&tri, 20).map_err(|e| e.to_string())?;
        let exact = sequence_slice(
            &SequenceSpec::fibonacci(k).unwrap(),
            d.offset,
            d.offset + 19,
        )
        .map_err(|e| e.to_string())?;
        let agree = d
            .sums
            .iter()
            .zip(&exact)
            .take_while(|(a, b)| a == b)
            .count();
        ensure(agree >= 15, || {
            format!("k={k}: only {agree} diagonal sums agree")
        })?;
        summary.push(format!("k={k}: {agree}"));
    }
    Ok(format!(
        "rows reproduced; diagonal agreement {}",
        summary.join(", ")
    ))
}

fn eigen_path() -> Outcome {
    const PREC: u32 = 512;
    let mut worst = BigFloat::zero(PREC);
    for k in 2..=8 {
        let rs = find_roots(k, PREC).map_err(|e| e.to_string())?;
        let tol = rs.identity_tolerance();
        for spec in random_specs(k, 20, SEED) {
            let a = weights_like(&rs, &spec).map_err(|e| e.to_string())?;
            let b = eigen_coefficients(&rs, &spec).map_err(|e| e.to_string())?;
            let diff = a.max_difference(&b);
            ensure(diff < tol, || {
                format!("{spec}: difference 2^{:.1}", diff.log2_abs())
            })?;
            if diff > worst {
                worst = diff;
            }
        }
    }
    Ok(format!(
        "k=2..8, 20 specs each, max componentwise difference 2^{:.1}",
        worst.log2_abs()
    ))
}

fn kfib(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kfib"))
        .args(args)
        .output()
        .expect("spawn kfib")
}

fn schema() -> jsonschema::JSONSchema {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/envelope.schema.json");
    let text = std::fs::read_to_string(&path).expect("schema file");
    let value: Value = serde_json::from_str(&text).expect("schema is JSON");
    jsonschema::JSONSchema::options()
        .with_draft(jsonschema::Draft::Draft7)
        .compile(&value)
        .expect("schema compiles")
}

fn validate(schema: &jsonschema::JSONSchema, args: &[&str], out: &Output) -> Result<Value, String> {
    let text = String::from_utf8_lossy(&out.stdout);
    let value: Value =
        serde_json::from_str(&text).map_err(|e| format!("{args:?}: not JSON ({e})"))?;
    if let Err(errors) = schema.validate(&value) {
        let msgs: Vec<String> = errors
            .map(|e| format!("{} at {}", e, e.instance_path))
            .collect();
        return Err(format!("{args:?}: schema violations: {}", msgs.join("; ")));
    }
    Ok(value)
}

fn cli_contract() -> Outcome {
    let out = kfib(&["verify", "--k", "2..6", "--n-max", "200", "--seed", "42"]);
    ensure(out.status.code() == Some(0), || {
        format!("verify 2..6 exited {:?}", out.status.code())
    })?;

    let out = kfib(&[
        "compute",
        "--k",
        "2",
        "--n",
        "500",
        "--method",
        "closed-form",
        "--precision",
        "64",
    ]);
    ensure(out.status.code() == Some(3), || {
        format!("under-precision compute exited {:?}", out.status.code())
    })?;
    let stderr = String::from_utf8_lossy(&out.stderr);
    ensure(stderr.contains("--precision"), || {
        format!("no precision hint: {stderr}")
    })?;

    let schema = schema();
    let args = [
        "--json",
        "verify",
        "--k",
        "2..2",
        "--n-max",
        "500",
        "--precision",
        "64",
    ];
    let out = kfib(&args);
    ensure(out.status.code() == Some(1), || {
        format!("under-precision verify exited {:?}", out.status.code())
    })?;
    let v = validate(&schema, &args, &out)?;
    let exhausted = v["results"]["checks"]
        .as_array()
        .into_iter()
        .flatten()
        .flat_map(|c| c["failures"].as_array().into_iter().flatten())
        .filter(|f| f["kind"] == "precision_exhausted")
        .count();
    ensure(exhausted > 0, || "no precision_exhausted entries".into())?;

    let envelopes: [&[&str]; 11] = [
        &[
            "--json",
            "compute",
            "--k",
            "3",
            "--n",
            "10",
            "--method",
            "recurrence",
        ],
        &[
            "--json",
            "compute",
            "--k",
            "2",
            "--n",
            "50",
            "--method",
            "closed-form",
            "--precision",
            "256",
        ],
        &[
            "--json", "compute", "--k", "4", "--n", "40", "--method", "dresden",
        ],
        &[
            "--json",
            "compute",
            "--k",
            "3",
            "--n",
            "30",
            "--init",
            "5,-2,7",
            "--method",
            "bacani-rabago",
        ],
        &[
            "--json",
            "compute",
            "--k",
            "2",
            "--n",
            "500",
            "--method",
            "closed-form",
            "--precision",
            "64",
        ],
        &["--json", "compute", "--k", "3", "--n", "5", "--init", "1,2"],
        &["--json", "roots", "--k", "5", "--digits", "15"],
        &[
            "--json", "verify", "--k", "2..3", "--n-max", "60", "--trials", "2",
        ],
        &["--json", "table", "--k", "2", "--from", "0", "--to", "7"],
        &[
            "--json", "table", "--k", "3", "--from", "2", "--to", "10", "--format", "csv",
        ],
        &[
            "table", "--k", "4", "--from", "0", "--to", "12", "--format", "json",
        ],
    ];
    for args in envelopes {
        validate(&schema, args, &kfib(args))?;
    }
    Ok(format!(
        "exit codes 0/3/1 as required; {} envelopes validate",
        envelopes.len() + 1
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("exact-method equivalence", exact_equivalence),
        ("closed form, arbitrary initial terms", closed_form_like),
        ("closed form, 0..0,1 initial terms", closed_form_special),
        ("dresden index shift", dresden_shift),
        ("product identity", product_identity),
        ("base case sum", base_case),
        ("root identity", root_identity),
        ("root certificates", root_certificates),
        ("triangle fixtures and diagonals", triangle_fixtures),
        ("eigen-path weights", eigen_path),
        ("cli contract", cli_contract),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
