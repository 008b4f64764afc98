use kfib_core::charpoly::find_roots;
use kfib_core::closed_form::{nth_closed_form, weights_like};
use kfib_core::exact::{nth_by_matrix_power, nth_by_recurrence, sequence_slice, CompanionMatrix};
use kfib_core::pascal::{build_triangle, diagonal_sums};
use kfib_core::{precision_for, BigFloat, HpComplex, SequenceSpec};
use num_bigint::BigInt;
use proptest::prelude::*;

fn spec_strategy(max_k: usize, bound: i64) -> impl Strategy<Value = SequenceSpec> {
    (2..=max_k).prop_flat_map(move |k| {
        prop::collection::vec(-bound..=bound, k)
            .prop_map(move |t| SequenceSpec::from_i64(k, &t).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matrix_power_equals_recurrence(spec in spec_strategy(10, 100), n in 0u64..=300) {
        prop_assert_eq!(nth_by_matrix_power(&spec, n), nth_by_recurrence(&spec, n));
    }

    #[test]
    fn recurrence_law_holds(spec in spec_strategy(10, 100)) {
        let k = spec.k();
        let terms = sequence_slice(&spec, 0, 120).unwrap();
        for n in k..terms.len() {
            let window: BigInt = terms[n - k..n].iter().sum();
            prop_assert_eq!(&terms[n], &window);
        }
    }

    #[test]
    fn evaluation_is_linear(
        (u, v) in (2usize..=8).prop_flat_map(|k| (
            prop::collection::vec(-1000i64..=1000, k),
            prop::collection::vec(-1000i64..=1000, k),
        )),
        n in 0u64..200,
    ) {
        let k = u.len();
        let sum: Vec<i64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        let su = SequenceSpec::from_i64(k, &u).unwrap();
        let sv = SequenceSpec::from_i64(k, &v).unwrap();
        let ss = SequenceSpec::from_i64(k, &sum).unwrap();
        prop_assert_eq!(
            nth_by_matrix_power(&ss, n),
            nth_by_recurrence(&su, n) + nth_by_recurrence(&sv, n)
        );
    }

    #[test]
    fn companion_step_shifts_window(spec in spec_strategy(10, 1000), start in 0u64..50) {
        let k = spec.k() as u64;
        let m = CompanionMatrix::new(spec.k()).unwrap();
        let window = sequence_slice(&spec, start, start + k - 1).unwrap();
        let next = sequence_slice(&spec, start + 1, start + k).unwrap();
        prop_assert_eq!(m.apply(&window), next);
    }

    #[test]
    fn closed_form_rounds_to_exact(spec in spec_strategy(6, 1_000_000), n in 0u64..=150) {
        let rs = find_roots(spec.k(), precision_for(spec.k(), 150)).unwrap();
        let w = weights_like(&rs, &spec).unwrap();
        let r = nth_closed_form(&w, n).unwrap();
        prop_assert!(r.rounding_gap.unwrap() < 0.25);
        prop_assert_eq!(r.rounded_value.unwrap(), nth_by_recurrence(&spec, n));
    }
}

#[test]
fn default_precision_covers_term_size() {
    for k in 2..=10 {
        let spec = SequenceSpec::fibonacci(k).unwrap();
        let terms = sequence_slice(&spec, 0, 2000).unwrap();
        for (n, t) in terms.iter().enumerate() {
            let bits = t.bits();
            assert!(
                u64::from(precision_for(k, n as u64)) >= bits + 8,
                "k={k} n={n}"
            );
        }
    }
}

#[test]
fn root_set_invariants() {
    for k in 2..=12 {
        let prec = 256;
        let rs = find_roots(k, prec).unwrap();
        let tol = BigFloat::pow2(-(prec as i64) / 2, prec);
        let one = BigFloat::one(prec);

        let sum = rs.roots().iter().fold(HpComplex::zero(prec), |a, z| &a + z);
        assert!(
            (&sum - &HpComplex::one(prec)).abs() < tol,
            "vieta sum k={k}"
        );

        // constant term −1 and degree k give ∏λ = (−1)^{k+1}
        let prod = rs.roots().iter().fold(HpComplex::one(prec), |a, z| &a * z);
        let expected = HpComplex::from_int(if k % 2 == 0 { -1 } else { 1 }, prec);
        assert!((&prod - &expected).abs() < tol, "vieta product k={k}");

        let outside = rs.roots().iter().filter(|z| z.norm_sqr() >= one).count();
        assert_eq!(outside, 1, "k={k}");

        for z in rs.roots() {
            let conj = z.conj();
            let nearest = rs
                .roots()
                .iter()
                .map(|w| (w - &conj).abs())
                .min_by(|a, b| a.total_cmp(b))
                .unwrap();
            assert!(nearest < tol, "conjugate closure k={k}");
        }
        assert_eq!(rs, find_roots(k, prec).unwrap(), "determinism k={k}");
    }
}

#[test]
fn triangle_rows_are_symmetric() {
    // holds for k = 2 and 3 only; e.g. the k=4 row 3 is 1 6 5 1
    for k in 2..=3 {
        let tri = build_triangle(k, 8).unwrap();
        for row in tri.rows() {
            let rev: Vec<BigInt> = row.iter().rev().cloned().collect();
            assert_eq!(row, &rev, "k={k}");
        }
    }
    let k4 = build_triangle(4, 4).unwrap();
    assert_eq!(k4.rows()[3], [1, 6, 5, 1].map(BigInt::from));
}

#[test]
fn triangle_recurrence_holds_on_interior() {
    let k = 4;
    let tri = build_triangle(k, 15).unwrap();
    for n in 2..15i64 {
        for i in 1..n {
            let expected: BigInt =
                tri.get(n - 1, i) + (1..k as i64).map(|j| tri.get(n - j, i - 1)).sum::<BigInt>();
            assert_eq!(tri.get(n, i), expected);
        }
    }
}

#[test]
fn diagonal_calibration_locks_slope_one() {
    for k in 2..=10 {
        let tri = build_triangle(k, 24).unwrap();
        let d = diagonal_sums(&tri, 24).unwrap();
        assert_eq!((d.slope, d.offset), (1, k as u64 - 1), "k={k}");
        assert_eq!(d.matched, 24);
    }
}
