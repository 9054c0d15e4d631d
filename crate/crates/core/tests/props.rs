//! Property tests for the cross-cutting invariants.

use proptest::prelude::*;

use aquadrift_core::distdetect::{ks_statistic, shape_curve, MagnitudeCurve};
use aquadrift_core::modelloss::roc_auc;
use aquadrift_core::scenario::{read_csv, write_csv};
use aquadrift_core::stream::{LabeledScore, SensorStream};

fn finite_f64() -> impl Strategy<Value = f64> {
    // full-precision finite values, including awkward magnitudes
    prop_oneof![
        -1e12..1e12f64,
        -1.0..1.0f64,
        Just(0.0),
        Just(-0.0),
        (-300i32..300).prop_map(|e| 1.5f64 * 2f64.powi(e)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip_is_exact(
        n_sensors in 1usize..5,
        len in 1usize..30,
        start_t in 0usize..1000,
        seed_vals in proptest::collection::vec(finite_f64(), 1..150),
    ) {
        let mut data = Vec::with_capacity(len * n_sensors);
        for i in 0..len * n_sensors {
            data.push(seed_vals[i % seed_vals.len()] * (1.0 + i as f64 * 1e-7));
        }
        let ids = (0..n_sensors).map(|j| format!("s{j}")).collect();
        let stream = SensorStream::from_rows(ids, start_t, data).unwrap();
        let mut buf = Vec::new();
        write_csv(&stream, &mut buf).unwrap();
        let back = read_csv(&buf[..]).unwrap();
        prop_assert_eq!(&stream, &back);
        // and the bytes themselves are stable
        let mut buf2 = Vec::new();
        write_csv(&back, &mut buf2).unwrap();
        prop_assert_eq!(buf, buf2);
    }

    #[test]
    fn slice_composition_reproduces_stream(
        len in 2usize..60,
        k in 1usize..59,
    ) {
        prop_assume!(k < len);
        let ids = vec!["a".to_string()];
        let data: Vec<f64> = (0..len).map(|i| (i as f64 * 0.37).sin()).collect();
        let s = SensorStream::from_rows(ids, 0, data).unwrap();
        let head = s.slice(0, k).unwrap();
        let tail = s.slice(k, len - k).unwrap();
        let rebuilt: Vec<f64> = head.rows().chain(tail.rows()).flatten().copied().collect();
        let original: Vec<f64> = s.rows().flatten().copied().collect();
        prop_assert_eq!(rebuilt, original);
    }

    #[test]
    fn roc_auc_invariant_under_increasing_transform(
        neg in proptest::collection::vec(-50i32..50, 1..20),
        pos in proptest::collection::vec(-50i32..50, 1..20),
        scale in 0.01f64..10.0,
    ) {
        let scores: Vec<LabeledScore> = neg
            .iter()
            .map(|&v| LabeledScore { label: false, score: v as f64 })
            .chain(pos.iter().map(|&v| LabeledScore { label: true, score: v as f64 }))
            .collect();
        let base = roc_auc(&scores).unwrap();
        // strictly increasing and non-saturating over the sampled range
        let mapped: Vec<LabeledScore> = scores
            .iter()
            .map(|ls| {
                let x = ls.score * scale;
                LabeledScore { label: ls.label, score: x + x * x * x * 1e-6 }
            })
            .collect();
        prop_assert_eq!(roc_auc(&mapped).unwrap(), base);

        let flipped: Vec<LabeledScore> = scores
            .iter()
            .map(|ls| LabeledScore { label: !ls.label, score: ls.score })
            .collect();
        prop_assert!((roc_auc(&flipped).unwrap() + base - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ks_invariant_under_shared_monotone_transform(
        a in proptest::collection::vec(-40i32..40, 1..25),
        b in proptest::collection::vec(-40i32..40, 1..25),
    ) {
        let af: Vec<f64> = a.iter().map(|&v| v as f64 * 0.25).collect();
        let bf: Vec<f64> = b.iter().map(|&v| v as f64 * 0.25).collect();
        let base = ks_statistic(&af, &bf).unwrap();
        let f = |x: f64| (x * 0.3).exp() + x;
        let at: Vec<f64> = af.iter().map(|&x| f(x)).collect();
        let bt: Vec<f64> = bf.iter().map(|&x| f(x)).collect();
        prop_assert_eq!(ks_statistic(&at, &bt).unwrap(), base);
    }

    #[test]
    fn shape_candidates_invariant_under_positive_scaling(
        raw in proptest::collection::vec(0u8..200, 12..80),
        exponent in -10i32..10,
    ) {
        // power-of-two scales keep the float arithmetic exact
        let scale = 2f64.powi(exponent);
        let values: Vec<f64> = raw.iter().map(|&v| v as f64 * 0.1).collect();
        let m = MagnitudeCurve { positions: (0..values.len()).collect(), values: values.clone() };
        let s1 = shape_curve(&m, 3).unwrap();
        let scaled = MagnitudeCurve {
            positions: (0..values.len()).collect(),
            values: values.iter().map(|v| v * scale).collect(),
        };
        let s2 = shape_curve(&scaled, 3).unwrap();
        let p1: Vec<usize> = s1.candidates.iter().map(|c| c.position).collect();
        let p2: Vec<usize> = s2.candidates.iter().map(|c| c.position).collect();
        prop_assert_eq!(p1, p2);
    }
}
