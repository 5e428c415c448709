mod common;

use common::{close, step};
use proptest::prelude::*;
use std::f64::consts::TAU;
use turnhash::stepfn::{l1_distance, l2_distance};

/// Midpoint rule with `n` cells.
fn grid_lp(f: &turnhash::StepFunction, g: &turnhash::StepFunction, p: i32, n: usize) -> f64 {
    let h = 1.0 / n as f64;
    let sum: f64 = (0..n)
        .map(|i| {
            let x = (i as f64 + 0.5) * h;
            (f.evaluate(x).unwrap() - g.evaluate(x).unwrap()).abs().powi(p)
        })
        .sum();
    (sum * h).powf(1.0 / p as f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_axioms(f in step(8, -3.0, 3.0), g in step(8, -3.0, 3.0), h in step(8, -3.0, 3.0)) {
        for d in [l1_distance, l2_distance] {
            prop_assert_eq!(d(&f, &f).unwrap(), 0.0);
            let fg = d(&f, &g).unwrap();
            prop_assert!(fg >= 0.0);
            prop_assert!(close(fg, d(&g, &f).unwrap(), 1e-12));
            prop_assert!(fg <= d(&f, &h).unwrap() + d(&h, &g).unwrap() + 1e-12);
        }
    }

    #[test]
    fn exact_norms_match_fine_grid(f in step(8, 0.0, 1.0), g in step(8, 0.0, 1.0)) {
        prop_assert!(close(l1_distance(&f, &g).unwrap(), grid_lp(&f, &g, 1, 100_000), 1e-3));
        prop_assert!(close(l2_distance(&f, &g).unwrap(), grid_lp(&f, &g, 2, 100_000), 1e-3));
    }

    #[test]
    fn mean_reduce_is_idempotent(f in step(8, -5.0, 5.0)) {
        let once = f.mean_reduce().unwrap();
        prop_assert!(once.mean().unwrap().abs() < 1e-12);
        let twice = once.mean_reduce().unwrap();
        prop_assert_eq!(once.breakpoints(), twice.breakpoints());
        for (a, b) in once.values().iter().zip(twice.values()) {
            prop_assert!(close(*a, *b, 1e-12));
        }
    }

    #[test]
    fn slide_reads_the_extension(f in step(8, -2.0, 2.0), u in 0.0..1.0f64, x in 0.0..1.0f64) {
        let slid = f.extend_2pi().unwrap().slide(u).unwrap();
        let near_break = f.breakpoints().iter().any(|b| ((x + u) - b).abs() < 1e-9 || ((x + u - 1.0) - b).abs() < 1e-9);
        prop_assume!(!near_break);
        let expected = if x + u < 1.0 { f.evaluate(x + u).unwrap() } else { f.evaluate(x + u - 1.0).unwrap() + TAU };
        prop_assert!(close(slid.evaluate(x).unwrap(), expected, 1e-12));
    }

    #[test]
    fn json_round_trip(f in step(8, -5.0, 5.0)) {
        let text = serde_json::to_string(&f).unwrap();
        let back: turnhash::StepFunction = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn shift_keeps_distances(f in step(6, -1.0, 1.0), g in step(6, -1.0, 1.0), a in -4.0..4.0f64) {
        prop_assert!(close(l1_distance(&f.shifted(a), &g.shifted(a)).unwrap(), l1_distance(&f, &g).unwrap(), 1e-12));
        prop_assert!(close(f.shifted(a).mean().unwrap(), f.mean().unwrap() + a, 1e-12));
    }
}
