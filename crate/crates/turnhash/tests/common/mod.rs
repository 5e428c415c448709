#![allow(dead_code)]

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use turnhash::generate::random_polygon;
use turnhash::{Polygon, StepFunction};

/// Step functions on `[0, 1]` with up to `max_pieces` pieces and values in `[lo, hi]`.
pub fn step(max_pieces: usize, lo: f64, hi: f64) -> impl Strategy<Value = StepFunction> {
    (
        prop::collection::vec(0.001..0.999f64, 0..max_pieces),
        prop::collection::vec(lo..=hi, max_pieces),
    )
        .prop_map(|(mut cuts, values)| {
            cuts.sort_by(f64::total_cmp);
            cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-4);
            let mut bps = vec![0.0];
            bps.extend(cuts);
            bps.push(1.0);
            StepFunction::make(&bps, &values[..bps.len() - 1]).unwrap()
        })
}

pub fn polygon(m: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Polygon> {
    (m, any::<u64>()).prop_map(|(m, seed)| random_polygon(&mut ChaCha8Rng::seed_from_u64(seed), m, "p").unwrap())
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
