//! Acceptance criteria 1 to 9. Runs as a plain binary so that every
//! criterion prints its own PASS/FAIL line; exits non-zero if any fails.

use std::f64::consts::TAU;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use turnhash::exact::{d1_updown, d2_updown, d_slide, d_updown, polygon_distance};
use turnhash::families::riemann_n;
use turnhash::generate::{random_polygon, random_step, spiral_polygon};
use turnhash::polyindex::{PolygonIndex, PolygonIndexConfig, Variant};
use turnhash::stepfn::{l1_distance, l2_distance};
use turnhash::turning::{gon_bounds, turning_function};
use turnhash::{Norm, Polygon, StepFunction};
use turnhash_cli::bench::{self, BenchConfig};
use turnhash_cli::eval::{eval_collision, FamilyKind};

/// Allowed gap between an empirical collision rate and its law.
const LAW_TOL: f64 = 0.01;
/// Slack for floating-point rounding in exact inequalities.
const FLOAT_SLACK: f64 = 1e-12;
/// Witness pair identities.
const WITNESS_TOL: f64 = 1e-9;
const ALPHA_GRID_TOL: f64 = 1e-3;
const ALPHA_GRID_STEP: f64 = 1e-4;
const SLIDE_GRID_TOL: f64 = 2e-3;
const SLIDE_GRID_POINTS: usize = 100_000;
const BOUND_TOL: f64 = 1e-9;
const SPIRAL_EPS: f64 = 0.1;
const COLLISION_TRIALS: u64 = 100_000;
const H1_TIME_LIMIT: Duration = Duration::from_secs(30);
const RETRIEVAL_TIME_LIMIT: Duration = Duration::from_secs(600);
const RETRIEVAL_DECOYS: usize = 10_000;
const RETRIEVAL_TRIALS: usize = 100;
const RETRIEVAL_REQUIRED: usize = 85;
/// Radii for the retrieval runs, on the scale of hexagon distances: the
/// median `D1` between random hexagons is about 0.47 and the median `D2`
/// about 0.68.
const RETRIEVAL_R_L1: f64 = 0.2;
const RETRIEVAL_R_L2: f64 = 0.3;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn random_pairs(rng: &mut ChaCha8Rng, count: usize, max_pieces: usize) -> Vec<(StepFunction, StepFunction)> {
    (0..count)
        .map(|_| {
            let (k1, k2) = (rng.random_range(1..=max_pieces), rng.random_range(1..=max_pieces));
            (random_step(rng, k1, 0.0, 1.0), random_step(rng, k2, 0.0, 1.0))
        })
        .collect()
}

fn criterion_1() -> Verdict {
    let started = Instant::now();
    let pairs = random_pairs(&mut ChaCha8Rng::seed_from_u64(101), 20, 8);
    let rows = eval_collision(FamilyKind::H1, 0.0, 1.0, &pairs, COLLISION_TRIALS, 1).unwrap();
    let worst = rows.iter().map(|r| r.abs_delta).fold(0.0, f64::max);
    let elapsed = started.elapsed();
    verdict(
        worst <= LAW_TOL && elapsed < H1_TIME_LIMIT,
        format!("H1 law on 20 pairs x 1e5 draws: max |emp - (1 - L1)| = {worst:.5} (tol {LAW_TOL}), {elapsed:.1?}"),
    )
}

fn criterion_2() -> Verdict {
    let pairs: Vec<_> = random_pairs(&mut ChaCha8Rng::seed_from_u64(202), 20, 8)
        .into_iter()
        .filter(|(f, g)| l2_distance(f, g).unwrap() <= 0.7)
        .collect();
    let rows = eval_collision(FamilyKind::H2, 0.0, 1.0, &pairs, COLLISION_TRIALS, 2).unwrap();
    let worst = rows.iter().map(|r| r.abs_delta).fold(0.0, f64::max);
    let halved = rows.iter().map(|r| (r.empirical - (0.5 - 0.5 * r.distance * r.distance)).abs()).fold(0.0, f64::max);
    verdict(
        worst <= LAW_TOL,
        format!(
            "H2 law on {} pairs x 1e5 draws: max |emp - (0.5 - L2^2)| = {worst:.5} (tol {LAW_TOL}); \
             against 0.5 - L2^2/2 the max gap is {halved:.5}",
            rows.len()
        ),
    )
}

fn criterion_3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut violations = 0;
    for (f, g) in random_pairs(&mut rng, 10_000, 8) {
        let r = d1_updown(&f, &g).unwrap().distance;
        let reduced = l1_distance(&f.mean_reduce().unwrap(), &g.mean_reduce().unwrap()).unwrap();
        if !(r <= reduced + FLOAT_SLACK && reduced <= (2.0 - r) * r + FLOAT_SLACK) {
            violations += 1;
        }
    }
    let f0 = StepFunction::make(&[0.0, 0.9, 1.0], &[1.0, 3.0]).unwrap();
    let g0 = StepFunction::make(&[0.0, 0.9, 1.0], &[3.0, 1.0]).unwrap();
    let witness_reduced = l1_distance(&f0.mean_reduce().unwrap(), &g0.mean_reduce().unwrap()).unwrap();
    let witness_r = d1_updown(&f0, &g0).unwrap().distance;
    let witness_ok = (witness_reduced - 0.72).abs() <= WITNESS_TOL && (witness_r - 0.4).abs() <= WITNESS_TOL;
    verdict(
        violations == 0 && witness_ok,
        format!(
            "sandwich violated in {violations} of 10^4 pairs; witness L1(f^, g^) = {witness_reduced:.12}, D1 = {witness_r:.12}"
        ),
    )
}

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let steps = (2.0 / ALPHA_GRID_STEP).round() as i64;
    let mut worst: f64 = 0.0;
    for (f, g) in random_pairs(&mut rng, 1000, 8) {
        let grid = (0..=steps)
            .map(|i| l2_distance(&f.shifted(-1.0 + i as f64 * ALPHA_GRID_STEP), &g).unwrap())
            .fold(f64::INFINITY, f64::min);
        worst = worst.max((d2_updown(&f, &g).unwrap().distance - grid).abs());
    }
    verdict(
        worst <= ALPHA_GRID_TOL,
        format!("max |D2 - grid min over alpha (step {ALPHA_GRID_STEP})| over 10^3 pairs = {worst:.2e} (tol {ALPHA_GRID_TOL})"),
    )
}

fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst: f64 = 0.0;
    let (mut below, mut moved) = (0, 0);
    for i in 0..200 {
        // Values spread over a full turn, and sorted for every other pair as
        // in the turning function of a convex polygon, so that the best slide
        // is rarely zero.
        let draw = |rng: &mut ChaCha8Rng| {
            let k = rng.random_range(1..=8);
            let f = random_step(rng, k, 0.0, TAU);
            if i % 2 == 0 {
                let mut v = f.values().to_vec();
                v.sort_by(f64::total_cmp);
                StepFunction::make(f.breakpoints(), &v).unwrap()
            } else {
                f
            }
        };
        let (f, g) = (draw(&mut rng), draw(&mut rng));
        let f2 = f.extend_2pi().unwrap();
        for norm in [Norm::L1, Norm::L2] {
            let best = d_slide(&f, &g, norm).unwrap();
            moved += usize::from(best.u > 0.0);
            let exact = best.distance;
            let grid = (0..SLIDE_GRID_POINTS)
                .map(|i| {
                    let u = i as f64 / SLIDE_GRID_POINTS as f64;
                    d_updown(&f2.slide(u).unwrap(), &g, norm).unwrap().distance
                })
                .fold(f64::INFINITY, f64::min);
            if grid < exact - FLOAT_SLACK {
                below += 1;
            }
            worst = worst.max((exact - grid).abs());
        }
    }
    verdict(
        worst <= SLIDE_GRID_TOL && below == 0,
        format!(
            "max |d_slide - grid| over 200 pairs, both norms, {SLIDE_GRID_POINTS}-point u grid = {worst:.2e} \
             (tol {SLIDE_GRID_TOL}); optimal slide nonzero in {moved} of 400; grid below exact in {below} cases"
        ),
    )
}

fn criterion_6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut violations = 0;
    let mut tightest: f64 = 0.0;
    for _ in 0..1000 {
        let k = rng.random_range(1..=8);
        let (f, g) = (random_step(&mut rng, k, 0.0, 1.0), random_step(&mut rng, k, 0.0, 1.0));
        let r = rng.random_range(0.05..0.5);
        let c = rng.random_range(1.2..4.0);
        let n = riemann_n(r, c, k, 0.0, 1.0);
        let (vf, vg) = (f.sample_vec(n).unwrap(), g.sample_vec(n).unwrap());
        let sampled: f64 = vf.iter().zip(&vg).map(|(a, b)| (a - b).powi(2)).sum();
        let gap = (sampled - l2_distance(&f, &g).unwrap().powi(2)).abs();
        let bound = (c.sqrt() - 1.0) * r * r;
        tightest = tightest.max(gap / bound);
        if gap > bound {
            violations += 1;
        }
    }
    verdict(violations == 0, format!("bound violated in {violations} of 10^3 trials; largest gap/bound = {tightest:.3}"))
}

fn criterion_7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut violations = 0;
    for i in 0..10_000 {
        let m = 3 + i % 10;
        let p = random_polygon(&mut rng, m, "p").unwrap();
        let b = gon_bounds(m).unwrap();
        for reference in [0.0, p.first_edge_midpoint(), rng.random_range(0.0..1.0)] {
            let t = turning_function(&p, reference).unwrap();
            if t.minimum() < b.a_m - BOUND_TOL || t.maximum() > b.b_m + BOUND_TOL || t.span() > b.span_bound + BOUND_TOL {
                violations += 1;
            }
        }
    }
    let mut spiral_notes = Vec::new();
    let mut spirals_ok = true;
    for m in [4, 6, 8] {
        let b = gon_bounds(m).unwrap();
        let t = turning_function(&spiral_polygon(m, SPIRAL_EPS, false, "s").unwrap(), 0.0).unwrap();
        spirals_ok &= t.maximum() >= b.b_m - SPIRAL_EPS && t.span() >= b.span_bound - SPIRAL_EPS;
        spiral_notes.push(format!("m={m}: max gap {:.3}, span gap {:.3}", b.b_m - t.maximum(), b.span_bound - t.span()));
    }
    verdict(
        violations == 0 && spirals_ok,
        format!("bounds violated {violations} times over 10^4 polygons x 3 references; spirals {}", spiral_notes.join(", ")),
    )
}

fn criterion_8(p: Norm, variant: Variant, r: f64, c: f64) -> Verdict {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut stored: Vec<Polygon> =
        (0..RETRIEVAL_DECOYS).map(|i| random_polygon(&mut rng, 6, format!("decoy-{i}")).unwrap()).collect();
    let mut queries = Vec::with_capacity(RETRIEVAL_TRIALS);
    for t in 0..RETRIEVAL_TRIALS {
        let q = random_polygon(&mut rng, 6, format!("query-{t}")).unwrap();
        let plant = bench::planted_neighbor(&mut rng, &q, r, p, &format!("plant-{t}"));
        assert!(polygon_distance(&plant, &q, p).distance <= r);
        stored.push(plant);
        queries.push(q);
    }
    let decoy_queries: Vec<Polygon> =
        (0..RETRIEVAL_TRIALS).map(|t| random_polygon(&mut rng, 6, format!("fresh-{t}")).unwrap()).collect();
    let config = PolygonIndexConfig { m: 6, p, r, c, variant, delta: 0.1, seed: 8 };
    let index = match PolygonIndex::build(stored, config) {
        Ok(ix) => ix,
        Err(e) => return verdict(false, format!("{p:?} {variant:?} r={r} c={c}: build failed: {e}")),
    };
    let build_time = started.elapsed();
    let limit = c * r;
    let (mut found, mut planted_found, mut unsound) = (0, 0, 0);
    for (t, q) in queries.iter().enumerate() {
        if let Some(hit) = index.query(q).unwrap().hit {
            found += 1;
            planted_found += usize::from(hit.id == format!("plant-{t}"));
            unsound += usize::from(polygon_distance(&index.polygons()[hit.index], q, p).distance > limit);
        }
    }
    let mut decoy_hits = 0;
    for q in &decoy_queries {
        if let Some(hit) = index.query(q).unwrap().hit {
            decoy_hits += 1;
            unsound += usize::from(polygon_distance(&index.polygons()[hit.index], q, p).distance > limit);
        }
    }
    let elapsed = started.elapsed();
    let params = index.inner_params();
    verdict(
        found >= RETRIEVAL_REQUIRED && unsound == 0 && elapsed < RETRIEVAL_TIME_LIMIT,
        format!(
            "{p:?} {variant:?} r={r} c={c}: found a <= cr neighbor in {found}/{RETRIEVAL_TRIALS} trials \
             (the plant itself in {planted_found}), {decoy_hits}/{RETRIEVAL_TRIALS} decoy-only queries answered, \
             {unsound} answers beyond cr; k={} L={}; build {build_time:.1?}, total {elapsed:.1?}",
            params.concat_k, params.tables_l
        ),
    )
}

fn criterion_9() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let polygons: Vec<Polygon> = (0..10_000).map(|i| random_polygon(&mut rng, 6, format!("h{i}")).unwrap()).collect();
    let cfg = BenchConfig {
        m: 6,
        p: Norm::L2,
        variant: Variant::MeanReduce,
        delta: 0.1,
        seed: 9,
        sweep: vec![(RETRIEVAL_R_L2, 4.0)],
        sizes: vec![1000, 10_000],
        repetitions: 100,
    };
    let rows = bench::run(&polygons, &cfg).unwrap();
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR"));
    let path = dir.join("acceptance_bench.csv");
    bench::write_csv(std::fs::File::create(&path).unwrap(), &rows).unwrap();
    print!("{}", std::fs::read_to_string(&path).unwrap());
    let ratio = rows[1].mean_scanned / rows[0].mean_scanned;
    verdict(
        ratio < 10.0,
        format!(
            "mean candidates scanned per query: {:.2} at n=10^3, {:.2} at n=10^4, ratio {ratio:.2} (< 10); CSV at {}",
            rows[0].mean_scanned,
            rows[1].mean_scanned,
            path.display()
        ),
    )
}

type Criterion = Box<dyn Fn() -> Verdict>;

fn main() {
    let criteria: Vec<(&str, Criterion)> = vec![
        ("1", Box::new(criterion_1)),
        ("2", Box::new(criterion_2)),
        ("3", Box::new(criterion_3)),
        ("4", Box::new(criterion_4)),
        ("5", Box::new(criterion_5)),
        ("6", Box::new(criterion_6)),
        ("7", Box::new(criterion_7)),
        ("8a", Box::new(|| criterion_8(Norm::L1, Variant::MeanReduce, RETRIEVAL_R_L1, 2.5))),
        ("8b", Box::new(|| criterion_8(Norm::L1, Variant::StepShift, RETRIEVAL_R_L1, 1.5))),
        ("8c", Box::new(|| criterion_8(Norm::L2, Variant::MeanReduce, RETRIEVAL_R_L2, 4.0))),
        ("9", Box::new(criterion_9)),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    for (name, run) in &criteria {
        if !only.is_empty() && !only.iter().any(|o| o == name) {
            continue;
        }
        let v = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| verdict(false, "panicked"));
        println!("[{}] criterion {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        if !v.pass {
            failed.push(*name);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {}", failed.join(", "));
        std::process::exit(1);
    }
}
