//! Recall and scan-cost measurements over a sweep of `(r, c)` and dataset
//! sizes.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use turnhash::exact::polygon_distance;
use turnhash::generate::perturbed_polygon;
use turnhash::polyindex::{PolygonIndex, PolygonIndexConfig, Variant};
use turnhash::turning::validate;
use turnhash::{Norm, Polygon};

use crate::{sig9, CliError};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub m: usize,
    pub p: Norm,
    pub variant: Variant,
    pub delta: f64,
    pub seed: u64,
    pub sweep: Vec<(f64, f64)>,
    /// Prefix lengths of the dataset to index; empty means the whole dataset.
    pub sizes: Vec<usize>,
    /// Planted queries per configuration.
    pub repetitions: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub r: f64,
    pub c: f64,
    pub concat_k: usize,
    pub tables_l: usize,
    pub clones: usize,
    pub queries: usize,
    /// Fraction of planted queries that returned a polygon.
    pub recall: f64,
    /// Returned polygons per retrieved table entry.
    pub filter_precision: f64,
    /// Returned polygons farther than `c·r`; zero unless the filter is broken.
    pub violations: usize,
    pub mean_scanned: f64,
    pub max_scanned: usize,
    pub max_probe_scanned: usize,
    /// `3L`, the per-probe scan budget.
    pub probe_budget: usize,
    pub build_seconds: f64,
    pub query_seconds: f64,
}

pub const HEADER: [&str; 17] = [
    "n",
    "r",
    "c",
    "concat_k",
    "tables_l",
    "clones",
    "queries",
    "recall",
    "filter_precision",
    "violations",
    "mean_scanned",
    "max_scanned",
    "max_probe_scanned",
    "probe_budget",
    "build_seconds",
    "query_seconds",
    "seconds_per_query",
];

/// A copy of `base` within `D_p ≤ r`: jittered, moved by a random similarity
/// and started from a random vertex.
pub fn planted_neighbor<R: Rng>(rng: &mut R, base: &Polygon, r: f64, p: Norm, id: &str) -> Polygon {
    let mut sigma = 0.01;
    let jittered = loop {
        if sigma < 1e-9 {
            break base.clone();
        }
        if let Ok(q) = perturbed_polygon(rng, base, sigma, id) {
            if polygon_distance(&q, base, p).distance <= r {
                break q;
            }
        }
        sigma /= 2.0;
    };
    let mut v = jittered
        .transformed(rng.random_range(0.0..std::f64::consts::TAU), rng.random_range(0.5..2.0), [rng.random(), rng.random()])
        .vertices()
        .to_vec();
    let start = rng.random_range(0..v.len());
    v.rotate_left(start);
    let moved = validate(id, v).expect("a similar copy of a valid polygon is valid");
    if polygon_distance(&moved, base, p).distance <= r {
        moved
    } else {
        base.clone().with_id(id)
    }
}

pub fn run(polygons: &[Polygon], cfg: &BenchConfig) -> Result<Vec<BenchRow>, CliError> {
    let sizes = if cfg.sizes.is_empty() { vec![polygons.len()] } else { cfg.sizes.clone() };
    let mut rows = Vec::new();
    for &n in &sizes {
        if n == 0 || n > polygons.len() {
            return Err(CliError::Validation(format!("size {n} is outside 1..={}", polygons.len())));
        }
        for &(r, c) in &cfg.sweep {
            let config = PolygonIndexConfig { m: cfg.m, p: cfg.p, r, c, variant: cfg.variant, delta: cfg.delta, seed: cfg.seed };
            let started = Instant::now();
            let index = PolygonIndex::build(polygons[..n].to_vec(), config)?;
            let build_seconds = started.elapsed().as_secs_f64();

            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let queries: Vec<Polygon> = (0..cfg.repetitions)
                .map(|j| {
                    let base = &polygons[rng.random_range(0..n)];
                    planted_neighbor(&mut rng, base, r, cfg.p, &format!("query-{j}"))
                })
                .collect();
            let started = Instant::now();
            let outcomes = queries.par_iter().map(|q| index.query(q)).collect::<Result<Vec<_>, _>>()?;
            let query_seconds = started.elapsed().as_secs_f64();

            let hits = outcomes.iter().filter(|o| o.hit.is_some()).count();
            let scanned: usize = outcomes.iter().map(|o| o.scanned).sum();
            let queries_run = outcomes.len().max(1) as f64;
            rows.push(BenchRow {
                n,
                r,
                c,
                concat_k: index.inner_params().concat_k,
                tables_l: index.inner_params().tables_l,
                clones: index.clone_count(),
                queries: outcomes.len(),
                recall: hits as f64 / queries_run,
                filter_precision: if scanned == 0 { 0.0 } else { hits as f64 / scanned as f64 },
                violations: outcomes.iter().filter(|o| o.hit.as_ref().is_some_and(|h| h.distance > c * r)).count(),
                mean_scanned: scanned as f64 / queries_run,
                max_scanned: outcomes.iter().map(|o| o.scanned).max().unwrap_or(0),
                max_probe_scanned: outcomes.iter().map(|o| o.max_probe_scanned).max().unwrap_or(0),
                probe_budget: 3 * index.inner_params().tables_l,
                build_seconds,
                query_seconds,
            });
        }
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(w: W, rows: &[BenchRow]) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(HEADER)?;
    for r in rows {
        out.write_record([
            r.n.to_string(),
            sig9(r.r),
            sig9(r.c),
            r.concat_k.to_string(),
            r.tables_l.to_string(),
            r.clones.to_string(),
            r.queries.to_string(),
            sig9(r.recall),
            sig9(r.filter_precision),
            r.violations.to_string(),
            sig9(r.mean_scanned),
            r.max_scanned.to_string(),
            r.max_probe_scanned.to_string(),
            r.probe_budget.to_string(),
            sig9(r.build_seconds),
            sig9(r.query_seconds),
            sig9(r.query_seconds / r.queries.max(1) as f64),
        ])?;
    }
    out.flush()?;
    Ok(())
}
