//! Empirical collision rates of the step-function hash families against
//! their closed-form laws.

use std::io::Write;

use rayon::prelude::*;
use turnhash::families::{h1_collision_prob, h2_collision_prob, AsymmetricTwoPoint, HashFamily, MeanReduceFamily, RandomPoint};
use turnhash::stepfn::{l1_distance, l2_distance};
use turnhash::StepFunction;

use crate::{sig9, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    /// Random point, `1 - L1/(b-a)`.
    H1,
    /// Asymmetric two point, `0.5 - L2²/(b-a)²`.
    H2,
    /// Random point on mean-reduced functions, `1 - L1(f̂, ĝ)/(2(b-a))`.
    MeanReduce,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalRow {
    pub pair: usize,
    /// The distance the law is stated in.
    pub distance: f64,
    pub empirical: f64,
    pub theoretical: f64,
    pub abs_delta: f64,
}

fn rate<F: HashFamily<Input = StepFunction>>(family: &F, f: &StepFunction, g: &StepFunction, trials: u64) -> f64 {
    let (a, b) = (family.prepare(f), family.prepare(g));
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let h = family.draw(t, 0);
            u64::from(family.hash_data(&h, &a) == family.hash_query(&h, &b))
        })
        .sum();
    hits as f64 / trials as f64
}

/// One row per pair; pair `i` draws its hash functions from seed `seed + i`.
pub fn eval_collision(
    kind: FamilyKind,
    a: f64,
    b: f64,
    pairs: &[(StepFunction, StepFunction)],
    trials: u64,
    seed: u64,
) -> Result<Vec<EvalRow>, CliError> {
    let bad = |e: &dyn std::fmt::Display| CliError::Precondition(e.to_string());
    let width = b - a;
    pairs
        .iter()
        .enumerate()
        .map(|(i, (f, g))| {
            for h in [f, g] {
                if h.minimum() < a || h.maximum() > b {
                    return Err(CliError::Validation(format!("pair {i} leaves the range [{a}, {b}]")));
                }
            }
            let s = seed.wrapping_add(i as u64);
            let dist = |x: Result<f64, turnhash::StepError>| x.map_err(|e| CliError::Validation(e.to_string()));
            let (distance, empirical, theoretical) = match kind {
                FamilyKind::H1 => {
                    let d = dist(l1_distance(f, g))?;
                    (d, rate(&RandomPoint::new(a, b, s).map_err(|e| bad(&e))?, f, g, trials), h1_collision_prob(d, a, b))
                }
                FamilyKind::H2 => {
                    let d = dist(l2_distance(f, g))?;
                    let family = AsymmetricTwoPoint::new(a, b, s).map_err(|e| bad(&e))?;
                    (d, rate(&family, f, g, trials), h2_collision_prob(d, a, b))
                }
                FamilyKind::MeanReduce => {
                    let reduce = |h: &StepFunction| h.mean_reduce().map_err(|e| CliError::Validation(e.to_string()));
                    let d = dist(l1_distance(&reduce(f)?, &reduce(g)?))?;
                    // Any admissible (r, c) gives the same hash functions.
                    let family = MeanReduceFamily::new(a, b, 0.5 * width, 2.0, s).map_err(|e| bad(&e))?;
                    (d, rate(&family, f, g, trials), 1.0 - d / (2.0 * width))
                }
            };
            Ok(EvalRow { pair: i, distance, empirical, theoretical, abs_delta: (empirical - theoretical).abs() })
        })
        .collect()
}

pub fn write_csv<W: Write>(w: W, rows: &[EvalRow]) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["pair", "distance", "empirical", "theoretical", "abs_delta"])?;
    for r in rows {
        out.write_record([r.pair.to_string(), sig9(r.distance), sig9(r.empirical), sig9(r.theoretical), sig9(r.abs_delta)])?;
    }
    out.flush()?;
    Ok(())
}

/// Parses `const:<v>` or a JSON step function.
pub fn parse_step(spec: &str) -> Result<StepFunction, CliError> {
    if let Some(v) = spec.strip_prefix("const:") {
        let v: f64 = v.trim().parse().map_err(|_| CliError::Validation(format!("bad constant {v:?}")))?;
        return Ok(StepFunction::constant(v));
    }
    serde_json::from_str(spec).map_err(|e| CliError::Validation(format!("bad step function: {e}")))
}
