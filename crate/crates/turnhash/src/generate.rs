//! Random and structured test inputs: step functions and polygons.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::stepfn::StepFunction;
use crate::turning::{make_spiral_polygon, validate, Polygon, PolygonError};

/// A step function with `pieces` pieces, uniform breakpoints and values
/// uniform in `[a, b]`. Pieces that happen to merge make the result shorter.
pub fn random_step<R: Rng + ?Sized>(rng: &mut R, pieces: usize, a: f64, b: f64) -> StepFunction {
    let mut cuts: Vec<f64> = (1..pieces).map(|_| rng.random::<f64>()).collect();
    cuts.sort_by(f64::total_cmp);
    let mut bps = vec![0.0];
    bps.extend(cuts);
    bps.push(1.0);
    let values: Vec<f64> = (0..pieces).map(|_| rng.random_range(a..=b)).collect();
    StepFunction::canonical(bps, values)
}

/// Regular `m`-gon inscribed in the unit circle, first edge horizontal.
pub fn regular_polygon(m: usize, id: impl Into<String>) -> Result<Polygon, PolygonError> {
    let start = -std::f64::consts::PI / 2.0 - std::f64::consts::PI / m as f64;
    let vertices = (0..m)
        .map(|i| {
            let t = start + TAU * i as f64 / m as f64;
            [t.cos(), t.sin()]
        })
        .collect();
    validate(id, vertices)
}

/// A random star-shaped `m`-gon: sorted random angles around the origin with
/// random radii in `[0.2, 1]`. Rejected draws are resampled.
pub fn random_polygon<R: Rng + ?Sized>(rng: &mut R, m: usize, id: impl Into<String>) -> Result<Polygon, PolygonError> {
    if m < 3 {
        return Err(PolygonError::TooFewVertices(m));
    }
    let id = id.into();
    loop {
        let mut angles: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..TAU)).collect();
        angles.sort_by(f64::total_cmp);
        let vertices = angles
            .iter()
            .map(|&t| {
                let r = rng.random_range(0.2..=1.0);
                [r * t.cos(), r * t.sin()]
            })
            .collect();
        if let Ok(p) = validate(id.clone(), vertices) {
            return Ok(p);
        }
    }
}

/// Jitters every vertex by independent Gaussian noise of scale `sigma`
/// relative to the polygon's diameter, resampling until the result is valid.
pub fn perturbed_polygon<R: Rng + ?Sized>(
    rng: &mut R,
    base: &Polygon,
    sigma: f64,
    id: impl Into<String>,
) -> Result<Polygon, PolygonError> {
    let id = id.into();
    let v = base.vertices();
    let diameter = v
        .iter()
        .flat_map(|p| v.iter().map(move |q| (p[0] - q[0]).hypot(p[1] - q[1])))
        .fold(0.0, f64::max);
    let noise = Normal::new(0.0, sigma * diameter).map_err(|_| PolygonError::NonFinite)?;
    for _ in 0..10_000 {
        let moved = v.iter().map(|p| [p[0] + noise.sample(rng), p[1] + noise.sample(rng)]).collect();
        if let Ok(p) = validate(id.clone(), moved) {
            return Ok(p);
        }
    }
    Err(PolygonError::PerturbationFailed)
}

/// The tightly rolled extremal polygon; see [`make_spiral_polygon`].
pub fn spiral_polygon(m: usize, epsilon: f64, mirrored: bool, id: impl Into<String>) -> Result<Polygon, PolygonError> {
    Ok(make_spiral_polygon(m, epsilon, mirrored)?.with_id(id))
}
