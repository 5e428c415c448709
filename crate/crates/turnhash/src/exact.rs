//! Exact aligned distances between step functions and between polygons.

use serde::{Deserialize, Serialize};

use crate::stepfn::{l2_distance, StepError, StepFunction};
use crate::turning::{turning_function, Polygon};

/// Which `L_p` norm a distance is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
}

impl Norm {
    pub fn from_p(p: u8) -> Option<Norm> {
        match p {
            1 => Some(Norm::L1),
            2 => Some(Norm::L2),
            _ => None,
        }
    }

    pub fn p(self) -> u8 {
        match self {
            Norm::L1 => 1,
            Norm::L2 => 2,
        }
    }
}

/// A distance together with the alignment that realizes it: `f + alpha`
/// slid by `u` is compared against `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignedDistance {
    pub distance: f64,
    pub alpha: f64,
    pub u: f64,
}

/// `min_α L1(f + α, g)`. The optimal shift is a weighted median of the
/// values of `g - f`; when the median is an interval its lower end is used.
pub fn d1_updown(f: &StepFunction, g: &StepFunction) -> Result<AlignedDistance, StepError> {
    let h = g.combine(f, |a, b| a - b)?;
    let mut weighted: Vec<(f64, f64)> = h.pieces().map(|(lo, hi, v)| (v, hi - lo)).collect();
    weighted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let half = 0.5 * h.domain_end();
    let mut acc = 0.0;
    let mut alpha = weighted[weighted.len() - 1].0;
    for &(v, w) in &weighted {
        acc += w;
        if acc >= half - 1e-12 {
            alpha = v;
            break;
        }
    }
    let distance = weighted.iter().map(|&(v, w)| w * (v - alpha).abs()).sum();
    Ok(AlignedDistance { distance, alpha, u: 0.0 })
}

/// `min_α L2(f + α, g)`, attained at the difference of the means.
pub fn d2_updown(f: &StepFunction, g: &StepFunction) -> Result<AlignedDistance, StepError> {
    let distance = l2_distance(&f.mean_reduce()?, &g.mean_reduce()?)?;
    Ok(AlignedDistance { distance, alpha: g.mean()? - f.mean()?, u: 0.0 })
}

pub fn d_updown(f: &StepFunction, g: &StepFunction, norm: Norm) -> Result<AlignedDistance, StepError> {
    match norm {
        Norm::L1 => d1_updown(f, g),
        Norm::L2 => d2_updown(f, g),
    }
}

/// Candidate slides that put a jump of the extension of `f` on a jump of `g`.
pub fn slide_candidates(f2: &StepFunction, g: &StepFunction) -> Vec<f64> {
    let df: Vec<f64> = std::iter::once(0.0).chain(f2.discontinuities().iter().copied()).collect();
    let dg: Vec<f64> = std::iter::once(0.0).chain(g.discontinuities().iter().copied()).collect();
    let mut us = vec![0.0];
    for a in &df {
        for b in &dg {
            us.push((a - b).rem_euclid(1.0));
        }
    }
    us.sort_by(f64::total_cmp);
    us.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    us
}

/// `min_{u, α} L_p(slide_u(f^{2π}) + α, g)`, searched over the slides that
/// align a discontinuity of each function.
pub fn d_slide(f: &StepFunction, g: &StepFunction, norm: Norm) -> Result<AlignedDistance, StepError> {
    let f2 = f.extend_2pi()?;
    let mut best: Option<AlignedDistance> = None;
    for u in slide_candidates(&f2, g) {
        let mut d = d_updown(&f2.slide(u)?, g, norm)?;
        d.u = u;
        if best.is_none_or(|b| d.distance < b.distance) {
            best = Some(d);
        }
    }
    Ok(best.expect("the zero slide is always a candidate"))
}

/// Turning-function distance `D_p` between two polygons, invariant under
/// translation, rotation, scaling and choice of reference point.
pub fn polygon_distance(p: &Polygon, q: &Polygon, norm: Norm) -> AlignedDistance {
    let tp = turning_function(p, p.first_edge_midpoint()).expect("midpoint reference is in range");
    let tq = turning_function(q, q.first_edge_midpoint()).expect("midpoint reference is in range");
    d_slide(&tp, &tq, norm).expect("turning functions share the unit domain")
}
