//! Polygons, their turning functions, and the m-gon range bounds.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stepfn::StepFunction;

pub type Point = [f64; 2];

/// Relative tolerance for degenerate geometry (zero edges, collinear turns).
const GEOM_TOL: f64 = 1e-12;
/// Perimeter fractions closer than this to a vertex count as that vertex.
const VERTEX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolygonError {
    #[error("polygon has {0} vertices, at least 3 are required")]
    TooFewVertices(usize),
    #[error("polygon has a non-finite coordinate")]
    NonFinite,
    #[error("edge {0} has zero length")]
    ZeroLengthEdge(usize),
    #[error("vertices around index {0} are collinear")]
    CollinearTriple(usize),
    #[error("edges {0} and {1} intersect")]
    SelfIntersection(usize, usize),
    #[error("reference {0} is not a perimeter fraction in [0, 1)")]
    BadReference(f64),
    #[error("vertex count {0} is not supported here")]
    BadVertexCount(usize),
    #[error("epsilon {0} is below the 1e-6 floor")]
    EpsilonTooSmall(f64),
    #[error("could not tighten the spiral to within epsilon")]
    SpiralNotTight,
    #[error("no valid perturbation found")]
    PerturbationFailed,
}

/// A simple polygon with counterclockwise vertex order. Only obtainable
/// through validation, so every value of this type is well formed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPolygon", into = "RawPolygon")]
pub struct Polygon {
    id: String,
    vertices: Vec<Point>,
}

#[derive(Serialize, Deserialize)]
struct RawPolygon {
    id: String,
    vertices: Vec<Point>,
}

impl TryFrom<RawPolygon> for Polygon {
    type Error = PolygonError;

    fn try_from(raw: RawPolygon) -> Result<Self, PolygonError> {
        validate(raw.id, raw.vertices)
    }
}

impl From<Polygon> for RawPolygon {
    fn from(p: Polygon) -> Self {
        RawPolygon { id: p.id, vertices: p.vertices }
    }
}

impl Polygon {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Applies a similarity transform: rotate by `angle`, scale, then translate.
    pub fn transformed(&self, angle: f64, scale: f64, offset: Point) -> Self {
        let (s, c) = angle.sin_cos();
        let vertices = self
            .vertices
            .iter()
            .map(|&[x, y]| [scale * (c * x - s * y) + offset[0], scale * (s * x + c * y) + offset[1]])
            .collect();
        Polygon { id: self.id.clone(), vertices }
    }

    /// Perimeter fraction of the midpoint of the first edge.
    pub fn first_edge_midpoint(&self) -> f64 {
        let lengths = edge_lengths(&self.vertices);
        0.5 * lengths[0] / lengths.iter().sum::<f64>()
    }
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

fn edge_lengths(v: &[Point]) -> Vec<f64> {
    (0..v.len()).map(|i| norm(sub(v[(i + 1) % v.len()], v[i]))).collect()
}

fn signed_area(v: &[Point]) -> f64 {
    0.5 * (0..v.len()).map(|i| cross(v[i], v[(i + 1) % v.len()])).sum::<f64>()
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    cross(sub(b, a), sub(c, a))
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// Closed-segment intersection test, touching included.
fn segments_meet(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Checks the polygon conditions and returns it in counterclockwise order.
/// A clockwise input is reversed around vertex 0, which stays first.
pub fn validate(id: impl Into<String>, mut vertices: Vec<Point>) -> Result<Polygon, PolygonError> {
    let m = vertices.len();
    if m < 3 {
        return Err(PolygonError::TooFewVertices(m));
    }
    if vertices.iter().flatten().any(|c| !c.is_finite()) {
        return Err(PolygonError::NonFinite);
    }
    let lengths = edge_lengths(&vertices);
    let scale = lengths.iter().sum::<f64>();
    for (i, &len) in lengths.iter().enumerate() {
        if len <= GEOM_TOL * scale {
            return Err(PolygonError::ZeroLengthEdge(i));
        }
    }
    for i in 0..m {
        let e1 = sub(vertices[i], vertices[(i + m - 1) % m]);
        let e2 = sub(vertices[(i + 1) % m], vertices[i]);
        if cross(e1, e2).abs() <= GEOM_TOL * norm(e1) * norm(e2) {
            return Err(PolygonError::CollinearTriple(i));
        }
    }
    for i in 0..m {
        for j in i + 2..m {
            if i == 0 && j == m - 1 {
                continue;
            }
            if segments_meet(vertices[i], vertices[(i + 1) % m], vertices[j], vertices[(j + 1) % m]) {
                return Err(PolygonError::SelfIntersection(i, j));
            }
        }
    }
    if signed_area(&vertices) < 0.0 {
        vertices[1..].reverse();
    }
    Ok(Polygon { id: id.into(), vertices })
}

/// Turning function of a perimeter-normalized polygon, measured from the
/// boundary point at perimeter fraction `reference` (counted from vertex 0).
pub fn turning_function(p: &Polygon, reference: f64) -> Result<StepFunction, PolygonError> {
    if !(0.0..1.0).contains(&reference) {
        return Err(PolygonError::BadReference(reference));
    }
    let v = &p.vertices;
    let m = v.len();
    let lengths = edge_lengths(v);
    let total: f64 = lengths.iter().sum();
    let widths: Vec<f64> = lengths.iter().map(|l| l / total).collect();
    let mut starts = Vec::with_capacity(m + 1);
    let mut acc = 0.0;
    for w in &widths {
        starts.push(acc);
        acc += w;
    }
    starts.push(1.0);

    let edge = |i: usize| sub(v[(i + 1) % m], v[i % m]);
    let turn_at = |i: usize| {
        let (e1, e2) = (edge(i + m - 1), edge(i));
        cross(e1, e2).atan2(dot(e1, e2))
    };

    let mut j = starts[1..].partition_point(|&s| s <= reference).min(m - 1);
    let mut at_vertex = (reference - starts[j]).abs() <= VERTEX_TOL;
    if !at_vertex && (starts[j + 1] - reference).abs() <= VERTEX_TOL {
        j = (j + 1) % m;
        at_vertex = true;
    }

    let e = edge(j);
    let t0 = e[1].atan2(e[0]).rem_euclid(TAU);
    let mut bps = vec![0.0];
    let mut vals = vec![t0];
    let mut x = if at_vertex { widths[j] } else { starts[j + 1] - reference };
    let mut t = t0;
    for step in 1..m {
        let i = (j + step) % m;
        bps.push(x);
        t += turn_at(i);
        vals.push(t);
        x += widths[i];
    }
    if !at_vertex {
        bps.push(x);
        vals.push(t0 + TAU);
    }
    bps.push(1.0);
    Ok(StepFunction::canonical(bps, vals))
}

/// `f - min f`.
pub fn normalize_min_zero(f: &StepFunction) -> StepFunction {
    f.shifted(-f.minimum())
}

/// Range bounds for turning functions of polygons with at most `m` vertices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GonBounds {
    pub m: usize,
    pub a_m: f64,
    pub b_m: f64,
    pub lambda_m: f64,
    pub span_bound: f64,
}

pub fn gon_bounds(m: usize) -> Result<GonBounds, PolygonError> {
    if m < 3 {
        return Err(PolygonError::BadVertexCount(m));
    }
    let half = (m / 2) as f64;
    let a_m = -(half - 1.0) * PI;
    let b_m = (half + 3.0) * PI;
    Ok(GonBounds { m, a_m, b_m, lambda_m: b_m - a_m, span_bound: (b_m - a_m) / 2.0 })
}

/// Largest vertex count the spiral construction supports; vertex heights grow
/// geometrically with the number of folds.
pub const SPIRAL_MAX_VERTICES: usize = 19;

/// Heights of the two interleaved strands of a flattened double roll. Strand
/// `a` and strand `b` run side by side and fold at alternating ends.
fn strand_levels(i: usize) -> (f64, f64) {
    if i == 0 {
        return (0.5, -0.5);
    }
    let j = i.div_ceil(2) as f64;
    let s = if i % 2 == 1 { -1.0 } else { 1.0 };
    (s * (2.0 * j + 0.5), s * (2.0 * j - 0.5))
}

fn fold_side(i: usize) -> f64 {
    if i.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

struct Roll {
    x: Vec<f64>,
    y: Vec<f64>,
    edges: Vec<(usize, usize, f64)>,
}

impl Roll {
    fn height(&self, (p, q): (usize, usize), x: f64) -> f64 {
        let s = (x - self.x[p]) / (self.x[q] - self.x[p]);
        (1.0 - s) * self.y[p] + s * self.y[q]
    }

    /// Adds vertex `v` at abscissa `x`, joined to earlier vertices by edges at
    /// the given strand levels, and picks the height that keeps every new edge
    /// at least one unit clear of the existing edges, ordered by level.
    fn place(&mut self, x: f64, attach: &[(usize, f64)]) -> usize {
        let v = self.x.len();
        self.x.push(x);
        self.y.push(0.0);
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for &(u, level) in attach {
            for &(p, q, other) in &self.edges {
                let (a0, a1) = (self.x[u].min(x), self.x[u].max(x));
                let (b0, b1) = (self.x[p].min(self.x[q]), self.x[p].max(self.x[q]));
                let (o0, o1) = (a0.max(b0), a1.min(b1));
                if o1 <= o0 {
                    continue;
                }
                for xx in [o0, o1] {
                    let t = (xx - self.x[u]) / (x - self.x[u]);
                    if t < 1e-12 {
                        continue;
                    }
                    let yo = self.height((p, q), xx);
                    if level > other {
                        lo = lo.max((yo + 1.0 - (1.0 - t) * self.y[u]) / t);
                    } else {
                        hi = hi.min((yo - 1.0 - (1.0 - t) * self.y[u]) / t);
                    }
                }
            }
        }
        self.y[v] = if lo.is_finite() {
            lo
        } else if hi.is_finite() {
            hi
        } else {
            self.y[attach[0].0]
        };
        for &(u, level) in attach {
            self.edges.push((u, v, level));
        }
        v
    }
}

/// Flattened double-strand roll with `2k` vertices, before tightening. The
/// returned order starts at the reference vertex and its successor is the apex
/// where the two strands meet.
fn roll_vertices(k: usize) -> Vec<Point> {
    let mut roll = Roll { x: vec![-1.0], y: vec![0.0], edges: Vec::new() };
    let inner = 0;
    let (mut prev_a, mut prev_b) = (inner, inner);
    let (mut a_ids, mut b_ids) = (Vec::new(), Vec::new());
    for i in 0..k - 1 {
        let (la, lb) = strand_levels(i);
        let s = fold_side(i);
        prev_b = roll.place(s * (1.0 + 2.0 * i as f64), &[(prev_b, lb)]);
        b_ids.push(prev_b);
        prev_a = roll.place(s * (2.0 + 2.0 * i as f64), &[(prev_a, la)]);
        a_ids.push(prev_a);
    }
    let (la, lb) = strand_levels(k - 1);
    let apex = roll.place(fold_side(k - 1) * (1.0 + 2.0 * k as f64), &[(prev_b, lb), (prev_a, la)]);
    let mut order = vec![*b_ids.last().unwrap(), apex];
    order.extend(a_ids.iter().rev());
    order.push(inner);
    order.extend(&b_ids[..b_ids.len() - 1]);
    order.iter().map(|&i| [roll.x[i], roll.y[i]]).collect()
}

/// Builds an `m`-gon whose turning function, measured from vertex 0, comes
/// within `epsilon` of the upper range bound and of the span bound. With
/// `mirrored` the reflected polygon is returned instead, measured so that it
/// comes within `epsilon` of the lower range bound.
///
/// The shape is a double strand rolled up tightly: vertices alternate
/// between the two ends, so every turn is close to a half turn.
pub fn make_spiral_polygon(m: usize, epsilon: f64, mirrored: bool) -> Result<Polygon, PolygonError> {
    if !(4..=SPIRAL_MAX_VERTICES).contains(&m) {
        return Err(PolygonError::BadVertexCount(m));
    }
    if !(epsilon >= 1e-6) {
        return Err(PolygonError::EpsilonTooSmall(epsilon));
    }
    let k = m / 2;
    let bounds = gon_bounds(m)?;
    let mut base = roll_vertices(k);
    if m % 2 == 1 {
        // A bump on the outermost strand edge adds the odd vertex.
        let (a, b) = (base[1], base[2]);
        let outward = strand_levels(k - 1).0.signum();
        base.insert(2, [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]) + 0.5 * outward]);
    }
    if mirrored {
        let n = base.len();
        let mut order = vec![base[1], base[0]];
        order.extend((2..n).rev().map(|i| base[i]));
        base = order.into_iter().map(|[x, y]| [-x, y]).collect();
    }
    let target = if mirrored { epsilon / 2.0 } else { TAU - epsilon / 2.0 };
    let mut tau = 0.1;
    while tau > 1e-14 {
        let squashed: Vec<Point> = base.iter().map(|&[x, y]| [x, tau * y]).collect();
        let first = sub(squashed[1], squashed[0]);
        let rot = target - first[1].atan2(first[0]);
        let candidate = Polygon { id: String::new(), vertices: squashed }.transformed(rot, 1.0, [0.0, 0.0]);
        let mut vertices = candidate.vertices;
        let scale = vertices.iter().flatten().fold(0.0f64, |acc, c| acc.max(c.abs()));
        vertices.iter_mut().flatten().for_each(|c| *c /= scale);
        if let Ok(poly) = validate("spiral", vertices) {
            let t = turning_function(&poly, 0.0)?;
            let tight = if mirrored {
                t.minimum() <= bounds.a_m + epsilon
            } else {
                t.maximum() >= bounds.b_m - epsilon && t.span() >= bounds.span_bound - epsilon
            };
            if tight {
                return Ok(poly);
            }
        }
        tau /= 2.0;
    }
    Err(PolygonError::SpiralNotTight)
}
