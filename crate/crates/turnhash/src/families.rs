//! Locality-sensitive hash families over step functions and real vectors.
//!
//! Every family draws its hash functions from a seeded stream indexed by
//! `(table, slot)`, so a family plus a seed fully determines an index.

use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::exact::{d1_updown, d2_updown};
use crate::stepfn::{l1_distance, l2_distance, StepFunction};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FamilyError {
    #[error("range [{a}, {b}] is empty")]
    EmptyRange { a: f64, b: f64 },
    #[error("radius {r} must lie in (0, {limit})")]
    BadRadius { r: f64, limit: f64 },
    #[error("approximation factor {0} must exceed 1")]
    BadFactor(f64),
    #[error("approximation factor {c} must exceed {bound} for the mean-reduce family; use step-shift instead")]
    FactorBelowMeanReduceBound { c: f64, bound: f64 },
    #[error("bucket width {0} must be positive")]
    BadWidth(f64),
}

/// One output symbol of a point hash: the sign of `f(x) - y`, or the reserved
/// placeholder used when the second coordinate of a two-point hash is unused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    Neg,
    Zero,
    Pos,
    Star,
}

impl Symbol {
    pub fn sign(x: f64) -> Symbol {
        if x > 0.0 {
            Symbol::Pos
        } else if x < 0.0 {
            Symbol::Neg
        } else {
            Symbol::Zero
        }
    }

    fn opposite(self) -> Symbol {
        match self {
            Symbol::Neg => Symbol::Pos,
            Symbol::Pos => Symbol::Neg,
            s => s,
        }
    }

    fn code(self) -> u64 {
        match self {
            Symbol::Neg => 0,
            Symbol::Zero => 1,
            Symbol::Pos => 2,
            Symbol::Star => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HashValue {
    Sign(Symbol),
    Pair(Symbol, Symbol),
    Bucket(i64),
}

impl HashValue {
    /// Stable integer encoding used to build composite keys.
    pub fn code(self) -> u64 {
        match self {
            HashValue::Sign(s) => s.code(),
            HashValue::Pair(s, t) => 4 + 4 * s.code() + t.code(),
            HashValue::Bucket(b) => b as u64,
        }
    }
}

/// Near and far collision probabilities at radius `r` and factor `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Guarantees {
    pub r: f64,
    pub c: f64,
    pub p1: f64,
    pub p2: f64,
}

/// Serializable description of a family, enough to rebuild it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum FamilyDescriptor {
    RandomPoint { a: f64, b: f64, seed: u64 },
    MeanReduce { a: f64, b: f64, r: f64, c: f64, seed: u64 },
    AsymmetricTwoPoint { a: f64, b: f64, seed: u64 },
    Euclidean { dimension: usize, r_prime: f64, c_prime: f64, width: f64, seed: u64 },
    DiscreteSample { a: f64, b: f64, dimension: usize, r: f64, c: f64, width: f64, seed: u64 },
}

/// A (possibly asymmetric) hash family plus the distance it is sensitive to.
pub trait HashFamily: Send + Sync {
    /// What callers hand in.
    type Input: ?Sized + Sync;
    /// The stored representation, computed once per item.
    type Item: Send + Sync;
    /// One drawn hash function.
    type Hasher: Send + Sync;

    fn prepare(&self, input: &Self::Input) -> Self::Item;

    fn draw(&self, table: u64, slot: u64) -> Self::Hasher;

    fn hash_data(&self, h: &Self::Hasher, item: &Self::Item) -> HashValue;

    fn hash_query(&self, h: &Self::Hasher, item: &Self::Item) -> HashValue {
        self.hash_data(h, item)
    }

    /// Data hashes for many items under one hash function.
    fn hash_data_batch(&self, h: &Self::Hasher, items: &[Self::Item]) -> Vec<HashValue> {
        items.iter().map(|it| self.hash_data(h, it)).collect()
    }

    /// The distance the family is sensitive to, used for exact filtering.
    fn distance(&self, a: &Self::Item, b: &Self::Item) -> f64;

    fn guarantees(&self, r: f64, c: f64) -> Result<Guarantees, FamilyError>;

    fn descriptor(&self) -> FamilyDescriptor;
}

/// Independent generator for draw `(table, slot)` of the stream `seed`.
pub fn draw_rng(seed: u64, table: u64, slot: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&table.to_le_bytes());
    key[16..24].copy_from_slice(&slot.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

fn check_range(a: f64, b: f64) -> Result<(), FamilyError> {
    if a < b && a.is_finite() && b.is_finite() {
        Ok(())
    } else {
        Err(FamilyError::EmptyRange { a, b })
    }
}

fn check_factor(c: f64) -> Result<(), FamilyError> {
    if c > 1.0 && c.is_finite() {
        Ok(())
    } else {
        Err(FamilyError::BadFactor(c))
    }
}

/// Collision probability `1 - d/(b-a)` of the random-point family.
pub fn h1_collision_prob(d: f64, a: f64, b: f64) -> f64 {
    (1.0 - d / (b - a)).clamp(0.0, 1.0)
}

/// A point `(x, y)` in `[0,1] × [a,b]`; hashes `f` to the sign of `f(x) - y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointHash {
    pub x: f64,
    pub y: f64,
}

impl PointHash {
    pub fn apply(&self, f: &StepFunction) -> Symbol {
        Symbol::sign(f.at(self.x) - self.y)
    }
}

/// Random-point family: sensitive to `L1` for functions into `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomPoint {
    pub a: f64,
    pub b: f64,
    pub seed: u64,
}

impl RandomPoint {
    pub fn new(a: f64, b: f64, seed: u64) -> Result<Self, FamilyError> {
        check_range(a, b)?;
        Ok(Self { a, b, seed })
    }

    pub fn point(&self, table: u64, slot: u64) -> PointHash {
        let mut rng = draw_rng(self.seed, table, slot);
        PointHash { x: rng.random::<f64>(), y: rng.random_range(self.a..self.b) }
    }
}

impl HashFamily for RandomPoint {
    type Input = StepFunction;
    type Item = StepFunction;
    type Hasher = PointHash;

    fn prepare(&self, input: &StepFunction) -> StepFunction {
        input.clone()
    }

    fn draw(&self, table: u64, slot: u64) -> PointHash {
        self.point(table, slot)
    }

    fn hash_data(&self, h: &PointHash, item: &StepFunction) -> HashValue {
        HashValue::Sign(h.apply(item))
    }

    fn distance(&self, a: &StepFunction, b: &StepFunction) -> f64 {
        l1_distance(a, b).expect("items share the unit domain")
    }

    fn guarantees(&self, r: f64, c: f64) -> Result<Guarantees, FamilyError> {
        let width = self.b - self.a;
        if !(r > 0.0 && r < width) {
            return Err(FamilyError::BadRadius { r, limit: width });
        }
        check_factor(c)?;
        Ok(Guarantees { r, c, p1: h1_collision_prob(r, self.a, self.b), p2: h1_collision_prob(c * r, self.a, self.b) })
    }

    fn descriptor(&self) -> FamilyDescriptor {
        FamilyDescriptor::RandomPoint { a: self.a, b: self.b, seed: self.seed }
    }
}

/// Random-point hashing of the mean-reduced function, sensitive to the
/// vertically aligned distance `D1↕` for functions into `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanReduceFamily {
    pub a: f64,
    pub b: f64,
    pub r: f64,
    pub c: f64,
    inner: RandomPoint,
}

impl MeanReduceFamily {
    pub fn new(a: f64, b: f64, r: f64, c: f64, seed: u64) -> Result<Self, FamilyError> {
        check_range(a, b)?;
        let family = Self { a, b, r, c, inner: RandomPoint::new(a - b, b - a, seed)? };
        family.guarantees(r, c)?;
        Ok(family)
    }

    /// Smallest admissible `c` is anything strictly above this.
    pub fn factor_bound(r: f64, a: f64, b: f64) -> f64 {
        2.0 - r / (b - a)
    }
}

impl HashFamily for MeanReduceFamily {
    type Input = StepFunction;
    type Item = StepFunction;
    type Hasher = PointHash;

    fn prepare(&self, input: &StepFunction) -> StepFunction {
        input.mean_reduce().expect("items live on the unit domain")
    }

    fn draw(&self, table: u64, slot: u64) -> PointHash {
        self.inner.point(table, slot)
    }

    fn hash_data(&self, h: &PointHash, item: &StepFunction) -> HashValue {
        HashValue::Sign(h.apply(item))
    }

    fn distance(&self, a: &StepFunction, b: &StepFunction) -> f64 {
        d1_updown(a, b).expect("items share the unit domain").distance
    }

    fn guarantees(&self, r: f64, c: f64) -> Result<Guarantees, FamilyError> {
        let width = self.b - self.a;
        if !(r > 0.0 && r < width) {
            return Err(FamilyError::BadRadius { r, limit: width });
        }
        check_factor(c)?;
        let bound = Self::factor_bound(r, self.a, self.b);
        if c <= bound {
            return Err(FamilyError::FactorBelowMeanReduceBound { c, bound });
        }
        let scale = r / (2.0 * width);
        Ok(Guarantees { r, c, p1: 1.0 - bound * scale, p2: (1.0 - c * scale).max(0.0) })
    }

    fn descriptor(&self) -> FamilyDescriptor {
        FamilyDescriptor::MeanReduce { a: self.a, b: self.b, r: self.r, c: self.c, seed: self.inner.seed }
    }
}

/// Collision probability `0.5 - L2²/(b-a)²` stated for the two-point family,
/// floored at zero.
pub fn h2_collision_prob(l2: f64, a: f64, b: f64) -> f64 {
    (0.5 - (l2 / (b - a)).powi(2)).max(0.0)
}

/// Parameters `(x, y1, y2, use_second)` of one asymmetric two-point hash.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPointHash {
    pub x: f64,
    pub y1: f64,
    pub y2: f64,
    pub use_second: bool,
}

impl TwoPointHash {
    pub fn data(&self, f: &StepFunction) -> HashValue {
        let v = f.at(self.x);
        let second = if self.use_second { Symbol::sign(v - self.y2) } else { Symbol::Star };
        HashValue::Pair(Symbol::sign(v - self.y1), second)
    }

    /// The query side flips the second symbol, so the second coordinates of a
    /// data and a query hash agree exactly when `y2` separates the two values.
    pub fn query(&self, g: &StepFunction) -> HashValue {
        let v = g.at(self.x);
        let second = if self.use_second { Symbol::sign(v - self.y2).opposite() } else { Symbol::Star };
        HashValue::Pair(Symbol::sign(v - self.y1), second)
    }
}

/// Asymmetric two-point family, sensitive to `L2` for functions into `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymmetricTwoPoint {
    pub a: f64,
    pub b: f64,
    pub seed: u64,
}

impl AsymmetricTwoPoint {
    pub fn new(a: f64, b: f64, seed: u64) -> Result<Self, FamilyError> {
        check_range(a, b)?;
        Ok(Self { a, b, seed })
    }

    pub fn two_point(&self, table: u64, slot: u64) -> TwoPointHash {
        let mut rng = draw_rng(self.seed, table, slot);
        TwoPointHash {
            x: rng.random::<f64>(),
            y1: rng.random_range(self.a..self.b),
            y2: rng.random_range(self.a..self.b),
            use_second: rng.random::<bool>(),
        }
    }
}

impl HashFamily for AsymmetricTwoPoint {
    type Input = StepFunction;
    type Item = StepFunction;
    type Hasher = TwoPointHash;

    fn prepare(&self, input: &StepFunction) -> StepFunction {
        input.clone()
    }

    fn draw(&self, table: u64, slot: u64) -> TwoPointHash {
        self.two_point(table, slot)
    }

    fn hash_data(&self, h: &TwoPointHash, item: &StepFunction) -> HashValue {
        h.data(item)
    }

    fn hash_query(&self, h: &TwoPointHash, item: &StepFunction) -> HashValue {
        h.query(item)
    }

    fn distance(&self, a: &StepFunction, b: &StepFunction) -> f64 {
        l2_distance(a, b).expect("items share the unit domain")
    }

    fn guarantees(&self, r: f64, c: f64) -> Result<Guarantees, FamilyError> {
        let width = self.b - self.a;
        if !(r > 0.0 && r < width) {
            return Err(FamilyError::BadRadius { r, limit: width });
        }
        check_factor(c)?;
        Ok(Guarantees { r, c, p1: h2_collision_prob(r, self.a, self.b), p2: h2_collision_prob(c * r, self.a, self.b) })
    }

    fn descriptor(&self) -> FamilyDescriptor {
        FamilyDescriptor::AsymmetricTwoPoint { a: self.a, b: self.b, seed: self.seed }
    }
}

/// Ceiling that forgives floating-point noise just above an integer.
pub(crate) fn ceil_tolerant(x: f64) -> usize {
    (x * (1.0 - 1e-12)).ceil().max(0.0) as usize
}

/// Sample count that keeps the sampled squared distance of two `k`-step
/// functions into `[a, b]` within `(√c - 1) r²` of the true `L2²`.
pub fn riemann_n(r: f64, c: f64, k: usize, a: f64, b: f64) -> usize {
    ceil_tolerant(2.0 * k as f64 * (b - a).powi(2) / ((c.sqrt() - 1.0) * r * r))
}

/// `sample_vec(f, n)`.
pub fn discrete_sample_embed(f: &StepFunction, n: usize) -> Vec<f64> {
    f.sample_vec(n).expect("embedding needs the unit domain")
}

/// Radius and factor `(c^{1/4} r, √c)` for the vector structure that stands in
/// for a step-function structure at `(r, c)`.
pub fn discrete_sample_params(r: f64, c: f64) -> (f64, f64) {
    (c.powf(0.25) * r, c.sqrt())
}

/// Standard normal CDF.
fn phi(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Collision probability of a Gaussian projection hash with bucket `width`
/// for two vectors at Euclidean distance `d`.
pub fn pstable_collision_prob(d: f64, width: f64) -> f64 {
    if d <= 0.0 {
        return 1.0;
    }
    let t = width / d;
    1.0 - 2.0 * phi(-t) - 2.0 / ((2.0 * std::f64::consts::PI).sqrt() * t) * (1.0 - (-t * t / 2.0).exp())
}

/// A Gaussian random walk `W(0) = 0`, `W(t) = w_0 + … + w_{t-1}` with i.i.d.
/// standard normal steps, generated by midpoint bisection. Any single `W(t)`
/// costs `O(log n)`, and [`GaussianWalk::materialize`] yields the same values
/// for every `t` at once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianWalk {
    seed: u64,
    len: usize,
    total: f64,
}

impl GaussianWalk {
    pub fn new(seed: u64, len: usize) -> Self {
        let mut walk = Self { seed, len, total: 0.0 };
        walk.total = (len as f64).sqrt() * walk.normal(u64::MAX);
        walk
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn node_normal(&self, lo: usize, hi: usize) -> f64 {
        self.normal(((lo as u64) << 32) | hi as u64)
    }

    fn normal(&self, node: u64) -> f64 {
        let mut rng = SmallRng::seed_from_u64(self.seed ^ node.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        rng.sample(StandardNormal)
    }

    fn midpoint(&self, lo: usize, hi: usize, wlo: f64, whi: f64) -> (usize, f64) {
        let mid = lo + (hi - lo) / 2;
        let (left, right, span) = ((mid - lo) as f64, (hi - mid) as f64, (hi - lo) as f64);
        let value = wlo + left / span * (whi - wlo) + (left * right / span).sqrt() * self.node_normal(lo, hi);
        (mid, value)
    }

    pub fn at(&self, t: usize) -> f64 {
        assert!(t <= self.len, "walk position {t} beyond length {}", self.len);
        let (mut lo, mut hi, mut wlo, mut whi) = (0, self.len, 0.0, self.total);
        loop {
            if t == lo {
                return wlo;
            }
            if t == hi {
                return whi;
            }
            let (mid, wm) = self.midpoint(lo, hi, wlo, whi);
            if t < mid {
                (hi, whi) = (mid, wm);
            } else {
                (lo, wlo) = (mid, wm);
            }
        }
    }

    /// `W(0), …, W(len)`.
    pub fn materialize(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len + 1];
        out[self.len] = self.total;
        self.fill(&mut out, 0, self.len);
        out
    }

    fn fill(&self, out: &mut [f64], lo: usize, hi: usize) {
        if hi - lo < 2 {
            return;
        }
        let (mid, wm) = self.midpoint(lo, hi, out[lo], out[hi]);
        out[mid] = wm;
        self.fill(out, lo, mid);
        self.fill(out, mid, hi);
    }

    /// The increments `w_0, …, w_{len-1}`.
    pub fn steps(&self) -> Vec<f64> {
        self.materialize().windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// One Gaussian projection hash `⌊(⟨v, w⟩ + offset)/width⌋`, with `w` the
/// steps of a seeded walk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionHash {
    pub walk: GaussianWalk,
    pub offset: f64,
    pub width: f64,
}

impl ProjectionHash {
    fn bucket(&self, projection: f64) -> HashValue {
        HashValue::Bucket(((projection + self.offset) / self.width).floor() as i64)
    }

    pub fn apply(&self, v: &[f64]) -> HashValue {
        let steps = self.walk.steps();
        self.bucket(v.iter().zip(&steps).map(|(a, b)| a * b).sum())
    }
}

fn draw_projection(seed: u64, table: u64, slot: u64, len: usize, width: f64) -> ProjectionHash {
    let mut rng = draw_rng(seed, table, slot);
    let walk_seed = rng.random::<u64>();
    ProjectionHash { walk: GaussianWalk::new(walk_seed, len), offset: rng.random_range(0.0..width), width }
}

/// Gaussian projection family over vectors of a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanFamily {
    pub dimension: usize,
    pub r_prime: f64,
    pub c_prime: f64,
    pub width: f64,
    pub seed: u64,
}

impl EuclideanFamily {
    /// Bucket width is `4 r'` unless overridden with [`EuclideanFamily::with_width`].
    pub fn new(dimension: usize, r_prime: f64, c_prime: f64, seed: u64) -> Result<Self, FamilyError> {
        check_factor(c_prime)?;
        if !(r_prime > 0.0) {
            return Err(FamilyError::BadRadius { r: r_prime, limit: f64::INFINITY });
        }
        Ok(Self { dimension, r_prime, c_prime, width: 4.0 * r_prime, seed })
    }

    pub fn with_width(mut self, width: f64) -> Result<Self, FamilyError> {
        if !(width > 0.0) {
            return Err(FamilyError::BadWidth(width));
        }
        self.width = width;
        Ok(self)
    }
}

impl HashFamily for EuclideanFamily {
    type Input = [f64];
    type Item = Vec<f64>;
    type Hasher = ProjectionHash;

    fn prepare(&self, input: &[f64]) -> Vec<f64> {
        assert_eq!(input.len(), self.dimension, "vector dimension mismatch");
        input.to_vec()
    }

    fn draw(&self, table: u64, slot: u64) -> ProjectionHash {
        draw_projection(self.seed, table, slot, self.dimension, self.width)
    }

    fn hash_data(&self, h: &ProjectionHash, item: &Vec<f64>) -> HashValue {
        h.apply(item)
    }

    fn hash_data_batch(&self, h: &ProjectionHash, items: &[Vec<f64>]) -> Vec<HashValue> {
        let steps = h.walk.steps();
        items.iter().map(|v| h.bucket(v.iter().zip(&steps).map(|(a, b)| a * b).sum())).collect()
    }

    fn distance(&self, a: &Vec<f64>, b: &Vec<f64>) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }

    fn guarantees(&self, r: f64, c: f64) -> Result<Guarantees, FamilyError> {
        check_factor(c)?;
        Ok(Guarantees { r, c, p1: pstable_collision_prob(r, self.width), p2: pstable_collision_prob(c * r, self.width) })
    }

    fn descriptor(&self) -> FamilyDescriptor {
        FamilyDescriptor::Euclidean {
            dimension: self.dimension,
            r_prime: self.r_prime,
            c_prime: self.c_prime,
            width: self.width,
            seed: self.seed,
        }
    }
}

/// A mean-reduced step function with its sampling cut points precomputed:
/// pieces cover sample indices `cuts[i]..cuts[i+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSteps {
    pub function: StepFunction,
    cuts: Vec<usize>,
    scaled: Vec<f64>,
}

impl SampledSteps {
    fn new(function: StepFunction, n: usize) -> Self {
        let first_sample_at_or_after = |x: f64| {
            let mut i = (x * n as f64).ceil().clamp(0.0, n as f64) as usize;
            while i > 0 && (i - 1) as f64 / n as f64 >= x {
                i -= 1;
            }
            while i < n && (i as f64 / n as f64) < x {
                i += 1;
            }
            i
        };
        let bps = function.breakpoints();
        let mut cuts: Vec<usize> = bps[..bps.len() - 1].iter().map(|&x| first_sample_at_or_after(x)).collect();
        cuts.push(n);
        let scale = 1.0 / (n as f64).sqrt();
        let scaled = function.values().iter().map(|v| v * scale).collect();
        Self { function, cuts, scaled }
    }

    fn project(&self, walk_at: impl Fn(usize) -> f64) -> f64 {
        let mut sum = 0.0;
        let mut prev = walk_at(self.cuts[0]);
        for (i, s) in self.scaled.iter().enumerate() {
            let next = walk_at(self.cuts[i + 1]);
            sum += s * (next - prev);
            prev = next;
        }
        sum
    }
}

/// Vertical alignment followed by `n`-point sampling and Gaussian projection
/// hashing; sensitive to `D2↕` for functions into `[a, b]`.
///
/// Projections are evaluated straight from the step representation through
/// the walk, so the `n`-dimensional sample vectors are never formed.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSampleFamily {
    pub a: f64,
    pub b: f64,
    pub dimension: usize,
    pub r: f64,
    pub c: f64,
    pub width: f64,
    pub seed: u64,
}

impl DiscreteSampleFamily {
    /// Builds the family for `(r, c)` over sample dimension `dimension`; the
    /// bucket width defaults to `4 c^{1/4} r`.
    pub fn new(a: f64, b: f64, dimension: usize, r: f64, c: f64, seed: u64) -> Result<Self, FamilyError> {
        check_range(a, b)?;
        check_factor(c)?;
        if !(r > 0.0) {
            return Err(FamilyError::BadRadius { r, limit: f64::INFINITY });
        }
        let (r_prime, _) = discrete_sample_params(r, c);
        Ok(Self { a, b, dimension, r, c, width: 4.0 * r_prime, seed })
    }

    pub fn with_width(mut self, width: f64) -> Result<Self, FamilyError> {
        if !(width > 0.0) {
            return Err(FamilyError::BadWidth(width));
        }
        self.width = width;
        Ok(self)
    }

    /// The equivalent family over explicit sample vectors.
    pub fn vector_family(&self) -> EuclideanFamily {
        let (r_prime, c_prime) = discrete_sample_params(self.r, self.c);
        EuclideanFamily { dimension: self.dimension, r_prime, c_prime, width: self.width, seed: self.seed }
    }
}

impl HashFamily for DiscreteSampleFamily {
    type Input = StepFunction;
    type Item = SampledSteps;
    type Hasher = ProjectionHash;

    fn prepare(&self, input: &StepFunction) -> SampledSteps {
        SampledSteps::new(input.mean_reduce().expect("items live on the unit domain"), self.dimension)
    }

    fn draw(&self, table: u64, slot: u64) -> ProjectionHash {
        draw_projection(self.seed, table, slot, self.dimension, self.width)
    }

    fn hash_data(&self, h: &ProjectionHash, item: &SampledSteps) -> HashValue {
        h.bucket(item.project(|t| h.walk.at(t)))
    }

    fn hash_data_batch(&self, h: &ProjectionHash, items: &[SampledSteps]) -> Vec<HashValue> {
        let w = h.walk.materialize();
        items.iter().map(|it| h.bucket(it.project(|t| w[t]))).collect()
    }

    fn distance(&self, a: &SampledSteps, b: &SampledSteps) -> f64 {
        d2_updown(&a.function, &b.function).expect("items share the unit domain").distance
    }

    fn guarantees(&self, r: f64, c: f64) -> Result<Guarantees, FamilyError> {
        check_factor(c)?;
        let (r_prime, c_prime) = discrete_sample_params(r, c);
        Ok(Guarantees {
            r,
            c,
            p1: pstable_collision_prob(r_prime, self.width),
            p2: pstable_collision_prob(c_prime * r_prime, self.width),
        })
    }

    fn descriptor(&self) -> FamilyDescriptor {
        FamilyDescriptor::DiscreteSample {
            a: self.a,
            b: self.b,
            dimension: self.dimension,
            r: self.r,
            c: self.c,
            width: self.width,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod test {
    use super::*;

    fn constant(v: f64) -> StepFunction {
        StepFunction::constant(v)
    }

    #[test]
    fn point_hash_signs() {
        let f = constant(0.7);
        assert_eq!(PointHash { x: 0.5, y: 0.2 }.apply(&f), Symbol::Pos);
        assert_eq!(PointHash { x: 0.5, y: 0.9 }.apply(&f), Symbol::Neg);
        assert_eq!(PointHash { x: 0.5, y: 0.7 }.apply(&f), Symbol::Zero);
    }

    #[test]
    fn draws_are_repeatable() {
        let fam = RandomPoint::new(0.0, 1.0, 42).unwrap();
        assert_eq!(fam.point(3, 5), fam.point(3, 5));
        assert_ne!(fam.point(3, 5), fam.point(5, 3));
        let two = AsymmetricTwoPoint::new(0.0, 1.0, 9).unwrap();
        assert_eq!(two.two_point(1, 2), two.two_point(1, 2));
    }

    #[test]
    fn h1_formula() {
        assert_eq!(h1_collision_prob(0.0, 0.0, 1.0), 1.0);
        assert_eq!(h1_collision_prob(0.25, 0.0, 1.0), 0.75);
        assert_eq!(h1_collision_prob(2.0, 1.0, 3.0), 0.0);
    }

    #[test]
    fn h1_monte_carlo_constants() {
        let fam = RandomPoint::new(0.0, 1.0, 7).unwrap();
        let (f, g) = (constant(0.5), constant(0.75));
        let hits = (0..100_000).filter(|&i| fam.point(0, i).apply(&f) == fam.point(0, i).apply(&g)).count();
        assert!((hits as f64 / 1e5 - 0.75).abs() <= 0.01);
    }

    #[test]
    fn mean_reduce_guarantees() {
        let fam = MeanReduceFamily::new(0.0, 1.0, 0.5, 1.9, 1).unwrap();
        let g = fam.guarantees(0.5, 1.9).unwrap();
        assert!((g.p1 - 0.625).abs() < 1e-12);
        assert!((g.p2 - 0.525).abs() < 1e-12);
        assert_eq!(
            MeanReduceFamily::new(0.0, 1.0, 0.5, 1.4, 1),
            Err(FamilyError::FactorBelowMeanReduceBound { c: 1.4, bound: 1.5 })
        );
        assert!(MeanReduceFamily::new(0.0, 1.0, 0.5, 1.5, 1).is_err());
        let f = StepFunction::make(&[0.0, 0.3, 1.0], &[0.1, 0.8]).unwrap();
        let item = fam.prepare(&f);
        assert!((0..1000).all(|i| fam.hash_data(&fam.draw(0, i), &item) == fam.hash_query(&fam.draw(0, i), &item)));
    }

    /// Exact collision probability of the two-point family, computed by
    /// integrating the per-`x` probability over the merged partition.
    fn two_point_oracle(f: &StepFunction, g: &StepFunction, a: f64, b: f64) -> f64 {
        let mut cuts: Vec<f64> = f.breakpoints().iter().chain(g.breakpoints()).copied().collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts.windows(2)
            .map(|w| {
                let x = 0.5 * (w[0] + w[1]);
                let gap = (f.at(x) - g.at(x)).abs() / (b - a);
                let first = 1.0 - gap;
                let second = 0.5 + 0.5 * gap;
                (w[1] - w[0]) * first * second
            })
            .sum()
    }

    fn two_point_rate(f: &StepFunction, g: &StepFunction, seed: u64, trials: u64) -> f64 {
        let fam = AsymmetricTwoPoint::new(0.0, 1.0, seed).unwrap();
        let hits = (0..trials).filter(|&i| fam.two_point(0, i).data(f) == fam.two_point(0, i).query(g)).count();
        hits as f64 / trials as f64
    }

    #[test]
    fn two_point_identical_functions() {
        let f = StepFunction::make(&[0.0, 0.4, 1.0], &[0.2, 0.9]).unwrap();
        assert!((two_point_rate(&f, &f, 3, 100_000) - 0.5).abs() <= 0.01);
    }

    #[test]
    fn two_point_constants_follow_exact_probability() {
        let (f, g) = (constant(0.0), constant(0.5));
        let exact = two_point_oracle(&f, &g, 0.0, 1.0);
        assert!((exact - 0.375).abs() < 1e-12);
        assert!((two_point_rate(&f, &g, 4, 100_000) - exact).abs() <= 0.01);
    }

    #[test]
    fn two_point_extremes_never_collide() {
        let (f, g) = (constant(0.0), constant(1.0));
        assert_eq!(two_point_oracle(&f, &g, 0.0, 1.0), 0.0);
        assert_eq!(two_point_rate(&f, &g, 5, 20_000), 0.0);
        assert_eq!(h2_collision_prob(1.0, 0.0, 1.0), 0.0);
        assert_eq!(h2_collision_prob(0.0, 0.0, 1.0), 0.5);
    }

    #[test]
    fn riemann_counts() {
        assert_eq!(riemann_n(0.1, 4.0, 7, 0.0, 1.0), 1400);
        assert_eq!(riemann_n(1.0, 4.0, 1, 0.0, 1.0), 2);
        assert_eq!(riemann_n(0.5, 4.0, 6, 0.0, 1.0), 2 * riemann_n(0.5, 4.0, 3, 0.0, 1.0));
        let (rp, cp) = discrete_sample_params(0.1, 16.0);
        assert!((rp - 0.2).abs() < 1e-15 && cp == 4.0);
    }

    #[test]
    fn pstable_probabilities() {
        assert_eq!(pstable_collision_prob(0.0, 1.0), 1.0);
        let p1 = pstable_collision_prob(1.0, 4.0);
        let p2 = pstable_collision_prob(2.0, 4.0);
        assert!((p1 - 0.8005).abs() < 5e-4, "{p1}");
        assert!((p2 - 0.6095).abs() < 5e-4, "{p2}");
        assert!(p1 > p2);
    }

    #[test]
    fn walk_lazy_matches_materialized() {
        for len in [1usize, 2, 7, 100, 1023] {
            let walk = GaussianWalk::new(11, len);
            let all = walk.materialize();
            for (t, &v) in all.iter().enumerate() {
                assert_eq!(walk.at(t), v);
            }
        }
    }

    #[test]
    fn walk_steps_look_standard_normal() {
        let steps = GaussianWalk::new(5, 200_000).steps();
        let n = steps.len() as f64;
        let mean = steps.iter().sum::<f64>() / n;
        let var = steps.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 0.01, "{mean}");
        assert!((var - 1.0).abs() < 0.02, "{var}");
        let lag: f64 = steps.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / n;
        assert!(lag.abs() < 0.01, "{lag}");
    }

    #[test]
    fn sampled_projection_matches_explicit_vector() {
        let f = StepFunction::make(&[0.0, 0.9, 1.0], &[1.0, 3.0]).unwrap();
        let fam = DiscreteSampleFamily::new(0.0, 4.0, 10, 0.5, 4.0, 8).unwrap();
        let item = fam.prepare(&f);
        let vec = discrete_sample_embed(&f.mean_reduce().unwrap(), 10);
        let vfam = fam.vector_family();
        for i in 0..50 {
            let h = fam.draw(0, i);
            assert_eq!(fam.hash_data(&h, &item), vfam.hash_data(&vfam.draw(0, i), &vec));
            assert_eq!(fam.hash_data_batch(&h, std::slice::from_ref(&item))[0], fam.hash_data(&h, &item));
        }
    }

    #[test]
    fn euclidean_monte_carlo() {
        let fam = EuclideanFamily::new(8, 1.0, 2.0, 13).unwrap();
        let a = vec![0.0; 8];
        let mut b = [0.0; 8];
        b[0] = 0.6;
        b[3] = 0.8;
        let trials = 100_000;
        let hits = (0..trials)
            .filter(|&i| {
                let h = fam.draw(0, i);
                let steps = h.walk.steps();
                let pa: f64 = a.iter().zip(&steps).map(|(x, w)| x * w).sum();
                let pb: f64 = b.iter().zip(&steps).map(|(x, w)| x * w).sum();
                h.bucket(pa) == h.bucket(pb)
            })
            .count();
        let expected = pstable_collision_prob(1.0, fam.width);
        assert!((hits as f64 / trials as f64 - expected).abs() <= 0.01, "{} vs {expected}", hits as f64 / trials as f64);
        assert_eq!(fam.hash_data(&fam.draw(0, 1), &a), fam.hash_query(&fam.draw(0, 1), &a));
    }
}
