//! Polygon retrieval: turning functions are cloned so that an index built for
//! vertically aligned distances answers queries under the full
//! rotation-invariant, reference-invariant distance `D_p`.
//!
//! Every stored polygon contributes one slide clone per discontinuity of its
//! turning function (plus the unslid function). The step-shift variant further
//! replaces each slide clone by its vertical clones, one per step value, and
//! indexes those under plain `L1`. Queries are cloned the same way, every
//! clone probes the inner index, and hits are checked against the exact
//! polygon distance.

use std::f64::consts::TAU;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{polygon_distance, Norm};
use crate::families::{ceil_tolerant, DiscreteSampleFamily, FamilyError, HashFamily, MeanReduceFamily, RandomPoint};
use crate::index::{IndexError, IndexParams, IndexStats, LshIndex};
use crate::stepfn::StepFunction;
use crate::turning::{gon_bounds, normalize_min_zero, turning_function, GonBounds, Polygon, PolygonError};

const MAGIC: &[u8; 8] = b"TURNPOLY";
pub const FORMAT_VERSION: u32 = 1;

/// Slack allowed when checking that clones stay inside the family range.
const RANGE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PolyIndexError {
    #[error("polygon {id} has {len} vertices, the index is built for at most {m}")]
    TooManyVertices { id: String, len: usize, m: usize },
    #[error("polygon: {0}")]
    Polygon(#[from] PolygonError),
    #[error("parameters: {0}")]
    Precondition(#[from] FamilyError),
    #[error("the step-shift variant applies to p = 1 only")]
    VariantNeedsL1,
    #[error(transparent)]
    Index(#[from] IndexError),
}

impl PolyIndexError {
    /// Whether the error comes from the configuration rather than the data.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            PolyIndexError::Precondition(_)
                | PolyIndexError::VariantNeedsL1
                | PolyIndexError::Index(IndexError::Family(_))
                | PolyIndexError::Index(IndexError::BadDelta(_))
                | PolyIndexError::Index(IndexError::BadProbabilities { .. })
        )
    }
}

/// How `L1` structures align step values vertically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Hash the mean-reduced function; needs `c > 2 - r/ω`.
    MeanReduce,
    /// Index every vertical clone under plain `L1`; any `c > 1` works.
    StepShift,
}

/// Parameters of a polygon index. `variant` only matters for `p = L1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolygonIndexConfig {
    pub m: usize,
    pub p: Norm,
    pub r: f64,
    pub c: f64,
    pub variant: Variant,
    pub delta: f64,
    pub seed: u64,
}

impl PolygonIndexConfig {
    /// `λ_m/2 + 2π`, the height of every slide clone of a min-zero turning
    /// function of an `m`-gon.
    pub fn omega(&self) -> Result<f64, PolyIndexError> {
        Ok(gon_bounds(self.m)?.span_bound + TAU)
    }

    /// Sample dimension of the `L2` structure.
    pub fn sample_dimension(&self) -> Result<usize, PolyIndexError> {
        let omega = self.omega()?;
        Ok(ceil_tolerant(8.0 * (self.m + 2) as f64 * omega * omega / ((self.c.sqrt() - 1.0) * self.r * self.r)))
    }

    /// Number of query clones, which the per-probe failure probability is
    /// divided by.
    pub fn fan_out(&self) -> usize {
        match (self.p, self.variant) {
            (Norm::L1, Variant::StepShift) => (self.m + 1) * (self.m + 1),
            _ => self.m + 1,
        }
    }

    /// Rejects configurations whose guarantees do not hold.
    pub fn check(&self) -> Result<(), PolyIndexError> {
        let omega = self.omega()?;
        match (self.p, self.variant) {
            (Norm::L1, Variant::MeanReduce) => {
                MeanReduceFamily::new(0.0, omega, self.r, self.c, self.seed)?;
            }
            (Norm::L1, Variant::StepShift) => {
                RandomPoint::new(-omega, omega, self.seed)?.guarantees(self.r, self.c)?;
            }
            (Norm::L2, Variant::StepShift) => return Err(PolyIndexError::VariantNeedsL1),
            (Norm::L2, Variant::MeanReduce) => {
                DiscreteSampleFamily::new(0.0, omega, 1, self.r, self.c, self.seed)?;
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(IndexError::BadDelta(self.delta).into());
        }
        Ok(())
    }
}

/// Where a clone came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CloneTag {
    /// Shifted down by `step` so that a step of that height lies at zero.
    Vertical { step: f64 },
    /// The 2π-extension slid left by `u`.
    Slide { u: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CloneSet {
    pub original_id: String,
    pub clones: Vec<(StepFunction, CloneTag)>,
}

/// One clone `f - v` for every distinct step value `v` of `f`.
pub fn clone_vertical(id: impl Into<String>, f: &StepFunction) -> CloneSet {
    let mut steps = f.values().to_vec();
    steps.sort_by(f64::total_cmp);
    steps.dedup();
    CloneSet {
        original_id: id.into(),
        clones: steps.into_iter().map(|v| (f.shifted(-v), CloneTag::Vertical { step: v })).collect(),
    }
}

/// The slides of the 2π-extension of `f` by `0` and by every discontinuity.
pub fn clone_slides(id: impl Into<String>, f: &StepFunction) -> CloneSet {
    let f2 = f.extend_2pi().expect("turning functions live on the unit domain");
    let clones = std::iter::once(0.0)
        .chain(f.discontinuities().iter().copied())
        .map(|u| (f2.slide(u).expect("slides stay within [0, 1]"), CloneTag::Slide { u }))
        .collect();
    CloneSet { original_id: id.into(), clones }
}

/// The functions a polygon is represented by inside the index.
fn polygon_clones(p: &Polygon, config: &PolygonIndexConfig) -> Vec<StepFunction> {
    let t = turning_function(p, p.first_edge_midpoint()).expect("midpoint reference is in range");
    let slides = clone_slides(p.id(), &normalize_min_zero(&t));
    match (config.p, config.variant) {
        (Norm::L1, Variant::StepShift) => slides
            .clones
            .iter()
            .flat_map(|(s, _)| clone_vertical(p.id(), s).clones)
            .map(|(f, _)| f)
            .collect(),
        _ => slides.clones.into_iter().map(|(f, _)| f).collect(),
    }
}

fn assert_in_range(f: &StepFunction, lo: f64, hi: f64, id: &str) {
    assert!(
        f.minimum() >= lo - RANGE_TOL && f.maximum() <= hi + RANGE_TOL,
        "clone of {id} spans [{}, {}], outside [{lo}, {hi}]",
        f.minimum(),
        f.maximum()
    );
}

enum Inner {
    MeanReduce(LshIndex<MeanReduceFamily>),
    StepShift(LshIndex<RandomPoint>),
    Sampled(LshIndex<DiscreteSampleFamily>),
}

macro_rules! with_inner {
    ($inner:expr, $ix:ident => $body:expr) => {
        match $inner {
            Inner::MeanReduce($ix) => $body,
            Inner::StepShift($ix) => $body,
            Inner::Sampled($ix) => $body,
        }
    };
}

/// Result of one polygon query.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonHit {
    /// Position of the polygon in the indexed collection.
    pub index: usize,
    pub id: String,
    /// Exact `D_p` to the query.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolygonQueryOutcome {
    pub hit: Option<PolygonHit>,
    /// Inner queries issued, one per query clone until a hit.
    pub probes: usize,
    /// Table entries retrieved over all probes.
    pub scanned: usize,
    /// Largest number of entries retrieved by a single probe.
    pub max_probe_scanned: usize,
}

/// An `(r, c)` near-neighbor structure for polygons with at most `m` vertices
/// under `D_p`.
pub struct PolygonIndex {
    config: PolygonIndexConfig,
    bounds: GonBounds,
    polygons: Vec<Polygon>,
    owners: Vec<u32>,
    inner: Inner,
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    config: PolygonIndexConfig,
    bounds: GonBounds,
    polygons: Vec<Polygon>,
}

/// Clones every polygon and records which polygon each clone belongs to.
fn clone_all(polygons: &[Polygon], config: &PolygonIndexConfig) -> Result<(Vec<StepFunction>, Vec<u32>), PolyIndexError> {
    for p in polygons {
        if p.len() > config.m {
            return Err(PolyIndexError::TooManyVertices { id: p.id().to_string(), len: p.len(), m: config.m });
        }
    }
    let omega = config.omega()?;
    let (lo, hi) = match (config.p, config.variant) {
        (Norm::L1, Variant::StepShift) => (-omega, omega),
        _ => (0.0, omega),
    };
    let per_polygon: Vec<Vec<StepFunction>> = polygons
        .par_iter()
        .map(|p| {
            let clones = polygon_clones(p, config);
            for f in &clones {
                assert_in_range(f, lo, hi, p.id());
            }
            clones
        })
        .collect();
    let mut owners = Vec::new();
    let mut clones = Vec::new();
    for (i, cs) in per_polygon.into_iter().enumerate() {
        owners.extend(std::iter::repeat_n(i as u32, cs.len()));
        clones.extend(cs);
    }
    Ok((clones, owners))
}

fn inner_delta(config: &PolygonIndexConfig) -> f64 {
    config.delta / config.fan_out() as f64
}

impl PolygonIndex {
    pub fn build(polygons: Vec<Polygon>, config: PolygonIndexConfig) -> Result<Self, PolyIndexError> {
        config.check()?;
        let bounds = gon_bounds(config.m)?;
        let (clones, owners) = clone_all(&polygons, &config)?;
        let omega = config.omega()?;
        let (r, c, delta) = (config.r, config.c, inner_delta(&config));
        let inner = match (config.p, config.variant) {
            (Norm::L1, Variant::MeanReduce) => {
                let family = MeanReduceFamily::new(0.0, omega, r, c, config.seed)?;
                Inner::MeanReduce(LshIndex::build(family, &clones, r, c, delta)?)
            }
            (Norm::L1, Variant::StepShift) => {
                let family = RandomPoint::new(-omega, omega, config.seed)?;
                Inner::StepShift(LshIndex::build(family, &clones, r, c, delta)?)
            }
            (Norm::L2, _) => {
                let family = DiscreteSampleFamily::new(0.0, omega, config.sample_dimension()?, r, c, config.seed)?;
                Inner::Sampled(LshIndex::build(family, &clones, r, c, delta)?)
            }
        };
        Ok(Self { config, bounds, polygons, owners, inner })
    }

    pub fn config(&self) -> &PolygonIndexConfig {
        &self.config
    }

    pub fn bounds(&self) -> &GonBounds {
        &self.bounds
    }

    pub fn polygons(&self) -> &[Polygon] {
        &self.polygons
    }

    pub fn len(&self) -> usize {
        self.polygons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polygons.is_empty()
    }

    /// Number of functions stored in the inner index.
    pub fn clone_count(&self) -> usize {
        self.owners.len()
    }

    pub fn inner_params(&self) -> &IndexParams {
        with_inner!(&self.inner, ix => ix.params())
    }

    pub fn stats(&self) -> IndexStats {
        with_inner!(&self.inner, ix => ix.stats())
    }

    /// Looks for a stored polygon within `c·r` of `q` under `D_p`.
    pub fn query(&self, q: &Polygon) -> Result<PolygonQueryOutcome, PolyIndexError> {
        if q.len() > self.config.m {
            return Err(PolyIndexError::TooManyVertices { id: q.id().to_string(), len: q.len(), m: self.config.m });
        }
        let limit = self.config.c * self.config.r;
        let mut outcome = PolygonQueryOutcome { hit: None, probes: 0, scanned: 0, max_probe_scanned: 0 };
        for clone in polygon_clones(q, &self.config) {
            let probe = with_inner!(&self.inner, ix => ix.query_prepared(&ix.family().prepare(&clone)));
            outcome.probes += 1;
            outcome.scanned += probe.scanned;
            outcome.max_probe_scanned = outcome.max_probe_scanned.max(probe.scanned);
            let Some(hit) = probe.hit else { continue };
            let index = self.owners[hit.id] as usize;
            let stored = &self.polygons[index];
            let distance = polygon_distance(stored, q, self.config.p).distance;
            if distance <= limit {
                outcome.hit = Some(PolygonHit { index, id: stored.id().to_string(), distance });
                break;
            }
        }
        Ok(outcome)
    }

    /// Writes the configuration, bounds and polygons as a JSON header,
    /// followed by the inner index.
    pub fn save<W: Write>(&self, mut w: W) -> Result<(), PolyIndexError> {
        let header = Header {
            version: FORMAT_VERSION,
            config: self.config,
            bounds: self.bounds,
            polygons: self.polygons.clone(),
        };
        let json = serde_json::to_vec(&header).map_err(IndexError::from)?;
        let io = |e: std::io::Error| PolyIndexError::Index(e.into());
        w.write_all(MAGIC).map_err(io)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes()).map_err(io)?;
        w.write_all(&(json.len() as u64).to_le_bytes()).map_err(io)?;
        w.write_all(&json).map_err(io)?;
        with_inner!(&self.inner, ix => ix.save(&mut w))?;
        Ok(())
    }

    pub fn load<R: Read>(mut r: R) -> Result<Self, PolyIndexError> {
        let format = |msg: String| PolyIndexError::Index(IndexError::Format(msg));
        let io = |e: std::io::Error| PolyIndexError::Index(e.into());
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != MAGIC {
            return Err(format("not a polygon index file".into()));
        }
        let mut word = [0u8; 4];
        r.read_exact(&mut word).map_err(io)?;
        let version = u32::from_le_bytes(word);
        if version != FORMAT_VERSION {
            return Err(format(format!("polygon index version {version}, expected {FORMAT_VERSION}")));
        }
        let mut len = [0u8; 8];
        r.read_exact(&mut len).map_err(io)?;
        let mut json = vec![0u8; u64::from_le_bytes(len) as usize];
        r.read_exact(&mut json).map_err(io)?;
        let header: Header = serde_json::from_slice(&json).map_err(IndexError::from)?;
        let config = header.config;
        let bounds = gon_bounds(config.m)?;
        if bounds != header.bounds {
            return Err(format("recorded bounds do not match the vertex count".into()));
        }
        config.check()?;
        let (clones, owners) = clone_all(&header.polygons, &config)?;
        let omega = config.omega()?;
        let inner = match (config.p, config.variant) {
            (Norm::L1, Variant::MeanReduce) => {
                let family = MeanReduceFamily::new(0.0, omega, config.r, config.c, config.seed)?;
                Inner::MeanReduce(LshIndex::load(family, &clones, &mut r)?)
            }
            (Norm::L1, Variant::StepShift) => {
                let family = RandomPoint::new(-omega, omega, config.seed)?;
                Inner::StepShift(LshIndex::load(family, &clones, &mut r)?)
            }
            (Norm::L2, _) => {
                let family =
                    DiscreteSampleFamily::new(0.0, omega, config.sample_dimension()?, config.r, config.c, config.seed)?;
                Inner::Sampled(LshIndex::load(family, &clones, &mut r)?)
            }
        };
        Ok(Self { config, bounds, polygons: header.polygons, owners, inner })
    }
}
