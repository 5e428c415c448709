//! JSON-lines polygon datasets. The first line may instead be a metadata
//! object without `vertices`, e.g. `{"m": 6}`, declaring the vertex bound.

use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use turnhash::generate::{perturbed_polygon, random_polygon, regular_polygon, spiral_polygon};
use turnhash::Polygon;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub m: Option<usize>,
    pub polygons: Vec<Polygon>,
}

impl Dataset {
    /// The declared bound, or else the largest vertex count present.
    pub fn vertex_bound(&self) -> usize {
        self.m.unwrap_or_else(|| self.polygons.iter().map(Polygon::len).max().unwrap_or(3))
    }

    pub fn get(&self, id: &str) -> Result<&Polygon, CliError> {
        self.polygons
            .iter()
            .find(|p| p.id() == id)
            .ok_or_else(|| CliError::Validation(format!("no polygon with id {id:?}")))
    }
}

pub fn parse<R: BufRead>(reader: R) -> Result<Dataset, CliError> {
    let mut m = None;
    let mut polygons = Vec::new();
    let mut ids = HashSet::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| CliError::Validation(format!("line {}: {msg}", n + 1));
        let value: Value = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        if value.get("vertices").is_none() {
            if !polygons.is_empty() || m.is_some() {
                return Err(bad("metadata is only allowed on the first line".into()));
            }
            let declared = value.get("m").and_then(Value::as_u64).ok_or_else(|| bad("metadata needs an integer m".into()))?;
            m = Some(declared as usize);
            continue;
        }
        let polygon: Polygon = serde_json::from_value(value).map_err(|e| bad(e.to_string()))?;
        if !ids.insert(polygon.id().to_string()) {
            return Err(bad(format!("duplicate id {:?}", polygon.id())));
        }
        if let Some(bound) = m {
            if polygon.len() > bound {
                return Err(bad(format!("{} vertices exceed the declared m = {bound}", polygon.len())));
            }
        }
        polygons.push(polygon);
    }
    Ok(Dataset { m, polygons })
}

pub fn read(path: &Path) -> Result<Dataset, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    parse(std::io::BufReader::new(file))
}

pub fn write<W: Write>(mut w: W, data: &Dataset) -> Result<(), CliError> {
    if let Some(m) = data.m {
        writeln!(w, "{}", json!({ "m": m }))?;
    }
    for p in &data.polygons {
        writeln!(w, "{}", serde_json::to_string(p).map_err(|e| CliError::Other(e.to_string()))?)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Random,
    Regular,
    Perturbed,
    Spiral,
}

/// Knobs for [`generate`] beyond kind, size and count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenOptions {
    /// Relative vertex noise of the perturbed kind.
    pub sigma: f64,
    /// Tightness of the spiral kind.
    pub epsilon: f64,
    pub mirrored: bool,
}

impl Default for GenOptions {
    fn default() -> Self {
        Self { sigma: 0.01, epsilon: 0.1, mirrored: false }
    }
}

/// `count` polygons with `m` vertices. The perturbed kind jitters one random
/// base polygon; regular and spiral polygons get a random similarity
/// transform each, except that spirals keep their orientation.
pub fn generate(kind: Kind, m: usize, count: usize, seed: u64, opts: GenOptions) -> Result<Dataset, CliError> {
    let invalid = |e: turnhash::PolygonError| CliError::Validation(e.to_string());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut polygons = Vec::with_capacity(count);
    match kind {
        Kind::Random => {
            for i in 0..count {
                polygons.push(random_polygon(&mut rng, m, format!("random-{i}")).map_err(invalid)?);
            }
        }
        Kind::Regular => {
            let base = regular_polygon(m, "regular").map_err(invalid)?;
            for i in 0..count {
                let moved = base.transformed(
                    rng.random_range(0.0..std::f64::consts::TAU),
                    rng.random_range(0.5..2.0),
                    [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                );
                polygons.push(moved.with_id(format!("regular-{i}")));
            }
        }
        Kind::Perturbed => {
            let base = random_polygon(&mut rng, m, "base").map_err(invalid)?;
            for i in 0..count {
                polygons.push(perturbed_polygon(&mut rng, &base, opts.sigma, format!("perturbed-{i}")).map_err(invalid)?);
            }
        }
        Kind::Spiral => {
            let base = spiral_polygon(m, opts.epsilon, opts.mirrored, "spiral").map_err(invalid)?;
            for i in 0..count {
                let scale = rng.random_range(0.5..2.0);
                let offset = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                polygons.push(base.transformed(0.0, scale, offset).with_id(format!("spiral-{i}")));
            }
        }
    }
    Ok(Dataset { m: Some(m), polygons })
}
