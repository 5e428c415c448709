//! Amplified multi-table near-neighbor index over any [`HashFamily`].
//!
//! Each of the `L` tables keys every item by the concatenation of `k` hash
//! values. A query probes its own key in every table and checks candidates
//! against the exact distance, stopping after `3L` retrieved entries.

use std::borrow::Borrow;
use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::families::{ceil_tolerant, FamilyDescriptor, FamilyError, HashFamily};

/// Indices holding more entries than this are refused at build time.
pub const MAX_ENTRIES: u64 = 1 << 30;

const MAGIC: &[u8; 8] = b"TURNHASH";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("need 0 <= p2 < p1 <= 1, got p1 = {p1}, p2 = {p2}")]
    BadProbabilities { p1: f64, p2: f64 },
    #[error("failure probability {0} must lie in (0, 1)")]
    BadDelta(f64),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error("index would hold {entries} entries ({tables} tables of {items} items), above the limit")]
    TooLarge { tables: usize, items: usize, entries: u64 },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("header: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad index file: {0}")]
    Format(String),
}

/// Concatenation length, table count and exponent for an index over `n` items.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Amplification {
    pub concat_k: usize,
    pub tables_l: usize,
    pub rho: f64,
}

/// `k = ⌈ln n / ln(1/p2)⌉` (at least 1) and `L = ⌈ln(1/δ) / p1^k⌉`.
pub fn derive_params(n: usize, p1: f64, p2: f64, delta: f64) -> Result<Amplification, IndexError> {
    if !(0.0..=1.0).contains(&p2) || !(0.0..=1.0).contains(&p1) || p2 >= p1 {
        return Err(IndexError::BadProbabilities { p1, p2 });
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(IndexError::BadDelta(delta));
    }
    let concat_k = if p2 == 0.0 || n <= 1 { 1 } else { ceil_tolerant((n as f64).ln() / (1.0 / p2).ln()).max(1) };
    let tables_l = if p1 == 1.0 { 1 } else { ceil_tolerant((1.0 / delta).ln() / p1.powi(concat_k as i32)).max(1) };
    let rho = if p1 == 1.0 || p2 == 0.0 {
        0.0
    } else {
        (1.0 / p1).ln() / (1.0 / p2).ln()
    };
    Ok(Amplification { concat_k, tables_l, rho })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexParams {
    pub r: f64,
    pub c: f64,
    pub p1: f64,
    pub p2: f64,
    pub rho: f64,
    pub concat_k: usize,
    pub tables_l: usize,
    pub delta: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub id: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryOutcome {
    pub hit: Option<Hit>,
    /// Table entries retrieved, duplicates included.
    pub scanned: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct IndexStats {
    pub tables: usize,
    pub entries: usize,
    /// Bucket size → number of buckets of that size, over all tables.
    pub bucket_histogram: BTreeMap<usize, usize>,
    pub queries: u64,
    pub candidates_scanned: u64,
}

#[derive(Debug, Clone, PartialEq)]
struct Table {
    keys: Vec<u64>,
    ids: Vec<u32>,
}

impl Table {
    fn bucket(&self, key: u64) -> &[u32] {
        let lo = self.keys.partition_point(|&k| k < key);
        let hi = lo + self.keys[lo..].partition_point(|&k| k == key);
        &self.ids[lo..hi]
    }
}

fn mix(key: u64, code: u64) -> u64 {
    let mut z = key ^ code.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(key << 6);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub struct LshIndex<F: HashFamily> {
    family: F,
    params: IndexParams,
    hashers: Vec<F::Hasher>,
    items: Vec<F::Item>,
    tables: Vec<Table>,
    queries: AtomicU64,
    scanned: AtomicU64,
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    params: IndexParams,
    family: FamilyDescriptor,
    items: usize,
}

impl<F: HashFamily> LshIndex<F> {
    /// Prepares and indexes `inputs`, sizing the tables for the family's
    /// guarantees at `(r, c)` and failure probability `delta`.
    pub fn build<I>(family: F, inputs: &[I], r: f64, c: f64, delta: f64) -> Result<Self, IndexError>
    where
        I: Borrow<F::Input> + Sync,
    {
        let items: Vec<F::Item> = inputs.par_iter().map(|x| family.prepare(x.borrow())).collect();
        Self::build_prepared(family, items, r, c, delta)
    }

    pub fn build_prepared(family: F, items: Vec<F::Item>, r: f64, c: f64, delta: f64) -> Result<Self, IndexError> {
        let g = family.guarantees(r, c)?;
        let amp = derive_params(items.len(), g.p1, g.p2, delta)?;
        let seed = descriptor_seed(&family.descriptor());
        let params = IndexParams {
            r,
            c,
            p1: g.p1,
            p2: g.p2,
            rho: amp.rho,
            concat_k: amp.concat_k,
            tables_l: amp.tables_l,
            delta,
            seed,
        };
        let entries = amp.tables_l as u64 * items.len() as u64;
        if entries > MAX_ENTRIES || items.len() > u32::MAX as usize {
            return Err(IndexError::TooLarge { tables: amp.tables_l, items: items.len(), entries });
        }
        let hashers = Self::draw_all(&family, &params);
        let k = params.concat_k;
        let tables = (0..params.tables_l)
            .into_par_iter()
            .map(|l| {
                let mut keys = vec![0u64; items.len()];
                for h in &hashers[l * k..(l + 1) * k] {
                    for (key, v) in keys.iter_mut().zip(family.hash_data_batch(h, &items)) {
                        *key = mix(*key, v.code());
                    }
                }
                let mut order: Vec<(u64, u32)> = keys.into_iter().zip(0u32..).collect();
                order.sort_unstable();
                let (keys, ids) = order.into_iter().unzip();
                Table { keys, ids }
            })
            .collect();
        Ok(Self { family, params, hashers, items, tables, queries: AtomicU64::new(0), scanned: AtomicU64::new(0) })
    }

    fn draw_all(family: &F, params: &IndexParams) -> Vec<F::Hasher> {
        (0..params.tables_l * params.concat_k)
            .into_par_iter()
            .map(|i| family.draw((i / params.concat_k) as u64, (i % params.concat_k) as u64))
            .collect()
    }

    pub fn params(&self) -> &IndexParams {
        &self.params
    }

    pub fn family(&self) -> &F {
        &self.family
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn item(&self, id: usize) -> &F::Item {
        &self.items[id]
    }

    /// Returns the first candidate within `c·r` of `q`, if any is found
    /// within the scan budget.
    pub fn query(&self, q: &F::Input) -> Option<Hit> {
        self.query_prepared(&self.family.prepare(q)).hit
    }

    pub fn query_prepared(&self, q: &F::Item) -> QueryOutcome {
        let outcome = self.probe(q, self.params.c * self.params.r);
        self.queries.fetch_add(1, Ordering::Relaxed);
        self.scanned.fetch_add(outcome.scanned as u64, Ordering::Relaxed);
        outcome
    }

    fn probe(&self, q: &F::Item, limit: f64) -> QueryOutcome {
        let budget = 3 * self.params.tables_l;
        let k = self.params.concat_k;
        let mut seen = HashSet::new();
        let mut scanned = 0;
        if self.items.is_empty() {
            return QueryOutcome { hit: None, scanned };
        }
        for (l, table) in self.tables.iter().enumerate() {
            let key = self.hashers[l * k..(l + 1) * k]
                .iter()
                .fold(0u64, |key, h| mix(key, self.family.hash_query(h, q).code()));
            for &id in table.bucket(key) {
                if scanned == budget {
                    return QueryOutcome { hit: None, scanned };
                }
                scanned += 1;
                if !seen.insert(id) {
                    continue;
                }
                let distance = self.family.distance(&self.items[id as usize], q);
                if distance <= limit {
                    return QueryOutcome { hit: Some(Hit { id: id as usize, distance }), scanned };
                }
            }
        }
        QueryOutcome { hit: None, scanned }
    }

    /// Recomputes the data key of stored item `id` in table `l`.
    pub fn data_key(&self, l: usize, id: usize) -> u64 {
        let k = self.params.concat_k;
        self.hashers[l * k..(l + 1) * k]
            .iter()
            .fold(0u64, |key, h| mix(key, self.family.hash_data(h, &self.items[id]).code()))
    }

    /// Ids stored under `key` in table `l`.
    pub fn bucket(&self, l: usize, key: u64) -> Vec<usize> {
        self.tables[l].bucket(key).iter().map(|&id| id as usize).collect()
    }

    pub fn stats(&self) -> IndexStats {
        let mut hist = BTreeMap::new();
        for t in &self.tables {
            let mut i = 0;
            while i < t.keys.len() {
                let run = t.keys[i..].partition_point(|&k| k == t.keys[i]);
                *hist.entry(run).or_insert(0) += 1;
                i += run;
            }
        }
        IndexStats {
            tables: self.tables.len(),
            entries: self.tables.iter().map(|t| t.ids.len()).sum(),
            bucket_histogram: hist,
            queries: self.queries.load(Ordering::Relaxed),
            candidates_scanned: self.scanned.load(Ordering::Relaxed),
        }
    }

    /// Writes a versioned file: magic, version, a JSON header with the
    /// parameters and family, then every table as little-endian arrays.
    pub fn save<W: Write>(&self, mut w: W) -> Result<(), IndexError> {
        let header = Header {
            version: FORMAT_VERSION,
            params: self.params,
            family: self.family.descriptor(),
            items: self.items.len(),
        };
        let json = serde_json::to_vec(&header)?;
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(json.len() as u64).to_le_bytes())?;
        w.write_all(&json)?;
        for t in &self.tables {
            w.write_all(&(t.keys.len() as u64).to_le_bytes())?;
            let mut buf = Vec::with_capacity(t.keys.len() * 12);
            for k in &t.keys {
                buf.extend_from_slice(&k.to_le_bytes());
            }
            for id in &t.ids {
                buf.extend_from_slice(&id.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    /// Loads tables written by [`LshIndex::save`]. The family and the item
    /// inputs must match the ones the index was built from.
    pub fn load<R: Read, I>(family: F, inputs: &[I], mut r: R) -> Result<Self, IndexError>
    where
        I: Borrow<F::Input> + Sync,
    {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(IndexError::Format("missing magic bytes".into()));
        }
        let version = read_u32(&mut r)?;
        if version != FORMAT_VERSION {
            return Err(IndexError::Format(format!("version {version}, expected {FORMAT_VERSION}")));
        }
        let len = read_u64(&mut r)? as usize;
        let mut json = vec![0u8; len];
        r.read_exact(&mut json)?;
        let header: Header = serde_json::from_slice(&json)?;
        if header.family != family.descriptor() {
            return Err(IndexError::Format("family differs from the one in the file".into()));
        }
        if header.items != inputs.len() {
            return Err(IndexError::Format(format!("file indexes {} items, {} given", header.items, inputs.len())));
        }
        let mut tables = Vec::with_capacity(header.params.tables_l);
        for _ in 0..header.params.tables_l {
            let n = read_u64(&mut r)? as usize;
            if n != header.items {
                return Err(IndexError::Format("table size differs from item count".into()));
            }
            let mut buf = vec![0u8; n * 12];
            r.read_exact(&mut buf)?;
            let (kb, ib) = buf.split_at(n * 8);
            let keys = kb.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect();
            let ids = ib.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect();
            tables.push(Table { keys, ids });
        }
        let items = inputs.par_iter().map(|x| family.prepare(x.borrow())).collect();
        let hashers = Self::draw_all(&family, &header.params);
        Ok(Self {
            family,
            params: header.params,
            hashers,
            items,
            tables,
            queries: AtomicU64::new(0),
            scanned: AtomicU64::new(0),
        })
    }
}

fn descriptor_seed(d: &FamilyDescriptor) -> u64 {
    match *d {
        FamilyDescriptor::RandomPoint { seed, .. }
        | FamilyDescriptor::MeanReduce { seed, .. }
        | FamilyDescriptor::AsymmetricTwoPoint { seed, .. }
        | FamilyDescriptor::Euclidean { seed, .. }
        | FamilyDescriptor::DiscreteSample { seed, .. } => seed,
    }
}

fn read_u32<R: Read>(r: &mut R) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}
