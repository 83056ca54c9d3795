//! MinHash near-duplicate removal.
//!
//! Each record is shingled into character n-grams, hashed into a MinHash
//! signature, and banded for candidate generation. Candidate pairs are
//! verified against the full signature: the matching fraction estimates
//! Jaccard similarity, and pairs at or above the threshold join one
//! duplicate group. The survivor of a group is the record with the
//! lexicographically smallest id; output preserves input order.

use std::collections::{HashMap, HashSet};

use crate::corpus::record::CorpusRecord;
use crate::corpus::FilterStage;
use crate::error::Error;
use crate::rng::{self, Stream};
use crate::Result;

use rand::Rng;

/// Rows per LSH band. With 128 hashes this gives 32 bands, tuned so that
/// pairs near a 0.8 threshold are candidates with probability ~1 while
/// unrelated pairs almost never collide.
const ROWS_PER_BAND: usize = 4;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DedupConfig {
    /// Characters per shingle. Records shorter than this form a single
    /// shingle from their whole text.
    pub shingle_size: usize,
    /// Signature length; also the denominator of the similarity estimate.
    pub num_hashes: usize,
    /// Estimated-Jaccard cutoff: pairs at or above it merge.
    pub jaccard_threshold: f64,
}

impl Default for DedupConfig {
    fn default() -> Self {
        DedupConfig {
            shingle_size: 5,
            num_hashes: 128,
            jaccard_threshold: 0.8,
        }
    }
}

impl DedupConfig {
    pub fn validate(&self) -> Result<()> {
        if self.shingle_size < 1 {
            return Err(Error::config("shingle_size", "must be at least 1"));
        }
        if self.num_hashes < 16 {
            return Err(Error::config(
                "num_hashes",
                "fewer than 16 hashes estimate similarity too coarsely",
            ));
        }
        if !(self.jaccard_threshold > 0.0 && self.jaccard_threshold <= 1.0) {
            return Err(Error::config(
                "jaccard_threshold",
                "must lie in (0, 1]",
            ));
        }
        Ok(())
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashed character n-gram set of one text.
fn shingle_hashes(text: &str, n: usize) -> HashSet<u64> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = HashSet::new();
    if chars.len() < n {
        out.insert(fnv1a64(text.as_bytes()));
        return out;
    }
    let mut buf = String::new();
    for w in chars.windows(n) {
        buf.clear();
        buf.extend(w.iter());
        out.insert(fnv1a64(buf.as_bytes()));
    }
    out
}

fn signature(shingles: &HashSet<u64>, perm_seeds: &[u64]) -> Vec<u64> {
    perm_seeds
        .iter()
        .map(|&s| {
            shingles
                .iter()
                .map(|&x| splitmix64(x ^ s))
                .min()
                .expect("shingle set is never empty")
        })
        .collect()
}

fn estimate(a: &[u64], b: &[u64]) -> f64 {
    let same = a.iter().zip(b).filter(|(x, y)| x == y).count();
    same as f64 / a.len() as f64
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Removes near-duplicates, keeping one survivor per duplicate group.
///
/// Deterministic for a given seed: the permutation family is derived from
/// it, candidate pairs are sorted before verification, and grouping does
/// not depend on edge order.
pub fn dedup_minhash(
    records: Vec<CorpusRecord>,
    cfg: &DedupConfig,
    seed: u64,
) -> Result<(Vec<CorpusRecord>, FilterStage)> {
    cfg.validate()?;
    let input = records.len();

    let mut ids = HashSet::new();
    for r in &records {
        if !ids.insert(r.id.as_str()) {
            return Err(Error::InvalidInput(format!(
                "duplicate record id {:?}",
                r.id
            )));
        }
    }

    let mut seed_rng = rng::stream_rng(seed, Stream::Dedup);
    let perm_seeds: Vec<u64> = (0..cfg.num_hashes).map(|_| seed_rng.gen()).collect();

    let signatures: Vec<Vec<u64>> = records
        .iter()
        .map(|r| signature(&shingle_hashes(&r.text, cfg.shingle_size), &perm_seeds))
        .collect();

    // Banding: records sharing any full band of signature entries become
    // candidates. Leftover hashes beyond the last full band still count
    // toward the similarity estimate.
    let mut candidates: HashSet<(usize, usize)> = HashSet::new();
    let bands = cfg.num_hashes / ROWS_PER_BAND;
    for band in 0..bands.max(1) {
        let lo = (band * ROWS_PER_BAND).min(cfg.num_hashes);
        let hi = (lo + ROWS_PER_BAND).min(cfg.num_hashes);
        if lo == hi {
            break;
        }
        let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
        for (i, sig) in signatures.iter().enumerate() {
            let mut key_bytes = Vec::with_capacity((hi - lo) * 8 + 8);
            key_bytes.extend_from_slice(&(band as u64).to_le_bytes());
            for v in &sig[lo..hi] {
                key_bytes.extend_from_slice(&v.to_le_bytes());
            }
            buckets.entry(fnv1a64(&key_bytes)).or_default().push(i);
        }
        for members in buckets.values() {
            for (k, &i) in members.iter().enumerate() {
                for &j in &members[k + 1..] {
                    candidates.insert((i.min(j), i.max(j)));
                }
            }
        }
    }

    let mut pairs: Vec<(usize, usize)> = candidates.into_iter().collect();
    pairs.sort_unstable();

    let mut uf = UnionFind::new(records.len());
    for (i, j) in pairs {
        if estimate(&signatures[i], &signatures[j]) >= cfg.jaccard_threshold {
            uf.union(i, j);
        }
    }

    // Within each group keep the lexicographically smallest id.
    let mut best: HashMap<usize, usize> = HashMap::new();
    for i in 0..records.len() {
        let root = uf.find(i);
        match best.get(&root) {
            Some(&b) if records[b].id <= records[i].id => {}
            _ => {
                best.insert(root, i);
            }
        }
    }
    let keep: HashSet<usize> = best.into_values().collect();

    let survivors: Vec<CorpusRecord> = records
        .into_iter()
        .enumerate()
        .filter(|(i, _)| keep.contains(i))
        .map(|(_, r)| r)
        .collect();

    let stage = FilterStage::new("dedup", input, survivors.len());
    Ok((survivors, stage))
}
