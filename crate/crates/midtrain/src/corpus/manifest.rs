//! Difficulty buckets and mixture manifests.
//!
//! `bucketize` partitions scored records by perplexity into `k + 1`
//! consecutive buckets given `k` ascending boundaries; boundaries belong
//! to the lower bucket. `mixture_compose` pairs named record pools with
//! normalized weights to describe a sampling mixture.

use serde::{Deserialize, Serialize};

use crate::corpus::record::CorpusRecord;
use crate::error::Error;
use crate::Result;

/// Record ids assigned to one perplexity bucket. Buckets are numbered
/// from 1 (easiest, lowest perplexity) upward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketManifest {
    pub bucket: usize,
    /// Upper perplexity bound, inclusive; `None` for the last bucket.
    pub upper_bound: Option<f64>,
    pub ids: Vec<String>,
}

/// Partitions records by perplexity. Returns one manifest per bucket,
/// including empty ones, so downstream consumers see a stable layout.
pub fn bucketize(records: &[CorpusRecord], boundaries: &[f64]) -> Result<Vec<BucketManifest>> {
    if boundaries.is_empty() {
        return Err(Error::config("boundaries", "need at least one boundary"));
    }
    if boundaries.iter().any(|b| !b.is_finite()) {
        return Err(Error::config("boundaries", "must be finite"));
    }
    if boundaries.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("boundaries", "must be strictly ascending"));
    }
    let missing: Vec<&str> = records
        .iter()
        .filter(|r| r.ppl.is_none())
        .map(|r| r.id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingField {
            field: "ppl",
            count: missing.len(),
            sample: missing.iter().take(5).map(|s| s.to_string()).collect(),
        });
    }

    let mut buckets: Vec<BucketManifest> = (0..=boundaries.len())
        .map(|i| BucketManifest {
            bucket: i + 1,
            upper_bound: boundaries.get(i).copied(),
            ids: Vec::new(),
        })
        .collect();
    for r in records {
        let p = r.ppl.expect("checked above");
        let idx = boundaries.iter().position(|&b| p <= b).unwrap_or(boundaries.len());
        buckets[idx].ids.push(r.id.clone());
    }
    Ok(buckets)
}

/// Named pool of record ids feeding a mixture.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainManifest {
    pub name: String,
    pub ids: Vec<String>,
}

/// One mixture component: a pool plus its normalized sampling weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeEntry {
    pub name: String,
    pub weight: f64,
    pub ids: Vec<String>,
}

/// A full mixture description; weights sum to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeManifest {
    pub domains: Vec<CompositeEntry>,
}

/// Combines pools and raw weights into a normalized mixture. A positive
/// weight on an empty pool is a configuration error: it promises mass
/// that cannot be sampled.
pub fn mixture_compose(
    domains: &[DomainManifest],
    weights: &[f64],
) -> Result<CompositeManifest> {
    if domains.is_empty() {
        return Err(Error::config("domains", "mixture needs at least one pool"));
    }
    if domains.len() != weights.len() {
        return Err(Error::config(
            "weights",
            format!("{} weights for {} pools", weights.len(), domains.len()),
        ));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::config("weights", "must be finite and > 0"));
    }
    for (d, w) in domains.iter().zip(weights) {
        if d.ids.is_empty() && *w > 0.0 {
            return Err(Error::config(
                "domains",
                format!("pool {:?} has weight {w} but no records", d.name),
            ));
        }
    }
    let total: f64 = weights.iter().sum();
    let entries = domains
        .iter()
        .zip(weights)
        .map(|(d, w)| CompositeEntry {
            name: d.name.clone(),
            weight: w / total,
            ids: d.ids.clone(),
        })
        .collect();
    Ok(CompositeManifest { domains: entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::record::Source;

    fn rec(id: &str, ppl: f64) -> CorpusRecord {
        let mut r = CorpusRecord::new(id, "文本", Source::Legal);
        r.ppl = Some(ppl);
        r
    }

    #[test]
    fn boundaries_belong_to_the_lower_bucket() {
        let records = vec![
            rec("a", 4.0),
            rec("b", 5.0),
            rec("c", 5.0001),
            rec("d", 15.0),
            rec("e", 15.0001),
            rec("f", 80.0),
        ];
        let buckets = bucketize(&records, &[5.0, 15.0]).unwrap();
        assert_eq!(buckets.len(), 3);
        assert_eq!(buckets[0].ids, ["a", "b"]);
        assert_eq!(buckets[1].ids, ["c", "d"]);
        assert_eq!(buckets[2].ids, ["e", "f"]);
        assert_eq!(buckets[0].upper_bound, Some(5.0));
        assert_eq!(buckets[2].upper_bound, None);
    }

    #[test]
    fn every_record_lands_in_exactly_one_bucket() {
        let records: Vec<CorpusRecord> = (0..50)
            .map(|i| rec(&format!("r-{i:02}"), 0.5 + i as f64))
            .collect();
        let buckets = bucketize(&records, &[5.0, 15.0, 30.0]).unwrap();
        let total: usize = buckets.iter().map(|b| b.ids.len()).sum();
        assert_eq!(total, 50);
        let mut seen: Vec<&str> = buckets
            .iter()
            .flat_map(|b| b.ids.iter().map(|s| s.as_str()))
            .collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 50);
    }

    #[test]
    fn empty_buckets_are_still_emitted() {
        let records = vec![rec("a", 100.0)];
        let buckets = bucketize(&records, &[5.0, 15.0]).unwrap();
        assert_eq!(buckets.len(), 3);
        assert!(buckets[0].ids.is_empty());
        assert!(buckets[1].ids.is_empty());
        assert_eq!(buckets[2].ids, ["a"]);
    }

    #[test]
    fn bucketize_validates_inputs() {
        let records = vec![rec("a", 1.0)];
        assert!(bucketize(&records, &[]).is_err());
        assert!(bucketize(&records, &[5.0, 5.0]).is_err());
        assert!(bucketize(&records, &[15.0, 5.0]).is_err());
        assert!(bucketize(&records, &[f64::NAN]).is_err());
        let bare = vec![CorpusRecord::new("b", "文", Source::Legal)];
        assert!(bucketize(&bare, &[5.0]).is_err());
    }

    fn pool(name: &str, n: usize) -> DomainManifest {
        DomainManifest {
            name: name.into(),
            ids: (0..n).map(|i| format!("{name}-{i}")).collect(),
        }
    }

    #[test]
    fn weights_normalize() {
        let m = mixture_compose(&[pool("legal", 3), pool("general", 2)], &[4.0, 6.0]).unwrap();
        assert!((m.domains[0].weight - 0.4).abs() < 1e-15);
        assert!((m.domains[1].weight - 0.6).abs() < 1e-15);

        let m = mixture_compose(
            &[pool("a", 1), pool("b", 1), pool("c", 1)],
            &[1.0, 1.0, 2.0],
        )
        .unwrap();
        let w: Vec<f64> = m.domains.iter().map(|d| d.weight).collect();
        assert_eq!(w, [0.25, 0.25, 0.5]);
    }

    #[test]
    fn empty_pool_with_positive_weight_is_rejected() {
        let err = mixture_compose(&[pool("legal", 3), pool("hollow", 0)], &[1.0, 1.0]);
        let msg = err.unwrap_err().to_string();
        assert!(msg.contains("hollow"), "{msg}");
    }

    #[test]
    fn compose_validates_shapes() {
        assert!(mixture_compose(&[], &[]).is_err());
        assert!(mixture_compose(&[pool("a", 1)], &[1.0, 2.0]).is_err());
        assert!(mixture_compose(&[pool("a", 1)], &[0.0]).is_err());
        assert!(mixture_compose(&[pool("a", 1)], &[-1.0]).is_err());
        assert!(mixture_compose(&[pool("a", 1)], &[f64::INFINITY]).is_err());
    }
}
