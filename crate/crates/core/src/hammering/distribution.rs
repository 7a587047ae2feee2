use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Read access to a sparse distribution sorted by index.
pub trait SparseDistribution {
    fn support_len(&self) -> usize;
    /// Index and probability of the `i`-th entry.
    fn entry(&self, i: usize) -> (u32, f64);
}

/// Flip counts per chunk-local capacitor index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CountsFile", into = "CountsFile")]
pub struct BitFlipDistribution {
    counts: Vec<(u32, u32)>,
    total: u64,
}

#[derive(Serialize, Deserialize)]
struct CountsFile {
    counts: Vec<(u32, u32)>,
    total: u64,
}

impl TryFrom<CountsFile> for BitFlipDistribution {
    type Error = Error;
    fn try_from(f: CountsFile) -> Result<Self> {
        let d = BitFlipDistribution::from_sorted_counts(f.counts)?;
        if d.total != f.total {
            return Err(Error::Config(format!(
                "distribution total {} does not match its counts ({})",
                f.total, d.total
            )));
        }
        Ok(d)
    }
}

impl From<BitFlipDistribution> for CountsFile {
    fn from(d: BitFlipDistribution) -> Self {
        CountsFile {
            counts: d.counts,
            total: d.total,
        }
    }
}

impl BitFlipDistribution {
    /// Builds from `(index, count)` pairs strictly increasing in index with
    /// non-zero counts.
    pub fn from_sorted_counts(counts: Vec<(u32, u32)>) -> Result<Self> {
        if counts.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Config(
                "distribution indices must be strictly increasing".into(),
            ));
        }
        if counts.iter().any(|&(_, c)| c == 0) {
            return Err(Error::Config("distribution counts must be positive".into()));
        }
        let total = counts.iter().map(|&(_, c)| c as u64).sum();
        Ok(BitFlipDistribution { counts, total })
    }

    /// Counts every occurrence of each index.
    pub fn from_indices<I: IntoIterator<Item = u32>>(indices: I) -> Self {
        let mut all: Vec<u32> = indices.into_iter().collect();
        all.sort_unstable();
        let mut counts: Vec<(u32, u32)> = Vec::new();
        for i in all {
            match counts.last_mut() {
                Some((j, c)) if *j == i => *c += 1,
                _ => counts.push((i, 1)),
            }
        }
        let total = counts.iter().map(|&(_, c)| c as u64).sum();
        BitFlipDistribution { counts, total }
    }

    pub fn counts(&self) -> &[(u32, u32)] {
        &self.counts
    }
    pub fn total(&self) -> u64 {
        self.total
    }
    pub fn is_empty(&self) -> bool {
        self.total == 0
    }
    pub fn count(&self, index: u32) -> u32 {
        self.counts
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|k| self.counts[k].1)
            .unwrap_or(0)
    }
    pub fn probability(&self, index: u32) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(index) as f64 / self.total as f64
        }
    }
    pub fn support(&self) -> impl Iterator<Item = u32> + '_ {
        self.counts.iter().map(|&(i, _)| i)
    }

    /// Count-wise sum.
    pub fn merged(&self, other: &Self) -> Self {
        let (a, b) = (&self.counts, &other.counts);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                out.push(a[i]);
                i += 1;
            } else if i == a.len() || b[j].0 < a[i].0 {
                out.push(b[j]);
                j += 1;
            } else {
                out.push((a[i].0, a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
        BitFlipDistribution {
            counts: out,
            total: self.total + other.total,
        }
    }
}

impl SparseDistribution for BitFlipDistribution {
    fn support_len(&self) -> usize {
        self.counts.len()
    }
    fn entry(&self, i: usize) -> (u32, f64) {
        let (idx, c) = self.counts[i];
        (idx, c as f64 / self.total as f64)
    }
}

/// Normalised weights, used for closed-form distributions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityDistribution {
    entries: Vec<(u32, f64)>,
}

impl ProbabilityDistribution {
    /// Normalises non-negative weights; zero weights are dropped.
    pub fn from_weights(mut weights: Vec<(u32, f64)>) -> Self {
        weights.retain(|&(_, w)| w > 0.0);
        weights.sort_by_key(|&(i, _)| i);
        let total: f64 = weights.iter().map(|&(_, w)| w).sum();
        for (_, w) in weights.iter_mut() {
            *w /= total;
        }
        ProbabilityDistribution { entries: weights }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl SparseDistribution for ProbabilityDistribution {
    fn support_len(&self) -> usize {
        self.entries.len()
    }
    fn entry(&self, i: usize) -> (u32, f64) {
        self.entries[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_from_repeats() {
        let d = BitFlipDistribution::from_indices([5, 5, 9]);
        assert_eq!(d.counts(), &[(5, 2), (9, 1)]);
        assert_eq!(d.total(), 3);
        assert_eq!(d.probability(5), 2.0 / 3.0);
        assert_eq!(d.probability(9), 1.0 / 3.0);
        assert_eq!(d.probability(4), 0.0);
        assert!(BitFlipDistribution::from_indices([]).is_empty());
    }

    #[test]
    fn merge_sums_counts() {
        let a = BitFlipDistribution::from_indices([1, 2, 2]);
        let b = BitFlipDistribution::from_indices([2, 3]);
        let m = a.merged(&b);
        assert_eq!(m.counts(), &[(1, 1), (2, 3), (3, 1)]);
        assert_eq!(m.total(), 5);
        assert_eq!(m, b.merged(&a));
    }

    #[test]
    fn serde_checks_totals() {
        let d = BitFlipDistribution::from_indices([3, 1, 3]);
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(
            serde_json::from_str::<BitFlipDistribution>(&json).unwrap(),
            d
        );
        assert!(
            serde_json::from_str::<BitFlipDistribution>(r#"{"counts":[[1,1]],"total":2}"#).is_err()
        );
        assert!(serde_json::from_str::<BitFlipDistribution>(
            r#"{"counts":[[2,1],[1,1]],"total":2}"#
        )
        .is_err());
    }

    #[test]
    fn weights_normalise() {
        let p = ProbabilityDistribution::from_weights(vec![(4, 3.0), (1, 1.0), (7, 0.0)]);
        assert_eq!(p.entries(), &[(1, 0.25), (4, 0.75)]);
    }
}
