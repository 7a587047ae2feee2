use std::collections::HashMap;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Above this many factors `log2 C(n, k)` switches from a direct sum to
/// log-gamma.
const DIRECT_TERMS: u64 = 64;

/// `log2 C(n, k)`: bits needed to name which `k` of `n` cells flipped.
pub fn theoretical_entropy_bits(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::Usage(format!("k={k} exceeds n={n}")));
    }
    let k = k.min(n - k);
    if k <= DIRECT_TERMS {
        return Ok((0..k)
            .map(|i| ((n - i) as f64 / (k - i) as f64).log2())
            .sum());
    }
    let (n, k) = (n as f64, k as f64);
    Ok((ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)) / std::f64::consts::LN_2)
}

/// Bits needed to tell `population` items apart.
pub fn required_entropy_bits(population: f64) -> Result<f64> {
    if population.is_nan() || population < 1.0 {
        return Err(Error::Usage(format!("population {population} below 1")));
    }
    Ok(population.log2())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalEntropy {
    pub bits: f64,
    /// `bits / log2(chunks)`; 1.0 for a single chunk.
    pub normalized: f64,
    pub chunks: usize,
    pub distinct_sets: usize,
}

/// Shannon entropy of the partition of chunks into classes with exactly
/// equal flip sets.
pub fn empirical_entropy<S: AsRef<[u32]>>(flip_sets: &[S]) -> Result<EmpiricalEntropy> {
    if flip_sets.is_empty() {
        return Err(Error::Usage("no flip sets".into()));
    }
    let mut classes: HashMap<Vec<u32>, usize> = HashMap::new();
    for s in flip_sets {
        let mut key = s.as_ref().to_vec();
        key.sort_unstable();
        key.dedup();
        *classes.entry(key).or_default() += 1;
    }
    let n = flip_sets.len();
    let mut sizes: Vec<usize> = classes.into_values().collect();
    sizes.sort_unstable();
    let bits = if sizes.len() == 1 {
        0.0
    } else {
        sizes
            .iter()
            .map(|&c| {
                let p = c as f64 / n as f64;
                -p * p.log2()
            })
            .sum::<f64>()
            .max(0.0)
    };
    let normalized = if sizes.len() == n {
        1.0
    } else {
        (bits / (n as f64).log2()).clamp(0.0, 1.0)
    };
    Ok(EmpiricalEntropy {
        bits,
        normalized,
        chunks: n,
        distinct_sets: sizes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stated_values() {
        let b = theoretical_entropy_bits(65_536, 5).unwrap();
        assert!((b - 73.09).abs() < 0.01, "{b}");
        let b = theoretical_entropy_bits(524_288, 4).unwrap();
        assert!((b - 71.41).abs() < 0.01, "{b}");
        let b = theoretical_entropy_bits(16_777_216, 3).unwrap();
        assert!((b - 69.4).abs() < 0.05, "{b}");
        assert_eq!(theoretical_entropy_bits(1024, 1).unwrap(), 10.0);
        assert_eq!(theoretical_entropy_bits(9, 0).unwrap(), 0.0);
        assert!(theoretical_entropy_bits(3, 4).is_err());
    }

    #[test]
    fn required_bits() {
        assert!((required_entropy_bits(1e18).unwrap() - 59.79).abs() < 0.01);
        assert!((required_entropy_bits(1e17).unwrap() - 56.47).abs() < 0.01);
        assert_eq!(required_entropy_bits(1.0).unwrap(), 0.0);
        assert!(required_entropy_bits(0.5).is_err());
    }

    #[test]
    fn partitions() {
        let same = vec![vec![1u32, 2]; 5];
        let e = empirical_entropy(&same).unwrap();
        assert_eq!((e.bits, e.normalized), (0.0, 0.0));

        let distinct: Vec<Vec<u32>> = (0..4096).map(|i| vec![i]).collect();
        let e = empirical_entropy(&distinct).unwrap();
        assert!((e.bits - 12.0).abs() < 1e-9);
        assert_eq!(e.normalized, 1.0);

        let halves: Vec<Vec<u32>> = (0..6).map(|i| vec![i % 2]).collect();
        let e = empirical_entropy(&halves).unwrap();
        assert!((e.bits - 1.0).abs() < 1e-12);
        assert!((e.normalized - 1.0 / 6f64.log2()).abs() < 1e-12);

        // order of indices within a set does not matter
        let e = empirical_entropy(&[vec![2u32, 1], vec![1, 2]]).unwrap();
        assert_eq!(e.distinct_sets, 1);
        assert!(empirical_entropy::<Vec<u32>>(&[]).is_err());
    }
}
