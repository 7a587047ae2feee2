use crate::error::{Error, Result};

/// `|a ∩ b| / |a ∪ b|` of two sorted, duplicate-free index lists.
pub fn jaccard(a: &[u64], b: &[u64]) -> Result<f64> {
    if a.is_empty() && b.is_empty() {
        return Err(Error::UndefinedInput("jaccard of two empty sets".into()));
    }
    let (mut i, mut j, mut common) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    Ok(common as f64 / (a.len() + b.len() - common) as f64)
}
