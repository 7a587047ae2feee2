use crate::error::{Error, Result};

/// Probability that two independent samples of `d` chunks out of `n`
/// share at least one chunk: `1 - prod_{i<d} (n-d-i)/(n-i)`.
pub fn overlap_probability(n: u64, d: u64) -> Result<f64> {
    if d == 0 || d > n {
        return Err(Error::Usage(format!("need 1 <= d <= N, got d={d}, N={n}")));
    }
    if 2 * d > n {
        return Ok(1.0);
    }
    let log_miss: f64 = (0..d).map(|i| (-(d as f64) / (n - i) as f64).ln_1p()).sum();
    Ok(-log_miss.exp_m1())
}

/// Probability that `d` chunks drawn out of `n` hit at least one of the `s`
/// chunks already held in a reference: `1 - C(n-s, d) / C(n, d)`.
pub fn reference_overlap_probability(n: u64, s: u64, d: u64) -> Result<f64> {
    if s > n || d > n {
        return Err(Error::Usage(format!(
            "need S <= N and d <= N, got N={n}, S={s}, d={d}"
        )));
    }
    if d + s > n {
        return Ok(1.0);
    }
    let log_miss: f64 = (0..d).map(|i| (-(s as f64) / (n - i) as f64).ln_1p()).sum();
    Ok(-log_miss.exp_m1())
}

/// Smallest `d` whose overlap probability with an `s`-chunk reference
/// reaches `target`.
pub fn required_sample_size(n: u64, s: u64, target: f64) -> Result<u64> {
    if s >= n {
        return Err(Error::Usage(format!("need S < N, got S={s}, N={n}")));
    }
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Usage(format!("target {target} outside (0, 1)")));
    }
    if s == 0 {
        return Err(Error::Unreachable(
            "an empty reference can never be overlapped".into(),
        ));
    }
    let miss_target = (1.0 - target).ln();
    let mut log_miss = 0.0f64;
    for d in 1..=n - s + 1 {
        let i = d - 1;
        if i + s >= n {
            return Ok(d);
        }
        log_miss += (-(s as f64) / (n - i) as f64).ln_1p();
        if log_miss <= miss_target {
            return Ok(d);
        }
    }
    Ok(n - s + 1)
}
