use crate::error::{Error, Result};
use crate::hammering::SparseDistribution;

#[inline]
fn half_terms(p: f64, q: f64) -> f64 {
    let m = p + q;
    p * (2.0 * p / m).log2() + q * (2.0 * q / m).log2()
}

/// Jensen-Shannon divergence in bits, in `[0, 1]`.
///
/// Walks both supports in index order; mass found on one side only
/// contributes its full weight, so disjoint supports give exactly 1.
pub fn js_divergence<P, Q>(p: &P, q: &Q) -> Result<f64>
where
    P: SparseDistribution + ?Sized,
    Q: SparseDistribution + ?Sized,
{
    let (np, nq) = (p.support_len(), q.support_len());
    if np == 0 || nq == 0 {
        return Err(Error::UndefinedInput(
            "divergence of an empty distribution".into(),
        ));
    }
    let (mut i, mut j) = (0, 0);
    let mut only_p = 0.0;
    let mut only_q = 0.0;
    let mut shared = 0.0;
    while i < np || j < nq {
        let a = (i < np).then(|| p.entry(i));
        let b = (j < nq).then(|| q.entry(j));
        match (a, b) {
            (Some((ia, pa)), Some((ib, qb))) if ia == ib => {
                shared += half_terms(pa, qb);
                i += 1;
                j += 1;
            }
            (Some((ia, pa)), Some((ib, _))) if ia < ib => {
                only_p += pa;
                i += 1;
            }
            (Some((_, pa)), None) => {
                only_p += pa;
                i += 1;
            }
            (_, Some((_, qb))) => {
                only_q += qb;
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    Ok((0.5 * ((only_p + only_q) + shared)).clamp(0.0, 1.0))
}
