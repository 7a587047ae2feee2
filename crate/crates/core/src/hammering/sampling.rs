use crate::error::{Error, Result};
use crate::rng::{tag, SeedStream};

/// Draws `d` distinct chunk ids out of `n`, sorted, as an allocator would
/// hand them out.
pub fn sample_chunks(n: u32, d: u32, allocator_seed: u64) -> Result<Vec<u32>> {
    if d == 0 || d > n {
        return Err(Error::Usage(format!("cannot sample {d} chunks out of {n}")));
    }
    let mut rng = SeedStream::new(allocator_seed).fork(tag::ALLOCATION).rng();
    let mut ids: Vec<u32> = rand::seq::index::sample(&mut rng, n as usize, d as usize)
        .into_iter()
        .map(|i| i as u32)
        .collect();
    ids.sort_unstable();
    Ok(ids)
}
