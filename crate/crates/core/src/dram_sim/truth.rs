use super::device::{DimmDevice, Environment};
use super::hammer::{effective_activations, flip_probability, AggressorPair};
use crate::addrmap::{AddressMapping, ChunkHandle};
use crate::error::Result;
use crate::hammering::{sweep_plan, ProbabilityDistribution, SweepConfig};
use crate::templating::HammeringPattern;

/// Per-cell probability of flipping at least once during one sweep.
fn sweep_probabilities(
    device: &DimmDevice,
    mapping: &AddressMapping,
    chunk: ChunkHandle,
    pattern: &HammeringPattern,
    config: &SweepConfig,
    env: &Environment,
) -> Result<Vec<(u32, f64)>> {
    let plan = sweep_plan(device, mapping, chunk, config)?;
    if !pattern.evades(&device.trr) {
        return Ok(Vec::new());
    }
    let a_eff = effective_activations(pattern, device, config.activations, env);
    let g = &device.geometry;
    let mut out = Vec::new();
    for rel in 0..plan.rows {
        let row = plan.base_row + rel;
        let exposure: f64 = plan
            .pairs
            .iter()
            .flat_map(|&low| {
                AggressorPair::double_sided(config.bank.rank, config.bank.bank, plan.base_row + low)
                    .victims(g.rows_per_bank)
            })
            .filter(|&(r, _)| r == row)
            .map(|(_, w)| w)
            .sum();
        if exposure == 0.0 {
            continue;
        }
        let global = g.global_row(config.bank.rank, config.bank.bank, row);
        for cell in device.field.row_cells(global) {
            let q = flip_probability(cell.susceptibility, a_eff, exposure);
            if q > 0.0 {
                out.push((rel * g.cells_per_row + cell.column, q));
            }
        }
    }
    Ok(out)
}

/// The distribution a sweep estimates as the number of repeats grows.
pub fn ground_truth_distribution(
    device: &DimmDevice,
    mapping: &AddressMapping,
    chunk: ChunkHandle,
    pattern: &HammeringPattern,
    config: &SweepConfig,
    env: &Environment,
) -> Result<ProbabilityDistribution> {
    let q = sweep_probabilities(device, mapping, chunk, pattern, config, env)?;
    Ok(ProbabilityDistribution::from_weights(q))
}

/// Expected number of distinct flipped cells in one sweep.
pub fn expected_sweep_flips(
    device: &DimmDevice,
    mapping: &AddressMapping,
    chunk: ChunkHandle,
    pattern: &HammeringPattern,
    config: &SweepConfig,
    env: &Environment,
) -> Result<f64> {
    let q = sweep_probabilities(device, mapping, chunk, pattern, config, env)?;
    Ok(q.iter().map(|(_, p)| p).sum())
}
