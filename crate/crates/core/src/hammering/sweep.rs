use serde::{Deserialize, Serialize};

use super::distribution::BitFlipDistribution;
use crate::addrmap::{chunk_rows_in_bank, AddressMapping, BankSelector, ChunkHandle};
use crate::dram_sim::{
    hammer_rows, AggressorPair, DeviceId, DimmDevice, Environment, Flip, FlipSet, RowCache,
};
use crate::error::{Error, Result};
use crate::rng::{tag, SeedStream};
use crate::templating::HammeringPattern;

/// Which primary pairs of the chunk a sweep hammers.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowSubset {
    #[default]
    All,
    /// The first half of the pairs, rounded up.
    FirstHalf,
    /// Lower aggressor rows, relative to the chunk.
    Explicit(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub repeats: u32,
    /// Activations per primary pair.
    pub activations: u64,
    #[serde(default)]
    pub row_subset: RowSubset,
    #[serde(default)]
    pub bank: BankSelector,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            repeats: 8,
            activations: 10_000_000,
            row_subset: RowSubset::All,
            bank: BankSelector::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 || self.activations == 0 {
            return Err(Error::Config(
                "sweep repeats and activations must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Rows a sweep touches in one bank of one chunk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepPlan {
    /// Bank row of the chunk's first row.
    pub base_row: u32,
    pub rows: u32,
    /// Lower aggressor of each pair, relative to `base_row`.
    pub pairs: Vec<u32>,
}

/// Resolves the rows and pairs of a sweep without hammering.
pub fn sweep_plan(
    device: &DimmDevice,
    mapping: &AddressMapping,
    chunk: ChunkHandle,
    config: &SweepConfig,
) -> Result<SweepPlan> {
    config.validate()?;
    let g = &device.geometry;
    if chunk.index() >= g.chunk_count() {
        return Err(Error::Usage(format!(
            "chunk {} beyond the {} chunks of a {} module",
            chunk.index(),
            g.chunk_count(),
            g.label()
        )));
    }
    let rows = chunk_rows_in_bank(chunk, config.bank, mapping, g)?;
    let base_row = mapping.decompose(rows[0].address)?.row as u32;
    let n = rows.len() as u32;
    if base_row + n > g.rows_per_bank {
        return Err(Error::Usage(format!(
            "chunk {} maps past the last row of the bank",
            chunk.index()
        )));
    }
    let all: Vec<u32> = (0..n.saturating_sub(2)).collect();
    let pairs = match &config.row_subset {
        RowSubset::All => all,
        RowSubset::FirstHalf => all[..all.len().div_ceil(2)].to_vec(),
        RowSubset::Explicit(lows) => {
            if let Some(bad) = lows.iter().find(|&&l| l + 2 >= n) {
                return Err(Error::Usage(format!(
                    "pair starting at relative row {bad} leaves the {n}-row chunk"
                )));
            }
            let mut lows = lows.clone();
            lows.sort_unstable();
            lows.dedup();
            lows
        }
    };
    Ok(SweepPlan {
        base_row,
        rows: n,
        pairs,
    })
}

/// Flips recorded while sweeping one chunk `R` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkObservation {
    pub device_id: DeviceId,
    pub chunk_id: u32,
    pub seat_epoch: u32,
    /// One entry per repeat; indices are chunk-local.
    pub sweeps: Vec<FlipSet>,
    pub config: SweepConfig,
}

impl ChunkObservation {
    pub fn flip_count(&self) -> usize {
        self.sweeps.iter().map(FlipSet::len).sum()
    }
}

/// Sweeps every configured pair of the chunk `config.repeats` times.
pub fn hammering_sweep(
    device: &DimmDevice,
    mapping: &AddressMapping,
    chunk: ChunkHandle,
    pattern: &HammeringPattern,
    config: &SweepConfig,
    env: &Environment,
    stream: SeedStream,
) -> Result<ChunkObservation> {
    let plan = sweep_plan(device, mapping, chunk, config)?;
    let g = &device.geometry;
    let bank = config.bank;
    let first_global = g.global_row(bank.rank, bank.bank, plan.base_row);
    let cache = RowCache::fill(device, (0..plan.rows as u64).map(|r| first_global + r));
    let in_chunk = |row: u32| row >= plan.base_row && row < plan.base_row + plan.rows;
    let first_cell = first_global * g.cells_per_row as u64;

    let mut sweeps = Vec::with_capacity(config.repeats as usize);
    for rep in 0..config.repeats {
        let rep_stream = stream.fork(tag::SWEEP).fork(rep as u64);
        let mut flips: Vec<Flip> = Vec::new();
        for &low in &plan.pairs {
            let pair = AggressorPair::double_sided(bank.rank, bank.bank, plan.base_row + low);
            let set = hammer_rows(
                device,
                &cache,
                pattern,
                pair,
                config.activations,
                env,
                rep_stream.fork(tag::PAIR).fork(low as u64),
                in_chunk,
            )?;
            flips.extend(set.flips.into_iter().map(|f| Flip {
                index: f.index - first_cell,
                direction: f.direction,
            }));
        }
        flips.sort_unstable_by_key(|f| f.index);
        flips.dedup_by_key(|f| f.index);
        sweeps.push(FlipSet { flips });
    }
    Ok(ChunkObservation {
        device_id: device.id,
        chunk_id: chunk.index() as u32,
        seat_epoch: device.seat_epoch,
        sweeps,
        config: config.clone(),
    })
}

/// Counts over all repeats of an observation.
pub fn extract_distribution(obs: &ChunkObservation) -> BitFlipDistribution {
    BitFlipDistribution::from_indices(
        obs.sweeps
            .iter()
            .flat_map(|s| s.indices().map(|i| i as u32)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::addrmap::stock::StockGeometry;
    use crate::dram_sim::{create_population, FlipDirection, PopulationSpec, TrrModel};

    fn setup(s: StockGeometry) -> (DimmDevice, AddressMapping) {
        let mut spec = PopulationSpec::new(1, s.geometry());
        spec.trr = TrrModel::disabled();
        (create_population(&spec, 12).unwrap().remove(0), s.mapping())
    }

    #[test]
    fn pair_counts() {
        let (d, m) = setup(StockGeometry::R1x8);
        let chunk = ChunkHandle::from_index(3);
        let mut c = SweepConfig::default();
        assert_eq!(
            sweep_plan(&d, &m, chunk, &c).unwrap().pairs,
            (0..14).collect::<Vec<_>>()
        );
        c.row_subset = RowSubset::FirstHalf;
        assert_eq!(sweep_plan(&d, &m, chunk, &c).unwrap().pairs.len(), 7);
        c.row_subset = RowSubset::Explicit(vec![4, 1, 4]);
        assert_eq!(sweep_plan(&d, &m, chunk, &c).unwrap().pairs, vec![1, 4]);
        c.row_subset = RowSubset::Explicit(vec![14]);
        assert!(sweep_plan(&d, &m, chunk, &c).is_err());

        let (d, m) = setup(StockGeometry::R2x8);
        c.row_subset = RowSubset::All;
        assert_eq!(sweep_plan(&d, &m, chunk, &c).unwrap().pairs.len(), 6);
    }

    #[test]
    fn unreachable_bank_and_chunk() {
        let (d, m) = setup(StockGeometry::R1x8);
        let c = SweepConfig {
            bank: BankSelector { rank: 1, bank: 0 },
            ..Default::default()
        };
        assert!(matches!(
            hammering_sweep(
                &d,
                &m,
                ChunkHandle::from_index(0),
                &HammeringPattern::double_sided(),
                &c,
                &Environment::default(),
                SeedStream::new(0)
            ),
            Err(Error::Usage(_))
        ));
        let c = SweepConfig::default();
        let last = ChunkHandle::from_index(d.geometry.chunk_count() as u32);
        assert!(sweep_plan(&d, &m, last, &c).is_err());
    }

    #[test]
    fn observation_shape_and_locality() {
        let (d, m) = setup(StockGeometry::R1x8);
        let c = SweepConfig {
            repeats: 8,
            ..SweepConfig::default()
        };
        let obs = hammering_sweep(
            &d,
            &m,
            ChunkHandle::from_index(9),
            &HammeringPattern::double_sided(),
            &c,
            &Environment::default(),
            SeedStream::new(4),
        )
        .unwrap();
        assert_eq!(obs.sweeps.len(), 8);
        assert_eq!(obs.chunk_id, 9);
        assert!(obs.flip_count() > 0);
        for s in &obs.sweeps {
            assert!(s.flips.windows(2).all(|w| w[0].index < w[1].index));
            assert!(s.indices().all(|i| i < 16 * 65_536));
        }
    }

    #[test]
    fn distribution_from_observation() {
        let (d, _) = setup(StockGeometry::R1x8);
        let f = |i| Flip {
            index: i,
            direction: FlipDirection::ZeroToOne,
        };
        let obs = ChunkObservation {
            device_id: d.id,
            chunk_id: 0,
            seat_epoch: 0,
            sweeps: vec![
                FlipSet { flips: vec![f(5)] },
                FlipSet { flips: vec![f(5)] },
                FlipSet { flips: vec![f(9)] },
            ],
            config: SweepConfig::default(),
        };
        let dist = extract_distribution(&obs);
        assert_eq!(dist.counts(), &[(5, 2), (9, 1)]);
        let empty = ChunkObservation {
            sweeps: vec![FlipSet::default(); 3],
            ..obs
        };
        assert_eq!(extract_distribution(&empty).total(), 0);
    }
}
