//! Physical-address translation, 2 MB chunk access and timing-based
//! geometry inference.

mod mapping;
pub mod stock;
mod timing;

pub use mapping::{parity, AddressComponents, AddressMapping, MappingFile};
pub use timing::{
    infer_geometry, GeometryCandidate, InferenceConfig, InferredGeometry, LatencyProbe,
    ProbeRecord, TimingOracle,
};

use serde::{Deserialize, Serialize};

use crate::dram_sim::DimmGeometry;
use crate::error::{Error, Result};

/// Low address bits a transparent huge page lets user space control.
pub const CHUNK_BITS: u32 = 21;

/// A 2 MB aligned chunk of physical memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChunkHandle {
    base: u64,
}

impl ChunkHandle {
    pub fn new(base: u64) -> Result<Self> {
        if base & ((1 << CHUNK_BITS) - 1) != 0 {
            return Err(Error::Usage(format!(
                "chunk base {base:#x} is not 2 MB aligned"
            )));
        }
        Ok(ChunkHandle { base })
    }

    /// The `index`-th chunk of physical memory.
    pub fn from_index(index: u32) -> Self {
        ChunkHandle {
            base: (index as u64) << CHUNK_BITS,
        }
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn index(&self) -> u64 {
        self.base >> CHUNK_BITS
    }

    pub fn controllable_bits(&self) -> u32 {
        CHUNK_BITS
    }

    pub fn contains(&self, addr: u64) -> bool {
        addr >> CHUNK_BITS == self.base >> CHUNK_BITS
    }
}

/// Rank and bank addressed by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct BankSelector {
    pub rank: u32,
    pub bank: u32,
}

/// A row of the chunk, identified by its offset from the chunk's first row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkRow {
    pub relative_row: u32,
    pub address: u64,
}

/// Number of rows of one bank reachable inside a chunk.
pub fn rows_per_chunk(mapping: &AddressMapping) -> u32 {
    let lsb = mapping.row_bit_lsb() as u32;
    if lsb >= CHUNK_BITS {
        1
    } else {
        1 << (CHUNK_BITS - lsb)
    }
}

/// Rows of `bank` inside `chunk`, in relative order, each with the address
/// of its first column.
pub fn chunk_rows_in_bank(
    chunk: ChunkHandle,
    bank: BankSelector,
    mapping: &AddressMapping,
    geometry: &DimmGeometry,
) -> Result<Vec<ChunkRow>> {
    if bank.rank >= geometry.ranks.min(mapping.ranks())
        || bank.bank >= geometry.banks_per_rank.min(mapping.banks())
    {
        return Err(Error::Usage(format!(
            "bank {bank:?} does not exist on a {} module",
            geometry.label()
        )));
    }
    let base = mapping.decompose(chunk.base())?;
    (0..rows_per_chunk(mapping))
        .map(|r| {
            let address = mapping.compose(&AddressComponents {
                channel: base.channel,
                rank: bank.rank,
                bank: bank.bank,
                row: base.row + r as u64,
                column: 0,
            })?;
            if !chunk.contains(address) {
                return Err(Error::Usage(format!(
                    "bank {bank:?} is not addressable within chunk {:#x}",
                    chunk.base()
                )));
            }
            Ok(ChunkRow {
                relative_row: r,
                address,
            })
        })
        .collect()
}

/// Addresses walking the rows of the chunk's base bank without touching any
/// row bit that feeds a channel function, so every address stays on the
/// base address's channel.
pub fn channel_safe_row_walk(chunk: ChunkHandle, mapping: &AddressMapping) -> Result<Vec<u64>> {
    let base = mapping.decompose(chunk.base())?;
    let channel_bits = mapping
        .channel_fn_masks()
        .iter()
        .fold(0u64, |acc, m| acc | m);
    let pinned_row_bits = channel_bits >> mapping.row_bit_lsb();
    (0..rows_per_chunk(mapping) as u64)
        .filter(|r| r & pinned_row_bits == 0)
        .map(|r| {
            mapping.compose(&AddressComponents {
                row: base.row + r,
                ..base
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::stock::{self, StockGeometry};
    use super::*;

    #[test]
    fn chunk_alignment() {
        assert!(ChunkHandle::new(0x20_0000).is_ok());
        assert!(ChunkHandle::new(0x20_0040).is_err());
        assert_eq!(ChunkHandle::from_index(3).base(), 0x60_0000);
    }

    #[test]
    fn rows_per_bank_in_chunk() {
        let chunk = ChunkHandle::from_index(5);
        let expect = [
            (StockGeometry::R1x8, 16),
            (StockGeometry::R2x8, 8),
            (StockGeometry::R1x16, 32),
            (StockGeometry::R2x16, 16),
        ];
        for (s, n) in expect {
            let (g, m) = (s.geometry(), s.mapping());
            for rank in 0..g.ranks {
                for bank in 0..g.banks_per_rank {
                    let rows =
                        chunk_rows_in_bank(chunk, BankSelector { rank, bank }, &m, &g).unwrap();
                    assert_eq!(rows.len(), n, "{}", s.label());
                    for (i, r) in rows.iter().enumerate() {
                        assert_eq!(r.relative_row as usize, i);
                        assert!(chunk.contains(r.address));
                        let c = m.decompose(r.address).unwrap();
                        assert_eq!((c.rank, c.bank), (rank, bank));
                        assert_eq!(c.row, 5 * n as u64 + i as u64);
                    }
                }
            }
        }
    }

    #[test]
    fn missing_bank_is_rejected() {
        let s = StockGeometry::R1x8;
        let r = chunk_rows_in_bank(
            ChunkHandle::from_index(0),
            BankSelector { rank: 1, bank: 0 },
            &s.mapping(),
            &s.geometry(),
        );
        assert!(matches!(r, Err(Error::Usage(_))));
    }

    #[test]
    fn single_channel_walk_is_plain() {
        let m = stock::kaby_lake_1r();
        let walk = channel_safe_row_walk(ChunkHandle::from_index(2), &m).unwrap();
        assert_eq!(walk.len(), 16);
        let rows: Vec<u64> = walk.iter().map(|&a| m.decompose(a).unwrap().row).collect();
        assert_eq!(rows, (32..48).collect::<Vec<_>>());
    }

    #[test]
    fn dual_channel_walk_keeps_bit_17_and_channel() {
        let m = stock::kaby_lake_1r_dual_channel();
        for idx in [0u32, 1, 7, 100] {
            let chunk = ChunkHandle::from_index(idx);
            let ch = m.decompose(chunk.base()).unwrap().channel;
            let walk = channel_safe_row_walk(chunk, &m).unwrap();
            assert_eq!(walk.len(), 8);
            for a in walk {
                assert!(chunk.contains(a));
                assert_eq!((a >> 17) & 1, (chunk.base() >> 17) & 1);
                assert_eq!(m.decompose(a).unwrap().channel, ch);
            }
        }
    }
}
