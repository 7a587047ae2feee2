//! Stock mappings.
//!
//! The x8 bank functions are the Kaby Lake functions for one- and two-rank
//! modules (`bank0 = 0x2040`, `bank1 = 0x24000 | 0x44000`, ...). The x16
//! layouts keep the same column and `bank0` placement and start the row bits
//! one position lower per halving of the bank count, so a 1Rx16 module starts
//! its rows at bit 16 and a 2Rx16 module at bit 17, the same position as a
//! 1Rx8 module.

use serde::{Deserialize, Serialize};

use super::AddressMapping;
use crate::dram_sim::DimmGeometry;

const CELLS_PER_ROW: u32 = 65_536;
const ROWS_PER_BANK: u32 = 65_536;

fn low_columns() -> Vec<u8> {
    (0..=12).collect()
}

pub fn kaby_lake_1r() -> AddressMapping {
    AddressMapping::new(
        "kaby-lake-1rx8",
        33,
        low_columns(),
        17,
        vec![0x2040, 0x24000, 0x48000, 0x90000],
        vec![],
        vec![],
    )
    .expect("stock mapping")
}

pub fn kaby_lake_2r() -> AddressMapping {
    AddressMapping::new(
        "kaby-lake-2rx8",
        34,
        low_columns(),
        18,
        vec![0x2040, 0x44000, 0x88000, 0x110000],
        vec![0x220000],
        vec![],
    )
    .expect("stock mapping")
}

pub fn single_rank_x16() -> AddressMapping {
    AddressMapping::new(
        "1rx16",
        32,
        low_columns(),
        16,
        vec![0x2040, 0x14000, 0x28000],
        vec![],
        vec![],
    )
    .expect("stock mapping")
}

pub fn dual_rank_x16() -> AddressMapping {
    AddressMapping::new(
        "2rx16",
        33,
        low_columns(),
        17,
        vec![0x2040, 0x28000, 0x50000],
        vec![0x84000],
        vec![],
    )
    .expect("stock mapping")
}

/// Single-rank x8 layout on a dual-channel system. The channel is the parity
/// of bits 7, 9, 14 and 17; bit 7 leaves the column to become the channel's
/// solved bit.
pub fn kaby_lake_1r_dual_channel() -> AddressMapping {
    AddressMapping::new(
        "kaby-lake-1rx8-2ch",
        33,
        (0..=12).filter(|&b| b != 7).collect(),
        17,
        vec![0x2040, 0x24000, 0x48000, 0x90000],
        vec![],
        vec![(1 << 7) | (1 << 9) | (1 << 14) | (1 << 17)],
    )
    .expect("stock mapping")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StockGeometry {
    #[serde(rename = "1Rx8")]
    R1x8,
    #[serde(rename = "2Rx8")]
    R2x8,
    #[serde(rename = "1Rx16")]
    R1x16,
    #[serde(rename = "2Rx16")]
    R2x16,
}

impl StockGeometry {
    /// Probe order used by geometry inference: x8 before x16, one rank first.
    pub const ALL: [StockGeometry; 4] = [
        StockGeometry::R1x8,
        StockGeometry::R2x8,
        StockGeometry::R1x16,
        StockGeometry::R2x16,
    ];

    pub fn label(self) -> &'static str {
        match self {
            StockGeometry::R1x8 => "1Rx8",
            StockGeometry::R2x8 => "2Rx8",
            StockGeometry::R1x16 => "1Rx16",
            StockGeometry::R2x16 => "2Rx16",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|s| s.label().eq_ignore_ascii_case(label))
    }

    pub fn geometry(self) -> DimmGeometry {
        let (ranks, width_bits, banks_per_rank) = match self {
            StockGeometry::R1x8 => (1, 8, 16),
            StockGeometry::R2x8 => (2, 8, 16),
            StockGeometry::R1x16 => (1, 16, 8),
            StockGeometry::R2x16 => (2, 16, 8),
        };
        DimmGeometry {
            ranks,
            width_bits,
            banks_per_rank,
            rows_per_bank: ROWS_PER_BANK,
            cells_per_row: CELLS_PER_ROW,
            channels: 1,
        }
    }

    pub fn mapping(self) -> AddressMapping {
        match self {
            StockGeometry::R1x8 => kaby_lake_1r(),
            StockGeometry::R2x8 => kaby_lake_2r(),
            StockGeometry::R1x16 => single_rank_x16(),
            StockGeometry::R2x16 => dual_rank_x16(),
        }
    }

    /// Stock layout matching a geometry, if there is one.
    pub fn for_geometry(g: &DimmGeometry) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.geometry() == *g)
    }
}
