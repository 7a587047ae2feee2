use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical organisation of a simulated module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DimmGeometry {
    pub ranks: u32,
    pub width_bits: u32,
    pub banks_per_rank: u32,
    pub rows_per_bank: u32,
    pub cells_per_row: u32,
    #[serde(default = "one")]
    pub channels: u32,
}

fn one() -> u32 {
    1
}

impl DimmGeometry {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("ranks", self.ranks),
            ("banks_per_rank", self.banks_per_rank),
            ("rows_per_bank", self.rows_per_bank),
            ("cells_per_row", self.cells_per_row),
            ("channels", self.channels),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!(
                    "geometry: {name} must be at least 1"
                )));
            }
        }
        if self.width_bits != 8 && self.width_bits != 16 {
            return Err(Error::Config(format!(
                "geometry: width must be x8 or x16, got x{}",
                self.width_bits
            )));
        }
        Ok(())
    }

    /// Label in the usual `2Rx8` notation.
    pub fn label(&self) -> String {
        format!("{}Rx{}", self.ranks, self.width_bits)
    }

    pub fn total_banks(&self) -> u64 {
        self.ranks as u64 * self.banks_per_rank as u64
    }

    pub fn total_capacitors(&self) -> u64 {
        self.total_banks() * self.rows_per_bank as u64 * self.cells_per_row as u64
    }

    pub fn capacity_bytes(&self) -> u64 {
        self.total_capacitors() / 8
    }

    /// Number of 2 MB chunks the module holds.
    pub fn chunk_count(&self) -> u64 {
        self.capacity_bytes() >> crate::addrmap::CHUNK_BITS
    }

    /// Flat bank index used for capacitor addressing.
    pub fn flat_bank(&self, rank: u32, bank: u32) -> u64 {
        rank as u64 * self.banks_per_rank as u64 + bank as u64
    }

    /// Global capacitor index of `(rank, bank, row, cell)`.
    pub fn capacitor_index(&self, rank: u32, bank: u32, row: u32, cell: u32) -> u64 {
        (self.flat_bank(rank, bank) * self.rows_per_bank as u64 + row as u64)
            * self.cells_per_row as u64
            + cell as u64
    }

    /// Global row index (bank-major) of `(rank, bank, row)`.
    pub fn global_row(&self, rank: u32, bank: u32, row: u32) -> u64 {
        self.flat_bank(rank, bank) * self.rows_per_bank as u64 + row as u64
    }
}
