use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parity of the set bits of `value`.
#[inline]
pub const fn parity(value: u64) -> u64 {
    (value.count_ones() & 1) as u64
}

/// Physical-address decomposition through XOR functions.
///
/// Address bits split into three disjoint classes: column bits (explicit
/// positions), row bits (`row_bit_lsb..address_width`) and the remaining
/// "free" bits, which are solved for when composing so that every channel,
/// rank and bank function takes its requested value. The number of free bits
/// must equal the number of functions and the resulting GF(2) system must be
/// invertible, which makes decomposition a bijection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MappingFile", into = "MappingFile")]
pub struct AddressMapping {
    name: String,
    address_width: u8,
    column_bits: Vec<u8>,
    row_bit_lsb: u8,
    bank_fn_masks: Vec<u64>,
    rank_fn_masks: Vec<u64>,
    channel_fn_masks: Vec<u64>,
    free_bits: Vec<u8>,
    /// Row `j` selects which residuals feed free bit `j`.
    inverse: Vec<u64>,
}

/// Decomposed address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct AddressComponents {
    pub channel: u32,
    pub rank: u32,
    pub bank: u32,
    pub row: u64,
    pub column: u64,
}

impl AddressMapping {
    pub fn new(
        name: impl Into<String>,
        address_width: u8,
        column_bits: Vec<u8>,
        row_bit_lsb: u8,
        bank_fn_masks: Vec<u64>,
        rank_fn_masks: Vec<u64>,
        channel_fn_masks: Vec<u64>,
    ) -> Result<Self> {
        let name = name.into();
        if address_width == 0 || address_width > 63 {
            return Err(Error::Config(format!(
                "{name}: address width {address_width} outside 1..=63"
            )));
        }
        if row_bit_lsb >= address_width {
            return Err(Error::Config(format!(
                "{name}: row bits start at {row_bit_lsb}, beyond address width {address_width}"
            )));
        }
        let limit = 1u64 << address_width;
        let mut column_mask = 0u64;
        for &b in &column_bits {
            if b >= row_bit_lsb {
                return Err(Error::Config(format!(
                    "{name}: column bit {b} overlaps the row bits"
                )));
            }
            if column_mask & (1 << b) != 0 {
                return Err(Error::Config(format!("{name}: duplicate column bit {b}")));
            }
            column_mask |= 1 << b;
        }
        let functions: Vec<u64> = channel_fn_masks
            .iter()
            .chain(&rank_fn_masks)
            .chain(&bank_fn_masks)
            .copied()
            .collect();
        for &m in &functions {
            if m == 0 || m >= limit {
                return Err(Error::Config(format!(
                    "{name}: mask {m:#x} does not fit a {address_width}-bit address"
                )));
            }
        }
        let free_bits: Vec<u8> = (0..row_bit_lsb)
            .filter(|b| column_mask & (1 << b) == 0)
            .collect();
        if free_bits.len() != functions.len() {
            return Err(Error::Config(format!(
                "{name}: {} functions but {} non-column bits below the row bits",
                functions.len(),
                free_bits.len()
            )));
        }
        let inverse = invert(&functions, &free_bits).ok_or_else(|| {
            Error::Config(format!(
                "{name}: XOR functions are not independent on the free bits"
            ))
        })?;
        Ok(AddressMapping {
            name,
            address_width,
            column_bits,
            row_bit_lsb,
            bank_fn_masks,
            rank_fn_masks,
            channel_fn_masks,
            free_bits,
            inverse,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn address_width(&self) -> u8 {
        self.address_width
    }
    pub fn row_bit_lsb(&self) -> u8 {
        self.row_bit_lsb
    }
    pub fn row_bits(&self) -> u8 {
        self.address_width - self.row_bit_lsb
    }
    pub fn column_bits(&self) -> &[u8] {
        &self.column_bits
    }
    pub fn bank_fn_masks(&self) -> &[u64] {
        &self.bank_fn_masks
    }
    pub fn rank_fn_masks(&self) -> &[u64] {
        &self.rank_fn_masks
    }
    pub fn channel_fn_masks(&self) -> &[u64] {
        &self.channel_fn_masks
    }
    pub fn banks(&self) -> u32 {
        1 << self.bank_fn_masks.len()
    }
    pub fn ranks(&self) -> u32 {
        1 << self.rank_fn_masks.len()
    }
    pub fn channels(&self) -> u32 {
        1 << self.channel_fn_masks.len()
    }

    fn functions(&self) -> impl Iterator<Item = u64> + '_ {
        self.channel_fn_masks
            .iter()
            .chain(&self.rank_fn_masks)
            .chain(&self.bank_fn_masks)
            .copied()
    }

    pub fn decompose(&self, addr: u64) -> Result<AddressComponents> {
        if addr >> self.address_width != 0 {
            return Err(Error::Usage(format!(
                "address {addr:#x} exceeds the {}-bit space of {}",
                self.address_width, self.name
            )));
        }
        let eval = |masks: &[u64]| {
            masks
                .iter()
                .enumerate()
                .fold(0u32, |acc, (i, &m)| acc | ((parity(addr & m) as u32) << i))
        };
        let column = self
            .column_bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | (((addr >> b) & 1) << i));
        Ok(AddressComponents {
            channel: eval(&self.channel_fn_masks),
            rank: eval(&self.rank_fn_masks),
            bank: eval(&self.bank_fn_masks),
            row: addr >> self.row_bit_lsb,
            column,
        })
    }

    pub fn compose(&self, c: &AddressComponents) -> Result<u64> {
        let check = |what: &str, v: u64, count: usize| {
            if v >> count != 0 {
                Err(Error::Usage(format!(
                    "{what} {v} is not reachable under {} ({count} bits)",
                    self.name
                )))
            } else {
                Ok(())
            }
        };
        check("channel", c.channel as u64, self.channel_fn_masks.len())?;
        check("rank", c.rank as u64, self.rank_fn_masks.len())?;
        check("bank", c.bank as u64, self.bank_fn_masks.len())?;
        check("row", c.row, self.row_bits() as usize)?;
        check("column", c.column, self.column_bits.len())?;

        let mut addr = c.row << self.row_bit_lsb;
        for (i, &b) in self.column_bits.iter().enumerate() {
            addr |= ((c.column >> i) & 1) << b;
        }
        let targets = (0..self.channel_fn_masks.len())
            .map(|i| (c.channel >> i) & 1)
            .chain((0..self.rank_fn_masks.len()).map(|i| (c.rank >> i) & 1))
            .chain((0..self.bank_fn_masks.len()).map(|i| (c.bank >> i) & 1));
        let residual = self
            .functions()
            .zip(targets)
            .enumerate()
            .fold(0u64, |acc, (i, (m, t))| {
                acc | (((t as u64) ^ parity(addr & m)) << i)
            });
        for (j, &bit) in self.free_bits.iter().enumerate() {
            addr |= parity(self.inverse[j] & residual) << bit;
        }
        Ok(addr)
    }

    /// Same bank (channel, rank and bank equal) and a different row: the
    /// condition for a row-buffer conflict.
    pub fn is_row_conflict(&self, a: u64, b: u64) -> Result<bool> {
        let (x, y) = (self.decompose(a)?, self.decompose(b)?);
        Ok(x.channel == y.channel && x.rank == y.rank && x.bank == y.bank && x.row != y.row)
    }
}

/// Gauss-Jordan inversion over GF(2). `functions[i]` restricted to
/// `free_bits` forms row `i` of the coefficient matrix.
fn invert(functions: &[u64], free_bits: &[u8]) -> Option<Vec<u64>> {
    let k = functions.len();
    if k == 0 {
        return Some(Vec::new());
    }
    // rows[i]: coefficient bits (by free-bit index) | augmented identity in high word
    let mut coeff: Vec<u64> = functions
        .iter()
        .map(|&m| {
            free_bits
                .iter()
                .enumerate()
                .fold(0u64, |acc, (j, &b)| acc | (((m >> b) & 1) << j))
        })
        .collect();
    let mut aug: Vec<u64> = (0..k).map(|i| 1u64 << i).collect();
    for col in 0..k {
        let pivot = (col..k).find(|&r| coeff[r] >> col & 1 == 1)?;
        coeff.swap(col, pivot);
        aug.swap(col, pivot);
        for r in 0..k {
            if r != col && coeff[r] >> col & 1 == 1 {
                coeff[r] ^= coeff[col];
                aug[r] ^= aug[col];
            }
        }
    }
    // coeff is now identity: free bit j = parity(aug[j] & residual)
    Some(aug)
}

/// On-disk form: masks written as hex strings, exactly like `0x24000`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MappingFile {
    pub name: String,
    pub address_width: u8,
    pub column_bits: Vec<u8>,
    pub row_bit_lsb: u8,
    pub bank_fn_masks: Vec<String>,
    #[serde(default)]
    pub rank_fn_masks: Vec<String>,
    #[serde(default)]
    pub channel_fn_masks: Vec<String>,
}

fn parse_hex(s: &str) -> Result<u64> {
    let digits = s
        .strip_prefix("0x")
        .or_else(|| s.strip_prefix("0X"))
        .ok_or_else(|| Error::Config(format!("mask {s:?} must be written as 0x...")))?;
    u64::from_str_radix(digits, 16).map_err(|e| Error::Config(format!("mask {s:?}: {e}")))
}

impl TryFrom<MappingFile> for AddressMapping {
    type Error = Error;

    fn try_from(f: MappingFile) -> Result<Self> {
        let masks = |v: &[String]| v.iter().map(|s| parse_hex(s)).collect::<Result<Vec<_>>>();
        AddressMapping::new(
            f.name,
            f.address_width,
            f.column_bits,
            f.row_bit_lsb,
            masks(&f.bank_fn_masks)?,
            masks(&f.rank_fn_masks)?,
            masks(&f.channel_fn_masks)?,
        )
    }
}

impl From<AddressMapping> for MappingFile {
    fn from(m: AddressMapping) -> Self {
        let hex = |v: &[u64]| v.iter().map(|m| format!("{m:#x}")).collect();
        MappingFile {
            bank_fn_masks: hex(&m.bank_fn_masks),
            rank_fn_masks: hex(&m.rank_fn_masks),
            channel_fn_masks: hex(&m.channel_fn_masks),
            name: m.name,
            address_width: m.address_width,
            column_bits: m.column_bits,
            row_bit_lsb: m.row_bit_lsb,
        }
    }
}
