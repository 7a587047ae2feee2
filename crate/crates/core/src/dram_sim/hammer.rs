use std::borrow::Cow;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::device::{DimmDevice, Environment};
use super::field::{Cell, FlipDirection};
use crate::error::{Error, Result};
use crate::rng::SeedStream;
use crate::templating::HammeringPattern;

/// Weight of the row sandwiched between the two aggressors.
pub const VICTIM_WEIGHT: f64 = 1.0;
/// Weight of the rows just outside the pair.
pub const OUTER_WEIGHT: f64 = 0.02;

/// A double-sided aggressor pair `(low, low + 2)` in one bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AggressorPair {
    pub rank: u32,
    pub bank: u32,
    pub low: u32,
    pub high: u32,
}

impl AggressorPair {
    pub fn double_sided(rank: u32, bank: u32, low: u32) -> Self {
        AggressorPair {
            rank,
            bank,
            low,
            high: low + 2,
        }
    }

    /// Rows that can flip, with their weight, in row order.
    pub fn victims(&self, rows_per_bank: u32) -> Vec<(u32, f64)> {
        let mut out = Vec::with_capacity(3);
        if self.low > 0 {
            out.push((self.low - 1, OUTER_WEIGHT));
        }
        out.push((self.low + 1, VICTIM_WEIGHT));
        if self.high + 1 < rows_per_bank {
            out.push((self.high + 1, OUTER_WEIGHT));
        }
        out
    }
}

/// One flipped capacitor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Flip {
    pub index: u64,
    pub direction: FlipDirection,
}

/// Flips of one hammering run, sorted by index without duplicates.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlipSet {
    pub flips: Vec<Flip>,
}

impl FlipSet {
    pub fn len(&self) -> usize {
        self.flips.len()
    }
    pub fn is_empty(&self) -> bool {
        self.flips.is_empty()
    }
    pub fn indices(&self) -> impl Iterator<Item = u64> + '_ {
        self.flips.iter().map(|f| f.index)
    }
    pub fn contains(&self, index: u64) -> bool {
        self.flips.binary_search_by_key(&index, |f| f.index).is_ok()
    }
}

/// Memoised rows of one device's field.
#[derive(Debug, Default)]
pub struct RowCache {
    rows: HashMap<u64, Vec<Cell>>,
}

impl RowCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Pre-generates `rows`.
    pub fn fill(device: &DimmDevice, rows: impl IntoIterator<Item = u64>) -> Self {
        let mut cache = Self::new();
        for r in rows {
            cache
                .rows
                .entry(r)
                .or_insert_with(|| device.field.row_cells(r));
        }
        cache
    }

    pub fn get<'a>(&'a self, device: &DimmDevice, global_row: u64) -> Cow<'a, [Cell]> {
        match self.rows.get(&global_row) {
            Some(cells) => Cow::Borrowed(cells),
            None => Cow::Owned(device.field.row_cells(global_row)),
        }
    }
}

/// Effective activations the primaries receive.
pub fn effective_activations(
    pattern: &HammeringPattern,
    device: &DimmDevice,
    activations: u64,
    env: &Environment,
) -> f64 {
    activations as f64
        * pattern.primary_share(device.trr.refresh_interval_slots)
        * env.activation_scale
}

/// Closed-form flip probability of a cell.
#[inline]
pub fn flip_probability(susceptibility: f64, effective_activations: f64, weight: f64) -> f64 {
    -(-susceptibility * effective_activations * weight).exp_m1()
}

fn check_pair(device: &DimmDevice, pair: &AggressorPair, activations: u64) -> Result<()> {
    let g = &device.geometry;
    if pair.high != pair.low + 2 {
        return Err(Error::Usage(format!(
            "rows {} and {} are not a double-sided pair",
            pair.low, pair.high
        )));
    }
    if pair.high >= g.rows_per_bank || pair.rank >= g.ranks || pair.bank >= g.banks_per_rank {
        return Err(Error::Usage(format!(
            "pair {pair:?} outside a {} module",
            g.label()
        )));
    }
    if activations == 0 {
        return Err(Error::Usage("activations must be >= 1".into()));
    }
    Ok(())
}

/// Hammers `pair` with `pattern` and returns the cells that flipped.
pub fn hammer_execute(
    device: &DimmDevice,
    pattern: &HammeringPattern,
    pair: AggressorPair,
    activations: u64,
    env: &Environment,
    stream: SeedStream,
) -> Result<FlipSet> {
    hammer_cached(
        device,
        &RowCache::new(),
        pattern,
        pair,
        activations,
        env,
        stream,
    )
}

/// [`hammer_execute`] reading rows through `cache`.
pub fn hammer_cached(
    device: &DimmDevice,
    cache: &RowCache,
    pattern: &HammeringPattern,
    pair: AggressorPair,
    activations: u64,
    env: &Environment,
    stream: SeedStream,
) -> Result<FlipSet> {
    hammer_rows(
        device,
        cache,
        pattern,
        pair,
        activations,
        env,
        stream,
        |_| true,
    )
}

/// [`hammer_cached`] restricted to victim rows accepted by `keep`.
#[allow(clippy::too_many_arguments)]
pub fn hammer_rows(
    device: &DimmDevice,
    cache: &RowCache,
    pattern: &HammeringPattern,
    pair: AggressorPair,
    activations: u64,
    env: &Environment,
    stream: SeedStream,
    keep: impl Fn(u32) -> bool,
) -> Result<FlipSet> {
    check_pair(device, &pair, activations)?;
    env.validate()?;
    if !pattern.evades(&device.trr) {
        return Ok(FlipSet::default());
    }
    let a_eff = effective_activations(pattern, device, activations, env);
    let g = &device.geometry;
    let mut flips = Vec::new();
    for (row, weight) in pair.victims(g.rows_per_bank) {
        if !keep(row) {
            continue;
        }
        let global_row = g.global_row(pair.rank, pair.bank, row);
        let row_base = global_row * g.cells_per_row as u64;
        for cell in cache.get(device, global_row).iter() {
            let index = row_base + cell.column as u64;
            let p = flip_probability(cell.susceptibility, a_eff, weight);
            if stream.unit(index) < p {
                flips.push(Flip {
                    index,
                    direction: cell.direction,
                });
            }
        }
    }
    Ok(FlipSet { flips })
}

/// Rows the pattern's decoy slots land on, uniform in the bank and never on
/// the pair itself. They only shape the slot budget.
pub fn secondary_rows(
    pattern: &HammeringPattern,
    pair: AggressorPair,
    rows_per_bank: u32,
    stream: SeedStream,
) -> Vec<u32> {
    let n = pattern
        .secondary_slot_count()
        .min(rows_per_bank.saturating_sub(2) as usize);
    let mut out = Vec::with_capacity(n);
    let mut k = 0u64;
    while out.len() < n {
        let r = (stream.unit(k) * rows_per_bank as f64) as u32;
        k += 1;
        if r != pair.low && r != pair.high && !out.contains(&r) {
            out.push(r);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::addrmap::stock::StockGeometry;
    use crate::dram_sim::{create_population, PopulationSpec, TrrModel};

    fn device(trr: TrrModel) -> DimmDevice {
        let mut spec = PopulationSpec::new(1, StockGeometry::R1x8.geometry());
        spec.trr = trr;
        create_population(&spec, 4).unwrap().remove(0)
    }

    #[test]
    fn trr_blocks_plain_double_sided() {
        let d = device(TrrModel::default());
        let pair = AggressorPair::double_sided(0, 0, 10);
        let f = hammer_execute(
            &d,
            &HammeringPattern::double_sided(),
            pair,
            10_000_000,
            &Environment::default(),
            SeedStream::new(1),
        )
        .unwrap();
        assert!(f.is_empty());
        let f = hammer_execute(
            &d,
            &HammeringPattern::with_decoys(4, 1),
            pair,
            10_000_000,
            &Environment::default(),
            SeedStream::new(1),
        )
        .unwrap();
        assert!(!f.is_empty());
    }

    #[test]
    fn flips_are_local_sorted_and_unique() {
        let d = device(TrrModel::disabled());
        let g = d.geometry;
        let pair = AggressorPair::double_sided(0, 3, 500);
        let f = hammer_execute(
            &d,
            &HammeringPattern::double_sided(),
            pair,
            50_000_000,
            &Environment::default(),
            SeedStream::new(9),
        )
        .unwrap();
        assert!(!f.is_empty());
        assert!(f.flips.windows(2).all(|w| w[0].index < w[1].index));
        let cells = g.cells_per_row as u64;
        for idx in f.indices() {
            let row = g.global_row(0, 3, 0);
            let r = idx / cells - row;
            assert!([499, 501, 503].contains(&r), "row {r}");
        }
    }

    #[test]
    fn bad_pairs_are_usage_errors() {
        let d = device(TrrModel::disabled());
        let p = HammeringPattern::double_sided();
        let env = Environment::default();
        let s = SeedStream::new(0);
        let bad = [
            AggressorPair {
                rank: 0,
                bank: 0,
                low: 3,
                high: 4,
            },
            AggressorPair::double_sided(0, 0, 65_534),
            AggressorPair::double_sided(1, 0, 3),
            AggressorPair::double_sided(0, 16, 3),
        ];
        for pair in bad {
            assert!(matches!(
                hammer_execute(&d, &p, pair, 1, &env, s),
                Err(Error::Usage(_))
            ));
        }
        let ok = AggressorPair::double_sided(0, 0, 3);
        assert!(matches!(
            hammer_execute(&d, &p, ok, 0, &env, s),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn probability_law() {
        assert_eq!(flip_probability(0.0, 1e6, 1.0), 0.0);
        let p = flip_probability(1e-6, 1e6, 1.0);
        assert!((p - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        assert!(flip_probability(1e-6, 2e6, 1.0) > p);
        assert!(flip_probability(1e-6, 1e6, OUTER_WEIGHT) < p);
    }

    #[test]
    fn secondaries_avoid_the_pair() {
        let p = HammeringPattern::with_decoys(6, 1);
        let pair = AggressorPair::double_sided(0, 0, 1);
        for seed in 0..20 {
            let rows = secondary_rows(&p, pair, 8, SeedStream::new(seed));
            assert_eq!(rows.len(), 6);
            assert!(!rows.contains(&1) && !rows.contains(&3));
        }
    }
}
