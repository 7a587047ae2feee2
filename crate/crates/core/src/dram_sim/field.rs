use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{tag, SeedStream};

/// Direction of a flip against the implicit data pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FlipDirection {
    #[serde(rename = "0->1")]
    ZeroToOne,
    #[serde(rename = "1->0")]
    OneToZero,
}

/// Generative parameters of the per-cell susceptibility field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SusceptibilityParams {
    /// Fraction of cells that can flip at all.
    pub density: f64,
    /// Susceptibilities are log-uniform over `[s_min, s_max]`.
    pub s_min: f64,
    pub s_max: f64,
}

impl Default for SusceptibilityParams {
    fn default() -> Self {
        SusceptibilityParams {
            density: 0.004,
            s_min: 1e-9,
            s_max: 1e-5,
        }
    }
}

impl SusceptibilityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::Config(format!(
                "susceptibility density {} outside (0, 1]",
                self.density
            )));
        }
        if !(self.s_min > 0.0 && self.s_min <= self.s_max && self.s_max <= 1.0) {
            return Err(Error::Config(format!(
                "susceptibility range [{}, {}] must satisfy 0 < s_min <= s_max <= 1",
                self.s_min, self.s_max
            )));
        }
        Ok(())
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.s_min == self.s_max {
            return self.s_min;
        }
        let (lo, hi) = (self.s_min.ln(), self.s_max.ln());
        rng.random_range(lo..hi).exp()
    }
}

/// One re-seating event applied on top of the base field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReseatLayer {
    pub seed: u64,
    /// Fraction of entries dropped and redrawn.
    pub fraction: f64,
    /// Survivors are scaled by a factor uniform in `[1 - jitter, 1 + jitter]`.
    pub jitter: f64,
}

/// A susceptible cell of one row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub column: u32,
    pub susceptibility: f64,
    pub direction: FlipDirection,
}

/// Sparse map from capacitor to flip susceptibility.
///
/// The field is procedural: the entries of a row are regenerated on demand
/// from `(seed, global row)` and the stack of re-seat layers, so a device is
/// fully described by a handful of numbers and never needs its cells stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SusceptibilityField {
    pub params: SusceptibilityParams,
    pub seed: u64,
    pub cells_per_row: u32,
    #[serde(default)]
    pub layers: Vec<ReseatLayer>,
}

impl SusceptibilityField {
    pub fn new(params: SusceptibilityParams, seed: u64, cells_per_row: u32) -> Result<Self> {
        params.validate()?;
        Ok(SusceptibilityField {
            params,
            seed,
            cells_per_row,
            layers: Vec::new(),
        })
    }

    pub fn density(&self) -> f64 {
        self.params.density
    }

    fn direction(&self, global_row: u64, column: u32) -> FlipDirection {
        let idx = global_row * self.cells_per_row as u64 + column as u64;
        if SeedStream::new(self.seed).fork(tag::DIRECTION).unit(idx) < 0.5 {
            FlipDirection::OneToZero
        } else {
            FlipDirection::ZeroToOne
        }
    }

    fn fresh_cells(&self, stream: SeedStream, density: f64, global_row: u64) -> Vec<Cell> {
        let mut rng = stream.fork(global_row).rng();
        let n = self.cells_per_row as u64;
        let k = Binomial::new(n, density)
            .expect("density validated")
            .sample(&mut rng) as usize;
        let mut columns = rand::seq::index::sample(&mut rng, n as usize, k).into_vec();
        columns.sort_unstable();
        columns
            .into_iter()
            .map(|c| Cell {
                column: c as u32,
                susceptibility: self.params.draw(&mut rng),
                direction: self.direction(global_row, c as u32),
            })
            .collect()
    }

    /// Susceptible cells of a row, sorted by column.
    pub fn row_cells(&self, global_row: u64) -> Vec<Cell> {
        let base = SeedStream::new(self.seed).fork(tag::FIELD);
        let mut cells = self.fresh_cells(base, self.params.density, global_row);
        for layer in &self.layers {
            cells = self.apply_layer(layer, cells, global_row);
        }
        cells
    }

    fn apply_layer(&self, layer: &ReseatLayer, cells: Vec<Cell>, global_row: u64) -> Vec<Cell> {
        let stream = SeedStream::new(layer.seed).fork(tag::RESEAT);
        let coins = stream.fork(global_row);
        let mut out: Vec<Cell> = cells
            .into_iter()
            .filter_map(|mut c| {
                let key = 2 * c.column as u64;
                if coins.unit(key) < layer.fraction {
                    return None;
                }
                let factor = 1.0 + layer.jitter * (2.0 * coins.unit(key + 1) - 1.0);
                c.susceptibility = (c.susceptibility * factor).clamp(f64::MIN_POSITIVE, 1.0);
                Some(c)
            })
            .collect();
        if layer.fraction > 0.0 {
            let fresh = self.fresh_cells(
                stream.fork(tag::FIELD),
                (self.params.density * layer.fraction).min(1.0),
                global_row,
            );
            let survivors = out.len();
            for c in fresh {
                if out[..survivors]
                    .binary_search_by_key(&c.column, |x| x.column)
                    .is_err()
                {
                    out.push(c);
                }
            }
            out.sort_unstable_by_key(|c| c.column);
        }
        out
    }

    /// Adds a re-seat layer.
    pub fn perturbed(&self, layer: ReseatLayer) -> Self {
        let mut next = self.clone();
        next.layers.push(layer);
        next
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(seed: u64) -> SusceptibilityField {
        SusceptibilityField::new(SusceptibilityParams::default(), seed, 65_536).unwrap()
    }

    #[test]
    fn rows_are_deterministic_sorted_and_in_range() {
        let f = field(7);
        for row in [0u64, 1, 99, 1 << 20] {
            let a = f.row_cells(row);
            assert_eq!(a, f.row_cells(row));
            assert!(a.windows(2).all(|w| w[0].column < w[1].column));
            for c in &a {
                assert!(c.column < 65_536);
                assert!(c.susceptibility > 0.0 && c.susceptibility <= 1.0);
                assert!(c.susceptibility >= 1e-9 * 0.999 && c.susceptibility <= 1e-5 * 1.001);
            }
        }
    }

    #[test]
    fn density_matches_on_average() {
        let f = field(3);
        let n: usize = (0..200).map(|r| f.row_cells(r).len()).sum();
        let expected = 200.0 * 65_536.0 * 0.004;
        assert!(
            (n as f64 - expected).abs() < 0.03 * expected,
            "{n} vs {expected}"
        );
    }

    #[test]
    fn distinct_seeds_differ() {
        assert_ne!(field(1).row_cells(0), field(2).row_cells(0));
    }

    #[test]
    fn layers_resample_and_jitter() {
        let f = field(5);
        let base = f.row_cells(10);
        let same = f.perturbed(ReseatLayer {
            seed: 1,
            fraction: 0.0,
            jitter: 0.0,
        });
        assert_eq!(same.row_cells(10), base);

        let total = f.perturbed(ReseatLayer {
            seed: 9,
            fraction: 1.0,
            jitter: 0.2,
        });
        let fresh = total.row_cells(10);
        let shared = fresh
            .iter()
            .filter(|c| {
                base.iter()
                    .any(|b| b.column == c.column && b.susceptibility == c.susceptibility)
            })
            .count();
        assert_eq!(shared, 0);

        let half = f.perturbed(ReseatLayer {
            seed: 9,
            fraction: 0.5,
            jitter: 0.2,
        });
        let cells = half.row_cells(10);
        let kept = cells
            .iter()
            .filter(|c| base.iter().any(|b| b.column == c.column))
            .count();
        let frac = kept as f64 / base.len() as f64;
        assert!((0.35..0.65).contains(&frac), "kept {frac}");
        for c in &cells {
            if let Some(b) = base.iter().find(|b| b.column == c.column) {
                assert_eq!(c.direction, b.direction);
            }
        }
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = SusceptibilityParams {
            density: 0.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        p.density = 1.5;
        assert!(p.validate().is_err());
        let p = SusceptibilityParams {
            density: 0.1,
            s_min: 1e-3,
            s_max: 1e-4,
        };
        assert!(p.validate().is_err());
    }
}
