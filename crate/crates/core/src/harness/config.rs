use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::addrmap::stock::StockGeometry;
use crate::addrmap::AddressMapping;
use crate::addrmap::BankSelector;
use crate::dram_sim::{PopulationSpec, SusceptibilityParams, TrrModel};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hammering::{Allocation, RowSubset, SessionConfig, SweepConfig};
use crate::matching::DEFAULT_TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Uniq,
    Stable,
    Reseat,
    Eff,
    Freq,
    Baseline,
    Geom,
    Birthday,
    Entropy,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 9] = [
        ScenarioKind::Uniq,
        ScenarioKind::Stable,
        ScenarioKind::Reseat,
        ScenarioKind::Eff,
        ScenarioKind::Freq,
        ScenarioKind::Baseline,
        ScenarioKind::Geom,
        ScenarioKind::Birthday,
        ScenarioKind::Entropy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Uniq => "uniq",
            ScenarioKind::Stable => "stable",
            ScenarioKind::Reseat => "reseat",
            ScenarioKind::Eff => "eff",
            ScenarioKind::Freq => "freq",
            ScenarioKind::Baseline => "baseline",
            ScenarioKind::Geom => "geom",
            ScenarioKind::Birthday => "birthday",
            ScenarioKind::Entropy => "entropy",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown scenario `{s}`")))
    }
}

/// Population sizes mirroring the evaluated module groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "2Rx8-36")]
    DualRankX8,
    #[serde(rename = "1Rx8-35")]
    SingleRankX8,
    #[serde(rename = "1Rx16-11")]
    SingleRankX16,
}

impl Preset {
    pub const ALL: [Preset; 3] = [
        Preset::DualRankX8,
        Preset::SingleRankX8,
        Preset::SingleRankX16,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Preset::DualRankX8 => "2Rx8-36",
            Preset::SingleRankX8 => "1Rx8-35",
            Preset::SingleRankX16 => "1Rx16-11",
        }
    }

    pub fn geometry(self) -> StockGeometry {
        match self {
            Preset::DualRankX8 => StockGeometry::R2x8,
            Preset::SingleRankX8 => StockGeometry::R1x8,
            Preset::SingleRankX16 => StockGeometry::R1x16,
        }
    }

    pub fn count(self) -> u32 {
        match self {
            Preset::DualRankX8 => 36,
            Preset::SingleRankX8 => 35,
            Preset::SingleRankX16 => 11,
        }
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown preset `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationConfig {
    #[serde(default = "default_preset")]
    pub preset: Preset,
    /// Overrides the preset's module count.
    pub count: Option<u32>,
    /// Overrides the preset's geometry.
    pub geometry: Option<StockGeometry>,
    #[serde(default)]
    pub susceptibility: SusceptibilityParams,
    #[serde(default)]
    pub trr: TrrModel,
}

fn default_preset() -> Preset {
    Preset::DualRankX8
}

impl Default for PopulationConfig {
    fn default() -> Self {
        PopulationConfig {
            preset: default_preset(),
            count: None,
            geometry: None,
            susceptibility: SusceptibilityParams::default(),
            trr: TrrModel::default(),
        }
    }
}

impl PopulationConfig {
    pub fn stock(&self) -> StockGeometry {
        self.geometry.unwrap_or(self.preset.geometry())
    }

    pub fn spec(&self) -> PopulationSpec {
        PopulationSpec {
            count: self.count.unwrap_or(self.preset.count()),
            geometry: self.stock().geometry(),
            susceptibility: self.susceptibility,
            trr: self.trr,
            manufacturer: None,
        }
    }

    pub fn mapping(&self) -> AddressMapping {
        self.stock().mapping()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SessionParams {
    pub chunks_per_session: u32,
    pub total_chunks: u32,
    pub repeats: u32,
    pub activations: u64,
    pub row_subset: RowSubset,
    pub bank: BankSelector,
    pub allocation: Allocation,
}

impl Default for SessionParams {
    fn default() -> Self {
        SessionParams {
            chunks_per_session: 8,
            total_chunks: 64,
            repeats: 8,
            activations: 10_000_000,
            row_subset: RowSubset::All,
            bank: BankSelector::default(),
            allocation: Allocation::Pinned { seed: 0 },
        }
    }
}

impl SessionParams {
    pub fn session(&self) -> SessionConfig {
        SessionConfig {
            chunks_per_session: self.chunks_per_session,
            total_chunks: self.total_chunks,
            sweep: SweepConfig {
                repeats: self.repeats,
                activations: self.activations,
                row_subset: self.row_subset.clone(),
                bank: self.bank,
            },
            allocation: self.allocation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TemplatingParams {
    /// Modules in the fingerprinter's own templating population.
    pub devices: u32,
    pub budget: u32,
}

impl Default for TemplatingParams {
    fn default() -> Self {
        TemplatingParams {
            devices: 4,
            budget: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StableParams {
    pub sessions: u32,
    /// Modules taking part; the population is truncated to this many.
    pub devices: u32,
}

impl Default for StableParams {
    fn default() -> Self {
        StableParams {
            sessions: 10,
            devices: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReseatParams {
    pub perturbation: f64,
    pub jitter: f64,
    pub activations: u64,
}

impl Default for ReseatParams {
    fn default() -> Self {
        ReseatParams {
            perturbation: crate::dram_sim::DEFAULT_RESEAT_PERTURBATION,
            jitter: crate::dram_sim::DEFAULT_RESEAT_JITTER,
            activations: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EffParams {
    pub activations: Vec<u64>,
    pub repeats: Vec<u32>,
    /// Also run every cell with only the first half of the pairs.
    pub half_rows: bool,
}

impl Default for EffParams {
    fn default() -> Self {
        EffParams {
            activations: vec![10_000_000, 5_000_000, 1_000_000, 500_000, 200_000],
            repeats: vec![8, 4, 2],
            half_rows: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FreqParams {
    /// Target drop in expected flips between nominal and probe runs.
    pub flip_ratio: f64,
    /// Fixed probe scale; calibrated from `flip_ratio` when absent.
    pub activation_scale: Option<f64>,
    pub reference_repeats: u32,
    pub probe_repeats: u32,
    /// Modules used to calibrate the scale.
    pub calibration_devices: u32,
}

impl Default for FreqParams {
    fn default() -> Self {
        FreqParams {
            flip_ratio: 100.0,
            activation_scale: None,
            reference_repeats: 8,
            probe_repeats: 16,
            calibration_devices: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeomParams {
    /// Jittered repetitions per stock geometry.
    pub runs: u32,
    pub jitter: f64,
}

impl Default for GeomParams {
    fn default() -> Self {
        GeomParams {
            runs: 100,
            jitter: crate::addrmap::TimingOracle::DEFAULT_JITTER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BirthdayParams {
    pub total_chunks: u64,
    pub monte_carlo_trials: u32,
    pub monte_carlo_sizes: Vec<u64>,
    pub targets: Vec<f64>,
}

impl Default for BirthdayParams {
    fn default() -> Self {
        BirthdayParams {
            total_chunks: 512,
            monte_carlo_trials: 100_000,
            monte_carlo_sizes: vec![1, 8, 16, 32, 64],
            targets: vec![0.9, 0.99, 0.999],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EntropyParams {
    /// Largest flip count on the theoretical curves.
    pub max_flips: u64,
    pub region_cells: Vec<u64>,
    pub populations: Vec<f64>,
}

impl Default for EntropyParams {
    fn default() -> Self {
        EntropyParams {
            max_flips: 10,
            region_cells: vec![65_536, 524_288, 16_777_216],
            populations: vec![1e18, 1e17, 1e16],
        }
    }
}

/// Everything one scenario run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub execution: Execution,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub population: PopulationConfig,
    #[serde(default)]
    pub session: SessionParams,
    #[serde(default)]
    pub templating: TemplatingParams,
    #[serde(default)]
    pub stable: StableParams,
    #[serde(default)]
    pub reseat: ReseatParams,
    #[serde(default)]
    pub eff: EffParams,
    #[serde(default)]
    pub freq: FreqParams,
    #[serde(default)]
    pub geom: GeomParams,
    #[serde(default)]
    pub birthday: BirthdayParams,
    #[serde(default)]
    pub entropy: EntropyParams,
}

fn default_seed() -> u64 {
    1
}

fn default_tau() -> f64 {
    DEFAULT_TAU
}

impl ScenarioConfig {
    pub fn new(scenario: ScenarioKind) -> Self {
        ScenarioConfig {
            scenario,
            seed: default_seed(),
            tau: default_tau(),
            execution: Execution::default(),
            out: None,
            population: PopulationConfig::default(),
            session: SessionParams::default(),
            templating: TemplatingParams::default(),
            stable: StableParams::default(),
            reseat: ReseatParams::default(),
            eff: EffParams::default(),
            freq: FreqParams::default(),
            geom: GeomParams::default(),
            birthday: BirthdayParams::default(),
            entropy: EntropyParams::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::Config(format!("tau {} outside [0, 1]", self.tau)));
        }
        self.population.spec().validate()?;
        self.session.session().validate()?;
        let chunks = self.population.stock().geometry().chunk_count();
        if self.session.total_chunks as u64 > chunks {
            return Err(Error::Config(format!(
                "total_chunks {} exceeds the {chunks} chunks of a {} module",
                self.session.total_chunks,
                self.population.stock().label()
            )));
        }
        if self.templating.devices == 0 {
            return Err(Error::Config("templating needs at least one device".into()));
        }
        if self.stable.sessions == 0 || self.stable.devices == 0 {
            return Err(Error::Config(
                "stability run needs sessions and devices".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.reseat.perturbation)
            || !(0.0..1.0).contains(&self.reseat.jitter)
            || self.reseat.activations == 0
        {
            return Err(Error::Config("reseat parameters out of range".into()));
        }
        if self.eff.activations.is_empty()
            || self.eff.repeats.is_empty()
            || self.eff.activations.contains(&0)
            || self.eff.repeats.contains(&0)
        {
            return Err(Error::Config("efficiency grid needs positive axes".into()));
        }
        if self.freq.flip_ratio.is_nan()
            || self.freq.flip_ratio < 1.0
            || self.freq.reference_repeats == 0
            || self.freq.probe_repeats == 0
            || self.freq.calibration_devices == 0
            || self
                .freq
                .activation_scale
                .is_some_and(|s| s.is_nan() || s <= 0.0)
        {
            return Err(Error::Config("frequency parameters out of range".into()));
        }
        if self.geom.jitter < 0.0 {
            return Err(Error::Config("geometry jitter must be >= 0".into()));
        }
        let b = &self.birthday;
        if b.total_chunks == 0
            || b.monte_carlo_sizes
                .iter()
                .any(|&d| d == 0 || d > b.total_chunks)
            || b.targets.iter().any(|t| !(*t > 0.0 && *t < 1.0))
        {
            return Err(Error::Config("birthday parameters out of range".into()));
        }
        if self.entropy.region_cells.contains(&0)
            || self
                .entropy
                .populations
                .iter()
                .any(|p| p.is_nan() || *p < 1.0)
        {
            return Err(Error::Config("entropy parameters out of range".into()));
        }
        Ok(())
    }
}
