use std::fmt;

use serde::{Deserialize, Serialize};

use super::field::{ReseatLayer, SusceptibilityField, SusceptibilityParams};
use super::geometry::DimmGeometry;
use crate::error::{Error, Result};
use crate::rng::{tag, SeedStream};

/// Opaque device identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeviceId(pub u32);

impl fmt::Display for DeviceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Behavioural target row refresh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrrModel {
    pub enabled: bool,
    /// Aggressor rows trackable per bank per refresh interval.
    pub tracker_capacity: u32,
    /// Activation slots in one refresh interval.
    pub refresh_interval_slots: u32,
}

impl Default for TrrModel {
    fn default() -> Self {
        TrrModel {
            enabled: true,
            tracker_capacity: 4,
            refresh_interval_slots: 64,
        }
    }
}

impl TrrModel {
    pub fn disabled() -> Self {
        TrrModel {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.enabled && self.tracker_capacity == 0 {
            return Err(Error::Config(
                "enabled TRR needs tracker_capacity >= 1".into(),
            ));
        }
        if self.refresh_interval_slots == 0 {
            return Err(Error::Config("refresh_interval_slots must be >= 1".into()));
        }
        Ok(())
    }
}

/// External conditions of a hammering run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    /// 1.0 at nominal CPU frequency; lower values model slower clocks or load.
    pub activation_scale: f64,
    /// Recorded only.
    #[serde(default)]
    pub temperature_tag: String,
}

impl Default for Environment {
    fn default() -> Self {
        Environment {
            activation_scale: 1.0,
            temperature_tag: String::new(),
        }
    }
}

impl Environment {
    pub fn scaled(activation_scale: f64) -> Result<Self> {
        let env = Environment {
            activation_scale,
            ..Self::default()
        };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.activation_scale > 0.0 && self.activation_scale.is_finite()) {
            return Err(Error::Config(format!(
                "activation_scale must be positive, got {}",
                self.activation_scale
            )));
        }
        Ok(())
    }
}

/// A simulated module. Serialises to geometry, seeds and re-seat layers;
/// the field itself is regenerated on demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimmDevice {
    pub id: DeviceId,
    pub geometry: DimmGeometry,
    pub field: SusceptibilityField,
    pub trr: TrrModel,
    pub seat_epoch: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manufacturer: Option<String>,
}

impl DimmDevice {
    /// Returns the device after a re-seat that resamples a `perturbation`
    /// fraction of its susceptible cells and jitters the survivors by
    /// `jitter`. `perturbation == 0` leaves the field untouched.
    pub fn reseat_with(&self, perturbation: f64, jitter: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&perturbation) {
            return Err(Error::Usage(format!(
                "perturbation {perturbation} outside [0, 1]"
            )));
        }
        if !(0.0..1.0).contains(&jitter) {
            return Err(Error::Usage(format!("jitter {jitter} outside [0, 1)")));
        }
        let mut next = self.clone();
        next.seat_epoch += 1;
        if perturbation > 0.0 {
            next.field = self.field.perturbed(ReseatLayer {
                seed,
                fraction: perturbation,
                jitter,
            });
        }
        Ok(next)
    }
}

pub const DEFAULT_RESEAT_PERTURBATION: f64 = 0.8;
pub const DEFAULT_RESEAT_JITTER: f64 = 0.2;

/// Re-seats with the default survivor jitter.
pub fn reseat(device: &DimmDevice, perturbation: f64, seed: u64) -> Result<DimmDevice> {
    device.reseat_with(perturbation, DEFAULT_RESEAT_JITTER, seed)
}

/// Description of a batch of modules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub count: u32,
    pub geometry: DimmGeometry,
    #[serde(default)]
    pub susceptibility: SusceptibilityParams,
    #[serde(default)]
    pub trr: TrrModel,
    #[serde(default)]
    pub manufacturer: Option<String>,
}

impl PopulationSpec {
    pub fn new(count: u32, geometry: DimmGeometry) -> Self {
        PopulationSpec {
            count,
            geometry,
            susceptibility: SusceptibilityParams::default(),
            trr: TrrModel::default(),
            manufacturer: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Config("population count must be >= 1".into()));
        }
        self.geometry.validate()?;
        self.susceptibility.validate()?;
        self.trr.validate()
    }
}

/// Creates `spec.count` devices with ids `0..count`.
pub fn create_population(spec: &PopulationSpec, seed: u64) -> Result<Vec<DimmDevice>> {
    create_mixed_population(std::slice::from_ref(spec), seed)
}

/// Creates several batches with ids running on across batches.
pub fn create_mixed_population(specs: &[PopulationSpec], seed: u64) -> Result<Vec<DimmDevice>> {
    if specs.is_empty() {
        return Err(Error::Config("population needs at least one batch".into()));
    }
    let root = SeedStream::new(seed).fork(tag::DEVICE);
    let mut devices = Vec::new();
    for spec in specs {
        spec.validate()?;
        for _ in 0..spec.count {
            let id = devices.len() as u32;
            let field = SusceptibilityField::new(
                spec.susceptibility,
                root.fork(id as u64).0,
                spec.geometry.cells_per_row,
            )?;
            devices.push(DimmDevice {
                id: DeviceId(id),
                geometry: spec.geometry,
                field,
                trr: spec.trr,
                seat_epoch: 0,
                manufacturer: spec.manufacturer.clone(),
            });
        }
    }
    Ok(devices)
}
