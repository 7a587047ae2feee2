//! Scenario runner: configuration, the evaluation designs and their CSV /
//! JSON output.

pub mod bundle;
pub mod config;
pub mod pipeline;
pub mod scenarios;

pub use bundle::{RecordFile, ResultBundle, Table};
pub use config::{Preset, ScenarioConfig, ScenarioKind};

use crate::error::Result;

/// Runs the configured scenario end to end.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ResultBundle> {
    cfg.validate()?;
    use scenarios::*;
    Ok(match cfg.scenario {
        ScenarioKind::Uniq => run_uniq(cfg)?.bundle()?,
        ScenarioKind::Stable => run_stable(cfg)?.bundle(cfg),
        ScenarioKind::Reseat => run_reseat(cfg)?.bundle(cfg),
        ScenarioKind::Eff => run_eff(cfg)?.bundle(cfg),
        ScenarioKind::Freq => run_freq(cfg)?.bundle(cfg),
        ScenarioKind::Baseline => run_baseline(cfg)?.bundle(cfg),
        ScenarioKind::Geom => run_geom(cfg)?.bundle(),
        ScenarioKind::Birthday => run_birthday(cfg)?.bundle(cfg),
        ScenarioKind::Entropy => run_entropy(cfg)?.bundle(),
    })
}
