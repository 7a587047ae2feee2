mod identify;
mod math;
mod shift;

pub use identify::{
    run_eff, run_reseat, run_stable, run_uniq, EffCell, EffReport, ReseatReport, StableReport,
    UniqReport,
};
pub use math::{
    overlap_monte_carlo, run_birthday, run_entropy, run_geom, BirthdayReport, EntropyReport,
    GeomOutcome, GeomReport, MonteCarloPoint,
};
pub use shift::{
    calibrate_scale, expected_flips, run_baseline, run_freq, BaselineReport, FreqArm, FreqReport,
};
