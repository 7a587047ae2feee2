use serde::{Deserialize, Serialize};

use crate::dram_sim::DeviceId;
use crate::error::{Error, Result};

/// One matching outcome against the truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledDecision {
    /// Device the matcher named, `None` for a new-device verdict.
    pub predicted: Option<DeviceId>,
    /// Enrolled device the probe came from, `None` if it was never enrolled.
    pub truth: Option<DeviceId>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn record(&mut self, d: LabeledDecision) {
        match (d.predicted, d.truth) {
            (Some(p), Some(t)) if p == t => self.tp += 1,
            (Some(_), _) => self.fp += 1,
            (None, Some(_)) => self.fn_ += 1,
            (None, None) => self.tn += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub counts: Confusion,
    pub tau: f64,
    pub scenario: String,
    /// Set when there were no positive predictions and precision defaulted
    /// to 1.
    pub precision_defaulted: bool,
    /// Set when there were no positives and recall defaulted to 1.
    pub recall_defaulted: bool,
}

impl MetricsReport {
    pub fn from_confusion(counts: Confusion, tau: f64, scenario: &str) -> Self {
        let ratio = |num: u64, den: u64| {
            if den == 0 {
                (1.0, true)
            } else {
                (num as f64 / den as f64, false)
            }
        };
        let (precision, precision_defaulted) = ratio(counts.tp, counts.tp + counts.fp);
        let (recall, recall_defaulted) = ratio(counts.tp, counts.tp + counts.fn_);
        if precision_defaulted {
            log::debug!("{scenario}: no positive predictions at tau {tau}, precision set to 1");
        }
        MetricsReport {
            accuracy: if counts.total() == 0 {
                0.0
            } else {
                (counts.tp + counts.tn) as f64 / counts.total() as f64
            },
            precision,
            recall,
            counts,
            tau,
            scenario: scenario.to_string(),
            precision_defaulted,
            recall_defaulted,
        }
    }
}

pub fn classification_metrics(
    decisions: &[LabeledDecision],
    tau: f64,
    scenario: &str,
) -> Result<MetricsReport> {
    if decisions.is_empty() {
        return Err(Error::Usage("no decisions to score".into()));
    }
    let mut c = Confusion::default();
    for &d in decisions {
        c.record(d);
    }
    Ok(MetricsReport::from_confusion(c, tau, scenario))
}

/// Pairs at or below `tau` count as same-device.
pub fn pair_metrics(same: &[f64], cross: &[f64], tau: f64, scenario: &str) -> MetricsReport {
    let tp = same.iter().filter(|&&d| d <= tau).count() as u64;
    let fp = cross.iter().filter(|&&d| d <= tau).count() as u64;
    let c = Confusion {
        tp,
        fp,
        fn_: same.len() as u64 - tp,
        tn: cross.len() as u64 - fp,
    };
    MetricsReport::from_confusion(c, tau, scenario)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSweep {
    pub rows: Vec<MetricsReport>,
    pub max_same: f64,
    pub min_cross: f64,
    pub perfect_separation: bool,
    /// Highest accuracy, lowest threshold on ties.
    pub best: MetricsReport,
}

/// Evaluates every distinct observed divergence as a threshold.
pub fn threshold_sweep(same: &[f64], cross: &[f64], scenario: &str) -> Result<ThresholdSweep> {
    if same.is_empty() || cross.is_empty() {
        return Err(Error::Usage(
            "threshold sweep needs same- and cross-device pairs".into(),
        ));
    }
    if same.iter().chain(cross).any(|d| d.is_nan()) {
        return Err(Error::UndefinedInput("divergence is NaN".into()));
    }
    let mut taus: Vec<f64> = same.iter().chain(cross).copied().collect();
    taus.sort_by(f64::total_cmp);
    taus.dedup();
    let rows: Vec<MetricsReport> = taus
        .iter()
        .map(|&t| pair_metrics(same, cross, t, scenario))
        .collect();
    let best = rows
        .iter()
        .fold(None::<&MetricsReport>, |acc, r| match acc {
            Some(b) if b.accuracy >= r.accuracy => Some(b),
            _ => Some(r),
        })
        .cloned()
        .expect("non-empty");
    let max_same = same.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_cross = cross.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ThresholdSweep {
        rows,
        max_same,
        min_cross,
        perfect_separation: max_same < min_cross,
        best,
    })
}
