//! Eligibility and virality labeling, under both the absolute-threshold and
//! the top-k-percentile definitions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelMode {
    Absolute,
    Percentile,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TaskConfig {
    /// Prediction threshold: tweet count at which features are frozen.
    pub n: usize,
    /// Virality threshold for absolute mode.
    pub m: u64,
    pub mode: LabelMode,
    /// Top-k percent cut for percentile mode.
    pub percentile_k: f64,
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig {
            n: 1500,
            m: 10_000,
            mode: LabelMode::Absolute,
            percentile_k: 10.0,
        }
    }
}

impl TaskConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mode == LabelMode::Absolute && (self.n as u64) >= self.m {
            return Err(Error::validation(format!(
                "prediction threshold n={} must be below virality threshold M={}",
                self.n, self.m
            )));
        }
        if self.percentile_k <= 0.0 || self.percentile_k >= 100.0 {
            return Err(Error::validation(format!(
                "percentile_k={} out of (0, 100)",
                self.percentile_k
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Viral,
    NonViral,
    Ineligible,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Viral => "viral",
            Label::NonViral => "nonviral",
            Label::Ineligible => "ineligible",
        }
    }
}

/// Absolute-threshold labels: ineligible below n, viral at or above M.
/// "Crossing" both thresholds reads as >=.
pub fn label_absolute(totals: &BTreeMap<String, u64>, cfg: &TaskConfig) -> BTreeMap<String, Label> {
    totals
        .iter()
        .map(|(tag, &total)| {
            let label = if total < cfg.n as u64 {
                Label::Ineligible
            } else if total >= cfg.m {
                Label::Viral
            } else {
                Label::NonViral
            };
            (tag.clone(), label)
        })
        .collect()
}

/// Percentile labels: among eligible hashtags, viral iff ranked within the
/// top k% by total tweets. Ties break by hashtag key order so reruns are
/// stable.
pub fn label_percentile(
    totals: &BTreeMap<String, u64>,
    cfg: &TaskConfig,
) -> Result<BTreeMap<String, Label>> {
    let mut eligible: Vec<(&String, u64)> = totals
        .iter()
        .filter(|&(_, &t)| t >= cfg.n as u64)
        .map(|(tag, &t)| (tag, t))
        .collect();
    if eligible.is_empty() {
        return Err(Error::data("no eligible hashtags for percentile labeling"));
    }
    // descending by total, lexicographic tag as tie-break
    eligible.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let viral_count = ((cfg.percentile_k / 100.0) * eligible.len() as f64).ceil() as usize;
    let mut labels: BTreeMap<String, Label> = totals
        .iter()
        .map(|(tag, _)| (tag.clone(), Label::Ineligible))
        .collect();
    for (rank, (tag, _)) in eligible.into_iter().enumerate() {
        let label = if rank < viral_count {
            Label::Viral
        } else {
            Label::NonViral
        };
        labels.insert(tag.clone(), label);
    }
    Ok(labels)
}

pub fn label(totals: &BTreeMap<String, u64>, cfg: &TaskConfig) -> Result<BTreeMap<String, Label>> {
    cfg.validate()?;
    match cfg.mode {
        LabelMode::Absolute => Ok(label_absolute(totals, cfg)),
        LabelMode::Percentile => label_percentile(totals, cfg),
    }
}
