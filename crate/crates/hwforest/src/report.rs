//! JSON run reports. Field order is fixed by the struct layouts, so two runs
//! with the same inputs differ only in `wall_time_seconds`.

use hwforest_core::cascade::{CascadeFit, CascadeModel, Prediction};
use hwforest_core::hash_screen::Selection;
use hwforest_core::Threshold;
use serde::Serialize;

use crate::config::RunConfig;

/// `WT` as a number, or `"all"` / `"none"` for the pass-everything and
/// pass-nothing thresholds.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Wt {
    Value(f64),
    Sentinel(&'static str),
}

impl From<Threshold> for Wt {
    fn from(t: Threshold) -> Self {
        match t {
            Threshold::Confidence(v) => Wt::Value(v),
            Threshold::PassAll => Wt::Sentinel("all"),
            Threshold::PassNone => Wt::Sentinel("none"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelReport {
    pub wt: Wt,
    pub ta: f64,
    pub entering: usize,
    pub retired: usize,
    pub oof_accuracy: f64,
    pub validation_accuracy: f64,
    /// Test instances answered at this level (absent without a test set).
    pub test_exits: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrainReport {
    pub window: usize,
    pub stride: usize,
    pub total_locations: usize,
    pub retained: usize,
    pub hash_threshold: f64,
    pub selected_percentage: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub accuracy: Option<f64>,
    pub levels: Vec<LevelReport>,
    pub grains: Vec<GrainReport>,
    pub wall_time_seconds: f64,
    pub n_train: usize,
    pub n_validation: usize,
    pub n_test: usize,
    pub discarded_level_validation_accuracy: Option<f64>,
    pub config: RunConfig,
}

impl Report {
    pub fn total_retained_locations(&self) -> usize {
        self.grains.iter().map(|g| g.retained).sum()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }
}

pub fn grain_reports(model: &CascadeModel) -> Vec<GrainReport> {
    model
        .scan
        .iter()
        .flat_map(|s| &s.grains)
        .map(|g| GrainReport {
            window: g.config.window,
            stride: g.config.stride,
            total_locations: g.total_locations(),
            retained: g.retained_locations.len(),
            hash_threshold: g.threshold.ht,
            selected_percentage: match g.threshold.selection {
                Selection::Percentage(p) => Some(p),
                _ => None,
            },
        })
        .collect()
}

pub fn level_reports(fit: &CascadeFit, test: Option<&[Prediction]>) -> Vec<LevelReport> {
    let exits = test.map(|p| CascadeModel::exit_counts(p, fit.model.n_levels()));
    fit.model
        .levels
        .iter()
        .enumerate()
        .map(|(t, l)| LevelReport {
            wt: l.threshold.into(),
            ta: l.ta,
            entering: l.n_entering,
            retired: l.n_retired,
            oof_accuracy: l.oof_accuracy,
            validation_accuracy: l.validation_accuracy,
            test_exits: exits.as_ref().map(|e| e[t]),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub n_test: usize,
    pub exits_per_level: Vec<usize>,
    pub wall_time_seconds: f64,
    pub config: RunConfig,
}
