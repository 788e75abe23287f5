use serde::{Deserialize, Serialize};

use crate::model::ModelConfig;
use crate::train::FoldOutcome;

/// Per-fold slice of a training run's summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoldSummary {
    pub fold: String,
    pub accuracy: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub final_loss: f64,
    pub final_train_acc: f64,
    pub csv: String,
    pub checkpoint: String,
}

impl FoldSummary {
    pub fn from_outcome(outcome: &FoldOutcome, csv: String, checkpoint: String) -> FoldSummary {
        let last = outcome.history.last();
        FoldSummary {
            fold: outcome.fold.clone(),
            accuracy: outcome.accuracy,
            best_epoch: outcome.best_epoch,
            epochs_run: outcome.epochs_run,
            final_loss: last.map(|r| r.loss).unwrap_or(f64::NAN),
            final_train_acc: last.map(|r| r.train_acc).unwrap_or(f64::NAN),
            csv,
            checkpoint,
        }
    }
}

/// The training command's `summary.json` payload. `wall_time_seconds` is the
/// only field that varies between identically-seeded runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSummary {
    pub dataset: String,
    pub protocol: String,
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub augmented: bool,
    pub config: ModelConfig,
    pub folds: Vec<FoldSummary>,
    pub mean_accuracy: f64,
    pub wall_time_seconds: f64,
    pub summary_path: String,
}

pub fn mean_accuracy(folds: &[FoldSummary]) -> f64 {
    if folds.is_empty() {
        return f64::NAN;
    }
    folds.iter().map(|f| f.accuracy).sum::<f64>() / folds.len() as f64
}

/// The eval command's stdout payload.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    pub checkpoint: String,
    pub dataset: String,
    pub split: String,
    pub accuracy: f64,
    pub total: usize,
    /// confusion[true_class][predicted_class]
    pub confusion: Vec<Vec<usize>>,
}
