//! Surrogate training: mean-squared error under Adam on a seeded 90/10
//! split, early stopping on validation error with best-checkpoint restore,
//! and the 2x5 readout ablation harness.

use super::{
    Aggregator, GraphBatch, MpnnError, ReadoutMode, ReadoutSpec, SurrogateConfig, SurrogateModel,
};
use crate::chem::MolGraph;
use crate::tensor::ops::{mean, mul, sub};
use crate::tensor::{AdamOptimizer, AdamParams, Rng, Tape, Tensor};

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Early-stop patience in epochs without validation improvement.
    pub patience: usize,
    pub seed: u64,
    pub val_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-4,
            batch_size: 32,
            epochs: 300,
            patience: 25,
            seed: 7,
            val_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub train_r2: f64,
    pub val_r2: f64,
    pub train_mse: f64,
    pub val_mse: f64,
    /// Target variance was zero; reported scores are pinned to 0.
    pub degenerate_target: bool,
    pub best_epoch: usize,
    pub epochs_run: usize,
    /// Best-so-far validation MSE after each epoch (non-increasing).
    pub best_val_curve: Vec<f64>,
}

/// Coefficient of determination; 0 with the degenerate flag when the truth
/// has no variance.
pub fn r_squared(truth: &[f64], predicted: &[f64]) -> (f64, bool) {
    assert_eq!(truth.len(), predicted.len());
    let n = truth.len() as f64;
    let mean_t: f64 = truth.iter().sum::<f64>() / n;
    let ss_tot: f64 = truth.iter().map(|t| (t - mean_t) * (t - mean_t)).sum();
    if ss_tot == 0.0 {
        return (0.0, true);
    }
    let ss_res: f64 =
        truth.iter().zip(predicted).map(|(t, p)| (t - p) * (t - p)).sum();
    (1.0 - ss_res / ss_tot, false)
}

/// Trains in place, minimizing MSE; returns split metrics.
pub fn train(
    model: &SurrogateModel,
    dataset: &[(MolGraph, f64)],
    tc: &TrainConfig,
) -> Result<TrainReport, MpnnError> {
    if dataset.is_empty() {
        return Err(MpnnError::EmptyDataset);
    }
    let mut rng = Rng::seed_from(tc.seed);
    let mut indices: Vec<usize> = (0..dataset.len()).collect();
    rng.shuffle(&mut indices);
    let val_len = ((dataset.len() as f64 * tc.val_fraction).round() as usize)
        .min(dataset.len().saturating_sub(1));
    let (val_idx, train_idx) = indices.split_at(val_len);

    let ys: Vec<f64> = train_idx.iter().map(|&i| dataset[i].1).collect();
    let y_mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let y_var = ys.iter().map(|y| (y - y_mean) * (y - y_mean)).sum::<f64>() / ys.len() as f64;
    let y_std = if y_var > 0.0 { y_var.sqrt() } else { 1.0 };
    model.set_target_stats(y_mean, y_std);

    let params = model.params();
    let mut optimizer = AdamOptimizer::new(&params, AdamParams::with_lr(tc.lr));

    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut best_values: Vec<Vec<f64>> = params.iter().map(|p| p.value().clone()).collect();
    let mut best_val_curve = Vec::with_capacity(tc.epochs);
    let mut epochs_run = 0;
    let mut order: Vec<usize> = train_idx.to_vec();

    for epoch in 0..tc.epochs {
        epochs_run = epoch + 1;
        rng.shuffle(&mut order);
        for chunk in order.chunks(tc.batch_size) {
            let mols: Vec<&MolGraph> = chunk.iter().map(|&i| &dataset[i].0).collect();
            let targets: Vec<f64> =
                chunk.iter().map(|&i| (dataset[i].1 - y_mean) / y_std).collect();
            let batch = GraphBatch::build(&mols, &model.config.elements)?;
            let tape = Tape::new();
            let out = model.forward(&tape, &batch);
            let target = Tensor::from_vec(vec![chunk.len(), 1], targets);
            let err = sub(&out, &target);
            let loss = mean(&mul(&err, &err));
            loss.backward().expect("scalar loss on fresh tape");
            optimizer.step(&params);
        }

        let val_mse = mse_on(model, dataset, val_idx, y_mean, y_std)?;
        if val_mse < best_val {
            best_val = val_mse;
            best_epoch = epoch;
            best_values = params.iter().map(|p| p.value().clone()).collect();
        }
        best_val_curve.push(best_val);
        if epoch.saturating_sub(best_epoch) >= tc.patience {
            break;
        }
    }

    // restore the best checkpoint seen
    for (p, v) in params.iter().zip(best_values) {
        p.set_value(v);
    }

    let (train_truth, train_pred) = predictions_on(model, dataset, train_idx)?;
    let (val_truth, val_pred) = predictions_on(model, dataset, val_idx)?;
    let (train_r2, degen_a) = r_squared(&train_truth, &train_pred);
    let (val_r2, degen_b) = r_squared(&val_truth, &val_pred);
    Ok(TrainReport {
        train_r2,
        val_r2,
        train_mse: mse(&train_truth, &train_pred),
        val_mse: mse(&val_truth, &val_pred),
        degenerate_target: degen_a || degen_b,
        best_epoch,
        epochs_run,
        best_val_curve,
    })
}

fn mse(truth: &[f64], pred: &[f64]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    truth.iter().zip(pred).map(|(t, p)| (t - p) * (t - p)).sum::<f64>() / truth.len() as f64
}

fn mse_on(
    model: &SurrogateModel,
    dataset: &[(MolGraph, f64)],
    idx: &[usize],
    y_mean: f64,
    y_std: f64,
) -> Result<f64, MpnnError> {
    if idx.is_empty() {
        return Ok(0.0);
    }
    let (truth, pred) = predictions_on(model, dataset, idx)?;
    let norm: f64 = truth
        .iter()
        .zip(&pred)
        .map(|(t, p)| {
            let tn = (t - y_mean) / y_std;
            let pn = (p - y_mean) / y_std;
            (tn - pn) * (tn - pn)
        })
        .sum();
    Ok(norm / idx.len() as f64)
}

fn predictions_on(
    model: &SurrogateModel,
    dataset: &[(MolGraph, f64)],
    idx: &[usize],
) -> Result<(Vec<f64>, Vec<f64>), MpnnError> {
    let mols: Vec<&MolGraph> = idx.iter().map(|&i| &dataset[i].0).collect();
    let truth: Vec<f64> = idx.iter().map(|&i| dataset[i].1).collect();
    if mols.is_empty() {
        return Ok((truth, Vec::new()));
    }
    let pred = model.predict_batch(&mols)?;
    Ok((truth, pred))
}

/// Validation scores for every mode/aggregator combination, trained on the
/// same seeded split.
#[derive(Debug, Clone)]
pub struct AblationTable {
    /// (aggregator, atomic R^2, molecular R^2)
    pub rows: Vec<(Aggregator, f64, f64)>,
}

impl AblationTable {
    /// Two data columns, one row per aggregator.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("readout,atomic,molecular\n");
        for (agg, atomic, molecular) in &self.rows {
            out.push_str(&format!("{},{:.4},{:.4}\n", agg.name(), atomic, molecular));
        }
        out
    }
}

/// Trains all ten readout variants and collects validation R^2 scores.
/// `base` supplies width/depth; the readout field is overridden per variant.
pub fn readout_ablation(
    dataset: &[(MolGraph, f64)],
    base: &SurrogateConfig,
    tc: &TrainConfig,
) -> Result<AblationTable, MpnnError> {
    let mut rows = Vec::new();
    let mut init_rng = Rng::seed_from(tc.seed ^ 0x5eed);
    for aggregator in Aggregator::ALL {
        let mut scores = [0.0; 2];
        for (slot, mode) in [ReadoutMode::Atomic, ReadoutMode::Molecular].iter().enumerate() {
            let config = SurrogateConfig {
                readout: ReadoutSpec { mode: *mode, aggregator },
                ..base.clone()
            };
            let model = SurrogateModel::new(config, &mut init_rng.split());
            let report = train(&model, dataset, tc)?;
            scores[slot] = report.val_r2;
        }
        rows.push((aggregator, scores[0], scores[1]));
    }
    Ok(AblationTable { rows })
}
