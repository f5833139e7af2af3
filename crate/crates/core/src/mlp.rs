//! The 50-30-8 multilayer perceptron: tanh hidden layer, softmax output,
//! mean cross-entropy loss, full-batch resilient backpropagation (sign-only
//! weight updates with per-weight adaptive step sizes, no backtracking on
//! sign flips), and an early-stopping trainer that restores the
//! best-validation weights.
//!
//! Biases use the bias-as-weight form: slot 0 of every weight row feeds a
//! constant input of -1.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Network input width (one per feature band).
pub const INPUT_DIM: usize = 50;
/// Hidden layer width.
pub const HIDDEN_DIM: usize = 30;
/// Output width (one per instrument class).
pub const OUTPUT_DIM: usize = 8;

/// Model file format version.
pub const MODEL_FILE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum MlpError {
    #[error("batch is empty")]
    EmptyBatch,
    #[error("evaluation set is empty")]
    EmptySet,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("model file version {0} not supported")]
    UnsupportedVersion(u32),
}

/// One training pattern: a feature vector and its 0-based class index.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Vec<f64>,
    pub class_index: usize,
}

impl Sample {
    pub fn new(input: Vec<f64>, class_index: usize) -> Sample {
        Sample { input, class_index }
    }
}

/// Layer weights plus the per-weight Rprop state (step sizes and previous
/// gradients). Weight rows are flat, row-major, with the bias in slot 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
    pub w_hidden: Vec<f64>,
    pub w_output: Vec<f64>,
    pub step_hidden: Vec<f64>,
    pub step_output: Vec<f64>,
    pub prev_grad_hidden: Vec<f64>,
    pub prev_grad_output: Vec<f64>,
}

/// Full-batch gradients matching the model's weight layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub hidden: Vec<f64>,
    pub output: Vec<f64>,
}

/// Rprop and early-stopping parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub max_fail: usize,
    pub delta0: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub eta_plus: f64,
    pub eta_minus: f64,
    pub hidden_units: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            max_epochs: 500,
            max_fail: 150,
            delta0: 0.07,
            delta_min: 1e-6,
            delta_max: 50.0,
            eta_plus: 1.2,
            eta_minus: 0.5,
            hidden_units: HIDDEN_DIM,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn with_seed(seed: u64) -> TrainConfig {
        TrainConfig { seed, ..TrainConfig::default() }
    }

    fn validate(&self) {
        assert!(self.eta_minus > 0.0 && self.eta_minus < 1.0 && self.eta_plus > 1.0);
        assert!(self.delta_min > 0.0 && self.delta_min <= self.delta0 && self.delta0 <= self.delta_max);
        assert!(self.max_epochs >= 1 && self.hidden_units >= 1);
    }
}

/// Result of an early-stopping training run. `model` carries the weights of
/// the best-validation epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: MlpModel,
    /// Index into the error curves of the best validation epoch.
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub train_error_curve: Vec<f64>,
    pub validation_error_curve: Vec<f64>,
}

impl MlpModel {
    /// Fresh model with weights uniform in [-0.5, 0.5], step sizes at
    /// `delta0`, and no gradient history.
    pub fn new(input_dim: usize, hidden_dim: usize, output_dim: usize, delta0: f64, rng: &mut impl Rng) -> MlpModel {
        let n_hidden = hidden_dim * (input_dim + 1);
        let n_output = output_dim * (hidden_dim + 1);
        MlpModel {
            input_dim,
            hidden_dim,
            output_dim,
            w_hidden: (0..n_hidden).map(|_| rng.random_range(-0.5..0.5)).collect(),
            w_output: (0..n_output).map(|_| rng.random_range(-0.5..0.5)).collect(),
            step_hidden: vec![delta0; n_hidden],
            step_output: vec![delta0; n_output],
            prev_grad_hidden: vec![0.0; n_hidden],
            prev_grad_output: vec![0.0; n_output],
        }
    }

    /// Hidden activations and output probabilities for one input.
    fn forward_parts(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        debug_assert_eq!(x.len(), self.input_dim);
        let row = self.input_dim + 1;
        let hidden: Vec<f64> = (0..self.hidden_dim)
            .map(|j| {
                let w = &self.w_hidden[j * row..(j + 1) * row];
                let mut s = -w[0]; // bias weight times constant input -1
                for (wi, xi) in w[1..].iter().zip(x) {
                    s += wi * xi;
                }
                s.tanh()
            })
            .collect();
        let row_o = self.hidden_dim + 1;
        let scores: Vec<f64> = (0..self.output_dim)
            .map(|o| {
                let w = &self.w_output[o * row_o..(o + 1) * row_o];
                let mut s = -w[0];
                for (wi, hi) in w[1..].iter().zip(&hidden) {
                    s += wi * hi;
                }
                s
            })
            .collect();
        (hidden, softmax(&scores))
    }

    /// Class probabilities for one feature vector.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.input_dim, "input length must match the model");
        self.forward_parts(x).1
    }

    /// One Rprop update from full-batch gradients. Per weight: move by the
    /// step size against the gradient sign; a sign flip versus the previous
    /// epoch shrinks the step and skips the move, a repeated sign grows it.
    pub fn rprop_step(&mut self, grads: &Gradients, cfg: &TrainConfig) -> Result<(), MlpError> {
        if grads.hidden.len() != self.w_hidden.len() || grads.output.len() != self.w_output.len() {
            return Err(MlpError::ShapeMismatch(format!(
                "gradients ({}, {}) vs weights ({}, {})",
                grads.hidden.len(),
                grads.output.len(),
                self.w_hidden.len(),
                self.w_output.len()
            )));
        }
        rprop_apply(&mut self.w_hidden, &mut self.step_hidden, &mut self.prev_grad_hidden, &grads.hidden, cfg);
        rprop_apply(&mut self.w_output, &mut self.step_output, &mut self.prev_grad_output, &grads.output, cfg);
        Ok(())
    }
}

fn rprop_apply(weights: &mut [f64], steps: &mut [f64], prev: &mut [f64], grads: &[f64], cfg: &TrainConfig) {
    for i in 0..weights.len() {
        let g = grads[i];
        let sign_change = prev[i] * g;
        if sign_change > 0.0 {
            steps[i] = (steps[i] * cfg.eta_plus).min(cfg.delta_max);
            weights[i] -= g.signum() * steps[i];
            prev[i] = g;
        } else if sign_change < 0.0 {
            steps[i] = (steps[i] * cfg.eta_minus).max(cfg.delta_min);
            prev[i] = 0.0;
        } else {
            if g > 0.0 {
                weights[i] -= steps[i];
            } else if g < 0.0 {
                weights[i] += steps[i];
            }
            prev[i] = g;
        }
    }
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

fn check_batch(model: &MlpModel, samples: &[Sample], empty: MlpError) -> Result<(), MlpError> {
    if samples.is_empty() {
        return Err(empty);
    }
    for s in samples {
        if s.input.len() != model.input_dim {
            return Err(MlpError::ShapeMismatch(format!(
                "sample has {} inputs, model expects {}",
                s.input.len(),
                model.input_dim
            )));
        }
        if s.class_index >= model.output_dim {
            return Err(MlpError::ShapeMismatch(format!(
                "class index {} out of range for {} outputs",
                s.class_index, model.output_dim
            )));
        }
    }
    Ok(())
}

/// Mean cross-entropy of the batch.
pub fn loss(model: &MlpModel, samples: &[Sample]) -> Result<f64, MlpError> {
    check_batch(model, samples, MlpError::EmptyBatch)?;
    let mut total = 0.0;
    for s in samples {
        let probs = model.forward_parts(&s.input).1;
        total += -probs[s.class_index].max(f64::MIN_POSITIVE).ln();
    }
    Ok(total / samples.len() as f64)
}

/// Mean cross-entropy and exact full-batch gradients for every weight.
pub fn loss_and_gradient(model: &MlpModel, samples: &[Sample]) -> Result<(f64, Gradients), MlpError> {
    check_batch(model, samples, MlpError::EmptyBatch)?;
    let row_h = model.input_dim + 1;
    let row_o = model.hidden_dim + 1;
    let mut g_hidden = vec![0.0; model.w_hidden.len()];
    let mut g_output = vec![0.0; model.w_output.len()];
    let mut total = 0.0;

    for s in samples {
        let (hidden, probs) = model.forward_parts(&s.input);
        total += -probs[s.class_index].max(f64::MIN_POSITIVE).ln();

        // d loss / d output score
        let mut dz_o = probs;
        dz_o[s.class_index] -= 1.0;

        let mut d_hidden = vec![0.0; model.hidden_dim];
        for o in 0..model.output_dim {
            let grad_row = &mut g_output[o * row_o..(o + 1) * row_o];
            grad_row[0] -= dz_o[o]; // bias input is the constant -1
            for j in 0..model.hidden_dim {
                grad_row[j + 1] += dz_o[o] * hidden[j];
                d_hidden[j] += model.w_output[o * row_o + j + 1] * dz_o[o];
            }
        }

        for j in 0..model.hidden_dim {
            let dz_h = d_hidden[j] * (1.0 - hidden[j] * hidden[j]);
            let grad_row = &mut g_hidden[j * row_h..(j + 1) * row_h];
            grad_row[0] -= dz_h;
            for (slot, xi) in grad_row[1..].iter_mut().zip(&s.input) {
                *slot += dz_h * xi;
            }
        }
    }

    let n = samples.len() as f64;
    g_hidden.iter_mut().for_each(|g| *g /= n);
    g_output.iter_mut().for_each(|g| *g /= n);
    Ok((total / n, Gradients { hidden: g_hidden, output: g_output }))
}

/// Full-batch Rprop training with early stopping: after each epoch the
/// validation loss is measured; training stops once `max_fail` epochs pass
/// without a new validation minimum (or at the epoch limit), and the
/// returned model carries the best-epoch weights.
pub fn train_early_stopping(
    train: &[Sample],
    validation: &[Sample],
    cfg: &TrainConfig,
) -> Result<TrainOutcome, MlpError> {
    cfg.validate();
    if train.is_empty() || validation.is_empty() {
        return Err(MlpError::EmptyBatch);
    }
    let input_dim = train[0].input.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = MlpModel::new(input_dim, cfg.hidden_units, OUTPUT_DIM, cfg.delta0, &mut rng);
    check_batch(&model, train, MlpError::EmptyBatch)?;
    check_batch(&model, validation, MlpError::EmptyBatch)?;

    let mut train_curve = Vec::new();
    let mut val_curve = Vec::new();
    let mut best_epoch = 0usize;
    let mut best_val = f64::INFINITY;
    let mut best_model = model.clone();
    let mut epochs_run = 0usize;

    for epoch in 0..cfg.max_epochs {
        let (train_loss, grads) = loss_and_gradient(&model, train)?;
        model.rprop_step(&grads, cfg)?;
        let val_loss = loss(&model, validation)?;
        train_curve.push(train_loss);
        val_curve.push(val_loss);
        epochs_run = epoch + 1;

        if val_loss < best_val {
            best_val = val_loss;
            best_epoch = epoch;
            best_model = model.clone();
        } else if epoch - best_epoch >= cfg.max_fail {
            break;
        }
    }

    Ok(TrainOutcome {
        model: best_model,
        best_epoch,
        epochs_run,
        train_error_curve: train_curve,
        validation_error_curve: val_curve,
    })
}

/// Confusion counts; rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> ConfusionMatrix {
        ConfusionMatrix { counts: vec![vec![0; n_classes]; n_classes] }
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn record(&mut self, true_class: usize, predicted: usize) {
        self.counts[true_class][predicted] += 1;
    }

    pub fn count(&self, true_class: usize, predicted: usize) -> u64 {
        self.counts[true_class][predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_total(&self, true_class: usize) -> u64 {
        self.counts[true_class].iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }

    /// Trace over total; 0 for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.trace() as f64 / total as f64
        }
    }

    /// Per-class recall; None when the class has no samples.
    pub fn recall(&self, true_class: usize) -> Option<f64> {
        let row = self.row_total(true_class);
        (row > 0).then(|| self.counts[true_class][true_class] as f64 / row as f64)
    }

    /// Cell-wise sum with another matrix of the same shape.
    pub fn add(&mut self, other: &ConfusionMatrix) {
        assert_eq!(self.n_classes(), other.n_classes());
        for (row, other_row) in self.counts.iter_mut().zip(&other.counts) {
            for (cell, &v) in row.iter_mut().zip(other_row) {
                *cell += v;
            }
        }
    }
}

/// Argmax prediction over the forward pass; ties go to the lowest class
/// index.
pub fn predict(model: &MlpModel, input: &[f64]) -> usize {
    let probs = model.forward(input);
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// Confusion matrix and accuracy of the model on a test set.
pub fn evaluate(model: &MlpModel, test: &[Sample]) -> Result<(ConfusionMatrix, f64), MlpError> {
    check_batch(model, test, MlpError::EmptySet)?;
    let mut matrix = ConfusionMatrix::new(model.output_dim);
    for s in test {
        matrix.record(s.class_index, predict(model, &s.input));
    }
    let accuracy = matrix.accuracy();
    Ok((matrix, accuracy))
}

/// On-disk model blob: shapes, weights, step sizes, and the training
/// configuration that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub loss_function: String,
    pub config: TrainConfig,
    pub model: MlpModel,
}

impl ModelFile {
    pub fn new(model: MlpModel, config: TrainConfig) -> ModelFile {
        ModelFile {
            version: MODEL_FILE_VERSION,
            loss_function: "cross_entropy".to_string(),
            config,
            model,
        }
    }
}

/// Writes the model as JSON. f64 values round-trip exactly.
pub fn save_model(path: &Path, file: &ModelFile) -> Result<(), MlpError> {
    let json = serde_json::to_string_pretty(file)?;
    std::fs::write(path, json).map_err(|source| MlpError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads a model written by [`save_model`].
pub fn load_model(path: &Path) -> Result<ModelFile, MlpError> {
    let text = std::fs::read_to_string(path).map_err(|source| MlpError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file: ModelFile = serde_json::from_str(&text)?;
    if file.version != MODEL_FILE_VERSION {
        return Err(MlpError::UnsupportedVersion(file.version));
    }
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_model(input_dim: usize, hidden_dim: usize, output_dim: usize) -> MlpModel {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut m = MlpModel::new(input_dim, hidden_dim, output_dim, 0.07, &mut rng);
        m.w_hidden.iter_mut().for_each(|w| *w = 0.0);
        m.w_output.iter_mut().for_each(|w| *w = 0.0);
        m
    }

    fn random_model(seed: u64) -> MlpModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        MlpModel::new(INPUT_DIM, HIDDEN_DIM, OUTPUT_DIM, 0.07, &mut rng)
    }

    fn random_batch(seed: u64, n: usize, input_dim: usize, classes: usize) -> Vec<Sample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                Sample::new(
                    (0..input_dim).map(|_| rng.random_range(0.0..1.0)).collect(),
                    rng.random_range(0..classes),
                )
            })
            .collect()
    }

    #[test]
    fn zero_weights_give_uniform_probabilities() {
        let m = zero_model(INPUT_DIM, HIDDEN_DIM, OUTPUT_DIM);
        let probs = m.forward(&vec![0.3; INPUT_DIM]);
        for p in probs {
            assert!((p - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn probabilities_form_a_simplex_point() {
        let m = random_model(3);
        for s in random_batch(4, 20, INPUT_DIM, OUTPUT_DIM) {
            let probs = m.forward(&s.input);
            assert!(probs.iter().all(|&p| p >= 0.0));
            assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn permuting_output_rows_permutes_probabilities() {
        let m = random_model(5);
        let x = vec![0.4; INPUT_DIM];
        let base = m.forward(&x);
        let mut permuted = m.clone();
        let row = HIDDEN_DIM + 1;
        for k in 0..row {
            permuted.w_output.swap(2 * row + k, 6 * row + k);
        }
        let probs = permuted.forward(&x);
        assert!((probs[2] - base[6]).abs() < 1e-12);
        assert!((probs[6] - base[2]).abs() < 1e-12);
        assert!((probs[0] - base[0]).abs() < 1e-12);
    }

    #[test]
    fn zero_model_loss_is_ln_8() {
        let m = zero_model(INPUT_DIM, HIDDEN_DIM, OUTPUT_DIM);
        let batch = vec![Sample::new(vec![0.9; INPUT_DIM], 3)];
        let (l, _) = loss_and_gradient(&m, &batch).unwrap();
        assert!((l - (8.0f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn empty_batch_is_rejected() {
        let m = random_model(1);
        assert!(matches!(loss_and_gradient(&m, &[]), Err(MlpError::EmptyBatch)));
        assert!(matches!(evaluate(&m, &[]), Err(MlpError::EmptySet)));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let model = random_model(11);
        let batch = random_batch(12, 30, INPUT_DIM, OUTPUT_DIM);
        let (_, grads) = loss_and_gradient(&model, &batch).unwrap();
        let h = 1e-5;
        // Spot-check a spread of weights in both layers.
        for idx in (0..model.w_hidden.len()).step_by(97) {
            let mut plus = model.clone();
            plus.w_hidden[idx] += h;
            let mut minus = model.clone();
            minus.w_hidden[idx] -= h;
            let fd = (loss(&plus, &batch).unwrap() - loss(&minus, &batch).unwrap()) / (2.0 * h);
            let bp = grads.hidden[idx];
            assert!(
                (fd - bp).abs() / fd.abs().max(bp.abs()).max(1e-6) < 1e-4,
                "hidden[{idx}]: fd {fd} vs bp {bp}"
            );
        }
        for idx in (0..model.w_output.len()).step_by(13) {
            let mut plus = model.clone();
            plus.w_output[idx] += h;
            let mut minus = model.clone();
            minus.w_output[idx] -= h;
            let fd = (loss(&plus, &batch).unwrap() - loss(&minus, &batch).unwrap()) / (2.0 * h);
            let bp = grads.output[idx];
            assert!(
                (fd - bp).abs() / fd.abs().max(bp.abs()).max(1e-6) < 1e-4,
                "output[{idx}]: fd {fd} vs bp {bp}"
            );
        }
    }

    #[test]
    fn duplicating_the_batch_changes_nothing() {
        let model = random_model(21);
        let batch = random_batch(22, 10, INPUT_DIM, OUTPUT_DIM);
        let mut doubled = batch.clone();
        doubled.extend(batch.iter().cloned());
        let (l1, g1) = loss_and_gradient(&model, &batch).unwrap();
        let (l2, g2) = loss_and_gradient(&model, &doubled).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
        for (a, b) in g1.hidden.iter().zip(&g2.hidden) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in g1.output.iter().zip(&g2.output) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    fn trace_cfg() -> TrainConfig {
        TrainConfig { delta0: 0.1, ..TrainConfig::default() }
    }

    fn trace_model() -> MlpModel {
        // 3 hidden weights (2 inputs + bias, 1 hidden unit); output grads
        // stay zero so only the hidden weights move.
        let mut m = zero_model(2, 1, 2);
        m.w_hidden = vec![0.5, 0.5, 0.5];
        m.step_hidden = vec![0.1; 3];
        m
    }

    fn drive(m: &mut MlpModel, hidden_grads: &[[f64; 3]], cfg: &TrainConfig) {
        for g in hidden_grads {
            let grads = Gradients { hidden: g.to_vec(), output: vec![0.0; m.w_output.len()] };
            m.rprop_step(&grads, cfg).unwrap();
        }
    }

    #[test]
    fn rprop_first_step_moves_by_delta0_against_the_sign() {
        let mut m = trace_model();
        drive(&mut m, &[[2.7, -1.3, 0.0]], &trace_cfg());
        assert!((m.w_hidden[0] - 0.4).abs() < 1e-15); // -delta, magnitude not 2.7
        assert!((m.w_hidden[1] - 0.6).abs() < 1e-15);
        assert_eq!(m.w_hidden[2], 0.5); // zero gradient: no-op
        assert_eq!(m.step_hidden, vec![0.1; 3]);
    }

    #[test]
    fn rprop_hand_trace_three_steps() {
        let cfg = trace_cfg();
        let mut m = trace_model();
        drive(
            &mut m,
            &[[2.7, -1.3, 0.0], [0.2, 0.4, -0.9], [0.1, -0.5, -0.9]],
            &cfg,
        );
        // Weight 0: repeated + signs grow the step (0.1, 0.12, 0.144).
        assert!((m.w_hidden[0] - (0.5 - 0.1 - 0.12 - 0.144)).abs() < 1e-12);
        assert!((m.step_hidden[0] - 0.144).abs() < 1e-12);
        // Weight 1: sign flip at step 2 halves the step and skips the move;
        // step 3 moves by the reduced step.
        assert!((m.w_hidden[1] - (0.5 + 0.1 + 0.05)).abs() < 1e-12);
        assert!((m.step_hidden[1] - 0.05).abs() < 1e-12);
        // Weight 2: first nonzero gradient at step 2, repeated - sign at 3.
        assert!((m.w_hidden[2] - (0.5 + 0.1 + 0.12)).abs() < 1e-12);
        assert!((m.step_hidden[2] - 0.12).abs() < 1e-12);
    }

    #[test]
    fn rprop_updates_depend_only_on_gradient_signs() {
        let cfg = trace_cfg();
        let seq: [[f64; 3]; 3] = [[2.7, -1.3, 0.0], [0.2, 0.4, -0.9], [0.1, -0.5, -0.9]];
        let scaled: Vec<[f64; 3]> = seq.iter().map(|g| g.map(|v| v * 1000.0)).collect();
        let mut a = trace_model();
        drive(&mut a, &seq, &cfg);
        let mut b = trace_model();
        drive(&mut b, &scaled, &cfg);
        assert_eq!(a.w_hidden, b.w_hidden);
        assert_eq!(a.step_hidden, b.step_hidden);
    }

    #[test]
    fn rprop_applied_updates_equal_the_step_size() {
        let cfg = TrainConfig::default();
        let mut model = random_model(31);
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..20 {
            let grads = Gradients {
                hidden: (0..model.w_hidden.len()).map(|_| rng.random_range(-1.0..1.0)).collect(),
                output: (0..model.w_output.len()).map(|_| rng.random_range(-1.0..1.0)).collect(),
            };
            let before = model.clone();
            model.rprop_step(&grads, &cfg).unwrap();
            for i in 0..model.w_hidden.len() {
                let moved = (model.w_hidden[i] - before.w_hidden[i]).abs();
                assert!(
                    moved == 0.0 || (moved - model.step_hidden[i]).abs() < 1e-15,
                    "weight {i} moved {moved}, step {}",
                    model.step_hidden[i]
                );
                assert!(model.step_hidden[i] >= cfg.delta_min && model.step_hidden[i] <= cfg.delta_max);
            }
        }
    }

    #[test]
    fn rprop_rejects_mismatched_shapes() {
        let mut m = random_model(41);
        let grads = Gradients { hidden: vec![0.0; 3], output: vec![0.0; 4] };
        assert!(matches!(m.rprop_step(&grads, &TrainConfig::default()), Err(MlpError::ShapeMismatch(_))));
    }

    fn separable_two_class(seed: u64, per_class: usize) -> Vec<Sample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut samples = Vec::new();
        for class in 0..2usize {
            for _ in 0..per_class {
                let mut x = vec![0.0; INPUT_DIM];
                for v in x.iter_mut() {
                    *v = rng.random_range(0.0..0.05);
                }
                x[class] = rng.random_range(0.8..1.0);
                samples.push(Sample::new(x, class));
            }
        }
        samples
    }

    #[test]
    fn separable_toy_set_reaches_full_training_accuracy() {
        let train = separable_two_class(51, 20);
        let validation = separable_two_class(52, 5);
        let outcome = train_early_stopping(&train, &validation, &TrainConfig::with_seed(53)).unwrap();
        let (_, acc) = evaluate(&outcome.model, &train).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn adversarial_validation_stops_early() {
        let train = separable_two_class(61, 20);
        // Same inputs with flipped labels: validation worsens as training fits.
        let validation: Vec<Sample> = train
            .iter()
            .map(|s| Sample::new(s.input.clone(), 1 - s.class_index))
            .collect();
        let outcome = train_early_stopping(&train, &validation, &TrainConfig::with_seed(62)).unwrap();
        assert!(outcome.best_epoch <= 1, "best epoch {}", outcome.best_epoch);
        assert!(outcome.epochs_run <= 151, "ran {}", outcome.epochs_run);
    }

    #[test]
    fn training_is_deterministic() {
        let train = separable_two_class(71, 15);
        let validation = separable_two_class(72, 5);
        let cfg = TrainConfig::with_seed(73);
        let a = train_early_stopping(&train, &validation, &cfg).unwrap();
        let b = train_early_stopping(&train, &validation, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn early_stopping_invariants_hold() {
        let train = random_batch(81, 40, INPUT_DIM, OUTPUT_DIM);
        let validation = random_batch(82, 16, INPUT_DIM, OUTPUT_DIM);
        let cfg = TrainConfig { max_epochs: 120, max_fail: 25, ..TrainConfig::with_seed(83) };
        let outcome = train_early_stopping(&train, &validation, &cfg).unwrap();
        assert!(outcome.epochs_run <= cfg.max_epochs.min(outcome.best_epoch + cfg.max_fail + 1));
        let min = outcome.validation_error_curve.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(outcome.validation_error_curve[outcome.best_epoch], min);
        assert_eq!(outcome.train_error_curve.len(), outcome.epochs_run);
    }

    #[test]
    fn evaluate_degenerate_cases() {
        // Zero model ties on every output; lowest class index wins.
        let m = zero_model(INPUT_DIM, HIDDEN_DIM, OUTPUT_DIM);
        let all_first: Vec<Sample> = (0..10).map(|_| Sample::new(vec![0.5; INPUT_DIM], 0)).collect();
        let (matrix, acc) = evaluate(&m, &all_first).unwrap();
        assert_eq!(acc, 1.0);
        assert_eq!(matrix.count(0, 0), 10);
        assert_eq!(matrix.total(), 10);

        let spread: Vec<Sample> =
            (0..OUTPUT_DIM).map(|c| Sample::new(vec![0.5; INPUT_DIM], c)).collect();
        let (matrix, acc) = evaluate(&m, &spread).unwrap();
        assert!((acc - 0.125).abs() < 1e-12);
        for c in 0..OUTPUT_DIM {
            assert_eq!(matrix.row_total(c), 1);
        }
    }

    #[test]
    fn confusion_row_sums_match_class_counts() {
        let m = random_model(91);
        let test = random_batch(92, 64, INPUT_DIM, OUTPUT_DIM);
        let (matrix, _) = evaluate(&m, &test).unwrap();
        for c in 0..OUTPUT_DIM {
            let want = test.iter().filter(|s| s.class_index == c).count() as u64;
            assert_eq!(matrix.row_total(c), want);
        }
        assert_eq!(matrix.total(), 64);
    }

    #[test]
    fn model_file_roundtrips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let file = ModelFile::new(random_model(101), TrainConfig::with_seed(102));
        save_model(&path, &file).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, file);
    }

    #[test]
    fn model_file_rejects_unknown_versions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let mut file = ModelFile::new(random_model(111), TrainConfig::default());
        file.version = 99;
        let json = serde_json::to_string(&file).unwrap();
        std::fs::write(&path, json).unwrap();
        assert!(matches!(load_model(&path), Err(MlpError::UnsupportedVersion(99))));
    }
}
