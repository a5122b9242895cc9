use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::HybridModel;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{softmax, softmax_nll, AdamW, AdamWConfig, ClassWeights, SchedulerConfig};
use crate::numerics::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub scheduler: SchedulerConfig,
    /// Epochs without a validation-loss improvement larger than `min_delta`
    /// before training stops.
    pub patience: usize,
    pub min_delta: f64,
    pub seed: u64,
    /// `None` uses inverse class frequencies of the training split.
    pub class_weights: Option<ClassWeights>,
    pub optimizer: AdamWConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 16,
            lr: 0.01,
            scheduler: SchedulerConfig::default(),
            patience: 10,
            min_delta: 1e-4,
            seed: 42,
            class_weights: None,
            optimizer: AdamWConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Parameter("epochs and batch_size must be positive".into()));
        }
        if self.patience == 0 || self.patience > self.epochs {
            return Err(Error::Parameter(format!(
                "patience must be in 1..={}, got {}",
                self.epochs, self.patience
            )));
        }
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return Err(Error::Parameter(format!("learning rate must be >= 0, got {}", self.lr)));
        }
        self.scheduler.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    pub test_loss: Option<f64>,
    pub test_acc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochRecord>,
    /// Index into `epochs` of the retained checkpoint.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainingHistory {
    pub fn train_losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.train_loss).collect()
    }

    pub fn val_losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.val_loss).collect()
    }
}

/// Eval-mode loss, accuracy and predictions over a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// `Σ w_y·ℓ / Σ w_y` over the samples.
    pub loss: f64,
    pub accuracy: f64,
    pub predictions: Vec<usize>,
    pub probabilities: Vec<Vec<f64>>,
}

pub fn evaluate(model: &HybridModel, data: &Dataset, weights: &ClassWeights) -> Result<Evaluation> {
    if data.is_empty() {
        return Err(Error::Data("cannot evaluate on an empty split".into()));
    }
    let per_sample: Vec<(f64, f64, Vec<f64>)> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let logits = model.logits(data.row(i))?;
            let y = data.labels[i];
            let (loss, _) = softmax_nll(&logits, y, weights)?;
            Ok((loss, weights.as_slice()[y], softmax(&logits)))
        })
        .collect::<Result<_>>()?;
    let mut loss = 0.0;
    let mut wsum = 0.0;
    let mut correct = 0usize;
    let mut predictions = Vec::with_capacity(data.len());
    let mut probabilities = Vec::with_capacity(data.len());
    for (i, (l, w, p)) in per_sample.into_iter().enumerate() {
        loss += l;
        wsum += w;
        let pred = argmax(&p);
        correct += usize::from(pred == data.labels[i]);
        predictions.push(pred);
        probabilities.push(p);
    }
    Ok(Evaluation {
        loss: loss / wsum,
        accuracy: correct as f64 / data.len() as f64,
        predictions,
        probabilities,
    })
}

/// Index of the first maximum.
pub fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold(0, |best, (i, &x)| if x > v[best] { i } else { best })
}

fn check_split(name: &str, data: &Dataset, model: &HybridModel) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Data(format!("{name} split is empty")));
    }
    if data.n_features() != model.input_dim() || data.n_classes() != model.n_classes() {
        return Err(Error::Shape(format!(
            "{name} split is {} features / {} classes, model is {} / {}",
            data.n_features(),
            data.n_classes(),
            model.input_dim(),
            model.n_classes()
        )));
    }
    Ok(())
}

/// Mini-batch AdamW training with per-epoch LR scheduling and early
/// stopping on validation loss. Returns the parameters with the lowest
/// validation loss seen.
pub fn train(
    mut model: HybridModel,
    train: &Dataset,
    val: &Dataset,
    test: Option<&Dataset>,
    config: &TrainConfig,
) -> Result<(HybridModel, TrainingHistory)> {
    config.validate()?;
    check_split("train", train, &model)?;
    check_split("validation", val, &model)?;
    if let Some(t) = test {
        check_split("test", t, &model)?;
    }
    let counts = train.class_counts();
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::Data(format!(
            "class {:?} is absent from the training split",
            train.class_names[c]
        )));
    }
    let weights = match &config.class_weights {
        Some(w) if w.len() != model.n_classes() => {
            return Err(Error::Parameter(format!(
                "{} class weights for {} classes",
                w.len(),
                model.n_classes()
            )))
        }
        Some(w) => w.clone(),
        None => ClassWeights::inverse_frequency(&train.labels, model.n_classes()),
    };

    let mut rng = SeededRng::new(config.seed);
    let mut optimizer = AdamW::new(config.optimizer, model.n_params());
    let mut params = model.params();
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut records = Vec::new();
    let mut best_val = f64::INFINITY;
    let mut best_params = params.clone();
    let mut best_epoch = 0;
    let mut reference_val = f64::INFINITY;
    let mut stale_epochs = 0;
    let mut stopped_early = false;

    for epoch in 0..config.epochs {
        let lr = config.scheduler.lr(config.lr, epoch);
        rng.shuffle(&mut order);
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let seeds: Vec<u64> = batch.iter().map(|_| rng.next_u64()).collect();
            let per_sample: Vec<(f64, f64, Vec<f64>)> = batch
                .par_iter()
                .zip(seeds.par_iter())
                .map(|(&i, &seed)| {
                    let mut dropout_rng = SeededRng::new(seed);
                    let (logits, cache) = model.forward(train.row(i), true, Some(&mut dropout_rng))?;
                    let y = train.labels[i];
                    let (loss, grad_logits) = softmax_nll(&logits, y, &weights)?;
                    let grads = model.backward(&cache, &grad_logits)?;
                    Ok((loss, weights.as_slice()[y], grads.flatten()))
                })
                .collect::<Result<_>>()?;
            let mut grad = vec![0.0; params.len()];
            let mut loss = 0.0;
            let mut wsum = 0.0;
            for (l, w, g) in &per_sample {
                loss += l;
                wsum += w;
                grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
            }
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "loss {loss} at epoch {} batch {b}",
                    epoch + 1
                )));
            }
            grad.iter_mut().for_each(|g| *g /= wsum);
            optimizer.step(&mut params, &grad, lr)?;
            model.set_params(&params)?;
        }

        let tr = evaluate(&model, train, &weights)?;
        let va = evaluate(&model, val, &weights)?;
        let te = test.map(|t| evaluate(&model, t, &weights)).transpose()?;
        if !va.loss.is_finite() || !tr.loss.is_finite() {
            return Err(Error::NonFinite(format!("evaluation loss at epoch {}", epoch + 1)));
        }
        log::info!(
            "epoch {:>3}  lr {:.5}  train {:.4}/{:.3}  val {:.4}/{:.3}",
            epoch + 1,
            lr,
            tr.loss,
            tr.accuracy,
            va.loss,
            va.accuracy
        );
        records.push(EpochRecord {
            epoch: epoch + 1,
            lr,
            train_loss: tr.loss,
            train_acc: tr.accuracy,
            val_loss: va.loss,
            val_acc: va.accuracy,
            test_loss: te.as_ref().map(|e| e.loss),
            test_acc: te.as_ref().map(|e| e.accuracy),
        });

        if va.loss < best_val {
            best_val = va.loss;
            best_params.clone_from(&params);
            best_epoch = epoch;
        }
        if va.loss < reference_val - config.min_delta {
            reference_val = va.loss;
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= config.patience {
                stopped_early = epoch + 1 < config.epochs;
                break;
            }
        }
    }

    model.set_params(&best_params)?;
    Ok((
        model,
        TrainingHistory {
            epochs: records,
            best_epoch,
            stopped_early,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelSpec;
    use crate::numerics::Matrix;
    use crate::quantum::{Axis, CircuitConfig};

    fn tiny_data(n: usize, rng: &mut SeededRng) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![(i % 2) as f64 * 2.0 - 1.0 + rng.normal(0.0, 0.3), rng.normal(0.0, 1.0)]).collect();
        let labels = (0..n).map(|i| i % 2).collect();
        Dataset::new(
            Matrix::from_rows(&rows).unwrap(),
            labels,
            vec!["a".into(), "b".into()],
            vec!["n".into(), "p".into()],
        )
        .unwrap()
    }

    fn tiny_model(seed: u64) -> HybridModel {
        let spec = ModelSpec::new(2, 2, CircuitConfig::new(2, 1, Axis::Y).unwrap());
        HybridModel::new(&spec, &mut SeededRng::new(seed)).unwrap()
    }

    #[test]
    fn zero_lr_leaves_parameters_alone() {
        let mut rng = SeededRng::new(1);
        let (tr, va) = (tiny_data(20, &mut rng), tiny_data(8, &mut rng));
        let m = tiny_model(3);
        let cfg = TrainConfig {
            epochs: 3,
            lr: 0.0,
            patience: 3,
            ..Default::default()
        };
        let (out, hist) = train(m.clone(), &tr, &va, None, &cfg).unwrap();
        assert_eq!(out.params(), m.params());
        let l = hist.train_losses();
        assert!(l.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn patience_one_stops_after_first_non_improvement() {
        let mut rng = SeededRng::new(2);
        let (tr, va) = (tiny_data(20, &mut rng), tiny_data(8, &mut rng));
        // lr = 0 never improves after epoch 1
        let cfg = TrainConfig {
            epochs: 10,
            lr: 0.0,
            patience: 1,
            ..Default::default()
        };
        let (_, hist) = train(tiny_model(1), &tr, &va, None, &cfg).unwrap();
        assert_eq!(hist.epochs.len(), 2);
        assert!(hist.stopped_early);
    }

    #[test]
    fn returns_best_validation_checkpoint_and_is_reproducible() {
        let mut rng = SeededRng::new(3);
        let (tr, va) = (tiny_data(24, &mut rng), tiny_data(10, &mut rng));
        let cfg = TrainConfig {
            epochs: 6,
            lr: 0.05,
            patience: 6,
            ..Default::default()
        };
        let (m1, h1) = train(tiny_model(4), &tr, &va, Some(&va), &cfg).unwrap();
        let (m2, h2) = train(tiny_model(4), &tr, &va, Some(&va), &cfg).unwrap();
        assert_eq!(h1, h2);
        assert_eq!(m1.params(), m2.params());
        let weights = ClassWeights::inverse_frequency(&tr.labels, 2);
        let min = h1.val_losses().into_iter().fold(f64::INFINITY, f64::min);
        assert_eq!(evaluate(&m1, &va, &weights).unwrap().loss, min);
        assert_eq!(h1.val_losses()[h1.best_epoch], min);
        for (e, rec) in h1.epochs.iter().enumerate() {
            assert_eq!(rec.lr, cfg.scheduler.lr(cfg.lr, e));
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut rng = SeededRng::new(4);
        let tr = tiny_data(10, &mut rng);
        let empty = tr.subset(&[]);
        let cfg = TrainConfig::default();
        assert!(matches!(train(tiny_model(1), &empty, &tr, None, &cfg), Err(Error::Data(_))));
        let bad = TrainConfig {
            patience: 0,
            ..Default::default()
        };
        assert!(matches!(train(tiny_model(1), &tr, &tr, None, &bad), Err(Error::Parameter(_))));
        let only_zeros = tr.subset(&[0, 2, 4]);
        assert!(matches!(train(tiny_model(1), &only_zeros, &tr, None, &cfg), Err(Error::Data(_))));
    }
}
