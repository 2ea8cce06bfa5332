//! Multi-label circle classifier: one ReLU hidden layer, softmax (or
//! sigmoid) outputs, mini-batch RMSprop.

mod checkpoint;
mod mlp;
mod rmsprop;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::InstanceSet;
use crate::rng::{derive_rng, Stream};
use crate::scalar::Scalar;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use mlp::{predict, softmax, DecisionRule, Forward, Mlp, MlpGrads, OutputMode};
pub use rmsprop::{rmsprop_update, RmspropState};

use mlp::Workspace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainHyper {
    /// `None` picks 32 for Facebook and 64 for the larger networks.
    pub batch_size: Option<usize>,
    pub epochs: usize,
    pub hidden_units: usize,
    pub lr: f64,
    pub rho: f64,
    pub eps: f64,
    pub seed: u64,
    /// Decision threshold; `None` means `1/|Y|` (softmax) or 0.5 (sigmoid).
    pub threshold: Option<f64>,
}

impl Default for TrainHyper {
    fn default() -> Self {
        TrainHyper {
            batch_size: None,
            epochs: 50,
            hidden_units: 128,
            lr: 0.001,
            rho: 0.9,
            eps: 1e-8,
            seed: 0x5eed,
            threshold: None,
        }
    }
}

impl TrainHyper {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == Some(0) || self.epochs == 0 || self.hidden_units == 0 {
            return Err(Error::InvalidConfig("batch_size, epochs and hidden_units must be positive".into()));
        }
        if !(self.lr > 0.0) || !(0.0..1.0).contains(&self.rho) || !(self.eps > 0.0) {
            return Err(Error::InvalidConfig("RMSprop needs lr > 0, 0 <= rho < 1, eps > 0".into()));
        }
        Ok(())
    }

    pub fn decision_rule(&self, mode: OutputMode, outputs: usize) -> DecisionRule {
        match self.threshold {
            Some(threshold) => DecisionRule { threshold },
            None => DecisionRule::default_for(mode, outputs),
        }
    }
}

/// Borrowed row-major training matrices.
#[derive(Clone, Copy, Debug)]
pub struct TrainingData<'a, T> {
    pub x: &'a [T],
    pub y: &'a [u8],
    pub input_dim: usize,
    pub n_labels: usize,
}

impl<'a, T> TrainingData<'a, T> {
    pub fn len(&self) -> usize {
        self.x.len() / self.input_dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x_row(&self, i: usize) -> &'a [T] {
        &self.x[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn y_row(&self, i: usize) -> &'a [u8] {
        &self.y[i * self.n_labels..(i + 1) * self.n_labels]
    }
}

impl<T: Scalar> InstanceSet<T> {
    pub fn training_data(&self) -> TrainingData<'_, T> {
        TrainingData { x: &self.x, y: &self.y, input_dim: self.width, n_labels: self.n_labels() }
    }
}

/// Trains on the given rows for `hyper.epochs` passes; returns the mean
/// loss of every epoch. `batch_size` must already be resolved.
pub fn train<T: Scalar>(
    model: &mut Mlp<T>,
    data: TrainingData<'_, T>,
    rows: &[usize],
    batch_size: usize,
    hyper: &TrainHyper,
) -> Result<Vec<f64>> {
    hyper.validate()?;
    if rows.is_empty() {
        return Err(Error::InvalidConfig("no training instances".into()));
    }
    if batch_size == 0 {
        return Err(Error::InvalidConfig("batch_size must be positive".into()));
    }
    if data.input_dim != model.input_dim || data.n_labels != model.outputs {
        return Err(Error::DimensionMismatch {
            what: "training data width",
            expected: model.input_dim,
            got: data.input_dim,
        });
    }
    let shapes = [model.w1.len(), model.b1.len(), model.w2.len(), model.b2.len()];
    let mut opt = RmspropState::new(&shapes, T::lit(hyper.lr), T::lit(hyper.rho), T::lit(hyper.eps));
    let mut grads = MlpGrads::zeros_like(model);
    let mut ws = Workspace::new(model);
    let mut history = Vec::with_capacity(hyper.epochs);
    let mut xs = Vec::with_capacity(batch_size);
    let mut ys = Vec::with_capacity(batch_size);

    for epoch in 0..hyper.epochs {
        let mut order = rows.to_vec();
        order.shuffle(&mut derive_rng(hyper.seed, Stream::MlpEpoch, epoch as u128, 0));
        let mut total = 0.0;
        for batch in order.chunks(batch_size) {
            xs.clear();
            ys.clear();
            for &r in batch {
                xs.push(data.x_row(r));
                ys.push(data.y_row(r));
            }
            let loss = model.batch_into(&xs, &ys, &mut grads, &mut ws)?;
            total += loss.as_f64() * batch.len() as f64;
            opt.step(&mut model.params_mut(), &grads.slices());
        }
        history.push(total / rows.len() as f64);
    }
    Ok(history)
}
