use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_rng, Stream};
use crate::scalar::{axpy, log_sigmoid, sigmoid, Scalar};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputMode {
    /// Softmax over circles with cross-entropy against the normalized
    /// multi-hot target.
    #[default]
    Softmax,
    /// Independent logistic outputs with binary cross-entropy.
    Sigmoid,
}

impl OutputMode {
    pub fn name(self) -> &'static str {
        match self {
            OutputMode::Softmax => "softmax",
            OutputMode::Sigmoid => "sigmoid",
        }
    }
}

impl fmt::Display for OutputMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OutputMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "softmax" => Ok(OutputMode::Softmax),
            "sigmoid" => Ok(OutputMode::Sigmoid),
            _ => Err(Error::InvalidConfig(format!("unknown output mode `{s}`"))),
        }
    }
}

/// One-hidden-layer perceptron. Weight matrices are row-major with the
/// input side as rows: `w1` is `input_dim × hidden`, `w2` is
/// `hidden × outputs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp<T> {
    pub input_dim: usize,
    pub hidden: usize,
    pub outputs: usize,
    pub mode: OutputMode,
    pub w1: Vec<T>,
    pub b1: Vec<T>,
    pub w2: Vec<T>,
    pub b2: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpGrads<T> {
    pub w1: Vec<T>,
    pub b1: Vec<T>,
    pub w2: Vec<T>,
    pub b2: Vec<T>,
}

impl<T: Scalar> MlpGrads<T> {
    pub fn zeros_like(m: &Mlp<T>) -> Self {
        MlpGrads {
            w1: vec![T::zero(); m.w1.len()],
            b1: vec![T::zero(); m.b1.len()],
            w2: vec![T::zero(); m.w2.len()],
            b2: vec![T::zero(); m.b2.len()],
        }
    }

    fn clear(&mut self) {
        for v in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            v.fill(T::zero());
        }
    }

    fn scale(&mut self, s: T) {
        for v in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            v.iter_mut().for_each(|x| *x *= s);
        }
    }

    pub fn slices(&self) -> [&[T]; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Forward<T> {
    pub hidden: Vec<T>,
    pub logits: Vec<T>,
    pub scores: Vec<T>,
}

/// Numerically stable softmax in place.
pub fn softmax<T: Scalar>(z: &mut [T]) {
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// Reusable buffers for per-instance backprop.
pub(crate) struct Workspace<T> {
    z1: Vec<T>,
    a1: Vec<T>,
    z2: Vec<T>,
    dz2: Vec<T>,
    dz1: Vec<T>,
}

impl<T: Scalar> Workspace<T> {
    pub(crate) fn new(m: &Mlp<T>) -> Self {
        Workspace {
            z1: vec![T::zero(); m.hidden],
            a1: vec![T::zero(); m.hidden],
            z2: vec![T::zero(); m.outputs],
            dz2: vec![T::zero(); m.outputs],
            dz1: vec![T::zero(); m.hidden],
        }
    }
}

impl<T: Scalar> Mlp<T> {
    /// Glorot-uniform weights, zero biases.
    pub fn new(input_dim: usize, hidden: usize, outputs: usize, mode: OutputMode, seed: u64) -> Self {
        let mut rng = derive_rng(seed, Stream::MlpInit, 0, 0);
        let mut init = |fan_in: usize, fan_out: usize| -> Vec<T> {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..fan_in * fan_out).map(|_| T::lit(rng.gen_range(-limit..=limit))).collect()
        };
        Mlp {
            input_dim,
            hidden,
            outputs,
            mode,
            w1: init(input_dim, hidden),
            b1: vec![T::zero(); hidden],
            w2: init(hidden, outputs),
            b2: vec![T::zero(); outputs],
        }
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    pub fn params_mut(&mut self) -> [&mut [T]; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        if x.len() == self.input_dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { what: "classifier input", expected: self.input_dim, got: x.len() })
        }
    }

    fn forward_into(&self, x: &[T], ws: &mut Workspace<T>) {
        ws.z1.copy_from_slice(&self.b1);
        for (i, &xi) in x.iter().enumerate() {
            if xi != T::zero() {
                axpy(xi, &self.w1[i * self.hidden..(i + 1) * self.hidden], &mut ws.z1);
            }
        }
        for (a, &z) in ws.a1.iter_mut().zip(&ws.z1) {
            *a = z.max(T::zero());
        }
        ws.z2.copy_from_slice(&self.b2);
        for (h, &a) in ws.a1.iter().enumerate() {
            if a != T::zero() {
                axpy(a, &self.w2[h * self.outputs..(h + 1) * self.outputs], &mut ws.z2);
            }
        }
    }

    /// Hidden activations and output scores for one input.
    pub fn forward(&self, x: &[T]) -> Result<Forward<T>> {
        self.check_input(x)?;
        let mut ws = Workspace::new(self);
        self.forward_into(x, &mut ws);
        let mut scores = ws.z2.clone();
        match self.mode {
            OutputMode::Softmax => softmax(&mut scores),
            OutputMode::Sigmoid => scores.iter_mut().for_each(|s| *s = sigmoid(*s)),
        }
        Ok(Forward { hidden: ws.a1, logits: ws.z2, scores })
    }

    /// Adds the gradient of one instance's loss to `g` and returns the loss.
    pub(crate) fn accumulate(
        &self,
        x: &[T],
        y: &[u8],
        row: usize,
        g: &mut MlpGrads<T>,
        ws: &mut Workspace<T>,
    ) -> Result<T> {
        self.forward_into(x, ws);
        let k = self.outputs;
        let mut loss = T::zero();
        match self.mode {
            OutputMode::Softmax => {
                let positives = y.iter().filter(|&&b| b == 1).count();
                if positives == 0 {
                    return Err(Error::InvalidLabelRow(row));
                }
                let target = T::one() / T::lit(positives as f64);
                let max = ws.z2.iter().copied().fold(T::neg_infinity(), T::max);
                let lse = max + ws.z2.iter().map(|&z| (z - max).exp()).sum::<T>().ln();
                for j in 0..k {
                    let yj = if y[j] == 1 { target } else { T::zero() };
                    let logp = ws.z2[j] - lse;
                    loss -= yj * logp;
                    ws.dz2[j] = logp.exp() - yj;
                }
            }
            OutputMode::Sigmoid => {
                let inv_k = T::one() / T::lit(k as f64);
                for j in 0..k {
                    let z = ws.z2[j];
                    let yj = if y[j] == 1 { T::one() } else { T::zero() };
                    loss -= (yj * log_sigmoid(z) + (T::one() - yj) * log_sigmoid(-z)) * inv_k;
                    ws.dz2[j] = (sigmoid(z) - yj) * inv_k;
                }
            }
        }
        axpy(T::one(), &ws.dz2, &mut g.b2);
        for h in 0..self.hidden {
            let a = ws.a1[h];
            let row_w2 = &self.w2[h * k..(h + 1) * k];
            if a != T::zero() {
                axpy(a, &ws.dz2, &mut g.w2[h * k..(h + 1) * k]);
            }
            ws.dz1[h] = if ws.z1[h] > T::zero() { crate::scalar::dot(row_w2, &ws.dz2) } else { T::zero() };
        }
        axpy(T::one(), &ws.dz1, &mut g.b1);
        for (i, &xi) in x.iter().enumerate() {
            if xi != T::zero() {
                axpy(xi, &ws.dz1, &mut g.w1[i * self.hidden..(i + 1) * self.hidden]);
            }
        }
        Ok(loss)
    }

    /// Mean loss over the batch and its exact gradient.
    pub fn loss_and_grads(&self, xs: &[&[T]], ys: &[&[u8]]) -> Result<(T, MlpGrads<T>)> {
        let mut g = MlpGrads::zeros_like(self);
        let loss = self.batch_into(xs, ys, &mut g, &mut Workspace::new(self))?;
        Ok((loss, g))
    }

    pub(crate) fn batch_into(
        &self,
        xs: &[&[T]],
        ys: &[&[u8]],
        g: &mut MlpGrads<T>,
        ws: &mut Workspace<T>,
    ) -> Result<T> {
        if xs.len() != ys.len() || xs.is_empty() {
            return Err(Error::DimensionMismatch { what: "batch rows", expected: xs.len(), got: ys.len() });
        }
        g.clear();
        let mut loss = T::zero();
        for (r, (x, y)) in xs.iter().zip(ys).enumerate() {
            self.check_input(x)?;
            if y.len() != self.outputs {
                return Err(Error::DimensionMismatch { what: "label row", expected: self.outputs, got: y.len() });
            }
            loss += self.accumulate(x, y, r, g, ws)?;
        }
        let inv = T::one() / T::lit(xs.len() as f64);
        g.scale(inv);
        Ok(loss * inv)
    }
}

/// Turns output scores into a label set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecisionRule {
    pub threshold: f64,
}

impl DecisionRule {
    /// `1/|Y|` for softmax outputs, 0.5 for sigmoid outputs.
    pub fn default_for(mode: OutputMode, outputs: usize) -> Self {
        let threshold = match mode {
            OutputMode::Softmax => 1.0 / outputs.max(1) as f64,
            OutputMode::Sigmoid => 0.5,
        };
        DecisionRule { threshold }
    }

    /// `{j : s_j ≥ τ}`, or the argmax alone when that set is empty.
    pub fn apply<T: Scalar>(&self, scores: &[T]) -> Vec<usize> {
        let tau = T::lit(self.threshold);
        let picked: Vec<usize> = (0..scores.len()).filter(|&j| scores[j] >= tau).collect();
        if !picked.is_empty() || scores.is_empty() {
            return picked;
        }
        let mut best = 0;
        for j in 1..scores.len() {
            if scores[j] > scores[best] {
                best = j;
            }
        }
        vec![best]
    }
}

pub fn predict<T: Scalar>(m: &Mlp<T>, x: &[T], rule: DecisionRule) -> Result<Vec<usize>> {
    Ok(rule.apply(&m.forward(x)?.scores))
}
