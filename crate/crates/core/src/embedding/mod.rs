//! Global node vectors (skip-gram with negative sampling over the walk
//! corpus) and local ego vectors (PV-DM with concatenation over ego-walks).

mod global;
mod kernels;
mod local;
mod noise;
mod table;
mod vocab;

use std::marker::PhantomData;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use global::{context_window, train_global, window_pair_count, GlobalEmbedding};
pub use kernels::{pvdm_step_loss, skipgram_pair_loss, PairGrads, PvdmGrads};
pub use local::{train_local, LocalEmbedding};
pub use noise::{noise_distribution, NoiseSampler};
pub use table::{ego_token, EmbeddingTable, TableKind};
pub use vocab::{build_vocabulary, Vocabulary};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub dim: usize,
    /// Window half-width `c`.
    pub context: usize,
    /// Noise samples per positive.
    pub negatives: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    /// Floor of the linear decay; `None` means `initial_lr / 1e4`.
    pub min_lr: Option<f64>,
    pub noise_power: f64,
    pub seed: u64,
    /// Lock-free multi-worker updates. Not reproducible.
    pub parallel: bool,
    /// Worker count in parallel mode; 0 uses all cores.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 300,
            context: 2,
            negatives: 5,
            epochs: 5,
            initial_lr: 0.025,
            min_lr: None,
            noise_power: 0.75,
            seed: 0x5eed,
            parallel: false,
            threads: 0,
        }
    }
}

impl TrainConfig {
    pub fn min_lr(&self) -> f64 {
        self.min_lr.unwrap_or(self.initial_lr / 1e4)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_owned()));
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if self.context == 0 {
            return bad("context must be positive");
        }
        if self.negatives == 0 {
            return bad("negatives must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if !(self.initial_lr > self.min_lr() && self.min_lr() > 0.0) {
            return bad("learning rates must satisfy initial_lr > min_lr > 0");
        }
        if !(self.noise_power >= 0.0) {
            return bad("noise_power must be non-negative");
        }
        Ok(())
    }

    /// Linearly decayed rate after `done` of `total` scheduled updates.
    pub fn lr_at(&self, done: usize, total: usize) -> f64 {
        let frac = if total == 0 { 0.0 } else { (done as f64 / total as f64).min(1.0) };
        (self.initial_lr - (self.initial_lr - self.min_lr()) * frac).max(self.min_lr())
    }

    /// Number of work chunks one epoch is split into.
    fn chunks(&self) -> usize {
        if self.parallel {
            let t = if self.threads == 0 { rayon::current_num_threads() } else { self.threads };
            t.max(1) * 4
        } else {
            1
        }
    }

    fn run_chunks<R, F>(&self, n_chunks: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        use rayon::prelude::*;
        if !self.parallel {
            return (0..n_chunks).map(f).collect();
        }
        let work = || (0..n_chunks).into_par_iter().map(&f).collect();
        if self.threads == 0 {
            work()
        } else {
            match rayon::ThreadPoolBuilder::new().num_threads(self.threads).build() {
                Ok(pool) => pool.install(work),
                Err(_) => work(),
            }
        }
    }
}

/// Row view over a parameter matrix that several workers may update at once
/// without locking. Concurrent writers can lose or tear updates; the trainers
/// accept that in parallel mode and never alias rows within one worker.
pub(crate) struct SharedRows<'a, T> {
    ptr: *mut T,
    rows: usize,
    dim: usize,
    _marker: PhantomData<&'a mut [T]>,
}

unsafe impl<T: Send> Send for SharedRows<'_, T> {}
unsafe impl<T: Send + Sync> Sync for SharedRows<'_, T> {}

impl<'a, T> SharedRows<'a, T> {
    pub(crate) fn new(data: &'a mut [T], dim: usize) -> Self {
        assert!(dim > 0 && data.len().is_multiple_of(dim));
        SharedRows { ptr: data.as_mut_ptr(), rows: data.len() / dim, dim, _marker: PhantomData }
    }

    /// # Safety
    /// The caller must not hold another reference to row `i` from the same
    /// worker while the returned slice is alive.
    #[allow(clippy::mut_from_ref)]
    #[inline]
    pub(crate) unsafe fn row(&self, i: usize) -> &mut [T] {
        assert!(i < self.rows);
        std::slice::from_raw_parts_mut(self.ptr.add(i * self.dim), self.dim)
    }

    /// # Safety
    /// No mutable reference to row `i` may be alive in the same worker.
    #[inline]
    pub(crate) unsafe fn row_ref(&self, i: usize) -> &[T] {
        assert!(i < self.rows);
        std::slice::from_raw_parts(self.ptr.add(i * self.dim), self.dim)
    }
}
