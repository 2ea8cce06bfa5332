use std::sync::atomic::{AtomicUsize, Ordering};

use rand::seq::SliceRandom;
use rand::Rng;

use super::kernels::logistic_term;
use super::noise::{noise_distribution, NoiseSampler};
use super::table::{EmbeddingTable, TableKind};
use super::vocab::build_vocabulary;
use super::{SharedRows, TrainConfig};
use crate::error::Result;
use crate::rng::{derive_rng, Stream};
use crate::scalar::{axpy, dot, Scalar};
use crate::walks::Corpus;

/// Positions paired with `t` in a walk of length `len`: `[t−c, t+c] \ {t}`
/// clipped to the walk.
pub fn context_window(len: usize, t: usize, c: usize) -> impl Iterator<Item = usize> {
    let lo = t.saturating_sub(c);
    let hi = (t + c).min(len.saturating_sub(1));
    (lo..=hi).filter(move |&p| p != t)
}

/// Number of (center, context) pairs one pass over a walk produces.
pub fn window_pair_count(len: usize, c: usize) -> usize {
    (0..len).map(|t| context_window(len, t, c).count()).sum()
}

#[derive(Clone, Debug)]
pub struct GlobalEmbedding<T> {
    /// `W`, the node vectors `glo(v)`.
    pub input: EmbeddingTable<T>,
    /// `W′`.
    pub output: EmbeddingTable<T>,
    /// Mean pair loss per epoch.
    pub epoch_losses: Vec<f64>,
    pub pairs_per_epoch: usize,
}

/// One negative-sampling step on a (center, context) pair.
///
/// # Safety
/// `w_in` and `w_out` must be distinct matrices.
#[allow(clippy::too_many_arguments)]
#[inline]
unsafe fn sgns_step<T: Scalar, R: Rng>(
    w_in: &SharedRows<'_, T>,
    w_out: &SharedRows<'_, T>,
    center: usize,
    context: usize,
    sampler: &NoiseSampler,
    negatives: usize,
    lr: T,
    neu: &mut [T],
    rng: &mut R,
) -> T {
    let v = w_in.row(center);
    neu.fill(T::zero());
    let mut loss = T::zero();
    for j in 0..=negatives {
        let (target, positive) = if j == 0 {
            (context, true)
        } else {
            let n = sampler.sample(rng);
            if n == context {
                continue;
            }
            (n, false)
        };
        let o = w_out.row(target);
        let (l, g) = logistic_term(dot(v, o), positive);
        loss += l;
        axpy(g, o, neu);
        axpy(-lr * g, v, o);
    }
    axpy(-lr, neu, v);
    loss
}

/// Skip-gram with negative sampling over the global walk corpus.
pub fn train_global<T: Scalar>(corpus: &Corpus, cfg: &TrainConfig) -> Result<GlobalEmbedding<T>> {
    cfg.validate()?;
    let vocab = build_vocabulary(corpus.sequences())?;
    let seqs = vocab.encode(corpus.sequences());
    let sampler = noise_distribution(&vocab, cfg.noise_power);
    let (d, c) = (cfg.dim, cfg.context);

    let mut init = derive_rng(cfg.seed, Stream::SkipGramInit, 0, 0);
    let scale = 1.0 / d as f64;
    let mut w_in: Vec<T> =
        (0..vocab.len() * d).map(|_| T::lit((init.gen::<f64>() - 0.5) * scale)).collect();
    let mut w_out = vec![T::zero(); vocab.len() * d];

    let pairs_per_epoch: usize = seqs.iter().map(|s| window_pair_count(s.len(), c)).sum();
    let total = pairs_per_epoch * cfg.epochs;
    let done = AtomicUsize::new(0);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..seqs.len()).collect();
        order.shuffle(&mut derive_rng(cfg.seed, Stream::SkipGramEpoch, epoch as u128, u64::MAX));
        let n_chunks = cfg.chunks().min(order.len().max(1));
        let chunk_len = order.len().div_ceil(n_chunks).max(1);
        let shared_in = SharedRows::new(&mut w_in, d);
        let shared_out = SharedRows::new(&mut w_out, d);

        let results = cfg.run_chunks(n_chunks, |ci| {
            let mut rng = derive_rng(cfg.seed, Stream::SkipGramEpoch, epoch as u128, ci as u64);
            let mut neu = vec![T::zero(); d];
            let mut loss = 0.0f64;
            let lo = (ci * chunk_len).min(order.len());
            let hi = ((ci + 1) * chunk_len).min(order.len());
            for &s in &order[lo..hi] {
                let seq = &seqs[s];
                let lr = T::lit(cfg.lr_at(done.load(Ordering::Relaxed), total));
                for t in 0..seq.len() {
                    for p in context_window(seq.len(), t, c) {
                        // SAFETY: input and output are separate buffers.
                        let l = unsafe {
                            sgns_step(
                                &shared_in,
                                &shared_out,
                                seq[t] as usize,
                                seq[p] as usize,
                                &sampler,
                                cfg.negatives,
                                lr,
                                &mut neu,
                                &mut rng,
                            )
                        };
                        loss += l.as_f64();
                    }
                }
                done.fetch_add(window_pair_count(seq.len(), c), Ordering::Relaxed);
            }
            loss
        });
        let loss: f64 = results.iter().sum();
        let mean = loss / pairs_per_epoch.max(1) as f64;
        log::debug!("skip-gram epoch {} mean loss {mean:.5}", epoch + 1);
        epoch_losses.push(mean);
    }

    let tokens: Vec<String> = vocab.tokens().iter().map(|t| t.to_string()).collect();
    Ok(GlobalEmbedding {
        input: EmbeddingTable::new(TableKind::NodeInput, d, tokens.clone(), w_in)?,
        output: EmbeddingTable::new(TableKind::NodeOutput, d, tokens, w_out)?,
        epoch_losses,
        pairs_per_epoch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::skipgram_pair_loss;
    use crate::graph::NodeId;
    use crate::walks::Walk;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn window_pairs_match_enumeration() {
        for c in 1..4 {
            for len in 0..12 {
                let mut brute = 0;
                for t in 0..len as i64 {
                    for p in 0..len as i64 {
                        if p != t && (p - t).abs() <= c as i64 {
                            brute += 1;
                        }
                    }
                }
                assert_eq!(window_pair_count(len, c), brute, "len={len} c={c}");
            }
        }
        assert_eq!(context_window(10, 0, 2).collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn in_place_step_equals_kernel_gradient_step() {
        let d = 5;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut w_in: Vec<f64> = (0..2 * d).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let mut w_out: Vec<f64> = (0..2 * d).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let (before_in, before_out) = (w_in.clone(), w_out.clone());
        // Single-token noise distribution means every negative draw is token 1.
        let sampler = NoiseSampler::from_counts(&[0, 1], 1.0);
        let lr = 0.1;
        let mut neu = vec![0.0; d];
        let loss = unsafe {
            sgns_step(
                &SharedRows::new(&mut w_in, d),
                &SharedRows::new(&mut w_out, d),
                0,
                0,
                &sampler,
                1,
                lr,
                &mut neu,
                &mut rng,
            )
        };
        let g = skipgram_pair_loss(&before_in[..d], &before_out[..d], &[&before_out[d..]]).unwrap();
        assert!((loss - g.loss).abs() < 1e-14);
        for i in 0..d {
            assert!((w_in[i] - (before_in[i] - lr * g.center[i])).abs() < 1e-14);
            assert!((w_out[i] - (before_out[i] - lr * g.context[i])).abs() < 1e-14);
            assert!((w_out[d + i] - (before_out[d + i] - lr * g.negatives[0][i])).abs() < 1e-14);
        }
    }

    fn ring_corpus() -> Corpus {
        let walks = (0..40u64)
            .map(|s| Walk { nodes: (0..12).map(|i| NodeId::from((s + i) % 8)).collect() })
            .collect();
        Corpus { walks }
    }

    #[test]
    fn deterministic_and_shaped() {
        let cfg = TrainConfig { dim: 8, epochs: 3, ..Default::default() };
        let a: GlobalEmbedding<f64> = train_global(&ring_corpus(), &cfg).unwrap();
        let b: GlobalEmbedding<f64> = train_global(&ring_corpus(), &cfg).unwrap();
        assert_eq!(a.input, b.input);
        assert_eq!(a.input.len(), 8);
        assert_eq!(a.input.dim(), 8);
        assert_eq!(a.pairs_per_epoch, 40 * window_pair_count(12, 2));
        assert!(a.input.as_slice().iter().all(|x| x.is_finite()));
    }

    #[test]
    fn epoch_loss_decreases() {
        let cfg = TrainConfig { dim: 16, epochs: 6, initial_lr: 0.05, ..Default::default() };
        let e: GlobalEmbedding<f32> = train_global(&ring_corpus(), &cfg).unwrap();
        let l = &e.epoch_losses;
        assert!(l.last().unwrap() < l.first().unwrap(), "{l:?}");
        for w in l.windows(2) {
            assert!(w[1] <= w[0] * 1.05, "{l:?}");
        }
    }

    #[test]
    fn parallel_mode_trains() {
        let cfg = TrainConfig { dim: 8, epochs: 2, parallel: true, threads: 2, ..Default::default() };
        let e: GlobalEmbedding<f32> = train_global(&ring_corpus(), &cfg).unwrap();
        assert!(e.input.as_slice().iter().all(|x| x.is_finite()));
        assert!(e.epoch_losses[1] < e.epoch_losses[0]);
    }

    #[test]
    fn empty_corpus_fails() {
        let r: Result<GlobalEmbedding<f32>> = train_global(&Corpus::default(), &TrainConfig::default());
        assert!(matches!(r, Err(crate::Error::EmptyCorpus)));
    }
}
