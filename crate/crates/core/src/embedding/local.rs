use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::seq::SliceRandom;
use rand::Rng;

use super::kernels::logistic_term;
use super::noise::{noise_distribution, NoiseSampler};
use super::table::{ego_token, EmbeddingTable, TableKind};
use super::vocab::build_vocabulary;
use super::{SharedRows, TrainConfig};
use crate::error::{Error, Result};
use crate::rng::{derive_rng, Stream};
use crate::scalar::{axpy, dot, Scalar};
use crate::walks::EgoCorpus;

#[derive(Clone, Debug)]
pub struct LocalEmbedding<T> {
    /// `D`: one row per ego, tokens `ego:<id>`.
    pub egos: EmbeddingTable<T>,
    /// Alter input vectors learned alongside `D`.
    pub alters: EmbeddingTable<T>,
    pub output: EmbeddingTable<T>,
    pub epoch_losses: Vec<f64>,
}

/// Context slot `j` of position `t` in a segment of length `len`:
/// offsets `−c..−1` then `1..c`. `None` marks padding.
#[inline]
fn slot_position(len: usize, t: usize, c: usize, j: usize) -> Option<usize> {
    let off = if j < c { j as isize - c as isize } else { j as isize - c as isize + 1 };
    let p = t as isize + off;
    (p >= 0 && (p as usize) < len).then_some(p as usize)
}

struct PvdmParams<'a, T> {
    egos: SharedRows<'a, T>,
    alters: SharedRows<'a, T>,
    output: SharedRows<'a, T>,
}

struct Scratch<T> {
    h: Vec<T>,
    neu: Vec<T>,
    slots: Vec<Option<usize>>,
}

/// One PV-DM step predicting `target` from the ego vector and the context
/// slots in `scratch.slots`.
///
/// # Safety
/// The three matrices must be distinct buffers.
#[allow(clippy::too_many_arguments)]
unsafe fn pvdm_step<T: Scalar, R: Rng>(
    p: &PvdmParams<'_, T>,
    ego: usize,
    target: usize,
    d: usize,
    sampler: &NoiseSampler,
    negatives: usize,
    lr: T,
    s: &mut Scratch<T>,
    rng: &mut R,
) -> T {
    s.h[..d].copy_from_slice(p.egos.row_ref(ego));
    for (j, slot) in s.slots.iter().enumerate() {
        let dst = &mut s.h[(j + 1) * d..(j + 2) * d];
        match slot {
            Some(i) => dst.copy_from_slice(p.alters.row_ref(*i)),
            None => dst.fill(T::zero()),
        }
    }
    s.neu.fill(T::zero());
    let mut loss = T::zero();
    for j in 0..=negatives {
        let (tok, positive) = if j == 0 {
            (target, true)
        } else {
            let n = sampler.sample(rng);
            if n == target {
                continue;
            }
            (n, false)
        };
        let o = p.output.row(tok);
        let (l, g) = logistic_term(dot(&s.h, o), positive);
        loss += l;
        axpy(g, o, &mut s.neu);
        axpy(-lr * g, &s.h, o);
    }
    axpy(-lr, &s.neu[..d], p.egos.row(ego));
    for (j, slot) in s.slots.iter().enumerate() {
        if let Some(i) = slot {
            axpy(-lr, &s.neu[(j + 1) * d..(j + 2) * d], p.alters.row(*i));
        }
    }
    loss
}

/// Learns one vector per ego by sliding a symmetric window over its
/// ego-walk; the ego vector is concatenated with the `2c` context vectors to
/// predict the center token.
pub fn train_local<T: Scalar>(corpus: &EgoCorpus, cfg: &TrainConfig) -> Result<LocalEmbedding<T>> {
    cfg.validate()?;
    if corpus.walks.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut seen = HashSet::new();
    for w in &corpus.walks {
        if !seen.insert(w.ego) {
            return Err(Error::InvalidConfig(format!("ego {} has more than one ego-walk", w.ego)));
        }
    }
    let all_segments = || corpus.walks.iter().flat_map(|w| w.segments.iter().map(Vec::as_slice));
    let vocab = build_vocabulary(all_segments())?;
    let sampler = noise_distribution(&vocab, cfg.noise_power);
    let walks: Vec<Vec<Vec<u32>>> =
        corpus.walks.iter().map(|w| vocab.encode(w.segments.iter().map(Vec::as_slice))).collect();
    let (d, c) = (cfg.dim, cfg.context);
    let width = (2 * c + 1) * d;
    let scale = 1.0 / d as f64;

    let mut egos: Vec<T> = Vec::with_capacity(corpus.walks.len() * d);
    for w in &corpus.walks {
        let mut rng = derive_rng(cfg.seed, Stream::PvdmInit, w.ego.0, 0);
        egos.extend((0..d).map(|_| T::lit((rng.gen::<f64>() - 0.5) * scale)));
    }
    let mut init = derive_rng(cfg.seed, Stream::PvdmInit, u128::MAX, 1);
    let mut alters: Vec<T> =
        (0..vocab.len() * d).map(|_| T::lit((init.gen::<f64>() - 0.5) * scale)).collect();
    let mut output = vec![T::zero(); vocab.len() * width];

    let steps_per_epoch: usize = walks.iter().flatten().map(Vec::len).sum();
    let total = steps_per_epoch * cfg.epochs;
    let done = AtomicUsize::new(0);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..walks.len()).collect();
        order.shuffle(&mut derive_rng(cfg.seed, Stream::PvdmEpoch, epoch as u128, u64::MAX));
        let n_chunks = cfg.chunks().min(order.len());
        let chunk_len = order.len().div_ceil(n_chunks);
        let params = PvdmParams {
            egos: SharedRows::new(&mut egos, d),
            alters: SharedRows::new(&mut alters, d),
            output: SharedRows::new(&mut output, width),
        };

        let results = cfg.run_chunks(n_chunks, |ci| {
            let mut rng = derive_rng(cfg.seed, Stream::PvdmEpoch, epoch as u128, ci as u64);
            let mut scratch = Scratch {
                h: vec![T::zero(); width],
                neu: vec![T::zero(); width],
                slots: vec![None; 2 * c],
            };
            let mut loss = 0.0f64;
            let lo = (ci * chunk_len).min(order.len());
            let hi = ((ci + 1) * chunk_len).min(order.len());
            for &e in &order[lo..hi] {
                for seg in &walks[e] {
                    let lr = T::lit(cfg.lr_at(done.load(Ordering::Relaxed), total));
                    for t in 0..seg.len() {
                        for j in 0..2 * c {
                            scratch.slots[j] = slot_position(seg.len(), t, c, j).map(|p| seg[p] as usize);
                        }
                        // SAFETY: the three parameter buffers are distinct.
                        let l = unsafe {
                            pvdm_step(
                                &params,
                                e,
                                seg[t] as usize,
                                d,
                                &sampler,
                                cfg.negatives,
                                lr,
                                &mut scratch,
                                &mut rng,
                            )
                        };
                        loss += l.as_f64();
                    }
                    done.fetch_add(seg.len(), Ordering::Relaxed);
                }
            }
            loss
        });
        let mean = results.iter().sum::<f64>() / steps_per_epoch.max(1) as f64;
        log::debug!("pv-dm epoch {} mean loss {mean:.5}", epoch + 1);
        epoch_losses.push(mean);
    }

    let ego_tokens = corpus.walks.iter().map(|w| ego_token(w.ego)).collect();
    let node_tokens: Vec<String> = vocab.tokens().iter().map(|t| t.to_string()).collect();
    Ok(LocalEmbedding {
        egos: EmbeddingTable::new(TableKind::Ego, d, ego_tokens, egos)?,
        alters: EmbeddingTable::new(TableKind::NodeInput, d, node_tokens.clone(), alters)?,
        output: EmbeddingTable::new(TableKind::PvdmOutput, width, node_tokens, output)?,
        epoch_losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::pvdm_step_loss;
    use crate::graph::NodeId;
    use crate::scalar::cosine;
    use crate::walks::TaggedWalk;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn n(x: u64) -> NodeId {
        NodeId::from(x)
    }

    #[test]
    fn slots_cover_symmetric_window() {
        let got: Vec<_> = (0..4).map(|j| slot_position(10, 5, 2, j)).collect();
        assert_eq!(got, vec![Some(3), Some(4), Some(6), Some(7)]);
        let got: Vec<_> = (0..4).map(|j| slot_position(2, 0, 2, j)).collect();
        assert_eq!(got, vec![None, None, Some(1), None]);
    }

    #[test]
    fn in_place_step_equals_kernel_gradient_step() {
        let (d, c) = (3, 1);
        let width = (2 * c + 1) * d;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut r = |k: usize| -> Vec<f64> { (0..k).map(|_| rng.gen_range(-0.5..0.5)).collect() };
        let (mut egos, mut alters, mut output) = (r(d), r(2 * d), r(2 * width));
        let (e0, a0, o0) = (egos.clone(), alters.clone(), output.clone());
        let sampler = NoiseSampler::from_counts(&[0, 1], 1.0);
        let mut s = Scratch { h: vec![0.0; width], neu: vec![0.0; width], slots: vec![Some(1), None] };
        let lr = 0.05;
        let p = PvdmParams {
            egos: SharedRows::new(&mut egos, d),
            alters: SharedRows::new(&mut alters, d),
            output: SharedRows::new(&mut output, width),
        };
        let loss = unsafe { pvdm_step(&p, 0, 0, d, &sampler, 1, lr, &mut s, &mut ChaCha8Rng::seed_from_u64(0)) };
        drop(p);
        let g = pvdm_step_loss(&e0, &[Some(&a0[d..]), None], &o0[..width], &[&o0[width..]]).unwrap();
        assert!((loss - g.loss).abs() < 1e-14);
        for i in 0..d {
            assert!((egos[i] - (e0[i] - lr * g.ego[i])).abs() < 1e-14);
            assert!((alters[d + i] - (a0[d + i] - lr * g.contexts[0][i])).abs() < 1e-14);
            assert_eq!(alters[i], a0[i]);
        }
        for i in 0..width {
            assert!((output[i] - (o0[i] - lr * g.target[i])).abs() < 1e-14);
            assert!((output[width + i] - (o0[width + i] - lr * g.negatives[0][i])).abs() < 1e-14);
        }
    }

    fn clique_walk(ego: u64, members: &[u64], len: usize, seed: u64) -> TaggedWalk {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nodes = (0..len).map(|_| n(members[rng.gen_range(0..members.len())])).collect();
        TaggedWalk { ego: n(ego), segments: vec![nodes] }
    }

    #[test]
    fn one_row_per_ego_and_deterministic() {
        let corpus = EgoCorpus {
            walks: vec![clique_walk(0, &[0, 1, 2, 3], 60, 1), clique_walk(10, &[10, 11, 12], 40, 2)],
        };
        let cfg = TrainConfig { dim: 6, epochs: 4, ..Default::default() };
        let a: LocalEmbedding<f64> = train_local(&corpus, &cfg).unwrap();
        let b: LocalEmbedding<f64> = train_local(&corpus, &cfg).unwrap();
        assert_eq!(a.egos, b.egos);
        assert_eq!(a.egos.len(), 2);
        assert_eq!(a.egos.tokens(), &["ego:0".to_string(), "ego:10".to_string()]);
        assert_eq!(a.output.dim(), 5 * 6);
        assert!(a.epoch_losses.last() < a.epoch_losses.first());
    }

    #[test]
    fn single_node_walk_stays_finite() {
        let corpus = EgoCorpus { walks: vec![TaggedWalk { ego: n(4), segments: vec![vec![n(4)]] }] };
        let cfg = TrainConfig { dim: 4, epochs: 3, ..Default::default() };
        let e: LocalEmbedding<f32> = train_local(&corpus, &cfg).unwrap();
        assert!(e.egos.row(0).iter().all(|x| x.is_finite()));
    }

    #[test]
    fn identical_streams_give_closer_vectors_than_different_ones() {
        let a = clique_walk(0, &[1, 2, 3, 4, 5], 400, 7);
        let mut b = a.clone();
        b.ego = n(100);
        let other = clique_walk(200, &[201, 202, 203, 204, 205], 400, 8);
        let corpus = EgoCorpus { walks: vec![a, b, other] };
        let cfg = TrainConfig { dim: 16, epochs: 30, ..Default::default() };
        let e: LocalEmbedding<f64> = train_local(&corpus, &cfg).unwrap();
        let same = cosine(e.egos.row(0), e.egos.row(1));
        let diff = cosine(e.egos.row(0), e.egos.row(2));
        assert!(same > diff, "same={same} diff={diff}");
    }

    #[test]
    fn rejects_empty_and_duplicate() {
        let cfg = TrainConfig { dim: 4, ..Default::default() };
        assert!(matches!(train_local::<f32>(&EgoCorpus::default(), &cfg), Err(Error::EmptyCorpus)));
        let w = clique_walk(0, &[1, 2], 5, 0);
        let dup = EgoCorpus { walks: vec![w.clone(), w] };
        assert!(train_local::<f32>(&dup, &cfg).is_err());
    }
}
