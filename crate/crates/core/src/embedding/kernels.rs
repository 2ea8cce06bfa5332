//! Negative-sampling loss kernels with exact analytic gradients.
//!
//! Both objectives score one positive output vector and `k` noise output
//! vectors against a hidden representation `h`:
//!
//! ```text
//! loss = −log σ(o₊·h) − Σ log σ(−oₙ·h)
//! ∂loss/∂h  = Σ_j g_j o_j          g₊ = σ(o₊·h) − 1,  gₙ = σ(oₙ·h)
//! ∂loss/∂o_j = g_j h
//! ```
//!
//! For skip-gram `h` is the center vector; for PV-DM it is the
//! concatenation of the ego vector with the `2c` context vectors.

use crate::error::{Error, Result};
use crate::scalar::{dot, log_sigmoid, sigmoid, Scalar};

/// Loss contribution and gradient coefficient of one scored output.
/// `positive` selects the label.
#[inline]
pub(crate) fn logistic_term<T: Scalar>(score: T, positive: bool) -> (T, T) {
    if positive {
        (-log_sigmoid(score), sigmoid(score) - T::one())
    } else {
        (-log_sigmoid(-score), sigmoid(score))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairGrads<T> {
    pub loss: T,
    pub center: Vec<T>,
    pub context: Vec<T>,
    pub negatives: Vec<Vec<T>>,
}

fn check_finite<T: Scalar>(xs: &[T]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteInput)
    }
}

fn check_len<T>(what: &'static str, xs: &[T], expected: usize) -> Result<()> {
    if xs.len() == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { what, expected, got: xs.len() })
    }
}

/// Skip-gram negative-sampling loss for one (center, context) pair.
pub fn skipgram_pair_loss<T: Scalar>(
    center: &[T],
    context_out: &[T],
    negatives_out: &[&[T]],
) -> Result<PairGrads<T>> {
    let d = center.len();
    check_len("context vector", context_out, d)?;
    check_finite(center)?;
    check_finite(context_out)?;
    for n in negatives_out {
        check_len("negative vector", n, d)?;
        check_finite(n)?;
    }
    let mut grads = PairGrads {
        loss: T::zero(),
        center: vec![T::zero(); d],
        context: vec![T::zero(); d],
        negatives: Vec::with_capacity(negatives_out.len()),
    };
    let outputs = std::iter::once(context_out).chain(negatives_out.iter().copied());
    for (j, out) in outputs.enumerate() {
        let (l, g) = logistic_term(dot(center, out), j == 0);
        grads.loss += l;
        for (c, &o) in grads.center.iter_mut().zip(out) {
            *c += g * o;
        }
        let go: Vec<T> = center.iter().map(|&x| g * x).collect();
        if j == 0 {
            grads.context = go;
        } else {
            grads.negatives.push(go);
        }
    }
    Ok(grads)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PvdmGrads<T> {
    pub loss: T,
    pub ego: Vec<T>,
    /// One gradient per context slot; all zeros for padded slots.
    pub contexts: Vec<Vec<T>>,
    pub target: Vec<T>,
    pub negatives: Vec<Vec<T>>,
}

/// Builds `h = ego ⊕ ctx₁ ⊕ … ⊕ ctx₂c`; padded slots (`None`) contribute
/// the zero vector.
pub(crate) fn concat_hidden<T: Scalar>(ego: &[T], contexts: &[Option<&[T]>], h: &mut [T]) {
    let d = ego.len();
    h[..d].copy_from_slice(ego);
    for (j, c) in contexts.iter().enumerate() {
        let slot = &mut h[(j + 1) * d..(j + 2) * d];
        match c {
            Some(v) => slot.copy_from_slice(v),
            None => slot.fill(T::zero()),
        }
    }
}

/// PV-DM (concatenation) negative-sampling loss for one window.
pub fn pvdm_step_loss<T: Scalar>(
    ego: &[T],
    contexts: &[Option<&[T]>],
    target_out: &[T],
    negatives_out: &[&[T]],
) -> Result<PvdmGrads<T>> {
    let d = ego.len();
    let width = (contexts.len() + 1) * d;
    check_finite(ego)?;
    for c in contexts.iter().flatten() {
        check_len("context vector", c, d)?;
        check_finite(c)?;
    }
    check_len("target output vector", target_out, width)?;
    check_finite(target_out)?;
    for n in negatives_out {
        check_len("negative output vector", n, width)?;
        check_finite(n)?;
    }

    let mut h = vec![T::zero(); width];
    concat_hidden(ego, contexts, &mut h);
    let mut dh = vec![T::zero(); width];
    let mut loss = T::zero();
    let mut target = Vec::new();
    let mut negatives = Vec::with_capacity(negatives_out.len());
    let outputs = std::iter::once(target_out).chain(negatives_out.iter().copied());
    for (j, out) in outputs.enumerate() {
        let (l, g) = logistic_term(dot(&h, out), j == 0);
        loss += l;
        for (a, &o) in dh.iter_mut().zip(out) {
            *a += g * o;
        }
        let go: Vec<T> = h.iter().map(|&x| g * x).collect();
        if j == 0 {
            target = go;
        } else {
            negatives.push(go);
        }
    }
    let ctx_grads = contexts
        .iter()
        .enumerate()
        .map(|(j, c)| match c {
            Some(_) => dh[(j + 1) * d..(j + 2) * d].to_vec(),
            None => vec![T::zero(); d],
        })
        .collect();
    Ok(PvdmGrads { loss, ego: dh[..d].to_vec(), contexts: ctx_grads, target, negatives })
}
