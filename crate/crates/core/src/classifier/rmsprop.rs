use crate::scalar::Scalar;

/// Applies one RMSprop step to `params` in place:
///
/// ```text
/// acc ← ρ·acc + (1−ρ)·g²
/// p   ← p − lr·g / (√acc + ε)
/// ```
pub fn rmsprop_update<T: Scalar>(acc: &mut [T], params: &mut [T], grads: &[T], lr: T, rho: T, eps: T) {
    debug_assert!(acc.len() == params.len() && params.len() == grads.len());
    let keep = T::one() - rho;
    for ((a, p), &g) in acc.iter_mut().zip(params.iter_mut()).zip(grads) {
        *a = rho * *a + keep * g * g;
        *p -= lr * g / (a.sqrt() + eps);
    }
}

/// Per-parameter running averages of squared gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct RmspropState<T> {
    pub lr: T,
    pub rho: T,
    pub eps: T,
    pub accumulators: Vec<Vec<T>>,
}

impl<T: Scalar> RmspropState<T> {
    pub fn new(shapes: &[usize], lr: T, rho: T, eps: T) -> Self {
        RmspropState { lr, rho, eps, accumulators: shapes.iter().map(|&n| vec![T::zero(); n]).collect() }
    }

    pub fn step(&mut self, params: &mut [&mut [T]], grads: &[&[T]]) {
        assert_eq!(params.len(), self.accumulators.len());
        for ((acc, p), g) in self.accumulators.iter_mut().zip(params.iter_mut()).zip(grads) {
            rmsprop_update(acc, p, g, self.lr, self.rho, self.eps);
        }
    }
}
