//! Scalar abstraction shared by the numeric kernels.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point storage type for embedding components: `f32` or `f64`.
///
/// Accumulation is always carried out in `f64` regardless of the storage type.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Widen to the accumulation type.
    fn widen(self) -> f64 {
        // Float -> f64 never fails for f32/f64.
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Narrow from the accumulation type, rounding to nearest.
    fn narrow(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(Self::nan)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Dot product accumulated in `f64`.
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.widen() * y.widen()).sum()
}

/// Euclidean norm accumulated in `f64`.
pub fn l2_norm<T: Scalar>(a: &[T]) -> f64 {
    a.iter().map(|x| x.widen() * x.widen()).sum::<f64>().sqrt()
}

/// Numerically stable softmax (max-logit subtraction).
pub fn softmax<F: Float>(logits: &[F]) -> Vec<F> {
    if logits.is_empty() {
        return Vec::new();
    }
    let max = logits.iter().copied().fold(F::neg_infinity(), F::max);
    let exps: Vec<F> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum = exps.iter().copied().fold(F::zero(), |acc, e| acc + e);
    exps.into_iter().map(|e| e / sum).collect()
}
